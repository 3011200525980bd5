//! Dataset files: a JSON array or JSON-lines of question records.
//!
//! Common keys are `id`, `question` and `docs` (`[{id,title,text,score}]`).
//! Gold annotations depend on the dataset:
//!
//! * ASQA: `qa_pairs: [{short_answers: [..]}]`, `answers: [..]`
//! * QAMPARI: `answers: [[alias, ..], ..]`
//! * ELI5: `claims: [c1, c2, c3]`, `answers: [..]`

use crate::model::{
    AsqaGold, ClaimSet, DatasetKind, Eli5Gold, GoldAnnotation, Passage, QampariGold,
    QueryInstance,
};
use serde_json::{json, Map, Value};
use std::collections::HashSet;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {message}")]
    Syntax { path: String, message: String },
    #[error("record {index}: {message}")]
    Record { index: usize, message: String },
}

impl DataError {
    fn record(index: usize, message: impl Into<String>) -> Self {
        DataError::Record {
            index,
            message: message.into(),
        }
    }
}

/// Reads a file holding either one JSON array or one JSON object per line.
pub fn read_records(path: &Path) -> Result<Vec<Value>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_records(&text).map_err(|message| DataError::Syntax {
        path: path.display().to_string(),
        message,
    })
}

pub(crate) fn parse_records(text: &str) -> Result<Vec<Value>, String> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('[') {
        return match serde_json::from_str::<Value>(trimmed).map_err(|e| e.to_string())? {
            Value::Array(items) => Ok(items),
            _ => Err("expected a JSON array".into()),
        };
    }
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| format!("line {}: {e}", n + 1)))
        .collect()
}

pub fn load_dataset(path: &Path, kind: DatasetKind) -> Result<Vec<QueryInstance>, DataError> {
    let records = read_records(path)?;
    parse_dataset(&records, kind, true)
}

/// Like [`load_dataset`] but tolerates records without `docs`, as in
/// question files that have not been through retrieval yet.
pub fn load_questions(path: &Path, kind: DatasetKind) -> Result<Vec<QueryInstance>, DataError> {
    let records = read_records(path)?;
    parse_dataset(&records, kind, false)
}

pub fn parse_dataset(
    records: &[Value],
    kind: DatasetKind,
    require_docs: bool,
) -> Result<Vec<QueryInstance>, DataError> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (index, record) in records.iter().enumerate() {
        let instance = parse_record(index, record, kind, require_docs)?;
        if !seen.insert(instance.id.clone()) {
            return Err(DataError::record(index, format!("duplicate id `{}`", instance.id)));
        }
        out.push(instance);
    }
    Ok(out)
}

fn parse_record(
    index: usize,
    record: &Value,
    kind: DatasetKind,
    require_docs: bool,
) -> Result<QueryInstance, DataError> {
    let obj = record
        .as_object()
        .ok_or_else(|| DataError::record(index, "expected a JSON object"))?;
    let id = match obj.get("id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(_) => return Err(DataError::record(index, "field `id` must be a non-empty string")),
        None => return Err(DataError::record(index, "missing field `id`")),
    };
    let question = non_empty_str(index, obj, "question")?;
    let retrieved = match obj.get("docs") {
        Some(v) => parse_docs(index, v)?,
        None if require_docs => return Err(DataError::record(index, "missing field `docs`")),
        None => Vec::new(),
    };
    let gold = match kind {
        DatasetKind::Asqa => {
            let pairs = array(index, obj, "qa_pairs")?;
            let mut qa_pairs = Vec::with_capacity(pairs.len());
            for (j, pair) in pairs.iter().enumerate() {
                let field = format!("qa_pairs[{j}].short_answers");
                let aliases = pair
                    .get("short_answers")
                    .ok_or_else(|| DataError::record(index, format!("missing field `{field}`")))?;
                qa_pairs.push(alias_set(index, &field, aliases)?);
            }
            GoldAnnotation::Asqa(AsqaGold {
                qa_pairs,
                gold_answers: string_list(index, obj, "answers")?,
            })
        }
        DatasetKind::Qampari => {
            let sets = array(index, obj, "answers")?;
            let answer_sets = sets
                .iter()
                .enumerate()
                .map(|(j, v)| alias_set(index, &format!("answers[{j}]"), v))
                .collect::<Result<_, _>>()?;
            GoldAnnotation::Qampari(QampariGold { answer_sets })
        }
        DatasetKind::Eli5 => {
            let claims = string_list(index, obj, "claims")?;
            let claims = ClaimSet::new(claims).map_err(|m| DataError::record(index, m))?;
            GoldAnnotation::Eli5(Eli5Gold {
                claims,
                gold_answers: string_list(index, obj, "answers")?,
            })
        }
    };
    Ok(QueryInstance {
        id,
        question,
        gold,
        retrieved,
    })
}

fn non_empty_str(index: usize, obj: &Map<String, Value>, key: &str) -> Result<String, DataError> {
    match obj.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(DataError::record(index, format!("field `{key}` is empty"))),
        Some(_) => Err(DataError::record(index, format!("field `{key}` must be a string"))),
        None => Err(DataError::record(index, format!("missing field `{key}`"))),
    }
}

fn array<'a>(
    index: usize,
    obj: &'a Map<String, Value>,
    key: &str,
) -> Result<&'a Vec<Value>, DataError> {
    match obj.get(key) {
        Some(Value::Array(a)) => Ok(a),
        Some(_) => Err(DataError::record(index, format!("field `{key}` must be an array"))),
        None => Err(DataError::record(index, format!("missing field `{key}`"))),
    }
}

fn string_list(index: usize, obj: &Map<String, Value>, key: &str) -> Result<Vec<String>, DataError> {
    array(index, obj, key)?
        .iter()
        .map(|v| {
            v.as_str()
                .map(str::to_owned)
                .ok_or_else(|| DataError::record(index, format!("field `{key}` must hold strings")))
        })
        .collect()
}

fn alias_set(index: usize, field: &str, v: &Value) -> Result<Vec<String>, DataError> {
    let items = v
        .as_array()
        .ok_or_else(|| DataError::record(index, format!("field `{field}` must be an array")))?;
    let aliases: Vec<String> = items
        .iter()
        .map(|a| {
            a.as_str()
                .map(str::to_owned)
                .ok_or_else(|| DataError::record(index, format!("field `{field}` must hold strings")))
        })
        .collect::<Result<_, _>>()?;
    if aliases.is_empty() {
        return Err(DataError::record(index, format!("alias set `{field}` is empty")));
    }
    Ok(aliases)
}

fn parse_docs(index: usize, v: &Value) -> Result<Vec<Passage>, DataError> {
    let items = v
        .as_array()
        .ok_or_else(|| DataError::record(index, "field `docs` must be an array"))?;
    let mut ids = HashSet::new();
    let mut docs = Vec::with_capacity(items.len());
    for (j, item) in items.iter().enumerate() {
        let doc = parse_passage(item).map_err(|m| DataError::record(index, format!("docs[{j}]: {m}")))?;
        if !ids.insert(doc.id.clone()) {
            return Err(DataError::record(index, format!("docs[{j}]: duplicate id `{}`", doc.id)));
        }
        docs.push(doc);
    }
    let scores: Option<Vec<f64>> = docs.iter().map(|d| d.score).collect();
    if let Some(scores) = scores {
        if scores.windows(2).any(|w| w[1] > w[0]) {
            return Err(DataError::record(index, "docs are not sorted by descending score"));
        }
    }
    Ok(docs)
}

/// Parses one `{id,title,text,score}` passage object.
pub fn parse_passage(item: &Value) -> Result<Passage, String> {
    let obj = item.as_object().ok_or("expected an object")?;
    let field = |key: &str| -> Result<String, String> {
        match obj.get(key) {
            Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
            Some(Value::String(_)) => Err(format!("field `{key}` is empty")),
            Some(Value::Number(n)) if key == "id" => Ok(n.to_string()),
            Some(_) => Err(format!("field `{key}` must be a string")),
            None => Err(format!("missing field `{key}`")),
        }
    };
    let score = match obj.get("score") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => n.as_f64(),
        Some(Value::String(s)) => Some(s.parse::<f64>().map_err(|_| "field `score` is not a number")?),
        Some(_) => return Err("field `score` is not a number".into()),
    };
    Ok(Passage {
        id: field("id")?,
        title: field("title")?,
        text: field("text")?,
        score,
    })
}

/// Serializes instances back into the dataset record schema.
pub fn to_records(instances: &[QueryInstance]) -> Vec<Value> {
    instances.iter().map(to_record).collect()
}

pub fn to_record(instance: &QueryInstance) -> Value {
    let mut obj = Map::new();
    obj.insert("id".into(), json!(instance.id));
    obj.insert("question".into(), json!(instance.question));
    match &instance.gold {
        GoldAnnotation::Asqa(g) => {
            let pairs: Vec<Value> = g
                .qa_pairs
                .iter()
                .map(|a| json!({ "short_answers": a }))
                .collect();
            obj.insert("qa_pairs".into(), Value::Array(pairs));
            obj.insert("answers".into(), json!(g.gold_answers));
        }
        GoldAnnotation::Qampari(g) => {
            obj.insert("answers".into(), json!(g.answer_sets));
        }
        GoldAnnotation::Eli5(g) => {
            obj.insert("claims".into(), json!(g.claims.claims()));
            obj.insert("answers".into(), json!(g.gold_answers));
        }
    }
    obj.insert("docs".into(), json!(instance.retrieved));
    Value::Object(obj)
}

pub fn save_dataset(path: &Path, instances: &[QueryInstance]) -> Result<(), DataError> {
    write_json(path, &Value::Array(to_records(instances)))
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), DataError> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}
