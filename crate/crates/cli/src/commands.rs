use crate::backends;
use crate::error::CliError;
use crate::{ClaimsArgs, EvalArgs, GenerateArgs, RetrieveArgs};
use citeval::dataset::{load_dataset, load_questions, read_records, write_json};
use citeval::eval::{aggregate, evaluate_run, generate_claims, render_table, EvalReport};
use citeval::generation::{generate_run, Backends, Demonstration, GenerationRun};
use citeval::model::{RunConfig, Strategy};
use citeval::retrieval::{Corpus, Retriever};
use serde_json::Value;
use std::path::Path;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("parsing {}: {e}", path.display())))
}

fn write<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let value = serde_json::to_value(value).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(write_json(path, &value)?)
}

pub fn retrieve(a: &RetrieveArgs) -> Result<(), CliError> {
    let corpus = Corpus::load(&a.corpus)?;
    let retriever = match a.retriever.as_str() {
        "bm25" => Retriever::bm25(&corpus),
        "dense" => Retriever::dense(&corpus, backends::embedder("remote")?)?,
        "hash" => Retriever::dense(&corpus, backends::embedder("hash")?)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown --retriever `{other}`; use bm25, dense or hash"
            )))
        }
    };
    let mut records = read_records(&a.input)?;
    for (i, record) in records.iter_mut().enumerate() {
        let obj = record
            .as_object_mut()
            .ok_or_else(|| CliError::Data(format!("record {i}: expected a JSON object")))?;
        let question = obj
            .get("question")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Data(format!("record {i}: missing string `question`")))?;
        let docs = retriever.retrieve(question, &corpus, a.k)?;
        obj.insert(
            "docs".into(),
            serde_json::to_value(docs).map_err(|e| CliError::Data(e.to_string()))?,
        );
    }
    log::info!("retrieved top-{} passages for {} questions", a.k, records.len());
    Ok(write_json(&a.out, &Value::Array(records))?)
}

/// Defaults, then the config file, then flags.
fn resolve_config(a: &GenerateArgs) -> Result<RunConfig, CliError> {
    let mut c: RunConfig = match &a.config {
        Some(path) => read_json(path).map_err(|e| CliError::Config(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(v) = a.dataset {
        c.dataset = v;
    }
    if let Some(v) = a.strategy {
        c.strategy = v;
    }
    if let Some(v) = a.ndoc {
        c.ndoc = v;
    }
    if let Some(v) = a.shot {
        c.nshot = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if a.rerank {
        c.rerank = true;
    }
    if let Some(v) = a.rerank_samples {
        c.rerank_samples = v;
    }
    if a.post_cite {
        c.post_cite = true;
    }
    if let Some(v) = a.instruction {
        c.instruction_variant = v;
    }
    if let Some(v) = a.compression {
        c.compression = v;
    }
    if let Some(v) = a.temperature {
        c.temperature = v;
    }
    if let Some(v) = a.max_actions {
        c.max_actions = v;
    }
    if let Some(v) = &a.model {
        c.model_id = v.clone();
    }
    c.validate().map_err(CliError::Config)?;
    Ok(c)
}

pub fn generate(a: &GenerateArgs) -> Result<(), CliError> {
    let config = resolve_config(a)?;
    let needs_docs = config.strategy != Strategy::ClosedBook || config.post_cite;
    let instances = if needs_docs {
        load_dataset(&a.input, config.dataset)?
    } else {
        load_questions(&a.input, config.dataset)?
    };
    let pool: Vec<Demonstration> = match &a.demos {
        Some(path) => read_records(path)?
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value(v)
                    .map_err(|e| CliError::Data(format!("{} demo {i}: {e}", path.display())))
            })
            .collect::<Result<_, _>>()?,
        None if config.nshot == 0 => Vec::new(),
        None => return Err(CliError::Config("--demos is required when --shot is above 0".into())),
    };

    let llm = backends::llm(&a.llm, &config.model_id)?;
    let embedder = backends::embedder(&a.embedder)?;
    let oracle = if config.rerank {
        Some(backends::oracle(&a.oracle)?)
    } else {
        None
    };
    let run = generate_run(
        &instances,
        &config,
        &pool,
        Backends {
            llm: llm.as_ref(),
            embedder: embedder.as_ref(),
            rerank_oracle: oracle.as_ref(),
        },
        a.workers,
    )?;
    write(&a.out, &run)?;

    if !run.failures.is_empty() {
        let message = format!(
            "{} of {} examples failed (first: {}: {}); partial output written to {}",
            run.failures.len(),
            instances.len(),
            run.failures[0].id,
            run.failures[0].message,
            a.out.display()
        );
        return Err(if run.failures.iter().any(|f| f.backend) {
            CliError::Backend(message)
        } else {
            CliError::Data(message)
        });
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<(), CliError> {
    if a.generation.len() > 1 && !a.aggregate {
        return Err(CliError::Config("several generation files need --aggregate".into()));
    }
    let runs = a
        .generation
        .iter()
        .map(|p| read_json::<GenerationRun>(p))
        .collect::<Result<Vec<_>, _>>()?;
    let dataset = load_questions(&a.input, runs[0].config.dataset)?;
    let oracle = backends::oracle(&a.oracle)?;
    let fluency = backends::fluency(&a.fluency)?;
    let workers = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;

    let mut reports: Vec<EvalReport> = Vec::with_capacity(runs.len());
    for run in &runs {
        let report = workers.install(|| evaluate_run(run, &dataset, &oracle, fluency.as_deref()))?;
        reports.push(report);
    }
    let report = if a.aggregate {
        aggregate(&reports)?
    } else {
        reports.pop().expect("one report")
    };
    write(&a.out, &report)?;
    print!("{}", render_table(&report));
    Ok(())
}

pub fn claims(a: &ClaimsArgs) -> Result<(), CliError> {
    let llm = backends::llm(&a.llm, a.model.as_deref().unwrap_or("scripted"))?;
    let mut records = read_records(&a.input)?;
    for (i, record) in records.iter_mut().enumerate() {
        let obj = record
            .as_object_mut()
            .ok_or_else(|| CliError::Data(format!("record {i}: expected a JSON object")))?;
        if obj.contains_key("claims") {
            continue;
        }
        let question = obj
            .get("question")
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Data(format!("record {i}: missing string `question`")))?;
        let answer = obj
            .get("answers")
            .and_then(|v| v.get(0))
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::Data(format!("record {i}: needs a gold answer in `answers`")))?;
        let set = generate_claims(question, answer, llm.as_ref())?;
        obj.insert("claims".into(), serde_json::json!(set.claims()));
    }
    Ok(write_json(&a.out, &Value::Array(records))?)
}
