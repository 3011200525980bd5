use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn citeval(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_citeval"))
        .args(args)
        .env_remove("MAUVE_ENDPOINT")
        .output()
        .expect("run citeval")
}

fn ok(args: &[&str]) -> Output {
    let out = citeval(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Work { dir: TempDir::new().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// Toy questions with the top-k BM25 passages attached.
    fn retrieved(&self, k: usize) -> PathBuf {
        let out = self.path(&format!("retrieved_{k}.json"));
        ok(&[
            "retrieve",
            "--corpus",
            s(&fixture("toy_corpus.jsonl")),
            "--input",
            s(&fixture("toy_asqa_questions.json")),
            "--out",
            s(&out),
            "-k",
            &k.to_string(),
        ]);
        out
    }

    fn generate(&self, input: &Path, out_name: &str, extra: &[&str]) -> PathBuf {
        let out = self.path(out_name);
        let script = format!("scripted:{}", s(&fixture("scripted_llm.json")));
        let mut args = vec![
            "generate",
            "--input",
            s(input),
            "--out",
            s(&out),
            "--llm",
            &script,
            "--oracle",
            "substring",
        ];
        args.extend_from_slice(extra);
        ok(&args);
        out
    }

    fn eval(&self, input: &Path, generations: &[&Path], out_name: &str, extra: &[&str]) -> PathBuf {
        let out = self.path(out_name);
        let mut args = vec!["eval", "--input", s(input), "--out", s(&out), "--oracle", "substring"];
        args.push("--generation");
        args.extend(generations.iter().map(|p| s(p)));
        args.extend_from_slice(extra);
        ok(&args);
        out
    }
}

#[test]
fn retrieve_is_deterministic_and_bounded() {
    let w = Work::new();
    let first = w.retrieved(3);
    let bytes = std::fs::read(&first).unwrap();
    std::fs::rename(&first, w.path("first.json")).unwrap();
    let second = w.retrieved(3);
    assert_eq!(bytes, std::fs::read(&second).unwrap());
    for record in read(&second).as_array().unwrap() {
        assert_eq!(record["docs"].as_array().unwrap().len(), 3);
    }
}

#[test]
fn closedbook_generation_needs_no_passages() {
    let w = Work::new();
    let out = w.generate(
        &fixture("toy_asqa_questions.json"),
        "closed.json",
        &["--strategy", "closedbook", "--shot", "0"],
    );
    let run = read(&out);
    let records = run["records"].as_array().unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| !r["raw_output"].as_str().unwrap().is_empty()));
    assert!(run.get("failures").is_none());
}

#[test]
fn rerank_keeps_every_candidate() {
    let w = Work::new();
    let input = w.retrieved(10);
    let out = w.generate(
        &input,
        "rerank.json",
        &["--shot", "2", "--demos", s(&fixture("demos_asqa.json")), "--rerank", "--rerank-samples", "4"],
    );
    for record in read(&out)["records"].as_array().unwrap() {
        assert_eq!(record["candidates"].as_array().unwrap().len(), 4);
        assert_eq!(record["candidate_recalls"].as_array().unwrap().len(), 4);
        assert!(record["chosen_index"].as_u64().unwrap() < 4);
    }
}

#[test]
fn asqa_report_includes_fluency() {
    let w = Work::new();
    let input = w.retrieved(10);
    let generation = w.generate(&input, "gen.json", &["--shot", "0"]);
    let out = w.eval(&input, &[&generation], "report.json", &["--fluency", "constant:42"]);
    let report = read(&out);
    let aggregate = report["aggregate"].as_object().unwrap();
    for key in ["citation_recall", "citation_precision", "em_recall", "rouge_l", "fluency"] {
        assert!(aggregate.contains_key(key), "missing {key}");
    }
    assert_eq!(aggregate["fluency"]["mean"], json!(42.0));
    assert_eq!(report["per_example"].as_array().unwrap().len(), 3);
}

#[test]
fn qampari_report_omits_fluency() {
    let w = Work::new();
    let input = w.path("qampari.json");
    let docs = json!([
        {"id": "d1", "title": "Beatles", "text": "The Beatles were John, Paul, George and Ringo."},
        {"id": "d2", "title": "Members", "text": "Ringo Starr replaced Pete Best."}
    ]);
    let data = json!([
        {"id": "q1", "question": "Who were members of the Beatles?",
         "answers": [["John Lennon", "John"], ["Paul McCartney", "Paul"], ["Pete Best"],
                     ["George Harrison"], ["Ringo Starr"], ["Stuart Sutcliffe"]], "docs": docs}
    ]);
    std::fs::write(&input, serde_json::to_string(&data).unwrap()).unwrap();
    let script = w.path("script.json");
    std::fs::write(&script, r#"{"*": "John [1], Paul [1], Pete Best [2]."}"#).unwrap();
    let generation = w.path("gen.json");
    ok(&[
        "generate", "--input", s(&input), "--out", s(&generation), "--dataset", "qampari",
        "--ndoc", "2", "--shot", "0", "--llm", &format!("scripted:{}", s(&script)),
    ]);
    let report = read(&w.eval(&input, &[&generation], "report.json", &["--fluency", "constant:42"]));
    let aggregate = report["aggregate"].as_object().unwrap();
    assert!(!aggregate.contains_key("fluency"));
    assert!(!aggregate.contains_key("rouge_l"));
    assert_eq!(aggregate["qampari_recall"]["mean"], json!(0.5));
    assert_eq!(aggregate["qampari_recall_5"]["mean"], json!(0.6));
}

#[test]
fn seeds_aggregate_into_one_report() {
    let w = Work::new();
    let input = w.retrieved(10);
    let demos = fixture("demos_asqa.json");
    let runs: Vec<PathBuf> = (1..=3)
        .map(|seed| {
            let seed = seed.to_string();
            w.generate(&input, &format!("gen_{seed}.json"), &["--shot", "2", "--demos", s(&demos), "--seed", &seed])
        })
        .collect();
    let refs: Vec<&Path> = runs.iter().map(PathBuf::as_path).collect();
    let out = w.eval(&input, &refs, "agg.json", &["--aggregate", "--fluency", "none"]);
    let report = read(&out);
    assert_eq!(report["seeds"], json!([1, 2, 3]));
    assert!(report["per_example"].as_array().unwrap().is_empty());
    assert!(report["aggregate"]["citation_recall"]["std"].as_f64().unwrap() >= 0.0);

    let refused = citeval(&[
        "eval", "--input", s(&input), "--out", s(&w.path("x.json")), "--oracle", "substring",
        "--generation", s(&runs[0]), s(&runs[1]),
    ]);
    assert_eq!(refused.status.code(), Some(2));
}

#[test]
fn missing_ids_exit_with_data_error() {
    let w = Work::new();
    let input = w.retrieved(5);
    let generation = w.generate(&input, "gen.json", &["--shot", "0", "--ndoc", "5"]);
    let mut records = read(&input);
    records.as_array_mut().unwrap().pop();
    let short = w.path("short.json");
    std::fs::write(&short, serde_json::to_string(&records).unwrap()).unwrap();
    let out = citeval(&[
        "eval", "--input", s(&short), "--generation", s(&generation), "--out", s(&w.path("r.json")),
        "--oracle", "substring", "--fluency", "none",
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_configuration_exits_with_config_error() {
    let w = Work::new();
    let input = w.retrieved(5);
    let script = format!("scripted:{}", s(&fixture("scripted_llm.json")));
    let out_path = w.path("g.json");
    let base = ["generate", "--input", s(&input), "--out", s(&out_path), "--llm", &script];
    let cases: [&[&str]; 4] = [
        &["--rerank", "--rerank-samples", "0", "--shot", "0"],
        &["--strategy", "interact", "--instruction", "light", "--shot", "0"],
        &["--shot", "2"],
        &["--shot", "0", "--embedder", "nonsense"],
    ];
    for extra in cases {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        let out = citeval(&args);
        assert_eq!(out.status.code(), Some(2), "{extra:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let config = w.path("bad.json");
    std::fs::write(&config, r#"{"strategy": "telepathy"}"#).unwrap();
    let args: Vec<&str> = base.iter().copied().chain(["--config", s(&config)]).collect();
    assert_eq!(citeval(&args).status.code(), Some(2));
}

#[test]
fn end_to_end_reports_are_byte_identical() {
    let pipeline = || {
        let w = Work::new();
        let input = w.retrieved(10);
        let demos = fixture("demos_asqa.json");
        let mut reports = Vec::new();
        for strategy in ["vanilla", "interact", "inlinesearch"] {
            let generation = w.generate(
                &input,
                &format!("{strategy}.json"),
                &["--strategy", strategy, "--shot", "2", "--demos", s(&demos), "--seed", "1", "--rerank", "--workers", "2"],
            );
            let report = w.eval(&input, &[&generation], &format!("{strategy}_report.json"), &["--fluency", "constant:50"]);
            reports.push(std::fs::read(generation).unwrap());
            reports.push(std::fs::read(report).unwrap());
        }
        reports
    };
    assert_eq!(pipeline(), pipeline());
}
