use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use jsonschema::JSONSchema;
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn model(name: &str) -> String {
    root().join("models").join(format!("{name}.json")).display().to_string()
}

fn wheacha(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wheacha")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn validate(schema: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{schema}.schema.json"));
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let compiled = JSONSchema::compile(&schema).unwrap();
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| e.to_string()).collect(),
    };
    panic!("{doc} does not match: {msgs:?}");
}

fn lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

/// Four small programs, one of which (`c.mini`) gets the monotone model's
/// default label, plus one that does not parse.
fn small_corpus() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let programs = [
        ("a.mini", "void addAll(int n) { x = n; items.add(x); }", "addAll"),
        ("b.mini", "void drop() { log(1); list.remove(key); }", "drop"),
        ("c.mini", "int sizeOf() { int n = list.size(); return n; }", "sizeOf"),
        ("d.mini", "void put(int n) { add(n); log(n); }", "put"),
    ];
    let mut labels = serde_json::Map::new();
    for (name, src, label) in programs {
        fs::write(dir.path().join(name), src).unwrap();
        labels.insert(name.into(), label.into());
    }
    fs::write(dir.path().join("broken.mini"), "void f( {").unwrap();
    fs::write(dir.path().join("labels.json"), Value::Object(labels).to_string()).unwrap();
    dir
}

#[test]
fn single_file_gives_one_json_object() {
    let file = root().join("corpus/p002.mini");
    let o = wheacha(&["extract", file.to_str().unwrap(), "--model", &model("monotone")]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("wheat_report", &doc);
    assert_eq!(doc["wheat_source"], "add();");
}

fn without_timing(mut v: Vec<Value>) -> Vec<Value> {
    for r in &mut v {
        r["elapsed_ms"] = 0.into();
    }
    v
}

#[test]
fn directory_gives_json_lines_in_name_order_whatever_the_jobs() {
    let dir = small_corpus();
    let path = dir.path().to_str().unwrap();
    let serial = wheacha(&["extract", path, "--model", &model("monotone")]);
    let parallel = wheacha(&["extract", path, "--model", &model("monotone"), "--jobs", "4"]);
    let stderr = String::from_utf8_lossy(&serial.stderr);
    // `broken.mini` is skipped, not fatal
    assert!(stderr.contains("skipped broken.mini"), "{stderr}");
    let reports = lines(&serial);
    for r in &reports {
        validate("wheat_report", r);
    }
    let paths: Vec<&str> = reports.iter().map(|r| r["program_path"].as_str().unwrap()).collect();
    let mut sorted = paths.clone();
    sorted.sort();
    assert_eq!(paths, sorted);
    assert!(paths.contains(&"a.mini") && paths.contains(&"d.mini"));
    assert_eq!(without_timing(reports), without_timing(lines(&parallel)));
    assert_eq!(serial.status.code(), parallel.status.code());
}

#[test]
fn failures_are_reported_and_set_exit_code_one() {
    let dir = small_corpus();
    let o = wheacha(&["extract", dir.path().to_str().unwrap(), "--model", &model("monotone")]);
    // nothing is necessary for the default label `sizeOf` gets
    assert_eq!(o.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("error: c.mini"), "{stderr}");
    assert_eq!(lines(&o).len(), 3);
}

#[test]
fn unreachable_model_exits_three() {
    let file = root().join("corpus/p002.mini");
    let o = wheacha(&["extract", file.to_str().unwrap(), "--model", "exec:exit 0"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unreachable"));
    assert!(o.stdout.is_empty());
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(wheacha(&["extract"]).status.code(), Some(2));
    assert_eq!(wheacha(&["extract", "nowhere.mini", "--model", &model("monotone")]).status.code(), Some(2));
    let file = root().join("corpus/p002.mini");
    assert_eq!(wheacha(&["extract", file.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn dd_report_validates() {
    let file = root().join("corpus/p002.mini");
    let o = wheacha(&["dd", file.to_str().unwrap(), "--model", &model("monotone")]);
    assert_eq!(o.status.code(), Some(0));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("dd_report", &doc);
    assert_eq!(doc["passes"], true);
}

#[test]
fn oracle_reports_validate_and_skip_long_programs() {
    let dir = small_corpus();
    let o = wheacha(&["oracle", dir.path().to_str().unwrap(), "--model", &model("monotone"), "--oracle-token-limit", "10"]);
    let docs = lines(&o);
    assert!(!docs.is_empty());
    for d in &docs {
        validate("oracle_summary", d);
        assert_eq!(d["confirmed_minimal"], true);
    }
    // a.mini has 11 body tokens
    assert!(String::from_utf8_lossy(&o.stderr).contains("skipped a.mini"));
}

#[test]
fn classify_and_coverage_validate() {
    let corpus = root().join("corpus");
    let o = wheacha(&["classify", corpus.to_str().unwrap(), "--model", &model("edge-rule"), "--jobs", "4"]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("classify_report", &doc);
    let total: f64 = doc["percent"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 100.0).abs() < 1e-9);

    let o = wheacha(&["coverage", corpus.to_str().unwrap(), "--model", &model("linear-bag"), "--top-pct", "10,50,90"]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("coverage_report", &doc);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
    assert_eq!(doc["monotone"], true);
}

#[test]
fn external_scores_are_read_per_program() {
    let dir = tempfile::tempdir().unwrap();
    let src = "void f() { a; z; }";
    fs::write(dir.path().join("one.mini"), src).unwrap();
    let scores = tempfile::tempdir().unwrap();
    // tokens: void f ( ) { a ; z ; } -- only `a` scores
    fs::write(scores.path().join("one.json"), "[0,0,0,0,0,1,0,0,0,0]").unwrap();
    let cfg = dir.path().join("bag.json");
    fs::write(
        &cfg,
        r#"{"kind":"LinearBag","labels":["A","B"],"weights":{"a":{"A":2.0}},"bias":{"B":1.0},"temperature":1.0}"#,
    )
    .unwrap();
    let o = wheacha(&[
        "coverage",
        dir.path().to_str().unwrap(),
        "--model",
        cfg.to_str().unwrap(),
        "--scores",
        scores.path().to_str().unwrap(),
        "--top-pct",
        "10",
    ]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("coverage_report", &doc);
    assert_eq!(doc["source"], "external");
    assert_eq!(doc["rows"][0]["fraction"], 1.0);
}

#[test]
fn explain_ranks_both_ways() {
    let dir = small_corpus();
    let test = dir.path().join("a.mini");
    let cache = tempfile::tempdir().unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_wheacha"))
            .args(["explain", test.to_str().unwrap(), "--corpus", dir.path().to_str().unwrap()])
            .args(["--model", &model("monotone"), "--label", "addAll"])
            .env("WHEACHA_CACHE_DIR", cache.path())
            .output()
            .unwrap()
    };
    let o = run();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("explain_report", &doc);
    assert_eq!(doc["wheat"][0]["path"], "a.mini");
    assert_eq!(doc["wheat"][0]["distance"], 0.0);
    assert!(fs::read_dir(cache.path()).unwrap().count() > 0);
    assert_eq!(stdout(&run()), stdout(&o));
}

#[test]
fn query_corpus_is_written() {
    let out = tempfile::tempdir().unwrap();
    let file = root().join("corpus/p002.mini");
    let o = wheacha(&["gen-queries", file.to_str().unwrap(), "--out-dir", out.path().to_str().unwrap(), "--model", &model("monotone")]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    validate("query_corpus_report", &doc);
    let written = doc["written"].as_u64().unwrap() as usize;
    assert!(written > 1);
    assert_eq!(fs::read_dir(out.path()).unwrap().count(), written);
    for e in fs::read_dir(out.path()).unwrap() {
        wheacha::lang::Program::parse(&fs::read_to_string(e.unwrap().path()).unwrap()).unwrap();
    }
}

#[test]
fn model_serve_answers_line_by_line() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_wheacha"))
        .args(["model-serve", "--model", &model("monotone")])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    writeln!(stdin, r#"{{"program": "void f() {{ add(); }}"}}"#).unwrap();
    writeln!(stdin, r#"{{"program": "void f( {{"}}"#).unwrap();
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    let replies: Vec<Value> = String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(replies.len(), 2);
    assert_eq!(replies[0]["label"], "addItem");
    assert!(replies[1]["parse_error"].is_object() || replies[1]["parse_error"].is_string(), "{}", replies[1]);
}

#[test]
fn text_output_underlines_the_wheat() {
    let file = root().join("corpus/p002.mini");
    let o = wheacha(&["extract", file.to_str().unwrap(), "--model", &model("monotone"), "--format", "text"]);
    let text = stdout(&o);
    assert!(text.contains("add();"));
    assert!(text.lines().any(|l| l.trim() == "^^^"), "{text}");
}
