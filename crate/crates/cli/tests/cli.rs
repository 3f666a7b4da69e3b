//! End-to-end runs of the `tspsdp` binary.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tspsdp"));
    c.env("NO_COLOR", "1");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(name: &str) -> String {
    root().join("fixtures").join(name).display().to_string()
}

fn full_matrix(rows: &[&[i64]]) -> String {
    let mut s = format!(
        "NAME: t{n}\nTYPE: TSP\nDIMENSION: {n}\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n",
        n = rows.len()
    );
    for r in rows {
        let line: Vec<String> = r.iter().map(i64::to_string).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s.push_str("EOF\n");
    s
}

/// Symmetric six-city instance with distinct lengths.
fn six_cities() -> String {
    full_matrix(&[
        &[0, 3, 9, 4, 7, 5],
        &[3, 0, 2, 8, 6, 9],
        &[9, 2, 0, 3, 8, 7],
        &[4, 8, 3, 0, 2, 6],
        &[7, 6, 8, 2, 0, 3],
        &[5, 9, 7, 6, 3, 0],
    ])
}

fn schema() -> Value {
    let text = std::fs::read_to_string(root().join("docs/run-report.schema.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Validates the schema keywords the report schema uses: `$ref` into
/// `$defs`, `type`, `enum`, `required`, `properties`,
/// `additionalProperties: false` and `items`.
fn validate(root: &Value, schema: &Value, v: &Value, path: &str) -> Result<(), String> {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.strip_prefix("#/$defs/").ok_or(format!("unsupported $ref {r}"))?;
        return validate(root, &root["$defs"][name], v, path);
    }
    if let Some(t) = schema.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            "integer" => v.is_u64() || v.is_i64(),
            "number" => v.is_number(),
            _ => return Err(format!("unsupported type {t}")),
        };
        if !ok {
            return Err(format!("{path}: expected {t}, got {v}"));
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        if !allowed.contains(v) {
            return Err(format!("{path}: {v} not in {allowed:?}"));
        }
    }
    if let Some(obj) = v.as_object() {
        for key in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{path}: missing {key}"));
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (key, value) in obj {
            match props.and_then(|p| p.get(key)) {
                Some(sub) => validate(root, sub, value, &format!("{path}.{key}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{path}: unexpected {key}"));
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (k, item) in arr.iter().enumerate() {
            validate(root, items, item, &format!("{path}[{k}]"))?;
        }
    }
    Ok(())
}

fn assert_valid(report: &Value) {
    let s = schema();
    validate(&s, &s, report, "$").unwrap();
}

fn json_stdout(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn validator_rejects_bad_reports() {
    let s = schema();
    let bad = serde_json::json!({"schema_version": 1});
    assert!(validate(&s, &s, &bad, "$").is_err());
    let wrong_enum = serde_json::json!({
        "schema_version": 1, "tool": "tspsdp", "version": "0", "command": "nope",
        "config": {"gap_tolerance": 1.0, "feasibility_tolerance": 1.0, "max_iterations": 1, "jobs": 1},
        "instances": [], "checks": [], "passed": true
    });
    assert!(validate(&s, &s, &wrong_enum, "$").unwrap_err().contains("command"));
}

#[test]
fn three_cities_are_an_input_error() {
    let out = run_stdin(
        &["bound", "-", "--method", "held-karp"],
        &full_matrix(&[&[0, 1, 2], &[1, 0, 3], &[2, 3, 0]]),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 4"));
}

#[test]
fn malformed_input_is_a_parse_error() {
    let out = run_stdin(
        &["bound", "-"],
        "DIMENSION: 4\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: FULL_MATRIX\nEDGE_WEIGHT_SECTION\n0 1 x\n",
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn oversized_lifted_program_is_a_capacity_error() {
    let out = run(&["bound", &fixture("gr17.tsp"), "--method", "qap-sdp"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("missing").join("r.json");
    let out = run(&["facets", "--json", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bound_report_is_valid_and_below_the_optimum() {
    let out = run_stdin(&["bound", "-", "--json"], &six_cities());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json_stdout(&out);
    assert_valid(&report);
    let inst = &report["instances"][0];
    assert_eq!(inst["n"], 6);
    let opt = inst["optimum"]["length"].as_f64().unwrap();
    assert_eq!(inst["optimum"]["source"], "brute-force");
    let bounds = inst["bounds"].as_array().unwrap();
    let methods: Vec<&str> = bounds.iter().map(|b| b["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["cvetkovic", "new-sdp", "held-karp", "qap-sdp"]);
    for b in bounds {
        assert!(b["rounded"].as_f64().unwrap() <= opt, "{b}");
        assert_eq!(b["converged"], true);
    }
}

#[test]
fn csv_has_the_documented_columns() {
    let out = run_stdin(&["bound", "-", "--method", "held-karp", "--csv"], &six_cities());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("instance,n,method,raw,rounded,status,converged,iterations,seconds,expected,pass")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[..3], ["t6", "6", "held-karp"]);
    assert_eq!(row[5], "optimal");
    assert!(lines.next().is_none());
}

#[test]
fn human_table_has_no_escape_codes_when_piped() {
    let out = run_stdin(&["bound", "-", "--method", "cvetkovic"], &six_cities());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("instance"));
    assert!(!text.contains('\x1b'));
}

/// Report with the timing fields removed.
fn without_timings(mut v: Value) -> Value {
    match &mut v {
        Value::Object(map) => {
            map.remove("seconds");
            for value in map.values_mut() {
                *value = without_timings(value.take());
            }
        }
        Value::Array(items) => {
            for item in items.iter_mut() {
                *item = without_timings(item.take());
            }
        }
        _ => {}
    }
    v
}

#[test]
fn facets_match_the_reference_triples_and_repeat() {
    let first = run(&["facets", "--json"]);
    assert_eq!(
        first.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let report = json_stdout(&first);
    assert_valid(&report);
    assert_eq!(report["passed"], true);
    assert_eq!(report["instances"].as_array().unwrap().len(), 3);
    let second = json_stdout(&run(&["facets", "--json"]));
    assert_eq!(without_timings(report), without_timings(second));
}

#[test]
fn verify_is_reproducible_for_a_seed() {
    let args = [
        "verify",
        "--only",
        "scheme,min-cut",
        "--seed",
        "7",
        "--count",
        "2",
        "--json",
    ];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let a = json_stdout(&a);
    assert_valid(&a);
    assert_eq!(a["config"]["seed"], 7);
    let names: Vec<&str> = a["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["scheme", "min-cut"]);
    let b = json_stdout(&run(&args));
    assert_eq!(a["checks"], b["checks"]);
}

#[test]
fn table1_names_a_missing_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["table1", "--fixtures", dir.path().to_str().unwrap(), "--skip-held-karp"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing fixture"));
}

#[test]
fn table1_rows_match_where_fixtures_exist() {
    let dir = tempfile::tempdir().unwrap();
    let names = ["gr17.tsp", "gr21.tsp", "gr24.tsp", "bays29.tsp"];
    if !names[..3].iter().all(|n| Path::new(&fixture(n)).is_file()) {
        eprintln!("skipping: gr17, gr21 and gr24 fixtures are required");
        return;
    }
    for n in names {
        if Path::new(&fixture(n)).is_file() {
            std::fs::copy(fixture(n), dir.path().join(n)).unwrap();
        }
    }
    let out = run(&[
        "table1",
        "--fixtures",
        dir.path().to_str().unwrap(),
        "--skip-bays29",
        "--json",
    ]);
    let report = json_stdout(&out);
    assert_valid(&report);
    assert_eq!(report["checks"].as_array().unwrap().len(), 9);
    assert_eq!(report["passed"], true);
    assert_eq!(out.status.code(), Some(0));
}
