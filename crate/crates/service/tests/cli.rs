mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use dca_core::analytics::{CASE_STUDY_DEFECTS_CSV, CASE_STUDY_EFFORT_CSV, CASE_STUDY_UNITS_CSV};
use dca_core::bn::{serialize_network, Cpt, Network, Variable};
use dca_core::model::{SAMPLE_CITATIONS_CSV, SAMPLE_MODEL_JSON};
use dca_service::api::{router, AppState};
use dca_service::cli::run_args;
use dca_service::store::Store;

use common::{quick_version, sample_records};

fn dca(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_args(
        std::iter::once("dca").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn case_study_files(dir: &Path) -> (String, String, String) {
    (
        write(dir, "defects.csv", CASE_STUDY_DEFECTS_CSV),
        write(dir, "units.csv", CASE_STUDY_UNITS_CSV),
        write(dir, "effort.csv", CASE_STUDY_EFFORT_CSV),
    )
}

#[test]
fn learn_coin_prints_two_thirds() {
    let dir = tempfile::tempdir().unwrap();
    let net = Network::new(
        "coin",
        vec![Variable::binary("A", "A")],
        vec![Cpt::prior("A", vec![0.5, 0.5]).into()],
    );
    let net_path = write(dir.path(), "coin.json", &serialize_network(&net));
    let rec = write(dir.path(), "coin.csv", "A\ntrue\ntrue\nfalse\n\n");
    let (code, out, err) = dca(&[
        "learn",
        "--network",
        &net_path,
        "--records",
        &rec,
        "--alpha",
        "0",
        "--tol",
        "1e-12",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("A  false=0.333333 true=0.666667"), "{out}");
    assert!(out.contains("converged"), "{out}");

    let out_path = dir.path().join("trained.json");
    let (code, _, err) = dca(&[
        "learn",
        "--network",
        &net_path,
        "--records",
        &rec,
        "--alpha",
        "0",
        "--out",
        out_path.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code, 0, "{err}");
    let trained = dca_core::bn::parse_network(&fs::read_to_string(out_path).unwrap()).unwrap();
    match trained.cpd("A").unwrap() {
        dca_core::bn::Cpd::Table(t) => assert!((t.rows[0][1] - 2.0 / 3.0).abs() < 1e-4),
        _ => unreachable!(),
    }
}

#[test]
fn learn_is_deterministic_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "model.json", SAMPLE_MODEL_JSON);
    let cites = write(dir.path(), "cites.csv", SAMPLE_CITATIONS_CSV);
    let args = [
        "learn",
        "--model",
        &model,
        "--records",
        &cites,
        "--max-iters",
        "3",
        "--restarts",
        "2",
        "--seed",
        "7",
    ];
    let (code, a, err) = dca(&args);
    assert_eq!(code, 0, "{err}");
    let (_, b, _) = dca(&args);
    assert_eq!(a, b);
    assert!(
        a.contains("P2 | input=false,method=false,organization=false,people=false,tools=false"),
        "{a}"
    );
    assert!(a.contains("C09  false="), "{a}");
}

#[test]
fn learn_save_adds_a_version() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    let model = write(dir.path(), "model.json", SAMPLE_MODEL_JSON);
    let cites = write(dir.path(), "cites.csv", SAMPLE_CITATIONS_CSV);
    let (code, out, err) = dca(&[
        "learn",
        "--model",
        &model,
        "--records",
        &cites,
        "--max-iters",
        "2",
        "--restarts",
        "1",
        "--save",
        "--store-path",
        store.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let id = out
        .lines()
        .find_map(|l| l.strip_prefix("version: "))
        .unwrap();
    assert_eq!(
        Store::open(&store)
            .unwrap()
            .version(id)
            .unwrap()
            .record_count,
        141
    );
}

#[test]
fn uchart_prints_center_line_and_writes_description() {
    let dir = tempfile::tempdir().unwrap();
    let (d, u, e) = case_study_files(dir.path());
    let out = dir.path().join("chart.json");
    let (code, text, err) = dca(&[
        "uchart",
        "--defects",
        &d,
        "--units",
        &u,
        "--effort",
        &e,
        "--iteration",
        "EL3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(text.contains("0.514"), "{text}");
    let chart: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(chart.is_object());

    let (code, _, err) = dca(&["uchart", "--defects", &d, "--units", &u, "--effort", &e]);
    assert_eq!(code, 1, "fp basis needs an iteration");
    assert!(err.contains("invalid-request"), "{err}");
    let (code, text, _) = dca(&[
        "uchart",
        "--defects",
        &d,
        "--units",
        &u,
        "--effort",
        &e,
        "--basis",
        "hours",
        "--out",
        dir.path().join("h.json").to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(text.contains("EL3"), "{text}");
}

#[test]
fn metrics_and_pareto() {
    let dir = tempfile::tempdir().unwrap();
    let (d, u, e) = case_study_files(dir.path());
    let (code, text, _) = dca(&["density", "--defects", &d, "--units", &u, "--effort", &e]);
    assert_eq!(code, 0);
    for v in ["1.0000", "0.6199", "0.5144"] {
        assert!(text.contains(v), "{v} in {text}");
    }
    let (_, text, _) = dca(&[
        "efficiency",
        "--defects",
        &d,
        "--units",
        &u,
        "--effort",
        &e,
        "--json",
    ]);
    let rows: Vec<Value> = serde_json::from_str(&text).unwrap();
    assert!((rows[2]["value"].as_f64().unwrap() - 214.0 / 77.0).abs() < 1e-12);

    let (code, text, _) = dca(&["pareto", "--defects", &d, "--iteration", "EL3", "--json"]);
    assert_eq!(code, 0);
    let p: Value = serde_json::from_str(&text).unwrap();
    assert!(
        (p["result"]["entries"][1]["cumulative_share"]
            .as_f64()
            .unwrap()
            - 0.5701)
            .abs()
            < 1e-4
    );
    let (_, text, _) = dca(&["pareto", "--defects", &d, "--iteration", "EL3"]);
    assert!(
        text.contains("omission") && text.contains("57.01%"),
        "{text}"
    );
    let (code, _, err) = dca(&["pareto", "--defects", &d, "--iteration", "EL7"]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown-iteration"));
}

#[tokio::test]
async fn diagnose_matches_http() {
    let dir = tempfile::tempdir().unwrap();
    let store_path = dir.path().join("store");
    let store = Store::open(&store_path).unwrap();
    let v = store
        .put_version(quick_version().clone(), &sample_records())
        .unwrap();
    let app = router(AppState::new(store));

    let req = Request::builder()
        .method("POST")
        .uri(format!("/api/versions/{}/diagnose", v.id))
        .body(Body::from(
            json!({"problem_id": "P2", "evidence": {"C09": "true", "C01": "false"}}).to_string(),
        ))
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    let http: Value =
        serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();

    let (code, out, err) = dca(&[
        "diagnose",
        "--version",
        &v.id,
        "--store-path",
        store_path.to_str().unwrap(),
        "--problem",
        "P2",
        "--evidence",
        "C09=true",
        "--evidence",
        "C01=false",
    ]);
    assert_eq!(code, 0, "{err}");
    let cli: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(cli, http);

    let model = write(dir.path(), "model.json", SAMPLE_MODEL_JSON);
    let net = write(dir.path(), "net.json", &serialize_network(&v.network));
    let (code, out, _) = dca(&[
        "diagnose",
        "--model",
        &model,
        "--network",
        &net,
        "--problem",
        "P2",
        "--evidence",
        "C09=true",
        "--evidence",
        "C01=false",
    ]);
    assert_eq!(code, 0);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap(), http);

    let (code, text, _) = dca(&[
        "diagnose",
        "--model",
        &model,
        "--network",
        &net,
        "--problem",
        "P2",
        "--format",
        "text",
    ]);
    assert_eq!(code, 0);
    assert!(text.starts_with("P2 "), "{text}");
    let (code, _, err) = dca(&[
        "diagnose",
        "--model",
        &model,
        "--network",
        &net,
        "--problem",
        "P9",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("unknown-id"));
    let (code, _, _) = dca(&[
        "diagnose",
        "--model",
        &model,
        "--network",
        &net,
        "--problem",
        "P2",
        "--evidence",
        "C09",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn validate_and_compile() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "model.json", SAMPLE_MODEL_JSON);
    let (code, out, _) = dca(&["validate-model", &model]);
    assert_eq!((code, out.lines().next()), (0, Some("valid")));
    let mut doc: Value = serde_json::from_str(SAMPLE_MODEL_JSON).unwrap();
    doc["cause_categories"][0]["members"][0] = "C99".into();
    let bad = write(dir.path(), "bad.json", &doc.to_string());
    let (code, _, err) = dca(&["validate-model", &bad]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error["), "{err}");

    let out = dir.path().join("net.json");
    let (code, text, _) = dca(&["compile", &model, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(text.contains("35 variables"), "{text}");
    let net = dca_core::bn::parse_network(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(net.variables.len(), 35);
}

#[test]
fn report_from_store() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let v = store
        .put_version(quick_version().clone(), &sample_records())
        .unwrap();
    let s = store.create_session(&v.id).unwrap();
    drop(store);
    let path = dir.path().to_str().unwrap();
    let (code, _, err) = dca(&["report", "--session", &s.id, "--store-path", path]);
    assert_eq!(code, 1);
    assert!(err.contains("wrong-step"), "{err}");
    let (code, _, err) = dca(&["report", "--session", "missing", "--store-path", path]);
    assert_eq!(code, 1);
    assert!(err.contains("not-found"), "{err}");
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_dca");
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "model.json", SAMPLE_MODEL_JSON);
    let ok = Command::new(bin)
        .args(["validate-model", &model])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(
        String::from_utf8_lossy(&ok.stdout).lines().next(),
        Some("valid")
    );

    let bad = write(dir.path(), "bad.json", "{\"format\": \"nope\"}");
    let out = Command::new(bin)
        .args(["validate-model", &bad])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty() && out.stdout.is_empty());

    let missing = dir.path().join("absent.json");
    let out = Command::new(bin)
        .args(["validate-model", missing.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("io-error"));

    let out = Command::new(bin)
        .args(["learn", "--bogus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let blocker = write(dir.path(), "file", "x");
    let out = Command::new(bin)
        .args([
            "report",
            "--session",
            "s",
            "--store-path",
            &format!("{blocker}/store"),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
