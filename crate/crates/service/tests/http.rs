mod common;

use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use dca_core::analytics::{
    case_study_defects, case_study_groupings, CASE_STUDY_DEFECTS_CSV, CASE_STUDY_EFFORT_CSV,
    CASE_STUDY_UNITS_CSV,
};
use dca_core::bn::Cpd;
use dca_core::model::{SAMPLE_CITATIONS_CSV, SAMPLE_MODEL_JSON};
use dca_service::api::{router, AppState};
use dca_service::description::{api_description, ENDPOINTS};
use dca_service::store::Store;

use common::{quick_version, sample_records};

struct Client {
    app: Router,
    _dir: tempfile::TempDir,
}

impl Client {
    fn empty() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        Client {
            app: router(AppState::new(store)),
            _dir: dir,
        }
    }

    /// A store holding the trained sample version and the case-study data.
    fn seeded() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store
            .put_version(quick_version().clone(), &sample_records())
            .unwrap();
        Client {
            app: router(AppState::new(store)),
            _dir: dir,
        }
    }

    async fn raw(&self, method: &str, uri: &str, body: impl Into<String>) -> (StatusCode, String) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.into()))
            .unwrap();
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (status, String::from_utf8(bytes.to_vec()).unwrap())
    }

    async fn call(&self, method: &str, uri: &str, body: Value) -> (StatusCode, Value) {
        let text = if body.is_null() {
            String::new()
        } else {
            body.to_string()
        };
        let (status, text) = self.raw(method, uri, text).await;
        let value = serde_json::from_str(&text).unwrap_or(Value::String(text));
        (status, value)
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.call("GET", uri, Value::Null).await
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.call("POST", uri, body).await
    }

    async fn load_case_study(&self) {
        let (st, v) = self
            .raw("POST", "/api/defects?revision=0", CASE_STUDY_DEFECTS_CSV)
            .await;
        assert_eq!(st, StatusCode::CREATED, "{v}");
        let (st, v) = self
            .post(
                "/api/iterations",
                json!({"units_csv": CASE_STUDY_UNITS_CSV, "effort_csv": CASE_STUDY_EFFORT_CSV}),
            )
            .await;
        assert_eq!(st, StatusCode::CREATED, "{v}");
    }

    async fn wait_job(&self, id: &str) -> Value {
        let start = Instant::now();
        loop {
            let (st, job) = self.get(&format!("/api/training/{id}")).await;
            assert_eq!(st, StatusCode::OK);
            if job["status"] != "running" {
                return job;
            }
            assert!(
                start.elapsed() < Duration::from_secs(300),
                "job did not finish"
            );
            tokio::time::sleep(Duration::from_millis(50)).await;
        }
    }
}

fn code(v: &Value) -> &str {
    v["code"].as_str().unwrap_or("")
}

#[tokio::test]
async fn every_described_endpoint_is_routed() {
    let c = Client::empty();
    for (method, path, ..) in ENDPOINTS {
        let uri = path
            .replace("{id}", "x1")
            .replace("{error_id}", "x2")
            .replace("{action_id}", "x3");
        let (st, v) = c.call(method, &uri, Value::Null).await;
        assert_ne!(st, StatusCode::METHOD_NOT_ALLOWED, "{method} {uri}");
        assert_ne!(code(&v), "no-route", "{method} {uri}");
        if !st.is_success() {
            assert!(
                v["code"].is_string() && v["message"].is_string(),
                "{method} {uri}: {v}"
            );
        }
    }
    let (st, v) = c.get("/api/nothing").await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(code(&v), "no-route");
}

#[tokio::test]
async fn description_is_served() {
    let c = Client::empty();
    let (st, a) = c.get("/api").await;
    assert_eq!(st, StatusCode::OK);
    let (_, b) = c.get("/.well-known/dca-api.json").await;
    assert_eq!(a, b);
    assert_eq!(a, api_description());
    assert_eq!(a["format"], "dca-api-description");
    assert_eq!(a["endpoints"].as_array().unwrap().len(), ENDPOINTS.len());
    let (st, h) = c.get("/api/health").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(h["status"], "ok");
}

#[tokio::test]
async fn analytics_over_http() {
    let c = Client::empty();
    c.load_case_study().await;

    let (st, p) = c.get("/api/analytics/pareto?iteration=EL3").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(p["result"]["total"], 214);
    assert_eq!(p["result"]["entries"][0]["category"], "omission");
    let cum = p["result"]["entries"][1]["cumulative_share"]
        .as_f64()
        .unwrap();
    assert!((cum - 0.5701).abs() < 1e-4, "{cum}");

    let (st, u) = c.get("/api/analytics/uchart?iteration=EL3").await;
    assert_eq!(st, StatusCode::OK);
    let center = u["result"]["center_line"].as_f64().unwrap();
    assert!((center - 214.0 / 416.0).abs() < 1e-12);
    assert_eq!(u["result"]["points"].as_array().unwrap().len(), 35);
    let (st, v) = c.get("/api/analytics/uchart").await;
    assert_eq!((st, code(&v)), (StatusCode::BAD_REQUEST, "invalid-request"));
    let (st, v) = c.get("/api/analytics/uchart?iteration=EL9").await;
    assert_eq!((st, code(&v)), (StatusCode::NOT_FOUND, "unknown-iteration"));
    let (st, h) = c.get("/api/analytics/uchart?basis=hours").await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(h["result"]["points"].as_array().unwrap().len(), 3);

    let (_, d) = c.get("/api/analytics/density").await;
    let values: Vec<f64> = d
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["value"].as_f64().unwrap())
        .collect();
    for (got, want) in values
        .iter()
        .zip([69.0 / 69.0, 181.0 / 292.0, 214.0 / 416.0])
    {
        assert!((got - want).abs() < 1e-12);
    }
    let (_, e) = c.get("/api/analytics/efficiency?iteration=EL2").await;
    assert!((e[0]["value"].as_f64().unwrap() - 181.0 / 88.0).abs() < 1e-12);

    let (st, t) = c
        .get("/api/analytics/details?iteration=EL3&nature=omission&min_count=5")
        .await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(t.as_array().unwrap().len(), 6);
    assert_eq!(t[0]["count"], 11);
    let (st, v) = c.get("/api/analytics/details?nature=typo").await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "{v}");
}

#[tokio::test]
async fn defect_collection_revisions() {
    let c = Client::empty();
    c.load_case_study().await;
    let (st, v) = c
        .raw("POST", "/api/defects?revision=0", CASE_STUDY_DEFECTS_CSV)
        .await;
    assert_eq!(st, StatusCode::CONFLICT, "{v}");
    let (st, v) = c.raw("POST", "/api/defects", CASE_STUDY_DEFECTS_CSV).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert!(v.contains("duplicate-id"));
    let (_, all) = c.get("/api/defects?iteration=EL1").await;
    assert_eq!(all["defects"].as_array().unwrap().len(), 69);
    let rev = all["revision"].as_u64().unwrap();
    let id = all["defects"][0]["id"].as_str().unwrap().to_string();
    let (st, d) = c
        .post(
            &format!("/api/defects/{id}/tag"),
            json!({"revision": rev, "detail_tag": "Actor"}),
        )
        .await;
    assert_eq!(st, StatusCode::OK, "{d}");
    assert_eq!(d["detail_tag"], "Actor");
    let (st, _) = c
        .post(
            &format!("/api/defects/{id}/tag"),
            json!({"revision": rev, "detail_tag": "Actor"}),
        )
        .await;
    assert_eq!(st, StatusCode::CONFLICT);
    let (st, v) = c.raw("POST", "/api/defects", "id,iteration\nX,EL1\n").await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "{v}");
}

#[tokio::test]
async fn diagnosis_status_codes() {
    let c = Client::seeded();
    let vid = &quick_version().id;
    let uri = format!("/api/versions/{vid}/diagnose");
    let (st, v) = c
        .post(
            &uri,
            json!({"problem_id": "P2", "evidence": {"C09": "true"}}),
        )
        .await;
    assert_eq!(st, StatusCode::OK, "{v}");
    assert_eq!(v["problem_id"], "P2");
    let (st, v) = c.post(&uri, json!({"problem_id": "P9"})).await;
    assert_eq!((st, code(&v)), (StatusCode::NOT_FOUND, "unknown-id"));
    let (st, v) = c
        .post(
            &uri,
            json!({"problem_id": "P2", "evidence": {"people": "true"}}),
        )
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "{v}");
    let (st, v) = c
        .post(
            &uri,
            json!({"problem_id": "P2", "evidence": {"C09": "maybe"}}),
        )
        .await;
    assert_eq!((st, code(&v)), (StatusCode::BAD_REQUEST, "invalid-request"));
    let (st, v) = c.post(&uri, json!({"problem": "P2"})).await;
    assert_eq!((st, code(&v)), (StatusCode::BAD_REQUEST, "invalid-body"));
    let (st, _) = c
        .post("/api/versions/nope/diagnose", json!({"problem_id": "P2"}))
        .await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn impossible_evidence_is_unprocessable() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let mut v = quick_version().clone();
    v.id = "blocked".into();
    // P1 can never be true when every cause category is absent.
    match v.network.cpd_mut("P1").unwrap() {
        Cpd::Table(t) => t.rows[0] = vec![1.0, 0.0],
        Cpd::NoisyOr(_) => panic!("problems carry full tables"),
    }
    store.put_version(v, &sample_records()).unwrap();
    let c = Client {
        app: router(AppState::new(store)),
        _dir: dir,
    };
    let evidence: serde_json::Map<String, Value> = (1..=12)
        .map(|i| (format!("C{i:02}"), Value::from("false")))
        .collect();
    let (st, v) = c
        .post(
            "/api/versions/blocked/diagnose",
            json!({"problem_id": "P1", "evidence": evidence}),
        )
        .await;
    assert_eq!(
        (st, code(&v)),
        (StatusCode::UNPROCESSABLE_ENTITY, "evidence-inconsistent"),
        "{v}"
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn session_lifecycle_over_http() {
    let c = Client::seeded();
    c.load_case_study().await;
    let vid = quick_version().id.clone();

    let (st, s) = c
        .post("/api/sessions", json!({"model_version_id": vid}))
        .await;
    assert_eq!(st, StatusCode::CREATED, "{s}");
    let sid = s["id"].as_str().unwrap().to_string();
    let (st, v) = c
        .post("/api/sessions", json!({"model_version_id": "nope"}))
        .await;
    assert_eq!((st, code(&v)), (StatusCode::NOT_FOUND, "unknown-version"));
    let base = format!("/api/sessions/{sid}");
    let mut rev = s["revision"].as_u64().unwrap();

    let defects = case_study_defects();
    let ids: Vec<&str> = defects
        .iter()
        .filter(|d| d.iteration_id == "EL3")
        .map(|d| d.id.as_str())
        .collect();
    let (st, m) = c
        .post(
            &format!("{base}/sample"),
            json!({"revision": rev, "defect_ids": ids}),
        )
        .await;
    assert_eq!(st, StatusCode::OK, "{m}");
    rev = m["session"]["revision"].as_u64().unwrap();

    let (st, v) = c
        .post(
            &format!("{base}/advance"),
            json!({"revision": rev, "to": "identify_systematic_errors"}),
        )
        .await;
    assert_eq!((st, code(&v)), (StatusCode::BAD_REQUEST, "step-skip"));
    let (st, m) = c
        .post(
            &format!("{base}/advance"),
            json!({"revision": rev, "to": "classify"}),
        )
        .await;
    assert_eq!(st, StatusCode::OK);
    let (st, v) = c
        .post(
            &format!("{base}/advance"),
            json!({"revision": rev, "to": "classify"}),
        )
        .await;
    assert_eq!((st, code(&v)), (StatusCode::CONFLICT, "conflict"));
    rev = m["session"]["revision"].as_u64().unwrap();

    let (st, m) = c
        .post(&format!("{base}/classify"), json!({"revision": rev}))
        .await;
    assert_eq!(st, StatusCode::OK, "{m}");
    assert_eq!(m["result"]["defect_count"], 214);
    rev = m["session"]["revision"].as_u64().unwrap();
    let (_, m) = c
        .post(
            &format!("{base}/advance"),
            json!({"revision": rev, "to": "identify_systematic_errors"}),
        )
        .await;
    rev = m["session"]["revision"].as_u64().unwrap();

    for e in case_study_groupings(&defects)
        .into_iter()
        .filter(|e| e.iteration_id == "EL3")
    {
        let mut req = serde_json::to_value(&e).unwrap();
        req["revision"] = rev.into();
        let (st, m) = c.post(&format!("{base}/systematic-errors"), req).await;
        assert_eq!(st, StatusCode::OK, "{m}");
        rev = m["session"]["revision"].as_u64().unwrap();
    }
    let se = m_get_se(&c, &base, "Omitting details of Business Rules").await;
    let (_, m) = c
        .post(
            &format!("{base}/advance"),
            json!({"revision": rev, "to": "determine_causes"}),
        )
        .await;
    rev = m["session"]["revision"].as_u64().unwrap();

    let (st, m) = c
        .post(
            &format!("{base}/diagnose"),
            json!({"revision": rev, "problem_id": "P2", "evidence": {"C09": "true"}}),
        )
        .await;
    assert_eq!(st, StatusCode::OK, "{m}");
    rev = m["session"]["revision"].as_u64().unwrap();
    let (_, ledger) = c.get(&format!("{base}/ledger")).await;
    assert_eq!(ledger["queries"].as_array().unwrap().len(), 1);
    assert!(ledger["replay_max_difference"].as_f64().unwrap() <= 1e-9);

    let (st, v) = c
        .post(
            &format!("{base}/causes"),
            json!({"revision": rev, "systematic_error_id": se, "cause": {"kind": "model", "cause_id": "C09"}, "category": "input"}),
        )
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "{v}");
    let (st, m) = c
        .post(
            &format!("{base}/causes"),
            json!({"revision": rev, "systematic_error_id": se, "cause": {"kind": "model", "cause_id": "C09"},
                   "category": "people", "problem_id": "P2", "rationale": "raised twice"}),
        )
        .await;
    assert_eq!(st, StatusCode::OK, "{m}");
    let cause_id = m["result"]["cause_id"].as_str().unwrap().to_string();
    rev = m["session"]["revision"].as_u64().unwrap();
    let (st, v) = c.get(&format!("{base}/report")).await;
    assert_eq!((st, code(&v)), (StatusCode::BAD_REQUEST, "wrong-step"));

    let (_, m) = c
        .post(
            &format!("{base}/advance"),
            json!({"revision": rev, "to": "develop_actions"}),
        )
        .await;
    rev = m["session"]["revision"].as_u64().unwrap();
    let (st, v) = c
        .post(
            &format!("{base}/actions"),
            json!({"revision": rev, "linked_causes": ["DC99"], "description": "x"}),
        )
        .await;
    assert_eq!(st, StatusCode::BAD_REQUEST, "{v}");
    let (st, m) = c
        .post(
            &format!("{base}/actions"),
            json!({"revision": rev, "linked_causes": [cause_id], "description": "domain training", "owner": "lead"}),
        )
        .await;
    assert_eq!(st, StatusCode::OK, "{m}");
    let action = m["result"]["action_id"].as_str().unwrap().to_string();
    rev = m["session"]["revision"].as_u64().unwrap();
    let (st, v) = c
        .post(
            &format!("{base}/actions/{action}/status"),
            json!({"revision": rev, "status": "done"}),
        )
        .await;
    assert_eq!(
        (st, code(&v)),
        (StatusCode::BAD_REQUEST, "illegal-status-transition")
    );
    let (st, m) = c
        .post(
            &format!("{base}/actions/{action}/status"),
            json!({"revision": rev, "status": "in_progress"}),
        )
        .await;
    assert_eq!(st, StatusCode::OK, "{m}");
    rev = m["session"]["revision"].as_u64().unwrap();

    let (_, m) = c
        .post(
            &format!("{base}/advance"),
            json!({"revision": rev, "to": "document"}),
        )
        .await;
    rev = m["session"]["revision"].as_u64().unwrap();
    let (st, m) = c
        .post(&format!("{base}/report"), json!({"revision": rev}))
        .await;
    assert_eq!(st, StatusCode::OK, "{m}");
    let stored = m["result"].clone();
    let (st, json_report) = c.get(&format!("{base}/report?format=json")).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(json_report, stored);
    let (st, text) = c
        .raw("GET", &format!("{base}/report?format=text"), "")
        .await;
    assert_eq!(st, StatusCode::OK);
    for h in [
        "1. Sample",
        "2. Classification",
        "3. Systematic errors",
        "4. Causes",
        "5. Actions",
        "6. Evidence ledger",
    ] {
        assert!(text.contains(h), "{h}");
    }

    let (st, job) = c
        .post(
            &format!("/api/versions/{vid}/retrain"),
            json!({"session_ids": [sid], "options": {"max_iterations": 5, "restarts": 1}}),
        )
        .await;
    assert_eq!(st, StatusCode::ACCEPTED, "{job}");
    let job = c.wait_job(job["id"].as_str().unwrap()).await;
    assert_eq!(job["status"], "succeeded", "{job}");
    let child = job["version_id"].as_str().unwrap();
    let (_, v) = c.get(&format!("/api/versions/{child}")).await;
    assert_eq!(v["parent"], vid.as_str());
    assert_eq!(v["record_count"], 142);
    let (_, list) = c.get("/api/versions").await;
    assert_eq!(list.as_array().unwrap().len(), 2);
}

async fn m_get_se(c: &Client, base: &str, label: &str) -> String {
    let (_, s) = c.get(base).await;
    s["systematic_errors"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["label"] == label)
        .unwrap()["id"]
        .as_str()
        .unwrap()
        .to_string()
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn training_job_produces_a_version() {
    let c = Client::empty();
    let (st, v) = c
        .raw("POST", "/api/models/validate", SAMPLE_MODEL_JSON)
        .await;
    assert_eq!(st, StatusCode::OK);
    assert!(v.contains("\"valid\":true"), "{v}");
    let (st, v) = c
        .raw("POST", "/api/models/validate", "{\"format\": 1}")
        .await;
    assert_eq!(st, StatusCode::OK);
    assert!(v.contains("\"valid\":false"));
    let (st, v) = c
        .raw("POST", "/api/models/compile", SAMPLE_MODEL_JSON)
        .await;
    assert_eq!(st, StatusCode::OK, "{v}");

    let (st, model) = c.raw("POST", "/api/models", SAMPLE_MODEL_JSON).await;
    assert_eq!(st, StatusCode::CREATED, "{model}");
    let model: Value = serde_json::from_str(&model).unwrap();
    let mid = model["id"].as_str().unwrap();
    let (st, v) = c
        .post("/api/training", json!({"model_id": mid, "citations_csv": SAMPLE_CITATIONS_CSV, "options": {"restarts": 0}}))
        .await;
    assert_eq!((st, code(&v)), (StatusCode::BAD_REQUEST, "invalid-config"));
    let (st, job) = c
        .post(
            "/api/training",
            json!({"model_id": mid, "citations_csv": SAMPLE_CITATIONS_CSV, "options": {"max_iterations": 5, "restarts": 1}}),
        )
        .await;
    assert_eq!(st, StatusCode::ACCEPTED, "{job}");
    assert_eq!(job["kind"], "train");
    let job = c.wait_job(job["id"].as_str().unwrap()).await;
    assert_eq!(job["status"], "succeeded", "{job}");
    let vid = job["version_id"].as_str().unwrap();

    let (_, trace) = c.get(&format!("/api/versions/{vid}/trace")).await;
    let t = trace["loglik_trace"].as_array().unwrap();
    assert_eq!(t.len(), 6);
    assert_eq!(trace["iterations"], 5);
    assert!(t
        .windows(2)
        .all(|w| w[1].as_f64().unwrap() >= w[0].as_f64().unwrap() - 1e-9));
    let (st, net) = c.get(&format!("/api/versions/{vid}/network")).await;
    assert_eq!(st, StatusCode::OK);
    assert!(net["variables"].is_array(), "{net}");
    let (st, _) = c.get("/api/training/none").await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn concurrent_advances_one_wins() {
    let c = Client::seeded();
    c.load_case_study().await;
    let vid = quick_version().id.clone();
    let (_, s) = c.post("/api/sessions", json!({"model_version_id": vid})).await;
    let base = format!("/api/sessions/{}", s["id"].as_str().unwrap());
    let (_, m) = c
        .post(&format!("{base}/sample"), json!({"revision": s["revision"], "defect_ids": ["EL3-D001"]}))
        .await;
    let rev = m["session"]["revision"].as_u64().unwrap();
    let body = json!({"revision": rev, "to": "classify"});
    let uri = format!("{base}/advance");
    let (a, b) = tokio::join!(c.post(&uri, body.clone()), c.post(&uri, body.clone()));
    let mut statuses = [a.0.as_u16(), b.0.as_u16()];
    statuses.sort();
    assert_eq!(statuses, [200, 409], "{a:?} {b:?}");
    let (_, after) = c.get(&base).await;
    assert_eq!(after["revision"], rev + 1);
    assert_eq!(after["step"], "classify");
}
