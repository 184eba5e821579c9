//! The HTTP client against an in-process server speaking the JSON protocol.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use normchain::coe::{
    run_batch, ChainConfig, ChainStrategy, CoeSample, EndpointSpec, Experts, HttpEndpoint, MockEndpoint,
};
use normchain::providers::mock::{OracleClassifier, OracleGenerator};
use normchain::providers::{
    classify, embed, generate, Classifier, DecodeParams, ExpertRole, Generator, HttpProvider, ProviderError,
    ACTION_LABELS, CONSEQ_LABELS,
};
use normchain::tasks::Orientation;
use normchain::{Exec, Story};
use serde_json::{json, Value};

type Handler = dyn Fn(&str, &Value) -> (u16, Value) + Send + Sync;

struct Server {
    url: String,
    bodies: Arc<Mutex<Vec<(String, Value)>>>,
    max_active: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Option<(String, Value)> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let path = line.split_whitespace().nth(1)?.to_string();
    let mut len = 0usize;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).ok()?;
    Some((path, serde_json::from_slice(&body).ok()?))
}

fn serve(handler: Arc<Handler>, delay: Duration) -> Server {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let active = Arc::new(AtomicUsize::new(0));
    let max_active = Arc::new(AtomicUsize::new(0));
    let (b, a, m) = (bodies.clone(), active.clone(), max_active.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let (handler, b, a, m) = (handler.clone(), b.clone(), a.clone(), m.clone());
            thread::spawn(move || {
                let Some((path, body)) = read_request(&mut stream) else {
                    return;
                };
                let now = a.fetch_add(1, Ordering::SeqCst) + 1;
                m.fetch_max(now, Ordering::SeqCst);
                thread::sleep(delay);
                b.lock().unwrap().push((path.clone(), body.clone()));
                let (status, resp) = handler(&path, &body);
                a.fetch_sub(1, Ordering::SeqCst);
                let payload = resp.to_string();
                let _ = write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                );
            });
        }
    });
    Server {
        url,
        bodies,
        max_active,
    }
}

/// Serves the oracle generator and classifier over the wire.
fn oracle_handler(path: &str, body: &Value) -> (u16, Value) {
    match path {
        "/generate" => {
            let decode = DecodeParams {
                n: body["n"].as_u64().unwrap() as usize,
                top_p: body["top_p"].as_f64().unwrap(),
                max_new_tokens: body["max_new_tokens"].as_u64().unwrap() as usize,
                seed: body["seed"].as_u64().unwrap(),
            };
            let texts = OracleGenerator::new(0.5)
                .generate_texts(body["prompt"].as_str().unwrap(), &decode)
                .unwrap();
            let candidates: Vec<Value> = texts.into_iter().map(|t| json!({ "text": t })).collect();
            (200, json!({ "candidates": candidates }))
        }
        "/classify" => {
            let labels: Vec<&str> = body["labels"]
                .as_array()
                .unwrap()
                .iter()
                .map(|l| l.as_str().unwrap())
                .collect();
            let dist = OracleClassifier::perfect()
                .classify_raw(body["text"].as_str().unwrap(), &labels)
                .unwrap();
            (200, json!({ "probs": dist.probs }))
        }
        "/embed" => {
            let vectors: Vec<Value> = body["texts"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| json!([t.as_str().unwrap().len() as f64, 1.0]))
                .collect();
            (200, json!({ "vectors": vectors }))
        }
        _ => (404, json!({ "error": "no such route" })),
    }
}

fn client(url: &str, cap: usize) -> HttpProvider {
    HttpProvider::new(url, Duration::from_secs(10), cap).unwrap()
}

#[test]
fn request_fields_are_exact() {
    let server = serve(Arc::new(oracle_handler), Duration::ZERO);
    let c = client(&server.url, 4);
    let decode = DecodeParams {
        n: 3,
        seed: 11,
        ..Default::default()
    };
    let cands = generate(&c, "<|NRM|> n <|SIT|> s <|INT|> i <|M_ACT|>", &decode).unwrap();
    assert_eq!(cands.len(), 3);
    assert_eq!(cands.iter().map(|c| c.gen_index).collect::<Vec<_>>(), vec![0, 1, 2]);
    let dist = classify(&c, "<CLS>g<SEP>x @GOOD@<SEP>", &ACTION_LABELS).unwrap();
    assert_eq!(dist.prob("moral"), 1.0);
    let v = embed(&c, &["ab".to_string(), "abc".to_string()]).unwrap();
    assert_eq!(v, vec![vec![2.0, 1.0], vec![3.0, 1.0]]);

    let bodies = server.bodies.lock().unwrap();
    let keys = |path: &str| -> Vec<String> {
        let (_, b) = bodies.iter().find(|(p, _)| p == path).unwrap();
        let mut k: Vec<String> = b.as_object().unwrap().keys().cloned().collect();
        k.sort();
        k
    };
    assert_eq!(
        keys("/generate"),
        vec!["max_new_tokens", "n", "prompt", "seed", "top_p"]
    );
    assert_eq!(keys("/classify"), vec!["labels", "text"]);
    assert_eq!(keys("/embed"), vec!["texts"]);
    let (_, g) = bodies.iter().find(|(p, _)| p == "/generate").unwrap();
    assert_eq!(g["seed"], 11);
    assert_eq!(g["top_p"], 0.9);
    let (_, c) = bodies.iter().find(|(p, _)| p == "/classify").unwrap();
    assert_eq!(c["labels"], json!(["moral", "immoral"]));
}

#[test]
fn same_seed_same_candidates_over_the_wire() {
    let server = serve(Arc::new(oracle_handler), Duration::ZERO);
    let c = client(&server.url, 2);
    let decode = DecodeParams {
        n: 10,
        seed: 5,
        ..Default::default()
    };
    let a = generate(&c, "<|ACT|> a <|CSQ|>", &decode).unwrap();
    let b = generate(&c, "<|ACT|> a <|CSQ|>", &decode).unwrap();
    assert_eq!(a, b);
    let direct = OracleGenerator::new(0.5)
        .generate_texts("<|ACT|> a <|CSQ|>", &decode)
        .unwrap();
    assert_eq!(a.iter().map(|c| c.text.clone()).collect::<Vec<_>>(), direct);
}

#[test]
fn error_payloads_and_contract_violations() {
    let handler = |path: &str, _: &Value| -> (u16, Value) {
        match path {
            "/generate" => (200, json!({ "candidates": [{ "text": "only one" }] })),
            "/classify" => (200, json!({ "probs": { "plausible": 0.5, "implausible": 0.3 } })),
            "/embed" => (200, json!({ "vectors": [[1.0, 2.0], [1.0]] })),
            _ => (500, json!({ "error": "boom" })),
        }
    };
    let server = serve(Arc::new(handler), Duration::ZERO);
    let c = client(&server.url, 2);
    let err = generate(
        &c,
        "p",
        &DecodeParams {
            n: 2,
            ..Default::default()
        },
    )
    .unwrap_err();
    assert_eq!(err, ProviderError::TooFewCandidates { expected: 2, got: 1 });
    let err = classify(&c, "t", &CONSEQ_LABELS).unwrap_err();
    assert!(matches!(err, ProviderError::MalformedDistribution(_)));
    let err = embed(&c, &["a".into(), "b".into()]).unwrap_err();
    assert_eq!(err, ProviderError::RaggedDimensions { expected: 2, got: 1 });

    let bad = client(&format!("{}/broken", server.url), 1);
    match generate(&bad, "p", &DecodeParams::default()).unwrap_err() {
        ProviderError::Backend(m) => assert!(m.contains("500") && m.contains("boom"), "{m}"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let c = HttpProvider::new(&format!("http://127.0.0.1:{port}"), Duration::from_secs(2), 1).unwrap();
    assert!(matches!(
        generate(&c, "p", &DecodeParams::default()),
        Err(ProviderError::Transport(_))
    ));
}

#[test]
fn in_flight_requests_are_capped() {
    let server = serve(Arc::new(oracle_handler), Duration::from_millis(60));
    let c = Arc::new(client(&server.url, 2));
    let handles: Vec<_> = (0..8)
        .map(|i| {
            let c = c.clone();
            thread::spawn(move || classify(c.as_ref(), &format!("<CLS>g<SEP>{i}<SEP>"), &ACTION_LABELS).unwrap())
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let peak = server.max_active.load(Ordering::SeqCst);
    assert!((1..=2).contains(&peak), "peak {peak}");
}

fn story(i: usize) -> Story {
    Story {
        id: format!("h{i:03}"),
        norm: "Be kind.".into(),
        situation: format!("Situation {i}."),
        intention: "Wants to finish.".into(),
        moral_action: "Helps.".into(),
        moral_consequence: "Thanks.".into(),
        immoral_action: "Leaves.".into(),
        immoral_consequence: "Sad.".into(),
    }
}

#[test]
fn chain_over_http_matches_in_process_mocks() {
    let server = serve(Arc::new(oracle_handler), Duration::ZERO);
    let http = |_: ()| {
        EndpointSpec::Http(HttpEndpoint {
            url: server.url.clone(),
            timeout_secs: 10,
            max_in_flight: 4,
            decode: None,
        })
    };
    let mut remote = ChainConfig::new(ChainStrategy::ActionRanking);
    remote.decode = DecodeParams {
        n: 6,
        seed: 21,
        ..Default::default()
    };
    remote.target_orientation = Orientation::Moral;
    remote.endpoints.insert(ExpertRole::ActionGenContext, http(()));
    remote.endpoints.insert(ExpertRole::ActionClsContext, http(()));
    let mut local = remote.clone();
    local.endpoints.insert(
        ExpertRole::ActionGenContext,
        EndpointSpec::Mock(MockEndpoint::OracleGenerator { success_rate: 0.5 }),
    );
    local.endpoints.insert(
        ExpertRole::ActionClsContext,
        EndpointSpec::Mock(MockEndpoint::OracleClassifier { accuracy: 1.0, seed: 0 }),
    );

    let samples: Vec<CoeSample> = (0..12)
        .map(|i| CoeSample::for_action(&story(i), Orientation::Moral))
        .collect();
    let a = run_batch(
        &samples,
        &Experts::from_config(&remote).unwrap(),
        &remote,
        Exec::with_workers(4),
    );
    let b = run_batch(
        &samples,
        &Experts::from_config(&local).unwrap(),
        &local,
        Exec::Sequential,
    );
    assert!(a.iter().all(|t| t.is_ok()));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}
