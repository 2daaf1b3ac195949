//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Expected values come from the testkit oracles, the Python
//! golden generator under fixtures/, or hand-checked fixture facts.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use workanno_core::annotations::{
    freeze_query_draft, AnnotationDraft, AnnotationError, Body, FeatureBody, Filter, KeywordBody, Metadata,
    QueryBody, Scope, TopicBody, TopicWord,
};
use workanno_core::clock::{Clock, FixedClock};
use workanno_core::corpus::CorpusError;
use workanno_core::linked::{export_store, import_triples};
use workanno_core::porter::{
    align_tokens, align_works, port_annotation, LinkKind, NormalizationRule, PortStatus, DEFAULT_MAX_GROUP,
};
use workanno_core::tql::{run_query, Query};
use workanno_core::{Anchor, AnnotationStore, FeatureIndex, Featured, Kind, Target, Work};
use workanno_interface::{http, run_cli, ApiRequest, Service, Workspace};
use workanno_testkit::{exhaustive_min_cost, naive_matches, random_query, random_work, FeatureTable};

const NOW: &str = "2026-10-14T09:30:00Z";
const BASE: &str = "http://ex.org/";
const V1W3: &str = "W1:book/B/chapter/1/verse/1/word/3";

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures().join(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

fn clock() -> Arc<dyn Clock> {
    Arc::new(FixedClock::parse(NOW).unwrap())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn load(work: &str, table: &str) -> Result<(Work, FeatureIndex), String> {
    let work = Work::from_document(work).map_err(err)?;
    let mut features = FeatureIndex::new();
    features.load_table(&work, table).map_err(err)?;
    Ok((work, features))
}

// 1. Anchor round-trip.
fn anchor_round_trip() -> Check {
    let mut rng = StdRng::seed_from_u64(0xA1);
    let mut objects = 0;
    for i in 0..1000 {
        let tw = random_work(&mut rng, &format!("R{i}"), 4, 200);
        let expected = tw.objects();
        let work = Work::from_document(&tw.to_json()).map_err(err)?;
        ensure!(work.len() == expected.len(), "work {i}: {} objects, oracle {}", work.len(), expected.len());
        for ((id, o), t) in work.objects().zip(&expected) {
            let text = o.anchor().to_string();
            ensure!(text == t.anchor, "work {i}: anchor {text} vs oracle {}", t.anchor);
            let parsed = Anchor::parse(&text).map_err(err)?;
            ensure!(parsed == *o.anchor(), "work {i}: {text} does not parse back");
            ensure!(work.node_id(&parsed).map_err(err)? == id, "work {i}: {text} resolves elsewhere");
        }
        objects += expected.len();
    }
    Ok(format!("1000 works, {objects} objects"))
}

struct QueryCase {
    work: Work,
    features: FeatureIndex,
    objects: Vec<workanno_testkit::TestObject>,
    table: FeatureTable,
    text: String,
    oracle: Vec<Vec<String>>,
}

fn query_cases() -> Result<Vec<QueryCase>, String> {
    let mut rng = StdRng::seed_from_u64(0x0E);
    let mut cases = Vec::new();
    for i in 0..200 {
        let tw = random_work(&mut rng, &format!("Q{i}"), 4, 24);
        let objects = tw.objects();
        let table = FeatureTable::random(&mut rng, &objects);
        let q = random_query(&mut rng, &tw.types);
        let (work, features) = load(&tw.to_json(), &table.tsv)?;
        let oracle = naive_matches(&objects, &table, &q);
        cases.push(QueryCase {
            work,
            features,
            objects,
            table,
            text: q.to_text(),
            oracle,
        });
    }
    Ok(cases)
}

// 2. Query oracle equivalence.
fn query_oracle(cases: &[QueryCase]) -> Check {
    let mut matches = 0;
    for (i, c) in cases.iter().enumerate() {
        let featured = Featured::new(&c.work, &c.features);
        let query = Query::parse(&c.text).map_err(err)?;
        let result = run_query(&featured, &query, usize::MAX).map_err(err)?;
        let got: Vec<Vec<String>> = result
            .matches
            .iter()
            .map(|m| m.bindings.iter().map(|b| b.anchor.to_string()).collect())
            .collect();
        ensure!(
            got == c.oracle,
            "case {i} {}: {} matches vs oracle {}",
            c.text,
            got.len(),
            c.oracle.len()
        );
        matches += got.len();
    }
    Ok(format!("200 queries, {matches} matches"))
}

// 3. Freeze agreement.
fn freeze_agreement(cases: &[QueryCase]) -> Check {
    let clock = clock();
    let (mut frozen, mut features) = (0, 0);
    for (i, c) in cases.iter().enumerate() {
        let featured = Featured::new(&c.work, &c.features);
        if !c.oracle.is_empty() {
            let index: BTreeMap<&str, usize> =
                c.objects.iter().enumerate().map(|(i, o)| (o.anchor.as_str(), i)).collect();
            let bound: BTreeSet<usize> = c.oracle.iter().flatten().map(|a| index[a.as_str()]).collect();
            let want: Vec<String> = bound.into_iter().map(|i| c.objects[i].anchor.clone()).collect();
            let draft = freeze_query_draft(&featured, &c.text, Metadata::new(), clock.as_ref()).map_err(err)?;
            let got: Vec<String> = draft.targets.iter().map(Target::to_string).collect();
            ensure!(got == want, "case {i} {}: frozen targets differ from bound set", c.text);
            frozen += 1;
        }
        for key in ["pos", "tense", "gender"] {
            for value in ["a", "b", "c"] {
                let want = c.table.scan(&c.objects, key, value);
                let mut store = AnnotationStore::new();
                match store.freeze_feature(&featured, key, value, Metadata::new()) {
                    Ok(a) => {
                        let got: Vec<String> = a.targets.iter().map(Target::to_string).collect();
                        ensure!(got == want, "case {i}: {key}={value} targets differ from scan");
                        features += 1;
                    }
                    Err(AnnotationError::EmptyExtension { .. }) => {
                        ensure!(want.is_empty(), "case {i}: {key}={value} refused but scan finds {}", want.len())
                    }
                    Err(e) => return Err(e.to_string()),
                }
            }
        }
    }
    Ok(format!("{frozen} query freezes, {features} feature freezes"))
}

// 4. Worked-example surrogate (W1 with F1).
fn worked_example() -> Check {
    let (work, features) = load(&fixture("w1.json"), &fixture("f1.tsv"))?;
    let featured = Featured::new(&work, &features);
    let mut store = AnnotationStore::new();
    let verbs = store.freeze_feature(&featured, "pos", "verb", Metadata::new()).map_err(err)?;
    let female = store.freeze_feature(&featured, "gender", "female", Metadata::new()).map_err(err)?;
    ensure!(verbs.targets.len() == 2, "pos=verb has {} targets", verbs.targets.len());
    ensure!(female.targets.len() == 1, "gender=female has {} targets", female.targets.len());
    Ok("pos=verb 2 targets, gender=female 1 target".into())
}

// 5. Porting laws.
fn porting_laws() -> Check {
    use NormalizationRule::*;
    let mut rng = StdRng::seed_from_u64(0x9077);
    for i in 0..50 {
        let tw = random_work(&mut rng, &format!("P{i}"), 4, 60);
        let work = Work::from_document(&tw.to_json()).map_err(err)?;
        let al = align_works(&work, &work, &[Lowercase], DEFAULT_MAX_GROUP);
        ensure!(
            al.count(LinkKind::OneOne) == work.leaf_count() && al.links.len() == work.leaf_count(),
            "identity {i}: not all one_one"
        );
        let mut ids: Vec<usize> = (0..work.len()).collect();
        ids.shuffle(&mut rng);
        ids.truncate(rng.gen_range(1..=work.len().min(6)));
        ids.sort();
        let targets = ids
            .iter()
            .map(|&n| Target::Anchor(work.object(workanno_core::NodeId(n)).anchor().clone()))
            .collect();
        let ann = AnnotationDraft::new(Body::Keyword(KeywordBody { keyword: "k".into() }), targets, Metadata::new())
            .with_id(workanno_core::AnnotationId("1".into()));
        let (draft, report) = port_annotation(&ann, &work, &work, &al).map_err(err)?;
        ensure!(
            report.outcomes.iter().all(|o| o.status == PortStatus::Exact),
            "identity {i}: non-exact status"
        );
        ensure!(draft.map(|d| d.targets) == Some(ann.targets.clone()), "identity {i}: targets changed");
    }

    let (w1, features) = load(&fixture("w1.json"), &fixture("f1.tsv"))?;
    let w1d = Work::from_document(&fixture("w1d.json")).map_err(err)?;
    let al = align_works(&w1, &w1d, &[Lowercase, StripDiacritics], DEFAULT_MAX_GROUP);
    ensure!(
        al.links.len() == 5 && al.count(LinkKind::Merge) == 1,
        "W1-W1d: {} links, {} merges",
        al.links.len(),
        al.count(LinkKind::Merge)
    );
    let mut store = AnnotationStore::new();
    let verbs = store
        .freeze_feature(&Featured::new(&w1, &features), "pos", "verb", Metadata::new())
        .map_err(err)?;
    let (_, report) = port_annotation(&verbs, &w1, &w1d, &al).map_err(err)?;
    let s = &report.summary;
    ensure!(
        (s.exact, s.merged, s.split, s.modified, s.unmatched) == (1, 1, 0, 0, 0),
        "pos=verb port summary {s:?}"
    );

    // Every pair of sequences over {a, b, ab} with combined length <= 8.
    let alphabet = ["a", "b", "ab"];
    let mut seqs: Vec<Vec<String>> = vec![vec![]];
    let mut frontier = seqs.clone();
    for _ in 0..8 {
        frontier = frontier
            .iter()
            .flat_map(|s| alphabet.iter().map(move |t| [s.clone(), vec![t.to_string()]].concat()))
            .collect();
        seqs.extend(frontier.iter().cloned());
    }
    let mut pairs = 0;
    for s in &seqs {
        for d in seqs.iter().filter(|d| d.len() + s.len() <= 8) {
            let dp = align_tokens(s, d, DEFAULT_MAX_GROUP).cost;
            let brute = exhaustive_min_cost(s, d, DEFAULT_MAX_GROUP);
            ensure!(dp == brute, "{s:?} vs {d:?}: dp {dp}, exhaustive {brute}");
            pairs += 1;
        }
    }
    // Random pairs up to length 8 on each side, all group caps.
    let pool = ["a", "b", "ab", "ba", "aab", ""];
    for _ in 0..300 {
        let pick = |rng: &mut StdRng| -> Vec<String> {
            (0..rng.gen_range(0..=8)).map(|_| pool.choose(rng).unwrap().to_string()).collect()
        };
        let (s, d) = (pick(&mut rng), pick(&mut rng));
        let g = rng.gen_range(1..=4);
        let (dp, brute) = (align_tokens(&s, &d, g).cost, exhaustive_min_cost(&s, &d, g));
        ensure!(dp == brute, "{s:?} vs {d:?} (group {g}): dp {dp}, exhaustive {brute}");
    }
    Ok(format!("50 identity ports, W1-W1d 5 links/1 merge, {pairs} enumerated + 300 random DP pairs"))
}

fn random_text(rng: &mut StdRng) -> String {
    let pieces = ["a", "Zz", " ", "\"", "\\", "\n", "\t", "ë", "עב", "=", "/", "%", ":", "<x>", "😀"];
    (0..rng.gen_range(1..6)).map(|_| *pieces.choose(rng).unwrap()).collect()
}

fn random_anchor(rng: &mut StdRng) -> Anchor {
    let mut a = Anchor::root(["W1", "HUG", "w x", "é"].choose(rng).unwrap().to_string());
    for _ in 0..rng.gen_range(0..4) {
        a = a.child(["book", "verse", "t/y"].choose(rng).unwrap().to_string(), random_text(rng));
    }
    a
}

fn random_draft(rng: &mut StdRng) -> AnnotationDraft {
    let body = match rng.gen_range(0..4) {
        0 => Body::Query(QueryBody {
            language: "tql".into(),
            text: random_text(rng),
            result_count: rng.gen_range(1..1000),
        }),
        1 => Body::Feature(FeatureBody {
            key: random_text(rng),
            value: random_text(rng),
        }),
        2 => Body::Keyword(KeywordBody { keyword: random_text(rng) }),
        _ => {
            let n = rng.gen_range(1..=4);
            let mut cuts: Vec<u32> = (0..n - 1).map(|_| rng.gen_range(1..1000)).collect();
            cuts.extend([0, 1000]);
            cuts.sort();
            cuts.dedup();
            let words = cuts
                .windows(2)
                .map(|w| TopicWord {
                    word: random_text(rng),
                    weight: f64::from(w[1] - w[0]) / 1000.0,
                })
                .collect();
            Body::Topic(TopicBody {
                topic_id: format!("T{}", rng.gen_range(0..50)),
                label: random_text(rng),
                words,
                confidence: f64::from(rng.gen_range(0..=100)) / 100.0,
            })
        }
    };
    let mut targets: Vec<Target> = (0..rng.gen_range(1..4)).map(|_| Target::Anchor(random_anchor(rng))).collect();
    if rng.gen_bool(0.2) {
        targets.push(Target::Opaque(format!("http://other.org/x/{}", rng.gen_range(0..9))));
    }
    let mut metadata = Metadata::new();
    for _ in 0..rng.gen_range(0..3) {
        metadata.insert(["author", "project", "note x", "k/é"].choose(rng).unwrap().to_string(), random_text(rng));
    }
    AnnotationDraft::new(body, targets, metadata)
}

// 6. Linked-data round-trip.
fn linked_round_trip() -> Check {
    let mut four = AnnotationStore::new();
    four.load_jsonl(&fixture("four.jsonl")).map_err(err)?;
    let exported = export_store(&four, BASE).map_err(err)?;
    ensure!(exported == fixture("four.nt"), "export of four.jsonl differs from golden four.nt");

    let mut rng = StdRng::seed_from_u64(0x11D);
    let mut total = 0;
    for i in 0..100 {
        let mut original = AnnotationStore::new();
        for _ in 0..rng.gen_range(0..8) {
            original.add(random_draft(&mut rng)).map_err(err)?;
        }
        let document = export_store(&original, BASE).map_err(err)?;
        let set = import_triples(&document, BASE).map_err(|e| format!("set {i}: {e}"))?;
        let mut local = AnnotationStore::new();
        for _ in 0..3 {
            local.add(random_draft(&mut rng)).map_err(err)?;
        }
        let remap = set.apply(&mut local).map_err(err)?;
        ensure!(remap.len() == original.len(), "set {i}: {} of {} imported", remap.len(), original.len());
        for (foreign, id) in &remap {
            let before = original
                .get(&workanno_core::AnnotationId(foreign.clone()))
                .ok_or(format!("set {i}: unknown foreign id {foreign}"))?;
            let after = local.get(id).ok_or(format!("set {i}: missing local {id}"))?;
            ensure!(before.draft() == after.draft(), "set {i}: annotation {foreign} changed on round trip");
            ensure!(foreign != id.as_str(), "set {i}: id {foreign} not remapped");
        }
        total += remap.len();
    }
    Ok(format!("golden identical, 100 sets / {total} annotations round-tripped"))
}

fn four_annotation_session(ws: &mut Workspace) -> Result<(), String> {
    ws.ingest(&fixture("w1.json")).map_err(err)?;
    ws.ingest(&fixture("hug.json")).map_err(err)?;
    ws.load_features("W1", &fixture("f1.tsv")).map_err(err)?;
    let author: Metadata = [("author".to_string(), "eep".to_string())].into();
    ws.freeze_feature("W1", "pos", "verb", author.clone()).map_err(err)?;
    ws.freeze_query("W1", "[verse [word pos=verb]]", author).map_err(err)?;
    ws.keyword(
        "dioptrics",
        &["HUG:collection/C/letter/L1".into(), "HUG:collection/C/letter/L3".into()],
        Metadata::new(),
    )
    .map_err(err)?;
    let t7 = serde_json::from_str(&fixture("t7.json")).map_err(err)?;
    ws.topic(t7, &["HUG:collection/C/letter/L2".into()], 0.82, Metadata::new()).map_err(err)?;
    Ok(())
}

// 7. Two-store separation.
fn two_store_separation() -> Check {
    let dir = tempfile::tempdir().map_err(err)?;
    {
        let mut ws = Workspace::open(dir.path(), clock()).map_err(err)?;
        four_annotation_session(&mut ws)?;
    }
    for entry in std::fs::read_dir(dir.path().join("works")).map_err(err)? {
        std::fs::remove_file(entry.map_err(err)?.path()).map_err(err)?;
    }
    let ws = Workspace::open(dir.path(), clock()).map_err(|e| format!("load without works: {e}"))?;
    ensure!(ws.annotations.len() == 4, "{} annotations loaded", ws.annotations.len());
    ensure!(ws.sources.is_empty(), "works still loaded");
    let keyword = Filter {
        kind: Some(Kind::Keyword),
        ..Default::default()
    };
    ensure!(ws.filter(&keyword).len() == 1, "kind filter");
    let on_w1 = Filter {
        work: Some("W1".into()),
        ..Default::default()
    };
    ensure!(ws.filter(&on_w1).len() == 2, "work filter");
    ensure!(ws.targeting(&Anchor::parse(V1W3).unwrap(), Scope::Exact).len() == 2, "reverse lookup");

    for a in ws.annotations.iter() {
        for t in &a.targets {
            let anchor = t.anchor().unwrap();
            match ws.sources.resolve(anchor) {
                Err(CorpusError::UnknownWork(_)) => {}
                other => return Err(format!("{anchor} resolved to {other:?}")),
            }
        }
    }
    let service = Service::new(ws);
    let listed = service.handle(&ApiRequest::get("/annotations?kind=feature"));
    ensure!(listed.status == 200 && listed.data()["total"] == 1, "GET /annotations failed");
    let encoded = percent_encoding::utf8_percent_encode(V1W3, percent_encoding::NON_ALPHANUMERIC).to_string();
    let lookup = service.handle(&ApiRequest::get(&format!("/objects/{encoded}/annotations?scope=ancestors")));
    ensure!(lookup.status == 200 && lookup.data()["total"] == 2, "reverse lookup over HTTP failed");
    let object = service.handle(&ApiRequest::get(&format!("/objects/{encoded}")));
    ensure!(object.status == 404, "object read returned {}", object.status);

    // With a structurally different W1 back in place, the missing objects
    // now fail as unresolved paths while the rest resolve.
    let mut doc: Value = serde_json::from_str(&fixture("w1.json")).map_err(err)?;
    doc["tree"]["children"][0]["children"].as_array_mut().unwrap().truncate(1);
    let ws = Workspace::open(dir.path(), clock()).map_err(err)?;
    let service = Service::new(ws);
    ensure!(service.handle(&ApiRequest::new("POST", "/works", doc.to_string())).status == 200, "reingest");
    let (mut resolved, mut unresolved) = (0, 0);
    service.read(|ws| {
        for a in ws.annotations.iter().filter(|a| a.targets[0].work() == Some("W1")) {
            for t in &a.targets {
                match ws.sources.resolve(t.anchor().unwrap()) {
                    Ok(_) => resolved += 1,
                    Err(CorpusError::Unresolved { .. }) => unresolved += 1,
                    Err(e) => panic!("{t}: {e}"),
                }
            }
        }
    });
    ensure!((resolved, unresolved) == (3, 3), "resolved {resolved}, unresolved {unresolved}");
    let v2w2 = percent_encoding::utf8_percent_encode("W1:book/B/chapter/1/verse/2/word/2", percent_encoding::NON_ALPHANUMERIC)
        .to_string();
    let r = service.handle(&ApiRequest::get(&format!("/objects/{v2w2}")));
    ensure!(r.body["error"]["code"] == "unresolved_anchor", "expected unresolved_anchor, got {}", r.body_text());
    Ok("4 annotations load and filter without works; only resolution fails".into())
}

fn files_of(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn http_call(base: &str, method: &str, path: &str, body: Option<Value>) -> Result<(u16, Value), String> {
    let req = ureq::request(method, &format!("{base}{path}"));
    let result = match body {
        Some(b) => req.send_string(&b.to_string()),
        None => req.call(),
    };
    let resp = match result {
        Ok(r) => r,
        Err(ureq::Error::Status(_, r)) => r,
        Err(e) => return Err(e.to_string()),
    };
    let status = resp.status();
    let text = resp.into_string().map_err(err)?;
    Ok((status, serde_json::from_str(&text).map_err(|e| format!("{path}: {e}: {text}"))?))
}

// 8. Service contract.
fn service_contract() -> Check {
    let http_dir = tempfile::tempdir().map_err(err)?;
    let cli_dir = tempfile::tempdir().map_err(err)?;
    let service = Arc::new(Service::new(Workspace::open(http_dir.path(), clock()).map_err(err)?));
    let server = http::spawn(service, "127.0.0.1:0".parse().unwrap()).map_err(err)?;
    let url = server.url();
    let call = |method: &str, path: &str, body: Option<Value>| -> Result<Value, String> {
        let (status, v) = http_call(&url, method, path, body)?;
        ensure!(status == 200 && v["ok"] == true, "{method} {path}: {status} {v}");
        Ok(v["data"].clone())
    };

    let works = call("GET", "/works", None)?;
    ensure!(works == json!([]), "empty listing {works}");
    let w = call("POST", "/works", Some(serde_json::from_str(&fixture("w1.json")).unwrap()))?;
    ensure!(w == json!({ "work": "W1", "leaves": 6, "objects": 10 }), "ingest {w}");
    call("POST", "/works", Some(serde_json::from_str(&fixture("hug.json")).unwrap()))?;
    let f = call("POST", "/works/W1/features", Some(json!({ "table": fixture("f1.tsv") })))?;
    ensure!(f["assignments"] == 7, "features {f}");
    let a1 = call(
        "POST",
        "/annotations/freeze-feature",
        Some(json!({ "work": "W1", "key": "pos", "value": "verb", "metadata": { "author": "eep" } })),
    )?;
    ensure!(a1["id"] == "1" && a1["kind"] == "feature" && a1["targets"].as_array().map(Vec::len) == Some(2), "freeze-feature {a1}");
    let a2 = call(
        "POST",
        "/annotations/freeze-query",
        Some(json!({ "work": "W1", "text": "[verse [word pos=verb]]", "metadata": { "author": "eep" } })),
    )?;
    ensure!(
        a2["id"] == "2" && a2["body"]["result_count"] == 2 && a2["metadata"]["last_run"] == NOW,
        "freeze-query {a2}"
    );
    let a3 = call(
        "POST",
        "/annotations/keyword",
        Some(json!({ "keyword": "dioptrics", "targets": ["HUG:collection/C/letter/L1", "HUG:collection/C/letter/L3"] })),
    )?;
    ensure!(a3["id"] == "3" && a3["body"] == json!({ "keyword": "dioptrics" }), "keyword {a3}");
    let topic: Value = serde_json::from_str(&fixture("t7.json")).unwrap();
    let a4 = call(
        "POST",
        "/annotations/topic",
        Some(json!({ "topic": topic, "targets": ["HUG:collection/C/letter/L2"], "confidence": 0.82 })),
    )?;
    ensure!(a4[0]["id"] == "4" && a4[0]["body"]["confidence"] == 0.82, "topic {a4}");
    let q = call("POST", "/query", Some(json!({ "work": "W1", "text": "[word pos=verb]" })))?;
    let anchors: Vec<&Value> = q["matches"].as_array().unwrap().iter().map(|m| &m["bindings"][0]["anchor"]).collect();
    ensure!(
        q["count"] == 2 && anchors == [&json!(V1W3), &json!("W1:book/B/chapter/1/verse/2/word/2")],
        "query {q}"
    );
    let encoded = percent_encoding::utf8_percent_encode(V1W3, percent_encoding::NON_ALPHANUMERIC).to_string();
    let lookup = call("GET", &format!("/objects/{encoded}/annotations?scope=exact"), None)?;
    let kinds: Vec<&Value> = lookup["annotations"].as_array().unwrap().iter().map(|a| &a["kind"]).collect();
    ensure!(kinds == [&json!("query"), &json!("feature")], "reverse lookup {lookup}");
    let export = call("GET", "/export?base=http%3A%2F%2Fex.org%2F", None)?;
    ensure!(export["document"] == fixture("four.nt"), "export differs from golden");
    let (status, missing) = http_call(&url, "GET", "/works/W9", None)?;
    ensure!(
        status == 404 && missing["ok"] == false && missing["error"]["code"] == "unknown_work",
        "error shape {missing}"
    );
    server.stop().map_err(err)?;

    let store = cli_dir.path().to_str().unwrap().to_string();
    let fx = |n: &str| fixtures().join(n).to_string_lossy().into_owned();
    let script: Vec<Vec<String>> = vec![
        vec!["ingest".into(), fx("w1.json")],
        vec!["ingest".into(), fx("hug.json")],
        vec!["features".into(), "W1".into(), fx("f1.tsv")],
        vec!["freeze-feature".into(), "W1".into(), "pos".into(), "verb".into(), "--author".into(), "eep".into()],
        vec!["freeze-query".into(), "W1".into(), "[verse [word pos=verb]]".into(), "--meta".into(), "author=eep".into()],
        vec![
            "keyword".into(),
            "dioptrics".into(),
            "--target".into(),
            "HUG:collection/C/letter/L1".into(),
            "--target".into(),
            "HUG:collection/C/letter/L3".into(),
        ],
        vec!["topic".into(), fx("t7.json"), "--target".into(), "HUG:collection/C/letter/L2".into(), "--confidence".into(), "0.82".into()],
        vec!["query".into(), "W1".into(), "[word pos=verb]".into()],
        vec!["export".into(), "--base".into(), BASE.into()],
    ];
    for step in &script {
        let mut argv = vec!["workanno".to_string(), "--store".into(), store.clone(), "--now".into(), NOW.into()];
        argv.extend(step.iter().cloned());
        let (mut out, mut errout) = (Vec::new(), Vec::new());
        let code = run_cli(&argv, &mut out, &mut errout);
        ensure!(code == 0, "cli {step:?}: exit {code}: {}", String::from_utf8_lossy(&errout));
        if step[0] == "export" {
            ensure!(out == fixture("four.nt").into_bytes(), "cli export differs from golden");
        }
    }
    let (a, b) = (files_of(http_dir.path()), files_of(cli_dir.path()));
    ensure!(a.keys().eq(b.keys()), "store layouts differ: {:?} vs {:?}", a.keys(), b.keys());
    for (name, bytes) in &a {
        ensure!(b[name] == *bytes, "{name} differs between HTTP and CLI sessions");
    }
    Ok(format!("{} store files byte-equal across HTTP and CLI", a.len()))
}

fn run(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let elapsed = start.elapsed();
    let over = limit.filter(|l| elapsed > *l);
    let limit_text = limit.map_or(String::new(), |l| format!(" / limit {}s", l.as_secs()));
    let (passed, detail) = match (&outcome, over) {
        (Ok(d), None) => (true, d.clone()),
        (Ok(d), Some(l)) => (false, format!("{d}; too slow, limit {}s", l.as_secs())),
        (Err(e), _) => (false, e.clone()),
    };
    println!(
        "{} {name}: {detail} ({:.2}s{limit_text})",
        if passed { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    passed
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let mut results = Vec::new();
    results.push(run("anchor round-trip", secs(5), anchor_round_trip));

    let build_start = Instant::now();
    let cases = query_cases();
    let build = build_start.elapsed();
    match cases {
        Ok(cases) => {
            results.push(run("query oracle equivalence", secs(30).map(|l: Duration| l.saturating_sub(build)), || {
                query_oracle(&cases)
            }));
            results.push(run("freeze agreement", None, || freeze_agreement(&cases)));
        }
        Err(e) => {
            println!("FAIL query oracle equivalence: {e}");
            println!("FAIL freeze agreement: {e}");
            results.extend([false, false]);
        }
    }
    results.push(run("worked-example surrogate", secs(1), worked_example));
    results.push(run("porting laws", secs(10), porting_laws));
    results.push(run("linked-data round-trip", secs(5), linked_round_trip));
    results.push(run("two-store separation", None, two_store_separation));
    results.push(run("service contract", None, service_contract));

    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
