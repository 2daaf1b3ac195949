//! Transport-independent request routing.
//!
//! Every response body is `{"ok":true,"data":...}` or
//! `{"ok":false,"error":{"code":...,"message":...}}`.

use std::sync::{PoisonError, RwLock};

use percent_encoding::percent_decode_str;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use workanno_core::annotations::{Filter, Metadata, Scope};
use workanno_core::corpus::{NodeId, Work};
use workanno_core::porter::NormalizationRule;
use workanno_core::sources::WorkEntry;
use workanno_core::tql::QueryResult;
use workanno_core::{Anchor, Annotation, AnnotationId, Kind};

use crate::error::ApiError;
use crate::workspace::{TopicSpec, Workspace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiRequest {
    pub method: String,
    /// Raw path; segments stay percent-encoded until routing.
    pub path: String,
    /// Decoded query parameters in order.
    pub query: Vec<(String, String)>,
    pub body: String,
}

impl ApiRequest {
    /// Build from a request target such as `/annotations?kind=query`.
    pub fn new(method: &str, target: &str, body: impl Into<String>) -> Self {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        ApiRequest {
            method: method.to_ascii_uppercase(),
            path: path.to_string(),
            query: form_urlencoded::parse(query.as_bytes()).into_owned().collect(),
            body: body.into(),
        }
    }

    pub fn get(target: &str) -> Self {
        Self::new("GET", target, "")
    }

    pub fn post(target: &str, body: &Value) -> Self {
        Self::new("POST", target, body.to_string())
    }

    fn param(&self, name: &str) -> Option<&str> {
        self.query
            .iter()
            .rev()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    fn number_param(&self, name: &str) -> Result<Option<usize>, ApiError> {
        self.param(name)
            .map(|v| {
                v.parse().map_err(|_| {
                    ApiError::bad_request("malformed_query", format!("{name} must be a non-negative integer, got {v:?}"))
                })
            })
            .transpose()
    }

    fn json<T: DeserializeOwned>(&self) -> Result<T, ApiError> {
        serde_json::from_str(&self.body).map_err(|e| ApiError::bad_request("malformed_body", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Value,
}

impl ApiResponse {
    pub fn ok(data: Value) -> Self {
        ApiResponse {
            status: 200,
            body: json!({ "ok": true, "data": data }),
        }
    }

    pub fn error(err: &ApiError) -> Self {
        ApiResponse {
            status: err.status,
            body: json!({ "ok": false, "error": { "code": err.code, "message": err.message } }),
        }
    }

    pub fn body_text(&self) -> String {
        self.body.to_string()
    }

    pub fn data(&self) -> &Value {
        &self.body["data"]
    }
}

pub struct Service {
    workspace: RwLock<Workspace>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryRequest {
    work: String,
    text: String,
    #[serde(default)]
    limit: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FreezeQueryRequest {
    work: String,
    text: String,
    #[serde(default)]
    metadata: Metadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FreezeFeatureRequest {
    work: String,
    key: String,
    value: String,
    #[serde(default)]
    metadata: Metadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KeywordRequest {
    keyword: String,
    targets: Vec<String>,
    #[serde(default)]
    metadata: Metadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TopicRequest {
    topic: TopicSpec,
    targets: Vec<String>,
    confidence: f64,
    #[serde(default)]
    metadata: Metadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PortRequest {
    source: String,
    dest: String,
    #[serde(default)]
    rules: Vec<NormalizationRule>,
    #[serde(default)]
    ids: Vec<String>,
    #[serde(default)]
    max_group: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ImportRequest {
    document: String,
    base: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeaturesRequest {
    table: String,
}

fn to_value<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("response data always serializes")
}

fn work_summary(entry: &WorkEntry) -> Value {
    json!({
        "work": entry.work.id(),
        "types": entry.work.types(),
        "leaves": entry.work.leaf_count(),
        "objects": entry.work.len(),
        "features": entry.features.len(),
    })
}

fn object_summary(work: &Work, id: NodeId) -> Value {
    let o = work.object(id);
    let span = o.span();
    json!({
        "anchor": o.anchor(),
        "type": o.object_type(),
        "key": o.key(),
        "text": work.text_of_id(id),
        "span": { "first": span.first, "last": span.last },
    })
}

fn object_detail(entry: &WorkEntry, id: NodeId) -> Value {
    let work = &entry.work;
    let o = work.object(id);
    let mut v = object_summary(work, id);
    v["token"] = json!(o.token());
    v["parent"] = json!(o.parent().map(|p| work.object(p).anchor()));
    v["children"] = json!(o
        .children()
        .iter()
        .map(|&c| work.object(c).anchor())
        .collect::<Vec<_>>());
    v["features"] = json!(entry.features.features_of(id).cloned().unwrap_or_default());
    v
}

fn query_result(result: &QueryResult) -> Value {
    json!({
        "count": result.matches.len(),
        "truncated": result.truncated,
        "matches": result.matches,
    })
}

fn page(req: &ApiRequest, items: Vec<&Annotation>) -> Result<Value, ApiError> {
    let offset = req.number_param("offset")?.unwrap_or(0);
    let limit = req.number_param("limit")?.unwrap_or(usize::MAX);
    let total = items.len();
    let items: Vec<&Annotation> = items.into_iter().skip(offset).take(limit).collect();
    Ok(json!({ "total": total, "annotations": items }))
}

fn decode(segment: &str) -> Result<String, ApiError> {
    percent_decode_str(segment)
        .decode_utf8()
        .map(|s| s.into_owned())
        .map_err(|_| ApiError::bad_request("invalid_path", format!("segment {segment:?} is not UTF-8")))
}

fn anchor_segment(segment: &str) -> Result<Anchor, ApiError> {
    Ok(Anchor::parse(&decode(segment)?)?)
}

impl Service {
    pub fn new(workspace: Workspace) -> Self {
        Service {
            workspace: RwLock::new(workspace),
        }
    }

    /// Run `f` with shared access to the workspace.
    pub fn read<R>(&self, f: impl FnOnce(&Workspace) -> R) -> R {
        f(&self.workspace.read().unwrap_or_else(PoisonError::into_inner))
    }

    pub fn handle(&self, req: &ApiRequest) -> ApiResponse {
        match self.route(req) {
            Ok(data) => ApiResponse::ok(data),
            Err(e) => ApiResponse::error(&e),
        }
    }

    fn route(&self, req: &ApiRequest) -> Result<Value, ApiError> {
        let segments: Vec<&str> = req.path.trim_start_matches('/').split('/').collect();
        let unknown = || ApiError::not_found("unknown_route", format!("no route for {} {}", req.method, req.path));
        match req.method.as_str() {
            "GET" => {
                let ws = self.workspace.read().unwrap_or_else(PoisonError::into_inner);
                self.get(&ws, req, &segments).unwrap_or_else(|| Err(unknown()))
            }
            "POST" => {
                let mut ws = self.workspace.write().unwrap_or_else(PoisonError::into_inner);
                self.post(&mut ws, req, &segments).unwrap_or_else(|| Err(unknown()))
            }
            _ => Err(unknown()),
        }
    }

    /// `None` when no GET route matches.
    fn get(&self, ws: &Workspace, req: &ApiRequest, segments: &[&str]) -> Option<Result<Value, ApiError>> {
        let result = match segments {
            ["works"] => Ok(Value::Array(ws.sources.works().map(work_summary).collect())),
            ["works", w] => (|| {
                let entry = ws.sources.entry(&decode(w)?)?;
                let document: Value = serde_json::from_str(&entry.work.to_document()).expect("canonical document is JSON");
                let mut v = work_summary(&entry);
                v["tree"] = document["tree"].clone();
                Ok(v)
            })(),
            ["works", w, "objects"] => (|| {
                let entry = ws.sources.entry(&decode(w)?)?;
                let work = &entry.work;
                let ids: Vec<NodeId> = match req.param("type").filter(|t| !t.is_empty()) {
                    Some(t) => {
                        let rank = work
                            .type_rank(t)
                            .ok_or_else(|| ApiError::bad_request("unknown_type", format!("unknown type {t:?}")))?;
                        work.ids_of_rank(rank).to_vec()
                    }
                    None => work.objects().map(|(id, _)| id).collect(),
                };
                let offset = req.number_param("offset")?.unwrap_or(0);
                let limit = req.number_param("limit")?.unwrap_or(usize::MAX);
                let objects: Vec<Value> = ids
                    .iter()
                    .skip(offset)
                    .take(limit)
                    .map(|&id| object_summary(work, id))
                    .collect();
                Ok(json!({ "total": ids.len(), "objects": objects }))
            })(),
            ["objects", a] => (|| {
                let anchor = anchor_segment(a)?;
                let entry = ws.sources.entry(anchor.work())?;
                let id = entry.work.node_id(&anchor)?;
                Ok(object_detail(&entry, id))
            })(),
            ["objects", a, "annotations"] => (|| {
                let anchor = anchor_segment(a)?;
                let scope: Scope = req
                    .param("scope")
                    .unwrap_or("exact")
                    .parse()
                    .map_err(|e: String| ApiError::bad_request("malformed_query", e))?;
                page(req, ws.targeting(&anchor, scope))
            })(),
            ["annotations"] => (|| {
                let kind = req
                    .param("kind")
                    .filter(|k| !k.is_empty())
                    .map(|k| k.parse::<Kind>())
                    .transpose()?;
                let metadata = req
                    .query
                    .iter()
                    .filter_map(|(k, v)| k.strip_prefix("meta.").map(|k| (k.to_string(), v.clone())))
                    .collect();
                let filter = Filter {
                    kind,
                    body_contains: req.param("q").filter(|q| !q.is_empty()).map(str::to_string),
                    work: req.param("work").filter(|w| !w.is_empty()).map(str::to_string),
                    metadata,
                };
                page(req, ws.filter(&filter))
            })(),
            ["annotations", id] => (|| {
                let id = AnnotationId(decode(id)?);
                ws.annotations
                    .get(&id)
                    .map(to_value)
                    .ok_or_else(|| ApiError::not_found("unknown_annotation", format!("no annotation {id}")))
            })(),
            ["export"] => (|| {
                let base = req
                    .param("base")
                    .ok_or_else(|| ApiError::bad_request("malformed_query", "base is required"))?;
                let document = ws.export(base)?;
                Ok(json!({ "base": base, "triples": document.lines().count(), "document": document }))
            })(),
            _ => return None,
        };
        Some(result)
    }

    fn post(&self, ws: &mut Workspace, req: &ApiRequest, segments: &[&str]) -> Option<Result<Value, ApiError>> {
        let result = match segments {
            ["works"] => ws.ingest(&req.body).map(|s| to_value(&s)),
            ["works", w, "features"] => (|| {
                let body: FeaturesRequest = req.json()?;
                Ok(to_value(&ws.load_features(&decode(w)?, &body.table)?))
            })(),
            ["query"] => (|| {
                let body: QueryRequest = req.json()?;
                Ok(query_result(&ws.query(&body.work, &body.text, body.limit)?))
            })(),
            ["annotations", "freeze-query"] => (|| {
                let body: FreezeQueryRequest = req.json()?;
                Ok(to_value(&ws.freeze_query(&body.work, &body.text, body.metadata)?))
            })(),
            ["annotations", "freeze-feature"] => (|| {
                let body: FreezeFeatureRequest = req.json()?;
                Ok(to_value(&ws.freeze_feature(&body.work, &body.key, &body.value, body.metadata)?))
            })(),
            ["annotations", "keyword"] => (|| {
                let body: KeywordRequest = req.json()?;
                Ok(to_value(&ws.keyword(&body.keyword, &body.targets, body.metadata)?))
            })(),
            ["annotations", "topic"] => (|| {
                let body: TopicRequest = req.json()?;
                Ok(to_value(&ws.topic(body.topic, &body.targets, body.confidence, body.metadata)?))
            })(),
            ["port"] => (|| {
                let body: PortRequest = req.json()?;
                Ok(to_value(&ws.port(&body.source, &body.dest, &body.rules, &body.ids, body.max_group)?))
            })(),
            ["import"] => (|| {
                let body: ImportRequest = req.json()?;
                Ok(to_value(&ws.import(&body.document, &body.base)?))
            })(),
            _ => return None,
        };
        Some(result)
    }
}
