use std::fmt;

use workanno_core::annotations::AnnotationError;
use workanno_core::features::FeatureError;
use workanno_core::linked::LinkedError;
use workanno_core::porter::PortError;
use workanno_core::sources::SourceError;
use workanno_core::tql::TqlError;
use workanno_core::{AnchorError, CorpusError};

/// An operation failure with an HTTP status and a machine-readable code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(400, code, message)
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(404, code, message)
    }

    pub fn io(context: impl fmt::Display, err: std::io::Error) -> Self {
        Self::new(500, "io_error", format!("{context}: {err}"))
    }
}

impl fmt::Display for ApiError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ApiError {}

impl From<CorpusError> for ApiError {
    fn from(e: CorpusError) -> Self {
        let message = e.to_string();
        match e {
            CorpusError::UnknownWork(_) => Self::not_found("unknown_work", message),
            CorpusError::Unresolved { .. } => Self::not_found("unresolved_anchor", message),
            CorpusError::UnknownType(_) => Self::bad_request("unknown_type", message),
            _ => Self::bad_request("invalid_work", message),
        }
    }
}

impl From<AnchorError> for ApiError {
    fn from(e: AnchorError) -> Self {
        Self::bad_request("invalid_anchor", e.to_string())
    }
}

impl From<TqlError> for ApiError {
    fn from(e: TqlError) -> Self {
        match e {
            TqlError::UnknownType(_) => Self::bad_request("unknown_type", e.to_string()),
            TqlError::InvalidLimit => Self::bad_request("invalid_limit", e.to_string()),
            _ => Self::bad_request("query_syntax", e.to_string()),
        }
    }
}

impl From<FeatureError> for ApiError {
    fn from(e: FeatureError) -> Self {
        Self::bad_request("invalid_features", e.to_string())
    }
}

impl From<SourceError> for ApiError {
    fn from(e: SourceError) -> Self {
        match e {
            SourceError::Corpus(c) => c.into(),
            SourceError::Feature(f) => f.into(),
        }
    }
}

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        let message = e.to_string();
        match e {
            AnnotationError::Query(q) => q.into(),
            AnnotationError::EmptyResult | AnnotationError::EmptyExtension { .. } => {
                Self::new(409, "empty_result", message)
            }
            AnnotationError::NoTargets => Self::bad_request("no_targets", message),
            AnnotationError::InvalidTarget(_) => Self::bad_request("invalid_anchor", message),
            AnnotationError::InvalidTopic(_) => Self::bad_request("invalid_topic", message),
            AnnotationError::UnknownKind(_) => Self::bad_request("unknown_kind", message),
            AnnotationError::Malformed { .. } => Self::new(500, "store_corrupt", message),
            AnnotationError::Io { .. } => Self::new(500, "io_error", message),
        }
    }
}

impl From<PortError> for ApiError {
    fn from(e: PortError) -> Self {
        let message = e.to_string();
        match e {
            PortError::ForeignTarget { .. } => Self::bad_request("foreign_target", message),
            PortError::Unresolved { source, .. } => {
                let mut err = ApiError::from(source);
                err.message = message;
                err
            }
            PortError::AlignmentMismatch { .. } => Self::new(500, "internal", message),
        }
    }
}

impl From<LinkedError> for ApiError {
    fn from(e: LinkedError) -> Self {
        let message = e.to_string();
        match e {
            LinkedError::Annotation(a) => a.into(),
            LinkedError::MalformedBase { .. } => Self::bad_request("invalid_base", message),
            LinkedError::UnknownKind { .. } => Self::bad_request("unknown_kind", message),
            LinkedError::MissingTarget { .. } => Self::bad_request("no_targets", message),
            _ => Self::bad_request("malformed_document", message),
        }
    }
}
