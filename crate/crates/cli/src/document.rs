//! Versioned JSON envelopes: `{"schema": "qflow/<kind>/v1", "data": ...}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{usage, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_DOCUMENT_BYTES: usize = 64 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub schema: String,
    pub data: Value,
}

pub fn schema_name(kind: &str) -> String {
    format!("qflow/{kind}/v{SCHEMA_VERSION}")
}

/// Pretty JSON with a trailing newline; field order follows the data types.
pub fn encode<T: Serialize>(kind: &str, data: &T) -> CliResult<String> {
    #[derive(Serialize)]
    struct Envelope<'a, T> {
        schema: String,
        data: &'a T,
    }
    let mut s = serde_json::to_string_pretty(&Envelope { schema: schema_name(kind), data })
        .map_err(|e| crate::error::CliError::Numerical(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Splits `qflow/<kind>/v<N>` into (kind, N).
pub fn parse_schema(schema: &str) -> CliResult<(&str, u32)> {
    let rest = match schema.strip_prefix("qflow/") {
        Some(r) => r,
        None => return usage(format!("unknown schema {schema:?}")),
    };
    let (kind, ver) = match rest.rsplit_once("/v") {
        Some(p) => p,
        None => return usage(format!("schema {schema:?} has no version")),
    };
    if kind.is_empty() || !kind.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_') {
        return usage(format!("schema {schema:?} has an invalid kind"));
    }
    match ver.parse::<u32>() {
        Ok(v) if ver.bytes().all(|b| b.is_ascii_digit()) => Ok((kind, v)),
        _ => usage(format!("schema {schema:?} has an invalid version")),
    }
}

/// Decodes a document and rejects versions other than the current one.
pub fn decode_document(text: &str) -> CliResult<Document> {
    if text.len() > MAX_DOCUMENT_BYTES {
        return usage("document too large");
    }
    let doc: Document = match serde_json::from_str(text) {
        Ok(d) => d,
        Err(e) => return usage(format!("invalid document: {e}")),
    };
    let (_, v) = parse_schema(&doc.schema)?;
    if v != SCHEMA_VERSION {
        return usage(format!("schema {} has version {v}, expected {SCHEMA_VERSION}", doc.schema));
    }
    Ok(doc)
}

impl Document {
    pub fn kind(&self) -> &str {
        parse_schema(&self.schema).map(|(k, _)| k).unwrap_or("")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn roundtrip() {
        let text = encode("params", &serde_json::json!({"n": 5, "a": 6.5})).unwrap();
        assert!(text.starts_with("{\n  \"schema\": \"qflow/params/v1\""));
        let doc = decode_document(&text).unwrap();
        assert_eq!(doc.kind(), "params");
        assert_eq!(doc.data["a"], 6.5);
    }

    #[test]
    fn rejects_other_versions_and_shapes() {
        for bad in [
            r#"{"schema":"qflow/params/v2","data":{}}"#,
            r#"{"schema":"qflow/params/v01x","data":{}}"#,
            r#"{"schema":"other/params/v1","data":{}}"#,
            r#"{"schema":"qflow//v1","data":{}}"#,
            r#"{"schema":"qflow/params","data":{}}"#,
            r#"{"schema":"qflow/params/v1"}"#,
            r#"{"schema":"qflow/params/v1","data":1,"x":2}"#,
            "not json",
        ] {
            assert!(decode_document(bad).is_err(), "{bad}");
        }
    }

    proptest! {
        #[test]
        fn never_panics(s in "\\PC*") {
            let _ = decode_document(&s);
            let _ = parse_schema(&s);
        }
    }
}
