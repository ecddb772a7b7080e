//! Structured output: versioned JSON envelopes, a canonical config digest,
//! and bit-exact float formatting shared by every CSV and JSON emitter.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Render a float with 17 significant digits (`%.16e`), enough to round-trip
/// any IEEE-754 double exactly; regression CSVs diff bit-for-bit.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV line: comma separator, LF ending, no quoting (fields are numeric
/// or simple identifiers by construction).
pub fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            out.push('{');
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push(':');
                write_canonical(&map[*k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("checked f64")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        other => out.push_str(&serde_json::to_string(other).expect("scalar serializes")),
    }
}

/// Canonical text form: key-sorted objects, floats normalized to 17
/// significant digits. Identical values yield identical bytes.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_canonical(value, &mut out);
    out
}

/// SHA-256 hex digest of the canonical form of a config (or any JSON value).
pub fn config_hash(value: &Value) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_json(value).as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Wrapper around every JSON result the CLI prints.
#[derive(Debug, Clone, Serialize)]
pub struct OutputEnvelope<T: Serialize> {
    /// Crate version that produced the output.
    pub tool_version: String,
    /// The subcommand and its arguments, echoed for provenance.
    pub command: String,
    /// Digest of the canonicalized input config.
    pub config_hash: String,
    /// RFC 3339 UTC wall-clock time of the run.
    pub timestamp: String,
    pub payload: T,
}

impl<T: Serialize> OutputEnvelope<T> {
    pub fn new(command: String, config: &Value, payload: T) -> Self {
        Self {
            tool_version: crate::TOOL_VERSION.to_string(),
            command,
            config_hash: config_hash(config),
            timestamp: chrono::Utc::now().to_rfc3339(),
            payload,
        }
    }

    /// Canonical rendering (sorted keys, 17-significant-digit floats).
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("envelope serializes");
        canonical_json(&value)
    }
}
