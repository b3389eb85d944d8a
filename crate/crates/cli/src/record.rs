//! Deterministic JSON result records.
//!
//! Keys are sorted (`serde_json::Map` is a `BTreeMap`) and every float is
//! written in scientific notation with 17 significant digits, so records
//! round-trip exactly and diff byte-for-byte.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{Map, Value};

use crate::config::JobConfig;
use crate::CliError;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

struct SciFormatter;

impl Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes with sorted keys and 17-significant-digit floats, plus a newline.
pub fn to_canonical_json(value: &Value) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value.serialize(&mut ser).expect("serializing a Value into memory cannot fail");
    buf.push(b'\n');
    buf
}

pub fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Internal(format!("serialization failed: {e}")))
}

/// Job echo, inputs, outputs, provenance, tool version and seed.
#[derive(Debug, Default)]
pub struct ResultRecord {
    pub outputs: Map<String, Value>,
    pub provenance: Map<String, Value>,
}

impl ResultRecord {
    pub fn output(&mut self, key: &str, value: impl Into<Value>) {
        self.outputs.insert(key.to_string(), value.into());
    }

    pub fn provenance(&mut self, key: &str, value: impl Into<Value>) {
        self.provenance.insert(key.to_string(), value.into());
    }

    pub fn finish(self, cfg: &JobConfig) -> Value {
        let inputs: Map<String, Value> = cfg
            .values()
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let mut root = Map::new();
        root.insert("job".into(), cfg.job.name().into());
        root.insert("inputs".into(), Value::Object(inputs));
        root.insert("outputs".into(), Value::Object(self.outputs));
        root.insert("provenance".into(), Value::Object(self.provenance));
        root.insert("seed".into(), cfg.seed.into());
        root.insert("workers".into(), cfg.workers.into());
        root.insert("tool_version".into(), TOOL_VERSION.into());
        Value::Object(root)
    }
}
