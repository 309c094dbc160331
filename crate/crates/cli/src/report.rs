//! Run reports: one JSON object per invocation, or a few lines of text.

use serde::Serialize;
use serde_json::Value;

use odeq::equiv::SCOPE_NOTE;

/// Exit status of a run, a function of the result alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Negative = 1,
    Inconclusive = 2,
    Input = 3,
}

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub kind: &'static str,
    pub payload: Value,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub config: Value,
    pub result: Outcome,
    pub certificates: Vec<Value>,
    /// Wall time, only with `--timing` so that reports stay reproducible.
    pub timing_ms: Option<u64>,
    pub scope: &'static str,
}

impl Report {
    pub fn new(command: &str, inputs: Value, config: Value) -> Self {
        Report {
            command: command.to_string(),
            inputs,
            config,
            result: Outcome { kind: "error", payload: Value::Null },
            certificates: Vec::new(),
            timing_ms: None,
            scope: SCOPE_NOTE,
        }
    }

    pub fn json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Text form: the result kind, the payload fields one per line, the
    /// scope note.
    pub fn text(&self) -> String {
        let mut out = format!("{}: {}\n", self.command, self.result.kind);
        match &self.result.payload {
            Value::Object(map) => {
                for (k, v) in map {
                    out.push_str(&format!("  {k}: {}\n", flat(v)));
                }
            }
            Value::Null => {}
            other => out.push_str(&format!("  {}\n", flat(other))),
        }
        if !self.certificates.is_empty() {
            out.push_str(&format!("  certificates: {}\n", self.certificates.len()));
        }
        if let Some(ms) = self.timing_ms {
            out.push_str(&format!("  time: {ms} ms\n"));
        }
        out.push_str(&format!("note: {}\n", self.scope));
        out
    }
}

fn flat(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
