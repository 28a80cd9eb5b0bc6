use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use skorohod_core::transport::MassRule;
use skorohod_core::Dyadic;

use crate::input::Inputs;

/// The mathematical outcome a certificate attests to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Holds,
    Fails,
    Pass,
    PassWithDeviation,
    Refused,
}

impl Decision {
    pub fn exit_code(self) -> i32 {
        match self {
            Decision::Holds | Decision::Pass | Decision::PassWithDeviation => 0,
            Decision::Fails | Decision::Refused => 1,
        }
    }

    pub fn from_bool(holds: bool) -> Self {
        if holds {
            Decision::Holds
        } else {
            Decision::Fails
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Order,
    Split,
    Waybelow,
    Realize,
    Extend,
    Quantile,
    Portmanteau,
    Converge,
    SkorohodDemo,
}

/// Flags that influence a command's result.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Options {
    pub depth: Option<u32>,
    pub horizon: Option<usize>,
    pub tolerance: Option<Dyadic>,
    pub mass_rule: Option<MassRule>,
    #[serde(default)]
    pub check_roundtrip: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandEcho {
    pub name: CommandName,
    pub options: Options,
    /// Input files as given on the command line.
    pub files: Vec<String>,
}

/// One re-checked invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub check: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl Check {
    pub fn new(check: impl Into<String>, passed: bool) -> Self {
        Check {
            check: check.into(),
            passed,
            detail: Value::Null,
        }
    }

    pub fn with(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub command: CommandEcho,
    pub inputs_digest: String,
    pub inputs: Inputs,
    pub decision: Decision,
    pub witnesses: Value,
    pub transcript: Vec<Check>,
}

/// SHA-256 of the canonical (key-sorted, compact) JSON of the inputs.
pub fn inputs_digest(inputs: &Inputs) -> String {
    let canonical = serde_json::to_string(&json!(inputs)).expect("inputs serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

impl Certificate {
    pub fn new(command: CommandEcho, inputs: Inputs, decision: Decision, witnesses: Value, transcript: Vec<Check>) -> Self {
        Certificate {
            command,
            inputs_digest: inputs_digest(&inputs),
            inputs,
            decision,
            witnesses,
            transcript,
        }
    }

    /// Pretty-printed JSON with sorted keys and a trailing newline.
    pub fn render(&self) -> String {
        let value = serde_json::to_value(self).expect("certificates serialize");
        let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
        text.push('\n');
        text
    }
}
