//! Independent re-validation of emitted certificates.

use serde::Serialize;
use serde_json::json;

use skorohod_core::transport::EdgeRelation;

use crate::certificate::{inputs_digest, Certificate, Check, CommandName, Decision};
use crate::commands::{self, CommandError};
use crate::input::Inputs;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub verified: bool,
    pub decision: Decision,
    pub reproduced_decision: Option<Decision>,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(&json!(self)).expect("reports serialize");
        text.push('\n');
        text
    }
}

/// Re-runs the command on the embedded inputs and re-checks embedded witnesses
/// that can be validated without the solver.
pub fn verify(cert: &Certificate) -> VerifyReport {
    let mut checks = vec![Check::new(
        "inputs digest matches the embedded inputs",
        inputs_digest(&cert.inputs) == cert.inputs_digest,
    )];
    let rerun = commands::run(cert.command.clone(), cert.inputs.clone());
    let reproduced_decision = match &rerun {
        Ok(fresh) => {
            checks.push(Check::new("decision reproduced", fresh.decision == cert.decision));
            checks.push(Check::new("witnesses reproduced", fresh.witnesses == cert.witnesses));
            checks.push(Check::new("transcript reproduced", fresh.transcript == cert.transcript));
            Some(fresh.decision)
        }
        Err(e) => {
            checks.push(Check::new("command re-runs on embedded inputs", false).with(json!(e.to_string())));
            None
        }
    };
    match independent_checks(cert) {
        Ok(extra) => checks.extend(extra),
        Err(e) => checks.push(Check::new("embedded witnesses parse", false).with(json!(e.to_string()))),
    }
    VerifyReport {
        verified: checks.iter().all(|c| c.passed),
        decision: cert.decision,
        reproduced_decision,
        checks,
    }
}

fn independent_checks(cert: &Certificate) -> Result<Vec<Check>, CommandError> {
    let mut out = Vec::new();
    let w = &cert.witnesses;
    match (&cert.command.name, &cert.inputs) {
        (CommandName::Order | CommandName::Split | CommandName::Waybelow, Inputs::Pair { poset, mu, nu }) => {
            let relation = if cert.command.name == CommandName::Waybelow {
                EdgeRelation::WayBelow
            } else {
                EdgeRelation::Order
            };
            if !w["plan"].is_null() {
                out.push(Check::new(
                    "embedded plan re-verified without the solver",
                    commands::recheck_plan(poset, mu, nu, &w["plan"], relation)?,
                ));
            }
            let upper = &w["refusal"]["upper_set"];
            if !upper.is_null() {
                out.push(Check::new(
                    "embedded upper set separates",
                    commands::recheck_upper_set(poset, mu, nu, upper)?,
                ));
            }
        }
        (CommandName::Realize, Inputs::Chain { poset, chain }) if !w["realization"].is_null() => {
            out.push(Check::new(
                "embedded maps push forward to the chain and increase",
                commands::recheck_realization(poset, chain, &w["realization"])?,
            ));
        }
        _ => {}
    }
    Ok(out)
}
