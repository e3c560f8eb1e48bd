//! Step-by-step plan simulation.

use crate::fact::{FactId, State};
use crate::task::{GroundTask, Plan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    /// `step` is 1-based; `missing` lists the unmet preconditions.
    StepFailed {
        step: usize,
        action: String,
        missing: Vec<FactId>,
    },
    GoalsUnmet {
        missing: Vec<FactId>,
    },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn describe(&self, task: &GroundTask) -> String {
        let names = |fs: &[FactId]| fs.iter().map(|&f| task.fact_name(f)).collect::<Vec<_>>().join(", ");
        match self {
            Verdict::Valid => "valid".to_string(),
            Verdict::StepFailed { step, action, missing } => {
                format!("step {step} ({action}) lacks {}", names(missing))
            }
            Verdict::GoalsUnmet { missing } => format!("goals unmet: {}", names(missing)),
        }
    }
}

/// Final state of the plan from `s0`, or the first failure.
pub fn simulate(task: &GroundTask, s0: &State, plan: &Plan) -> Result<State, Verdict> {
    let mut s = s0.clone();
    for (i, &a) in plan.steps.iter().enumerate() {
        let act = task.action(a);
        if !act.applicable(&s) {
            return Err(Verdict::StepFailed {
                step: i + 1,
                action: act.to_string(),
                missing: act.pre.iter().copied().filter(|&f| !s.contains(f)).collect(),
            });
        }
        act.progress(&mut s);
    }
    Ok(s)
}

pub fn validate(task: &GroundTask, s0: &State, plan: &Plan) -> Verdict {
    match simulate(task, s0, plan) {
        Err(v) => v,
        Ok(s) => {
            let missing: Vec<FactId> = task.goals.iter().copied().filter(|&g| !s.contains(g)).collect();
            if missing.is_empty() {
                Verdict::Valid
            } else {
                Verdict::GoalsUnmet { missing }
            }
        }
    }
}
