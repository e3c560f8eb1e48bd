//! Satisficing planner: GBFS guided by h_add, plus validation.

mod heuristic;
mod search;
mod validate;

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

pub use heuristic::{heuristic, HAdd};
pub use search::gbfs;
pub use validate::{simulate, validate, Verdict};

pub use crate::task::{applicable, apply, Inapplicable};

use crate::fact::State;
use crate::task::{ActionId, GroundTask, Plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("no plan exists")]
    Unsolvable,
    #[error("planning budget exhausted")]
    Timeout,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub expanded: u64,
    pub generated: u64,
    pub evaluated: u64,
    pub wall_time: f64,
}

impl SearchStats {
    /// Same counts, ignoring wall time.
    pub fn same_counts(&self, other: &SearchStats) -> bool {
        (self.expanded, self.generated, self.evaluated) == (other.expanded, other.generated, other.evaluated)
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub outcome: Result<Plan, PlanError>,
    pub stats: SearchStats,
}

/// Actions that can contribute to the goals: backward closure over
/// "adds a fact that a goal or a relevant action needs".
///
/// Dropping the rest changes neither h_add nor which plans exist, and it
/// keeps actions over distractor objects out of the search.
pub fn relevant_actions(task: &GroundTask) -> Vec<ActionId> {
    let n = task.num_facts();
    let mut achievers: Vec<Vec<ActionId>> = vec![Vec::new(); n];
    for (i, a) in task.actions.iter().enumerate() {
        for &f in &a.add {
            achievers[f].push(i);
        }
    }
    let mut fact_seen = vec![false; n];
    let mut relevant = vec![false; task.actions.len()];
    let mut stack: Vec<usize> = task.goals.clone();
    for &g in &task.goals {
        fact_seen[g] = true;
    }
    while let Some(f) = stack.pop() {
        for &a in &achievers[f] {
            if relevant[a] {
                continue;
            }
            relevant[a] = true;
            for &p in &task.action(a).pre {
                if !fact_seen[p] {
                    fact_seen[p] = true;
                    stack.push(p);
                }
            }
        }
    }
    (0..task.actions.len()).filter(|&a| relevant[a]).collect()
}

/// Plans from `s0`. `budget` bounds wall time; `None` means unbounded.
pub fn plan(task: &GroundTask, s0: &State, budget: Option<Duration>) -> SearchResult {
    let start = Instant::now();
    let deadline = budget.map(|b| start + b);
    let mut stats = SearchStats::default();
    let actions = relevant_actions(task);
    let outcome = gbfs(task, &actions, s0, deadline, &mut stats).map(Plan::new);
    stats.wall_time = start.elapsed().as_secs_f64();
    if let Ok(p) = &outcome {
        debug_assert!(
            validate(task, s0, p).is_valid(),
            "planner returned an invalid plan: {}",
            validate(task, s0, p).describe(task)
        );
    }
    SearchResult { outcome, stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{EXAMPLE_PLAN, EXAMPLE_PROBLEM, ROOMS_DOMAIN};
    use crate::ground::ground_text;

    #[test]
    fn example_plan_is_found_by_the_planner() {
        let t = ground_text(ROOMS_DOMAIN, EXAMPLE_PROBLEM).unwrap();
        let r = plan(&t, &t.init, None);
        let p = r.outcome.unwrap();
        assert_eq!(p.names(&t), EXAMPLE_PLAN);
        assert!(r.stats.expanded <= r.stats.generated);
        assert!(r.stats.expanded > 0);
    }

    #[test]
    fn goals_in_init_give_empty_plan() {
        let mut t = ground_text(ROOMS_DOMAIN, EXAMPLE_PROBLEM).unwrap();
        t.goals = vec![0];
        assert_eq!(plan(&t, &t.init, None).outcome, Ok(Plan::default()));
    }

    #[test]
    fn no_moves_means_unsolvable() {
        let mut t = ground_text(ROOMS_DOMAIN, EXAMPLE_PROBLEM).unwrap();
        t.actions.retain(|a| a.name != "move");
        assert_eq!(plan(&t, &t.init, None).outcome, Err(PlanError::Unsolvable));
    }

    #[test]
    fn zero_budget_times_out_or_finishes_fast() {
        let t = ground_text(ROOMS_DOMAIN, EXAMPLE_PROBLEM).unwrap();
        let r = plan(&t, &t.init, Some(Duration::ZERO));
        assert!(matches!(r.outcome, Ok(_) | Err(PlanError::Timeout)));
    }

    #[test]
    fn searches_are_deterministic() {
        let t = ground_text(ROOMS_DOMAIN, EXAMPLE_PROBLEM).unwrap();
        let a = plan(&t, &t.init, None);
        let b = plan(&t, &t.init, None);
        assert_eq!(a.outcome, b.outcome);
        assert!(a.stats.same_counts(&b.stats));
    }
}
