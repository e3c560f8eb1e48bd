//! Plan repair by link deletion.
//!
//! When an opportunity fact becomes true on its own, every link carrying it
//! is no longer needed. A step left with no outgoing links produces nothing
//! anyone uses, so it is removed together with the links it consumed, which
//! may empty its own producers in turn.

use crate::clo::{CausalLink, CausalLinkTable, Consumer, OpportunitySet};
use crate::fact::{FactId, State};
use crate::planner::validate;
use crate::task::{ActionId, GroundTask, Plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairEvent {
    LinkDeleted(CausalLink),
    /// Original 1-based step index.
    StepRemoved(usize),
}

/// A plan under repair: removed steps are `None` until compaction.
#[derive(Debug, Clone)]
pub struct Draft {
    pub steps: Vec<Option<ActionId>>,
    pub links: CausalLinkTable,
    pub trace: Vec<RepairEvent>,
}

impl Draft {
    pub fn new(plan: &Plan, links: &CausalLinkTable) -> Self {
        Draft {
            steps: plan.steps.iter().map(|&a| Some(a)).collect(),
            links: links.clone(),
            trace: Vec::new(),
        }
    }

    /// Deletes every link carrying `o`. Returns the steps this emptied.
    fn delete_fact_links(&mut self, o: FactId) -> Vec<usize> {
        let mut emptied = Vec::new();
        for i in 1..=self.steps.len() {
            let produced = self.links.produced_mut(i);
            if produced.is_empty() {
                continue;
            }
            let mut k = 0;
            while k < produced.len() {
                if produced[k].fact == o {
                    let l = produced.remove(k);
                    self.trace.push(RepairEvent::LinkDeleted(l));
                } else {
                    k += 1;
                }
            }
            if produced.is_empty() {
                emptied.push(i);
            }
        }
        emptied
    }

    /// Deletes the links carrying `o` and removes the steps left idle.
    pub fn apply_opportunity(&mut self, o: FactId) {
        // One deletion pass reaches the fixpoint: afterwards no link carries o.
        for i in self.delete_fact_links(o) {
            self.remove_actions(i);
        }
    }

    /// Removes step `i`, whose produced-link set is empty, and cascades.
    ///
    /// Links consumed by a removed step are deleted; any producer this
    /// leaves without links joins the worklist.
    pub fn remove_actions(&mut self, i: usize) {
        let mut worklist = vec![i];
        while let Some(j) = worklist.pop() {
            if self.steps[j - 1].is_none() {
                continue;
            }
            debug_assert!(self.links.produced(j).is_empty());
            self.steps[j - 1] = None;
            self.trace.push(RepairEvent::StepRemoved(j));
            for k in 1..j {
                let produced = self.links.produced_mut(k);
                let before = produced.len();
                let mut idx = 0;
                while idx < produced.len() {
                    if produced[idx].consumer == Consumer::Step(j) {
                        let l = produced.remove(idx);
                        self.trace.push(RepairEvent::LinkDeleted(l));
                    } else {
                        idx += 1;
                    }
                }
                if before > 0 && produced.is_empty() && self.steps[k - 1].is_some() {
                    worklist.push(k);
                }
            }
        }
    }

    /// Drops removed steps and renumbers links to the compacted plan.
    pub fn compact(&self) -> (Plan, CausalLinkTable, Vec<usize>) {
        let mut new_index = vec![0; self.steps.len() + 1];
        let mut steps = Vec::new();
        let mut removed = Vec::new();
        for (i, s) in self.steps.iter().enumerate() {
            match s {
                Some(a) => {
                    steps.push(*a);
                    new_index[i + 1] = steps.len();
                }
                None => removed.push(i + 1),
            }
        }
        let links = self.links.links().map(|l| CausalLink {
            producer: new_index[l.producer],
            fact: l.fact,
            consumer: match l.consumer {
                Consumer::Step(c) => Consumer::Step(new_index[c]),
                Consumer::Goal => Consumer::Goal,
            },
        });
        let table = CausalLinkTable::from_links(steps.len(), links);
        (Plan::new(steps), table, removed)
    }
}

#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub plan: Plan,
    pub links: CausalLinkTable,
    pub opportunities: OpportunitySet,
    /// Original 1-based indices, ascending.
    pub removed_steps: Vec<usize>,
    pub trace: Vec<RepairEvent>,
    /// Whether the repaired plan still reaches the goals from the sensed state.
    pub valid: bool,
}

impl RepairOutcome {
    pub fn changed(&self) -> bool {
        !self.trace.is_empty()
    }
}

/// Repairs `plan` for the exogenous fact `o`, true in `s_now`.
///
/// A fact that is not an opportunity leaves everything unchanged.
pub fn repair(o: FactId, plan: &Plan, links: &CausalLinkTable, task: &GroundTask, s_now: &State) -> RepairOutcome {
    let opportunities = links.opportunities();
    if !opportunities.contains(o) {
        return RepairOutcome {
            plan: plan.clone(),
            links: links.clone(),
            opportunities,
            removed_steps: Vec::new(),
            trace: Vec::new(),
            valid: true,
        };
    }
    let mut draft = Draft::new(plan, links);
    draft.apply_opportunity(o);
    let (plan, links, removed_steps) = draft.compact();
    let valid = validate(task, s_now, &plan).is_valid();
    RepairOutcome {
        opportunities: links.opportunities(),
        plan,
        links,
        removed_steps,
        trace: draft.trace,
        valid,
    }
}
