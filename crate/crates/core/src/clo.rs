//! Causal links of a total-order plan and the opportunities they expose.
//!
//! Links are found by sweeping the plan backwards: each step's add effects
//! close the pending needs of later steps (or of the goal), then its own
//! preconditions become pending. Every need gets its latest achiever, and
//! needs still pending at the start must hold in the start state.

use std::collections::BTreeSet;
use std::fmt::Write;

use thiserror::Error;

use crate::fact::{FactId, State};
use crate::task::{ActionId, GroundTask, Plan};

/// Who needs a linked fact: a later step (1-based) or the goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Consumer {
    Step(usize),
    Goal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CausalLink {
    /// 1-based step index.
    pub producer: usize,
    pub fact: FactId,
    pub consumer: Consumer,
}

/// Links grouped by producer; entry `i - 1` holds the links of step `i`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CausalLinkTable {
    steps: Vec<Vec<CausalLink>>,
}

impl CausalLinkTable {
    pub fn with_steps(n: usize) -> Self {
        CausalLinkTable {
            steps: vec![Vec::new(); n],
        }
    }

    /// Builds a table from loose links, sorting each step by consumer.
    pub fn from_links(n: usize, links: impl IntoIterator<Item = CausalLink>) -> Self {
        let mut t = CausalLinkTable::with_steps(n);
        for l in links {
            t.steps[l.producer - 1].push(l);
        }
        for s in &mut t.steps {
            s.sort_by_key(|l| (l.consumer, l.fact));
        }
        t
    }

    /// Number of plan steps covered, including steps with no links.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Links produced by step `i` (1-based).
    pub fn produced(&self, i: usize) -> &[CausalLink] {
        &self.steps[i - 1]
    }

    pub fn produced_mut(&mut self, i: usize) -> &mut Vec<CausalLink> {
        &mut self.steps[i - 1]
    }

    pub fn links(&self) -> impl Iterator<Item = &CausalLink> {
        self.steps.iter().flatten()
    }

    pub fn num_links(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    pub fn opportunities(&self) -> OpportunitySet {
        OpportunitySet {
            facts: self.links().map(|l| l.fact).collect(),
        }
    }

    /// Drops step 1 and its links and shifts every index down by one.
    pub fn pop_front(&mut self) {
        if self.steps.is_empty() {
            return;
        }
        self.steps.remove(0);
        for l in self.steps.iter_mut().flatten() {
            l.producer -= 1;
            if let Consumer::Step(c) = &mut l.consumer {
                *c -= 1;
            }
        }
    }

    /// Tab-separated rows `Step, Producer, Proposition, Consumer`.
    pub fn render(&self, task: &GroundTask, plan: &Plan) -> String {
        render_links(task, |i| plan.steps[i - 1], self.links())
    }
}

/// Renders links against a step-to-action lookup; header row first.
pub fn render_links<'a>(
    task: &GroundTask,
    action_at: impl Fn(usize) -> ActionId,
    links: impl IntoIterator<Item = &'a CausalLink>,
) -> String {
    let mut out = String::from("Step\tProducer\tProposition\tConsumer\n");
    for l in links {
        let consumer = match l.consumer {
            Consumer::Step(c) => task.action(action_at(c)).to_string(),
            Consumer::Goal => "GOAL".to_string(),
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            l.producer,
            task.action(action_at(l.producer)),
            task.fact_name(l.fact),
            consumer
        );
    }
    out
}

/// Facts appearing in at least one live link.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpportunitySet {
    facts: BTreeSet<FactId>,
}

impl OpportunitySet {
    pub fn contains(&self, f: FactId) -> bool {
        self.facts.contains(&f)
    }

    pub fn iter(&self) -> impl Iterator<Item = FactId> + '_ {
        self.facts.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn names(&self, task: &GroundTask) -> Vec<String> {
        self.iter().map(|f| task.fact_name(f)).collect()
    }
}

impl FromIterator<FactId> for OpportunitySet {
    fn from_iter<I: IntoIterator<Item = FactId>>(iter: I) -> Self {
        OpportunitySet {
            facts: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidPlan {
    #[error("fact {fact} needed by {consumer:?} has no producer and does not hold initially")]
    Unsupported { fact: FactId, consumer: Consumer },
    #[error("step {step} deletes fact {fact} still needed by {consumer:?}")]
    Threatened {
        step: usize,
        fact: FactId,
        consumer: Consumer,
    },
}

pub fn compute_clo(task: &GroundTask, plan: &Plan) -> Result<(CausalLinkTable, OpportunitySet), InvalidPlan> {
    compute_clo_from(task, &task.init, plan)
}

/// As [`compute_clo`], with needs left at the start checked against `start`.
pub fn compute_clo_from(
    task: &GroundTask,
    start: &State,
    plan: &Plan,
) -> Result<(CausalLinkTable, OpportunitySet), InvalidPlan> {
    let n = plan.len();
    let mut pending: Vec<Vec<Consumer>> = vec![Vec::new(); task.num_facts()];
    for &g in &task.goals {
        pending[g].push(Consumer::Goal);
    }
    let mut table = CausalLinkTable::with_steps(n);
    for i in (1..=n).rev() {
        let a = task.action(plan.steps[i - 1]);
        for &f in &a.add {
            for c in pending[f].drain(..) {
                table.steps[i - 1].push(CausalLink {
                    producer: i,
                    fact: f,
                    consumer: c,
                });
            }
        }
        for &f in &a.del {
            if let Some(&c) = pending[f].first() {
                return Err(InvalidPlan::Threatened {
                    step: i,
                    fact: f,
                    consumer: c,
                });
            }
        }
        for &p in &a.pre {
            pending[p].push(Consumer::Step(i));
        }
        table.steps[i - 1].sort_by_key(|l| (l.consumer, l.fact));
    }
    for (f, cs) in pending.iter().enumerate() {
        if let Some(&c) = cs.first() {
            if !start.contains(f) {
                return Err(InvalidPlan::Unsupported { fact: f, consumer: c });
            }
        }
    }
    let opportunities = table.opportunities();
    Ok((table, opportunities))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::examples::{EXAMPLE_PLAN, EXAMPLE_PROBLEM, ROOMS_DOMAIN};
    use crate::fact::Fact;
    use crate::ground::ground_text;
    use crate::task::GroundAction;

    /// For each need, scan backwards for the nearest adder.
    pub(crate) fn forward_scan_links(task: &GroundTask, plan: &Plan) -> BTreeSet<CausalLink> {
        let n = plan.len();
        let mut out = BTreeSet::new();
        let mut needs: Vec<(Consumer, usize, FactId)> = Vec::new();
        for c in 1..=n {
            for &p in &task.action(plan.steps[c - 1]).pre {
                needs.push((Consumer::Step(c), c, p));
            }
        }
        for &g in &task.goals {
            needs.push((Consumer::Goal, n + 1, g));
        }
        for (consumer, pos, f) in needs {
            if let Some(k) = (1..pos).rev().find(|&k| task.action(plan.steps[k - 1]).add.contains(&f)) {
                out.insert(CausalLink {
                    producer: k,
                    fact: f,
                    consumer,
                });
            }
        }
        out
    }

    fn example() -> (GroundTask, Plan) {
        let t = ground_text(ROOMS_DOMAIN, EXAMPLE_PROBLEM).unwrap();
        let p = t.plan_from_names(&EXAMPLE_PLAN).unwrap();
        (t, p)
    }

    pub(crate) const EXAMPLE_LINKS: &str = "\
Step\tProducer\tProposition\tConsumer
1\tmove(L3, L1)\tat-robot(L1)\tprepare(O1, L1)
1\tmove(L3, L1)\tat-robot(L1)\tgrasp(O1, L1)
1\tmove(L3, L1)\tat-robot(L1)\tmove(L1, L2)
2\tprepare(O1, L1)\tprepared(O1)\tgrasp(O1, L1)
3\tgrasp(O1, L1)\tholding(O1)\tGOAL
4\tmove(L1, L2)\tat-robot(L2)\tprepare(O2, L2)
4\tmove(L1, L2)\tat-robot(L2)\tgrasp(O2, L2)
5\tprepare(O2, L2)\tprepared(O2)\tgrasp(O2, L2)
6\tgrasp(O2, L2)\tholding(O2)\tGOAL
";

    #[test]
    fn example_links() {
        let (t, p) = example();
        let (links, opp) = compute_clo(&t, &p).unwrap();
        assert_eq!(links.len(), 6);
        assert_eq!(links.num_links(), 9);
        assert_eq!(links.render(&t, &p), EXAMPLE_LINKS);
        assert_eq!(
            opp.names(&t).into_iter().collect::<BTreeSet<_>>(),
            ["at-robot(L1)", "prepared(O1)", "holding(O1)", "at-robot(L2)", "prepared(O2)", "holding(O2)"]
                .map(String::from)
                .into_iter()
                .collect()
        );
        let init_only = t.fact_id(&Fact::of("at-object", &["O1", "L1"])).unwrap();
        assert!(!opp.contains(init_only));
        assert_eq!(links.links().copied().collect::<BTreeSet<_>>(), forward_scan_links(&t, &p));
    }

    #[test]
    fn empty_plan_with_goals_in_init() {
        let (mut t, _) = example();
        t.goals = vec![0];
        let (links, opp) = compute_clo(&t, &Plan::default()).unwrap();
        assert!(links.is_empty() && opp.is_empty());
    }

    #[test]
    fn single_step_achiever() {
        let (mut t, _) = example();
        t.actions.push(GroundAction {
            name: "give".into(),
            args: vec!["O1".into()],
            pre: vec![0],
            add: vec![3],
            del: vec![],
            cost: 1,
        });
        t.goals = vec![3];
        let plan = Plan::new(vec![t.actions.len() - 1]);
        let (links, opp) = compute_clo(&t, &plan).unwrap();
        assert_eq!(
            links.produced(1),
            [CausalLink {
                producer: 1,
                fact: 3,
                consumer: Consumer::Goal
            }]
        );
        assert_eq!(opp.iter().collect::<Vec<_>>(), [3]);
    }

    #[test]
    fn invalid_plan_is_reported() {
        let (t, mut p) = example();
        p.steps.remove(1);
        let prepared = t.fact_id(&Fact::of("prepared", &["O1"])).unwrap();
        assert_eq!(
            compute_clo(&t, &p),
            Err(InvalidPlan::Unsupported {
                fact: prepared,
                consumer: Consumer::Step(2)
            })
        );
    }

    #[test]
    fn pop_front_shifts_indices() {
        let (t, p) = example();
        let (mut links, _) = compute_clo(&t, &p).unwrap();
        links.pop_front();
        let rest = Plan::new(p.steps[1..].to_vec());
        let mut s = t.init.clone();
        t.action(p.steps[0]).progress(&mut s);
        let (fresh, _) = compute_clo_from(&t, &s, &rest).unwrap();
        assert_eq!(links, fresh);
    }
}
