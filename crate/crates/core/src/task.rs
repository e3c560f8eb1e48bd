//! Grounded tasks, actions and plans.

use std::fmt;

use thiserror::Error;

use crate::fact::{Fact, FactId, FactTable, State};

pub type ActionId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
    /// Sorted, deduplicated fact ids.
    pub pre: Vec<FactId>,
    pub add: Vec<FactId>,
    /// Disjoint from `add`.
    pub del: Vec<FactId>,
    pub cost: u32,
}

impl GroundAction {
    pub fn applicable(&self, s: &State) -> bool {
        s.contains_all(&self.pre)
    }

    /// Applies effects in place without checking preconditions.
    pub fn progress(&self, s: &mut State) {
        for &f in &self.del {
            s.remove(f);
        }
        for &f in &self.add {
            s.insert(f);
        }
    }

    pub fn effects(&self) -> impl Iterator<Item = FactId> + '_ {
        self.add.iter().chain(&self.del).copied()
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name, self.args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("action '{action}' is not applicable: missing {missing:?}")]
pub struct Inapplicable {
    pub action: String,
    pub missing: Vec<String>,
}

/// True iff every precondition of `a` holds in `s`.
pub fn applicable(s: &State, a: &GroundAction) -> bool {
    a.applicable(s)
}

/// `(s \ del(a)) ∪ add(a)`, refusing inapplicable actions.
pub fn apply(task: &GroundTask, s: &State, a: &GroundAction) -> Result<State, Inapplicable> {
    if !a.applicable(s) {
        return Err(Inapplicable {
            action: a.to_string(),
            missing: a
                .pre
                .iter()
                .filter(|&&f| !s.contains(f))
                .map(|&f| task.facts.get(f).to_string())
                .collect(),
        });
    }
    let mut next = s.clone();
    a.progress(&mut next);
    Ok(next)
}

/// The STRIPS task `{F, A, I, G}`.
#[derive(Debug, Clone)]
pub struct GroundTask {
    pub facts: FactTable,
    pub actions: Vec<GroundAction>,
    pub init: State,
    /// Sorted, deduplicated.
    pub goals: Vec<FactId>,
}

impl GroundTask {
    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id]
    }

    pub fn fact_id(&self, f: &Fact) -> Option<FactId> {
        self.facts.id(f)
    }

    /// Looks an action up by its display form, e.g. `move(L3, L1)`.
    pub fn find_action(&self, display: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a.to_string() == display)
    }

    pub fn goal_reached(&self, s: &State) -> bool {
        s.contains_all(&self.goals)
    }

    pub fn fact_name(&self, f: FactId) -> String {
        self.facts.get(f).to_string()
    }

    /// Builds a plan from display forms; `None` if any name is unknown.
    pub fn plan_from_names<S: AsRef<str>>(&self, names: &[S]) -> Option<Plan> {
        let steps = names
            .iter()
            .map(|n| self.find_action(n.as_ref()))
            .collect::<Option<Vec<_>>>()?;
        Some(Plan { steps })
    }
}

/// A sequence of ground actions; step `i` (1-based) is `steps[i - 1]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Plan {
    pub steps: Vec<ActionId>,
}

impl Plan {
    pub fn new(steps: Vec<ActionId>) -> Self {
        Plan { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn cost(&self, task: &GroundTask) -> u64 {
        self.steps.iter().map(|&a| task.action(a).cost as u64).sum()
    }

    pub fn names(&self, task: &GroundTask) -> Vec<String> {
        self.steps.iter().map(|&a| task.action(a).to_string()).collect()
    }

    /// Comma-separated display form.
    pub fn render(&self, task: &GroundTask) -> String {
        self.names(task).join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{EXAMPLE_PLAN, EXAMPLE_PROBLEM, ROOMS_DOMAIN};
    use crate::ground::ground_text;

    fn example() -> GroundTask {
        ground_text(ROOMS_DOMAIN, EXAMPLE_PROBLEM).unwrap()
    }

    fn id(t: &GroundTask, p: &str, args: &[&str]) -> FactId {
        t.fact_id(&Fact::of(p, args)).unwrap()
    }

    #[test]
    fn applicability_in_initial_state() {
        let t = example();
        let mv = t.action(t.find_action("move(L3, L1)").unwrap());
        let grasp = t.action(t.find_action("grasp(O1, L1)").unwrap());
        assert!(applicable(&t.init, mv));
        assert!(!applicable(&t.init, grasp));
        let err = apply(&t, &t.init, grasp).unwrap_err();
        assert_eq!(err.missing, ["at-robot(L1)", "prepared(O1)"]);
        let noop = GroundAction {
            name: "noop".into(),
            args: vec![],
            pre: vec![],
            add: vec![],
            del: vec![],
            cost: 1,
        };
        assert!(applicable(&State::new(0), &noop));
        assert_eq!(apply(&t, &t.init, &noop).unwrap(), t.init);
    }

    #[test]
    fn move_swaps_robot_location() {
        let t = example();
        let mv = t.action(t.find_action("move(L3, L1)").unwrap());
        let s = apply(&t, &t.init, mv).unwrap();
        assert!(s.contains(id(&t, "at-robot", &["L1"])));
        assert!(!s.contains(id(&t, "at-robot", &["L3"])));
    }

    #[test]
    fn example_plan_reaches_the_goals() {
        let t = example();
        let plan = t.plan_from_names(&EXAMPLE_PLAN).unwrap();
        let mut s = t.init.clone();
        for &a in &plan.steps {
            s = apply(&t, &s, t.action(a)).unwrap();
        }
        assert!(s.contains(id(&t, "holding", &["O1"])) && s.contains(id(&t, "holding", &["O2"])));
        assert_eq!(plan.cost(&t), 6);
        assert_eq!(plan.render(&t), EXAMPLE_PLAN.join(", "));
    }
}
