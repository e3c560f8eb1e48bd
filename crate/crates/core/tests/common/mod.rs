//! Random STRIPS tasks and independent oracles shared by the property suites
//! and the acceptance run.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use clo_core::clo::{compute_clo_from, CausalLink, CausalLinkTable, Consumer};
use clo_core::fact::{Fact, FactId, FactTable, State};
use clo_core::repair::repair;
use clo_core::task::{GroundAction, GroundTask, Plan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_FACTS: usize = 12;

/// Bitmask description of a task. Bit `i` is fact `p{i}`.
#[derive(Debug, Clone)]
pub struct TaskSpec {
    pub facts: usize,
    /// (pre, add, del) per action.
    pub actions: Vec<(u16, u16, u16)>,
    pub init: u16,
    /// Choices among applicable actions for the random walk.
    pub walk: Vec<usize>,
    pub goal: u16,
    /// Goals are drawn from all facts rather than from the walk's end state.
    pub free_goals: bool,
}

impl TaskSpec {
    pub fn random(rng: &mut impl Rng, free_goals: bool) -> Self {
        let facts = rng.gen_range(2..=MAX_FACTS);
        let mask = (1u32 << facts) - 1;
        let bits = |rng: &mut dyn rand::RngCore, density: f64| -> u16 {
            (0..facts).filter(|_| rng.gen_bool(density)).fold(0u16, |m, i| m | 1 << i) & mask as u16
        };
        let n = rng.gen_range(1..=10);
        let actions = (0..n)
            .map(|_| (bits(rng, 0.25), bits(rng, 0.25), bits(rng, 0.2)))
            .collect();
        let init = bits(rng, 0.3);
        let walk = (0..rng.gen_range(1..=10)).map(|_| rng.gen_range(0..100)).collect();
        let goal = bits(rng, 0.3);
        TaskSpec {
            facts,
            actions,
            init,
            walk,
            goal,
            free_goals,
        }
    }

    pub fn seeded(seed: u64, free_goals: bool) -> Self {
        TaskSpec::random(&mut ChaCha8Rng::seed_from_u64(seed), free_goals)
    }
}

fn ids(mask: u16, facts: usize) -> Vec<FactId> {
    (0..facts).filter(|i| mask >> i & 1 == 1).collect()
}

/// A task and a plan that solves it, or `None` when the walk reaches no
/// non-empty goal. With `free_goals` the plan is empty and may not solve it.
pub fn build(spec: &TaskSpec) -> Option<(GroundTask, Plan)> {
    let nf = spec.facts;
    let mut table = FactTable::new();
    for i in 0..nf {
        table.intern(Fact::of(&format!("p{i}"), &[]));
    }
    let actions: Vec<GroundAction> = spec
        .actions
        .iter()
        .enumerate()
        .map(|(i, &(pre, add, del))| {
            let add = if add == 0 { 1 << (i % nf) } else { add };
            GroundAction {
                name: format!("a{i}"),
                args: Vec::new(),
                pre: ids(pre, nf),
                add: ids(add, nf),
                del: ids(del & !add, nf),
                cost: 1,
            }
        })
        .collect();
    let init = State::from_facts(nf, ids(spec.init, nf));
    let mut s: HashSet<FactId> = init.iter().collect();
    let mut steps = Vec::new();
    if !spec.free_goals {
        for &c in &spec.walk {
            let ok: Vec<usize> = (0..actions.len())
                .filter(|&a| actions[a].pre.iter().all(|p| s.contains(p)))
                .collect();
            if ok.is_empty() {
                break;
            }
            let a = ok[c % ok.len()];
            step(&actions[a], &mut s);
            steps.push(a);
        }
    }
    let goals: Vec<FactId> = if spec.free_goals {
        ids(spec.goal, nf)
    } else {
        ids(spec.goal, nf).into_iter().filter(|g| s.contains(g)).collect()
    };
    if goals.is_empty() {
        return None;
    }
    let task = GroundTask {
        facts: table,
        actions,
        init,
        goals,
    };
    Some((task, Plan::new(steps)))
}

fn step(a: &GroundAction, s: &mut HashSet<FactId>) {
    for f in &a.del {
        s.remove(f);
    }
    s.extend(a.add.iter().copied());
}

/// Runs `plan` from `start`; `None` if some step is inapplicable.
pub fn simulate(task: &GroundTask, start: &State, plan: &Plan) -> Option<HashSet<FactId>> {
    let mut s: HashSet<FactId> = start.iter().collect();
    for &a in &plan.steps {
        let act = task.action(a);
        if !act.pre.iter().all(|p| s.contains(p)) {
            return None;
        }
        step(act, &mut s);
    }
    Some(s)
}

pub fn solves(task: &GroundTask, start: &State, plan: &Plan) -> bool {
    simulate(task, start, plan).is_some_and(|s| task.goals.iter().all(|g| s.contains(g)))
}

/// Each need gets the nearest earlier step adding it.
pub fn oracle_links(task: &GroundTask, plan: &Plan) -> BTreeSet<CausalLink> {
    let n = plan.len();
    let mut needs: Vec<(usize, Consumer, FactId)> = Vec::new();
    for c in 1..=n {
        for &f in &task.action(plan.steps[c - 1]).pre {
            needs.push((c, Consumer::Step(c), f));
        }
    }
    for &g in &task.goals {
        needs.push((n + 1, Consumer::Goal, g));
    }
    let mut out = BTreeSet::new();
    for (pos, consumer, f) in needs {
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

/// Producer adds the fact, consumer needs it, nothing in between touches it.
pub fn link_invariants(task: &GroundTask, plan: &Plan, links: &CausalLinkTable) -> Result<(), String> {
    let n = plan.len();
    for l in links.links() {
        if l.producer == 0 || l.producer > n {
            return Err(format!("{l:?}: producer out of range"));
        }
        if !task.action(plan.steps[l.producer - 1]).add.contains(&l.fact) {
            return Err(format!("{l:?}: producer does not add the fact"));
        }
        let end = match l.consumer {
            Consumer::Step(c) => {
                if c <= l.producer || c > n || !task.action(plan.steps[c - 1]).pre.contains(&l.fact) {
                    return Err(format!("{l:?}: bad consumer"));
                }
                c
            }
            Consumer::Goal => {
                if !task.goals.contains(&l.fact) {
                    return Err(format!("{l:?}: fact is not a goal"));
                }
                n + 1
            }
        };
        for k in l.producer + 1..end {
            let a = task.action(plan.steps[k - 1]);
            if a.del.contains(&l.fact) {
                return Err(format!("{l:?}: threatened by step {k}"));
            }
            if a.add.contains(&l.fact) {
                return Err(format!("{l:?}: step {k} is a later achiever"));
            }
        }
    }
    Ok(())
}

/// Links of a solving plan are sound and agree with the oracle.
pub fn check_links(task: &GroundTask, plan: &Plan) -> Result<(), String> {
    let (links, opp) = compute_clo_from(task, &task.init, plan).map_err(|e| e.to_string())?;
    link_invariants(task, plan, &links)?;
    let got: BTreeSet<CausalLink> = links.links().copied().collect();
    if got != oracle_links(task, plan) {
        return Err(format!("links {got:?} differ from the oracle {:?}", oracle_links(task, plan)));
    }
    let expect: BTreeSet<FactId> = got.iter().map(|l| l.fact).collect();
    if opp.iter().collect::<BTreeSet<_>>() != expect {
        return Err("opportunities are not the linked facts".into());
    }
    Ok(())
}

/// One randomized repair episode: execute a prefix, add an opportunity fact
/// (plus `extra` unrelated facts), repair, and check the outcome.
pub fn check_repair(task: &GroundTask, plan: &Plan, split: usize, pick: usize, extra: u16) -> Result<(), String> {
    let nf = task.num_facts();
    let j = split % plan.len().max(1);
    let before = Plan::new(plan.steps[..j].to_vec());
    let rest = Plan::new(plan.steps[j..].to_vec());
    let reached = simulate(task, &task.init, &before).ok_or("prefix is inapplicable")?;
    let s = State::from_facts(nf, reached.iter().copied());
    let (links, opp) = compute_clo_from(task, &s, &rest).map_err(|e| e.to_string())?;
    let candidates: Vec<FactId> = opp.iter().collect();
    if candidates.is_empty() {
        return Ok(());
    }
    let o = candidates[pick % candidates.len()];
    let mut sensed = s.clone();
    sensed.insert(o);
    for f in ids(extra, nf) {
        sensed.insert(f);
    }

    let out = repair(o, &rest, &links, task, &sensed);
    if out.valid != solves(task, &sensed, &out.plan) {
        return Err(format!("valid flag {} disagrees with simulation", out.valid));
    }
    let kept: Vec<usize> = (1..=rest.len()).filter(|i| !out.removed_steps.contains(i)).collect();
    if kept.iter().map(|&i| rest.steps[i - 1]).collect::<Vec<_>>() != out.plan.steps {
        return Err("repaired plan is not the kept subsequence".into());
    }
    if out.links.links().any(|l| l.fact == o) {
        return Err("a link still carries the injected fact".into());
    }
    if out.valid {
        link_invariants(task, &out.plan, &out.links)?;
        let oracle = oracle_links(task, &out.plan);
        for l in out.links.links() {
            if !oracle.contains(l) {
                return Err(format!("{l:?} not an oracle link"));
            }
        }
        if let Some(l) = oracle.iter().find(|l| l.fact != o && !out.links.links().any(|m| m == *l)) {
            return Err(format!("oracle link {l:?} lost"));
        }
    }
    let again = repair(o, &out.plan, &out.links, task, &sensed);
    if again.changed() || again.plan != out.plan || again.links != out.links {
        return Err("repair is not idempotent".into());
    }
    Ok(())
}

/// Relaxed reachability of all goals by fixpoint over every action.
pub fn relaxed_reachable(task: &GroundTask, s: &State) -> bool {
    let mut r: HashSet<FactId> = s.iter().collect();
    loop {
        let before = r.len();
        for a in &task.actions {
            if a.pre.iter().all(|p| r.contains(p)) {
                r.extend(a.add.iter().copied());
            }
        }
        if r.len() == before {
            break;
        }
    }
    task.goals.iter().all(|g| r.contains(g))
}
