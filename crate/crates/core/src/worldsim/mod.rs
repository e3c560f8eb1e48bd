//! Ground-truth world for execution episodes.
//!
//! The world owns its own fact table, seeded from the task's so that ids of
//! the task's facts coincide. Distractors intern new facts over fresh
//! objects, so the world's universe only grows.

mod events;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clo::OpportunitySet;
use crate::fact::{Fact, FactId, FactTable, State};
use crate::pddl::{Atom, Term, TypedName};
use crate::task::{GroundAction, GroundTask};

pub use events::{parse_events, DistractorSpec, EventInstance, EventModel};
use events::{ground_atom, unify};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldConfig {
    /// Chance that one opportunity event fires per executed action.
    pub p: f64,
    pub distractors_per_step: usize,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            p: 0.0,
            distractors_per_step: 0,
            seed: 0,
        }
    }
}

/// A scripted change applied right after a given step.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Injection {
    pub add: Vec<Fact>,
    pub del: Vec<Fact>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorldEvent {
    Executed { step: u64, action: String, ok: bool },
    Event { step: u64, name: String },
    Injected { step: u64 },
    Distractor { step: u64, fact: String },
}

impl std::fmt::Display for WorldEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WorldEvent::Executed { step, action, ok } => {
                write!(f, "{step}\texec\t{action}{}", if *ok { "" } else { "\tFAILED" })
            }
            WorldEvent::Event { step, name } => write!(f, "{step}\tevent\t{name}"),
            WorldEvent::Injected { step } => write!(f, "{step}\tinjected"),
            WorldEvent::Distractor { step, fact } => write!(f, "{step}\tdistractor\t{fact}"),
        }
    }
}

pub struct World {
    table: FactTable,
    state: State,
    rng: ChaCha8Rng,
    step: u64,
    cfg: WorldConfig,
    model: Arc<EventModel>,
    scripts: BTreeMap<u64, Vec<Injection>>,
    extra_objects: Vec<TypedName>,
    trace: Vec<WorldEvent>,
    events_fired: usize,
}

impl World {
    pub fn new(task: &GroundTask, model: Arc<EventModel>, cfg: WorldConfig) -> Self {
        World {
            table: task.facts.clone(),
            state: task.init.clone(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            step: 0,
            cfg,
            model,
            scripts: BTreeMap::new(),
            extra_objects: Vec::new(),
            trace: Vec::new(),
            events_fired: 0,
        }
    }

    /// A world with no exogenous behaviour beyond scripts.
    pub fn quiet(task: &GroundTask) -> Self {
        World::new(task, Arc::new(EventModel::default()), WorldConfig::default())
    }

    /// Registers facts of a task grounded from a copy of this world's table,
    /// so that the task's ids stay valid here.
    pub fn adopt(&mut self, facts: &FactTable) {
        for (id, f) in facts.iter().skip(self.table.len()) {
            let got = self.table.intern(f.clone());
            assert_eq!(got, id, "task table does not extend the world table");
        }
    }

    /// Queues `inj` to be applied right after executed step `step` (1-based).
    pub fn script(&mut self, step: u64, inj: Injection) {
        self.scripts.entry(step).or_default().push(inj);
    }

    pub fn table(&self) -> &FactTable {
        &self.table
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    /// Number of facts the world knows about, true or not.
    pub fn universe(&self) -> usize {
        self.table.len()
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn holds(&self, f: FactId) -> bool {
        self.state.contains(f)
    }

    pub fn holds_fact(&self, f: &Fact) -> bool {
        self.table.id(f).is_some_and(|id| self.state.contains(id))
    }

    pub fn extra_objects(&self) -> &[TypedName] {
        &self.extra_objects
    }

    pub fn events_fired(&self) -> usize {
        self.events_fired
    }

    pub fn trace(&self) -> &[WorldEvent] {
        &self.trace
    }

    pub fn true_facts(&self) -> impl Iterator<Item = &Fact> + '_ {
        self.state.iter().map(|f| self.table.get(f))
    }

    /// Executes an action given in world ids. A failed action has no effect.
    pub fn execute(&mut self, a: &GroundAction, opportunities: &OpportunitySet) -> bool {
        let ok = a.applicable(&self.state);
        if ok {
            a.progress(&mut self.state);
        }
        self.step += 1;
        self.trace.push(WorldEvent::Executed {
            step: self.step,
            action: a.to_string(),
            ok,
        });
        self.maybe_fire(opportunities);
        if let Some(injs) = self.scripts.remove(&self.step) {
            for inj in injs {
                for f in &inj.del {
                    if let Some(id) = self.table.id(f) {
                        self.state.remove(id);
                    }
                }
                for f in &inj.add {
                    let id = self.table.intern(f.clone());
                    self.state.insert(id);
                }
                self.trace.push(WorldEvent::Injected { step: self.step });
            }
        }
        for _ in 0..self.cfg.distractors_per_step {
            self.add_distractor();
        }
        ok
    }

    /// Instances that may fire now: guard holds and some added fact is a
    /// still-false opportunity.
    pub fn qualifying(&self, opportunities: &OpportunitySet) -> Vec<usize> {
        self.model
            .instances
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                e.guard.iter().all(|&g| self.state.contains(g))
                    && e.add.iter().any(|&f| opportunities.contains(f) && !self.state.contains(f))
            })
            .map(|(i, _)| i)
            .collect()
    }

    fn maybe_fire(&mut self, opportunities: &OpportunitySet) {
        if self.cfg.p <= 0.0 || self.rng.gen::<f64>() >= self.cfg.p {
            return;
        }
        let cands = self.qualifying(opportunities);
        if cands.is_empty() {
            return;
        }
        // Two stages: a kind among those with a candidate, then an instance.
        let mut kinds: Vec<usize> = cands.iter().map(|&i| self.model.instances[i].kind).collect();
        kinds.sort_unstable();
        kinds.dedup();
        let kind = kinds[self.rng.gen_range(0..kinds.len())];
        let of_kind: Vec<usize> = cands.into_iter().filter(|&i| self.model.instances[i].kind == kind).collect();
        let e = &self.model.instances[of_kind[self.rng.gen_range(0..of_kind.len())]];
        for &f in &e.del {
            self.state.remove(f);
        }
        for &f in &e.add {
            self.state.insert(f);
        }
        self.events_fired += 1;
        self.trace.push(WorldEvent::Event {
            step: self.step,
            name: e.name.clone(),
        });
    }

    fn add_distractor(&mut self) {
        let Some(spec) = self.model.distractor.clone() else {
            return;
        };
        let mut binding: Vec<(String, String)> = Vec::new();
        if let Some(anchor) = &spec.anchor {
            let found = self.state.iter().find(|&f| {
                binding.clear();
                unify(anchor, self.table.get(f), &mut binding)
            });
            if found.is_none() {
                return;
            }
        }
        let name = format!("{}{}", spec.prefix, self.extra_objects.len() + 1);
        self.extra_objects.push(TypedName::new(&name, &spec.params[0].ty));
        let fresh = &spec.params[0].name;
        let objs: Vec<String> = spec
            .params
            .iter()
            .map(|p| {
                if &p.name == fresh {
                    name.clone()
                } else {
                    binding
                        .iter()
                        .find(|(k, _)| k == &p.name)
                        .map(|(_, v)| v.clone())
                        .unwrap_or_default()
                }
            })
            .collect();
        let refs: Vec<&str> = objs.iter().map(String::as_str).collect();
        let fact = ground_atom(&spec.fact, &spec.params, &refs);
        self.trace.push(WorldEvent::Distractor {
            step: self.step,
            fact: fact.to_string(),
        });
        let id = self.table.intern(fact);
        self.state.insert(id);
    }

    /// Pairs of true facts that the model declares mutually exclusive.
    pub fn mutex_violations(&self) -> Vec<(String, String)> {
        let facts: Vec<&Fact> = self.true_facts().collect();
        let mut out = Vec::new();
        for (a, b) in &self.model.mutexes {
            for f1 in &facts {
                let mut binding = Vec::new();
                if !unify(a, f1, &mut binding) {
                    continue;
                }
                for f2 in &facts {
                    let mut b2 = binding.clone();
                    if f1 != f2 && unify(b, f2, &mut b2) {
                        out.push((f1.to_string(), f2.to_string()));
                    }
                }
            }
        }
        out
    }
}

/// Whether `pattern` could match `f` at all; used by tests and the sidecar.
pub fn matches(pattern: &Atom, f: &Fact) -> bool {
    let mut b = Vec::new();
    unify(pattern, f, &mut b)
}

/// Convenience pattern constructor: `?x` marks a variable.
pub fn pattern(pred: &str, args: &[&str]) -> Atom {
    Atom {
        predicate: pred.to_string(),
        args: args
            .iter()
            .map(|a| match a.strip_prefix('?') {
                Some(v) => Term::Var(v.to_string()),
                None => Term::Const(a.to_string()),
            })
            .collect(),
    }
}
