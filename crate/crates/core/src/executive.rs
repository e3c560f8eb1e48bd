//! Plan execution with opportunity monitoring.
//!
//! Two strategies share one loop. CLO keeps the plan's causal links, senses
//! only the executed action's effects plus the opportunity facts, repairs
//! the plan when an opportunity shows up, and replans only when the rest of
//! the plan no longer validates. REPLAN senses the whole world and replans
//! from scratch, re-grounding over every object seen so far, whenever what it
//! sees differs from what it expected.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::benchgen::Benchmark;
use crate::clo::{compute_clo_from, CausalLinkTable, OpportunitySet};
use crate::fact::{FactId, State};
use crate::ground::{ground, ground_with, GroundError, GroundOptions};
use crate::pddl::{parse_domain, parse_problem, DomainDef, ParseError, ProblemDef};
use crate::planner::{plan, validate, PlanError};
use crate::repair::repair;
use crate::task::{GroundTask, Plan};
use crate::worldsim::{parse_events, EventModel, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Strategy {
    Clo,
    Replan,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Clo, Strategy::Replan];
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Clo => "CLO",
            Strategy::Replan => "REPLAN",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown strategy '{0}' (expected clo or replan)")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "clo" => Ok(Strategy::Clo),
            "replan" => Ok(Strategy::Replan),
            _ => Err(UnknownStrategy(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budgets {
    /// Whole episode.
    pub total: Duration,
    /// Each planner call.
    pub plan: Duration,
    /// Each link computation or repair round.
    pub clo: Duration,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            total: Duration::from_secs(1800),
            plan: Duration::from_secs(500),
            clo: Duration::from_secs(300),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionConfig {
    pub strategy: Strategy,
    pub budgets: Budgets,
    /// Record a line per step in [`EpisodeResult::log`].
    pub trace: bool,
    /// Hard cap on executed actions; `None` derives one from the first plan.
    pub max_steps: Option<usize>,
}

impl ExecutionConfig {
    pub fn new(strategy: Strategy) -> Self {
        ExecutionConfig {
            strategy,
            budgets: Budgets::default(),
            trace: false,
            max_steps: None,
        }
    }
}

/// Seconds spent per phase; world simulation is not counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub plan: f64,
    pub ground: f64,
    pub clo: f64,
    pub repair: f64,
    pub sense: f64,
    pub monitor: f64,
}

impl PhaseTimes {
    pub fn total(&self) -> f64 {
        self.plan + self.ground + self.clo + self.repair + self.sense + self.monitor
    }

    /// Deliberation effort: search and link bookkeeping for CLO, search and
    /// re-grounding for REPLAN.
    pub fn effort(&self) -> f64 {
        self.plan + self.ground + self.clo + self.repair
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Failure {
    Unsolvable,
    Timeout,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeResult {
    pub solved: bool,
    pub failure: Option<Failure>,
    pub executed_actions: usize,
    pub planner_calls: usize,
    pub repairs: usize,
    pub sensed_fact_reads: u64,
    pub expanded_nodes_total: u64,
    /// Sum of the phase times.
    pub wall_time: f64,
    pub times: PhaseTimes,
    pub events_fired: usize,
    pub executed: Vec<String>,
    pub log: Vec<String>,
}

/// A parsed and grounded problem plus its event model.
#[derive(Debug, Clone)]
pub struct Instance {
    pub domain: DomainDef,
    pub problem: ProblemDef,
    pub task: GroundTask,
    pub events: Arc<EventModel>,
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Ground(#[from] GroundError),
}

impl Instance {
    pub fn from_texts(domain: &str, problem: &str, events: Option<&str>) -> Result<Self, InstanceError> {
        let d = parse_domain(domain)?;
        let p = parse_problem(problem, &d)?;
        let task = ground(&d, &p)?;
        let events = match events {
            Some(e) => parse_events(e, &d, &p, &task)?,
            None => EventModel::default(),
        };
        Ok(Instance {
            domain: d,
            problem: p,
            task,
            events: Arc::new(events),
        })
    }

    pub fn from_benchmark(b: &Benchmark) -> Result<Self, InstanceError> {
        Instance::from_texts(&b.domain, &b.problem, Some(&b.events))
    }
}

/// Needs of the remaining plan are not met in `s`.
pub fn need_replanning(s: &State, plan: &Plan, task: &GroundTask) -> bool {
    !validate(task, s, plan).is_valid()
}

/// Facts CLO looks at after executing `a`: its effects and the opportunities.
pub fn focus_set(task: &GroundTask, a: usize, opportunities: &OpportunitySet) -> Vec<FactId> {
    let act = task.action(a);
    let mut f: Vec<FactId> = act.add.iter().chain(&act.del).copied().chain(opportunities.iter()).collect();
    f.sort_unstable();
    f.dedup();
    f
}

struct Episode<'a> {
    inst: &'a Instance,
    world: &'a mut World,
    cfg: &'a ExecutionConfig,
    started: Instant,
    r: EpisodeResult,
}

enum Planned {
    Ok(Plan, CausalLinkTable, OpportunitySet),
    Failed(Failure),
}

impl Episode<'_> {
    fn remaining(&self) -> Option<Duration> {
        self.cfg.budgets.total.checked_sub(self.started.elapsed())
    }

    fn note(&mut self, line: impl FnOnce() -> String) {
        if self.cfg.trace {
            self.r.log.push(line());
        }
    }

    /// Fresh plan from `s` plus its links ("PlanOpportunities").
    fn plan_opportunities(&mut self, task: &GroundTask, s: &State, timed_links: bool) -> Planned {
        let Some(left) = self.remaining() else {
            return Planned::Failed(Failure::Timeout);
        };
        let res = plan(task, s, Some(left.min(self.cfg.budgets.plan)));
        self.r.planner_calls += 1;
        self.r.expanded_nodes_total += res.stats.expanded;
        self.r.times.plan += res.stats.wall_time;
        let p = match res.outcome {
            Ok(p) => p,
            Err(PlanError::Unsolvable) => return Planned::Failed(Failure::Unsolvable),
            Err(PlanError::Timeout) => return Planned::Failed(Failure::Timeout),
        };
        let t = Instant::now();
        let (links, opp) = compute_clo_from(task, s, &p).expect("planner output always supports its links");
        if timed_links {
            let dt = t.elapsed();
            self.r.times.clo += dt.as_secs_f64();
            if dt > self.cfg.budgets.clo {
                return Planned::Failed(Failure::Timeout);
            }
        }
        Planned::Ok(p, links, opp)
    }

    fn finish(mut self, task: &GroundTask, failure: Option<Failure>) -> EpisodeResult {
        self.r.failure = failure;
        self.r.solved = failure.is_none() && task.goals.iter().all(|&g| self.world.holds(g));
        self.r.wall_time = self.r.times.total();
        self.r.events_fired = self.world.events_fired();
        self.r
    }
}

/// Runs one episode of `cfg.strategy` on `world`, which must start in the
/// instance's initial state.
pub fn run_episode(inst: &Instance, world: &mut World, cfg: &ExecutionConfig) -> EpisodeResult {
    let ep = Episode {
        inst,
        world,
        cfg,
        started: Instant::now(),
        r: EpisodeResult::default(),
    };
    match cfg.strategy {
        Strategy::Clo => run_clo(ep),
        Strategy::Replan => run_replan(ep),
    }
}

fn step_cap(cfg: &ExecutionConfig, first_plan: usize) -> usize {
    cfg.max_steps.unwrap_or(10 * first_plan + 100)
}

fn run_clo(mut ep: Episode) -> EpisodeResult {
    let inst = ep.inst;
    let task = &inst.task;
    let mut belief = task.init.clone();
    let (mut pl, mut links, mut opp) = match ep.plan_opportunities(task, &belief, true) {
        Planned::Ok(p, l, o) => (p, l, o),
        Planned::Failed(f) => return ep.finish(task, Some(f)),
    };
    let cap = step_cap(ep.cfg, pl.len());
    while let Some(&a) = pl.steps.first() {
        if ep.remaining().is_none() {
            return ep.finish(task, Some(Failure::Timeout));
        }
        if ep.r.executed_actions >= cap {
            return ep.finish(task, Some(Failure::StepLimit));
        }
        let act = task.action(a);
        ep.world.execute(act, &opp);
        ep.r.executed_actions += 1;
        ep.r.executed.push(act.to_string());

        let t = Instant::now();
        let focus = focus_set(task, a, &opp);
        let mut expected = belief.clone();
        act.progress(&mut expected);
        belief = expected.clone();
        for &f in &focus {
            belief.set(f, ep.world.holds(f));
        }
        ep.r.sensed_fact_reads += focus.len() as u64;
        // An add effect seen false means the action failed: look at why.
        if act.add.iter().any(|&f| !belief.contains(f)) {
            for &f in &act.pre {
                belief.set(f, ep.world.holds(f));
            }
            ep.r.sensed_fact_reads += act.pre.len() as u64;
        }
        pl.steps.remove(0);
        links.pop_front();
        opp = links.opportunities();
        let sensed: Vec<FactId> = opp
            .iter()
            .filter(|&f| belief.contains(f) && !expected.contains(f))
            .collect();
        ep.r.times.sense += t.elapsed().as_secs_f64();

        let t = Instant::now();
        let mut broken = false;
        for &o in &sensed {
            if !opp.contains(o) {
                continue;
            }
            let out = repair(o, &pl, &links, task, &belief);
            if !out.valid {
                broken = true;
                break;
            }
            if out.changed() {
                ep.r.repairs += 1;
                let (step, removed) = (ep.r.executed_actions, out.removed_steps.len());
                ep.note(|| format!("{step}\trepair\t{}\tremoved {removed}", task.fact_name(o)));
                pl = out.plan;
                links = out.links;
                opp = out.opportunities;
            }
        }
        let dt = t.elapsed();
        ep.r.times.repair += dt.as_secs_f64();
        if dt > ep.cfg.budgets.clo {
            return ep.finish(task, Some(Failure::Timeout));
        }

        let t = Instant::now();
        let replan = broken || need_replanning(&belief, &pl, task);
        ep.r.times.monitor += t.elapsed().as_secs_f64();
        let step = ep.r.executed_actions;
        ep.note(|| {
            let names: Vec<String> = sensed.iter().map(|&f| task.fact_name(f)).collect();
            format!("{step}\t{act}\tsensed [{}]{}", names.join(", "), if replan { "\treplan" } else { "" })
        });
        if replan {
            match ep.plan_opportunities(task, &belief, true) {
                Planned::Ok(p, l, o) => {
                    pl = p;
                    links = l;
                    opp = o;
                }
                Planned::Failed(f) => return ep.finish(task, Some(f)),
            }
        }
    }
    ep.finish(task, None)
}

/// Re-grounds the problem over the world's current objects and state. The
/// world's fact table seeds the new task, and the task's extra facts are
/// registered with the world, so ids agree on both sides.
fn reground(inst: &Instance, world: &mut World) -> GroundTask {
    let mut problem = inst.problem.clone();
    problem.objects.extend(world.extra_objects().iter().cloned());
    problem.init = world.true_facts().cloned().collect();
    let opts = GroundOptions {
        prune: true,
        seed_table: Some(world.table().clone()),
    };
    let task = ground_with(&inst.domain, &problem, opts).expect("the instance grounded before");
    world.adopt(&task.facts);
    task
}

fn run_replan(mut ep: Episode) -> EpisodeResult {
    let mut cur = ep.inst.task.clone();
    let mut belief = cur.init.clone();
    let (mut pl, mut links, mut opp) = match ep.plan_opportunities(&cur, &belief, false) {
        Planned::Ok(p, l, o) => (p, l, o),
        Planned::Failed(f) => return ep.finish(&cur, Some(f)),
    };
    let cap = step_cap(ep.cfg, pl.len());
    while let Some(&a) = pl.steps.first() {
        if ep.remaining().is_none() {
            return ep.finish(&cur, Some(Failure::Timeout));
        }
        if ep.r.executed_actions >= cap {
            return ep.finish(&cur, Some(Failure::StepLimit));
        }
        let act = cur.action(a).clone();
        ep.world.execute(&act, &opp);
        ep.r.executed_actions += 1;
        ep.r.executed.push(act.to_string());
        pl.steps.remove(0);
        // Links here only tell the world which events would matter.
        links.pop_front();
        opp = links.opportunities();

        let t = Instant::now();
        let mut expected = belief;
        act.progress(&mut expected);
        belief = ep.world.state().clone();
        ep.r.sensed_fact_reads += ep.world.universe() as u64;
        let changed = belief != expected;
        ep.r.times.sense += t.elapsed().as_secs_f64();
        let step = ep.r.executed_actions;
        ep.note(|| format!("{step}\t{act}{}", if changed { "\treplan" } else { "" }));
        if changed {
            let t = Instant::now();
            cur = reground(ep.inst, ep.world);
            ep.r.times.ground += t.elapsed().as_secs_f64();
            belief = belief.resized(cur.num_facts());
            match ep.plan_opportunities(&cur, &belief, false) {
                Planned::Ok(p, l, o) => {
                    pl = p;
                    links = l;
                    opp = o;
                }
                Planned::Failed(f) => return ep.finish(&cur, Some(f)),
            }
        }
    }
    ep.finish(&cur, None)
}
