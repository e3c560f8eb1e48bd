//! Experiment sweeps: families x sizes x probabilities x strategies x trials.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::io;
use std::sync::{mpsc, Arc};

use rustc_hash::FxHasher;
use serde::Serialize;
use thiserror::Error;

use crate::benchgen::{generate, Family, GenError};
use crate::executive::{run_episode, Budgets, EpisodeResult, ExecutionConfig, Instance, InstanceError, Strategy};
use crate::worldsim::{World, WorldConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub probabilities: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub trials: usize,
    pub base_seed: u64,
    pub budgets: Budgets,
    pub distractors_per_step: usize,
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            families: Family::ALL.to_vec(),
            sizes: crate::benchgen::SIZES.to_vec(),
            probabilities: vec![0.1, 0.2, 0.5],
            strategies: Strategy::ALL.to_vec(),
            trials: 30,
            base_seed: 1,
            budgets: Budgets::default(),
            distractors_per_step: 5,
            workers: 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<(), ExperimentError> {
        let empty = [
            ("families", self.families.is_empty()),
            ("sizes", self.sizes.is_empty()),
            ("probabilities", self.probabilities.is_empty()),
            ("strategies", self.strategies.is_empty()),
        ];
        if let Some((what, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(ExperimentError::Config(format!("no {what} given")));
        }
        if self.trials == 0 {
            return Err(ExperimentError::Config("trials must be at least 1".into()));
        }
        if let Some(p) = self.probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ExperimentError::Config(format!("probability {p} outside [0, 1]")));
        }
        for &f in &self.families {
            if let Some(&n) = self.sizes.iter().find(|&&n| n < f.min_size()) {
                return Err(GenError::TooSmall {
                    family: f,
                    n,
                    min: f.min_size(),
                }
                .into());
            }
        }
        if [self.budgets.total, self.budgets.plan, self.budgets.clo].iter().any(|d| d.is_zero()) {
            return Err(ExperimentError::Config("budgets must be positive".into()));
        }
        Ok(())
    }
}

/// Seed of one trial. The strategy is left out so both strategies face the
/// same event stream draws.
pub fn trial_seed(base: u64, family: Family, n: usize, p: f64, trial: usize) -> u64 {
    let mut h = FxHasher::default();
    family.name().hash(&mut h);
    n.hash(&mut h);
    ((p * 1e6).round() as u64).hash(&mut h);
    base.wrapping_add(h.finish()).wrapping_add(trial as u64)
}

/// One CSV row. Times are seconds of deliberation and sensing bookkeeping;
/// simulated action execution is not timed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub family: Family,
    pub size: usize,
    pub prob: f64,
    pub strategy: Strategy,
    pub trial: usize,
    pub seed: u64,
    pub solved: bool,
    pub failure: String,
    pub executed_actions: usize,
    pub planner_calls: usize,
    pub repairs: usize,
    pub sensed_fact_reads: u64,
    pub expanded_nodes: u64,
    pub events_fired: usize,
    pub wall_time: f64,
    pub effort_time: f64,
    pub plan_time: f64,
    pub ground_time: f64,
    pub clo_time: f64,
    pub repair_time: f64,
    pub sense_time: f64,
}

impl Row {
    /// Everything but the timing columns, which no run can reproduce.
    pub fn counts(&self) -> impl PartialEq + std::fmt::Debug + '_ {
        (
            (self.family, self.size, self.prob.to_bits(), self.strategy, self.trial, self.seed),
            (self.solved, &self.failure, self.executed_actions, self.planner_calls, self.repairs),
            (self.sensed_fact_reads, self.expanded_nodes, self.events_fired),
        )
    }
}

impl Serialize for Family {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub family: Family,
    pub size: usize,
    pub prob: f64,
    pub strategy: Strategy,
    pub trial: usize,
    pub seed: u64,
}

pub fn run_trial(inst: &Instance, t: Trial, cfg: &ExperimentConfig) -> Row {
    let wc = WorldConfig {
        p: t.prob,
        distractors_per_step: cfg.distractors_per_step,
        seed: t.seed,
    };
    let mut world = World::new(&inst.task, inst.events.clone(), wc);
    let ec = ExecutionConfig {
        budgets: cfg.budgets,
        ..ExecutionConfig::new(t.strategy)
    };
    let r = run_episode(inst, &mut world, &ec);
    row(t, &r)
}

fn row(t: Trial, r: &EpisodeResult) -> Row {
    Row {
        family: t.family,
        size: t.size,
        prob: t.prob,
        strategy: t.strategy,
        trial: t.trial,
        seed: t.seed,
        solved: r.solved,
        failure: r.failure.map(|f| format!("{f:?}").to_lowercase()).unwrap_or_default(),
        executed_actions: r.executed_actions,
        planner_calls: r.planner_calls,
        repairs: r.repairs,
        sensed_fact_reads: r.sensed_fact_reads,
        expanded_nodes: r.expanded_nodes_total,
        events_fired: r.events_fired,
        wall_time: r.wall_time,
        effort_time: r.times.effort(),
        plan_time: r.times.plan,
        ground_time: r.times.ground,
        clo_time: r.times.clo,
        repair_time: r.times.repair,
        sense_time: r.times.sense,
    }
}

/// Every trial of the sweep, in table order.
pub fn trials(cfg: &ExperimentConfig) -> Vec<Trial> {
    let mut out = Vec::new();
    for &family in &cfg.families {
        for &size in &cfg.sizes {
            for &prob in &cfg.probabilities {
                for &strategy in &cfg.strategies {
                    for trial in 0..cfg.trials {
                        out.push(Trial {
                            family,
                            size,
                            prob,
                            strategy,
                            trial,
                            seed: trial_seed(cfg.base_seed, family, size, prob, trial),
                        });
                    }
                }
            }
        }
    }
    out
}

/// Runs the sweep, handing each row to `sink` as soon as it is done.
/// Returned rows are in table order whatever the worker count.
pub fn run_experiment(cfg: &ExperimentConfig, mut sink: impl FnMut(&Row)) -> Result<Vec<Row>, ExperimentError> {
    cfg.check()?;
    let mut instances: BTreeMap<(Family, usize), Arc<Instance>> = BTreeMap::new();
    for &f in &cfg.families {
        for &n in &cfg.sizes {
            instances.insert((f, n), Arc::new(Instance::from_benchmark(&generate(f, n)?)?));
        }
    }
    let jobs = trials(cfg);
    let mut rows: Vec<Option<Row>> = vec![None; jobs.len()];
    if cfg.workers <= 1 {
        for (i, t) in jobs.iter().enumerate() {
            let r = run_trial(&instances[&(t.family, t.size)], *t, cfg);
            sink(&r);
            rows[i] = Some(r);
        }
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        let (tx, rx) = mpsc::channel();
        let instances = &instances;
        pool.in_place_scope(|s| {
            for (i, t) in jobs.iter().enumerate() {
                let tx = tx.clone();
                s.spawn(move |_| {
                    let r = run_trial(&instances[&(t.family, t.size)], *t, cfg);
                    let _ = tx.send((i, r));
                });
            }
            drop(tx);
            for (i, r) in rx {
                sink(&r);
                rows[i] = Some(r);
            }
        });
    }
    Ok(rows.into_iter().map(|r| r.expect("every trial reports")).collect())
}

/// Writes rows as CSV, flushing after each one.
pub struct CsvSink<W: io::Write> {
    w: csv::Writer<W>,
}

impl<W: io::Write> CsvSink<W> {
    pub fn new(w: W) -> Self {
        CsvSink {
            w: csv::Writer::from_writer(w),
        }
    }

    pub fn write(&mut self, r: &Row) -> Result<(), ExperimentError> {
        self.w.serialize(r)?;
        self.w.flush()?;
        Ok(())
    }
}

pub fn to_csv(rows: &[Row]) -> Result<String, ExperimentError> {
    let mut buf = Vec::new();
    {
        let mut s = CsvSink::new(&mut buf);
        for r in rows {
            s.write(r)?;
        }
    }
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub family: Family,
    pub size: usize,
    pub prob: f64,
    pub strategy: Strategy,
    pub trials: usize,
    pub solved: usize,
    /// Means over solved trials; `None` when no trial solved (a dash).
    pub executed_actions: Option<f64>,
    pub planner_calls: Option<f64>,
    pub repairs: Option<f64>,
    pub sensed_fact_reads: Option<f64>,
    pub wall_time: Option<f64>,
    pub effort_time: Option<f64>,
}

type CellKey = (Family, usize, u64, Strategy);

fn key(r: &Row) -> CellKey {
    (r.family, r.size, r.prob.to_bits(), r.strategy)
}

pub fn summarize(rows: &[Row]) -> Vec<CellSummary> {
    let mut cells: BTreeMap<CellKey, Vec<&Row>> = BTreeMap::new();
    let mut order: Vec<CellKey> = Vec::new();
    for r in rows {
        let k = key(r);
        if !cells.contains_key(&k) {
            order.push(k);
        }
        cells.entry(k).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let rs = &cells[&k];
            let ok: Vec<&&Row> = rs.iter().filter(|r| r.solved).collect();
            let mean = |f: &dyn Fn(&Row) -> f64| -> Option<f64> {
                (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64)
            };
            CellSummary {
                family: k.0,
                size: k.1,
                prob: f64::from_bits(k.2),
                strategy: k.3,
                trials: rs.len(),
                solved: ok.len(),
                executed_actions: mean(&|r| r.executed_actions as f64),
                planner_calls: mean(&|r| r.planner_calls as f64),
                repairs: mean(&|r| r.repairs as f64),
                sensed_fact_reads: mean(&|r| r.sensed_fact_reads as f64),
                wall_time: mean(&|r| r.wall_time),
                effort_time: mean(&|r| r.effort_time),
            }
        })
        .collect()
}

fn dash(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

/// Mean executed actions laid out as a table: one row per
/// size and probability, one column pair per family.
pub fn actions_table(cells: &[CellSummary]) -> String {
    let families: Vec<Family> = unique(cells.iter().map(|c| c.family));
    let strategies: Vec<Strategy> = unique(cells.iter().map(|c| c.strategy));
    let mut out = String::from("problem\tp");
    for f in &families {
        for s in &strategies {
            let _ = write!(out, "\t{f}/{s}");
        }
    }
    out.push('\n');
    let mut sizes: Vec<usize> = unique(cells.iter().map(|c| c.size));
    sizes.sort_unstable();
    let mut probs: Vec<f64> = Vec::new();
    for c in cells {
        if !probs.contains(&c.prob) {
            probs.push(c.prob);
        }
    }
    probs.sort_by(f64::total_cmp);
    for &n in &sizes {
        for &p in &probs {
            let _ = write!(out, "p-{n:02}\t{p}");
            for &f in &families {
                for &s in &strategies {
                    let c = cells
                        .iter()
                        .find(|c| c.family == f && c.size == n && c.prob == p && c.strategy == s);
                    let _ = write!(out, "\t{}", c.map_or("".to_string(), |c| dash(c.executed_actions, 1)));
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Plot data for one family: size against mean total time, one column per
/// probability and strategy.
pub fn plot_data(cells: &[CellSummary], family: Family) -> String {
    let mine: Vec<&CellSummary> = cells.iter().filter(|c| c.family == family).collect();
    let mut series: Vec<(u64, Strategy)> = Vec::new();
    for c in &mine {
        if !series.contains(&(c.prob.to_bits(), c.strategy)) {
            series.push((c.prob.to_bits(), c.strategy));
        }
    }
    let mut out = String::from("# size");
    for (p, s) in &series {
        let _ = write!(out, "\t{s}@{}", f64::from_bits(*p));
    }
    out.push('\n');
    let mut sizes: Vec<usize> = unique(mine.iter().map(|c| c.size));
    sizes.sort_unstable();
    for n in sizes {
        let _ = write!(out, "{n}");
        for (p, s) in &series {
            let c = mine.iter().find(|c| c.size == n && c.prob.to_bits() == *p && c.strategy == *s);
            let _ = write!(out, "\t{}", c.map_or("-".to_string(), |c| dash(c.wall_time, 6)));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityCheck {
    pub family: Family,
    pub strategy: Strategy,
    pub size: usize,
    /// (probability, mean executed actions) in increasing probability.
    pub means: Vec<(f64, Option<f64>)>,
    pub holds: bool,
}

type Series = Vec<(f64, Option<f64>)>;

/// Mean executed actions should not grow with the event probability.
pub fn monotonicity(cells: &[CellSummary], min_size: usize) -> Vec<MonotonicityCheck> {
    let mut groups: BTreeMap<(Family, Strategy, usize), Series> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.size >= min_size) {
        groups
            .entry((c.family, c.strategy, c.size))
            .or_default()
            .push((c.prob, c.executed_actions));
    }
    groups
        .into_iter()
        .map(|((family, strategy, size), mut means)| {
            means.sort_by(|a, b| a.0.total_cmp(&b.0));
            let holds = means.windows(2).all(|w| match (w[0].1, w[1].1) {
                (Some(a), Some(b)) => b <= a,
                _ => true,
            });
            MonotonicityCheck {
                family,
                strategy,
                size,
                means,
                holds,
            }
        })
        .collect()
}

pub fn monotonicity_report(checks: &[MonotonicityCheck]) -> String {
    let mut out = String::new();
    for c in checks {
        let seq: Vec<String> = c.means.iter().map(|(p, m)| format!("{p}:{}", dash(*m, 1))).collect();
        let _ = writeln!(
            out,
            "{}\t{}\tp-{:02}\t{}\t{}",
            c.family,
            c.strategy,
            c.size,
            seq.join(" "),
            if c.holds { "ok" } else { "VIOLATED" }
        );
    }
    out
}

fn unique<T: PartialEq>(it: impl Iterator<Item = T>) -> Vec<T> {
    let mut v = Vec::new();
    for x in it {
        if !v.contains(&x) {
            v.push(x);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(prob: f64, trials: usize) -> ExperimentConfig {
        ExperimentConfig {
            families: vec![Family::Rooms],
            sizes: vec![5],
            probabilities: vec![prob],
            trials,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn silent_cell_runs_the_first_plan() {
        let mut cfg = small(0.0, 1);
        cfg.strategies = vec![Strategy::Clo];
        let rows = run_experiment(&cfg, |_| {}).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert!(r.solved);
        assert_eq!((r.executed_actions, r.planner_calls, r.repairs), (14, 1, 0));
    }

    #[test]
    fn empty_strategy_list_is_rejected() {
        let mut cfg = small(0.1, 1);
        cfg.strategies.clear();
        assert!(matches!(run_experiment(&cfg, |_| {}), Err(ExperimentError::Config(_))));
        let mut cfg = small(0.1, 0);
        cfg.trials = 0;
        assert!(cfg.check().is_err());
        assert!(small(1.5, 1).check().is_err());
    }

    #[test]
    fn seeds_ignore_strategy_and_differ_across_cells() {
        let rows = run_experiment(&small(0.5, 3), |_| {}).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].seed, rows[3].seed);
        assert_ne!(rows[0].seed, rows[1].seed);
        assert_ne!(
            trial_seed(1, Family::Rooms, 5, 0.1, 0),
            trial_seed(1, Family::Rooms, 5, 0.2, 0)
        );
    }

    #[test]
    fn parallel_and_serial_agree() {
        let cfg = small(0.5, 4);
        let a = run_experiment(&cfg, |_| {}).unwrap();
        let b = run_experiment(&ExperimentConfig { workers: 3, ..cfg }, |_| {}).unwrap();
        let ca: Vec<_> = a.iter().map(Row::counts).collect();
        let cb: Vec<_> = b.iter().map(Row::counts).collect();
        assert_eq!(ca, cb);
    }

    #[test]
    fn summaries_and_dashes() {
        let mut rows = run_experiment(&small(0.2, 3), |_| {}).unwrap();
        let cells = summarize(&rows);
        assert_eq!(cells.len(), 2);
        let m = cells[0].executed_actions.unwrap();
        let want = rows[..3].iter().map(|r| r.executed_actions as f64).sum::<f64>() / 3.0;
        assert!((m - want).abs() < 1e-9);
        for r in rows.iter_mut().filter(|r| r.strategy == Strategy::Replan) {
            r.solved = false;
        }
        let cells = summarize(&rows);
        assert_eq!(cells[1].executed_actions, None);
        let table = actions_table(&cells);
        assert!(table.lines().nth(1).unwrap().ends_with("\t-"), "{table}");
        assert!(plot_data(&cells, Family::Rooms).lines().nth(1).unwrap().ends_with("\t-"));
    }

    #[test]
    fn csv_has_a_stable_header() {
        let rows = run_experiment(&small(0.1, 1), |_| {}).unwrap();
        let text = to_csv(&rows).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("family,size,prob,strategy,trial,seed,solved,failure,executed_actions"));
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(1).unwrap().starts_with("rooms,5,0.1,CLO,0,"));
    }

    #[test]
    fn monotonicity_flags_increases() {
        let mk = |p: f64, a: f64| CellSummary {
            family: Family::Rooms,
            size: 10,
            prob: p,
            strategy: Strategy::Clo,
            trials: 1,
            solved: 1,
            executed_actions: Some(a),
            planner_calls: None,
            repairs: None,
            sensed_fact_reads: None,
            wall_time: None,
            effort_time: None,
        };
        let ok = monotonicity(&[mk(0.1, 20.0), mk(0.2, 18.0), mk(0.5, 18.0)], 10);
        assert!(ok[0].holds);
        let bad = monotonicity(&[mk(0.1, 20.0), mk(0.2, 21.0)], 10);
        assert!(!bad[0].holds);
        assert!(monotonicity_report(&bad).contains("VIOLATED"));
        assert!(monotonicity(&[mk(0.1, 20.0)], 20).is_empty());
    }
}
