//! `clo` command-line front end.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clo_core::benchgen::{generate, Family};
use clo_core::clo::compute_clo;
use clo_core::executive::{run_episode, ExecutionConfig, Instance, Strategy};
use clo_core::experiment::{
    actions_table, monotonicity, monotonicity_report, plot_data, run_experiment, summarize, trial_seed, CsvSink,
};
use clo_core::planner::plan;
use clo_core::worldsim::{World, WorldConfig};

use config::layered;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "clo", about = "Plan, execute and benchmark with causal-link monitoring")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Plan once and print the plan with its causal links.
    Plan(Source),
    /// Run one monitored episode and print its trace.
    Run(RunArgs),
    /// Run a CLO vs REPLAN sweep.
    Bench(BenchArgs),
    /// Write benchmark domain, problem and event files.
    Gen(GenArgs),
}

/// A generated benchmark or explicit files.
#[derive(Args)]
struct Source {
    #[arg(long, default_value = "rooms")]
    family: Family,
    #[arg(long, default_value_t = 5)]
    size: usize,
    #[arg(long, requires = "problem")]
    domain: Option<PathBuf>,
    #[arg(long, requires = "domain")]
    problem: Option<PathBuf>,
    /// Event file; only used with --domain/--problem.
    #[arg(long)]
    events: Option<PathBuf>,
}

impl Source {
    fn load(&self) -> Res<Instance> {
        match (&self.domain, &self.problem) {
            (Some(d), Some(p)) => {
                let events = self.events.as_ref().map(fs::read_to_string).transpose()?;
                Ok(Instance::from_texts(&fs::read_to_string(d)?, &fs::read_to_string(p)?, events.as_deref())?)
            }
            _ => Ok(Instance::from_benchmark(&generate(self.family, self.size)?)?),
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 0.0)]
    prob: f64,
    #[arg(long, default_value = "CLO")]
    strategy: Strategy,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    distractors: usize,
    #[arg(long)]
    budget_total: Option<f64>,
    #[arg(long)]
    budget_plan: Option<f64>,
    #[arg(long)]
    budget_clo: Option<f64>,
}

#[derive(Args)]
struct BenchArgs {
    /// Key-value settings file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated families.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated sizes.
    #[arg(long)]
    size: Option<String>,
    /// Comma-separated probabilities.
    #[arg(long)]
    prob: Option<String>,
    /// Comma-separated strategies.
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    budget_total: Option<String>,
    #[arg(long)]
    budget_plan: Option<String>,
    #[arg(long)]
    budget_clo: Option<String>,
    #[arg(long)]
    distractors: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Directory for rows.csv, summary.tsv, plot files and the monotonicity report.
    #[arg(long)]
    out: Option<String>,
}

impl BenchArgs {
    fn pairs(&self) -> Vec<(String, String)> {
        let flags = [
            ("families", &self.family),
            ("sizes", &self.size),
            ("probabilities", &self.prob),
            ("strategies", &self.strategy),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("budget-total", &self.budget_total),
            ("budget-plan", &self.budget_plan),
            ("budget-clo", &self.budget_clo),
            ("distractors", &self.distractors),
            ("workers", &self.workers),
            ("out", &self.out),
        ];
        flags
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect()
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    family: Family,
    #[arg(long)]
    size: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn cmd_plan(src: &Source) -> Res<()> {
    let inst = src.load()?;
    let task = &inst.task;
    let r = plan(task, &task.init, None);
    let p = r.outcome?;
    println!("{}", p.render(task));
    let (links, opp) = compute_clo(task, &p)?;
    print!("{}", links.render(task, &p));
    println!("opportunities: {}", opp.names(task).join(" "));
    println!("expanded: {}  time: {:.6}s", r.stats.expanded, r.stats.wall_time);
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Res<()> {
    let inst = a.source.load()?;
    let mut cfg = ExecutionConfig::new(a.strategy);
    cfg.trace = true;
    for (slot, v) in [
        (&mut cfg.budgets.total, a.budget_total),
        (&mut cfg.budgets.plan, a.budget_plan),
        (&mut cfg.budgets.clo, a.budget_clo),
    ] {
        if let Some(s) = v {
            *slot = std::time::Duration::try_from_secs_f64(s)?;
        }
    }
    let seed = if a.source.domain.is_some() {
        a.seed
    } else {
        trial_seed(a.seed, a.source.family, a.source.size, a.prob, 0)
    };
    let wc = WorldConfig {
        p: a.prob,
        distractors_per_step: a.distractors,
        seed,
    };
    let mut world = World::new(&inst.task, inst.events.clone(), wc);
    let r = run_episode(&inst, &mut world, &cfg);
    for line in &r.log {
        println!("{line}");
    }
    println!(
        "solved={} failure={:?} executed_actions={} planner_calls={} repairs={} sensed_fact_reads={} events_fired={} wall_time={:.6}",
        r.solved,
        r.failure,
        r.executed_actions,
        r.planner_calls,
        r.repairs,
        r.sensed_fact_reads,
        r.events_fired,
        r.wall_time
    );
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Res<()> {
    let file = a.config.as_ref().map(fs::read_to_string).transpose()?;
    let s = layered(file.as_deref(), &a.pairs())?;
    let cfg = &s.experiment;
    let rows = match &s.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let mut sink = CsvSink::new(fs::File::create(dir.join("rows.csv"))?);
            let mut err = None;
            let rows = run_experiment(cfg, |r| {
                if let Err(e) = sink.write(r) {
                    err.get_or_insert(e);
                }
            })?;
            if let Some(e) = err {
                return Err(e.into());
            }
            rows
        }
        None => run_experiment(cfg, |_| {})?,
    };
    let cells = summarize(&rows);
    let table = actions_table(&cells);
    let mono = monotonicity_report(&monotonicity(&cells, 10));
    print!("{table}\n{mono}");
    if let Some(dir) = &s.out {
        write(dir, "summary.tsv", &table)?;
        write(dir, "monotonicity.txt", &mono)?;
        for &f in &cfg.families {
            write(dir, &format!("plot-{f}.tsv"), &plot_data(&cells, f))?;
        }
    }
    Ok(())
}

fn write(dir: &Path, name: &str, text: &str) -> Res<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Res<()> {
    let b = generate(a.family, a.size)?;
    fs::create_dir_all(&a.out)?;
    let stem = format!("{}-{}", a.family, b.problem_name());
    for (suffix, text) in [("domain.pddl", &b.domain), ("problem.pddl", &b.problem), ("events", &b.events)] {
        let path = a.out.join(format!("{stem}-{suffix}"));
        fs::write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.verb {
        Verb::Plan(s) => cmd_plan(s),
        Verb::Run(a) => cmd_run(a),
        Verb::Bench(a) => cmd_bench(a),
        Verb::Gen(a) => cmd_gen(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
