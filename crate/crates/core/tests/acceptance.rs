//! End-to-end checks, one verdict line per criterion. Runs as a plain binary
//! so the lines are printed even when everything passes.

mod common;

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use clo_core::benchgen::{generate, Family, SIZES};
use clo_core::clo::{compute_clo, render_links};
use clo_core::examples::{EXAMPLE_PLAN, EXAMPLE_PROBLEM, ROOMS_DOMAIN};
use clo_core::executive::{run_episode, ExecutionConfig, Instance, Strategy};
use clo_core::experiment::{run_experiment, ExperimentConfig, Row};
use clo_core::fact::Fact;
use clo_core::ground::ground_text;
use clo_core::planner::{plan, validate};
use clo_core::repair::{repair, Draft, RepairEvent};
use clo_core::task::Plan;
use clo_core::worldsim::{Injection, World, WorldConfig};
use common::{build, check_links, check_repair, TaskSpec};

const PROBS: [f64; 3] = [0.1, 0.2, 0.5];

/// Expected mean executed actions, (CLO, REPLAN), by size then probability.
fn reference(f: Family, n: usize, p: usize) -> (f64, f64) {
    let rows: [[(f64, f64); 3]; 3] = match f {
        Family::Rooms => [
            [(12.0, 12.0), (9.0, 9.0), (8.0, 8.0)],
            [(27.0, 26.0), (24.0, 23.0), (20.0, 18.0)],
            [(51.0, 49.0), (53.0, 49.0), (41.0, 33.0)],
        ],
        Family::Dialog => [
            [(23.0, 23.0), (26.0, 26.0), (14.0, 14.0)],
            [(48.0, 48.0), (41.0, 39.0), (35.0, 33.0)],
            [(95.0, 93.0), (86.0, 82.0), (66.0, 61.0)],
        ],
        Family::Cooking => [
            [(28.0, 28.0), (30.0, 29.0), (23.0, 22.0)],
            [(68.0, 68.0), (44.0, 43.0), (39.0, 36.0)],
            [(96.0, 96.0), (80.0, 80.0), (50.0, 46.0)],
        ],
    };
    let i = [5, 10, 20].iter().position(|&s| s == n).expect("table size");
    rows[i][p]
}

/// Trials per cell of the table sweep. Dialog replanning is the slow one.
fn table_trials(f: Family) -> usize {
    match f {
        Family::Dialog => 30,
        _ => 100,
    }
}

const LARGE_TRIALS: usize = 2;

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        ok,
        detail: detail.into(),
    }
}

fn goldens() -> Verdict {
    let t0 = Instant::now();
    let task = ground_text(ROOMS_DOMAIN, EXAMPLE_PROBLEM).unwrap();
    let p = task.plan_from_names(&EXAMPLE_PLAN).unwrap();
    let (links, _) = compute_clo(&task, &p).unwrap();
    let table2 = "Step\tProducer\tProposition\tConsumer\n\
        1\tmove(L3, L1)\tat-robot(L1)\tprepare(O1, L1)\n\
        1\tmove(L3, L1)\tat-robot(L1)\tgrasp(O1, L1)\n\
        1\tmove(L3, L1)\tat-robot(L1)\tmove(L1, L2)\n\
        2\tprepare(O1, L1)\tprepared(O1)\tgrasp(O1, L1)\n\
        3\tgrasp(O1, L1)\tholding(O1)\tGOAL\n\
        4\tmove(L1, L2)\tat-robot(L2)\tprepare(O2, L2)\n\
        4\tmove(L1, L2)\tat-robot(L2)\tgrasp(O2, L2)\n\
        5\tprepare(O2, L2)\tprepared(O2)\tgrasp(O2, L2)\n\
        6\tgrasp(O2, L2)\tholding(O2)\tGOAL\n";
    let ok2 = links.render(&task, &p) == table2;

    let o = task.fact_id(&Fact::of("holding", &["O2"])).unwrap();
    // Intermediate view keeps the original numbering with step 1 spent.
    let mut spent = links.clone();
    spent.produced_mut(1).clear();
    let mut draft = Draft::new(&p, &spent);
    draft.apply_opportunity(o);
    let cut = draft.trace.iter().position(|e| *e == RepairEvent::StepRemoved(5));
    let ok4 = cut.is_some_and(|cut| {
        let deleted: Vec<_> = draft.trace[..cut]
            .iter()
            .filter_map(|e| match e {
                RepairEvent::LinkDeleted(l) => Some(*l),
                RepairEvent::StepRemoved(_) => None,
            })
            .collect();
        render_links(&task, |i| p.steps[i - 1], spent.links().filter(|l| !deleted.contains(l)))
            == "Step\tProducer\tProposition\tConsumer\n\
                2\tprepare(O1, L1)\tprepared(O1)\tgrasp(O1, L1)\n\
                3\tgrasp(O1, L1)\tholding(O1)\tGOAL\n\
                4\tmove(L1, L2)\tat-robot(L2)\tprepare(O2, L2)\n"
    });

    let mut s = task.init.clone();
    task.action(p.steps[0]).progress(&mut s);
    s.insert(o);
    let rest = Plan::new(p.steps[1..].to_vec());
    let mut rest_links = links.clone();
    rest_links.pop_front();
    let out = repair(o, &rest, &rest_links, &task, &s);
    let ok5 = out.valid
        && out.plan.render(&task) == "prepare(O1, L1), grasp(O1, L1)"
        && out.links.render(&task, &out.plan)
            == "Step\tProducer\tProposition\tConsumer\n\
                1\tprepare(O1, L1)\tprepared(O1)\tgrasp(O1, L1)\n\
                2\tgrasp(O1, L1)\tholding(O1)\tGOAL\n";

    let inst = Instance::from_texts(ROOMS_DOMAIN, EXAMPLE_PROBLEM, None).unwrap();
    let mut w = World::quiet(&inst.task);
    w.script(
        1,
        Injection {
            add: vec![Fact::of("holding", &["O2"])],
            del: vec![],
        },
    );
    let r = run_episode(&inst, &mut w, &ExecutionConfig::new(Strategy::Clo));
    let ok_ep = r.solved && r.executed == ["move(L3, L1)", "prepare(O1, L1)", "grasp(O1, L1)"];

    let secs = t0.elapsed().as_secs_f64();
    verdict(
        ok2 && ok4 && ok5 && ok_ep && secs < 1.0,
        format!("initial links {ok2}, intermediate {ok4}, final links and plan {ok5}, episode {ok_ep}, {secs:.3}s"),
    )
}

fn calibration() -> Verdict {
    let t0 = Instant::now();
    let mut bad = Vec::new();
    for f in Family::ALL {
        for n in SIZES {
            let b = generate(f, n).unwrap();
            let task = ground_text(&b.domain, &b.problem).unwrap();
            let len = plan(&task, &task.init, None)
                .outcome
                .ok()
                .filter(|p| validate(&task, &task.init, p).is_valid())
                .map(|p| p.len());
            let want = f.plan_length(n);
            let ok = match f {
                Family::Cooking => len.is_some_and(|l| (l as f64 - want as f64).abs() <= 0.1 * want as f64),
                _ => len == Some(want),
            };
            if !ok {
                bad.push(format!("{f} p-{n:02}: {len:?} vs {want}"));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(
        bad.is_empty() && secs < 60.0,
        format!("12 first plans, mismatches [{}], {secs:.1}s", bad.join("; ")),
    )
}

fn sweep(families: &[Family], sizes: &[usize], trials: usize) -> Vec<Row> {
    let cfg = ExperimentConfig {
        families: families.to_vec(),
        sizes: sizes.to_vec(),
        probabilities: PROBS.to_vec(),
        trials,
        ..ExperimentConfig::default()
    };
    run_experiment(&cfg, |_| {}).expect("sweep runs")
}

fn mean_actions(rows: &[Row], f: Family, n: usize, p: f64, s: Strategy) -> Option<f64> {
    let v: Vec<f64> = rows
        .iter()
        .filter(|r| r.family == f && r.size == n && r.prob == p && r.strategy == s && r.solved)
        .map(|r| r.executed_actions as f64)
        .collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn table(rows: &[Row], secs: f64) -> Verdict {
    let mut misses = Vec::new();
    let mut cells = 0;
    let mut worst = (0.0f64, String::new());
    for f in Family::ALL {
        for n in [5, 10, 20] {
            for (pi, &p) in PROBS.iter().enumerate() {
                let (rc, rr) = reference(f, n, pi);
                for (s, want) in [(Strategy::Clo, rc), (Strategy::Replan, rr)] {
                    cells += 1;
                    let got = mean_actions(rows, f, n, p, s);
                    let dev = got.map_or(f64::INFINITY, |g| (g - want).abs() / want);
                    let line = format!("{f} p-{n:02} {p} {s}: {} vs {want}", got.map_or("-".into(), |g| format!("{g:.1}")));
                    println!("    {line}");
                    if dev > worst.0 {
                        worst = (dev, line.clone());
                    }
                    if dev > 0.2 {
                        misses.push(line);
                    }
                }
            }
        }
    }
    verdict(
        misses.is_empty() && secs <= 900.0,
        format!(
            "{}/{cells} cells within 20%, worst {} ({:.1}%), sweep {secs:.0}s{}",
            cells - misses.len(),
            worst.1,
            worst.0 * 100.0,
            if misses.is_empty() { String::new() } else { format!(", misses [{}]", misses.join("; ")) }
        ),
    )
}

type Pair<'a> = (&'a Row, &'a Row);

fn pairs(rows: &[Row]) -> Vec<Pair<'_>> {
    let mut by: BTreeMap<(Family, usize, u64, usize), [Option<&Row>; 2]> = BTreeMap::new();
    for r in rows {
        let e = by.entry((r.family, r.size, r.prob.to_bits(), r.trial)).or_default();
        e[(r.strategy == Strategy::Replan) as usize] = Some(r);
    }
    by.into_values()
        .filter_map(|[c, r]| Some((c?, r?)))
        .collect()
}

fn effort(rows: &[Row]) -> Verdict {
    let ps = pairs(rows);
    let mut notes = Vec::new();
    let mut ok = true;
    for f in Family::ALL {
        for n in [20, 40] {
            let cell: Vec<&Pair> = ps.iter().filter(|(c, _)| c.family == f && c.size == n).collect();
            let clo: f64 = cell.iter().map(|(c, _)| c.effort_time).sum();
            let rep: f64 = cell.iter().map(|(_, r)| r.effort_time).sum();
            let ratio = rep / clo.max(1e-9);
            ok &= !cell.is_empty() && ratio >= 5.0;
            notes.push(format!("{f} p-{n:02} {ratio:.0}x"));
        }
    }
    let calls_bad = ps
        .iter()
        .filter(|(c, r)| c.solved && r.solved && c.planner_calls > r.planner_calls)
        .count();
    verdict(
        ok && calls_bad == 0,
        format!("REPLAN/CLO effort {}; trials with more CLO planner calls: {calls_bad}", notes.join(", ")),
    )
}

fn perception(rows: &[Row]) -> Verdict {
    let ps = pairs(rows);
    let fewer = ps.iter().filter(|(c, r)| c.sensed_fact_reads < r.sensed_fact_reads).count();
    verdict(
        !ps.is_empty() && fewer == ps.len(),
        format!("CLO read fewer facts in {fewer}/{} paired trials", ps.len()),
    )
}

fn monotone(rows: &[Row]) -> Verdict {
    let mut broken = Vec::new();
    let mut checked = 0;
    for f in Family::ALL {
        for n in [10, 20, 40] {
            for s in Strategy::ALL {
                let means: Vec<Option<f64>> = PROBS.iter().map(|&p| mean_actions(rows, f, n, p, s)).collect();
                checked += 1;
                let holds = means.windows(2).all(|w| match (w[0], w[1]) {
                    (Some(a), Some(b)) => b <= a,
                    _ => true,
                });
                if !holds {
                    broken.push(format!("{f} p-{n:02} {s} {means:.1?}"));
                }
            }
        }
    }
    verdict(
        broken.is_empty(),
        format!("{} of {checked} series non-increasing{}", checked - broken.len(), if broken.is_empty() {
            String::new()
        } else {
            format!(", broken [{}]", broken.join("; "))
        }),
    )
}

fn properties() -> Verdict {
    let mut errs: Vec<String> = Vec::new();
    let mut seed = 0u64;
    let mut tasks = 0;
    while tasks < 1000 {
        seed += 1;
        let Some((task, p)) = build(&TaskSpec::seeded(seed, false)) else { continue };
        tasks += 1;
        if let Err(e) = check_links(&task, &p) {
            errs.push(format!("links seed {seed}: {e}"));
        }
        if let Ok(found) = plan(&task, &task.init, None).outcome {
            if let Err(e) = check_links(&task, &found) {
                errs.push(format!("planner links seed {seed}: {e}"));
            }
        } else {
            errs.push(format!("planner failed on solvable seed {seed}"));
        }
    }
    let mut episodes = 0;
    let mut seed = 1u64 << 32;
    while episodes < 1000 {
        seed += 1;
        let Some((task, p)) = build(&TaskSpec::seeded(seed, false)) else { continue };
        if p.is_empty() || compute_clo(&task, &p).map_or(true, |(_, o)| o.is_empty()) {
            continue;
        }
        episodes += 1;
        let x = seed as usize;
        if let Err(e) = check_repair(&task, &p, x % 7, x / 7 % 11, 0) {
            errs.push(format!("repair seed {seed}: {e}"));
        }
    }

    let mut agree = 0;
    for f in Family::ALL {
        for n in f.min_size()..f.min_size() + 4 {
            let inst = Instance::from_benchmark(&generate(f, n).unwrap()).unwrap();
            let runs: Vec<_> = Strategy::ALL
                .iter()
                .map(|&s| {
                    let mut w = World::new(&inst.task, inst.events.clone(), WorldConfig::default());
                    run_episode(&inst, &mut w, &ExecutionConfig::new(s))
                })
                .collect();
            if runs.iter().all(|r| r.solved && r.planner_calls == 1 && r.repairs == 0) && runs[0].executed == runs[1].executed {
                agree += 1;
            } else {
                errs.push(format!("strategies differ on {f} p-{n:02}"));
            }
        }
    }

    let small = |workers| ExperimentConfig {
        sizes: vec![3, 4],
        probabilities: vec![0.2, 0.5],
        trials: 3,
        distractors_per_step: 2,
        workers,
        ..ExperimentConfig::default()
    };
    let a = run_experiment(&small(1), |_| {}).unwrap();
    let b = run_experiment(&small(1), |_| {}).unwrap();
    let c = run_experiment(&small(3), |_| {}).unwrap();
    let same = a.len() == b.len()
        && a.len() == c.len()
        && a.iter().zip(&b).zip(&c).all(|((x, y), z)| x.counts() == y.counts() && x.counts() == z.counts());
    if !same {
        errs.push("repeated sweeps differ".into());
    }
    verdict(
        errs.is_empty(),
        format!(
            "{tasks} tasks for links, {episodes} repair episodes, {agree} silent instances, {} rows replayed{}",
            a.len(),
            errs.first().map_or(String::new(), |e| format!(", first failure: {e}"))
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |n: usize, name: &'static str, v: Verdict| {
        println!("criterion {n} {name}: {} ({})", if v.ok { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };
    report(1, "worked-example goldens", goldens());
    report(2, "plan-length calibration", calibration());

    let t0 = Instant::now();
    let mut rows = Vec::new();
    for f in Family::ALL {
        rows.extend(sweep(&[f], &[5, 10, 20], table_trials(f)));
    }
    let secs = t0.elapsed().as_secs_f64();
    report(3, "executed actions vs reference table", table(&rows, secs));
    rows.extend(sweep(&Family::ALL, &[40], LARGE_TRIALS));
    report(4, "relative effort", effort(&rows));
    report(5, "perception focus", perception(&rows));
    report(6, "monotonicity in probability", monotone(&rows));
    report(7, "property suites", properties());

    let failed = results.iter().filter(|r| !r.2.ok).count();
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
