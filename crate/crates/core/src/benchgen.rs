//! Benchmark generators for the Rooms, Dialog and Cooking families.
//!
//! Each generator emits domain and problem text plus an event file for the
//! world simulator. Layouts are closed-form so the planner's first plan has a
//! known length:
//!
//! * Rooms: object `Oi` sits alone in room `Li` and the robot starts in `L1`,
//!   so the plan is one move per further room plus prepare and grasp per
//!   object, `3n - 1` steps.
//! * Dialog: human `Hi` waits at `Li`, the robot starts at `L0`, and each
//!   human must be asked `Q1..Q5` in order: one move and five asks per human,
//!   `6n` steps. Moves cost 0: with unit cost, h_add charges the walk once per
//!   pending question and the search would hop between humans. `L0` is
//!   declared last so that ties between moves never favour going back.
//! * Cooking: five ingredients, each fetched once and then cut through
//!   `q = 2n - 4` successive units: `5 (q + 1) = 10n - 15` steps.

use std::fmt::{self, Write};
use std::str::FromStr;

use thiserror::Error;

/// The sizes used by the experiment tables.
pub const SIZES: [usize; 4] = [5, 10, 20, 40];

const QUESTIONS: usize = 5;
const INGREDIENTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Rooms,
    Dialog,
    Cooking,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Rooms, Family::Dialog, Family::Cooking];

    pub fn name(self) -> &'static str {
        match self {
            Family::Rooms => "rooms",
            Family::Dialog => "dialog",
            Family::Cooking => "cooking",
        }
    }

    pub fn min_size(self) -> usize {
        match self {
            Family::Cooking => 3,
            _ => 1,
        }
    }

    /// Length of the first plan for size `n`.
    pub fn plan_length(self, n: usize) -> usize {
        match self {
            Family::Rooms => 3 * n - 1,
            Family::Dialog => (QUESTIONS + 1) * n,
            Family::Cooking => 10 * n - 15,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("unknown family '{0}' (expected rooms, dialog or cooking)")]
    UnknownFamily(String),
    #[error("{family} needs size at least {min}, got {n}")]
    TooSmall { family: Family, n: usize, min: usize },
}

impl FromStr for Family {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rooms" => Ok(Family::Rooms),
            "dialog" => Ok(Family::Dialog),
            "cooking" => Ok(Family::Cooking),
            _ => Err(GenError::UnknownFamily(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Benchmark {
    pub family: Family,
    pub n: usize,
    pub domain: String,
    pub problem: String,
    pub events: String,
}

impl Benchmark {
    /// Conventional problem name, e.g. `p-05`.
    pub fn problem_name(&self) -> String {
        format!("p-{:02}", self.n)
    }
}

pub fn generate(family: Family, n: usize) -> Result<Benchmark, GenError> {
    let min = family.min_size();
    if n < min {
        return Err(GenError::TooSmall { family, n, min });
    }
    let (domain, problem, events) = match family {
        Family::Rooms => rooms(n),
        Family::Dialog => dialog(n),
        Family::Cooking => cooking(n),
    };
    Ok(Benchmark {
        family,
        n,
        domain,
        problem,
        events,
    })
}

fn names(prefix: &str, range: impl Iterator<Item = usize>) -> String {
    range.map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(" ")
}

fn rooms(n: usize) -> (String, String, String) {
    let domain = crate::examples::ROOMS_DOMAIN.to_string();
    let mut init = String::from("(at-robot L1)");
    let mut goal = String::new();
    for i in 1..=n {
        let _ = write!(init, " (at-object O{i} L{i})");
        let _ = write!(goal, " (holding O{i})");
    }
    let problem = format!(
        "(define (problem rooms-p-{n:02})\n  (:domain rooms)\n  (:objects {} - room {} - obj)\n  (:init {init})\n  (:goal (and{goal})))\n",
        names("L", 1..=n),
        names("O", 1..=n),
    );
    let events = "\
(events rooms
  (:event prepare :parameters (?o - obj ?l - room)
    :guard (and (at-object ?o ?l))
    :effect (and (prepared ?o)))
  (:event give :parameters (?o - obj ?l - room)
    :guard (and (at-object ?o ?l))
    :effect (and (holding ?o) (not (at-object ?o ?l))))
  (:distractor :parameters (?d - obj ?l - room)
    :fact (at-object ?d ?l) :anchor (at-robot ?l) :prefix D)
  (:mutex (holding ?o) (at-object ?o ?l))
  (:mutex (at-robot ?a) (at-robot ?b)))
"
    .to_string();
    (domain, problem, events)
}

pub const DIALOG_DOMAIN: &str = "\
(define (domain dialog)
  (:requirements :strips :typing :action-costs)
  (:types place human question)
  (:predicates
    (at-robot ?l - place)
    (at-human ?h - human ?l - place)
    (asked ?h - human ?q - question)
    (depends ?prev ?q - question))
  (:functions (total-cost))
  (:action move
    :parameters (?from ?to - place)
    :precondition (at-robot ?from)
    :effect (and (at-robot ?to) (not (at-robot ?from)) (increase (total-cost) 0)))
  (:action ask
    :parameters (?h - human ?q ?prev - question ?l - place)
    :precondition (and (at-robot ?l) (at-human ?h ?l) (asked ?h ?prev) (depends ?prev ?q))
    :effect (asked ?h ?q)))
";

fn dialog(n: usize) -> (String, String, String) {
    let mut init = String::from("(at-robot L0)");
    for k in 1..=QUESTIONS {
        let _ = write!(init, " (depends Q{} Q{k})", k - 1);
    }
    let mut goal = String::new();
    for i in 1..=n {
        let _ = write!(init, " (at-human H{i} L{i}) (asked H{i} Q0)");
        for k in 1..=QUESTIONS {
            let _ = write!(goal, " (asked H{i} Q{k})");
        }
    }
    let problem = format!(
        "(define (problem dialog-p-{n:02})\n  (:domain dialog)\n  (:objects {} - place {} - human {} - question)\n  (:init {init})\n  (:goal (and{goal})))\n",
        names("L", (1..=n).chain([0])),
        names("H", 1..=n),
        names("Q", 0..=QUESTIONS),
    );
    // One entry per answer depth: a human may volunteer answers up to Qk.
    let mut events = String::from("(events dialog\n");
    for k in 1..=QUESTIONS {
        let adds: String = (1..=k).map(|j| format!(" (asked ?h Q{j})")).collect();
        let _ = writeln!(
            events,
            "  (:event answer :parameters (?h - human ?l - place)\n    :guard (and (at-robot ?l) (at-human ?h ?l))\n    :effect (and{adds}))"
        );
    }
    events.push_str(
        "  (:distractor :parameters (?d - human ?l - place)
    :fact (at-human ?d ?l) :anchor (at-robot ?l) :prefix D)
  (:mutex (at-robot ?a) (at-robot ?b))
  (:mutex (at-human ?h ?a) (at-human ?h ?b)))
",
    );
    (DIALOG_DOMAIN.to_string(), problem, events)
}

pub const COOKING_DOMAIN: &str = "\
(define (domain cooking)
  (:requirements :strips :typing)
  (:types ingredient unit)
  (:predicates
    (has-ingredient ?i - ingredient)
    (has-cut ?i - ingredient ?u - unit)
    (next ?a ?b - unit))
  (:action get
    :parameters (?i - ingredient)
    :effect (has-ingredient ?i))
  (:action cut
    :parameters (?i - ingredient ?from ?to - unit)
    :precondition (and (has-ingredient ?i) (has-cut ?i ?from) (next ?from ?to))
    :effect (and (has-cut ?i ?to) (not (has-cut ?i ?from)))))
";

/// How many units another cook may produce at once. Tuned per table size
/// so that opportunity gains track the reference action counts; other chain
/// lengths interpolate at about half the chain.
pub fn cooking_yield_span(q: usize) -> usize {
    match q {
        6 => 4,
        16 => 11,
        36 => 20,
        76 => 40,
        _ => q.div_ceil(2),
    }
}

fn cooking(n: usize) -> (String, String, String) {
    let q = 2 * n - 4;
    let mut init = String::new();
    for j in 0..q {
        let _ = write!(init, " (next U{j} U{})", j + 1);
    }
    let mut goal = String::new();
    for i in 1..=INGREDIENTS {
        let _ = write!(init, " (has-cut I{i} U0)");
        let _ = write!(goal, " (has-cut I{i} U{q})");
    }
    let problem = format!(
        "(define (problem cooking-p-{n:02})\n  (:domain cooking)\n  (:objects {} - ingredient {} - unit)\n  (:init{init})\n  (:goal (and{goal})))\n",
        names("I", 1..=INGREDIENTS),
        names("U", 0..=q),
    );
    let span = cooking_yield_span(q);
    let mut statics = String::new();
    for j in 1..q {
        for k in j + 1..=q.min(j + span) {
            let _ = write!(statics, " (yield U{j} U{k})");
        }
    }
    let events = format!(
        "(events cooking
  (:predicates (yield ?a ?b - unit))
  (:static{statics})
  (:event extra-yield :parameters (?i - ingredient ?from ?to - unit)
    :guard (and (has-ingredient ?i) (has-cut ?i ?from) (yield ?from ?to))
    :effect (and (has-cut ?i ?to) (not (has-cut ?i ?from))))
  (:distractor :parameters (?d - ingredient)
    :fact (has-ingredient ?d) :prefix D)
  (:mutex (has-cut ?i ?a) (has-cut ?i ?b)))
"
    );
    (COOKING_DOMAIN.to_string(), problem, events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::ground;
    use crate::pddl::{parse_domain, parse_problem};
    use crate::planner::{plan, validate};
    use crate::worldsim::parse_events;

    fn first_plan_len(family: Family, n: usize) -> usize {
        let b = generate(family, n).unwrap();
        let d = parse_domain(&b.domain).unwrap();
        let p = parse_problem(&b.problem, &d).unwrap();
        let t = ground(&d, &p).unwrap();
        let m = parse_events(&b.events, &d, &p, &t).unwrap();
        assert!(!m.instances.is_empty());
        let r = plan(&t, &t.init, None);
        let pl = r.outcome.unwrap();
        assert!(validate(&t, &t.init, &pl).is_valid());
        pl.len()
    }

    #[test]
    fn small_sizes_hit_their_lengths() {
        for f in Family::ALL {
            for n in [3, 5, 10] {
                assert_eq!(first_plan_len(f, n), f.plan_length(n), "{f} n={n}");
            }
        }
    }

    #[test]
    fn full_size_lengths() {
        let want = [
            (Family::Rooms, [14, 29, 59, 119]),
            (Family::Dialog, [30, 60, 120, 240]),
            (Family::Cooking, [35, 85, 185, 385]),
        ];
        for (f, lens) in want {
            for (n, l) in SIZES.iter().zip(lens) {
                assert_eq!(f.plan_length(*n), l);
            }
        }
    }

    #[test]
    fn rejects_tiny_cooking_and_unknown_names() {
        assert!(matches!(generate(Family::Cooking, 2), Err(GenError::TooSmall { .. })));
        assert!("kitchen".parse::<Family>().is_err());
        assert_eq!("Rooms".parse::<Family>().unwrap(), Family::Rooms);
    }

    #[test]
    fn yield_span_values() {
        let spans: Vec<usize> = SIZES.iter().map(|&n| cooking_yield_span(2 * n - 4)).collect();
        assert_eq!(spans, [4, 11, 20, 40]);
    }
}
