//! Event files: what other agents may do to the world, plus distractor and
//! mutex declarations.
//!
//! ```text
//! (events rooms
//!   (:predicates (yield ?a ?b - unit))          ; optional static relations
//!   (:static (yield U1 U2))
//!   (:event give :parameters (?o - obj ?l - room)
//!     :guard (and (at-object ?o ?l))
//!     :effect (and (holding ?o) (not (at-object ?o ?l))))
//!   (:distractor :parameters (?d - obj ?l - room)
//!     :fact (at-object ?d ?l) :anchor (at-robot ?l) :prefix D)
//!   (:mutex (holding ?o) (at-object ?o ?l)))
//! ```
//!
//! Entries sharing an event name form one kind. Guards may mention static
//! relations, which are checked once at grounding time.

use rustc_hash::FxHashSet;

use crate::fact::{Fact, FactId};
use crate::ground::{enumerate_free, object_scope, objects_of_type, CAtom, Compiler};
use crate::pddl::sexpr::{read_one, syntax, Sexpr};
use crate::pddl::{
    keyword_pairs, parse_atom_list, parse_effect, parse_typed_list, Atom, AtomContext, DomainDef, ParseError, PredicateDecl,
    ProblemDef, Term, TypedName,
};
use crate::task::GroundTask;

/// One thing another agent can do, grounded to fact ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventInstance {
    pub kind: usize,
    pub name: String,
    pub guard: Vec<FactId>,
    pub add: Vec<FactId>,
    pub del: Vec<FactId>,
}

#[derive(Debug, Clone)]
pub struct DistractorSpec {
    /// The first parameter is the fresh object.
    pub params: Vec<TypedName>,
    pub fact: Atom,
    pub anchor: Option<Atom>,
    pub prefix: String,
}

/// Grounded exogenous model for one task.
#[derive(Debug, Clone, Default)]
pub struct EventModel {
    pub kinds: Vec<String>,
    pub instances: Vec<EventInstance>,
    pub distractor: Option<DistractorSpec>,
    pub mutexes: Vec<(Atom, Atom)>,
}

struct RawEvent<'a> {
    name: String,
    params: Vec<TypedName>,
    guard: Option<&'a Sexpr>,
    effect: Option<&'a Sexpr>,
}

/// Parses an event file and grounds it against `task`.
///
/// Instances mentioning facts outside the task's universe are dropped: such
/// facts can never hold in a world that starts from the task.
pub fn parse_events(text: &str, domain: &DomainDef, problem: &ProblemDef, task: &GroundTask) -> Result<EventModel, ParseError> {
    let root = read_one(text)?;
    let items = root.as_list().ok_or_else(|| syntax(root.pos(), "expected (events ...)"))?;
    if items.first().is_none_or(|h| !h.is_keyword("events")) {
        return Err(syntax(root.pos(), "expected (events ...)"));
    }
    let mut dom = domain.clone();
    let mut statics_e: Vec<&Sexpr> = Vec::new();
    let mut raw: Vec<RawEvent> = Vec::new();
    let mut distractor_e = None;
    let mut mutex_e: Vec<&Sexpr> = Vec::new();
    let mut static_preds: Vec<String> = Vec::new();
    for sec in items.iter().skip(2) {
        let parts = sec.as_list().ok_or_else(|| syntax(sec.pos(), "expected a section"))?;
        match sec.head().as_deref() {
            Some(":predicates") => {
                for p in &parts[1..] {
                    let pl = p.as_list().ok_or_else(|| syntax(p.pos(), "expected a predicate"))?;
                    let name = pl
                        .first()
                        .and_then(Sexpr::as_atom)
                        .ok_or_else(|| syntax(p.pos(), "expected a predicate name"))?;
                    static_preds.push(name.to_string());
                    dom.predicates.push(PredicateDecl {
                        name: name.to_string(),
                        params: parse_typed_list(&pl[1..], true)?,
                    });
                }
            }
            Some(":static") => statics_e.extend(&parts[1..]),
            Some(":event") => {
                let name = parts
                    .get(1)
                    .and_then(Sexpr::as_atom)
                    .ok_or_else(|| syntax(sec.pos(), "missing event name"))?;
                let mut ev = RawEvent {
                    name: name.to_string(),
                    params: Vec::new(),
                    guard: None,
                    effect: None,
                };
                for (k, v) in keyword_pairs(&parts[2..])? {
                    match k.as_str() {
                        ":parameters" => {
                            let l = v.as_list().ok_or_else(|| syntax(v.pos(), "expected parameters"))?;
                            ev.params = parse_typed_list(l, true)?;
                        }
                        ":guard" => ev.guard = Some(v),
                        ":effect" => ev.effect = Some(v),
                        other => return Err(syntax(v.pos(), format!("unknown event key {other}"))),
                    }
                }
                raw.push(ev);
            }
            Some(":distractor") => distractor_e = Some(sec),
            Some(":mutex") => mutex_e.push(sec),
            _ => return Err(syntax(sec.pos(), "unknown events section")),
        }
    }

    let objects = object_scope(&dom, problem);
    let ctx0 = AtomContext {
        domain: &dom,
        vars: &[],
        objects: &objects,
    };
    let mut statics: FxHashSet<Fact> = FxHashSet::default();
    for s in statics_e {
        let a = ctx0.atom(s)?;
        statics.insert(ground_atom(&a, &[], &[]));
    }

    let compiler = Compiler::new(&dom, &objects);
    let mut model = EventModel::default();
    for ev in &raw {
        let kind = match model.kinds.iter().position(|k| k == &ev.name) {
            Some(k) => k,
            None => {
                model.kinds.push(ev.name.clone());
                model.kinds.len() - 1
            }
        };
        let ctx = AtomContext {
            domain: &dom,
            vars: &ev.params,
            objects: &objects,
        };
        let guard = match ev.guard {
            Some(g) => parse_atom_list(&ctx, g)?,
            None => Vec::new(),
        };
        let (add, del, _) = match ev.effect {
            Some(e) => parse_effect(&ctx, e)?,
            None => (Vec::new(), Vec::new(), None),
        };
        let (static_guard, dynamic_guard): (Vec<&Atom>, Vec<&Atom>) =
            guard.iter().partition(|a| static_preds.contains(&a.predicate));
        let static_c: Vec<CAtom> = static_guard.iter().map(|a| compiler.atom(a, &ev.params)).collect();
        let domains: Vec<Vec<u32>> = ev.params.iter().map(|p| objects_of_type(&dom, &objects, &p.ty)).collect();
        let vars: Vec<usize> = (0..ev.params.len()).collect();
        let mut binding = vec![0u32; vars.len()];
        enumerate_free(&domains, &vars, &mut binding, &mut |b| {
            if !static_c.iter().all(|a| statics.contains(&compiler.instantiate(a, b))) {
                return;
            }
            let names: Vec<&str> = b.iter().map(|&o| objects[o as usize].name.as_str()).collect();
            let ids = |atoms: &[&Atom]| -> Option<Vec<FactId>> {
                let mut v = atoms
                    .iter()
                    .map(|a| task.fact_id(&ground_atom(a, &ev.params, &names)))
                    .collect::<Option<Vec<_>>>()?;
                v.sort_unstable();
                v.dedup();
                Some(v)
            };
            let (Some(g), Some(ad), Some(mut de)) = (
                ids(&dynamic_guard),
                ids(&add.iter().collect::<Vec<_>>()),
                ids(&del.iter().collect::<Vec<_>>()),
            ) else {
                return;
            };
            de.retain(|f| !ad.contains(f));
            model.instances.push(EventInstance {
                kind,
                name: format!("{}({})", ev.name, names.join(", ")),
                guard: g,
                add: ad,
                del: de,
            });
        });
    }

    if let Some(sec) = distractor_e {
        let parts = sec.as_list().unwrap_or_default();
        let mut params = Vec::new();
        let mut fact_e = None;
        let mut anchor_e = None;
        let mut prefix = "D".to_string();
        for (k, v) in keyword_pairs(&parts[1..])? {
            match k.as_str() {
                ":parameters" => {
                    let l = v.as_list().ok_or_else(|| syntax(v.pos(), "expected parameters"))?;
                    params = parse_typed_list(l, true)?;
                }
                ":fact" => fact_e = Some(v),
                ":anchor" => anchor_e = Some(v),
                ":prefix" => prefix = v.as_atom().unwrap_or("D").to_string(),
                other => return Err(syntax(v.pos(), format!("unknown distractor key {other}"))),
            }
        }
        if params.is_empty() {
            return Err(syntax(sec.pos(), "distractor needs a fresh-object parameter"));
        }
        let ctx = AtomContext {
            domain: &dom,
            vars: &params,
            objects: &objects,
        };
        let fact = ctx.atom(fact_e.ok_or_else(|| syntax(sec.pos(), "distractor needs :fact"))?)?;
        let anchor = anchor_e.map(|a| ctx.atom(a)).transpose()?;
        model.distractor = Some(DistractorSpec {
            params,
            fact,
            anchor,
            prefix,
        });
    }

    for sec in mutex_e {
        let parts = sec.as_list().unwrap_or_default();
        if parts.len() != 3 {
            return Err(syntax(sec.pos(), "(:mutex A B) takes two atoms"));
        }
        model.mutexes.push((lifted_atom(&parts[1])?, lifted_atom(&parts[2])?));
    }
    Ok(model)
}

/// Mutex atoms are patterns: variables are implicitly universally bound.
fn lifted_atom(e: &Sexpr) -> Result<Atom, ParseError> {
    let items = e.as_list().ok_or_else(|| syntax(e.pos(), "expected an atom"))?;
    let pred = items
        .first()
        .and_then(Sexpr::as_atom)
        .ok_or_else(|| syntax(e.pos(), "expected a predicate"))?;
    let mut args = Vec::new();
    for a in &items[1..] {
        let s = a.as_atom().ok_or_else(|| syntax(a.pos(), "expected a symbol"))?;
        args.push(match s.strip_prefix('?') {
            Some(v) => Term::Var(v.to_string()),
            None => Term::Const(s.to_string()),
        });
    }
    Ok(Atom {
        predicate: pred.to_string(),
        args,
    })
}

/// Substitutes parameter names by objects.
pub(crate) fn ground_atom(a: &Atom, params: &[TypedName], objs: &[&str]) -> Fact {
    Fact {
        predicate: a.predicate.clone(),
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) => c.clone(),
                Term::Var(v) => {
                    let i = params.iter().position(|p| &p.name == v).expect("bound variable");
                    objs[i].to_string()
                }
            })
            .collect(),
    }
}

/// Matches a pattern atom against a fact, extending `binding`.
pub(crate) fn unify(a: &Atom, f: &Fact, binding: &mut Vec<(String, String)>) -> bool {
    if a.predicate != f.predicate || a.args.len() != f.args.len() {
        return false;
    }
    let mark = binding.len();
    for (t, v) in a.args.iter().zip(&f.args) {
        let ok = match t {
            Term::Const(c) => c == v,
            Term::Var(x) => match binding.iter().find(|(k, _)| k == x) {
                Some((_, bound)) => bound == v,
                None => {
                    binding.push((x.clone(), v.clone()));
                    true
                }
            },
        };
        if !ok {
            binding.truncate(mark);
            return false;
        }
    }
    true
}
