//! Instantiation of action schemas over a problem's objects.
//!
//! With pruning on, only bindings whose preconditions are reachable under the
//! delete relaxation from the initial state are produced. Reachability is a
//! semi-naive fixpoint: in each round a binding must use at least one fact
//! that first appeared in the previous round, so no binding is joined twice.

use std::collections::BTreeSet;

use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::fact::{Fact, FactId, FactTable, State};
use crate::pddl::{parse_domain, parse_problem, ActionSchema, Atom, DomainDef, ParseError, ProblemDef, Term, TypedName};
use crate::task::{GroundAction, GroundTask};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("problem is for domain '{problem}', not '{domain}'")]
    DomainMismatch { domain: String, problem: String },
}

#[derive(Debug, Clone)]
pub struct GroundOptions {
    /// Drop actions that are unreachable under the delete relaxation.
    pub prune: bool,
    /// Start interning from this table so ids agree with an existing universe.
    pub seed_table: Option<FactTable>,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions {
            prune: true,
            seed_table: None,
        }
    }
}

pub fn ground(domain: &DomainDef, problem: &ProblemDef) -> Result<GroundTask, GroundError> {
    ground_with(domain, problem, GroundOptions::default())
}

/// Parses and grounds in one go, with pruning.
pub fn ground_text(domain: &str, problem: &str) -> Result<GroundTask, GroundError> {
    let d = parse_domain(domain)?;
    let p = parse_problem(problem, &d)?;
    ground(&d, &p)
}

/// Objects in scope for a problem: domain constants, then problem objects.
pub fn object_scope(domain: &DomainDef, problem: &ProblemDef) -> Vec<TypedName> {
    domain.constants.iter().chain(&problem.objects).cloned().collect()
}

/// Object indices (into `objects`) whose type is `ty` or a subtype of it.
pub fn objects_of_type(domain: &DomainDef, objects: &[TypedName], ty: &str) -> Vec<u32> {
    objects
        .iter()
        .enumerate()
        .filter(|(_, o)| domain.is_subtype(&o.ty, ty))
        .map(|(i, _)| i as u32)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Arg {
    Var(usize),
    Obj(u32),
}

/// An atom with predicate and arguments resolved to indices.
#[derive(Debug, Clone)]
pub(crate) struct CAtom {
    pub pred: u32,
    pub args: Vec<Arg>,
}

pub(crate) struct Compiler<'a> {
    pub domain: &'a DomainDef,
    pub objects: &'a [TypedName],
    obj_index: FxHashMap<&'a str, u32>,
}

impl<'a> Compiler<'a> {
    pub fn new(domain: &'a DomainDef, objects: &'a [TypedName]) -> Self {
        let obj_index = objects
            .iter()
            .enumerate()
            .map(|(i, o)| (o.name.as_str(), i as u32))
            .collect();
        Compiler {
            domain,
            objects,
            obj_index,
        }
    }

    pub fn pred_index(&self, name: &str) -> u32 {
        self.domain
            .predicates
            .iter()
            .position(|p| p.name == name)
            .expect("predicate checked by the parser") as u32
    }

    pub fn object(&self, name: &str) -> Option<u32> {
        self.obj_index.get(name).copied()
    }

    pub fn atom(&self, a: &Atom, params: &[TypedName]) -> CAtom {
        let args = a
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => Arg::Var(params.iter().position(|p| &p.name == v).expect("bound variable")),
                Term::Const(c) => Arg::Obj(self.object(c).expect("declared constant")),
            })
            .collect();
        CAtom {
            pred: self.pred_index(&a.predicate),
            args,
        }
    }

    pub fn fact(&self, pred: u32, args: &[u32]) -> Fact {
        Fact {
            predicate: self.domain.predicates[pred as usize].name.clone(),
            args: args.iter().map(|&o| self.objects[o as usize].name.clone()).collect(),
        }
    }

    pub fn instantiate(&self, a: &CAtom, binding: &[u32]) -> Fact {
        let args: Vec<u32> = a
            .args
            .iter()
            .map(|arg| match *arg {
                Arg::Var(v) => binding[v],
                Arg::Obj(o) => o,
            })
            .collect();
        self.fact(a.pred, &args)
    }

    /// Resolves a ground fact to predicate and object indices.
    pub fn resolve(&self, f: &Fact) -> Option<(u32, Vec<u32>)> {
        let pred = self.domain.predicates.iter().position(|p| p.name == f.predicate)? as u32;
        let args = f.args.iter().map(|a| self.object(a)).collect::<Option<Vec<_>>>()?;
        Some((pred, args))
    }
}

pub(crate) struct CSchema {
    pub pre: Vec<CAtom>,
    /// Per parameter: admissible object indices.
    pub domains: Vec<Vec<u32>>,
    /// Parameters that no precondition binds.
    pub free: Vec<usize>,
}

impl CSchema {
    pub fn new(c: &Compiler, params: &[TypedName], pre: &[Atom]) -> Self {
        let pre: Vec<CAtom> = pre.iter().map(|a| c.atom(a, params)).collect();
        let domains = params
            .iter()
            .map(|p| objects_of_type(c.domain, c.objects, &p.ty))
            .collect();
        let free = (0..params.len())
            .filter(|&v| !pre.iter().any(|a| a.args.contains(&Arg::Var(v))))
            .collect();
        CSchema { pre, domains, free }
    }

    fn admits(&self, var: usize, obj: u32) -> bool {
        self.domains[var].binary_search(&obj).is_ok()
    }
}

/// Calls `f` for every full binding that extends `binding` over `vars`.
pub(crate) fn enumerate_free(domains: &[Vec<u32>], vars: &[usize], binding: &mut [u32], f: &mut dyn FnMut(&[u32])) {
    match vars.split_first() {
        None => f(binding),
        Some((&v, rest)) => {
            for &o in &domains[v] {
                binding[v] = o;
                enumerate_free(domains, rest, binding, f);
            }
        }
    }
}

const UNBOUND: u32 = u32::MAX;

/// Reached facts grouped by predicate, each stamped with its round. Facts
/// arrive in round order, so each round is a contiguous run.
struct Reached {
    by_pred: Vec<Vec<(Vec<u32>, u32)>>,
    seen: FxHashSet<(u32, Vec<u32>)>,
    /// (predicate, argument position, object) -> positions in `by_pred`.
    index: FxHashMap<(u32, u32, u32), Vec<u32>>,
}

impl Reached {
    fn insert(&mut self, pred: u32, args: Vec<u32>, round: u32) -> bool {
        if !self.seen.insert((pred, args.clone())) {
            return false;
        }
        let facts = &mut self.by_pred[pred as usize];
        let at = facts.len() as u32;
        for (i, &o) in args.iter().enumerate() {
            self.index.entry((pred, i as u32, o)).or_default().push(at);
        }
        facts.push((args, round));
        true
    }

    fn round(&self, pred: u32, delta: u32) -> std::ops::Range<usize> {
        let facts = &self.by_pred[pred as usize];
        let lo = facts.partition_point(|f| f.1 < delta);
        let hi = facts.partition_point(|f| f.1 <= delta);
        lo..hi
    }
}

/// Joins precondition atoms where atom `k` must match a fact from round
/// `delta`, earlier atoms older facts and later atoms any fact. Atoms are
/// visited in `order`, which starts with `k`.
#[allow(clippy::too_many_arguments)]
fn join(
    schema: &CSchema,
    reached: &Reached,
    k: usize,
    delta: u32,
    order: &[usize],
    binding: &mut Vec<u32>,
    out: &mut dyn FnMut(&[u32]),
) {
    let Some((&j, rest)) = order.split_first() else {
        let free = schema.free.clone();
        enumerate_free(&schema.domains, &free, binding, out);
        return;
    };
    let atom = &schema.pre[j];
    let facts = &reached.by_pred[atom.pred as usize];
    let mut visit = |idx: usize, binding: &mut Vec<u32>| {
        let (args, stamp) = &facts[idx];
        let ok_stamp = match j.cmp(&k) {
            std::cmp::Ordering::Less => *stamp < delta,
            std::cmp::Ordering::Equal => *stamp == delta,
            std::cmp::Ordering::Greater => true,
        };
        if !ok_stamp {
            return;
        }
        let saved = binding.clone();
        let mut ok = true;
        for (arg, &obj) in atom.args.iter().zip(args) {
            match *arg {
                Arg::Obj(o) => ok = o == obj,
                Arg::Var(v) if binding[v] == UNBOUND => {
                    ok = schema.admits(v, obj);
                    binding[v] = obj;
                }
                Arg::Var(v) => ok = binding[v] == obj,
            }
            if !ok {
                break;
            }
        }
        if ok {
            join(schema, reached, k, delta, rest, binding, out);
        }
        binding.copy_from_slice(&saved);
    };
    if j == k {
        for idx in reached.round(atom.pred, delta) {
            visit(idx, binding);
        }
        return;
    }
    let bound = atom.args.iter().enumerate().find_map(|(i, arg)| match *arg {
        Arg::Obj(o) => Some((i, o)),
        Arg::Var(v) if binding[v] != UNBOUND => Some((i, binding[v])),
        Arg::Var(_) => None,
    });
    match bound {
        Some((i, o)) => {
            if let Some(list) = reached.index.get(&(atom.pred, i as u32, o)) {
                for &idx in list {
                    visit(idx as usize, binding);
                }
            }
        }
        None => {
            for idx in 0..facts.len() {
                visit(idx, binding);
            }
        }
    }
}

pub fn ground_with(domain: &DomainDef, problem: &ProblemDef, opts: GroundOptions) -> Result<GroundTask, GroundError> {
    if !problem.domain.eq_ignore_ascii_case(&domain.name) {
        return Err(GroundError::DomainMismatch {
            domain: domain.name.clone(),
            problem: problem.domain.clone(),
        });
    }
    let objects = object_scope(domain, problem);
    let c = Compiler::new(domain, &objects);
    let schemas: Vec<CSchema> = domain.schemas.iter().map(|s| CSchema::new(&c, &s.params, &s.pre)).collect();

    let bindings: Vec<BTreeSet<Vec<u32>>> = if opts.prune {
        reachable_bindings(&c, domain, problem, &schemas)
    } else {
        schemas
            .iter()
            .map(|s| {
                let vars: Vec<usize> = (0..s.domains.len()).collect();
                let mut set = BTreeSet::new();
                let mut b = vec![0; vars.len()];
                enumerate_free(&s.domains, &vars, &mut b, &mut |b| {
                    set.insert(b.to_vec());
                });
                set
            })
            .collect()
    };

    let mut facts = opts.seed_table.unwrap_or_default();
    let init: Vec<FactId> = problem.init.iter().map(|f| facts.intern(f.clone())).collect();
    let mut goals: Vec<FactId> = problem.goals.iter().map(|f| facts.intern(f.clone())).collect();
    goals.sort_unstable();
    goals.dedup();

    let mut actions = Vec::new();
    for (schema, (cs, set)) in domain.schemas.iter().zip(schemas.iter().zip(&bindings)) {
        let add_c: Vec<CAtom> = schema.add.iter().map(|a| c.atom(a, &schema.params)).collect();
        let del_c: Vec<CAtom> = schema.del.iter().map(|a| c.atom(a, &schema.params)).collect();
        for b in set {
            if let Some(a) = instantiate(&c, &mut facts, schema, cs, &add_c, &del_c, b) {
                actions.push(a);
            }
        }
    }
    let n = facts.len();
    Ok(GroundTask {
        init: State::from_facts(n, init),
        facts,
        actions,
        goals,
    })
}

fn instantiate(
    c: &Compiler,
    facts: &mut FactTable,
    schema: &ActionSchema,
    cs: &CSchema,
    add_c: &[CAtom],
    del_c: &[CAtom],
    binding: &[u32],
) -> Option<GroundAction> {
    let mut intern = |atoms: &[CAtom]| -> Vec<FactId> {
        let mut ids: Vec<FactId> = atoms.iter().map(|a| facts.intern(c.instantiate(a, binding))).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    };
    let pre = intern(&cs.pre);
    let add = intern(add_c);
    let mut del = intern(del_c);
    del.retain(|f| add.binary_search(f).is_err());
    // Self-loops such as move(L1, L1) change nothing.
    if del.is_empty() && add.iter().all(|f| pre.binary_search(f).is_ok()) {
        return None;
    }
    Some(GroundAction {
        name: schema.name.clone(),
        args: binding.iter().map(|&o| c.objects[o as usize].name.clone()).collect(),
        pre,
        add,
        del,
        cost: schema.cost,
    })
}

fn reachable_bindings(c: &Compiler, domain: &DomainDef, problem: &ProblemDef, schemas: &[CSchema]) -> Vec<BTreeSet<Vec<u32>>> {
    let mut reached = Reached {
        by_pred: vec![Vec::new(); domain.predicates.len()],
        seen: FxHashSet::default(),
        index: FxHashMap::default(),
    };
    for f in &problem.init {
        let (p, args) = c.resolve(f).expect("init checked by the parser");
        reached.insert(p, args, 0);
    }
    let adds: Vec<Vec<CAtom>> = domain
        .schemas
        .iter()
        .map(|s| s.add.iter().map(|a| c.atom(a, &s.params)).collect())
        .collect();
    let mut out: Vec<BTreeSet<Vec<u32>>> = vec![BTreeSet::new(); schemas.len()];
    let mut delta = 0u32;
    loop {
        let mut fresh: Vec<(u32, Vec<u32>)> = Vec::new();
        for (si, s) in schemas.iter().enumerate() {
            let mut found: Vec<Vec<u32>> = Vec::new();
            let mut binding = vec![UNBOUND; s.domains.len()];
            if s.pre.is_empty() {
                if delta == 0 {
                    let vars: Vec<usize> = (0..s.domains.len()).collect();
                    enumerate_free(&s.domains, &vars, &mut binding, &mut |b| found.push(b.to_vec()));
                }
            } else {
                for k in 0..s.pre.len() {
                    let order: Vec<usize> = std::iter::once(k).chain((0..s.pre.len()).filter(|&j| j != k)).collect();
                    join(s, &reached, k, delta, &order, &mut binding, &mut |b| found.push(b.to_vec()));
                }
            }
            for b in found {
                for a in &adds[si] {
                    let args: Vec<u32> = a
                        .args
                        .iter()
                        .map(|arg| match *arg {
                            Arg::Var(v) => b[v],
                            Arg::Obj(o) => o,
                        })
                        .collect();
                    fresh.push((a.pred, args));
                }
                out[si].insert(b);
            }
        }
        let mut any = false;
        for (p, args) in fresh {
            any |= reached.insert(p, args, delta + 1);
        }
        if !any {
            break;
        }
        delta += 1;
    }
    out
}
