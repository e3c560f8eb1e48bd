use super::sexpr::{read_one, syntax, Pos, Sexpr};
use super::{ActionSchema, Atom, DomainDef, ParseError, PredicateDecl, ProblemDef, Term, TypedName, OBJECT};
use crate::fact::Fact;

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":action-costs"];

/// Formula heads that fall outside the STRIPS subset.
const REJECTED_HEADS: &[&str] = &[
    "or", "not", "forall", "exists", "when", "imply", "=", "either", "derived",
];

fn unsupported(construct: &str, pos: Pos) -> ParseError {
    ParseError::Unsupported {
        construct: construct.to_string(),
        line: pos.line,
        col: pos.col,
    }
}

fn invalid(msg: impl Into<String>, pos: Pos) -> ParseError {
    ParseError::Invalid {
        msg: msg.into(),
        line: pos.line,
        col: pos.col,
    }
}

fn expect_list<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], ParseError> {
    e.as_list().ok_or_else(|| syntax(e.pos(), format!("expected a list for {what}")))
}

fn expect_atom<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, ParseError> {
    e.as_atom().ok_or_else(|| syntax(e.pos(), format!("expected a symbol for {what}")))
}

/// Splits `(define (KIND name) sections...)` into its name and sections.
fn open_define<'a>(root: &'a Sexpr, kind: &str) -> Result<(String, &'a [Sexpr]), ParseError> {
    let items = expect_list(root, "define")?;
    if items.first().is_none_or(|h| !h.is_keyword("define")) {
        return Err(syntax(root.pos(), "expected (define ...)"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| syntax(root.pos(), format!("missing ({kind} name)")))?;
    let h = expect_list(header, kind)?;
    if h.len() != 2 || !h[0].is_keyword(kind) {
        return Err(syntax(header.pos(), format!("expected ({kind} name)")));
    }
    Ok((expect_atom(&h[1], "name")?.to_string(), &items[2..]))
}

/// Parses `a b - t c ?x - u` style lists. Variables lose their `?`.
pub(crate) fn parse_typed_list(items: &[Sexpr], vars: bool) -> Result<Vec<TypedName>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let e = &items[i];
        if e.is_keyword("-") {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(e.pos(), "missing type after '-'"))?;
            if let Some(head) = ty.head() {
                return Err(unsupported(&head, ty.pos()));
            }
            let ty = expect_atom(ty, "type")?;
            if pending.is_empty() {
                return Err(syntax(e.pos(), "type annotation without names"));
            }
            out.extend(pending.drain(..).map(|n| TypedName { name: n, ty: ty.to_string() }));
            i += 2;
            continue;
        }
        let name = expect_atom(e, "name")?;
        let name = if vars {
            name.strip_prefix('?')
                .filter(|n| !n.is_empty())
                .ok_or_else(|| syntax(e.pos(), format!("expected a variable, got '{name}'")))?
        } else {
            if name.starts_with('?') {
                return Err(syntax(e.pos(), format!("unexpected variable '{name}'")));
            }
            name
        };
        pending.push(name.to_string());
        i += 1;
    }
    out.extend(pending.into_iter().map(|n| TypedName { name: n, ty: OBJECT.to_string() }));
    Ok(out)
}

/// Name resolution scope for atoms: the domain's predicates and types,
/// bound variables, and known objects.
pub(crate) struct AtomContext<'a> {
    pub domain: &'a DomainDef,
    pub vars: &'a [TypedName],
    pub objects: &'a [TypedName],
}

impl AtomContext<'_> {
    pub fn atom(&self, e: &Sexpr) -> Result<Atom, ParseError> {
        let items = expect_list(e, "atom")?;
        let head = items.first().ok_or_else(|| syntax(e.pos(), "empty atom"))?;
        let name = expect_atom(head, "predicate")?;
        if REJECTED_HEADS.iter().any(|r| name.eq_ignore_ascii_case(r)) {
            return Err(unsupported(&name.to_ascii_lowercase(), e.pos()));
        }
        let decl = self.domain.predicate(name).ok_or_else(|| ParseError::Undeclared {
            kind: "predicate",
            name: name.to_string(),
            line: head.pos().line,
            col: head.pos().col,
        })?;
        let args = &items[1..];
        if args.len() != decl.params.len() {
            return Err(ParseError::Arity {
                predicate: name.to_string(),
                expected: decl.params.len(),
                found: args.len(),
                line: e.pos().line,
                col: e.pos().col,
            });
        }
        let mut terms = Vec::with_capacity(args.len());
        for (a, p) in args.iter().zip(&decl.params) {
            let s = expect_atom(a, "argument")?;
            let (term, ty, kind) = if let Some(v) = s.strip_prefix('?') {
                let tn = self.vars.iter().find(|t| t.name == v);
                (Term::Var(v.to_string()), tn.map(|t| t.ty.as_str()), "variable")
            } else {
                let tn = self.objects.iter().find(|t| t.name == s);
                (Term::Const(s.to_string()), tn.map(|t| t.ty.as_str()), "object")
            };
            let ty = ty.ok_or_else(|| ParseError::Undeclared {
                kind,
                name: s.to_string(),
                line: a.pos().line,
                col: a.pos().col,
            })?;
            if !self.domain.is_subtype(ty, &p.ty) {
                return Err(ParseError::TypeMismatch {
                    name: s.to_string(),
                    expected: p.ty.clone(),
                    found: ty.to_string(),
                    line: a.pos().line,
                    col: a.pos().col,
                });
            }
            terms.push(term);
        }
        Ok(Atom {
            predicate: name.to_string(),
            args: terms,
        })
    }
}

/// Flattens a positive conjunction into atoms.
pub(crate) fn parse_atom_list(ctx: &AtomContext, e: &Sexpr) -> Result<Vec<Atom>, ParseError> {
    let mut out = Vec::new();
    collect_conjunction(ctx, e, &mut out)?;
    Ok(out)
}

fn collect_conjunction(ctx: &AtomContext, e: &Sexpr, out: &mut Vec<Atom>) -> Result<(), ParseError> {
    let items = expect_list(e, "formula")?;
    match e.head().as_deref() {
        None if items.is_empty() => Ok(()),
        Some("and") => items[1..].iter().try_for_each(|c| collect_conjunction(ctx, c, out)),
        _ => {
            out.push(ctx.atom(e)?);
            Ok(())
        }
    }
}

/// Parsed effect: add atoms, delete atoms and an optional action cost.
pub(crate) type Effect = (Vec<Atom>, Vec<Atom>, Option<u32>);

pub(crate) fn parse_effect(ctx: &AtomContext, e: &Sexpr) -> Result<Effect, ParseError> {
    let mut eff = (Vec::new(), Vec::new(), None);
    collect_effect(ctx, e, &mut eff)?;
    Ok(eff)
}

fn collect_effect(ctx: &AtomContext, e: &Sexpr, eff: &mut Effect) -> Result<(), ParseError> {
    let items = expect_list(e, "effect")?;
    match e.head().as_deref() {
        None if items.is_empty() => Ok(()),
        Some("and") => items[1..].iter().try_for_each(|c| collect_effect(ctx, c, eff)),
        Some("not") => {
            if items.len() != 2 {
                return Err(syntax(e.pos(), "(not ...) takes one atom"));
            }
            eff.1.push(ctx.atom(&items[1])?);
            Ok(())
        }
        Some("increase") => {
            let is_total_cost = items.len() == 3
                && items[1].as_list().is_some_and(|f| f.len() == 1 && f[0].is_keyword("total-cost"));
            if !is_total_cost {
                return Err(unsupported("numeric fluents", e.pos()));
            }
            let n = expect_atom(&items[2], "cost")?;
            let cost = n
                .parse::<u32>()
                .map_err(|_| unsupported("non-integer action cost", items[2].pos()))?;
            if eff.2.replace(cost).is_some() {
                return Err(invalid("action cost given twice", e.pos()));
            }
            Ok(())
        }
        Some(h @ ("decrease" | "assign" | "scale-up" | "scale-down")) => Err(unsupported(h, e.pos())),
        _ => {
            eff.0.push(ctx.atom(e)?);
            Ok(())
        }
    }
}

pub fn parse_domain(text: &str) -> Result<DomainDef, ParseError> {
    let root = read_one(text)?;
    let (name, sections) = open_define(&root, "domain")?;
    let mut d = DomainDef {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        schemas: Vec::new(),
    };
    let mut actions = Vec::new();
    let mut predicates = Vec::new();
    for sec in sections {
        let items = expect_list(sec, "section")?;
        let head = sec.head().ok_or_else(|| syntax(sec.pos(), "expected a section keyword"))?;
        match head.as_str() {
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = expect_atom(r, "requirement")?.to_ascii_lowercase();
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name.as_str()) {
                        return Err(unsupported(&r_name, r.pos()));
                    }
                    d.requirements.push(r_name);
                }
            }
            ":types" => {
                for t in parse_typed_list(&items[1..], false)? {
                    if t.name != OBJECT {
                        d.types.push((t.name, t.ty));
                    }
                }
            }
            ":constants" => d.constants.extend(parse_typed_list(&items[1..], false)?),
            ":predicates" => predicates.extend(&items[1..]),
            ":functions" => check_functions(&items[1..])?,
            ":action" => actions.push(sec),
            ":derived" => return Err(unsupported("derived", sec.pos())),
            ":durative-action" => return Err(unsupported("durative", sec.pos())),
            other => return Err(unsupported(other, sec.pos())),
        }
    }
    for (t, parent) in &d.types {
        if !d.has_type(parent) {
            return Err(ParseError::Undeclared {
                kind: "type",
                name: format!("{parent} (parent of {t})"),
                line: root.pos().line,
                col: root.pos().col,
            });
        }
    }
    for c in &d.constants {
        check_type(&d, &c.ty, root.pos())?;
    }
    for p in predicates {
        let items = expect_list(p, "predicate declaration")?;
        let name = expect_atom(
            items.first().ok_or_else(|| syntax(p.pos(), "empty predicate"))?,
            "predicate name",
        )?;
        let params = parse_typed_list(&items[1..], true)?;
        for t in &params {
            check_type(&d, &t.ty, p.pos())?;
        }
        if d.predicate(name).is_some() {
            return Err(invalid(format!("predicate '{name}' declared twice"), p.pos()));
        }
        d.predicates.push(PredicateDecl {
            name: name.to_string(),
            params,
        });
    }
    for a in actions {
        let schema = parse_action(&d, a)?;
        if d.schema(&schema.name).is_some() {
            return Err(ParseError::DuplicateSchema { name: schema.name });
        }
        d.schemas.push(schema);
    }
    Ok(d)
}

fn check_type(d: &DomainDef, ty: &str, pos: Pos) -> Result<(), ParseError> {
    if d.has_type(ty) {
        Ok(())
    } else {
        Err(ParseError::Undeclared {
            kind: "type",
            name: ty.to_string(),
            line: pos.line,
            col: pos.col,
        })
    }
}

fn check_functions(items: &[Sexpr]) -> Result<(), ParseError> {
    let mut i = 0;
    while i < items.len() {
        let f = &items[i];
        let ok = f.as_list().is_some_and(|l| l.len() == 1 && l[0].is_keyword("total-cost"));
        if !ok {
            return Err(unsupported("numeric fluents", f.pos()));
        }
        i += 1;
        if items.get(i).is_some_and(|e| e.is_keyword("-")) {
            i += 2;
        }
    }
    Ok(())
}

/// Parses the keyword/value pairs of a schema-like form starting at `items`.
pub(crate) fn keyword_pairs(items: &[Sexpr]) -> Result<Vec<(String, &Sexpr)>, ParseError> {
    let mut out = Vec::new();
    let mut it = items.iter();
    while let Some(k) = it.next() {
        let key = expect_atom(k, "keyword")?.to_ascii_lowercase();
        if !key.starts_with(':') {
            return Err(syntax(k.pos(), format!("expected a keyword, got '{key}'")));
        }
        let v = it.next().ok_or_else(|| syntax(k.pos(), format!("missing value for {key}")))?;
        out.push((key, v));
    }
    Ok(out)
}

fn parse_action(d: &DomainDef, sec: &Sexpr) -> Result<ActionSchema, ParseError> {
    let items = sec.as_list().unwrap_or_default();
    let name = expect_atom(
        items.get(1).ok_or_else(|| syntax(sec.pos(), "missing action name"))?,
        "action name",
    )?;
    let mut params = Vec::new();
    let mut pre_e = None;
    let mut eff_e = None;
    for (key, v) in keyword_pairs(&items[2..])? {
        match key.as_str() {
            ":parameters" => params = parse_typed_list(expect_list(v, "parameters")?, true)?,
            ":precondition" => pre_e = Some(v),
            ":effect" => eff_e = Some(v),
            other => return Err(unsupported(other, v.pos())),
        }
    }
    for (i, p) in params.iter().enumerate() {
        check_type(d, &p.ty, sec.pos())?;
        if params[..i].iter().any(|q| q.name == p.name) {
            return Err(invalid(format!("parameter ?{} repeated", p.name), sec.pos()));
        }
    }
    let ctx = AtomContext {
        domain: d,
        vars: &params,
        objects: &d.constants,
    };
    let pre = match pre_e {
        Some(e) => parse_atom_list(&ctx, e)?,
        None => Vec::new(),
    };
    let (add, del, cost) = match eff_e {
        Some(e) => parse_effect(&ctx, e)?,
        None => (Vec::new(), Vec::new(), None),
    };
    if let Some(a) = add.iter().find(|a| del.contains(a)) {
        return Err(invalid(
            format!("atom '{}' is both added and deleted", a.predicate),
            sec.pos(),
        ));
    }
    Ok(ActionSchema {
        name: name.to_string(),
        params,
        pre,
        add,
        del,
        cost: cost.unwrap_or(1),
    })
}

pub fn parse_problem(text: &str, domain: &DomainDef) -> Result<ProblemDef, ParseError> {
    let root = read_one(text)?;
    let (name, sections) = open_define(&root, "problem")?;
    let mut p = ProblemDef {
        name,
        domain: domain.name.clone(),
        objects: Vec::new(),
        init: Vec::new(),
        goals: Vec::new(),
    };
    let mut init_e = None;
    let mut goal_e = None;
    for sec in sections {
        let items = expect_list(sec, "section")?;
        let head = sec.head().ok_or_else(|| syntax(sec.pos(), "expected a section keyword"))?;
        match head.as_str() {
            ":domain" => {
                let dn = expect_atom(items.get(1).unwrap_or(sec), "domain name")?;
                if !dn.eq_ignore_ascii_case(&domain.name) {
                    return Err(invalid(
                        format!("problem is for domain '{dn}', not '{}'", domain.name),
                        sec.pos(),
                    ));
                }
            }
            ":requirements" => {}
            ":objects" => p.objects.extend(parse_typed_list(&items[1..], false)?),
            ":init" => init_e = Some(&items[1..]),
            ":goal" => {
                goal_e = Some(items.get(1).ok_or_else(|| syntax(sec.pos(), "empty goal"))?);
            }
            ":metric" => {
                let ok = items.len() == 3
                    && items[1].is_keyword("minimize")
                    && items[2].as_list().is_some_and(|f| f.len() == 1 && f[0].is_keyword("total-cost"));
                if !ok {
                    return Err(unsupported("metric", sec.pos()));
                }
            }
            other => return Err(unsupported(other, sec.pos())),
        }
    }
    for (i, o) in p.objects.iter().enumerate() {
        check_type(domain, &o.ty, root.pos())?;
        let dup = p.objects[..i].iter().chain(&domain.constants).any(|q| q.name == o.name);
        if dup {
            return Err(invalid(format!("object '{}' declared twice", o.name), root.pos()));
        }
    }
    let scope: Vec<TypedName> = domain.constants.iter().chain(&p.objects).cloned().collect();
    let ctx = AtomContext {
        domain,
        vars: &[],
        objects: &scope,
    };
    for e in init_e.unwrap_or_default() {
        if e.head().as_deref() == Some("=") {
            let items = e.as_list().unwrap_or_default();
            let is_cost = items.len() == 3
                && items[1].as_list().is_some_and(|f| f.len() == 1 && f[0].is_keyword("total-cost"));
            if is_cost {
                continue;
            }
        }
        p.init.push(ground_fact(&ctx, e)?);
    }
    if let Some(g) = goal_e {
        check_goal_ground(g)?;
        for a in parse_atom_list(&ctx, g)? {
            p.goals.push(atom_to_fact(&a));
        }
    }
    Ok(p)
}

fn ground_fact(ctx: &AtomContext, e: &Sexpr) -> Result<Fact, ParseError> {
    if let Some(v) = e.as_list().and_then(|l| l.iter().skip(1).find(|a| a.as_atom().is_some_and(|s| s.starts_with('?')))) {
        return Err(invalid("variable in initial state", v.pos()));
    }
    Ok(atom_to_fact(&ctx.atom(e)?))
}

fn check_goal_ground(e: &Sexpr) -> Result<(), ParseError> {
    let Some(items) = e.as_list() else {
        return Ok(());
    };
    if e.head().as_deref() == Some("and") {
        return items[1..].iter().try_for_each(check_goal_ground);
    }
    if let Some(v) = items.iter().skip(1).find(|a| a.as_atom().is_some_and(|s| s.starts_with('?'))) {
        return Err(ParseError::NonGroundGoal {
            atom: render(e),
            line: v.pos().line,
            col: v.pos().col,
        });
    }
    Ok(())
}

fn render(e: &Sexpr) -> String {
    match e {
        Sexpr::Atom(s, _) => s.clone(),
        Sexpr::List(items, _) => {
            let inner: Vec<String> = items.iter().map(render).collect();
            format!("({})", inner.join(" "))
        }
    }
}

pub(crate) fn atom_to_fact(a: &Atom) -> Fact {
    Fact {
        predicate: a.predicate.clone(),
        args: a
            .args
            .iter()
            .map(|t| match t {
                Term::Const(c) | Term::Var(c) => c.clone(),
            })
            .collect(),
    }
}
