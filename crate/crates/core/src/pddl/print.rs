//! PDDL rendering of parsed definitions. Output re-parses to an equal value.

use std::fmt::{self, Write};

use super::{Atom, DomainDef, ProblemDef, Term, TypedName, OBJECT};
use crate::fact::Fact;

fn typed_list(items: &[TypedName], var: bool) -> String {
    let mut out = String::new();
    for (i, t) in items.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        if var {
            out.push('?');
        }
        let _ = write!(out, "{} - {}", t.name, t.ty);
    }
    out
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for t in &self.args {
            match t {
                Term::Var(v) => write!(f, " ?{v}")?,
                Term::Const(c) => write!(f, " {c}")?,
            }
        }
        f.write_str(")")
    }
}

fn fact_sexpr(fact: &Fact) -> String {
    let mut s = format!("({}", fact.predicate);
    for a in &fact.args {
        s.push(' ');
        s.push_str(a);
    }
    s.push(')');
    s
}

impl fmt::Display for DomainDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            let types: Vec<String> = self.types.iter().map(|(t, p)| format!("{t} - {p}")).collect();
            writeln!(f, "  (:types {})", types.join(" "))?;
        }
        if !self.constants.is_empty() {
            writeln!(f, "  (:constants {})", typed_list(&self.constants, false))?;
        }
        writeln!(f, "  (:predicates")?;
        for p in &self.predicates {
            if p.params.is_empty() {
                writeln!(f, "    ({})", p.name)?;
            } else {
                writeln!(f, "    ({} {})", p.name, typed_list(&p.params, true))?;
            }
        }
        writeln!(f, "  )")?;
        let costs = self.requirements.iter().any(|r| r == ":action-costs");
        if costs {
            writeln!(f, "  (:functions (total-cost) - number)")?;
        }
        for s in &self.schemas {
            writeln!(f, "  (:action {}", s.name)?;
            writeln!(f, "    :parameters ({})", typed_list(&s.params, true))?;
            write!(f, "    :precondition (and")?;
            for a in &s.pre {
                write!(f, " {a}")?;
            }
            writeln!(f, ")")?;
            write!(f, "    :effect (and")?;
            for a in &s.add {
                write!(f, " {a}")?;
            }
            for a in &s.del {
                write!(f, " (not {a})")?;
            }
            if s.cost != 1 || costs {
                write!(f, " (increase (total-cost) {})", s.cost)?;
            }
            writeln!(f, "))")?;
        }
        writeln!(f, ")")
    }
}

impl fmt::Display for ProblemDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        // Group consecutive objects of one type, as hand-written files do.
        write!(f, "  (:objects")?;
        let mut i = 0;
        while i < self.objects.len() {
            let ty = &self.objects[i].ty;
            let mut j = i;
            while j < self.objects.len() && &self.objects[j].ty == ty {
                write!(f, " {}", self.objects[j].name)?;
                j += 1;
            }
            if ty != OBJECT || j < self.objects.len() {
                write!(f, " - {ty}")?;
            }
            i = j;
        }
        writeln!(f, ")")?;
        writeln!(f, "  (:init")?;
        for fact in &self.init {
            writeln!(f, "    {}", fact_sexpr(fact))?;
        }
        writeln!(f, "  )")?;
        write!(f, "  (:goal (and")?;
        for g in &self.goals {
            write!(f, " {}", fact_sexpr(g))?;
        }
        writeln!(f, "))")?;
        writeln!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_domain, parse_problem};
    use crate::examples::{EXAMPLE_PROBLEM, ROOMS_DOMAIN};

    #[test]
    fn rooms_round_trips() {
        let d = parse_domain(ROOMS_DOMAIN).unwrap();
        let d2 = parse_domain(&d.to_string()).unwrap();
        assert_eq!(d, d2);
        let p = parse_problem(EXAMPLE_PROBLEM, &d).unwrap();
        let p2 = parse_problem(&p.to_string(), &d2).unwrap();
        assert_eq!(p, p2);
    }
}
