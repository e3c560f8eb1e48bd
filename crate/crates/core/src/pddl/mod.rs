//! Reader for the STRIPS subset of PDDL: typing, positive conjunctive
//! preconditions, add/delete effects and integer action costs.
//!
//! Anything outside that subset is rejected with [`ParseError::Unsupported`]
//! rather than silently ignored.

mod parse;
mod print;
pub mod sexpr;

pub use parse::{parse_domain, parse_problem};
pub(crate) use parse::{keyword_pairs, parse_atom_list, parse_effect, parse_typed_list, AtomContext};

use thiserror::Error;

use crate::fact::Fact;

/// The root of the type hierarchy.
pub const OBJECT: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unsupported construct '{construct}' at {line}:{col}")]
    Unsupported {
        construct: String,
        line: usize,
        col: usize,
    },
    #[error("duplicate action schema '{name}'")]
    DuplicateSchema { name: String },
    #[error("undeclared {kind} '{name}' at {line}:{col}")]
    Undeclared {
        kind: &'static str,
        name: String,
        line: usize,
        col: usize,
    },
    #[error("predicate '{predicate}' expects {expected} arguments, got {found} at {line}:{col}")]
    Arity {
        predicate: String,
        expected: usize,
        found: usize,
        line: usize,
        col: usize,
    },
    #[error("'{name}' has type '{found}' but '{expected}' is required at {line}:{col}")]
    TypeMismatch {
        name: String,
        expected: String,
        found: String,
        line: usize,
        col: usize,
    },
    #[error("goal atom '{atom}' is not ground at {line}:{col}")]
    NonGroundGoal { atom: String, line: usize, col: usize },
    #[error("invalid definition at {line}:{col}: {msg}")]
    Invalid { msg: String, line: usize, col: usize },
}

/// A name with its declared type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

impl TypedName {
    pub fn new(name: &str, ty: &str) -> Self {
        TypedName {
            name: name.to_string(),
            ty: ty.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

/// Argument of a lifted atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// A schema parameter, stored without the leading `?`.
    Var(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub pre: Vec<Atom>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
    pub cost: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainDef {
    pub name: String,
    pub requirements: Vec<String>,
    /// `(type, parent)` pairs in declaration order.
    pub types: Vec<(String, String)>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub schemas: Vec<ActionSchema>,
}

impl DomainDef {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT || self.types.iter().any(|(t, _)| t == ty)
    }

    /// True when `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = ty;
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.types.iter().find(|(t, _)| t == cur) {
                Some((_, parent)) if parent != cur => cur = parent,
                _ => return ancestor == OBJECT,
            }
        }
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemDef {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<Fact>,
    pub goals: Vec<Fact>,
}
