//! Static checking, routine instantiation and locality assignment.

mod check;
pub mod locality;
pub mod routine;
pub mod types;

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use crate::diag::{has_errors, Diagnostic};
use crate::frontend::ast::{FuncDef, Item, NodeId, Program};
use crate::frontend::parse_source;

pub use check::{BUILTINS, MAX_DEPTH};
pub use locality::{LocalityMap, LocalityTag, Place, Residency};
pub use routine::{bind_arguments, check_call_compat, fill_sizes, monomorphize, ConcreteRoutine, RoutineKey};
pub use types::{const_eval, resolve_type, Sizes, Ty};

/// How a quantum declaration obtains its initial state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitSource {
    Zero,
    ClassicalConst(i128),
    ClassicalExpr,
    QuantumExpr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeclInfo {
    pub ty: Ty,
    pub init: InitSource,
}

/// A checked program with its routine instances.
#[derive(Clone, Debug)]
pub struct Elaborated {
    pub program: Program,
    pub routines: HashMap<RoutineKey, Arc<ConcreteRoutine>>,
    /// Classical functions by name.
    pub functions: HashMap<String, FuncDef>,
    /// Routine definitions by name, before instantiation.
    pub generic: HashMap<String, FuncDef>,
    pub locality: LocalityMap,
    /// Keyed by declaration statement and declarator index.
    pub decls: HashMap<(NodeId, usize), DeclInfo>,
    /// Identifier reads and writes of host-resident variables from QPU code.
    pub remote: HashSet<NodeId>,
    /// Warnings; errors make elaboration fail.
    pub diagnostics: Vec<Diagnostic>,
}

impl Elaborated {
    pub fn routine(&self, name: &str, sizes: &[u64]) -> Option<&Arc<ConcreteRoutine>> {
        self.routines.get(&(name.to_string(), sizes.to_vec()))
    }

    pub fn place(&self, stmt: NodeId) -> Place {
        self.locality.get(&stmt).map_or(Place::Host, |t| t.place)
    }
}

pub fn elaborate(program: &Program) -> Result<Elaborated, Vec<Diagnostic>> {
    let c = check::Checker::run(program);
    if has_errors(&c.diags) {
        return Err(c.diags);
    }
    let mut functions = HashMap::new();
    let mut generic = HashMap::new();
    for item in &program.items {
        if let Item::Func(f) = item {
            let table = if f.is_routine() { &mut generic } else { &mut functions };
            table.insert(f.name.clone(), f.clone());
        }
    }
    Ok(Elaborated {
        program: program.clone(),
        routines: c.routines,
        functions,
        generic,
        locality: c.locality,
        decls: c.decls,
        remote: c.remote,
        diagnostics: c.diags,
    })
}

/// Parses and elaborates a source text.
pub fn check_source(src: &str) -> Result<Elaborated, Vec<Diagnostic>> {
    let program = parse_source(src).map_err(|d| vec![d])?;
    elaborate(&program)
}
