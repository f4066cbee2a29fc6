//! Where each statement executes and where variables reside.

use std::collections::HashMap;
use std::fmt;

use crate::frontend::ast::NodeId;

/// Where a variable's storage currently lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Residency {
    Host,
    Device,
}

/// Execution place of a statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Place {
    /// Host code; every quantum action is its own request.
    Host,
    /// Inside a quantum scope; the whole block is one request.
    Qpu,
    /// Inside a routine body, run wherever the caller runs.
    Routine,
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Place::Host => "host",
            Place::Qpu => "qpu",
            Place::Routine => "routine",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalityTag {
    pub place: Place,
    /// Variables away from their home residency at this statement.
    pub moved: Vec<String>,
}

pub type LocalityMap = HashMap<NodeId, LocalityTag>;
