//! Equations with designated leaders, as used for the prolonged system and
//! its truncation.

use alloc::vec::Vec;
use core::fmt;

use crate::poly::{DiffVar, Poly};

/// Which prolongation an equation is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EqLabel {
    /// `X_{ij}`: state `i`, derivative index `j`.
    X(usize, usize),
    /// `Y_{ij}`: output `i`, derivative index `j`.
    Y(usize, usize),
}

impl fmt::Display for EqLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EqLabel::X(i, j) => write!(f, "X[{},{}]", i + 1, j),
            EqLabel::Y(i, j) => write!(f, "Y[{},{}]", i + 1, j),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub label: EqLabel,
    pub poly: Poly,
    /// The variable the equation is solved for; it occurs linearly.
    pub leader: DiffVar,
}

impl Equation {
    pub fn new(label: EqLabel, poly: Poly) -> Equation {
        let leader = match label {
            EqLabel::X(i, j) => DiffVar::state(i as u32, j as u32),
            EqLabel::Y(i, j) => DiffVar::output(i as u32, j as u32),
        };
        Equation {
            label,
            poly,
            leader,
        }
    }
}

/// An ordered list of equations with leaders (a triangular set when ordered
/// so that every equation's other variables are determined by earlier ones).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PolySystem {
    pub equations: Vec<Equation>,
}

impl PolySystem {
    pub fn new() -> Self {
        PolySystem::default()
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn push(&mut self, eq: Equation) {
        self.equations.push(eq);
    }

    pub fn contains(&self, label: EqLabel) -> bool {
        self.equations.iter().any(|e| e.label == label)
    }

    pub fn polys(&self) -> impl Iterator<Item = &Poly> {
        self.equations.iter().map(|e| &e.poly)
    }

    /// Reorders into solving order: all `X` by (derivative, state), then all
    /// `Y` by (derivative, output).
    pub fn solving_order(&self) -> PolySystem {
        let mut eqs = self.equations.clone();
        eqs.sort_by_key(|e| match e.label {
            EqLabel::X(i, j) => (0, j, i),
            EqLabel::Y(i, j) => (1, j, i),
        });
        PolySystem { equations: eqs }
    }
}
