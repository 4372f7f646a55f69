//! The algebraic differential model `x' = f(x, mu, u)`, `y = g(x, mu, u)`,
//! `x(0) = x*`.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::poly::{DiffVar, Poly, RatFunc, VarKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("undeclared symbol {0}")]
    UndeclaredSymbol(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("zero denominator in the right-hand side of `{0}`")]
    ZeroDenominator(String),
    #[error("model has no outputs")]
    EmptyOutputs,
    #[error("model has no states")]
    EmptyStates,
    #[error("{0}")]
    Shape(String),
}

/// A rational ODE model.
///
/// Parameters `theta` are the system parameters `mu` followed by one
/// initial-condition symbol per state; `DiffVar::param(k)` addresses
/// `theta[k]`. State, output and input variables are addressed by their
/// declaration index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub name: String,
    pub params: Vec<String>,
    pub inputs: Vec<String>,
    pub states: Vec<String>,
    /// Names of the initial-condition symbols, one per state.
    pub initial: Vec<String>,
    pub state_rhs: Vec<RatFunc>,
    pub outputs: Vec<String>,
    pub output_rhs: Vec<RatFunc>,
}

/// Default name of the initial-condition symbol of a state.
pub fn default_initial_name(state: &str) -> String {
    format!("{state}*")
}

impl Model {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    /// `s = |mu| + |x*|`.
    pub fn n_theta(&self) -> usize {
        self.params.len() + self.states.len()
    }

    /// Names of `theta` in index order.
    pub fn theta_names(&self) -> Vec<String> {
        self.params.iter().chain(self.initial.iter()).cloned().collect()
    }

    pub fn theta_index(&self, name: &str) -> Option<usize> {
        self.params
            .iter()
            .chain(self.initial.iter())
            .position(|p| p == name)
    }

    /// The initial-condition parameter of state `i`.
    pub fn initial_var(&self, i: usize) -> DiffVar {
        DiffVar::param((self.params.len() + i) as u32)
    }

    /// Human-readable name of a variable, with `'` for first derivatives and
    /// `^(k)` for higher ones.
    pub fn var_name(&self, v: DiffVar) -> String {
        let base = match v.kind {
            VarKind::Param => self.theta_names().get(v.index as usize).cloned(),
            VarKind::State => self.states.get(v.index as usize).cloned(),
            VarKind::Output => self.outputs.get(v.index as usize).cloned(),
            VarKind::Input => self.inputs.get(v.index as usize).cloned(),
            VarKind::Aux => Some(match v.index {
                0 => String::from("z"),
                1 => String::from("w"),
                k => format!("aux{k}"),
            }),
        }
        .unwrap_or_else(|| format!("{v}"));
        match v.order {
            0 => base,
            1 => format!("{base}'"),
            k => format!("{base}^({k})"),
        }
    }

    /// Checks the structural invariants: declared names are unique, every
    /// right-hand side uses only order-0 states, `mu` and inputs, and no
    /// denominator vanishes.
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.states.is_empty() {
            return Err(ModelError::EmptyStates);
        }
        if self.outputs.is_empty() {
            return Err(ModelError::EmptyOutputs);
        }
        if self.state_rhs.len() != self.states.len() {
            return Err(ModelError::Shape(format!(
                "{} states but {} right-hand sides",
                self.states.len(),
                self.state_rhs.len()
            )));
        }
        if self.output_rhs.len() != self.outputs.len() {
            return Err(ModelError::Shape(format!(
                "{} outputs but {} right-hand sides",
                self.outputs.len(),
                self.output_rhs.len()
            )));
        }
        if self.initial.len() != self.states.len() {
            return Err(ModelError::Shape(format!(
                "{} states but {} initial-condition names",
                self.states.len(),
                self.initial.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in self
            .params
            .iter()
            .chain(&self.inputs)
            .chain(&self.states)
            .chain(&self.initial)
            .chain(&self.outputs)
        {
            if !seen.insert(name.as_str()) {
                return Err(ModelError::DuplicateName(name.clone()));
            }
        }
        let rhs = self
            .states
            .iter()
            .zip(&self.state_rhs)
            .chain(self.outputs.iter().zip(&self.output_rhs));
        for (name, r) in rhs {
            if r.den().is_zero() {
                return Err(ModelError::ZeroDenominator(name.clone()));
            }
            for v in r.vars() {
                let ok = v.order == 0
                    && match v.kind {
                        VarKind::Param => (v.index as usize) < self.params.len(),
                        VarKind::State => (v.index as usize) < self.states.len(),
                        VarKind::Input => (v.index as usize) < self.inputs.len(),
                        VarKind::Output | VarKind::Aux => false,
                    };
                if !ok {
                    return Err(ModelError::UndeclaredSymbol(format!("{v} in `{name}`")));
                }
            }
        }
        Ok(())
    }

    fn distinct_denominators(&self) -> Vec<&Poly> {
        let mut dens: Vec<&Poly> = Vec::new();
        for r in self.state_rhs.iter().chain(&self.output_rhs) {
            if !r.den().is_one() && !dens.contains(&r.den()) {
                dens.push(r.den());
            }
        }
        dens
    }

    /// A common denominator `Q` of all right-hand sides: the product of the
    /// pairwise-distinct denominators. `Q = 1` for polynomial models.
    pub fn common_denominator(&self) -> Poly {
        self.distinct_denominators()
            .into_iter()
            .fold(Poly::one(), |acc, d| &acc * d)
    }

    /// `Q * r` as a polynomial, for `Q` from [`Model::common_denominator`]:
    /// the numerator times every other distinct denominator.
    pub fn cleared(&self, r: &RatFunc) -> Poly {
        self.distinct_denominators()
            .into_iter()
            .filter(|d| *d != r.den())
            .fold(r.num().clone(), |acc, d| &acc * d)
    }

    /// `Q*f_i` for every state.
    pub fn cleared_state_rhs(&self) -> Vec<Poly> {
        self.state_rhs.iter().map(|r| self.cleared(r)).collect()
    }

    /// `Q*g_j` for every output.
    pub fn cleared_output_rhs(&self) -> Vec<Poly> {
        self.output_rhs.iter().map(|r| self.cleared(r)).collect()
    }

    /// `d0 = max(deg Qf, deg Qg, deg Q)`.
    pub fn degree_d0(&self) -> u32 {
        self.cleared_state_rhs()
            .iter()
            .chain(self.cleared_output_rhs().iter())
            .map(Poly::degree)
            .chain(core::iter::once(self.common_denominator().degree()))
            .max()
            .unwrap_or(0)
    }
}
