//! Specialization of the truncated system at a fresh random point.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::diff::{evaluate, order_in, substitute, PointAssignment};
use crate::linalg::LinalgError;
use crate::poly::{DiffVar, Poly, VarKind};
use crate::prolong::{ceil, Probability, ProlongedSystem, Sample, Truncation};
use crate::system::{EqLabel, PolySystem};

/// `D2 = ceil(6 |theta_ell| (prod deg P) (1 + 2 d0 max beta) / (1 - p))`.
pub fn compute_d2(theta_ell_size: usize, et: &PolySystem, d0: u32, beta: &[usize], p: &Probability) -> BigInt {
    let prod = et
        .polys()
        .fold(BigInt::one(), |acc, q| acc * BigInt::from(q.degree()));
    let max_beta = beta.iter().copied().max().unwrap_or(0);
    let tail = BigInt::one() + BigInt::from(2 * u64::from(d0)) * BigInt::from(max_beta);
    let num = BigInt::from(6) * BigInt::from(theta_ell_size) * prod * tail;
    ceil(&(BigRational::from_integer(num) * p.inverse_failure()))
}

/// `E^t` with outputs and inputs replaced by the values generated from a
/// random `theta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecializedSystem {
    pub ehat: Vec<Poly>,
    pub qhat: Poly,
    pub theta_hat: Vec<BigInt>,
    pub d2: BigInt,
    /// The generating point: `theta`, inputs and every solved derivative.
    pub point: PointAssignment,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SpecializeError {
    #[error(transparent)]
    Solve(#[from] LinalgError),
    #[error("specialized system does not vanish at its generating point")]
    Residual,
}

/// Labels needed to solve the output equations of `labels`: the outputs
/// themselves and every state equation reachable through occurring state
/// derivatives.
pub fn triangular_closure(e: &mut ProlongedSystem, labels: &[EqLabel]) -> Vec<EqLabel> {
    let mut out: BTreeSet<EqLabel> = labels.iter().copied().collect();
    let mut todo: Vec<EqLabel> = labels.to_vec();
    while let Some(l) = todo.pop() {
        let eq = e.equation(l);
        for v in eq.poly.vars() {
            if v.kind == VarKind::State {
                let x = EqLabel::X(v.index as usize, v.order as usize);
                if out.insert(x) {
                    todo.push(x);
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Highest input derivative order among the equations `labels`.
pub fn input_order(e: &mut ProlongedSystem, labels: &[EqLabel]) -> usize {
    let mut best = 0;
    for &l in labels {
        let eq = e.equation(l);
        for k in 0..e.n_inputs {
            best = best.max(order_in(&eq.poly, VarKind::Input, k as u32).max(0) as usize);
        }
    }
    best
}

/// Solves the closure of `E^t` at `sample` and substitutes the output and
/// input values into `E^t` and the inputs into `Q`.
pub fn specialize(
    e: &mut ProlongedSystem,
    trunc: &Truncation,
    sample: &Sample,
    d2: BigInt,
) -> Result<SpecializedSystem, SpecializeError> {
    let closure = triangular_closure(e, &trunc.labels());
    let point = e.solve(&closure, sample)?;
    let mut bindings = sample.input_presets();
    for (v, val) in &point {
        if v.kind == VarKind::Output {
            bindings.insert(*v, val.clone());
        }
    }
    let ehat: Vec<Poly> = trunc
        .et
        .polys()
        .map(|p| substitute(p, &bindings).poly)
        .collect();
    let qhat = substitute(&e.q, &sample.input_presets()).poly;
    let spec = SpecializedSystem {
        ehat,
        qhat,
        theta_hat: sample.theta.clone(),
        d2,
        point,
    };
    if !spec.vanishes_at_generating_point() {
        return Err(SpecializeError::Residual);
    }
    Ok(spec)
}

impl SpecializedSystem {
    /// Every `P` in `Ehat` vanishes and `Qhat` does not at the generating
    /// point.
    pub fn vanishes_at_generating_point(&self) -> bool {
        let all_zero = self
            .ehat
            .iter()
            .all(|p| evaluate(p, &self.point).is_ok_and(|v| v.is_zero()));
        let q_ok = evaluate(&self.qhat, &self.point).is_ok_and(|v| !v.is_zero());
        all_zero && q_ok
    }

    pub fn variables(&self) -> BTreeSet<DiffVar> {
        let mut vs = BTreeSet::new();
        for p in self.ehat.iter().chain(core::iter::once(&self.qhat)) {
            vs.extend(p.vars());
        }
        vs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prolong::{build_e, truncate};
    use crate::prolong::tests::example_model;
    use alloc::vec;

    fn sample(theta: &[i64]) -> Sample {
        Sample {
            theta: theta.iter().map(|&t| BigInt::from(t)).collect(),
            inputs: vec![],
        }
    }

    #[test]
    fn d2_values() {
        let m = example_model();
        let mut e = build_e(&m);
        let labels = e.all_labels();
        let pt = e.solve(&labels, &sample(&[1210, 896, 453])).unwrap();
        let t = truncate(&mut e, &pt).unwrap();
        let p: Probability = "0.8".parse().unwrap();
        assert_eq!(compute_d2(3, &t.et, 2, &t.beta, &p), BigInt::from(195_840));

        let mut one = PolySystem::new();
        one.push(crate::system::Equation::new(
            EqLabel::X(0, 0),
            &Poly::var(DiffVar::state(0, 0)) - &Poly::var(DiffVar::param(0)),
        ));
        let half: Probability = "0.5".parse().unwrap();
        assert_eq!(compute_d2(1, &one, 1, &[0], &half), BigInt::from(12));
    }

    #[test]
    fn specialization_removes_outputs() {
        let m = example_model();
        let mut e = build_e(&m);
        let labels = e.all_labels();
        let pt = e.solve(&labels, &sample(&[1210, 896, 453])).unwrap();
        let t = truncate(&mut e, &pt).unwrap();
        let spec = specialize(&mut e, &t, &sample(&[2440, 171852, 68794]), BigInt::from(195_840)).unwrap();
        assert_eq!(spec.ehat.len(), 8);
        assert!(spec.qhat.is_one());
        assert!(spec
            .variables()
            .iter()
            .all(|v| matches!(v.kind, VarKind::Param | VarKind::State)));
        assert!(spec.vanishes_at_generating_point());
    }
}
