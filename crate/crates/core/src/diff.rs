//! The derivation on the differential polynomial ring, partial derivatives,
//! and exact evaluation / specialization at rational points.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::poly::{DiffVar, Monomial, Poly, VarKind};

/// Exact rational values for a finite set of variables.
pub type PointAssignment = BTreeMap<DiffVar, BigRational>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no value assigned to {0}")]
    MissingAssignment(DiffVar),
}

/// Applies the derivation: `(z^(q))' = z^(q+1)` for states, outputs and
/// inputs; parameters and constants differentiate to zero.
pub fn differentiate(p: &Poly) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        for &(v, e) in m.factors() {
            let Some(dv) = v.derivative() else { continue };
            let (_, rest) = m.without_one(v).expect("variable occurs");
            out.add_term(rest.times_var(dv, 1), c * BigInt::from(e));
        }
    }
    out
}

/// `k`-fold derivative; `k = 0` returns `p` unchanged.
pub fn iterated_derivative(p: &Poly, k: u32) -> Poly {
    let mut q = p.clone();
    for _ in 0..k {
        q = differentiate(&q);
    }
    q
}

/// Largest order with which `z_index` of the given kind occurs in `p`, or
/// `-1` if it does not occur.
pub fn order_in(p: &Poly, kind: VarKind, index: u32) -> i64 {
    p.terms()
        .flat_map(|(m, _)| m.vars())
        .filter(|v| v.kind == kind && v.index == index)
        .map(|v| i64::from(v.order))
        .max()
        .unwrap_or(-1)
}

/// Formal partial derivative with respect to a single indeterminate.
pub fn partial(p: &Poly, v: DiffVar) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in p.terms() {
        if let Some((e, rest)) = m.without_one(v) {
            out.add_term(rest, c * BigInt::from(e));
        }
    }
    out
}

fn lookup(point: &PointAssignment, v: DiffVar) -> Result<&BigRational, EvalError> {
    point.get(&v).ok_or(EvalError::MissingAssignment(v))
}

fn monomial_value(m: &Monomial, point: &PointAssignment) -> Result<BigRational, EvalError> {
    let mut acc = BigRational::one();
    for &(v, e) in m.factors() {
        let x = lookup(point, v)?;
        for _ in 0..e {
            acc *= x;
        }
    }
    Ok(acc)
}

fn monomial_value_int(m: &Monomial, point: &BTreeMap<DiffVar, &BigInt>) -> Option<BigInt> {
    let mut acc = BigInt::one();
    for &(v, e) in m.factors() {
        let x = point.get(&v)?;
        for _ in 0..e {
            acc *= *x;
        }
    }
    Some(acc)
}

/// Exact value of `p` at `point`.
pub fn evaluate(p: &Poly, point: &PointAssignment) -> Result<BigRational, EvalError> {
    // Integer fast path: points are integral whenever Q = 1.
    let vars = p.vars();
    let mut ints = BTreeMap::new();
    for v in &vars {
        let x = lookup(point, *v)?;
        if !x.is_integer() {
            ints.clear();
            break;
        }
        ints.insert(*v, x.numer());
    }
    if ints.len() == vars.len() {
        let mut acc = BigInt::zero();
        for (m, c) in p.terms() {
            acc += c * monomial_value_int(m, &ints).expect("all assigned");
        }
        return Ok(BigRational::from_integer(acc));
    }
    let mut acc = BigRational::zero();
    for (m, c) in p.terms() {
        acc += monomial_value(m, point)? * BigRational::from_integer(c.clone());
    }
    Ok(acc)
}

/// Gradient of `p` with respect to `vars`, evaluated at `point`.
pub fn gradient_at(
    p: &Poly,
    vars: &[DiffVar],
    point: &PointAssignment,
) -> Result<Vec<BigRational>, EvalError> {
    let index: BTreeMap<DiffVar, usize> = vars.iter().enumerate().map(|(k, v)| (*v, k)).collect();
    let mut out = alloc::vec![BigRational::zero(); vars.len()];
    for (m, c) in p.terms() {
        for &(v, e) in m.factors() {
            let Some(&col) = index.get(&v) else { continue };
            let (_, rest) = m.without_one(v).expect("variable occurs");
            let val = monomial_value(&rest, point)?;
            out[col] += val * BigRational::from_integer(c * BigInt::from(e));
        }
    }
    Ok(out)
}

/// Result of a partial specialization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Substituted {
    /// Integral, content-normalized polynomial in the unbound variables.
    pub poly: Poly,
    /// Positive factor with `poly = factor * p[bindings]`.
    pub factor: BigRational,
}

/// Replaces the bound variables by their values, then clears denominators
/// and removes the integer content with one positive rational scaling.
pub fn substitute(p: &Poly, bindings: &PointAssignment) -> Substituted {
    let mut acc: BTreeMap<Monomial, BigRational> = BTreeMap::new();
    for (m, c) in p.terms() {
        let mut coeff = BigRational::from_integer(c.clone());
        let mut free = Vec::new();
        for &(v, e) in m.factors() {
            match bindings.get(&v) {
                Some(x) => {
                    for _ in 0..e {
                        coeff *= x;
                    }
                }
                None => free.push((v, e)),
            }
        }
        if coeff.is_zero() {
            continue;
        }
        let key = Monomial::from_pairs(free);
        let slot = acc.entry(key).or_insert_with(BigRational::zero);
        *slot += coeff;
    }
    acc.retain(|_, c| !c.is_zero());
    let lcm = acc
        .values()
        .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
    let poly = Poly::from_terms(
        acc.into_iter()
            .map(|(m, c)| (m, (c * BigRational::from_integer(lcm.clone())).to_integer())),
    );
    let content = poly.content();
    if content.is_zero() {
        return Substituted {
            poly,
            factor: BigRational::from_integer(lcm),
        };
    }
    Substituted {
        poly: poly.div_exact(&content),
        factor: BigRational::new(lcm, content),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn v(kind: VarKind, i: u32, o: u32) -> Poly {
        Poly::var(DiffVar::new(kind, i, o))
    }

    fn int(n: i64) -> Poly {
        Poly::constant(n)
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn leibniz_worked_example() {
        // (2 z1'^2 z3 + 3 z5'')' = 4 z1' z1'' z3 + 2 z1'^2 z3' + 3 z5'''
        let z = |i, o| v(VarKind::State, i, o);
        let p = &(&int(2) * &(&z(0, 1).pow(2) * &z(2, 0))) + &(&int(3) * &z(4, 2));
        let expect = &(&(&int(4) * &(&(&z(0, 1) * &z(0, 2)) * &z(2, 0)))
            + &(&int(2) * &(&z(0, 1).pow(2) * &z(2, 1))))
            + &(&int(3) * &z(4, 3));
        assert_eq!(differentiate(&p), expect);
    }

    #[test]
    fn constants_and_parameters_vanish() {
        assert!(differentiate(&int(7)).is_zero());
        let mu_x = &v(VarKind::Param, 0, 0) * &v(VarKind::State, 0, 0);
        assert_eq!(
            differentiate(&mu_x),
            &v(VarKind::Param, 0, 0) * &v(VarKind::State, 0, 1)
        );
    }

    #[test]
    fn iterated_derivatives_of_example_system() {
        let x = |o| v(VarKind::State, 0, o);
        let y = |o| v(VarKind::Output, 0, o);
        let mu = |i| v(VarKind::Param, i, 0);
        let x0 = &x(0) - &v(VarKind::Param, 2, 0);
        assert_eq!(iterated_derivative(&x0, 0), x0);
        let x1 = &(&x(1) - &(&mu(1) * &x(0))) - &mu(0);
        assert_eq!(iterated_derivative(&x1, 1), &x(2) - &(&mu(1) * &x(1)));
        let y0 = &y(0) - &x(0).pow(2);
        let y3 = &(&y(3) - &(&int(2) * &(&x(0) * &x(3)))) - &(&int(6) * &(&x(1) * &x(2)));
        assert_eq!(iterated_derivative(&y0, 3), y3);
        assert_eq!(order_in(&y3, VarKind::State, 0), 3);
        assert_eq!(order_in(&mu(0), VarKind::State, 0), -1);
        assert_eq!(order_in(&(&x(0) * &x(4)), VarKind::State, 0), 4);
    }

    #[test]
    fn partial_derivatives() {
        let x = v(VarKind::State, 0, 0);
        let y = v(VarKind::Output, 0, 0);
        let xv = DiffVar::state(0, 0);
        assert_eq!(partial(&(&y - &x.pow(2)), xv), &int(-2) * &x);
        assert!(partial(&int(5), xv).is_zero());
        let mu1 = v(VarKind::Param, 0, 0);
        let mu2 = v(VarKind::Param, 1, 0);
        let x1 = &(&v(VarKind::State, 0, 1) - &(&mu2 * &x)) - &mu1;
        assert_eq!(partial(&x1, DiffVar::param(1)), -&x);
    }

    #[test]
    fn evaluation_at_golden_values() {
        let x = v(VarKind::State, 0, 0);
        let y = v(VarKind::Output, 0, 0);
        let mut pt = PointAssignment::new();
        pt.insert(DiffVar::state(0, 0), q(453));
        assert_eq!(evaluate(&(&x - &int(453)), &pt), Ok(q(0)));
        pt.insert(DiffVar::output(0, 0), q(205209));
        assert_eq!(evaluate(&(&y - &x.pow(2)), &pt), Ok(q(0)));
        assert_eq!(evaluate(&Poly::zero(), &PointAssignment::new()), Ok(q(0)));
        assert_eq!(
            evaluate(&y, &PointAssignment::new()),
            Err(EvalError::MissingAssignment(DiffVar::output(0, 0)))
        );
        pt.insert(DiffVar::state(0, 0), BigRational::new(1.into(), 2.into()));
        assert_eq!(
            evaluate(&(&x * &int(4)), &pt),
            Ok(q(2))
        );
    }

    #[test]
    fn substitution_examples() {
        let x = v(VarKind::State, 0, 0);
        let y = v(VarKind::Output, 0, 0);
        let mut b = PointAssignment::new();
        b.insert(DiffVar::output(0, 0), q(205209));
        let s = substitute(&(&y - &x.pow(2)), &b);
        assert_eq!(s.poly, &int(205209) - &x.pow(2));
        assert_eq!(s.factor, q(1));

        let p = &(&x * &v(VarKind::Input, 0, 1)) + &v(VarKind::Input, 0, 0);
        assert_eq!(substitute(&p, &PointAssignment::new()).poly, p);
        let mut b = PointAssignment::new();
        b.insert(DiffVar::input(0, 0), q(3));
        b.insert(DiffVar::input(0, 1), q(5));
        assert_eq!(substitute(&p, &b).poly, &(&int(5) * &x) + &int(3));

        // Rational bindings are cleared with a recorded positive factor.
        let mut b = PointAssignment::new();
        b.insert(DiffVar::output(0, 0), BigRational::new(1.into(), 3.into()));
        let s = substitute(&(&y - &x), &b);
        assert_eq!(s.poly, &int(1) - &(&int(3) * &x));
        assert_eq!(s.factor, q(3));
        let _ = vec![0u8];
    }

    #[test]
    fn gradient_matches_partials() {
        let x = v(VarKind::State, 0, 0);
        let mu = v(VarKind::Param, 1, 0);
        let p = &(&mu * &x.pow(2)) - &x;
        let mut pt = PointAssignment::new();
        pt.insert(DiffVar::state(0, 0), q(3));
        pt.insert(DiffVar::param(1), q(2));
        let vars = [DiffVar::param(1), DiffVar::state(0, 0), DiffVar::state(0, 1)];
        let g = gradient_at(&p, &vars, &pt).unwrap();
        assert_eq!(g, vec![q(9), q(11), q(0)]);
    }
}
