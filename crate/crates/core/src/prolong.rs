//! Prolongation of the model into the polynomial system `E`, sampling of
//! generic points, and the Jacobian-rank truncation to `E^t`.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_bigint::{BigInt, RandBigInt};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::diff::{differentiate, evaluate, gradient_at, order_in, EvalError, PointAssignment};
use crate::linalg::{rank, solve_triangular, LinalgError, RatMatrix};
use crate::model::Model;
use crate::poly::{DiffVar, Poly, VarKind};
use crate::system::{EqLabel, Equation, PolySystem};

/// A success probability in the open interval `(0, 1)`, kept exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probability(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("probability must be a number strictly between 0 and 1, got `{0}`")]
pub struct InvalidProbability(pub String);

impl Probability {
    pub fn new(p: BigRational) -> Result<Self, InvalidProbability> {
        if p.is_positive() && p < BigRational::one() {
            Ok(Probability(p))
        } else {
            Err(InvalidProbability(alloc::format!("{p}")))
        }
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    /// `1 / (1 - p)`.
    pub fn inverse_failure(&self) -> BigRational {
        (BigRational::one() - &self.0).recip()
    }
}

impl FromStr for Probability {
    type Err = InvalidProbability;

    /// Accepts decimals (`0.99`, `.5`) and fractions (`99/100`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidProbability(String::from(s));
        let t = s.trim();
        let value = if let Some((a, b)) = t.split_once('/') {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            BigRational::new(a, b)
        } else {
            let (int, frac) = t.split_once('.').unwrap_or((t, ""));
            let digits_ok = |d: &str| d.bytes().all(|c| c.is_ascii_digit());
            if (int.is_empty() && frac.is_empty()) || !digits_ok(int) || !digits_ok(frac) {
                return Err(bad());
            }
            let mut all = String::from(int);
            all.push_str(frac);
            let n: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
            BigRational::new(n, num_traits::pow(BigInt::from(10), frac.len()))
        };
        Probability::new(value).map_err(|_| bad())
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `ceil(x)` for a nonnegative rational.
pub fn ceil(x: &BigRational) -> BigInt {
    let (q, r) = x.numer().div_rem(x.denom());
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

/// `D1 = ceil(2 d0 s (n+1)(1 + 2 d0 s) / (1 - p))`.
pub fn compute_d1(d0: u32, s: usize, n: usize, p: &Probability) -> BigInt {
    let d0 = BigInt::from(d0);
    let s = BigInt::from(s);
    let two_d0_s = BigInt::from(2) * &d0 * &s;
    let num = &two_d0_s * BigInt::from(n + 1) * (BigInt::one() + &two_d0_s);
    ceil(&(BigRational::from_integer(num) * p.inverse_failure()))
}

/// The prolonged system `E` for a model, extended lazily past order `s`.
#[derive(Debug, Clone)]
pub struct ProlongedSystem {
    pub s: usize,
    pub n_theta: usize,
    pub n_mu: usize,
    /// Common denominator `Q`.
    pub q: Poly,
    /// `x[i][j] = X_{ij}`.
    pub x: Vec<Vec<Poly>>,
    /// `y[i][j] = Y_{ij}`.
    pub y: Vec<Vec<Poly>>,
    pub n_inputs: usize,
}

/// Builds `E` with `X_{i0} = x_i - x_i*`, `X_{ij} = (Q x_i' - Q f_i)^{(j-1)}`
/// for `1 <= j <= s` and `Y_{ij} = (Q y_i - Q g_i)^{(j)}` for `0 <= j <= s`.
pub fn build_e(model: &Model) -> ProlongedSystem {
    let s = model.n_theta();
    let q = model.common_denominator();
    let qf = model.cleared_state_rhs();
    let qg = model.cleared_output_rhs();
    let x = (0..model.n_states())
        .map(|i| {
            let xi = Poly::var(DiffVar::state(i as u32, 0));
            let mut row = vec![&xi - &Poly::var(model.initial_var(i))];
            let dxi = Poly::var(DiffVar::state(i as u32, 1));
            let mut cur = &(&q * &dxi) - &qf[i];
            for _ in 1..=s {
                row.push(cur.clone());
                cur = differentiate(&cur);
            }
            row
        })
        .collect();
    let y = (0..model.n_outputs())
        .map(|i| {
            let yi = Poly::var(DiffVar::output(i as u32, 0));
            let mut cur = &(&q * &yi) - &qg[i];
            let mut row = Vec::with_capacity(s + 1);
            for _ in 0..=s {
                row.push(cur.clone());
                cur = differentiate(&cur);
            }
            row
        })
        .collect();
    ProlongedSystem {
        s,
        n_theta: s,
        n_mu: model.params.len(),
        q,
        x,
        y,
        n_inputs: model.n_inputs(),
    }
}

impl ProlongedSystem {
    pub fn n_states(&self) -> usize {
        self.x.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.y.len()
    }

    /// Number of equations of `E` up to order `s`.
    pub fn len(&self) -> usize {
        self.n_states() * (self.s + 1) + self.n_outputs() * (self.s + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `X_{ij}`, extending the prolongation if needed.
    pub fn x_eq(&mut self, i: usize, j: usize) -> &Poly {
        while self.x[i].len() <= j {
            let next = differentiate(self.x[i].last().expect("nonempty"));
            self.x[i].push(next);
        }
        &self.x[i][j]
    }

    /// `Y_{ij}`, extending the prolongation if needed.
    pub fn y_eq(&mut self, i: usize, j: usize) -> &Poly {
        while self.y[i].len() <= j {
            let next = differentiate(self.y[i].last().expect("nonempty"));
            self.y[i].push(next);
        }
        &self.y[i][j]
    }

    pub fn equation(&mut self, label: EqLabel) -> Equation {
        let poly = match label {
            EqLabel::X(i, j) => self.x_eq(i, j).clone(),
            EqLabel::Y(i, j) => self.y_eq(i, j).clone(),
        };
        Equation::new(label, poly)
    }

    /// All of `E` (orders up to `s`) in solving order.
    pub fn system(&self) -> PolySystem {
        let mut sys = PolySystem::new();
        for j in 0..=self.s {
            for (i, row) in self.x.iter().enumerate() {
                sys.push(Equation::new(EqLabel::X(i, j), row[j].clone()));
            }
        }
        for j in 0..=self.s {
            for (i, row) in self.y.iter().enumerate() {
                sys.push(Equation::new(EqLabel::Y(i, j), row[j].clone()));
            }
        }
        sys
    }

    /// Distinct variables of `E` up to order `s`.
    pub fn variables(&self) -> BTreeSet<DiffVar> {
        let mut vars = BTreeSet::new();
        for p in self.x.iter().chain(&self.y).flat_map(|r| r[..=self.s].iter()) {
            vars.extend(p.vars());
        }
        vars
    }

    /// The highest input derivative order occurring in `E` up to order `s`.
    pub fn input_order(&self) -> usize {
        self.s
    }

    /// Solves the equations `labels` (a triangular closure, in solving
    /// order) at the sample.
    pub fn solve(&mut self, labels: &[EqLabel], sample: &Sample) -> Result<PointAssignment, LinalgError> {
        let mut sys = PolySystem::new();
        for &l in labels {
            sys.push(self.equation(l));
        }
        solve_triangular(&sys.solving_order(), &sample.presets())
    }

    /// Labels of all `X_{ij}` with `j <= s` and all `Y_{ij}` with `j <= s`.
    pub fn all_labels(&self) -> Vec<EqLabel> {
        let mut out = Vec::new();
        for j in 0..=self.s {
            out.extend((0..self.n_states()).map(|i| EqLabel::X(i, j)));
        }
        for j in 0..=self.s {
            out.extend((0..self.n_outputs()).map(|i| EqLabel::Y(i, j)));
        }
        out
    }
}

/// Values for `theta` and for the input derivatives `u_k^{(j)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub theta: Vec<BigInt>,
    /// `inputs[k][j]` is the value of `u_k^{(j)}`.
    pub inputs: Vec<Vec<BigInt>>,
}

impl Sample {
    pub fn presets(&self) -> PointAssignment {
        let mut p = PointAssignment::new();
        for (k, t) in self.theta.iter().enumerate() {
            p.insert(DiffVar::param(k as u32), BigRational::from_integer(t.clone()));
        }
        for (k, row) in self.inputs.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                p.insert(DiffVar::input(k as u32, j as u32), BigRational::from_integer(v.clone()));
            }
        }
        p
    }

    /// Assignment of inputs only.
    pub fn input_presets(&self) -> PointAssignment {
        let mut p = PointAssignment::new();
        for (k, row) in self.inputs.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                p.insert(DiffVar::input(k as u32, j as u32), BigRational::from_integer(v.clone()));
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SampleError {
    #[error("no admissible point found in [1, {0}] after {1} draws")]
    SamplingExhausted(BigInt, usize),
}

/// Draws before giving up on finding a point with `Q != 0`.
pub const SAMPLE_ATTEMPTS: usize = 256;

/// Draws `theta` and input derivatives up to `input_order` uniformly from
/// `[1, bound]`, rejecting points where `Q(theta, x*, u)` vanishes.
pub fn sample_point<R: Rng + ?Sized>(
    model: &Model,
    q: &Poly,
    bound: &BigInt,
    input_order: usize,
    rng: &mut R,
) -> Result<Sample, SampleError> {
    let hi = bound.max(&BigInt::one()) + 1;
    let lo = BigInt::one();
    for _ in 0..SAMPLE_ATTEMPTS {
        let theta: Vec<BigInt> = (0..model.n_theta())
            .map(|_| rng.gen_bigint_range(&lo, &hi))
            .collect();
        let inputs: Vec<Vec<BigInt>> = (0..model.n_inputs())
            .map(|_| (0..=input_order).map(|_| rng.gen_bigint_range(&lo, &hi)).collect())
            .collect();
        let sample = Sample { theta, inputs };
        if q_at_sample(model, q, &sample).is_some_and(|v| !v.is_zero()) {
            return Ok(sample);
        }
    }
    Err(SampleError::SamplingExhausted(bound.clone(), SAMPLE_ATTEMPTS))
}

/// `Q` evaluated with `x_i = x_i*`.
pub fn q_at_sample(model: &Model, q: &Poly, sample: &Sample) -> Option<BigRational> {
    let mut point = sample.presets();
    for i in 0..model.n_states() {
        let v = point.get(&model.initial_var(i))?.clone();
        point.insert(DiffVar::state(i as u32, 0), v);
    }
    evaluate(q, &point).ok()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TruncationError {
    #[error("truncation invariant violated: {0}")]
    InvariantViolated(String),
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
}

/// Outcome of the truncation loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Truncation {
    pub et: PolySystem,
    /// `alpha_i`: number of derivatives of `x_i` kept (orders `0..alpha_i`).
    pub alpha: Vec<usize>,
    /// `beta_i`: number of `Y_{i*}` equations in `E^t`.
    pub beta: Vec<usize>,
    /// `beta` when the rank loop terminated.
    pub beta_loop_end: Vec<usize>,
}

impl Truncation {
    pub fn labels(&self) -> Vec<EqLabel> {
        self.et.equations.iter().map(|e| e.label).collect()
    }
}

fn x_alpha(alpha: &[usize]) -> Vec<DiffVar> {
    alpha
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| (0..a).map(move |j| DiffVar::state(i as u32, j as u32)))
        .collect()
}

fn state_vars(p: &Poly) -> impl Iterator<Item = DiffVar> {
    p.vars().into_iter().filter(|v| v.kind == VarKind::State)
}

fn push_label(e: &mut ProlongedSystem, et: &mut PolySystem, label: EqLabel) {
    if !et.contains(label) {
        let eq = e.equation(label);
        et.push(eq);
    }
}

/// Pulls in `X_{ij}` for every `x_i^{(j)}` occurring in `et` or `extra`.
fn close_states(e: &mut ProlongedSystem, et: &mut PolySystem, extra: &[Poly]) {
    loop {
        let mut missing = BTreeSet::new();
        for p in et.polys().chain(extra.iter()) {
            for v in state_vars(p) {
                let l = EqLabel::X(v.index as usize, v.order as usize);
                if !et.contains(l) {
                    missing.insert(l);
                }
            }
        }
        if missing.is_empty() {
            return;
        }
        for l in missing {
            push_label(e, et, l);
        }
    }
}

fn compute_alpha(et: &PolySystem, n: usize) -> Vec<usize> {
    let mut alpha = vec![0usize; n];
    for p in et.polys() {
        for (i, a) in alpha.iter_mut().enumerate() {
            let o = order_in(p, VarKind::State, i as u32);
            *a = (*a).max((o + 1) as usize);
        }
    }
    alpha
}

/// Jacobian of `polys` with respect to `theta` and `x_alpha` at `point`.
fn jacobian(
    polys: &[&Poly],
    n_theta: usize,
    alpha: &[usize],
    point: &PointAssignment,
) -> Result<RatMatrix, EvalError> {
    let mut cols: Vec<DiffVar> = (0..n_theta).map(|k| DiffVar::param(k as u32)).collect();
    cols.extend(x_alpha(alpha));
    let mut m = RatMatrix::zeros(0, cols.len());
    for p in polys {
        m.push_row(gradient_at(p, &cols, point)?)
            .expect("gradient has one entry per column");
    }
    Ok(m)
}

/// Runs the truncation at a solved point of `E`.
///
/// Starting from `{X_{i0}}`, output equations are added one at a time while
/// each raises the rank of the Jacobian with respect to `theta` and the
/// current state derivatives; state equations are pulled in to cover every
/// occurring state derivative, and finally every further output equation
/// whose state derivatives are already covered is appended.
pub fn truncate(e: &mut ProlongedSystem, point: &PointAssignment) -> Result<Truncation, TruncationError> {
    let n = e.n_states();
    let m = e.n_outputs();
    let mut alpha = vec![1usize; n];
    let mut beta = vec![0usize; m];
    let mut et = PolySystem::new();
    for i in 0..n {
        push_label(e, &mut et, EqLabel::X(i, 0));
    }
    let mut start = 0;
    loop {
        let mut chosen = None;
        for k in (start..m).chain(0..start) {
            if beta[k] > e.s {
                continue;
            }
            let cand = e.y_eq(k, beta[k]).clone();
            let mut rows: Vec<&Poly> = et.polys().collect();
            rows.push(&cand);
            let jac = jacobian(&rows, e.n_theta, &alpha, point)?;
            if rank(&jac) == et.len() + 1 {
                chosen = Some(k);
                break;
            }
        }
        let Some(k) = chosen else { break };
        start = (k + 1) % m;
        push_label(e, &mut et, EqLabel::Y(k, beta[k]));
        beta[k] += 1;
        if beta.iter().sum::<usize>() > e.s {
            return Err(TruncationError::InvariantViolated(alloc::format!(
                "output equations exceed the {} parameters",
                e.s
            )));
        }
        let next: Vec<Poly> = (0..m).map(|l| e.y_eq(l, beta[l]).clone()).collect();
        close_states(e, &mut et, &next);
        alpha = compute_alpha(&et, n);
    }
    let beta_loop_end = beta.clone();
    // Append output equations whose state derivatives are already present.
    let covered: BTreeSet<DiffVar> = x_alpha(&alpha).into_iter().collect();
    for i in 0..m {
        loop {
            let cand = e.y_eq(i, beta[i]).clone();
            let xs: Vec<DiffVar> = state_vars(&cand).collect();
            if !xs.iter().all(|v| covered.contains(v)) {
                break;
            }
            if xs.is_empty() && beta[i] > beta_loop_end[i] {
                break;
            }
            push_label(e, &mut et, EqLabel::Y(i, beta[i]));
            beta[i] += 1;
        }
    }
    check_structure(&et, &alpha, &beta, &beta_loop_end, e.s)?;
    Ok(Truncation {
        et,
        alpha,
        beta,
        beta_loop_end,
    })
}

/// `|E^t| = sum(alpha) + sum(beta)`, `sum(beta_loop_end) <= s` and every
/// output gained at least one equation after the rank loop.
fn check_structure(
    et: &PolySystem,
    alpha: &[usize],
    beta: &[usize],
    beta_loop_end: &[usize],
    s: usize,
) -> Result<(), TruncationError> {
    let sa: usize = alpha.iter().sum();
    let sb: usize = beta.iter().sum();
    if et.len() != sa + sb {
        return Err(TruncationError::InvariantViolated(alloc::format!(
            "|E^t| = {} but alpha and beta sum to {}",
            et.len(),
            sa + sb
        )));
    }
    for eq in &et.equations {
        if let EqLabel::X(i, j) = eq.label {
            if j >= alpha[i] {
                return Err(TruncationError::InvariantViolated(alloc::format!(
                    "{} exceeds alpha",
                    eq.label
                )));
            }
        }
    }
    if beta_loop_end.iter().sum::<usize>() > s {
        return Err(TruncationError::InvariantViolated(alloc::format!(
            "output equations exceed the {s} parameters"
        )));
    }
    if beta.iter().zip(beta_loop_end).any(|(b, l)| b <= l) {
        return Err(TruncationError::InvariantViolated(alloc::format!(
            "beta {beta:?} does not exceed {beta_loop_end:?}"
        )));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::poly::RatFunc;
    use alloc::string::ToString;
    use rand::SeedableRng;

    fn p(s: &str) -> Probability {
        s.parse().unwrap()
    }

    pub(crate) fn example_model() -> Model {
        // x' = mu2 x + mu1, y = x^2
        let x = Poly::var(DiffVar::state(0, 0));
        let f = &(&Poly::var(DiffVar::param(1)) * &x) + &Poly::var(DiffVar::param(0));
        Model {
            name: "ex".to_string(),
            params: vec!["mu1".to_string(), "mu2".to_string()],
            inputs: vec![],
            states: vec!["x".to_string()],
            initial: vec!["x*".to_string()],
            state_rhs: vec![RatFunc::from_poly(f)],
            outputs: vec!["y".to_string()],
            output_rhs: vec![RatFunc::from_poly(x.pow(2))],
        }
    }

    fn int(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn probability_parsing() {
        assert_eq!(p("0.8").value(), &BigRational::new(int(4), int(5)));
        assert_eq!(p(".5").value(), &BigRational::new(int(1), int(2)));
        assert_eq!(p("99/100").value(), &BigRational::new(int(99), int(100)));
        for bad in ["0", "1", "1.0", "-0.5", "abc", "", ".", "1/0", "2/3/4"] {
            assert!(bad.parse::<Probability>().is_err(), "{bad}");
        }
    }

    #[test]
    fn d1_values() {
        assert_eq!(compute_d1(2, 3, 1, &p("0.8")), int(1560));
        assert_eq!(compute_d1(1, 1, 0, &p("0.5")), int(12));
        assert_eq!(compute_d1(2, 12, 6, &p("0.99")), int(1_646_400));
    }

    #[test]
    fn prolongation_sizes() {
        let m = example_model();
        let e = build_e(&m);
        assert_eq!(e.s, 3);
        assert_eq!(e.len(), 8);
        assert_eq!(e.system().len(), 8);
        // theta (3) + x..x''' (4) + y..y''' (4)
        assert_eq!(e.variables().len(), 11);
    }

    fn sample(theta: &[i64]) -> Sample {
        Sample {
            theta: theta.iter().map(|&t| int(t)).collect(),
            inputs: vec![],
        }
    }

    #[test]
    fn golden_solution_and_truncation() {
        let m = example_model();
        let mut e = build_e(&m);
        let labels = e.all_labels();
        let pt = e.solve(&labels, &sample(&[1210, 896, 453])).unwrap();
        let xs = [453i64, 407098, 364759808, 326824787968];
        for (j, v) in xs.iter().enumerate() {
            assert_eq!(pt[&DiffVar::state(0, j as u32)], BigRational::from_integer(int(*v)));
        }
        let ys: [i128; 4] = [205209, 368830788, 661929949256, 1187061187802112];
        for (j, v) in ys.iter().enumerate() {
            assert_eq!(pt[&DiffVar::output(0, j as u32)], BigRational::from_integer(BigInt::from(*v)));
        }
        let t = truncate(&mut e, &pt).unwrap();
        assert_eq!(t.beta_loop_end, vec![3]);
        assert_eq!(t.alpha, vec![4]);
        assert_eq!(t.beta, vec![4]);
        assert_eq!(t.et.len(), 8);
    }

    #[test]
    fn sampling_is_bounded_and_seeded() {
        let m = example_model();
        let q = m.common_denominator();
        let mut r1 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut r2 = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = sample_point(&m, &q, &int(1560), 3, &mut r1).unwrap();
        let b = sample_point(&m, &q, &int(1560), 3, &mut r2).unwrap();
        assert_eq!(a, b);
        assert!(a.theta.iter().all(|t| *t >= int(1) && *t <= int(1560)));
    }

    #[test]
    fn sampling_exhausts_on_vanishing_denominator() {
        let mut m = example_model();
        // Q = mu1 - mu2 always vanishes on [1, 1].
        let den = &Poly::var(DiffVar::param(0)) - &Poly::var(DiffVar::param(1));
        m.state_rhs[0] = RatFunc::new(Poly::one(), den).unwrap();
        let q = m.common_denominator();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_point(&m, &q, &int(1), 0, &mut rng),
            Err(SampleError::SamplingExhausted(..))
        ));
    }
}
