//! Global identifiability analysis: prolongation, truncation, specialization
//! and the per-parameter consistency checks.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::{gradient_at, PointAssignment};
use crate::groebner::{
    buchberger, contains_one, is_member, prev_prime, CoefficientField, GroebnerBasis, GroebnerError,
    MonomialOrder,
};
use crate::linalg::{Echelon, LinalgError, RatMatrix};
use crate::model::{Model, ModelError};
use crate::poly::{DiffVar, Poly};
use crate::prolong::{
    build_e, compute_d1, sample_point, Probability, ProlongedSystem, Sample, SampleError, Truncation,
    TruncationError,
};
use crate::randomize::{compute_d2, input_order, specialize, triangular_closure, SpecializeError, SpecializedSystem};

/// How a parameter is tested against the specialized system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Inconsistency of `Ehat, z Qhat - 1, w (theta_i - theta_hat_i) - 1`.
    Saturation,
    /// Membership of `theta_i - theta_hat_i` in `(Ehat, z Qhat - 1)`.
    Membership,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Saturation => "sat",
            Method::Membership => "membership",
        }
    }
}

/// Fixed points replacing the two random draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InjectedSamples {
    pub first: Sample,
    pub second: Sample,
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub probability: Probability,
    pub method: Method,
    pub field: CoefficientField,
    pub seed: u64,
    pub check_local: bool,
    /// Restrict the analysis to these parameter names.
    pub params: Option<Vec<String>>,
    pub retry_cap: usize,
    /// Fail instead of dropping parameters rejected by the local check.
    pub abort_on_nonlocal: bool,
    /// Verify every computed basis with the S-polynomial criterion.
    pub certify: bool,
    pub injected: Option<InjectedSamples>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            probability: "0.99".parse().expect("valid literal"),
            method: Method::Saturation,
            field: CoefficientField::default(),
            seed: 0,
            check_local: true,
            params: None,
            retry_cap: 16,
            abort_on_nonlocal: false,
            certify: false,
            injected: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameters are not locally identifiable: {}", .0.join(", "))]
    NotLocallyIdentifiableInput(Vec<String>),
    #[error("analysis aborted after {retries} retries: {reason}")]
    AnalysisAborted { retries: usize, reason: String },
    #[error(transparent)]
    Groebner(#[from] GroebnerError),
    #[error("no usable prime below {0}")]
    PrimesExhausted(u64),
    #[error("computed basis fails the Buchberger criterion")]
    CertificateFailed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostics {
    pub s: usize,
    pub d0: u32,
    pub d1: BigInt,
    pub d2: BigInt,
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub beta_loop_end: Vec<usize>,
    pub e_size: usize,
    pub e_vars: usize,
    pub et_size: usize,
    pub ehat_vars: usize,
    pub retries: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifiabilityReport {
    pub model: String,
    pub probability: Probability,
    pub method: Method,
    pub field: CoefficientField,
    pub globally_identifiable: Vec<String>,
    pub locally_only: Vec<String>,
    pub not_locally_identifiable: Vec<String>,
    pub diagnostics: Diagnostics,
}

/// Step 2 outcome at an accepted sample.
struct Stage2 {
    e: ProlongedSystem,
    trunc: Truncation,
    point: PointAssignment,
}

fn resolve_params(model: &Model, names: &Option<Vec<String>>) -> Result<Vec<usize>, AnalysisError> {
    match names {
        None => Ok((0..model.n_theta()).collect()),
        Some(ns) => {
            let mut out = Vec::new();
            for n in ns {
                let k = model
                    .theta_index(n)
                    .ok_or_else(|| AnalysisError::UnknownParameter(n.clone()))?;
                if !out.contains(&k) {
                    out.push(k);
                }
            }
            out.sort_unstable();
            Ok(out)
        }
    }
}

fn stage2(
    model: &Model,
    e0: &ProlongedSystem,
    sample: &Sample,
) -> Result<Stage2, String> {
    let mut e = e0.clone();
    let labels = e.all_labels();
    let point = e.solve(&labels, sample).map_err(|err| err.to_string())?;
    let trunc = crate::prolong::truncate(&mut e, &point).map_err(|err: TruncationError| err.to_string())?;
    let _ = model;
    Ok(Stage2 { e, trunc, point })
}

/// Jacobian of `E^t` with respect to `theta` and the kept state derivatives,
/// evaluated at `point`.
fn local_jacobian(trunc: &Truncation, n_theta: usize, point: &PointAssignment) -> RatMatrix {
    let mut cols: Vec<DiffVar> = (0..n_theta).map(|k| DiffVar::param(k as u32)).collect();
    for (i, &a) in trunc.alpha.iter().enumerate() {
        cols.extend((0..a).map(|j| DiffVar::state(i as u32, j as u32)));
    }
    let mut m = RatMatrix::zeros(0, cols.len());
    for p in trunc.et.polys() {
        let row = gradient_at(p, &cols, point).expect("point solves the closure");
        m.push_row(row).expect("one entry per column");
    }
    m
}

/// Splits `candidates` into locally identifiable and rejected parameters
/// using the rank of the Jacobian of `E^t` at a solved point.
fn local_split(
    trunc: &Truncation,
    n_theta: usize,
    point: &PointAssignment,
    candidates: &[usize],
) -> Result<(Vec<usize>, Vec<usize>), LinalgError> {
    let jac = local_jacobian(trunc, n_theta, point);
    let ech = Echelon::new(&jac);
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for &k in candidates {
        let mut unit = alloc::vec![BigRational::from_integer(0.into()); jac.cols()];
        unit[k] = BigRational::from_integer(1.into());
        if ech.contains(&unit)? {
            accepted.push(k);
        } else {
            rejected.push(k);
        }
    }
    Ok((accepted, rejected))
}

/// Local identifiability of `candidates` (indices into `theta`) at a random
/// point drawn from `[1, D1]`.
pub fn assess_local<R: Rng + ?Sized>(
    model: &Model,
    candidates: &[usize],
    probability: &Probability,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>), AnalysisError> {
    model.validate()?;
    let e = build_e(model);
    let d1 = compute_d1(model.degree_d0(), e.s, model.n_states(), probability);
    let mut last = String::new();
    for _ in 0..16 {
        let sample = sample_point(model, &e.q, &d1, e.s, rng).map_err(sampling_abort)?;
        match stage2(model, &e, &sample) {
            Ok(st) => {
                return local_split(&st.trunc, e.n_theta, &st.point, candidates).map_err(|err| {
                    AnalysisError::AnalysisAborted {
                        retries: 0,
                        reason: err.to_string(),
                    }
                })
            }
            Err(r) => last = r,
        }
    }
    Err(AnalysisError::AnalysisAborted {
        retries: 16,
        reason: last,
    })
}

fn sampling_abort(e: SampleError) -> AnalysisError {
    AnalysisError::AnalysisAborted {
        retries: 0,
        reason: e.to_string(),
    }
}

/// Steps 1 to 3 done; Step 4 can run per parameter.
#[derive(Debug, Clone)]
pub struct Prepared {
    model_name: String,
    theta_names: Vec<String>,
    analyzed: Vec<usize>,
    theta_ell: Vec<usize>,
    rejected: Vec<usize>,
    spec: Option<SpecializedSystem>,
    diagnostics: Diagnostics,
    config: AnalysisConfig,
}

/// Runs Steps 1 to 3 and the local check.
pub fn prepare(model: &Model, config: &AnalysisConfig) -> Result<Prepared, AnalysisError> {
    model.validate()?;
    let analyzed = resolve_params(model, &config.params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let e = build_e(model);
    let d0 = model.degree_d0();
    let d1 = compute_d1(d0, e.s, model.n_states(), &config.probability);
    let e_vars = e.variables().len();
    let e_size = e.len();
    let mut retries = 0usize;
    let mut injected_first = config.injected.as_ref().map(|i| i.first.clone());
    let abort = |retries: usize, reason: String| AnalysisError::AnalysisAborted { retries, reason };

    let st = loop {
        let sample = match injected_first.take() {
            Some(s) => s,
            None => sample_point(model, &e.q, &d1, e.s, &mut rng).map_err(|err| abort(retries, err.to_string()))?,
        };
        match stage2(model, &e, &sample) {
            Ok(st) => break st,
            Err(reason) => {
                retries += 1;
                if retries > config.retry_cap {
                    return Err(abort(retries - 1, reason));
                }
            }
        }
    };

    let (theta_ell, rejected) = if config.check_local {
        local_split(&st.trunc, e.n_theta, &st.point, &analyzed).map_err(|err| abort(retries, err.to_string()))?
    } else {
        (analyzed.clone(), Vec::new())
    };
    let theta_names = model.theta_names();
    if config.abort_on_nonlocal && !rejected.is_empty() {
        return Err(AnalysisError::NotLocallyIdentifiableInput(
            rejected.iter().map(|&k| theta_names[k].clone()).collect(),
        ));
    }

    let Stage2 { mut e, trunc, .. } = st;
    let mut diagnostics = Diagnostics {
        s: e.s,
        d0,
        d1,
        d2: BigInt::from(0),
        alpha: trunc.alpha.clone(),
        beta: trunc.beta.clone(),
        beta_loop_end: trunc.beta_loop_end.clone(),
        e_size,
        e_vars,
        et_size: trunc.et.len(),
        ehat_vars: 0,
        retries,
        seed: config.seed,
    };

    let spec = if theta_ell.is_empty() {
        None
    } else {
        let d2 = compute_d2(theta_ell.len(), &trunc.et, d0, &trunc.beta, &config.probability);
        diagnostics.d2 = d2.clone();
        let closure = triangular_closure(&mut e, &trunc.labels());
        let u_order = input_order(&mut e, &closure);
        let mut injected_second = config.injected.as_ref().map(|i| i.second.clone());
        let spec = loop {
            let sample = match injected_second.take() {
                Some(s) => s,
                None => sample_point(model, &e.q, &d2, u_order, &mut rng)
                    .map_err(|err| abort(retries, err.to_string()))?,
            };
            match specialize(&mut e, &trunc, &sample, d2.clone()) {
                Ok(s) => break s,
                Err(err @ SpecializeError::Residual) => return Err(abort(retries, err.to_string())),
                Err(err) => {
                    retries += 1;
                    if retries > config.retry_cap {
                        return Err(abort(retries - 1, err.to_string()));
                    }
                }
            }
        };
        diagnostics.retries = retries;
        diagnostics.ehat_vars = spec.variables().len();
        Some(spec)
    };

    Ok(Prepared {
        model_name: model.name.clone(),
        theta_names,
        analyzed,
        theta_ell,
        rejected,
        spec,
        diagnostics,
        config: config.clone(),
    })
}

fn z() -> Poly {
    Poly::var(DiffVar::aux(0))
}

fn w() -> Poly {
    Poly::var(DiffVar::aux(1))
}

/// Number of primes tried when generators degenerate modulo the current one.
const PRIME_ATTEMPTS: usize = 16;

/// Evaluates `f` under `p` or the next smaller prime without a collision.
fn with_prime<T>(
    p: u64,
    f: &dyn Fn(CoefficientField) -> Result<T, AnalysisError>,
) -> Result<(T, u64), AnalysisError> {
    let mut q = p;
    for _ in 0..PRIME_ATTEMPTS {
        match f(CoefficientField::Prime(q)) {
            Err(AnalysisError::Groebner(GroebnerError::PrimeCollision(_))) => {
                q = prev_prime(q).ok_or(AnalysisError::PrimesExhausted(q))?;
            }
            other => return other.map(|t| (t, q)),
        }
    }
    Err(AnalysisError::PrimesExhausted(q))
}

fn next_prime_below(p: u64) -> Result<u64, AnalysisError> {
    prev_prime(p).ok_or(AnalysisError::PrimesExhausted(p))
}

impl Prepared {
    /// Indices (into `theta`) of the parameters entering Step 4.
    pub fn theta_ell(&self) -> &[usize] {
        &self.theta_ell
    }

    pub fn theta_names(&self) -> &[String] {
        &self.theta_names
    }

    pub fn specialized(&self) -> Option<&SpecializedSystem> {
        self.spec.as_ref()
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    fn basis(&self, gens: &[Poly], extra: &[Poly], field: CoefficientField) -> Result<GroebnerBasis, AnalysisError> {
        let order = MonomialOrder::for_polys(gens.iter().chain(extra));
        let gb = buchberger(gens, &order, field)?;
        if self.config.certify && !gb.verify() {
            return Err(AnalysisError::CertificateFailed);
        }
        Ok(gb)
    }

    fn spec(&self) -> &SpecializedSystem {
        self.spec.as_ref().expect("theta_ell is nonempty")
    }

    fn theta_minus_hat(&self, k: usize) -> Poly {
        let spec = self.spec();
        &Poly::var(DiffVar::param(k as u32)) - &Poly::constant(spec.theta_hat[k].clone())
    }

    fn saturation_gens(&self, k: usize) -> Vec<Poly> {
        let spec = self.spec();
        let mut gens = spec.ehat.clone();
        gens.push(&(&z() * &spec.qhat) - &Poly::one());
        gens.push(&(&w() * &self.theta_minus_hat(k)) - &Poly::one());
        gens
    }

    fn saturation_once(&self, k: usize, field: CoefficientField) -> Result<bool, AnalysisError> {
        let gb = self.basis(&self.saturation_gens(k), &[], field)?;
        Ok(contains_one(&gb))
    }

    /// Whether parameter `k` is globally identifiable by the inconsistency
    /// test. Positive verdicts under a prime are confirmed under a second
    /// prime, and a third prime breaks a disagreement.
    pub fn check_saturation(&self, k: usize) -> Result<bool, AnalysisError> {
        let f = |field| self.saturation_once(k, field);
        match self.config.field {
            CoefficientField::ExactRational => f(CoefficientField::ExactRational),
            CoefficientField::Prime(p) => {
                let (v1, p1) = with_prime(p, &f)?;
                if !v1 {
                    return Ok(false);
                }
                let (v2, p2) = with_prime(next_prime_below(p1)?, &f)?;
                if v2 {
                    return Ok(true);
                }
                Ok(with_prime(next_prime_below(p2)?, &f)?.0)
            }
        }
    }

    fn membership_once(&self, field: CoefficientField) -> Result<Vec<bool>, AnalysisError> {
        let spec = self.spec();
        let mut gens = spec.ehat.clone();
        gens.push(&(&z() * &spec.qhat) - &Poly::one());
        let targets: Vec<Poly> = self.theta_ell.iter().map(|&k| self.theta_minus_hat(k)).collect();
        let gb = self.basis(&gens, &targets, field)?;
        targets
            .iter()
            .map(|t| is_member(t, &gb).map_err(AnalysisError::from))
            .collect()
    }

    /// Membership verdicts for every parameter of `theta_ell`, in order.
    pub fn check_membership(&self) -> Result<Vec<bool>, AnalysisError> {
        let f = |field| self.membership_once(field);
        match self.config.field {
            CoefficientField::ExactRational => f(CoefficientField::ExactRational),
            CoefficientField::Prime(p) => {
                let (v1, p1) = with_prime(p, &f)?;
                if !v1.iter().any(|&b| b) {
                    return Ok(v1);
                }
                let (v2, p2) = with_prime(next_prime_below(p1)?, &f)?;
                if v1.iter().zip(&v2).all(|(a, b)| !a || *b) {
                    return Ok(v1);
                }
                let (v3, _) = with_prime(next_prime_below(p2)?, &f)?;
                Ok(v1
                    .iter()
                    .zip(&v2)
                    .zip(&v3)
                    .map(|((a, b), c)| if *a && !*b { *c } else { *a })
                    .collect())
            }
        }
    }

    /// Serial Step 4 with the configured method.
    pub fn check_all(&self) -> Result<Vec<bool>, AnalysisError> {
        if self.theta_ell.is_empty() {
            return Ok(Vec::new());
        }
        match self.config.method {
            Method::Saturation => self.theta_ell.iter().map(|&k| self.check_saturation(k)).collect(),
            Method::Membership => self.check_membership(),
        }
    }

    /// Assembles the report from one verdict per `theta_ell` entry.
    pub fn finish(self, verdicts: &[bool]) -> IdentifiabilityReport {
        let name = |k: &usize| self.theta_names[*k].clone();
        let mut global = Vec::new();
        let mut local = Vec::new();
        for (k, &g) in self.theta_ell.iter().zip(verdicts) {
            if g {
                global.push(name(k));
            } else {
                local.push(name(k));
            }
        }
        let _ = &self.analyzed;
        IdentifiabilityReport {
            model: self.model_name.clone(),
            probability: self.config.probability.clone(),
            method: self.config.method,
            field: self.config.field,
            globally_identifiable: global,
            locally_only: local,
            not_locally_identifiable: self.rejected.iter().map(name).collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Full analysis with a serial Step 4.
pub fn run(model: &Model, config: &AnalysisConfig) -> Result<IdentifiabilityReport, AnalysisError> {
    let prepared = prepare(model, config)?;
    let verdicts = prepared.check_all()?;
    Ok(prepared.finish(&verdicts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::RatFunc;
    use crate::prolong::tests::example_model;
    use alloc::vec;

    fn sample(theta: &[i64]) -> Sample {
        Sample {
            theta: theta.iter().map(|&t| BigInt::from(t)).collect(),
            inputs: vec![],
        }
    }

    fn golden_config(method: Method, field: CoefficientField) -> AnalysisConfig {
        AnalysisConfig {
            probability: "0.8".parse().unwrap(),
            method,
            field,
            certify: true,
            injected: Some(InjectedSamples {
                first: sample(&[1210, 896, 453]),
                second: sample(&[2440, 171852, 68794]),
            }),
            ..AnalysisConfig::default()
        }
    }

    #[test]
    fn golden_trace_all_methods() {
        let m = example_model();
        for method in [Method::Saturation, Method::Membership] {
            for field in [CoefficientField::default(), CoefficientField::ExactRational] {
                let r = run(&m, &golden_config(method, field)).unwrap();
                assert_eq!(r.globally_identifiable, vec!["mu2".to_string()]);
                assert_eq!(r.locally_only, vec!["mu1".to_string(), "x*".to_string()]);
                assert!(r.not_locally_identifiable.is_empty());
                assert_eq!(r.diagnostics.d1, BigInt::from(1560));
                assert_eq!(r.diagnostics.d2, BigInt::from(195_840));
                assert_eq!(r.diagnostics.retries, 0);
            }
        }
    }

    #[test]
    fn squared_rate_is_only_local() {
        // x' = t1^2, y = x, x(0) = t2
        let t1 = Poly::var(DiffVar::param(0));
        let m = Model {
            name: "sq".to_string(),
            params: vec!["t1".to_string()],
            inputs: vec![],
            states: vec!["x".to_string()],
            initial: vec!["t2".to_string()],
            state_rhs: vec![RatFunc::from_poly(t1.pow(2))],
            outputs: vec!["y".to_string()],
            output_rhs: vec![RatFunc::from_poly(Poly::var(DiffVar::state(0, 0)))],
        };
        for seed in 0..4 {
            let cfg = AnalysisConfig {
                seed,
                certify: true,
                ..AnalysisConfig::default()
            };
            let r = run(&m, &cfg).unwrap();
            assert_eq!(r.globally_identifiable, vec!["t2".to_string()]);
            assert_eq!(r.locally_only, vec!["t1".to_string()]);
        }
    }

    #[test]
    fn unknown_parameter_filter() {
        let m = example_model();
        let cfg = AnalysisConfig {
            params: Some(vec!["nope".to_string()]),
            ..AnalysisConfig::default()
        };
        assert_eq!(run(&m, &cfg), Err(AnalysisError::UnknownParameter("nope".to_string())));
    }
}
