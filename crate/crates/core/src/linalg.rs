//! Exact dense linear algebra over the rationals and triangular solving.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::diff::{evaluate, EvalError, PointAssignment};
use crate::poly::{DiffVar, Poly};
use crate::system::{EqLabel, PolySystem};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("row of length {got} does not match {expected} columns")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("leader coefficient of {0} vanishes at the sampled point")]
    LeaderCoefficientZero(EqLabel),
    #[error("{0} has an unsolved variable {1}")]
    MissingPrerequisite(EqLabel, DiffVar),
    #[error("{0} is not linear in its leader")]
    NotLinearInLeader(EqLabel),
}

/// Dense rational matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigRational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            entries: vec![BigRational::zero(); rows * cols],
        }
    }

    pub fn from_rows(cols: usize, rows: Vec<Vec<BigRational>>) -> Result<Self, LinalgError> {
        let mut entries = Vec::with_capacity(rows.len() * cols);
        let n = rows.len();
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            entries.extend(r);
        }
        Ok(RatMatrix {
            rows: n,
            cols,
            entries,
        })
    }

    pub fn from_integers(rows: &[Vec<i64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let rows = rows
            .iter()
            .map(|r| r.iter().map(|&v| BigRational::from_integer(v.into())).collect())
            .collect();
        RatMatrix::from_rows(cols, rows).expect("rectangular input")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigRational {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: BigRational) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[BigRational] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: Vec<BigRational>) -> Result<(), LinalgError> {
        if row.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: row.len(),
            });
        }
        self.entries.extend(row);
        self.rows += 1;
        Ok(())
    }

    /// Each row scaled by the lcm of its denominators and divided by its
    /// content; the row space is unchanged.
    fn integer_rows(&self) -> Vec<Vec<BigInt>> {
        (0..self.rows).map(|r| integral_row(self.row(r))).collect()
    }
}

fn integral_row(row: &[BigRational]) -> Vec<BigInt> {
    let l = row.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let mut out: Vec<BigInt> = row
        .iter()
        .map(|x| (x * BigRational::from_integer(l.clone())).to_integer())
        .collect();
    let g = out.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in &mut out {
            *x /= &g;
        }
    }
    out
}

/// 61-bit prime used for the certified modular shortcut.
const SHORTCUT_PRIME: u64 = 2_305_843_009_213_693_951;

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn reduce_mod(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    let (_, digits) = r.to_u64_digits();
    digits.first().copied().unwrap_or(0)
}

/// Rank over `Z/p`. A lower bound for the rank over the rationals.
fn rank_mod_p(rows: &[Vec<BigInt>], cols: usize, p: u64) -> usize {
    let mut a: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|x| reduce_mod(x, p)).collect())
        .collect();
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..a.len()).find(|&r| a[r][c] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = powmod(a[rank][c], p - 2, p);
        for r in rank + 1..a.len() {
            if a[r][c] == 0 {
                continue;
            }
            let f = mulmod(a[r][c], inv, p);
            let (top, bottom) = a.split_at_mut(r);
            for (x, &y) in bottom[0][c..cols].iter_mut().zip(&top[rank][c..cols]) {
                *x = (*x + p - mulmod(f, y, p)) % p;
            }
        }
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    rank
}

/// Row echelon form computed by fraction-free (Bareiss) elimination.
///
/// Pivots are chosen as the first nonzero entry scanning columns left to
/// right and, within a column, rows top to bottom.
#[derive(Debug, Clone)]
pub struct Echelon {
    cols: usize,
    /// Nonzero echelon rows and their pivot columns.
    rows: Vec<(usize, Vec<BigInt>)>,
}

impl Echelon {
    pub fn new(m: &RatMatrix) -> Echelon {
        bareiss(m.integer_rows(), m.cols)
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Whether `row` lies in the row space.
    pub fn contains(&self, row: &[BigRational]) -> Result<bool, LinalgError> {
        if row.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: row.len(),
            });
        }
        let mut v = integral_row(row);
        for (c, piv) in &self.rows {
            if v[*c].is_zero() {
                continue;
            }
            let a = piv[*c].clone();
            let b = v[*c].clone();
            for k in 0..self.cols {
                v[k] = &a * &v[k] - &b * &piv[k];
            }
            let g = v.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
            if g.is_zero() {
                return Ok(true);
            }
            if !g.is_one() {
                for x in &mut v {
                    *x /= &g;
                }
            }
        }
        Ok(v.iter().all(Zero::is_zero))
    }
}

fn bareiss(mut a: Vec<Vec<BigInt>>, cols: usize) -> Echelon {
    let n = a.len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    let mut pivots = Vec::new();
    for c in 0..cols {
        if rank == n {
            break;
        }
        let Some(piv) = (rank..n).find(|&r| !a[r][c].is_zero()) else {
            continue;
        };
        a.swap(rank, piv);
        let (top, bottom) = a.split_at_mut(rank + 1);
        let pr = &top[rank];
        for row in bottom.iter_mut() {
            let f = row[c].clone();
            if f.is_zero() {
                for x in row[c + 1..].iter_mut() {
                    *x = (&pr[c] * &*x) / &prev;
                }
            } else {
                for k in c + 1..cols {
                    row[k] = (&pr[c] * &row[k] - &f * &pr[k]) / &prev;
                }
                row[c] = BigInt::zero();
            }
        }
        prev = a[rank][c].clone();
        pivots.push(c);
        rank += 1;
    }
    let rows = pivots.into_iter().zip(a).collect();
    Echelon { cols, rows }
}

/// Exact rank over the rationals.
///
/// Full rank modulo a prime certifies full rank over the rationals; the
/// exact Bareiss elimination runs only when that shortcut is inconclusive.
pub fn rank(m: &RatMatrix) -> usize {
    let full = m.rows.min(m.cols);
    let ints = m.integer_rows();
    if full > 0 && rank_mod_p(&ints, m.cols, SHORTCUT_PRIME) == full {
        return full;
    }
    bareiss(ints, m.cols).rank()
}

/// `(rank(m), rank(m stacked with e))`.
pub fn rank_with_extra_row(m: &RatMatrix, e: &[BigRational]) -> Result<(usize, usize), LinalgError> {
    if e.len() != m.cols {
        return Err(LinalgError::DimensionMismatch {
            expected: m.cols,
            got: e.len(),
        });
    }
    let ech = Echelon::new(m);
    let r = ech.rank();
    let extra = usize::from(!ech.contains(e)?);
    Ok((r, r + extra))
}

/// Solves a triangular system equation by equation, in the given order.
///
/// Each equation, after substituting `presets` and the leaders solved so
/// far, must read `c * leader + r = 0` with `c` a nonzero rational.
pub fn solve_triangular(
    system: &PolySystem,
    presets: &PointAssignment,
) -> Result<PointAssignment, LinalgError> {
    let mut point = presets.clone();
    for eq in &system.equations {
        let (c, r) = split_linear(&eq.poly, eq.leader, eq.label, &point)?;
        if c.is_zero() {
            return Err(LinalgError::LeaderCoefficientZero(eq.label));
        }
        point.insert(eq.leader, -r / c);
    }
    Ok(point)
}

/// Splits `p = c * leader + r` and evaluates `c` and `r` at `point`.
pub(crate) fn split_linear(
    p: &Poly,
    leader: DiffVar,
    label: EqLabel,
    point: &PointAssignment,
) -> Result<(BigRational, BigRational), LinalgError> {
    let mut with = Poly::zero();
    let mut without = Poly::zero();
    for (m, c) in p.terms() {
        match m.exponent(leader) {
            0 => without.add_term(m.clone(), c.clone()),
            1 => with.add_term(m.without_one(leader).expect("occurs").1, c.clone()),
            _ => return Err(LinalgError::NotLinearInLeader(label)),
        }
    }
    let eval = |q: &Poly| {
        evaluate(q, point).map_err(|EvalError::MissingAssignment(v)| {
            LinalgError::MissingPrerequisite(label, v)
        })
    };
    Ok((eval(&with)?, eval(&without)?))
}
