//! Derivative-indexed variables, sparse integer polynomials and rational
//! functions over them.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Role of a variable in the differential ring.
///
/// The derived order (`Input < Param < State < Output < Aux`) is the fixed
/// variable order used for printing and for the default monomial order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Input,
    /// System parameters followed by the initial-condition symbols.
    Param,
    State,
    Output,
    /// Helper variables introduced by the consistency checks (`z`, `w`).
    Aux,
}

/// A variable `z_index^(order)` of a given kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiffVar {
    pub kind: VarKind,
    pub index: u32,
    pub order: u32,
}

impl DiffVar {
    pub const fn new(kind: VarKind, index: u32, order: u32) -> Self {
        DiffVar { kind, index, order }
    }

    pub const fn param(index: u32) -> Self {
        DiffVar::new(VarKind::Param, index, 0)
    }

    pub const fn state(index: u32, order: u32) -> Self {
        DiffVar::new(VarKind::State, index, order)
    }

    pub const fn output(index: u32, order: u32) -> Self {
        DiffVar::new(VarKind::Output, index, order)
    }

    pub const fn input(index: u32, order: u32) -> Self {
        DiffVar::new(VarKind::Input, index, order)
    }

    pub const fn aux(index: u32) -> Self {
        DiffVar::new(VarKind::Aux, index, 0)
    }

    /// The derivative of this variable, or `None` for constants under the
    /// derivation (parameters and helper variables).
    pub fn derivative(self) -> Option<DiffVar> {
        match self.kind {
            VarKind::Param | VarKind::Aux => None,
            _ => Some(DiffVar { order: self.order + 1, ..self }),
        }
    }
}

impl fmt::Display for DiffVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.kind {
            VarKind::Input => "u",
            VarKind::Param => "p",
            VarKind::State => "x",
            VarKind::Output => "y",
            VarKind::Aux => "z",
        };
        write!(f, "{}{}", prefix, self.index + 1)?;
        if self.order > 0 {
            write!(f, "^({})", self.order)?;
        }
        Ok(())
    }
}

/// Power product of variables; exponents are positive and sorted by variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(DiffVar, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: DiffVar) -> Self {
        Monomial(alloc::vec![(v, 1)])
    }

    /// Builds a monomial from arbitrary `(var, exp)` pairs; zero exponents are
    /// dropped and repeated variables are merged.
    pub fn from_pairs<I: IntoIterator<Item = (DiffVar, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<DiffVar, u32> = BTreeMap::new();
        for (v, e) in pairs {
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        Monomial(map.into_iter().collect())
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn exponent(&self, v: DiffVar) -> u32 {
        match self.0.binary_search_by(|(w, _)| w.cmp(&v)) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn factors(&self) -> &[(DiffVar, u32)] {
        &self.0
    }

    pub fn vars(&self) -> impl Iterator<Item = DiffVar> + '_ {
        self.0.iter().map(|(v, _)| *v)
    }

    /// Multiplies by `v^e`.
    pub fn times_var(&self, v: DiffVar, e: u32) -> Monomial {
        if e == 0 {
            return self.clone();
        }
        let mut out = self.0.clone();
        match out.binary_search_by(|(w, _)| w.cmp(&v)) {
            Ok(i) => out[i].1 += e,
            Err(i) => out.insert(i, (v, e)),
        }
        Monomial(out)
    }

    /// Divides out one power of `v`; `None` if `v` does not occur.
    pub fn without_one(&self, v: DiffVar) -> Option<(u32, Monomial)> {
        let i = self.0.binary_search_by(|(w, _)| w.cmp(&v)).ok()?;
        let e = self.0[i].1;
        let mut out = self.0.clone();
        if e == 1 {
            out.remove(i);
        } else {
            out[i].1 -= 1;
        }
        Some((e, Monomial(out)))
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, (v, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{}", v)?;
            } else {
                write!(f, "{}^{}", v, e)?;
            }
        }
        Ok(())
    }
}

/// Sparse multivariate polynomial with arbitrary-precision integer
/// coefficients. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: BTreeMap<Monomial, BigInt>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(BigInt::one())
    }

    pub fn constant<T: Into<BigInt>>(c: T) -> Self {
        let c = c.into();
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn var(v: DiffVar) -> Self {
        Poly::term(BigInt::one(), Monomial::var(v))
    }

    pub fn term<T: Into<BigInt>>(c: T, m: Monomial) -> Self {
        let c = c.into();
        let mut p = Poly::zero();
        if !c.is_zero() {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, BigInt)>>(terms: I) -> Self {
        let mut p = Poly::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_constant().is_some_and(|c| c.is_one())
    }

    /// The value of a constant polynomial (`0` for the zero polynomial).
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            alloc::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            alloc::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Total degree; `0` for constants and for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<DiffVar> {
        self.terms.keys().flat_map(|m| m.vars()).collect()
    }

    /// Gcd of the coefficients (nonnegative; `0` for the zero polynomial).
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in self.terms.values() {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    pub fn scale(&self, c: &BigInt) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    /// Exact division of every coefficient by `c`; `c` must divide the content.
    pub fn div_exact(&self, c: &BigInt) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a / c)).collect(),
        }
    }

    /// Largest monomial under the storage order, used only to fix signs.
    pub fn leading_coeff(&self) -> Option<&BigInt> {
        self.terms.iter().next_back().map(|(_, c)| c)
    }

    /// Primitive part with positive leading coefficient (under storage order).
    pub fn primitive(&self) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut g = self.content();
        if self.leading_coeff().is_some_and(|c| c.is_negative()) {
            g = -g;
        }
        self.div_exact(&g)
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Rebuilds the polynomial after mapping every monomial through `f`.
    pub fn map_monomials<F: FnMut(&Monomial) -> Monomial>(&self, mut f: F) -> Poly {
        Poly::from_terms(self.terms.iter().map(|(m, c)| (f(m), c.clone())))
    }

    /// Terms sorted by descending total degree, ties by storage order.
    pub fn graded_terms(&self) -> Vec<(&Monomial, &BigInt)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then_with(|| a.0.cmp(b.0)));
        v
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.graded_terms().into_iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.is_one() {
                write!(f, "{}", a)?;
            } else if a.is_one() {
                write!(f, "{}", m)?;
            } else {
                write!(f, "{}*{}", a, m)?;
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &'a Poly) -> Poly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&Poly> for Poly {
    fn add_assign(&mut self, rhs: &Poly) {
        for (m, c) in rhs.terms.iter() {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &'a Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in rhs.terms.iter() {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &'a Poly) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in self.terms.iter() {
            for (m2, c2) in rhs.terms.iter() {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $method(self, rhs: Poly) -> Poly {
                (&self).$method(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Quotient of two polynomials with a nonzero denominator.
///
/// Kept content-normalized: the coefficient contents of numerator and
/// denominator are coprime and the denominator's leading coefficient is
/// positive. No polynomial gcd is taken.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFunc {
    num: Poly,
    den: Poly,
}

impl RatFunc {
    /// `None` when `den` is the zero polynomial.
    pub fn new(num: Poly, den: Poly) -> Option<RatFunc> {
        if den.is_zero() {
            return None;
        }
        let mut r = RatFunc { num, den };
        r.normalize();
        Some(r)
    }

    pub fn from_poly(p: Poly) -> RatFunc {
        RatFunc {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn from_ratio(n: BigInt, d: BigInt) -> Option<RatFunc> {
        RatFunc::new(Poly::constant(n), Poly::constant(d))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// `Some(p)` iff the denominator is exactly 1.
    pub fn as_poly(&self) -> Option<&Poly> {
        self.is_polynomial().then_some(&self.num)
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den = Poly::one();
            return;
        }
        if self.num == self.den {
            self.num = Poly::one();
            self.den = Poly::one();
            return;
        }
        let mut g = self.num.content().gcd(&self.den.content());
        if self.den.leading_coeff().is_some_and(|c| c.is_negative()) {
            g = -g;
        }
        if !g.is_one() {
            self.num = self.num.div_exact(&g);
            self.den = self.den.div_exact(&g);
        }
    }

    pub fn add(&self, rhs: &RatFunc) -> RatFunc {
        if self.den == rhs.den {
            return RatFunc::new(&self.num + &rhs.num, self.den.clone()).expect("nonzero den");
        }
        let num = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RatFunc::new(num, &self.den * &rhs.den).expect("nonzero den")
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, rhs: &RatFunc) -> RatFunc {
        self.add(&rhs.neg())
    }

    pub fn mul(&self, rhs: &RatFunc) -> RatFunc {
        if self.den == rhs.num && !rhs.num.is_zero() {
            return RatFunc::new(self.num.clone(), rhs.den.clone()).expect("nonzero den");
        }
        if rhs.den == self.num && !self.num.is_zero() {
            return RatFunc::new(rhs.num.clone(), self.den.clone()).expect("nonzero den");
        }
        RatFunc::new(&self.num * &rhs.num, &self.den * &rhs.den).expect("nonzero den")
    }

    /// `None` on division by the zero function.
    pub fn div(&self, rhs: &RatFunc) -> Option<RatFunc> {
        if rhs.is_zero() {
            return None;
        }
        let inv = RatFunc::new(rhs.den.clone(), rhs.num.clone())?;
        Some(self.mul(&inv))
    }

    pub fn pow(&self, e: u32) -> RatFunc {
        RatFunc::new(self.num.pow(e), self.den.pow(e)).expect("nonzero den")
    }

    pub fn vars(&self) -> BTreeSet<DiffVar> {
        let mut v = self.num.vars();
        v.extend(self.den.vars());
        v
    }
}
