//! Buchberger's algorithm over a prime field or the rationals.
//!
//! Monomials are packed exponent vectors (one byte per variable) ordered by
//! degree reverse lexicographic order. Pairs are selected by the normal
//! strategy (smallest lcm first) with the sugar degree as tie-break; useless
//! pairs are discarded with the Gebauer-Moeller installation of Buchberger's
//! two criteria. Reduction merges lazily generated multiples of the reducers
//! on a binary heap.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::poly::{DiffVar, Monomial, Poly};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroebnerError {
    #[error("a generator degenerates modulo {0}")]
    PrimeCollision(u64),
    #[error("{0} is not a variable of the monomial order")]
    UnknownVariable(DiffVar),
    #[error("{0} is not a usable prime modulus")]
    BadModulus(u64),
    #[error("exponent overflow")]
    ExponentOverflow,
    #[error("{0} variables exceed the supported maximum")]
    TooManyVariables(usize),
}

/// Degree reverse lexicographic order on a list of variables, given from
/// largest to smallest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialOrder {
    vars: Vec<DiffVar>,
}

impl MonomialOrder {
    /// `vars` from largest to smallest. Duplicates are removed.
    pub fn degrevlex(vars: Vec<DiffVar>) -> MonomialOrder {
        let mut seen = alloc::collections::BTreeSet::new();
        let vars = vars.into_iter().filter(|v| seen.insert(*v)).collect();
        MonomialOrder { vars }
    }

    /// The variables of `polys` in the fixed `DiffVar` order, earlier
    /// variables being larger.
    pub fn for_polys<'a, I: IntoIterator<Item = &'a Poly>>(polys: I) -> MonomialOrder {
        let mut all = alloc::collections::BTreeSet::new();
        for p in polys {
            all.extend(p.vars());
        }
        MonomialOrder {
            vars: all.into_iter().collect(),
        }
    }

    pub fn vars(&self) -> &[DiffVar] {
        &self.vars
    }

    fn position(&self, v: DiffVar) -> Option<usize> {
        self.vars.iter().position(|w| *w == v)
    }
}

/// Coefficient field for the computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientField {
    Prime(u64),
    ExactRational,
}

/// `2^31 - 1`.
pub const DEFAULT_PRIME: u64 = 2_147_483_647;

impl Default for CoefficientField {
    fn default() -> Self {
        CoefficientField::Prime(DEFAULT_PRIME)
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Largest prime strictly below `n`.
pub fn prev_prime(n: u64) -> Option<u64> {
    (2..n).rev().find(|&k| is_prime(k))
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

pub(crate) trait Field: Clone + core::fmt::Debug + Send + Sync + 'static {
    type E: Clone + PartialEq + core::fmt::Debug + Send + Sync;
    fn zero(&self) -> Self::E;
    fn one(&self) -> Self::E;
    fn is_zero(&self, a: &Self::E) -> bool;
    fn add(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn mul(&self, a: &Self::E, b: &Self::E) -> Self::E;
    fn neg(&self, a: &Self::E) -> Self::E;
    fn inv(&self, a: &Self::E) -> Self::E;
    fn embed(&self, a: &BigInt) -> Self::E;
    /// Representative used when converting results back to integer
    /// polynomials.
    fn lift(&self, a: &Self::E) -> BigRational;
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Fp(u64);

impl Field for Fp {
    type E = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1
    }
    fn is_zero(&self, a: &u64) -> bool {
        *a == 0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }
    fn mul(&self, a: &u64, b: &u64) -> u64 {
        if self.0 >> 32 == 0 {
            a * b % self.0
        } else {
            mul_mod(*a, *b, self.0)
        }
    }
    fn neg(&self, a: &u64) -> u64 {
        if *a == 0 {
            0
        } else {
            self.0 - a
        }
    }
    fn inv(&self, a: &u64) -> u64 {
        pow_mod(*a, self.0 - 2, self.0)
    }
    fn embed(&self, a: &BigInt) -> u64 {
        let r = a.mod_floor(&BigInt::from(self.0));
        r.to_u64_digits().1.first().copied().unwrap_or(0)
    }
    fn lift(&self, a: &u64) -> BigRational {
        let v = if *a > self.0 / 2 {
            BigInt::from(*a) - BigInt::from(self.0)
        } else {
            BigInt::from(*a)
        };
        BigRational::from_integer(v)
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Qq;

impl Field for Qq {
    type E = BigRational;
    fn zero(&self) -> BigRational {
        BigRational::zero()
    }
    fn one(&self) -> BigRational {
        BigRational::one()
    }
    fn is_zero(&self, a: &BigRational) -> bool {
        a.is_zero()
    }
    fn add(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a + b
    }
    fn mul(&self, a: &BigRational, b: &BigRational) -> BigRational {
        a * b
    }
    fn neg(&self, a: &BigRational) -> BigRational {
        -a
    }
    fn inv(&self, a: &BigRational) -> BigRational {
        a.recip()
    }
    fn embed(&self, a: &BigInt) -> BigRational {
        BigRational::from_integer(a.clone())
    }
    fn lift(&self, a: &BigRational) -> BigRational {
        a.clone()
    }
}

const HI: u64 = 0x8080_8080_8080_8080;
const LO: u64 = 0x7f7f_7f7f_7f7f_7f7f;
const MAX_EXP: u32 = 127;

/// Bytes of `x` that are nonzero, flagged by their top bit (all bytes < 128).
#[inline]
fn nonzero_bytes(x: u64) -> u64 {
    x.wrapping_add(LO) & HI
}

#[inline]
fn byte_sum(x: u64) -> u64 {
    let y = (x & 0x00ff_00ff_00ff_00ff) + ((x >> 8) & 0x00ff_00ff_00ff_00ff);
    y.wrapping_mul(0x0001_0001_0001_0001) >> 48
}

/// Packed monomial: `w[0]` is the total degree, the other words hold one
/// exponent (< 128) per byte. The last variable sits in the top byte of
/// `w[1]`, so degrevlex is a reversed word comparison after the degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Mono<const W: usize> {
    w: [u64; W],
}

fn slot(k: usize, n: usize) -> (usize, u32) {
    let r = n - 1 - k;
    (1 + r / 8, 56 - 8 * (r % 8) as u32)
}

impl<const W: usize> Mono<W> {
    const fn capacity() -> usize {
        8 * (W - 1)
    }

    fn one() -> Self {
        Mono { w: [0; W] }
    }

    fn from_exps(exps: &[u32]) -> Result<Self, GroebnerError> {
        let n = exps.len();
        let mut m = Self::one();
        for (k, &e) in exps.iter().enumerate() {
            if e > MAX_EXP {
                return Err(GroebnerError::ExponentOverflow);
            }
            let (i, s) = slot(k, n);
            m.w[i] |= u64::from(e) << s;
            m.w[0] += u64::from(e);
        }
        Ok(m)
    }

    fn exp(&self, k: usize, n: usize) -> u32 {
        let (i, s) = slot(k, n);
        ((self.w[i] >> s) & 0xff) as u32
    }

    fn deg(&self) -> u32 {
        self.w[0] as u32
    }

    fn is_one(&self) -> bool {
        self.w[0] == 0
    }

    /// Product; `None` when an exponent leaves the packed range.
    #[inline]
    fn mul(&self, o: &Self) -> Option<Self> {
        let w: [u64; W] = core::array::from_fn(|i| self.w[i] + o.w[i]);
        let over = w[1..].iter().fold(0, |acc, x| acc | x);
        (over & HI == 0).then_some(Mono { w })
    }

    /// `self / o`; `o` must divide `self`.
    fn div(&self, o: &Self) -> Self {
        Mono {
            w: core::array::from_fn(|i| self.w[i] - o.w[i]),
        }
    }

    #[inline]
    fn divides(&self, o: &Self) -> bool {
        self.w[0] <= o.w[0] && (1..W).all(|i| (o.w[i] | HI).wrapping_sub(self.w[i]) & HI == HI)
    }

    fn lcm(&self, o: &Self) -> Self {
        let mut w = [0u64; W];
        for i in 1..W {
            let ge = (self.w[i] | HI).wrapping_sub(o.w[i]) & HI;
            let m = (ge >> 7) * 0xff;
            w[i] = (self.w[i] & m) | (o.w[i] & !m);
            w[0] += byte_sum(w[i]);
        }
        Mono { w }
    }

    fn coprime(&self, o: &Self) -> bool {
        (1..W).all(|i| nonzero_bytes(self.w[i]) & nonzero_bytes(o.w[i]) == 0)
    }

    /// Support bitmask (byte positions folded modulo 64).
    #[inline]
    fn mask(&self) -> u64 {
        let mut m = 0u64;
        for i in 1..W {
            let b = (nonzero_bytes(self.w[i]) >> 7).wrapping_mul(0x0102_0408_1020_4080) >> 56;
            m |= b.rotate_left((8 * (i - 1) % 64) as u32);
        }
        m
    }
}

impl<const W: usize> Ord for Mono<W> {
    #[inline]
    fn cmp(&self, other: &Self) -> Ordering {
        match self.w[0].cmp(&other.w[0]) {
            Ordering::Equal => {}
            o => return o,
        }
        for i in 1..W {
            if self.w[i] != other.w[i] {
                // A larger exponent in the last differing variable loses.
                return other.w[i].cmp(&self.w[i]);
            }
        }
        Ordering::Equal
    }
}

impl<const W: usize> PartialOrd for Mono<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Terms sorted by decreasing monomial.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct GPoly<E, const W: usize> {
    terms: Vec<(Mono<W>, E)>,
}

impl<E, const W: usize> GPoly<E, W> {
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn lm(&self) -> &Mono<W> {
        &self.terms[0].0
    }
}

#[derive(Clone, Debug)]
struct Pair<const W: usize> {
    i: usize,
    j: usize,
    lcm: Mono<W>,
    sugar: u32,
}

/// Multiple `c * q * p[pos..]` of a basis element, or of the input when
/// `src` is `None`.
struct Stream<E, const W: usize> {
    src: Option<usize>,
    q: Mono<W>,
    c: E,
    pos: usize,
}

const NIL: u32 = u32::MAX;

/// Max-heap of distinct monomials; streams whose current terms share a
/// monomial met while sifting up are chained onto one node.
struct ChainHeap<const W: usize> {
    nodes: Vec<(Mono<W>, u32)>,
    /// `(stream, next link)`.
    links: Vec<(u32, u32)>,
}

impl<const W: usize> ChainHeap<W> {
    fn new() -> Self {
        ChainHeap {
            nodes: Vec::new(),
            links: Vec::new(),
        }
    }

    fn push(&mut self, m: Mono<W>, s: usize) {
        let link = self.links.len() as u32;
        let mut j = self.nodes.len();
        while j > 0 {
            let p = (j - 1) / 2;
            match self.nodes[p].0.cmp(&m) {
                Ordering::Less => j = p,
                Ordering::Equal => {
                    self.links.push((s as u32, self.nodes[p].1));
                    self.nodes[p].1 = link;
                    return;
                }
                Ordering::Greater => break,
            }
        }
        self.links.push((s as u32, NIL));
        let mut c = self.nodes.len();
        self.nodes.push((m, link));
        while c > j {
            let p = (c - 1) / 2;
            self.nodes[c] = self.nodes[p];
            c = p;
        }
        self.nodes[j] = (m, link);
    }

    fn peek(&self) -> Option<&Mono<W>> {
        self.nodes.first().map(|n| &n.0)
    }

    /// Removes the largest node; returns its monomial and chain.
    fn pop(&mut self) -> Option<(Mono<W>, u32)> {
        let last = self.nodes.pop()?;
        if self.nodes.is_empty() {
            return Some(last);
        }
        let top = core::mem::replace(&mut self.nodes[0], last);
        let n = self.nodes.len();
        let mut i = 0;
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let c = if l + 1 < n && self.nodes[l + 1].0 > self.nodes[l].0 { l + 1 } else { l };
            if self.nodes[c].0 <= last.0 {
                break;
            }
            self.nodes[i] = self.nodes[c];
            i = c;
        }
        self.nodes[i] = last;
        Some(top)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Engine<F: Field, const W: usize> {
    field: F,
    polys: Vec<GPoly<F::E, W>>,
    masks: Vec<u64>,
    sugar: Vec<u32>,
    active: Vec<usize>,
    pairs: Vec<Pair<W>>,
    unit: bool,
}

impl<F: Field, const W: usize> Engine<F, W> {
    fn new(field: F) -> Self {
        Engine {
            field,
            polys: Vec::new(),
            masks: Vec::new(),
            sugar: Vec::new(),
            active: Vec::new(),
            pairs: Vec::new(),
            unit: false,
        }
    }

    fn make_monic(&self, mut p: GPoly<F::E, W>) -> GPoly<F::E, W> {
        if p.is_zero() {
            return p;
        }
        let inv = self.field.inv(&p.terms[0].1);
        for t in &mut p.terms {
            t.1 = self.field.mul(&t.1, &inv);
        }
        p
    }

    fn term<'a>(&'a self, input: &'a [(Mono<W>, F::E)], s: &Stream<F::E, W>) -> &'a (Mono<W>, F::E) {
        match s.src {
            Some(k) => &self.polys[k].terms[s.pos],
            None => &input[s.pos],
        }
    }

    fn stream_len(&self, input: &[(Mono<W>, F::E)], s: &Stream<F::E, W>) -> usize {
        match s.src {
            Some(k) => self.polys[k].terms.len(),
            None => input.len(),
        }
    }

    /// Monomial of the current term of `st`, if any.
    #[inline]
    fn current(&self, input: &[(Mono<W>, F::E)], st: &Stream<F::E, W>) -> Result<Option<Mono<W>>, GroebnerError> {
        if st.pos >= self.stream_len(input, st) {
            return Ok(None);
        }
        st.q
            .mul(&self.term(input, st).0)
            .map(Some)
            .ok_or(GroebnerError::ExponentOverflow)
    }

    /// Remainder of the sum of `streams` on division by `reducers` (monic).
    /// With `full` unset only leading terms are reduced.
    fn divide(
        &self,
        input: &[(Mono<W>, F::E)],
        mut streams: Vec<Stream<F::E, W>>,
        reducers: &[usize],
        full: bool,
    ) -> Result<GPoly<F::E, W>, GroebnerError> {
        let fl = &self.field;
        let table: Vec<(u64, usize)> = reducers.iter().map(|&k| (self.masks[k], k)).collect();
        let mut heap = ChainHeap::new();
        for (s, st) in streams.iter().enumerate() {
            if let Some(m) = self.current(input, st)? {
                heap.push(m, s);
            }
        }
        let mut rem = Vec::new();
        while let Some(&m) = heap.peek() {
            let mut acc = fl.zero();
            while heap.peek() == Some(&m) {
                let (_, mut link) = heap.pop().expect("peeked");
                while link != NIL {
                    let (s, next) = heap.links[link as usize];
                    let s = s as usize;
                    let st = &mut streams[s];
                    acc = fl.add(&acc, &fl.mul(&st.c, &self.term(input, st).1));
                    st.pos += 1;
                    if let Some(nm) = self.current(input, st)? {
                        heap.push(nm, s);
                    }
                    link = next;
                }
            }
            if fl.is_zero(&acc) {
                continue;
            }
            let found = if full || rem.is_empty() {
                let mask = m.mask();
                table
                    .iter()
                    .find(|(rm, k)| rm & !mask == 0 && self.polys[*k].lm().divides(&m))
            } else {
                None
            };
            match found {
                Some(&(_, k)) => {
                    let st = Stream {
                        src: Some(k),
                        q: m.div(self.polys[k].lm()),
                        c: fl.neg(&acc),
                        pos: 1,
                    };
                    if let Some(nm) = self.current(input, &st)? {
                        heap.push(nm, streams.len());
                    }
                    streams.push(st);
                }
                None => rem.push((m, acc)),
            }
        }
        Ok(GPoly { terms: rem })
    }

    /// Full reduction of `f` modulo `reducers`.
    fn reduce(&self, f: &[(Mono<W>, F::E)], reducers: &[usize], full: bool) -> Result<GPoly<F::E, W>, GroebnerError> {
        let seed = Stream {
            src: None,
            q: Mono::one(),
            c: self.field.one(),
            pos: 0,
        };
        self.divide(f, alloc::vec![seed], reducers, full)
    }

    /// Normal form of the S-polynomial of `i` and `j`.
    fn reduce_spoly(&self, i: usize, j: usize, lcm: &Mono<W>, reducers: &[usize], full: bool) -> Result<GPoly<F::E, W>, GroebnerError> {
        let fl = &self.field;
        let seeds = alloc::vec![
            Stream {
                src: Some(i),
                q: lcm.div(self.polys[i].lm()),
                c: fl.one(),
                pos: 1,
            },
            Stream {
                src: Some(j),
                q: lcm.div(self.polys[j].lm()),
                c: fl.neg(&fl.one()),
                pos: 1,
            },
        ];
        self.divide(&[], seeds, reducers, full)
    }

    /// Adds a new basis element and updates the pair set (Gebauer-Moeller).
    fn insert(&mut self, h: GPoly<F::E, W>, sugar: u32) {
        let h = self.make_monic(h);
        if h.lm().is_one() {
            self.unit = true;
        }
        let hi = self.polys.len();
        let lh = *h.lm();
        self.masks.push(lh.mask());
        self.polys.push(h);
        self.sugar.push(sugar);

        let mut cands: Vec<(usize, Mono<W>)> = self
            .active
            .iter()
            .map(|&g| (g, lh.lcm(self.polys[g].lm())))
            .collect();
        let mut kept: Vec<(usize, Mono<W>)> = Vec::new();
        while let Some((g1, l1)) = cands.pop() {
            let coprime = lh.coprime(self.polys[g1].lm());
            let dominated = cands.iter().any(|(_, l2)| l2.divides(&l1))
                || kept.iter().any(|(_, l2)| l2.divides(&l1));
            if coprime || !dominated {
                kept.push((g1, l1));
            }
        }
        let polys = &self.polys;
        self.pairs.retain(|p| {
            !(lh.divides(&p.lcm)
                && lh.lcm(polys[p.i].lm()) != p.lcm
                && lh.lcm(polys[p.j].lm()) != p.lcm)
        });
        for (g, l) in kept {
            if lh.coprime(self.polys[g].lm()) {
                continue;
            }
            let sg = self.sugar[g] + l.deg() - self.polys[g].lm().deg();
            let sh = sugar + l.deg() - lh.deg();
            self.pairs.push(Pair {
                i: g,
                j: hi,
                lcm: l,
                sugar: sg.max(sh),
            });
        }
        let polys = &self.polys;
        self.active.retain(|&g| !lh.divides(polys[g].lm()));
        self.active.push(hi);
    }

    fn select_pair(&mut self) -> Option<Pair<W>> {
        let best = self
            .pairs
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.lcm.cmp(&b.lcm).then(a.sugar.cmp(&b.sugar)))
            .map(|(k, _)| k)?;
        Some(self.pairs.swap_remove(best))
    }

    fn run(&mut self, gens: Vec<GPoly<F::E, W>>) -> Result<(), GroebnerError> {
        for g in gens {
            if g.is_zero() {
                continue;
            }
            let active = self.active.clone();
            let r = self.reduce(&g.terms, &active, true)?;
            if r.is_zero() {
                continue;
            }
            let s = r.terms.iter().map(|(m, _)| m.deg()).max().unwrap_or(0);
            self.insert(r, s);
            if self.unit {
                return Ok(());
            }
        }
        while let Some(pair) = self.select_pair() {
            let active = self.active.clone();
            let r = self.reduce_spoly(pair.i, pair.j, &pair.lcm, &active, true)?;
            if r.is_zero() {
                continue;
            }
            self.insert(r, pair.sugar);
            if self.unit {
                return Ok(());
            }
        }
        Ok(())
    }

    /// Replaces the state by the reduced basis of the active set.
    fn finish(&mut self) -> Result<(), GroebnerError> {
        let reduced = if self.unit {
            alloc::vec![GPoly {
                terms: alloc::vec![(Mono::one(), self.field.one())],
            }]
        } else {
            let mut idx: Vec<usize> = self.active.clone();
            idx.sort_by(|a, b| self.polys[*a].lm().cmp(self.polys[*b].lm()));
            let mut minimal: Vec<usize> = Vec::new();
            for &k in &idx {
                if !minimal
                    .iter()
                    .any(|&j| self.polys[j].lm().divides(self.polys[k].lm()))
                {
                    minimal.push(k);
                }
            }
            let mut out = Vec::with_capacity(minimal.len());
            for &k in &minimal {
                let others: Vec<usize> = minimal.iter().copied().filter(|&j| j != k).collect();
                let p = &self.polys[k];
                let mut terms = alloc::vec![p.terms[0].clone()];
                terms.append(&mut self.reduce(&p.terms[1..], &others, true)?.terms);
                out.push(self.make_monic(GPoly { terms }));
            }
            out
        };
        self.masks = reduced.iter().map(|p| p.lm().mask()).collect();
        self.polys = reduced;
        self.active = (0..self.polys.len()).collect();
        self.pairs.clear();
        Ok(())
    }
}

fn to_mono<const W: usize>(m: &Monomial, order: &MonomialOrder) -> Result<Mono<W>, GroebnerError> {
    let mut exps = alloc::vec![0u32; order.vars.len()];
    for &(v, e) in m.factors() {
        let k = order.position(v).ok_or(GroebnerError::UnknownVariable(v))?;
        exps[k] = e;
    }
    Mono::from_exps(&exps)
}

fn to_gpoly<F: Field, const W: usize>(
    p: &Poly,
    order: &MonomialOrder,
    field: &F,
) -> Result<GPoly<F::E, W>, GroebnerError> {
    let mut terms = Vec::with_capacity(p.len());
    for (m, c) in p.terms() {
        let e = field.embed(c);
        if !field.is_zero(&e) {
            terms.push((to_mono(m, order)?, e));
        }
    }
    terms.sort_by_key(|t| core::cmp::Reverse(t.0));
    Ok(GPoly { terms })
}

/// Leading coefficient of the integer polynomial under `order`.
fn integer_leading_coeff<const W: usize>(p: &Poly, order: &MonomialOrder) -> Result<Option<BigInt>, GroebnerError> {
    let mut best: Option<(Mono<W>, BigInt)> = None;
    for (m, c) in p.terms() {
        let mm = to_mono(m, order)?;
        if best.as_ref().is_none_or(|(b, _)| mm > *b) {
            best = Some((mm, c.clone()));
        }
    }
    Ok(best.map(|(_, c)| c))
}

fn from_gpoly<F: Field, const W: usize>(p: &GPoly<F::E, W>, order: &MonomialOrder, field: &F) -> Poly {
    let n = order.vars.len();
    let lifted: Vec<(Monomial, BigRational)> = p
        .terms
        .iter()
        .map(|(m, c)| {
            let mono = Monomial::from_pairs(
                (0..n)
                    .map(|k| (order.vars[k], m.exp(k, n)))
                    .filter(|(_, e)| *e > 0),
            );
            (mono, field.lift(c))
        })
        .collect();
    let l = lifted
        .iter()
        .fold(BigInt::one(), |l, (_, c)| l.lcm(c.denom()));
    let poly = Poly::from_terms(lifted.into_iter().map(|(m, c)| {
        (m, (c * BigRational::from_integer(l.clone())).to_integer())
    }));
    let g = poly.content();
    if g.is_zero() || g.is_one() {
        poly
    } else {
        poly.div_exact(&g)
    }
}

/// Operations on a finished basis, independent of the packing width.
trait Basis: core::fmt::Debug + Send + Sync {
    fn len(&self) -> usize;
    fn is_unit(&self) -> bool;
    fn generators(&self, order: &MonomialOrder) -> Vec<Poly>;
    fn verify(&self) -> bool;
    fn is_autoreduced(&self) -> bool;
    fn normal_form(&self, f: &Poly, order: &MonomialOrder) -> Result<Poly, GroebnerError>;
    fn boxed(&self) -> Box<dyn Basis>;
}

impl<F: Field, const W: usize> Basis for Engine<F, W> {
    fn len(&self) -> usize {
        self.polys.len()
    }

    fn is_unit(&self) -> bool {
        self.polys.len() == 1 && self.polys[0].lm().is_one()
    }

    fn generators(&self, order: &MonomialOrder) -> Vec<Poly> {
        self.polys.iter().map(|p| from_gpoly(p, order, &self.field)).collect()
    }

    fn verify(&self) -> bool {
        let all: Vec<usize> = (0..self.polys.len()).collect();
        for i in 0..self.polys.len() {
            for j in i + 1..self.polys.len() {
                let l = self.polys[i].lm().lcm(self.polys[j].lm());
                if !self.reduce_spoly(i, j, &l, &all, false).is_ok_and(|r| r.is_zero()) {
                    return false;
                }
            }
        }
        true
    }

    fn is_autoreduced(&self) -> bool {
        self.polys.iter().enumerate().all(|(i, p)| {
            self.polys.iter().enumerate().all(|(j, q)| {
                i == j || q.terms.iter().all(|(m, _)| !p.lm().divides(m))
            })
        })
    }

    fn normal_form(&self, f: &Poly, order: &MonomialOrder) -> Result<Poly, GroebnerError> {
        let g = to_gpoly(f, order, &self.field)?;
        let all: Vec<usize> = (0..self.polys.len()).collect();
        Ok(from_gpoly(&self.reduce(&g.terms, &all, true)?, order, &self.field))
    }

    fn boxed(&self) -> Box<dyn Basis> {
        Box::new(self.clone())
    }
}

/// Reduced Groebner basis together with its order and field.
#[derive(Debug)]
pub struct GroebnerBasis {
    order: MonomialOrder,
    field: CoefficientField,
    inner: Box<dyn Basis>,
}

impl Clone for GroebnerBasis {
    fn clone(&self) -> Self {
        GroebnerBasis {
            order: self.order.clone(),
            field: self.field,
            inner: self.inner.boxed(),
        }
    }
}

fn compute<F: Field, const W: usize>(
    gens: &[Poly],
    order: &MonomialOrder,
    field: F,
    check_leading: impl Fn(&BigInt) -> bool,
) -> Result<Box<dyn Basis>, GroebnerError> {
    let mut gp = Vec::with_capacity(gens.len());
    for g in gens {
        if g.is_zero() {
            continue;
        }
        let lc = integer_leading_coeff::<W>(g, order)?.expect("nonzero");
        if !check_leading(&lc) {
            return Err(GroebnerError::PrimeCollision(0));
        }
        gp.push(to_gpoly::<F, W>(g, order, &field)?);
    }
    let mut eng = Engine::<F, W>::new(field);
    eng.run(gp)?;
    eng.finish()?;
    Ok(Box::new(eng))
}

fn compute_any<F: Field>(
    gens: &[Poly],
    order: &MonomialOrder,
    field: F,
    check_leading: impl Fn(&BigInt) -> bool,
) -> Result<Box<dyn Basis>, GroebnerError> {
    let n = order.vars.len().max(1);
    match n {
        _ if n <= Mono::<2>::capacity() => compute::<F, 2>(gens, order, field, check_leading),
        _ if n <= Mono::<4>::capacity() => compute::<F, 4>(gens, order, field, check_leading),
        _ if n <= Mono::<8>::capacity() => compute::<F, 8>(gens, order, field, check_leading),
        _ if n <= Mono::<16>::capacity() => compute::<F, 16>(gens, order, field, check_leading),
        _ if n <= Mono::<32>::capacity() => compute::<F, 32>(gens, order, field, check_leading),
        _ if n <= Mono::<64>::capacity() => compute::<F, 64>(gens, order, field, check_leading),
        _ if n <= Mono::<128>::capacity() => compute::<F, 128>(gens, order, field, check_leading),
        _ => Err(GroebnerError::TooManyVariables(n)),
    }
}

/// Computes the reduced Groebner basis of the ideal generated by `gens`.
///
/// Under `Prime(p)` every generator must keep its leading term modulo `p`,
/// otherwise `PrimeCollision` is returned and the caller retries with
/// another prime. Exponents are limited to 127 and the order to 1016
/// variables.
pub fn buchberger(
    gens: &[Poly],
    order: &MonomialOrder,
    field: CoefficientField,
) -> Result<GroebnerBasis, GroebnerError> {
    let inner = match field {
        CoefficientField::Prime(p) => {
            if p < 3 || !is_prime(p) || p >= 1 << 63 {
                return Err(GroebnerError::BadModulus(p));
            }
            let fl = Fp(p);
            compute_any(gens, order, fl, |lc| fl.embed(lc) != 0).map_err(|e| match e {
                GroebnerError::PrimeCollision(_) => GroebnerError::PrimeCollision(p),
                e => e,
            })?
        }
        CoefficientField::ExactRational => compute_any(gens, order, Qq, |_| true)?,
    };
    Ok(GroebnerBasis {
        order: order.clone(),
        field,
        inner,
    })
}

impl GroebnerBasis {
    pub fn order(&self) -> &MonomialOrder {
        &self.order
    }

    pub fn field(&self) -> CoefficientField {
        self.field
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Generators as primitive integer polynomials. Prime-field coefficients
    /// are lifted to symmetric representatives.
    pub fn generators(&self) -> Vec<Poly> {
        self.inner.generators(&self.order)
    }

    /// Whether every S-polynomial of the basis reduces to zero.
    pub fn verify(&self) -> bool {
        self.inner.verify()
    }

    /// Whether no leading monomial divides a monomial of another generator.
    pub fn is_autoreduced(&self) -> bool {
        self.inner.is_autoreduced()
    }
}

/// `true` iff the basis generates the unit ideal.
pub fn contains_one(gb: &GroebnerBasis) -> bool {
    gb.inner.is_unit()
}

/// Remainder of `f` modulo the basis, as a primitive integer polynomial
/// (zero iff `f` lies in the ideal).
pub fn normal_form(f: &Poly, gb: &GroebnerBasis) -> Result<Poly, GroebnerError> {
    gb.inner.normal_form(f, &gb.order)
}

/// Ideal membership test.
pub fn is_member(f: &Poly, gb: &GroebnerBasis) -> Result<bool, GroebnerError> {
    Ok(normal_form(f, gb)?.is_zero())
}

/// `true` if `p` is a nonzero rational multiple of some generator.
pub fn has_generator_proportional_to(gb: &GroebnerBasis, p: &Poly) -> bool {
    let target = p.primitive();
    gb.generators().iter().any(|g| {
        let g = g.primitive();
        g == target || g == -&target
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn x() -> Poly {
        Poly::var(DiffVar::state(0, 0))
    }
    fn y() -> Poly {
        Poly::var(DiffVar::state(1, 0))
    }
    fn c(n: i64) -> Poly {
        Poly::constant(n)
    }

    fn fields() -> [CoefficientField; 2] {
        [CoefficientField::default(), CoefficientField::ExactRational]
    }

    #[test]
    fn unit_ideal_from_inconsistent_pair() {
        for f in fields() {
            let gens = [x().pow(2), &x() - &c(1)];
            let gb = buchberger(&gens, &MonomialOrder::for_polys(&gens), f).unwrap();
            assert!(contains_one(&gb));
            assert_eq!(gb.generators(), vec![c(1)]);
        }
    }

    #[test]
    fn single_generator_is_its_own_basis() {
        for f in fields() {
            let gens = [&x() - &c(1)];
            let gb = buchberger(&gens, &MonomialOrder::for_polys(&gens), f).unwrap();
            assert!(!contains_one(&gb));
            assert_eq!(gb.generators(), vec![&x() - &c(1)]);
        }
    }

    #[test]
    fn two_generator_example() {
        // {xy - 1, y^2 - 1}, x > y  ->  {y^2 - 1, x - y}
        for f in fields() {
            let gens = [&(&x() * &y()) - &c(1), &y().pow(2) - &c(1)];
            let order = MonomialOrder::degrevlex(vec![DiffVar::state(0, 0), DiffVar::state(1, 0)]);
            let gb = buchberger(&gens, &order, f).unwrap();
            assert!(gb.verify());
            assert!(gb.is_autoreduced());
            assert_eq!(gb.len(), 2);
            assert!(has_generator_proportional_to(&gb, &(&y().pow(2) - &c(1))));
            assert!(has_generator_proportional_to(&gb, &(&x() - &y())));
            for g in &gens {
                assert!(is_member(g, &gb).unwrap());
            }
        }
    }

    #[test]
    fn degrevlex_compares_last_variable() {
        // x*z < y^2 in degrevlex with x > y > z.
        let order = MonomialOrder::degrevlex(vec![
            DiffVar::state(0, 0),
            DiffVar::state(1, 0),
            DiffVar::state(2, 0),
        ]);
        let a: Mono<2> = to_mono(&Monomial::from_pairs([(DiffVar::state(0, 0), 1), (DiffVar::state(2, 0), 1)]), &order).unwrap();
        let b: Mono<2> = to_mono(&Monomial::from_pairs([(DiffVar::state(1, 0), 2)]), &order).unwrap();
        assert!(a < b);
        let x2: Mono<2> = to_mono(&Monomial::from_pairs([(DiffVar::state(0, 0), 2)]), &order).unwrap();
        assert!(x2 > b);
    }

    #[test]
    fn prime_collision_and_bad_modulus() {
        let gens = [&(&x() * &c(7)) - &c(1)];
        let order = MonomialOrder::for_polys(&gens);
        assert_eq!(
            buchberger(&gens, &order, CoefficientField::Prime(7)).unwrap_err(),
            GroebnerError::PrimeCollision(7)
        );
        assert_eq!(
            buchberger(&gens, &order, CoefficientField::Prime(8)).unwrap_err(),
            GroebnerError::BadModulus(8)
        );
    }

    fn naive_cmp(a: &[u32], b: &[u32]) -> Ordering {
        let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
        da.cmp(&db).then_with(|| {
            for (x, y) in a.iter().zip(b).rev() {
                if x != y {
                    return y.cmp(x);
                }
            }
            Ordering::Equal
        })
    }

    fn exps_of<const W: usize>(m: &Mono<W>, n: usize) -> Vec<u32> {
        (0..n).map(|k| m.exp(k, n)).collect()
    }

    proptest::proptest! {
        #[test]
        fn packed_monomials_match_exponent_vectors(
            n in 1usize..=24,
            a in proptest::collection::vec(0u32..=60, 24),
            b in proptest::collection::vec(0u32..=60, 24),
        ) {
            let (a, b) = (&a[..n], &b[..n]);
            let ma = Mono::<4>::from_exps(a).unwrap();
            let mb = Mono::<4>::from_exps(b).unwrap();
            proptest::prop_assert_eq!(exps_of(&ma, n), a.to_vec());
            proptest::prop_assert_eq!(ma.deg(), a.iter().sum::<u32>());
            proptest::prop_assert_eq!(ma.cmp(&mb), naive_cmp(a, b));
            let prod: Vec<u32> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            proptest::prop_assert_eq!(exps_of(&ma.mul(&mb).unwrap(), n), prod.clone());
            proptest::prop_assert_eq!(ma.mul(&mb).unwrap().div(&mb), ma);
            let lcm: Vec<u32> = a.iter().zip(b).map(|(x, y)| *x.max(y)).collect();
            proptest::prop_assert_eq!(ma.lcm(&mb), Mono::from_exps(&lcm).unwrap());
            proptest::prop_assert_eq!(ma.divides(&mb), a.iter().zip(b).all(|(x, y)| x <= y));
            proptest::prop_assert_eq!(ma.coprime(&mb), a.iter().zip(b).all(|(x, y)| *x == 0 || *y == 0));
            if ma.divides(&mb) {
                proptest::prop_assert_eq!(ma.mask() & !mb.mask(), 0);
            }
        }
    }

    #[test]
    fn exponent_limit() {
        for f in fields() {
            let gens = [x().pow(128)];
            let err = buchberger(&gens, &MonomialOrder::for_polys(&gens), f).unwrap_err();
            assert_eq!(err, GroebnerError::ExponentOverflow);
            let gens = [&x().pow(100) - &y(), &y().pow(100) - &c(1)];
            let order = MonomialOrder::degrevlex(vec![DiffVar::state(0, 0), DiffVar::state(1, 0)]);
            assert!(buchberger(&gens, &order, f).is_ok());
        }
        let a = Mono::<2>::from_exps(&[100, 0]).unwrap();
        assert!(a.mul(&a).is_none());
    }

    #[test]
    fn variable_limit() {
        let vars: Vec<DiffVar> = (0..1017).map(DiffVar::param).collect();
        let order = MonomialOrder::degrevlex(vars);
        let gens = [Poly::var(DiffVar::param(0))];
        assert_eq!(
            buchberger(&gens, &order, CoefficientField::default()).unwrap_err(),
            GroebnerError::TooManyVariables(1017)
        );
        let order = MonomialOrder::degrevlex((0..1016).map(DiffVar::param).collect());
        let gb = buchberger(&gens, &order, CoefficientField::default()).unwrap();
        assert_eq!(gb.generators(), gens);
    }

    #[test]
    fn primality() {
        assert!(is_prime(DEFAULT_PRIME));
        assert!(!is_prime(DEFAULT_PRIME - 2));
        assert_eq!(prev_prime(DEFAULT_PRIME), Some(2_147_483_629));
        assert!(is_prime(2_305_843_009_213_693_951));
    }
}
