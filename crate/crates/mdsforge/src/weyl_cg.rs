//! Weyl group of A3 acting on rational functions in `z1, z2, z3`, the
//! invariant function `g`, its power-series coefficients and the correction
//! polynomials `P_j`, `Q_k`.
//!
//! Node 3 is the central node, so the adjacent pairs are 1-3 and 2-3.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use thiserror::Error;

use crate::exact::{
    expand_in, rat, ratio, rf_equal, series_expand, ExactError, MonoImage, MonoMap, MultiRat, Poly,
    TruncSeries, UPoly, U, Z1, Z2, Z3,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CgError {
    #[error("degenerate action input")]
    Degenerate,
    #[error("expand further: index ({0},{1},{2}) beyond cached degree {3}")]
    ExpandFurther(u32, u32, u32, u32),
    #[error("decomposition violated for {0}")]
    Decomposition(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

pub const DEFAULT_JMAX: u32 = 8;
pub const DEFAULT_KMAX: u32 = 8;
pub const DEFAULT_DEGREE: u32 = 16;

/// Generators are numbered 1, 2, 3.
pub fn adjacent(i: usize, j: usize) -> bool {
    matches!((i, j), (1, 3) | (3, 1) | (2, 3) | (3, 2))
}

/// Coxeter exponents: `(s_i s_j)^r = 1`.
pub fn coxeter_order(i: usize, j: usize) -> u32 {
    if i == j {
        1
    } else if adjacent(i, j) {
        3
    } else {
        2
    }
}

fn zvar(i: usize) -> usize {
    i - 1
}

/// Sign change `z_j -> -z_j` for `j` adjacent to `i`.
pub fn eps_map(i: usize) -> MonoMap {
    let mut m = MonoMap::identity();
    for j in 1..=3 {
        if adjacent(i, j) {
            let mut mono = [0; 4];
            mono[zvar(j)] = 1;
            m = m.with(zvar(j), MonoImage::new(-1, mono));
        }
    }
    m
}

/// Coordinate map of the reflection `s_i`: `z_i -> 1/(q z_i)` and
/// `z_j -> u z_i z_j` for `j` adjacent to `i`.
pub fn sigma_map(i: usize) -> MonoMap {
    let mut m = MonoMap::identity();
    let mut inv = [0; 4];
    inv[zvar(i)] = -1;
    inv[U] = -2;
    m = m.with(zvar(i), MonoImage::new(1, inv));
    for j in 1..=3 {
        if adjacent(i, j) {
            let mut mono = [0; 4];
            mono[zvar(i)] = 1;
            mono[zvar(j)] = 1;
            mono[U] = 1;
            m = m.with(zvar(j), MonoImage::new(1, mono));
        }
    }
    m
}

/// A word in the simple reflections; the empty word is the identity.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct WeylWord(Vec<u8>);

impl WeylWord {
    pub fn new(gens: &[u8]) -> Result<Self, CgError> {
        if let Some(g) = gens.iter().find(|g| !(1..=3).contains(*g)) {
            return Err(CgError::OutOfRange(format!("generator {g}")));
        }
        Ok(WeylWord(gens.to_vec()))
    }

    pub fn identity() -> Self {
        WeylWord(Vec::new())
    }

    pub fn gens(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Coordinate map `z -> s_{i1} s_{i2} ... z`, composed so that
    /// `h.substitute(word.coord_map())` is `h(s_{i1}(s_{i2}(...z)))`.
    pub fn coord_map(&self) -> MonoMap {
        self.0
            .iter()
            .rev()
            .fold(MonoMap::identity(), |acc, &g| sigma_map(g as usize).then(&acc))
    }
}

/// The numerator of `g` over the six-factor denominator.
pub fn g_numerator() -> Poly {
    let t = |c: i64, k1: i32, k2: i32, j: i32, e: i32| Poly::mono(c, [k1, k2, j, e]);
    [
        t(1, 0, 0, 0, 0),
        t(-1, 1, 0, 1, 0),
        t(-1, 0, 1, 1, 0),
        t(1, 1, 1, 1, 0),
        t(1, 1, 1, 2, 2),
        t(-1, 2, 1, 2, 2),
        t(-1, 1, 2, 2, 2),
        t(1, 2, 2, 3, 2),
    ]
    .iter()
    .fold(Poly::zero(), |a, b| &a + b)
}

fn one_minus(c: i64, m: [i32; 4]) -> Poly {
    &Poly::one() - &Poly::mono(c, m)
}

/// The six linear/quadratic factors of the denominator of `g`.
pub fn g_denominator_factors() -> [Poly; 6] {
    [
        one_minus(1, [1, 0, 0, 0]),
        one_minus(1, [0, 1, 0, 0]),
        one_minus(1, [0, 0, 1, 0]),
        one_minus(1, [2, 0, 2, 2]),
        one_minus(1, [0, 2, 2, 2]),
        one_minus(1, [2, 2, 2, 4]),
    ]
}

pub fn g_denominator() -> Poly {
    g_denominator_factors().iter().fold(Poly::one(), |a, b| &a * b)
}

/// The invariant rational function `g(z1, z2, z3; q)`.
pub fn g_a3() -> MultiRat {
    MultiRat::new(g_numerator(), g_denominator()).expect("nonzero denominator")
}

/// One simple reflection applied to `h`.
pub fn act_simple(h: &MultiRat, i: usize) -> Result<MultiRat, CgError> {
    if !(1..=3).contains(&i) {
        return Err(CgError::OutOfRange(format!("generator {i}")));
    }
    let sigma = sigma_map(i);
    let hs = h.substitute(&sigma)?;
    let hes = h.substitute(&eps_map(i).then(&sigma))?;
    let (n1, d1) = (hs.num(), hs.den());
    let (n2, d2) = (hes.num(), hes.den());
    let a = n1 * d2;
    let b = n2 * d1;
    let s = &a + &b;
    let t = &a - &b;
    let zi = zvar(i);
    let mut zm = [0; 4];
    zm[zi] = 1;
    let u = Poly::var(U);
    let q = Poly::mono(1, [0, 0, 0, 2]);
    let one_minus_qz = one_minus(1, [(zi == 0) as i32, (zi == 1) as i32, (zi == 2) as i32, 2]);
    let one_minus_z = one_minus(1, zm);
    let num = &(&(-&(&u * &one_minus_qz)) * &s) + &(&(&q * &one_minus_z) * &t);
    let den = &(&Poly::mono(2, [zm[0], zm[1], zm[2], 3]) * &one_minus_z) * &(d1 * d2);
    MultiRat::new(num, den).map_err(|_| CgError::Degenerate)
}

/// `h | s_{i1} | s_{i2} | ...`.
pub fn act(h: &MultiRat, word: &WeylWord) -> Result<MultiRat, CgError> {
    let mut cur = h.clone();
    for &g in word.gens() {
        cur = act_simple(&cur, g as usize)?;
    }
    Ok(cur)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationCheck {
    pub i: usize,
    pub j: usize,
    pub order: u32,
    pub identity: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupReport {
    pub relations: Vec<RelationCheck>,
    /// Distinct coordinate maps reached by words of length at most `max_len`.
    pub distinct_maps: usize,
    pub max_len: usize,
}

impl GroupReport {
    pub fn all_hold(&self) -> bool {
        self.relations.iter().all(|r| r.identity)
    }

    pub fn violations(&self) -> Vec<&RelationCheck> {
        self.relations.iter().filter(|r| !r.identity).collect()
    }
}

/// Checks `(s_i s_j)^r = 1` on coordinates for all pairs, and counts the
/// distinct coordinate maps reachable with words up to `max_len`.
pub fn verify_group_relations(max_len: usize) -> GroupReport {
    let mut relations = Vec::new();
    for i in 1..=3 {
        for j in 1..=3 {
            let r = coxeter_order(i, j);
            let mut gens = Vec::new();
            for _ in 0..r {
                gens.push(i as u8);
                gens.push(j as u8);
            }
            let w = WeylWord(gens);
            relations.push(RelationCheck { i, j, order: r, identity: w.coord_map().is_identity() });
        }
    }
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut frontier = vec![MonoMap::identity()];
    seen.insert(format!("{:?}", MonoMap::identity()));
    for _ in 0..max_len {
        let mut next = Vec::new();
        for m in &frontier {
            for g in 1..=3 {
                let n = sigma_map(g).then(m);
                if seen.insert(format!("{:?}", n)) {
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    GroupReport { relations, distinct_maps: seen.len(), max_len }
}

/// `g` together with its Taylor expansion to a fixed total degree.
#[derive(Clone, Debug)]
pub struct CgFunction {
    g: MultiRat,
    series: TruncSeries,
}

impl CgFunction {
    pub fn new(degree: u32) -> Result<Self, CgError> {
        let g = g_a3();
        let series = series_expand(&g, degree)?;
        Ok(CgFunction { g, series })
    }

    pub fn g(&self) -> &MultiRat {
        &self.g
    }

    pub fn series(&self) -> &TruncSeries {
        &self.series
    }

    pub fn degree(&self) -> u32 {
        self.series.degree()
    }

    /// `a(k1, k2, j; q)` as a polynomial in `u`.
    pub fn coefficient(&self, k1: u32, k2: u32, j: u32) -> Result<UPoly, CgError> {
        self.series
            .coeff(k1, k2, j)
            .ok_or(CgError::ExpandFurther(k1, k2, j, self.series.degree()))
    }
}

impl Default for CgFunction {
    fn default() -> Self {
        CgFunction::new(DEFAULT_DEGREE).expect("g expands at the origin")
    }
}

/// Parity index `a_n`: 0 for even `n`, 1 for odd.
pub fn parity(n: u32) -> u32 {
    n % 2
}

/// `P_j(z1, z2; q)` from the even/odd decomposition in `z3`.
pub fn extract_p(j: u32) -> Result<Poly, CgError> {
    Ok(extract_p_all(j)?.swap_remove(j as usize))
}

/// `P_0 .. P_jmax`.
pub fn extract_p_all(jmax: u32) -> Result<Vec<Poly>, CgError> {
    let f = g_denominator_factors();
    let d0 = &f[0] * &f[1];
    let e = [&f[2], &f[3], &f[4], &f[5]].iter().fold(Poly::one(), |a, b| &a * *b);
    let series = expand_in(&g_numerator(), &e, &[Z3], jmax as i32)?;
    let mut out = Vec::with_capacity(jmax as usize + 1);
    for j in 0..=jmax {
        let b = series.get(&[0, 0, j as i32, 0]).cloned().unwrap_or_default();
        let p = if j % 2 == 0 {
            b
        } else {
            b.div_exact(&d0).ok_or_else(|| CgError::Decomposition(format!("P_{j}")))?
        };
        if !p.is_polynomial() {
            return Err(CgError::Decomposition(format!("P_{j}")));
        }
        out.push(p);
    }
    Ok(out)
}

/// `Q_(k1,k2)(z3; q)` from the even/odd decomposition in `(z1, z2)`.
pub fn extract_q(k1: u32, k2: u32) -> Result<Poly, CgError> {
    let all = extract_q_all(k1 + k2)?;
    Ok(all[&(k1, k2)].clone())
}

/// All `Q_k` with `|k| <= kmax`.
pub fn extract_q_all(kmax: u32) -> Result<BTreeMap<(u32, u32), Poly>, CgError> {
    let f = g_denominator_factors();
    let one_minus_z3 = f[2].clone();
    let rest = [&f[0], &f[1], &f[3], &f[4], &f[5]].iter().fold(Poly::one(), |a, b| &a * *b);
    let series = expand_in(&g_numerator(), &rest, &[Z1, Z2], kmax as i32)?;
    let mut out = BTreeMap::new();
    for n in 0..=kmax {
        for k1 in 0..=n {
            let k2 = n - k1;
            let b = series.get(&[k1 as i32, k2 as i32, 0, 0]).cloned().unwrap_or_default();
            let q = if n % 2 == 0 {
                b
            } else {
                b.div_exact(&one_minus_z3)
                    .ok_or_else(|| CgError::Decomposition(format!("Q_({k1},{k2})")))?
            };
            if !q.is_polynomial() {
                return Err(CgError::Decomposition(format!("Q_({k1},{k2})")));
            }
            out.insert((k1, k2), q);
        }
    }
    Ok(out)
}

/// Table of correction polynomials.
#[derive(Clone, Debug)]
pub struct CorrectionPolyTable {
    pub p: Vec<Poly>,
    pub q: BTreeMap<(u32, u32), Poly>,
    pub jmax: u32,
    pub kmax: u32,
}

impl CorrectionPolyTable {
    pub fn new(jmax: u32, kmax: u32) -> Result<Self, CgError> {
        Ok(CorrectionPolyTable { p: extract_p_all(jmax)?, q: extract_q_all(kmax)?, jmax, kmax })
    }

    pub fn p(&self, j: u32) -> Result<&Poly, CgError> {
        self.p.get(j as usize).ok_or_else(|| CgError::OutOfRange(format!("P_{j}")))
    }

    pub fn q(&self, k1: u32, k2: u32) -> Result<&Poly, CgError> {
        self.q.get(&(k1, k2)).ok_or_else(|| CgError::OutOfRange(format!("Q_({k1},{k2})")))
    }
}

impl Default for CorrectionPolyTable {
    fn default() -> Self {
        CorrectionPolyTable::new(DEFAULT_JMAX, DEFAULT_KMAX).expect("decomposition holds")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeKind {
    P,
    Q,
}

/// `(u z)^n * p(1/(q z))` for the variable `var`, compared against `p`.
fn fe_holds(p: &Poly, var: usize, n: i32) -> bool {
    let mut inv = [0; 4];
    inv[var] = -1;
    inv[U] = -2;
    let map = MonoMap::identity().with(var, MonoImage::new(1, inv));
    let mut shift = [0; 4];
    shift[var] = n;
    shift[U] = n;
    p.substitute(&map).shift(&shift) == *p
}

/// Formal functional equation of `P_j` (both variables) or `Q_k`.
pub fn check_formal_fe(table: &CorrectionPolyTable, kind: FeKind, index: (u32, u32)) -> Result<bool, CgError> {
    match kind {
        FeKind::P => {
            let j = index.0;
            let p = table.p(j)?;
            let n = (j - parity(j)) as i32;
            Ok(fe_holds(p, Z1, n) && fe_holds(p, Z2, n))
        }
        FeKind::Q => {
            let k = index.0 + index.1;
            let q = table.q(index.0, index.1)?;
            Ok(fe_holds(q, Z3, (k - parity(k)) as i32))
        }
    }
}

/// `z1 <-> z2`.
pub fn swap12() -> MonoMap {
    MonoMap::identity()
        .with(Z1, MonoImage::new(1, [0, 1, 0, 0]))
        .with(Z2, MonoImage::new(1, [1, 0, 0, 0]))
}

/// Even part of `g` in `(z1, z2)`, i.e. the average of `g` and `g(-z1, -z2, z3)`.
pub fn g3_plus() -> MultiRat {
    let g = g_a3();
    let flip = eps_map(3);
    let gm = g.substitute(&flip).expect("sign change keeps denominator");
    g.add(&gm).scale(&ratio(1, 2))
}

/// Both sides of the local residue identity, in variables `alpha` (slot z1),
/// `t` (slot z2) and `u`:
/// `(1 - 1/q) g3+(alpha t, t/alpha, 1/q)` and
/// `1 / ((1 - t^2)(1 - alpha^2 t^2)(1 - t^2/alpha^2))`.
pub fn residue_sides() -> (MultiRat, MultiRat) {
    let map = MonoMap::identity()
        .with(Z1, MonoImage::new(1, [1, 1, 0, 0]))
        .with(Z2, MonoImage::new(1, [-1, 1, 0, 0]))
        .with(Z3, MonoImage::new(1, [0, 0, 0, -2]));
    let lhs = g3_plus().substitute(&map).expect("specialization defined");
    let factor = MultiRat::new(&Poly::mono(1, [0, 0, 0, 2]) - &Poly::one(), Poly::mono(1, [0, 0, 0, 2]))
        .expect("nonzero");
    let lhs = lhs.mul(&factor);
    let den = [
        one_minus(1, [0, 2, 0, 0]),
        one_minus(1, [2, 2, 0, 0]),
        one_minus(1, [-2, 2, 0, 0]),
    ]
    .iter()
    .fold(Poly::one(), |a, b| &a * b);
    let rhs = MultiRat::new(Poly::one(), den).expect("nonzero");
    (lhs, rhs)
}

/// The residue identity as an exact rational-function identity. With
/// `perturb` the factor `(1 - 1/q)` is dropped, which must break it.
pub fn residue_factor_check(perturb: bool) -> bool {
    let (lhs, rhs) = residue_sides();
    if perturb {
        let factor = MultiRat::new(Poly::mono(1, [0, 0, 0, 2]), &Poly::mono(1, [0, 0, 0, 2]) - &Poly::one())
            .expect("nonzero");
        return rf_equal(&lhs.mul(&factor), &rhs);
    }
    rf_equal(&lhs, &rhs)
}

/// Both sides of the residue identity at `alpha`, `t` and `q = u^2`.
pub fn residue_at(alpha: BigRational, t: BigRational, u: BigRational) -> (Option<BigRational>, Option<BigRational>) {
    let (lhs, rhs) = residue_sides();
    let pt = [alpha, t, rat(0), u];
    (lhs.eval(&pt), rhs.eval(&pt))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniquenessReport {
    pub constant_term_one: bool,
    /// For node `i`, whether `(1 - z_i) g` restricted to `z_j = 0` (j adjacent) is free of `z_i`.
    pub independent: [bool; 3],
}

impl UniquenessReport {
    pub fn holds(&self) -> bool {
        self.constant_term_one && self.independent.iter().all(|&b| b)
    }
}

pub fn check_uniqueness() -> Result<UniquenessReport, CgError> {
    let g = g_a3();
    let origin = [rat(0), rat(0), rat(0), rat(1)];
    let c0 = g.eval(&origin);
    let mut independent = [false; 3];
    for i in 1..=3 {
        let mut h = g.mul_poly(&one_minus(1, {
            let mut m = [0; 4];
            m[zvar(i)] = 1;
            m
        }));
        for j in 1..=3 {
            if adjacent(i, j) {
                h = h.at_zero(zvar(j))?;
            }
        }
        independent[i - 1] = h.derivative(zvar(i)).is_zero();
    }
    Ok(UniquenessReport { constant_term_one: c0 == Some(rat(1)), independent })
}

/// Recombine `P_j` and `Q_k` into the coefficient of `z1^k1 z2^k2 z3^j` and
/// compare with the Taylor coefficient of `g`.
pub fn coefficient_consistent(
    cg: &CgFunction,
    table: &CorrectionPolyTable,
    k1: u32,
    k2: u32,
    j: u32,
) -> Result<bool, CgError> {
    let a = cg.coefficient(k1, k2, j)?.to_poly();
    // From P: odd j gives P_j directly; even j multiplies by 1/((1-z1)(1-z2)).
    let pj = table.p(j)?;
    let from_p = if j % 2 == 1 {
        pj.coeff_of(Z1, k1 as i32).coeff_of(Z2, k2 as i32)
    } else {
        let mut acc = Poly::zero();
        for a1 in 0..=k1 {
            for a2 in 0..=k2 {
                acc = &acc + &pj.coeff_of(Z1, a1 as i32).coeff_of(Z2, a2 as i32);
            }
        }
        acc
    };
    let qk = table.q(k1, k2)?;
    let from_q = if (k1 + k2) % 2 == 1 {
        qk.coeff_of(Z3, j as i32)
    } else {
        let mut acc = Poly::zero();
        for b in 0..=j {
            acc = &acc + &qk.coeff_of(Z3, b as i32);
        }
        acc
    };
    Ok(from_p == a && from_q == a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_involution() {
        for i in 1..=3 {
            assert!(sigma_map(i).then(&sigma_map(i)).is_identity());
        }
    }

    #[test]
    fn small_polys() {
        let t = extract_p_all(3).unwrap();
        assert_eq!(t[0], Poly::one());
        assert_eq!(t[1], Poly::one());
    }

    #[test]
    fn word_validation() {
        assert!(WeylWord::new(&[1, 4]).is_err());
        assert!(WeylWord::new(&[]).unwrap().is_empty());
    }
}
