//! Exact arithmetic: rationals, polynomials in `u` with `u^2 = q`, sparse
//! rational functions in `z1, z2, z3`, and truncated power series.

mod multirat;
mod poly;

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

pub use multirat::{rf_equal, MultiRat};
pub use poly::{add_mono, rat, ratio, sub_mono, Mono, MonoImage, MonoMap, Poly, U, Z1, Z2, Z3};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("not expandable at origin")]
    NotExpandable,
    #[error("malformed assignment: {0}")]
    Malformed(String),
}

/// Polynomial in `u` over the rationals, with `u^2` standing for `q`.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct UPoly {
    coeffs: BTreeMap<u32, BigRational>,
}

impl UPoly {
    pub fn zero() -> Self {
        UPoly::default()
    }

    pub fn from_terms<I: IntoIterator<Item = (u32, BigRational)>>(it: I) -> Self {
        let mut coeffs = BTreeMap::new();
        for (e, c) in it {
            if c.is_zero() {
                continue;
            }
            let s = coeffs.remove(&e).unwrap_or_else(BigRational::zero) + c;
            if !s.is_zero() {
                coeffs.insert(e, s);
            }
        }
        UPoly { coeffs }
    }

    /// Reads a polynomial that involves `u` only.
    pub fn from_poly(p: &Poly) -> Option<Self> {
        let mut terms = Vec::with_capacity(p.len());
        for (m, c) in p.terms() {
            if m[0] != 0 || m[1] != 0 || m[2] != 0 || m[3] < 0 {
                return None;
            }
            terms.push((m[3] as u32, c.clone()));
        }
        Some(UPoly::from_terms(terms))
    }

    pub fn to_poly(&self) -> Poly {
        Poly::from_terms(self.coeffs.iter().map(|(e, c)| ([0, 0, 0, *e as i32], c.clone())))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, e: u32) -> BigRational {
        self.coeffs.get(&e).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&u32, &BigRational)> {
        self.coeffs.iter()
    }

    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    /// True when only even powers of `u` occur, i.e. it is a polynomial in `q`.
    pub fn is_even(&self) -> bool {
        self.coeffs.keys().all(|e| e % 2 == 0)
    }

    pub fn eval_rational_q(&self, q: &BigRational) -> Option<BigRational> {
        if !self.is_even() {
            return None;
        }
        let mut acc = BigRational::zero();
        for (e, c) in &self.coeffs {
            acc += c * num_traits::pow(q.clone(), (*e / 2) as usize);
        }
        Some(acc)
    }

    pub fn eval_f64(&self, u: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(e, c)| c.to_f64().unwrap() * u.powi(*e as i32))
            .sum()
    }
}

impl fmt::Debug for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_poly())
    }
}

impl fmt::Display for UPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_poly())
    }
}

/// Taylor coefficients of a rational function in `z1, z2, z3` up to a total
/// degree bound, each coefficient a polynomial in `u`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncSeries {
    degree: u32,
    coeffs: BTreeMap<[u32; 3], UPoly>,
}

impl TruncSeries {
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeff(&self, k1: u32, k2: u32, j: u32) -> Option<UPoly> {
        if k1 + k2 + j > self.degree {
            return None;
        }
        Some(self.coeffs.get(&[k1, k2, j]).cloned().unwrap_or_default())
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (&[u32; 3], &UPoly)> {
        self.coeffs.iter()
    }

    /// Restriction to a smaller degree bound.
    pub fn truncate(&self, d: u32) -> TruncSeries {
        TruncSeries {
            degree: d.min(self.degree),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| k[0] + k[1] + k[2] <= d)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }
}

/// Expand `rf` about `z = 0` up to total degree `d`.
pub fn series_expand(rf: &MultiRat, d: u32) -> Result<TruncSeries, ExactError> {
    let raw = expand_in(rf.num(), rf.den(), &[Z1, Z2, Z3], d as i32)?;
    let mut coeffs = BTreeMap::new();
    for (m, c) in raw {
        let up = UPoly::from_poly(&c).ok_or(ExactError::NotExpandable)?;
        if !up.is_zero() {
            coeffs.insert([m[0] as u32, m[1] as u32, m[2] as u32], up);
        }
    }
    Ok(TruncSeries { degree: d, coeffs })
}

/// Power-series expansion of `num/den` in the variables `vars`, up to total
/// degree `bound` in those variables. Coefficients are polynomials in the
/// remaining variables. The part of `den` free of `vars` must be a nonzero
/// rational constant.
///
/// Uses the recurrence `den * S = num` in graded order, so the cost is
/// linear in the number of output monomials times the size of `den`.
pub fn expand_in(
    num: &Poly,
    den: &Poly,
    vars: &[usize],
    bound: i32,
) -> Result<BTreeMap<Mono, Poly>, ExactError> {
    let split = |p: &Poly| -> Result<BTreeMap<Mono, Poly>, ExactError> {
        let mut out: BTreeMap<Mono, Poly> = BTreeMap::new();
        for (m, c) in p.terms() {
            let mut key = [0i32; 4];
            let mut rest = *m;
            for &v in vars {
                if m[v] < 0 {
                    return Err(ExactError::NotExpandable);
                }
                key[v] = m[v];
                rest[v] = 0;
            }
            out.entry(key).or_default().add_term(rest, c.clone());
        }
        Ok(out)
    };
    let dens = split(den)?;
    let nums = split(num)?;
    let c0 = match dens.get(&[0; 4]) {
        Some(p) if p.len() == 1 && p.leading().unwrap().0 == &[0; 4] => {
            p.leading().unwrap().1.clone()
        }
        _ => return Err(ExactError::NotExpandable),
    };
    let inv0 = c0.recip();
    let deg = |m: &Mono| vars.iter().map(|&v| m[v]).sum::<i32>();

    let mut keys = Vec::new();
    enumerate_keys(vars, bound, &mut [0; 4], 0, &mut keys);
    keys.sort_by_key(|k| (deg(k), *k));

    let mut out: BTreeMap<Mono, Poly> = BTreeMap::new();
    for k in keys {
        let mut acc = nums.get(&k).cloned().unwrap_or_default();
        for (t, dt) in &dens {
            if *t == [0; 4] {
                continue;
            }
            let rest = sub_mono(&k, t);
            if vars.iter().any(|&v| rest[v] < 0) {
                continue;
            }
            if let Some(s) = out.get(&rest) {
                acc = &acc - &(dt * s);
            }
        }
        if !acc.is_zero() {
            out.insert(k, acc.scale(&inv0));
        }
    }
    Ok(out)
}

fn enumerate_keys(vars: &[usize], bound: i32, cur: &mut Mono, idx: usize, out: &mut Vec<Mono>) {
    if idx == vars.len() {
        out.push(*cur);
        return;
    }
    let used: i32 = vars[..idx].iter().map(|&v| cur[v]).sum();
    for e in 0..=(bound - used) {
        cur[vars[idx]] = e;
        enumerate_keys(vars, bound, cur, idx + 1, out);
    }
    cur[vars[idx]] = 0;
}
