//! First moment of central values over quadratic twists, its predicted main
//! term, and a small-scale search for the least nonvanishing twist.
//!
//! Twists are indexed by odd squarefree `d0 > 0` coprime to the level, with
//! `chi_{d0} = (disc(d0) / .)`. This is the odd-squarefree convention, not the
//! classical list of fundamental discriminants.

use crate::characters::{gcd, is_squarefree, square_split, CharSpec};
use crate::lfuncs::{self, classify_central, CentralClass, Kernel, LConfig, LError};
use crate::mds::{Mds, MdsError, TRIVIAL};
use crate::newforms::Newform;
use crate::par::Exec;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

pub const D0_CONVENTION: &str = "odd squarefree d0 coprime to 2N";

#[derive(Debug, Error)]
pub enum MomentError {
    #[error("X must be at least 4, got {0}")]
    SmallX(f64),
    #[error("central value for d0 = {d0}: {source}")]
    Afe { d0: u64, source: MdsError },
    #[error(transparent)]
    Mds(#[from] MdsError),
    #[error(transparent)]
    L(#[from] LError),
    #[error("coefficient table too short: need {need}, have {have}")]
    Table { need: usize, have: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BumpKind {
    /// `exp(-1/((x-1)(2-x)))`.
    Standard,
    /// `x^3 exp(-1/((x-1)(2-x)))`, skewed towards 2.
    Skewed,
}

/// A bump supported on `[1, 2]`, scaled to peak value 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothWeight {
    pub kind: BumpKind,
    scale: f64,
}

impl Default for SmoothWeight {
    fn default() -> Self {
        SmoothWeight::new(BumpKind::Standard)
    }
}

impl SmoothWeight {
    pub fn new(kind: BumpKind) -> Self {
        let raw = |x: f64| Self::shape(kind, x);
        let peak = match kind {
            BumpKind::Standard => raw(1.5),
            BumpKind::Skewed => {
                // unimodal: golden-section search for the maximum
                let (mut a, mut b) = (1.0, 2.0);
                let g = (5f64.sqrt() - 1.0) / 2.0;
                for _ in 0..100 {
                    let x1 = b - g * (b - a);
                    let x2 = a + g * (b - a);
                    if raw(x1) < raw(x2) {
                        a = x1;
                    } else {
                        b = x2;
                    }
                }
                raw(0.5 * (a + b))
            }
        };
        SmoothWeight { kind, scale: 1.0 / peak }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            BumpKind::Standard => "standard",
            BumpKind::Skewed => "skewed",
        }
    }

    fn shape(kind: BumpKind, x: f64) -> f64 {
        if x <= 1.0 || x >= 2.0 {
            return 0.0;
        }
        let b = (-1.0 / ((x - 1.0) * (2.0 - x))).exp();
        match kind {
            BumpKind::Standard => b,
            BumpKind::Skewed => x * x * x * b,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.scale * Self::shape(self.kind, x)
    }

    /// `int_0^inf W(x) x^{w-1} dx`.
    pub fn mellin(&self, w: Complex64) -> Complex64 {
        let re = adaptive_simpson(&|x| (self.eval(x) * Complex64::new(x, 0.0).powc(w - 1.0)).re, 1.0, 2.0, 1e-13);
        let im = adaptive_simpson(&|x| (self.eval(x) * Complex64::new(x, 0.0).powc(w - 1.0)).im, 1.0, 2.0, 1e-13);
        Complex64::new(re, im)
    }

    pub fn mellin_half(&self) -> f64 {
        self.mellin(Complex64::new(0.5, 0.0)).re
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    // split first so the flat ends cannot fool the error test
    let n = 16;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            rec(f, x0, x1, f0, fm, f1, whole, tol / n as f64, 40)
        })
        .sum()
}

/// Central value of one twist met while summing.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistValue {
    pub d0: u64,
    /// `L^{(2N)}(1/2, pi_f (x) chi_{d0})`.
    pub central: f64,
    pub root_number: i8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub x: f64,
    pub form: String,
    pub weight_fn: String,
    pub moment: f64,
    pub main_term: f64,
    pub deviation: f64,
    pub terms: usize,
    pub twists: Vec<TwistValue>,
}

/// Coefficients needed for the central values of every twist with `d <= 2X`.
pub fn required_table_len(level: u64, x: f64, balance: f64) -> usize {
    let disc = 4.0 * 2.0 * x;
    let cond = level as f64 * disc * disc;
    (lfuncs::DEFAULT_Y_MAX * cond.sqrt() * balance.max(1.0 / balance) / PI).ceil() as usize + 1
}

fn moment_indices(level: u64, x: f64) -> Vec<u64> {
    let lo = x.ceil() as u64;
    let hi = (2.0 * x).floor() as u64;
    (lo..=hi).filter(|&d| gcd(d, 2 * level) == 1).collect()
}

/// `sum_{X <= d <= 2X, (d, 2N) = 1} W(d/X) d^{-1/2} L^{(2N)}(1/2, pi_f (x) chi_{d0}) P_d(1/2)`,
/// `d = d0 d1^2`, by direct summation.
pub fn moment_m(mds: &Mds, x: f64, w: &SmoothWeight, exec: Exec) -> Result<(f64, usize, Vec<TwistValue>), MomentError> {
    if x < 4.0 {
        return Err(MomentError::SmallX(x));
    }
    let need = required_table_len(mds.level(), x, 1.0);
    if need > mds.form().len() {
        return Err(MomentError::Table { need, have: mds.form().len() });
    }
    let ds = moment_indices(mds.level(), x);
    let mut d0s: Vec<u64> = ds.iter().map(|&d| square_split(d).0).collect();
    d0s.sort_unstable();
    d0s.dedup();
    let half = Complex64::new(0.5, 0.0);
    let kernel = Kernel::new(half, mds.form().weight());
    let vals: Vec<TwistValue> = exec
        .map(&d0s, |&d0| {
            let eps = mds.twist_eps(TRIVIAL, d0)?;
            let (v, _) = mds.l_partial_afe(&kernel, TRIVIAL, d0, 1.0)?;
            Ok(TwistValue { d0, central: v.re, root_number: eps })
        })
        .into_iter()
        .zip(&d0s)
        .map(|(r, &d0)| r.map_err(|source| MomentError::Afe { d0, source }))
        .collect::<Result<_, _>>()?;
    let terms: Vec<f64> = exec
        .map(&ds, |&d| -> Result<f64, MdsError> {
            let d0 = square_split(d).0;
            let i = d0s.binary_search(&d0).expect("d0 listed");
            let pd = mds.p_d(d, half, TRIVIAL)?;
            Ok(w.eval(d as f64 / x) / (d as f64).sqrt() * vals[i].central * pd.re)
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
    Ok((crate::par::ordered_sum(0.0, &terms), ds.len(), vals))
}

/// `L^{(2N)}(1, Sym^2)` with the cutoff used by [`main_term`].
pub fn sym2_value(f: &Newform) -> Result<f64, LError> {
    Ok(lfuncs::sym2_l1(f, f.len().min(200_000))?.value)
}

/// `X^{1/2} (1 + [N square] eps) W^(1/2) L^{(2N)}(1, Sym^2) prod_{p | 2N} (1 - 1/p)`.
pub fn main_term(f: &Newform, eps: i8, x: f64, w: &SmoothWeight) -> Result<f64, LError> {
    let sq = if f.is_square_level() { 1.0 + eps as f64 } else { 1.0 };
    let euler: f64 = lfuncs::bad_primes(f).iter().map(|&p| 1.0 - 1.0 / p as f64).product();
    Ok(x.sqrt() * sq * w.mellin_half() * sym2_value(f)? * euler)
}

pub fn moment_report(mds: &Mds, x: f64, w: &SmoothWeight, exec: Exec) -> Result<MomentReport, MomentError> {
    let (m, terms, twists) = moment_m(mds, x, w, exec)?;
    let main = main_term(mds.form(), mds.root_number(), x, w)?;
    Ok(MomentReport {
        x,
        form: mds.form().source().to_string(),
        weight_fn: w.name().to_string(),
        moment: m,
        main_term: main,
        deviation: (m - main).abs() / main.abs(),
        terms,
        twists,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome {
    Found(u64),
    /// Every candidate has root number -1 for a square level.
    RootNumberObstruction,
    NoneFound,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistSearch {
    pub outcome: SearchOutcome,
    pub d_max: u64,
    pub convention: &'static str,
    /// Candidates passed over before the answer, with their values and signs.
    pub skipped: Vec<TwistValue>,
    pub indeterminate: Vec<TwistValue>,
}

/// Odd squarefree `d0 <= d_max` coprime to the level, ascending.
pub fn twist_candidates(level: u64, d_max: u64) -> Vec<u64> {
    (1..=d_max).step_by(2).filter(|&d| gcd(d, level) == 1 && is_squarefree(d)).collect()
}

/// Smallest candidate `d0` with `|L(1/2, pi_f (x) chi_{d0})|` above the
/// nonvanishing threshold.
pub fn least_twist(f: &Newform, d_max: u64) -> Result<TwistSearch, LError> {
    let cfg = LConfig::default();
    let half = Complex64::new(0.5, 0.0);
    let mut skipped = Vec::new();
    let mut indeterminate = Vec::new();
    let cands = twist_candidates(f.level(), d_max);
    let mut all_forced = !cands.is_empty();
    for d0 in cands {
        let spec = CharSpec::quadratic(d0 as i64)?;
        let eps = lfuncs::twist_root_number(f, &spec)?;
        if eps == -1 {
            // sign-forced zero; the value is still computed and recorded
            let l = lfuncs::L_twisted(half, f, &spec, &cfg)?;
            skipped.push(TwistValue { d0, central: l.value.re, root_number: eps });
            continue;
        }
        all_forced = false;
        let l = lfuncs::L_twisted(half, f, &spec, &cfg)?;
        let tv = TwistValue { d0, central: l.value.re, root_number: eps };
        match classify_central(l.value.re, eps) {
            CentralClass::Nonzero => {
                return Ok(TwistSearch { outcome: SearchOutcome::Found(d0), d_max, convention: D0_CONVENTION, skipped, indeterminate })
            }
            _ => {
                indeterminate.push(tv.clone());
                skipped.push(tv);
            }
        }
    }
    let outcome = if all_forced && f.is_square_level() {
        SearchOutcome::RootNumberObstruction
    } else if !indeterminate.is_empty() {
        SearchOutcome::Inconclusive
    } else {
        SearchOutcome::NoneFound
    };
    Ok(TwistSearch { outcome, d_max, convention: D0_CONVENTION, skipped, indeterminate })
}
