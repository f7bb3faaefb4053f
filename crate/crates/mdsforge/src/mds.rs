//! The double Dirichlet series `Z(s, w; chi_{a2c2}, chi_{a1c1})` attached to a
//! newform: coefficients `H`, correction factors `P_d` and `Q~_n`, three
//! summation orders, and the scattering matrices `Phi` and `Psi`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::characters::{
    chi_eval, conductor, dirichlet_l_partial, factor, from_kernel, gcd, jacobi, primes_up_to, CharError, CharSpec,
};
use crate::exact::{Poly, U};
use crate::lfuncs::{self, local_factor_inv, remove_bad_factors, Kernel, LError, Twist};
use crate::newforms::{satake_roots, spf_sieve, twisted_conductor, Newform, NewformError};
use crate::par::{blocks, ordered_sum};
use crate::special::gamma;
use crate::weyl_cg::{CgError, CgFunction, CorrectionPolyTable};
use crate::Exec;

#[derive(Debug, Error)]
pub enum MdsError {
    #[error("region guard: {rep} needs {need}, got (s, w) = ({s}, {w})")]
    Region { rep: Rep, need: &'static str, s: Complex64, w: Complex64 },
    #[error("polar hyperplane w=1")]
    PolarHyperplane,
    #[error("entry pole at {0}")]
    EntryPole(Complex64),
    #[error("argument {0} not coprime to 2N")]
    NotCoprime(u64),
    #[error("({0}, {1}) not in Div(N)")]
    NotInDiv(i8, u64),
    #[error("cutoff too large: {0}")]
    Cutoff(String),
    #[error(transparent)]
    Cg(#[from] CgError),
    #[error(transparent)]
    L(#[from] LError),
    #[error(transparent)]
    Char(#[from] CharError),
    #[error(transparent)]
    Newform(#[from] NewformError),
}

/// An element `a c` of `Div(N)`.
pub type DivIndex = (i8, u64);

pub const TRIVIAL: DivIndex = (1, 1);

/// Real parts at or above this use truncated Euler products for inner L-values.
pub const EULER_MIN_RE: f64 = 2.5;

/// Balance ratio between the two sides of the `gamma_1` check.
pub const REFLECTED_BALANCE: f64 = 1.6;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn chi_k(k: i64, n: i64) -> i8 {
    match from_kernel(k) {
        Ok(sp) => chi_eval(&sp, n),
        Err(_) => 0,
    }
}

fn chi_ac(ac: DivIndex, n: i64) -> i8 {
    chi_k(ac.0 as i64 * ac.1 as i64, n)
}

/// `chi_{-1}(n)` for odd `n`.
fn chi_m1(n: u64) -> i64 {
    if n % 4 == 1 {
        1
    } else {
        -1
    }
}

/// `gcd(conductor, 8)` of the character with kernel `k`.
fn ctilde(k: i64) -> f64 {
    from_kernel(k).map(|sp| conductor(&sp).1 as f64).unwrap_or(1.0)
}

fn ord(mut n: u64, p: u64) -> u32 {
    let mut e = 0;
    while n % p == 0 {
        n /= p;
        e += 1;
    }
    e
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rep {
    Raw,
    Rep1,
    Rep2,
}

impl fmt::Display for Rep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rep::Raw => "raw",
            Rep::Rep1 => "rep1",
            Rep::Rep2 => "rep2",
        })
    }
}

impl FromStr for Rep {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "raw" => Ok(Rep::Raw),
            "rep1" => Ok(Rep::Rep1),
            "rep2" => Ok(Rep::Rep2),
            _ => Err(format!("unknown representation {s}")),
        }
    }
}

/// Polynomial in `z1, z2, z3, u` with float coefficients.
#[derive(Clone, Debug, Default)]
pub struct NumPoly {
    terms: Vec<([i32; 4], f64)>,
}

impl NumPoly {
    pub fn from_poly(p: &Poly) -> Self {
        NumPoly { terms: p.terms().map(|(m, q)| (*m, q.to_f64().unwrap_or(f64::NAN))).collect() }
    }

    pub fn eval(&self, z: [Complex64; 3], u: f64) -> Complex64 {
        let mut acc = c(0.0);
        for (m, q) in &self.terms {
            let mut t = c(q * u.powi(m[U]));
            for (i, zi) in z.iter().enumerate() {
                if m[i] != 0 {
                    t *= zi.powi(m[i]);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Taylor coefficients `a(k1, k2, j; q)` as float polynomials in `u`.
#[derive(Clone, Debug)]
struct LocalCoeffs {
    degree: u32,
    cells: Vec<Vec<(i32, f64)>>,
}

impl LocalCoeffs {
    fn new(cg: &CgFunction) -> Self {
        let degree = cg.degree();
        let n = (degree + 1) as usize;
        let mut cells = vec![Vec::new(); n * n * n];
        for (idx, up) in cg.series().nonzero() {
            let [k1, k2, j] = *idx;
            if k1 + k2 + j <= degree {
                cells[((k1 as usize) * n + k2 as usize) * n + j as usize] =
                    up.terms().map(|(e, q)| (*e as i32, q.to_f64().unwrap_or(f64::NAN))).collect();
            }
        }
        LocalCoeffs { degree, cells }
    }

    fn eval(&self, k1: u32, k2: u32, j: u32, u: f64) -> Result<f64, CgError> {
        if k1 + k2 + j > self.degree {
            return Err(CgError::ExpandFurther(k1, k2, j, self.degree));
        }
        let n = (self.degree + 1) as usize;
        Ok(self.cells[((k1 as usize) * n + k2 as usize) * n + j as usize]
            .iter()
            .map(|&(e, q)| q * u.powi(e))
            .sum())
    }
}

/// Truncation settings shared by the three representations.
#[derive(Clone, Debug, PartialEq)]
pub struct ZConfig {
    /// Raw sum region `m^{sigma/r} d^{omega/r} <= raw_cutoff`, `r = min(sigma, omega)`.
    pub raw_cutoff: f64,
    pub d_max: u64,
    pub n_max: u64,
    /// Largest prime in truncated Euler products.
    pub euler_pmax: u64,
    pub tol: f64,
    /// Balance of the approximate functional equation for inner twisted L-values.
    pub afe_balance: f64,
    pub exec: Exec,
}

impl Default for ZConfig {
    fn default() -> Self {
        ZConfig { raw_cutoff: 1e5, d_max: 10_000, n_max: 10_000, euler_pmax: 10_000, tol: 1e-6, afe_balance: 1.0, exec: Exec::default() }
    }
}

/// One evaluation of `Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct ZEval {
    pub s: Complex64,
    pub w: Complex64,
    pub a2c2: DivIndex,
    pub a1c1: DivIndex,
    pub rep: Rep,
    /// Cutoff actually used: hyperbolic bound for raw, `d_max` or `n_max` otherwise.
    pub cutoff: f64,
    pub terms: usize,
    pub value: Complex64,
    /// Tail plus inner-precision estimate.
    pub error: f64,
    pub flagged: bool,
}

/// Context for one form: expanded local data and caches.
pub struct Mds {
    form: Newform,
    eps: i8,
    div: Vec<DivIndex>,
    local: LocalCoeffs,
    p: Vec<NumPoly>,
    q: BTreeMap<(u32, u32), NumPoly>,
    base_eps: Mutex<HashMap<u64, i8>>,
}

impl fmt::Debug for Mds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mds").field("form", &self.form.source()).field("level", &self.form.level()).finish()
    }
}

impl Mds {
    pub fn new(form: Newform) -> Result<Self, MdsError> {
        Self::with_tables(form, &CgFunction::default(), &CorrectionPolyTable::default())
    }

    pub fn with_tables(mut form: Newform, cg: &CgFunction, table: &CorrectionPolyTable) -> Result<Self, MdsError> {
        let div = crate::characters::div_set(form.level())?;
        let eps = match form.root_number() {
            Some(e) => e,
            None => lfuncs::attach_root_number(&mut form)?,
        };
        Ok(Mds {
            eps,
            div,
            local: LocalCoeffs::new(cg),
            p: table.p.iter().map(NumPoly::from_poly).collect(),
            q: table.q.iter().map(|(k, v)| (*k, NumPoly::from_poly(v))).collect(),
            base_eps: Mutex::new(HashMap::new()),
            form,
        })
    }

    pub fn form(&self) -> &Newform {
        &self.form
    }

    pub fn level(&self) -> u64 {
        self.form.level()
    }

    pub fn root_number(&self) -> i8 {
        self.eps
    }

    /// `Div(N)` in the fixed order.
    pub fn div(&self) -> &[DivIndex] {
        &self.div
    }

    fn check_div(&self, ac: DivIndex) -> Result<(), MdsError> {
        if self.div.contains(&ac) {
            Ok(())
        } else {
            Err(MdsError::NotInDiv(ac.0, ac.1))
        }
    }

    fn check_coprime(&self, n: u64) -> Result<(), MdsError> {
        if n == 0 || gcd(n, 2 * self.level()) != 1 {
            Err(MdsError::NotCoprime(n))
        } else {
            Ok(())
        }
    }

    fn alpha_beta(&self, p: u64) -> Result<(Complex64, Complex64), MdsError> {
        self.form.require(p as usize)?;
        Ok(satake_roots(self.form.lambda(p as usize)))
    }

    /// `a(k1, k2, j; p)`.
    pub fn local_coefficient(&self, k1: u32, k2: u32, j: u32, p: u64) -> Result<f64, MdsError> {
        Ok(self.local.eval(k1, k2, j, (p as f64).sqrt())?)
    }

    /// `sum_{k1+k2=k} a(k1, k2, j; p) alpha^k1 beta^k2`.
    fn local_sum(&self, p: u64, k: u32, j: u32, ab: (Complex64, Complex64)) -> Result<Complex64, MdsError> {
        if k == 0 {
            return Ok(c(self.local_coefficient(0, 0, j, p)?));
        }
        let u = (p as f64).sqrt();
        let mut acc = c(0.0);
        for k1 in 0..=k {
            let a = self.local.eval(k1, k - k1, j, u)?;
            if a != 0.0 {
                acc += a * ab.0.powu(k1) * ab.1.powu(k - k1);
            }
        }
        Ok(acc)
    }

    /// `H(m1, m2, d)`.
    pub fn h(&self, m1: u64, m2: u64, d: u64) -> Result<Complex64, MdsError> {
        for n in [m1, m2, d] {
            self.check_coprime(n)?;
        }
        let mut primes: Vec<u64> = factor(m1 * m2 * d).iter().map(|&(p, _)| p).collect();
        primes.sort_unstable();
        let mut v = c(1.0);
        for p in primes {
            let (k1, k2, j) = (ord(m1, p), ord(m2, p), ord(d, p));
            let (a, b) = self.alpha_beta(p)?;
            v *= self.local_coefficient(k1, k2, j, p)? * a.powu(k1) * b.powu(k2);
            if (k1 + k2) % 2 == 1 {
                v *= jacobi((d / p.pow(j)) as i64, p as i64) as f64;
            }
        }
        Ok(v)
    }

    /// `H~(m, d) = sum_{m1 m2 = m} H(m1, m2, d)`.
    pub fn h_tilde(&self, m: u64, d: u64) -> Result<Complex64, MdsError> {
        self.check_coprime(m)?;
        self.check_coprime(d)?;
        let mut v = c(1.0);
        for (p, k) in factor(m * d).iter().map(|&(p, _)| (p, ord(m, p))) {
            let j = ord(d, p);
            let ab = self.alpha_beta(p)?;
            v *= self.local_sum(p, k, j, ab)?;
            if k % 2 == 1 {
                v *= jacobi((d / p.pow(j)) as i64, p as i64) as f64;
            }
        }
        Ok(v)
    }

    fn p_poly(&self, j: u32) -> Result<&NumPoly, MdsError> {
        self.p.get(j as usize).ok_or_else(|| CgError::OutOfRange(format!("P_{j}")).into())
    }

    fn q_poly(&self, k1: u32, k2: u32) -> Result<&NumPoly, MdsError> {
        self.q.get(&(k1, k2)).ok_or_else(|| CgError::OutOfRange(format!("Q_({k1},{k2})")).into())
    }

    /// `P_d(s, chi_{a1c1})`.
    pub fn p_d(&self, d: u64, s: Complex64, a1c1: DivIndex) -> Result<Complex64, MdsError> {
        self.check_coprime(d)?;
        let mut v = c(1.0);
        for (p, j) in factor(d) {
            if j < 2 {
                continue;
            }
            let (a, b) = self.alpha_beta(p)?;
            let x = c(p as f64).powc(-s);
            let tw = if j % 2 == 0 {
                (chi_ac(a1c1, p as i64) * jacobi((d / p.pow(j)) as i64, p as i64)) as f64
            } else {
                1.0
            };
            v *= self.p_poly(j)?.eval([tw * a * x, tw * b * x, c(0.0)], (p as f64).sqrt());
        }
        Ok(v)
    }

    /// Per-prime factor of `Q~_n`: `sum_{k1+k2=k} alpha^k1 beta^k2 Q_k(x; p)`.
    fn q_local(&self, p: u64, k: u32, x: Complex64) -> Result<Complex64, MdsError> {
        let (a, b) = self.alpha_beta(p)?;
        let u = (p as f64).sqrt();
        let mut acc = c(0.0);
        for k1 in 0..=k {
            acc += a.powu(k1) * b.powu(k - k1) * self.q_poly(k1, k - k1)?.eval([c(0.0), c(0.0), x], u);
        }
        Ok(acc)
    }

    /// `Q~_n(w, chi_{a2c2})`: the product over `p^k || n` with `k >= 2`.
    pub fn q_tilde(&self, n: u64, w: Complex64, a2c2: DivIndex) -> Result<Complex64, MdsError> {
        self.check_coprime(n)?;
        let mut v = c(1.0);
        for (p, k) in factor(n) {
            if k >= 2 {
                v *= self.q_local(p, k, self.q_arg(n, p, k, w, a2c2))?;
            }
        }
        Ok(v)
    }

    fn q_arg(&self, n: u64, p: u64, k: u32, w: Complex64, a2c2: DivIndex) -> Complex64 {
        let x = c(p as f64).powc(-w);
        if k % 2 == 0 {
            // Twisted multiplicativity glues p^j to the odd part through
            // (p / n p^{-k}), the reciprocal of the symbol in the P_d twist.
            x * (chi_ac(a2c2, p as i64) * jacobi(p as i64, (n / p.pow(k)) as i64)) as f64
        } else {
            x
        }
    }

    /// Full coefficient of `n^{-s}` in the second representation: `Q~_n`
    /// together with the factors `sum alpha^k1 beta^k2 Q_k(p^{-w})` at primes
    /// dividing `n` exactly once.
    pub fn q_weight(&self, n: u64, w: Complex64, a2c2: DivIndex) -> Result<Complex64, MdsError> {
        self.check_coprime(n)?;
        let mut v = c(1.0);
        for (p, k) in factor(n) {
            v *= self.q_local(p, k, self.q_arg(n, p, k, w, a2c2))?;
        }
        Ok(v)
    }

    /// Raw double sum over `(m, d)` in a hyperbolic region, with a tail
    /// estimate from the two outermost shells of absolute values.
    pub fn z_raw(&self, s: Complex64, w: Complex64, a2c2: DivIndex, a1c1: DivIndex, cfg: &ZConfig) -> Result<ZEval, MdsError> {
        if s.re < 2.0 || w.re < 2.0 {
            return Err(MdsError::Region { rep: Rep::Raw, need: "Re s, Re w >= 2", s, w });
        }
        self.check_div(a2c2)?;
        self.check_div(a1c1)?;
        let r = s.re.min(w.re);
        let es = s.re / r;
        let ew = w.re / r;
        let t = cfg.raw_cutoff;
        let lt = t.ln();
        let mmax = t.powf(1.0 / es).floor() as u64;
        let dmax = t.powf(1.0 / ew).floor() as u64;
        let top = mmax.max(dmax);
        if top as usize > self.form.len() {
            return Err(MdsError::Cutoff(format!("needs lambda up to {top}, table has {}", self.form.len())));
        }
        let spf = spf_sieve(top as usize);
        let bad = 2 * self.level();
        let chi2: Vec<i8> = (0..=dmax).map(|d| chi_ac(a2c2, d as i64)).collect();
        let chi1: Vec<i8> = (0..=mmax).map(|m| chi_ac(a1c1, m as i64)).collect();
        let fac = |mut n: u64| {
            let mut out: Vec<(u64, u32)> = Vec::new();
            while n > 1 {
                let p = spf[n as usize] as u64;
                let mut e = 0;
                while n % p == 0 {
                    n /= p;
                    e += 1;
                }
                out.push((p, e));
            }
            out
        };
        let shell = 2f64.ln();
        let ds: Vec<u64> = (1..=dmax).filter(|&d| gcd(d, bad) == 1).collect();
        let parts = cfg.exec.map(&blocks(ds.len(), 64), |&(lo, hi)| -> Result<(Complex64, f64, f64, usize), MdsError> {
            let mut sum = c(0.0);
            let (mut a1, mut a2, mut n) = (0.0, 0.0, 0usize);
            for &d in &ds[lo..hi] {
                let ld = (d as f64).ln();
                let room = lt - ew * ld;
                if room < 0.0 {
                    break;
                }
                let mlim = ((room / es).exp() * (1.0 + 1e-12)).floor() as u64;
                let fd = fac(d);
                let wd = (-w * ld).exp() * chi2[d as usize] as f64;
                for m in 1..=mlim.min(mmax) {
                    if gcd(m, bad) != 1 || chi1[m as usize] == 0 {
                        continue;
                    }
                    let lm = (m as f64).ln();
                    let mut hv = c(1.0);
                    for (p, k) in fac(m) {
                        let j = fd.iter().find(|q| q.0 == p).map(|q| q.1).unwrap_or(0);
                        let ab = satake_roots(self.form.lambda(p as usize));
                        hv *= self.local_sum(p, k, j, ab)?;
                        if k % 2 == 1 {
                            hv *= jacobi((d / p.pow(j)) as i64, p as i64) as f64;
                        }
                    }
                    for &(p, j) in &fd {
                        if m % p != 0 {
                            hv *= self.local_coefficient(0, 0, j, p)?;
                        }
                    }
                    let term = hv * chi1[m as usize] as f64 * (-s * lm).exp() * wd;
                    sum += term;
                    n += 1;
                    let h = es * lm + ew * ld;
                    if h > lt - shell {
                        a1 += term.norm();
                    } else if h > lt - 2.0 * shell {
                        a2 += term.norm();
                    }
                }
            }
            Ok((sum, a1, a2, n))
        });
        let mut sums = Vec::with_capacity(parts.len());
        let (mut a1, mut a2, mut n) = (0.0, 0.0, 0);
        for p in parts {
            let (v, x, y, k) = p?;
            sums.push(v);
            a1 += x;
            a2 += y;
            n += k;
        }
        let value = ordered_sum(c(0.0), &sums);
        let rho = if a2 > 0.0 { (a1 / a2).min(0.95) } else { 0.5 };
        let error = a1 * rho / (1.0 - rho) + 1e-15 * n as f64;
        Ok(ZEval {
            s,
            w,
            a2c2,
            a1c1,
            rep: Rep::Raw,
            cutoff: t,
            terms: n,
            value,
            error,
            flagged: error > cfg.tol,
        })
    }

    fn cached_base_eps(&self, c1: u64) -> Result<i8, MdsError> {
        if c1 == 1 {
            return Ok(self.eps);
        }
        if let Some(&e) = self.base_eps.lock().expect("cache lock").get(&c1) {
            return Ok(e);
        }
        let base = CharSpec::quadratic(chi_m1(c1) * c1 as i64)?;
        let e = lfuncs::root_number(&self.form, &base)?;
        self.base_eps.lock().expect("cache lock").insert(c1, e);
        Ok(e)
    }

    /// `eps(pi_f (x) chi_{c1*})` with `c1* = chi_{-1}(c1) c1`.
    pub fn eps_c1(&self, c1: u64) -> Result<i8, MdsError> {
        self.cached_base_eps(c1)
    }

    /// Conductor of `pi_f (x) chi_{c1*}`.
    pub fn cond_c1(&self, c1: u64) -> Result<u64, MdsError> {
        let base = CharSpec::quadratic(chi_m1(c1) * c1 as i64)?;
        Ok(twisted_conductor(&self.form, &base))
    }

    /// Root number of `pi_f (x) chi_{a1 c1 d0}` for `d0` coprime to `2N`.
    pub fn twist_eps(&self, a1c1: DivIndex, d0: u64) -> Result<i8, MdsError> {
        let (a1, c1) = a1c1;
        let e1 = self.cached_base_eps(c1)?;
        let cond = self.cond_c1(c1)? as i64;
        Ok(e1 * chi_k(chi_m1(c1) * a1 as i64 * d0 as i64, -cond))
    }

    /// `L^{(2N)}(s, pi_f (x) chi_{a1 c1 d0})` by the approximate functional
    /// equation, sharing `kernel` across twists. Returns value and error.
    pub fn l_partial_afe(&self, kernel: &Kernel, a1c1: DivIndex, d0: u64, balance: f64) -> Result<(Complex64, f64), MdsError> {
        let spec = CharSpec::new(d0 as i64, a1c1.0, a1c1.1)?;
        let eps = self.twist_eps(a1c1, d0)?;
        let tw = Twist::new(&self.form, &spec, balance)?;
        let p = tw.parts(kernel, balance)?;
        let v = p.a + eps as f64 * p.b;
        Ok((remove_bad_factors(&self.form, &spec, kernel.s, v), p.magnitude * 1e-14))
    }

    fn euler_table(&self, s: Complex64, pmax: u64) -> Result<Vec<(u64, Complex64, Complex64)>, MdsError> {
        self.form.require(pmax as usize)?;
        let bad = 2 * self.level();
        Ok(primes_up_to(pmax)
            .into_iter()
            .filter(|&p| bad % p != 0)
            .map(|p| {
                let x = c(p as f64).powc(-s);
                let lam = self.form.lambda(p as usize);
                (p, 1.0 / (1.0 - lam * x + x * x), 1.0 / (1.0 + lam * x + x * x))
            })
            .collect())
    }

    fn euler_tail(pmax: u64, sigma: f64) -> f64 {
        let pm = pmax as f64;
        3.0 * pm.powf(1.0 - sigma) / ((sigma - 1.0) * pm.ln())
    }

    /// Inner values `L^{(2N)}(s, pi_f (x) chi_{a1c1d0}) P_d(s)` for each `d`,
    /// with their error estimates.
    fn rep1_terms(&self, s: Complex64, a1c1: DivIndex, ds: &[u64], cfg: &ZConfig) -> Result<Vec<(Complex64, f64)>, MdsError> {
        let spec0 = CharSpec::from_ac(a1c1.0, a1c1.1)?;
        let d0s: Vec<u64> = ds.iter().map(|&d| crate::characters::square_split(d).0).collect();
        let mut uniq = d0s.clone();
        uniq.sort_unstable();
        uniq.dedup();
        let lvals: Vec<(Complex64, f64)> = if s.re >= EULER_MIN_RE {
            let tab = self.euler_table(s, cfg.euler_pmax)?;
            let tail = Self::euler_tail(cfg.euler_pmax, s.re);
            cfg.exec.map(&uniq, |&d0| {
                let k = spec0.kernel() * d0 as i64;
                let disc = from_kernel(k).map(|sp| sp.discriminant()).unwrap_or(1);
                let mut v = c(1.0);
                for &(p, plus, minus) in &tab {
                    match crate::characters::kronecker(disc, p as i64) {
                        1 => v *= plus,
                        -1 => v *= minus,
                        _ => {}
                    }
                }
                (v, v.norm() * tail)
            })
        } else {
            let kernel = Kernel::new(s, self.form.weight());
            self.cached_base_eps(a1c1.1)?;
            cfg.exec
                .map(&uniq, |&d0| self.l_partial_afe(&kernel, a1c1, d0, cfg.afe_balance))
                .into_iter()
                .collect::<Result<_, _>>()?
        };
        let lookup: HashMap<u64, (Complex64, f64)> = uniq.iter().copied().zip(lvals).collect();
        ds.iter()
            .zip(&d0s)
            .map(|(&d, d0)| {
                let (l, e) = lookup[d0];
                let pd = self.p_d(d, s, a1c1)?;
                Ok((l * pd, e * pd.norm()))
            })
            .collect()
    }

    fn coprime_range(&self, max: u64) -> Vec<u64> {
        let bad = 2 * self.level();
        (1..=max).filter(|&d| gcd(d, bad) == 1).collect()
    }

    /// Tail of `sum_{d > D} |t_d|` from the last dyadic shell, assuming
    /// `|t_d| ~ d^{-kappa}`.
    fn shell_tail(terms: &[(u64, f64)], dmax: u64, kappa: f64) -> f64 {
        let shell: f64 = terms.iter().filter(|(d, _)| 2 * d > dmax).map(|(_, a)| a).sum();
        let kappa = kappa.max(1.05);
        shell / (2f64.powf(kappa - 1.0) - 1.0)
    }

    /// `Z` by the first representation, for every `a2c2` in `Div(N)` at once.
    pub fn z_rep1_vector(&self, s: Complex64, w: Complex64, a1c1: DivIndex, cfg: &ZConfig) -> Result<Vec<ZEval>, MdsError> {
        if 2.0 * s.re + w.re <= 2.0 || w.re <= 1.0 {
            return Err(MdsError::Region { rep: Rep::Rep1, need: "2 Re s + Re w > 2 and Re w > 1", s, w });
        }
        self.check_div(a1c1)?;
        let ds = self.coprime_range(cfg.d_max);
        let inner = self.rep1_terms(s, a1c1, &ds, cfg)?;
        let kappa = w.re - (1.0 - s.re).clamp(0.0, 1.0);
        let mut out = Vec::with_capacity(self.div.len());
        for &a2c2 in &self.div {
            let terms: Vec<Complex64> = ds
                .iter()
                .zip(&inner)
                .map(|(&d, (v, _))| *v * chi_ac(a2c2, d as i64) as f64 * (-w * (d as f64).ln()).exp())
                .collect();
            let value = sum_blocks(&terms);
            let abs: Vec<(u64, f64)> = ds.iter().zip(&terms).map(|(&d, t)| (d, t.norm())).collect();
            let prec: f64 = ds.iter().zip(&inner).map(|(&d, (_, e))| e * (d as f64).powf(-w.re)).sum();
            let error = Self::shell_tail(&abs, cfg.d_max, kappa) + prec;
            out.push(ZEval {
                s,
                w,
                a2c2,
                a1c1,
                rep: Rep::Rep1,
                cutoff: cfg.d_max as f64,
                terms: ds.len(),
                value,
                error,
                flagged: error > cfg.tol,
            });
        }
        Ok(out)
    }

    pub fn z_rep1(&self, s: Complex64, w: Complex64, a2c2: DivIndex, a1c1: DivIndex, cfg: &ZConfig) -> Result<ZEval, MdsError> {
        self.check_div(a2c2)?;
        let v = self.z_rep1_vector(s, w, a1c1, cfg)?;
        Ok(v.into_iter().find(|z| z.a2c2 == a2c2).expect("a2c2 in Div(N)"))
    }

    /// `L^{(2N)}(w, chi_{a2c2} tilde-chi_{n0})` with error.
    fn rep2_lvalue(
        &self,
        w: Complex64,
        a2c2: DivIndex,
        n0: u64,
        euler: Option<&(Vec<u64>, f64)>,
    ) -> Result<(Complex64, f64), MdsError> {
        let spec = CharSpec::tilde(n0)?.mul(&CharSpec::from_ac(a2c2.0, a2c2.1)?)?;
        if spec.is_principal() && (w - 1.0).norm() < 1e-300 {
            return Err(MdsError::PolarHyperplane);
        }
        let bad = 2 * self.level();
        match euler {
            Some((primes, tail)) => {
                let (v, _) = crate::characters::dirichlet_l_euler(w, &spec, bad, primes);
                Ok((v, v.norm() * tail))
            }
            None => {
                let v = dirichlet_l_partial(w, &spec, bad)?;
                Ok((v, v.norm() * 1e-13))
            }
        }
    }

    /// `Z` by the second representation.
    pub fn z_rep2(&self, s: Complex64, w: Complex64, a2c2: DivIndex, a1c1: DivIndex, cfg: &ZConfig) -> Result<ZEval, MdsError> {
        if s.re + w.re <= 1.5 || s.re <= 1.0 {
            return Err(MdsError::Region { rep: Rep::Rep2, need: "Re s + Re w > 3/2 and Re s > 1", s, w });
        }
        self.check_div(a2c2)?;
        self.check_div(a1c1)?;
        if a2c2 == TRIVIAL && (w - 1.0).norm() == 0.0 {
            return Err(MdsError::PolarHyperplane);
        }
        let ns = self.coprime_range(cfg.n_max);
        let euler = if w.re >= EULER_MIN_RE {
            let primes = primes_up_to(cfg.euler_pmax);
            Some((primes, Self::euler_tail(cfg.euler_pmax, w.re)))
        } else {
            None
        };
        let mut uniq: Vec<u64> = ns.iter().map(|&n| crate::characters::square_split(n).0).collect();
        uniq.sort_unstable();
        uniq.dedup();
        let lvals: Vec<(Complex64, f64)> = cfg
            .exec
            .map(&uniq, |&n0| self.rep2_lvalue(w, a2c2, n0, euler.as_ref()))
            .into_iter()
            .collect::<Result<_, _>>()?;
        let lookup: HashMap<u64, (Complex64, f64)> = uniq.iter().copied().zip(lvals).collect();
        let rows: Vec<(Complex64, f64)> = cfg
            .exec
            .map(&ns, |&n| -> Result<(Complex64, f64), MdsError> {
                let (l, e) = lookup[&crate::characters::square_split(n).0];
                let qv = self.q_weight(n, w, a2c2)?;
                let ch = chi_ac(a1c1, n as i64) as f64;
                let ns = (-s * (n as f64).ln()).exp();
                Ok((l * qv * ch * ns, e * qv.norm() * ns.norm()))
            })
            .into_iter()
            .collect::<Result<_, _>>()?;
        let terms: Vec<Complex64> = rows.iter().map(|r| r.0).collect();
        let value = sum_blocks(&terms);
        let abs: Vec<(u64, f64)> = ns.iter().zip(&terms).map(|(&n, t)| (n, t.norm())).collect();
        let prec: f64 = rows.iter().map(|r| r.1).sum();
        let kappa = s.re - (1.0 - w.re).clamp(0.0, 1.0) / 2.0;
        let error = Self::shell_tail(&abs, cfg.n_max, kappa) + prec;
        Ok(ZEval {
            s,
            w,
            a2c2,
            a1c1,
            rep: Rep::Rep2,
            cutoff: cfg.n_max as f64,
            terms: ns.len(),
            value,
            error,
            flagged: error > cfg.tol,
        })
    }

    pub fn z(&self, rep: Rep, s: Complex64, w: Complex64, a2c2: DivIndex, a1c1: DivIndex, cfg: &ZConfig) -> Result<ZEval, MdsError> {
        match rep {
            Rep::Raw => self.z_raw(s, w, a2c2, a1c1, cfg),
            Rep::Rep1 => self.z_rep1(s, w, a2c2, a1c1, cfg),
            Rep::Rep2 => self.z_rep2(s, w, a2c2, a1c1, cfg),
        }
    }

    /// `N(pi_f)_{c1 c2 c2'}`: product of `p | N` with `ord_p(c2 c2' cond(pi_f (x) chi_{c1*}))` odd.
    pub fn special_product(&self, c1: u64, c2: u64, c2p: u64) -> Result<u64, MdsError> {
        let cond = self.cond_c1(c1)?;
        Ok(factor(self.level())
            .iter()
            .map(|&(p, _)| p)
            .filter(|&p| (ord(c2, p) + ord(c2p, p) + ord(cond, p)) % 2 == 1)
            .product())
    }

    /// `Gamma` factor of the twisted L-functions: `gamma(1-s)/gamma(s)`.
    fn gamma_ratio(&self, s: Complex64) -> Complex64 {
        (Kernel::ln_gamma_factor(self.form.weight(), 1.0 - s) - Kernel::ln_gamma_factor(self.form.weight(), s)).exp()
    }

    /// `L(1-s, pi_{f,2} (x) chi_k) / L(s, pi_{f,2} (x) chi_k)`.
    fn dyadic_ratio(&self, k: i64, s: Complex64) -> Complex64 {
        let ch = chi_k(k, 2) as f64;
        if ch == 0.0 {
            return c(1.0);
        }
        let lam = self.form.lambda(2);
        let inv = |z: Complex64| {
            let x = c(2.0).powc(-z);
            1.0 - lam * ch * x + ch * ch * x * x
        };
        inv(s) / inv(1.0 - s)
    }

    /// Closed-form entry `Phi_{a1c1}(s)_{a2c2, a2'c2'}`.
    pub fn phi_entry(&self, s: Complex64, a1c1: DivIndex, a2c2: DivIndex, a2c2p: DivIndex, opts: PhiOptions) -> Result<Complex64, MdsError> {
        for ac in [a1c1, a2c2, a2c2p] {
            self.check_div(ac)?;
        }
        let (a1, c1) = a1c1;
        let n0 = self.form.n0();
        let cond = self.cond_c1(c1)?;
        let nn = self.special_product(c1, a2c2.1, a2c2p.1)?;
        let n0r = n0 / gcd(c1, n0);
        if n0r % nn != 0 {
            return Ok(c(0.0));
        }
        let eps1 = self.eps_c1(c1)? as f64;
        let sgn1 = chi_m1(c1);
        let head = eps1
            * chi_k(sgn1 * a1 as i64, -(cond as i64)) as f64
            * c(cond as f64).powc(0.5 - s)
            * c(PI).powc(2.0 * s - 1.0)
            * self.gamma_ratio(s)
            * chi_ac(a1c1, nn as i64) as f64;
        let k1 = a1 as i64 * c1 as i64;
        let a22 = a2c2.0 as i64 * a2c2p.0 as i64;
        let first = c(ctilde(sgn1 * a1 as i64)).powc(1.0 - 2.0 * s)
            * (self.dyadic_ratio(k1, s) + chi_k(a22, 5) as f64 * self.dyadic_ratio(5 * k1, s));
        let second = c(ctilde(sgn1 * a1 as i64 * 3)).powc(1.0 - 2.0 * s)
            * chi_k(chi_m1(cond * nn), 3) as f64
            * (chi_k(a22, 3) as f64 * self.dyadic_ratio(3 * k1, s) + chi_k(a22, 7) as f64 * self.dyadic_ratio(7 * k1, s));
        let mut prod = c(1.0);
        for (p, _) in factor(nn) {
            let pf = p as f64;
            let alpha = self.form.lambda(p as usize);
            prod *= alpha * (c(pf).powc(-(1.0 - s)) - c(pf).powc(-s)) / (1.0 - c(pf).powc(-3.0 + 2.0 * s));
        }
        for (p, _) in factor(n0r / nn) {
            let pf = p as f64;
            prod *= (1.0 - pf.powi(-2)) / (1.0 - c(pf).powc(-3.0 + 2.0 * s));
        }
        if opts.zero_n0_product && n0r > 1 {
            prod = c(0.0);
        }
        Ok(0.25 * head * (first + second) * prod)
    }

    /// Full matrix `Phi_{a1c1}(s)` in `Div(N)` order.
    pub fn phi_matrix(&self, s: Complex64, a1c1: DivIndex, opts: PhiOptions) -> Result<Vec<Vec<Complex64>>, MdsError> {
        self.div
            .iter()
            .map(|&r| self.div.iter().map(|&col| self.phi_entry(s, a1c1, r, col, opts)).collect())
            .collect()
    }

    /// Class representatives of `(Z/8 rad N)^x` modulo squares: small odd
    /// squarefree `D` coprime to `N`, one per sign pattern.
    pub fn class_representatives(&self) -> Vec<u64> {
        let primes: Vec<u64> = factor(self.level()).iter().map(|&(p, _)| p).collect();
        let want = 4usize << primes.len();
        let mut seen: HashMap<Vec<i8>, u64> = HashMap::new();
        let mut d = 1u64;
        while seen.len() < want {
            if gcd(d, 2 * self.level()) == 1 && crate::characters::is_squarefree(d) {
                let mut sig = vec![chi_k(-1, d as i64), chi_k(2, d as i64)];
                sig.extend(primes.iter().map(|&p| jacobi(d as i64, p as i64)));
                seen.entry(sig).or_insert(d);
            }
            d += 2;
        }
        let mut v: Vec<u64> = seen.into_values().collect();
        v.sort_unstable();
        v
    }

    /// `L^{(2N)}(s, d) = F_D(s) d0^{1-2s} L^{(2N)}(1-s, d)` for `d0` in class `D`,
    /// read off the functional equation of the primitive twist.
    pub fn fe_factor(&self, s: Complex64, a1c1: DivIndex, dd: u64) -> Result<Complex64, MdsError> {
        let (a1, c1) = a1c1;
        let cond = self.cond_c1(c1)?;
        let psi = from_kernel(chi_m1(c1) * a1 as i64 * dd as i64)?;
        let eps = self.eps_c1(c1)? as f64 * chi_eval(&psi, -(cond as i64)) as f64;
        let ct = psi.discriminant().unsigned_abs() as f64 / dd as f64;
        let full = from_kernel(a1 as i64 * c1 as i64 * dd as i64)?;
        let mut e = c(1.0);
        for p in lfuncs::bad_primes(&self.form) {
            e *= local_factor_inv(&self.form, &full, p, s) / local_factor_inv(&self.form, &full, p, 1.0 - s);
        }
        Ok(eps * c(cond as f64).powc(0.5 - s) * c(ct).powc(1.0 - 2.0 * s) * c(PI).powc(2.0 * s - 1.0) * self.gamma_ratio(s) * e)
    }

    /// `Phi` assembled by character orthogonality from the per-class
    /// functional equations.
    pub fn phi_oracle(&self, s: Complex64, a1c1: DivIndex) -> Result<Vec<Vec<Complex64>>, MdsError> {
        let reps = self.class_representatives();
        let fs: Vec<Complex64> = reps.iter().map(|&dd| self.fe_factor(s, a1c1, dd)).collect::<Result<_, _>>()?;
        let g = reps.len() as f64;
        Ok(self
            .div
            .iter()
            .map(|&r| {
                self.div
                    .iter()
                    .map(|&col| {
                        reps.iter()
                            .zip(&fs)
                            .map(|(&dd, f)| (chi_ac(r, dd as i64) * chi_ac(col, dd as i64)) as f64 * f)
                            .sum::<Complex64>()
                            / g
                    })
                    .collect()
            })
            .collect())
    }

    /// Closed-form entry `Psi_{a2c2}(w)_{a1c1, a1'c1'}`.
    pub fn psi_entry(&self, w: Complex64, a2c2: DivIndex, a1c1: DivIndex, a1c1p: DivIndex) -> Result<Complex64, MdsError> {
        for ac in [a2c2, a1c1, a1c1p] {
            self.check_div(ac)?;
        }
        let (a2, c2) = a2c2;
        let g = gcd(a1c1.1, a1c1p.1);
        let m = a1c1.1 * a1c1p.1 / (g * g);
        let k2 = a2 as i64 * c2 as i64;
        let head_chi = chi_ac(a2c2, m as i64) as f64;
        if head_chi == 0.0 {
            return Ok(c(0.0));
        }
        let pole_guard = |z: Complex64| -> Result<Complex64, MdsError> {
            if z.norm() < 1e-12 {
                Err(MdsError::EntryPole(w))
            } else {
                Ok(z)
            }
        };
        let mut prod = c(1.0);
        for (p, _) in factor(m) {
            let pf = c(p as f64);
            prod *= (pf.powc(-(1.0 - w)) - pf.powc(-w)) / pole_guard(1.0 - pf.powc(-2.0 * (1.0 - w)))?;
        }
        for (p, _) in factor(crate::characters::rad(self.level()) / m) {
            let pf = c(p as f64);
            prod *= (1.0 - 1.0 / p as f64) / pole_guard(1.0 - pf.powc(-2.0 * (1.0 - w)))?;
        }
        let gamma_q = |num: Complex64, den: Complex64| -> Result<Complex64, MdsError> {
            let r = num.re.round();
            if r <= 0.0 && (num - r).norm() < 1e-12 {
                return Err(MdsError::EntryPole(w));
            }
            Ok(gamma(num) / gamma(den))
        };
        let l2 = |k: i64, z: Complex64| 1.0 / (1.0 - chi_k(k, 2) as f64 * c(2.0).powc(-z));
        let ratio = |k: i64| l2(k, 1.0 - w) / l2(k, w);
        let a11 = a1c1.0 as i64 * a1c1p.0 as i64;
        let even = a2 > 0;
        let (g1, g2) = if even {
            (gamma_q((1.0 - w) / 2.0, w / 2.0)?, gamma_q((2.0 - w) / 2.0, (1.0 + w) / 2.0)?)
        } else {
            (gamma_q((2.0 - w) / 2.0, (w + 1.0) / 2.0)?, gamma_q((1.0 - w) / 2.0, w / 2.0)?)
        };
        let first = c(ctilde(k2)).powc(0.5 - w) * g1 * (ratio(k2) + chi_k(a11, 5) as f64 * ratio(5 * k2));
        let second = c(ctilde(-3 * k2)).powc(0.5 - w)
            * g2
            * (chi_k(a11, 3) as f64 * ratio(-3 * k2) + chi_k(a11, 7) as f64 * ratio(-7 * k2));
        Ok(0.25 * c(c2 as f64).powc(0.5 - w) * c(PI).powc(w - 0.5) * head_chi * prod * (first + second))
    }

    /// `|| Z(s,w) - Phi(s) Z(1-s, w+2s-1) ||_inf / ||Z(s,w)||_inf` over `Div(N)`.
    ///
    /// The reflected side uses a different AFE balance; with equal balances
    /// the two sides would share their sums and agree trivially.
    pub fn check_fe_gamma1(&self, s: Complex64, w: Complex64, a1c1: DivIndex, cfg: &ZConfig, opts: PhiOptions) -> Result<FeReport, MdsError> {
        let s2 = 1.0 - s;
        let w2 = w + 2.0 * s - 1.0;
        let lhs = self.z_rep1_vector(s, w, a1c1, cfg)?;
        let reflected = ZConfig { afe_balance: cfg.afe_balance * REFLECTED_BALANCE, ..cfg.clone() };
        let rhs = self.z_rep1_vector(s2, w2, a1c1, &reflected)?;
        let phi = self.phi_matrix(s, a1c1, opts)?;
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        let mut image = Vec::with_capacity(lhs.len());
        for (i, row) in phi.iter().enumerate() {
            let v: Complex64 = row.iter().zip(&rhs).map(|(p, z)| p * z.value).sum();
            num = num.max((lhs[i].value - v).norm());
            den = den.max(lhs[i].value.norm());
            image.push(v);
        }
        let err_lhs = lhs.iter().map(|z| z.error).fold(0.0, f64::max);
        let err_rhs = rhs.iter().map(|z| z.error).fold(0.0, f64::max);
        let phi_norm = phi.iter().map(|r| r.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max);
        Ok(FeReport {
            s,
            w,
            a1c1,
            lhs: lhs.iter().map(|z| z.value).collect(),
            rhs: image,
            residual: if den > 0.0 { num / den } else { num },
            error_bound: if den > 0.0 { (err_lhs + phi_norm * err_rhs) / den } else { f64::INFINITY },
        })
    }

    /// `(w - 1) Z_rep2(s, w)` at `w = 1 + 10^{-k}` and its polynomial
    /// extrapolation to `w = 1`, against `L^{(2N)}(2s, Sym^2) prod_{p | 2N} (1 - 1/p)`.
    pub fn residue_check(&self, s: Complex64, ks: &[i32], a1c1: DivIndex, cfg: &ZConfig) -> Result<ResidueReport, MdsError> {
        let mut samples = Vec::with_capacity(ks.len());
        for &k in ks {
            let delta = 10f64.powi(-k);
            let z = self.z_rep2(s, c(1.0 + delta), TRIVIAL, a1c1, cfg)?;
            samples.push((delta, z.value * delta));
        }
        let extrapolated = richardson(&samples);
        let pmax = cfg.euler_pmax.min(self.form.len() as u64);
        let mut target = lfuncs::sym2_euler(&self.form, 2.0 * s, pmax)?;
        for p in lfuncs::bad_primes(&self.form) {
            target *= 1.0 - 1.0 / p as f64;
        }
        let rel = (extrapolated - target).norm() / target.norm();
        Ok(ResidueReport { s, samples, extrapolated, target, relative_error: rel })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PhiOptions {
    /// Sensitivity control: replace the Euler products over `p | N0` by zero.
    pub zero_n0_product: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeReport {
    pub s: Complex64,
    pub w: Complex64,
    pub a1c1: DivIndex,
    pub lhs: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
    pub residual: f64,
    /// Propagated truncation error, relative.
    pub error_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidueReport {
    pub s: Complex64,
    /// `(delta, delta * Z(s, 1 + delta))`.
    pub samples: Vec<(f64, Complex64)>,
    pub extrapolated: Complex64,
    pub target: Complex64,
    pub relative_error: f64,
}

/// Value at 0 of the interpolating polynomial through `(x_i, y_i)`.
pub fn richardson(samples: &[(f64, Complex64)]) -> Complex64 {
    let mut acc = c(0.0);
    for (i, &(xi, yi)) in samples.iter().enumerate() {
        let mut l = 1.0;
        for (j, &(xj, _)) in samples.iter().enumerate() {
            if i != j {
                l *= xj / (xj - xi);
            }
        }
        acc += yi * l;
    }
    acc
}

fn sum_blocks(terms: &[Complex64]) -> Complex64 {
    let parts: Vec<Complex64> = blocks(terms.len(), 256).iter().map(|&(a, b)| terms[a..b].iter().sum()).collect();
    ordered_sum(c(0.0), &parts)
}
