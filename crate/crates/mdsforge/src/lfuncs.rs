//! Twisted modular L-functions: approximate functional equation, completed
//! L-function, root numbers, Euler products and `L(1, Sym^2)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::characters::{chi_eval, conductor, primes_up_to, CharError, CharSpec};
use crate::newforms::{spf_sieve, twisted_conductor, Newform, NewformError};
use crate::special::{gamma, gamma_upper, ln_gamma};

/// Values of `|L(1/2)|` above this are declared nonzero.
pub const NONZERO_THRESHOLD: f64 = 1e-4;
/// Values below this with root number `-1` are structural zeros.
pub const ZERO_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LError {
    #[error(transparent)]
    Newform(#[from] NewformError),
    #[error(transparent)]
    Char(#[from] CharError),
    #[error("precision failure")]
    Precision,
    #[error("root number unresolved (|eps| = {0})")]
    RootNumber(f64),
    #[error("symmetric-square evaluation failed")]
    Sym2,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Smoothing function of the approximate functional equation,
/// `V_s(y) = Gamma(s+a, 2y) / Gamma(s+a)` with `a = (l-1)/2`, tabulated on a
/// uniform grid in `log y`.
///
/// With `gamma(s) = Gamma((s+a)/2) Gamma((s+a+1)/2)` the duplication formula
/// gives `gamma(s+u)/gamma(s) = 2^{-u} Gamma(s+a+u)/Gamma(s+a)`, and the
/// contour integral of that ratio against `y^{-u} du/u` is the normalised
/// incomplete Gamma function.
#[derive(Clone, Debug)]
pub struct VTable {
    s: Complex64,
    sa: Complex64,
    g: Complex64,
    lo: f64,
    step: f64,
    vals: Vec<Complex64>,
    y_max: f64,
}

const GRID_LO: f64 = -40.0;
const GRID_STEP: f64 = 0.01;

impl VTable {
    pub fn new(s: Complex64, weight: u32, y_max: f64) -> Self {
        let sa = s + (weight as f64 - 1.0) / 2.0;
        let hi = y_max.ln() + 6.0 * GRID_STEP;
        let n = ((hi - GRID_LO) / GRID_STEP).ceil() as usize + 1;
        let mut t = VTable { s, sa, g: gamma(sa), lo: GRID_LO, step: GRID_STEP, vals: Vec::new(), y_max };
        t.vals = (0..n).map(|i| t.direct((GRID_LO + i as f64 * GRID_STEP).exp())).collect();
        t
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    /// Value from the incomplete Gamma function without interpolation.
    pub fn direct(&self, y: f64) -> Complex64 {
        match gamma_upper(self.sa, 2.0 * y) {
            Some(v) => v / self.g,
            None => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// Interpolated value; zero past `y_max`.
    pub fn eval(&self, y: f64) -> Complex64 {
        if y >= self.y_max {
            return Complex64::new(0.0, 0.0);
        }
        let x = (y.ln() - self.lo) / self.step;
        if x < 2.0 {
            return self.direct(y);
        }
        let i0 = x.floor() as usize - 2;
        let t = x - (i0 as f64);
        // Six-point Lagrange on nodes i0..i0+5 at offsets 0..5.
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..6 {
            let mut w = 1.0;
            for k in 0..6 {
                if k != j {
                    w *= (t - k as f64) / (j as f64 - k as f64);
                }
            }
            acc += self.vals[i0 + j] * w;
        }
        acc
    }
}

/// AFE kernel for one value of `s`: tables for `V_s` and `V_{1-s}` and the
/// gamma ratio.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub s: Complex64,
    pub weight: u32,
    v_s: VTable,
    v_dual: VTable,
    y_max: f64,
}

pub const DEFAULT_Y_MAX: f64 = 25.0;

impl Kernel {
    pub fn new(s: Complex64, weight: u32) -> Self {
        Kernel {
            s,
            weight,
            v_s: VTable::new(s, weight, DEFAULT_Y_MAX),
            v_dual: VTable::new(1.0 - s, weight, DEFAULT_Y_MAX),
            y_max: DEFAULT_Y_MAX,
        }
    }

    /// `log gamma(s)` for the archimedean factor.
    pub fn ln_gamma_factor(weight: u32, s: Complex64) -> Complex64 {
        let a = (weight as f64 - 1.0) / 2.0;
        ln_gamma((s + a) / 2.0) + ln_gamma((s + a + 1.0) / 2.0)
    }

    /// `log Psi(s)` with `Psi(s) = (sqrt(C)/pi)^s gamma(s)`.
    pub fn ln_psi(weight: u32, cond: f64, s: Complex64) -> Complex64 {
        s * (cond.sqrt() / PI).ln() + Self::ln_gamma_factor(weight, s)
    }

    /// Number of coefficients needed at conductor `cond` and balance `x`.
    pub fn length(&self, cond: f64, x: f64) -> usize {
        (self.y_max * cond.sqrt() * x.max(1.0 / x) / PI).ceil() as usize + 1
    }
}

/// `lambda_f(n) chi(n)` for `1 <= n <= m`; index 0 unused.
pub fn twisted_coefficients(f: &Newform, spec: &CharSpec, m: usize) -> Result<Vec<f64>, LError> {
    let lam = f.lambda_table(m)?;
    let (q, _) = conductor(spec);
    let period: Vec<i8> = (0..q).map(|r| chi_eval(spec, r as i64)).collect();
    Ok(lam
        .iter()
        .enumerate()
        .map(|(n, &l)| if n == 0 { 0.0 } else { l * period[n % q as usize] as f64 })
        .collect())
}

/// The two sums of the AFE at balance `x`: `L(s) = a + eps * b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AfeParts {
    pub a: Complex64,
    pub b: Complex64,
    pub terms: usize,
    /// Sum of absolute values of the terms, used for a rounding estimate.
    pub magnitude: f64,
}

/// Evaluates both AFE sums from a precomputed coefficient table.
pub fn afe_parts(coeffs: &[f64], kernel: &Kernel, cond: f64, x: f64) -> Result<AfeParts, LError> {
    let s = kernel.s;
    let need = kernel.length(cond, x);
    let m = need.min(coeffs.len().saturating_sub(1));
    if m + 1 < need {
        return Err(LError::Newform(NewformError::Insufficient { need, have: coeffs.len().saturating_sub(1) }));
    }
    let sq = cond.sqrt();
    let y1 = PI / (sq * x);
    let y2 = PI * x / sq;
    let mut a = Complex64::new(0.0, 0.0);
    let mut b = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for (n, &cf) in coeffs.iter().enumerate().take(m + 1).skip(1) {
        if cf == 0.0 {
            continue;
        }
        let nf = n as f64;
        let ln = nf.ln();
        let v1 = kernel.v_s.eval(nf * y1);
        let v2 = kernel.v_dual.eval(nf * y2);
        let t1 = cf * (-s * ln).exp() * v1;
        let t2 = cf * ((s - 1.0) * ln).exp() * v2;
        mag += t1.norm() + t2.norm();
        a += t1;
        b += t2;
    }
    let ratio = (Kernel::ln_psi(kernel.weight, cond, 1.0 - s) - Kernel::ln_psi(kernel.weight, cond, s)).exp();
    Ok(AfeParts { a, b: b * ratio, terms: m, magnitude: mag * ratio.norm().max(1.0) })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LConfig {
    pub balance: f64,
    /// Second balance used to estimate the error (0 disables).
    pub check_balance: f64,
    pub tol: f64,
}

impl Default for LConfig {
    fn default() -> Self {
        LConfig { balance: 1.0, check_balance: 1.25, tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LValue {
    pub s: Complex64,
    pub form: String,
    pub twist: CharSpec,
    pub conductor: u64,
    pub root_number: i8,
    pub value: Complex64,
    pub terms: usize,
    pub est_error: f64,
    /// Set when `est_error` exceeds the configured tolerance.
    pub flagged: bool,
}

/// Twisted L-function data shared by repeated evaluations.
#[derive(Clone, Debug)]
pub struct Twist {
    pub spec: CharSpec,
    pub conductor: u64,
    pub coeffs: Vec<f64>,
}

impl Twist {
    /// Coefficients sufficient for balance `x_max` at `y_max`.
    pub fn new(f: &Newform, spec: &CharSpec, x_max: f64) -> Result<Self, LError> {
        let cond = twisted_conductor(f, spec);
        let need = (DEFAULT_Y_MAX * (cond as f64).sqrt() * x_max.max(1.0 / x_max) / PI).ceil() as usize + 1;
        if need > f.len() {
            return Err(LError::Newform(NewformError::Insufficient { need, have: f.len() }));
        }
        Ok(Twist { spec: *spec, conductor: cond, coeffs: twisted_coefficients(f, spec, need)? })
    }

    pub fn parts(&self, kernel: &Kernel, x: f64) -> Result<AfeParts, LError> {
        afe_parts(&self.coeffs, kernel, self.conductor as f64, x)
    }
}

/// Root number by solving `L = A(x) + eps B(x)` at two balances.
pub fn root_number_raw(f: &Newform, spec: &CharSpec) -> Result<Complex64, LError> {
    let s = Complex64::new(0.5, 0.17);
    let kernel = Kernel::new(s, f.weight());
    let tw = Twist::new(f, spec, 1.6)?;
    let p1 = tw.parts(&kernel, 1.0)?;
    let p2 = tw.parts(&kernel, 1.6)?;
    Ok((p1.a - p2.a) / (p2.b - p1.b))
}

pub fn root_number(f: &Newform, spec: &CharSpec) -> Result<i8, LError> {
    let e = root_number_raw(f, spec)?;
    if (e.norm() - 1.0).abs() > 1e-3 || e.im.abs() > 1e-3 {
        return Err(LError::RootNumber(e.norm()));
    }
    Ok(if e.re > 0.0 { 1 } else { -1 })
}

/// `eps(pi_f) chi(-N)` for a twist unramified at the level.
pub fn root_number_formula(f: &Newform, spec: &CharSpec, eps_f: i8) -> i8 {
    eps_f * chi_eval(spec, -(f.level() as i64))
}

/// Computes `eps(pi_f)` numerically and stores it on the form.
pub fn attach_root_number(f: &mut Newform) -> Result<i8, LError> {
    let e = root_number(f, &CharSpec::trivial())?;
    f.set_root_number(e);
    Ok(e)
}

/// Root number of the twist. Unramified at the level with `eps(pi_f)` known:
/// the formula. Ramified at the level: the part of the character at the level
/// is split off, its twist is solved numerically (small conductor) and the
/// remaining unramified character enters through `psi(-c)`.
pub fn twist_root_number(f: &Newform, spec: &CharSpec) -> Result<i8, LError> {
    let g = crate::characters::gcd(spec.discriminant().unsigned_abs(), f.level());
    if g == 1 {
        return match f.root_number() {
            Some(e) => Ok(root_number_formula(f, spec, e)),
            None => root_number(f, spec),
        };
    }
    let gstar = if g % 4 == 1 { g as i64 } else { -(g as i64) };
    let base = CharSpec::quadratic(gstar)?;
    if base.discriminant() == spec.discriminant() {
        return root_number(f, spec);
    }
    let rest = crate::characters::from_kernel(spec.kernel() / gstar)?;
    let e0 = root_number(f, &base)?;
    Ok(e0 * chi_eval(&rest, -(twisted_conductor(f, &base) as i64)))
}

#[allow(non_snake_case)]
pub fn L_twisted(s: Complex64, f: &Newform, spec: &CharSpec, cfg: &LConfig) -> Result<LValue, LError> {
    let eps = twist_root_number(f, spec)?;
    let kernel = Kernel::new(s, f.weight());
    let spread = |x: f64| x.max(1.0 / x);
    let xmax = if cfg.check_balance > 0.0 { spread(cfg.balance).max(spread(cfg.check_balance)) } else { spread(cfg.balance) };
    let tw = Twist::new(f, spec, xmax)?;
    let p = tw.parts(&kernel, cfg.balance)?;
    let value = p.a + eps as f64 * p.b;
    let mut est = p.magnitude * 1e-14;
    if cfg.check_balance > 0.0 {
        let q = tw.parts(&kernel, cfg.check_balance)?;
        est += (q.a + eps as f64 * q.b - value).norm();
    }
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(LError::Precision);
    }
    Ok(LValue {
        s,
        form: f.source().to_string(),
        twist: *spec,
        conductor: tw.conductor,
        root_number: eps,
        value,
        terms: p.terms,
        est_error: est,
        flagged: est > cfg.tol,
    })
}

/// `Lambda(s) = (sqrt(C)/pi)^s gamma(s) L(s)`.
pub fn completed_lambda(s: Complex64, f: &Newform, spec: &CharSpec, cfg: &LConfig) -> Result<Complex64, LError> {
    let l = L_twisted(s, f, spec, cfg)?;
    Ok(Kernel::ln_psi(f.weight(), l.conductor as f64, s).exp() * l.value)
}

/// Inverse local factor `L_p(s, pi_f (x) chi)^{-1}` of the primitive twist.
pub fn local_factor_inv(f: &Newform, spec: &CharSpec, p: u64, s: Complex64) -> Complex64 {
    let x = c(p as f64).powc(-s);
    let ch = chi_eval(spec, p as i64) as f64;
    let lam = f.lambda(p as usize);
    if f.level() % p == 0 {
        1.0 - lam * ch * x
    } else {
        1.0 - lam * ch * x + ch * ch * x * x
    }
}

/// Primes dividing `2N`.
pub fn bad_primes(f: &Newform) -> Vec<u64> {
    let mut v = vec![2];
    v.extend(crate::characters::factor(f.level()).iter().map(|&(p, _)| p));
    v
}

/// `L^{(2N)}` from the primitive value.
pub fn remove_bad_factors(f: &Newform, spec: &CharSpec, s: Complex64, value: Complex64) -> Complex64 {
    bad_primes(f).iter().fold(value, |v, &p| v * local_factor_inv(f, spec, p, s))
}

/// Partial Euler product over `p <= primes.last()`, skipping primes dividing
/// `exclude`, with a tail bound valid for `Re s > 1`.
pub fn l_twisted_euler(f: &Newform, spec: &CharSpec, s: Complex64, primes: &[u64], exclude: u64) -> (Complex64, f64) {
    let mut v = c(1.0);
    for &p in primes {
        if exclude % p == 0 {
            continue;
        }
        v /= local_factor_inv(f, spec, p, s);
    }
    let pm = *primes.last().unwrap_or(&2) as f64;
    let sig = s.re;
    let tail = 2.0 * pm.powf(1.0 - sig) / ((sig - 1.0) * pm.ln());
    (v, v.norm() * tail * 1.5)
}

/// Truncated Dirichlet series `sum_{n<=m} lambda(n) chi(n) n^{-s}` with a
/// divisor-bound tail estimate.
pub fn l_twisted_direct(f: &Newform, spec: &CharSpec, s: Complex64, m: usize) -> Result<(Complex64, f64), LError> {
    let cf = twisted_coefficients(f, spec, m)?;
    let mut v = c(0.0);
    for (n, &x) in cf.iter().enumerate().skip(1) {
        if x != 0.0 {
            v += x * c(n as f64).powc(-s);
        }
    }
    let mf = m as f64;
    let sig = s.re;
    let tail = mf.powf(1.0 - sig) * (mf.ln() + 1.0 / (sig - 1.0)) / (sig - 1.0);
    Ok((v, tail))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CentralClass {
    Nonzero,
    StructuralZero,
    Indeterminate,
}

pub fn classify_central(value: f64, eps: i8) -> CentralClass {
    let a = value.abs();
    if a > NONZERO_THRESHOLD {
        CentralClass::Nonzero
    } else if a < ZERO_THRESHOLD && eps == -1 {
        CentralClass::StructuralZero
    } else {
        CentralClass::Indeterminate
    }
}

/// Dirichlet coefficients of `L^{(2N)}(s, Sym^2 pi_f)` up to `m`.
pub fn sym2_coefficients(f: &Newform, m: usize) -> Result<Vec<f64>, LError> {
    f.require(m)?;
    let spf = spf_sieve(m);
    let mut out = vec![0.0; m + 1];
    out[1] = 1.0;
    let level = f.level() as usize;
    // Local series h_k(alpha^2, 1, beta^2) by the Newton-type recursion with
    // e1 = e2 = lambda^2 - 1, e3 = 1.
    let mut local: Vec<f64> = Vec::new();
    let mut cur_p = 0usize;
    for n in 2..=m {
        let p = spf[n] as usize;
        let mut k = 0;
        let mut r = n;
        while r % p == 0 {
            r /= p;
            k += 1;
        }
        if p == 2 || level % p == 0 {
            continue;
        }
        if r > 1 {
            out[n] = out[r] * out[n / r];
            continue;
        }
        if p != cur_p {
            cur_p = p;
            let e = f.lambda(p).powi(2) - 1.0;
            local = vec![1.0];
            let mut kmax = 0;
            let mut q = p;
            while q <= m {
                kmax += 1;
                q = match q.checked_mul(p) {
                    Some(v) => v,
                    None => break,
                };
            }
            for j in 1..=kmax {
                let h1 = local[j - 1];
                let h2 = if j >= 2 { local[j - 2] } else { 0.0 };
                let h3 = if j >= 3 { local[j - 3] } else { 0.0 };
                local.push(e * h1 - e * h2 + h3);
            }
        }
        out[n] = local[k];
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2Value {
    pub value: f64,
    pub error: f64,
    pub cutoff: usize,
}

fn sym2_damped(coeffs: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for (n, &c) in coeffs.iter().enumerate().skip(1) {
        if c != 0.0 {
            let x = n as f64 / t;
            acc += c / n as f64 * (-x * x).exp();
        }
    }
    acc
}

/// `L^{(2N)}(1, Sym^2 pi_f)` from a Gaussian-damped Dirichlet series over
/// `n <= cutoff`; the damping scale is `cutoff / 6`. The error estimate is
/// the change when the scale is halved.
pub fn sym2_l1(f: &Newform, cutoff: usize) -> Result<Sym2Value, LError> {
    let coeffs = sym2_coefficients(f, cutoff)?;
    let t = cutoff as f64 / 6.0;
    let v = sym2_damped(&coeffs, t);
    let v2 = sym2_damped(&coeffs, t / 2.0);
    if v <= 0.0 || !v.is_finite() {
        return Err(LError::Sym2);
    }
    Ok(Sym2Value { value: v, error: (v - v2).abs(), cutoff })
}

/// `L^{(2N)}(s, Sym^2 pi_f)` as an Euler product for `Re s > 1`.
pub fn sym2_euler(f: &Newform, s: Complex64, pmax: u64) -> Result<Complex64, LError> {
    f.require(pmax as usize)?;
    let mut v = c(1.0);
    for p in primes_up_to(pmax) {
        if p == 2 || f.level() % p == 0 {
            continue;
        }
        let (a, b) = crate::newforms::satake_roots(f.lambda(p as usize));
        let x = c(p as f64).powc(-s);
        v /= (1.0 - a * a * x) * (1.0 - x) * (1.0 - b * b * x);
    }
    Ok(v)
}
