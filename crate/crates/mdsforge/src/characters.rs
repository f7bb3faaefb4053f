//! Real Dirichlet characters in the `chi_{d0} chi_{ac}` parametrisation,
//! Kronecker symbols, Gauss sums and Dirichlet L-functions.

use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

use crate::special::{gamma, gamma_upper, hurwitz_zeta};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CharError {
    #[error("unsupported level: {0}")]
    UnsupportedLevel(String),
    #[error("invalid character: {0}")]
    Invalid(String),
    #[error("primitivity required")]
    NotPrimitive,
    #[error("pole at w=1")]
    Pole,
    #[error("precision failure")]
    Precision,
}

/// Kronecker symbol `(a/n)`, extending the Jacobi symbol to all integers.
pub fn kronecker(a: i64, n: i64) -> i8 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut a = a;
    let mut n = n;
    let mut k = 1i8;
    if n < 0 {
        n = -n;
        if a < 0 {
            k = -k;
        }
    }
    if a % 2 == 0 && n % 2 == 0 {
        return 0;
    }
    let v = n.trailing_zeros();
    n >>= v;
    if v % 2 == 1 {
        let r = a.rem_euclid(8);
        if r == 3 || r == 5 {
            k = -k;
        }
    }
    // Now n odd positive: Jacobi symbol (a/n).
    a = a.rem_euclid(n);
    while a != 0 {
        let t = a.trailing_zeros();
        a >>= t;
        if t % 2 == 1 && (n % 8 == 3 || n % 8 == 5) {
            k = -k;
        }
        if a % 4 == 3 && n % 4 == 3 {
            k = -k;
        }
        std::mem::swap(&mut a, &mut n);
        a %= n;
    }
    if n == 1 {
        k
    } else {
        0
    }
}

/// Jacobi symbol `(a/n)` for odd positive `n`.
pub fn jacobi(a: i64, n: i64) -> i8 {
    debug_assert!(n > 0 && n % 2 == 1);
    kronecker(a, n)
}

pub fn is_squarefree(n: u64) -> bool {
    if n == 0 {
        return false;
    }
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % (p * p) == 0 {
            return false;
        }
        if m % p == 0 {
            m /= p;
        }
        p += 1;
    }
    true
}

/// Prime factorisation by trial division.
pub fn factor(n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

pub fn rad(n: u64) -> u64 {
    factor(n).iter().map(|(p, _)| p).product()
}

pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

/// Splits `n = n0 * n1^2` with `n0` squarefree.
pub fn square_split(n: u64) -> (u64, u64) {
    let mut n0 = 1;
    let mut n1 = 1;
    for (p, e) in factor(n) {
        if e % 2 == 1 {
            n0 *= p;
        }
        n1 *= p.pow(e / 2);
    }
    (n0, n1)
}

/// A real character `chi_{d0} chi_a chi_c`. Here `chi_m(n) = (m/n)` on odd `n`,
/// so `chi_a` runs over the four characters modulo 8 and `chi_c` is attached
/// to a squarefree odd `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharSpec {
    pub d0: i64,
    pub a: i8,
    pub c: u64,
}

impl CharSpec {
    pub fn new(d0: i64, a: i8, c: u64) -> Result<Self, CharError> {
        if d0 == 0 || d0 % 2 == 0 || !is_squarefree(d0.unsigned_abs()) {
            return Err(CharError::Invalid(format!("d0={d0} must be odd and squarefree")));
        }
        if ![1, -1, 2, -2].contains(&a) {
            return Err(CharError::Invalid(format!("a={a} not in {{1,-1,2,-2}}")));
        }
        if c == 0 || c % 2 == 0 || !is_squarefree(c) {
            return Err(CharError::Invalid(format!("c={c} must be odd and squarefree")));
        }
        if gcd(d0.unsigned_abs(), c) != 1 {
            return Err(CharError::Invalid(format!("d0={d0} and c={c} share a prime")));
        }
        Ok(CharSpec { d0, a, c })
    }

    pub fn trivial() -> Self {
        CharSpec { d0: 1, a: 1, c: 1 }
    }

    /// `chi_{d0}` alone.
    pub fn quadratic(d0: i64) -> Result<Self, CharError> {
        CharSpec::new(d0, 1, 1)
    }

    /// `chi_{ac}` from a pair in `Div(N)`.
    pub fn from_ac(a: i8, c: u64) -> Result<Self, CharError> {
        CharSpec::new(1, a, c)
    }

    /// Character `d -> (d/n0)` written in this parametrisation.
    pub fn tilde(n0: u64) -> Result<Self, CharError> {
        let n = n0 as i64;
        CharSpec::quadratic(if n % 4 == 1 { n } else { -n })
    }

    /// Squarefree kernel `d0 * a * c`, whose field discriminant gives the
    /// primitive character.
    pub fn kernel(&self) -> i64 {
        self.d0 * self.a as i64 * self.c as i64
    }

    /// Fundamental discriminant of the primitive character.
    pub fn discriminant(&self) -> i64 {
        let k = self.kernel();
        if k.rem_euclid(4) == 1 {
            k
        } else {
            4 * k
        }
    }

    /// Product of two specs, reduced to its primitive kernel.
    pub fn mul(&self, o: &CharSpec) -> Result<CharSpec, CharError> {
        let k = self.kernel() * o.kernel();
        from_kernel(k)
    }

    pub fn is_principal(&self) -> bool {
        self.discriminant() == 1
    }
}

/// Spec whose primitive kernel is the squarefree part of `k`.
pub fn from_kernel(k: i64) -> Result<CharSpec, CharError> {
    let sign = if k < 0 { -1 } else { 1 };
    let mut m = k.unsigned_abs();
    let mut two = 0;
    while m % 2 == 0 {
        m /= 2;
        two += 1;
    }
    let (m0, _) = square_split(m);
    let a: i8 = if two % 2 == 1 { 2 * sign as i8 } else { sign as i8 };
    CharSpec::new(m0 as i64, a, 1)
}

/// Value of the primitive character attached to `spec` at any integer `n`.
pub fn chi_eval(spec: &CharSpec, n: i64) -> i8 {
    kronecker(spec.discriminant(), n)
}

/// `tilde chi_n(d) = (d/n)` for odd positive `n`.
pub fn chi_tilde(n: u64, d: i64) -> i8 {
    jacobi(d, n as i64)
}

/// `chi_a` for `a` in `{1,-1,2,-2}`.
pub fn chi_a(a: i8, n: i64) -> i8 {
    kronecker(CharSpec { d0: 1, a, c: 1 }.discriminant(), n)
}

/// `Div(N) = {a*c}` in the fixed order: `a` in `(1,-1,2,-2)`, then `c`
/// ascending over the divisors of `rad(N)`.
pub fn div_set(level: u64) -> Result<Vec<(i8, u64)>, CharError> {
    if level == 0 || level % 2 == 0 {
        return Err(CharError::UnsupportedLevel(format!("{level} is even")));
    }
    let fac = factor(level);
    if fac.iter().any(|&(_, e)| e >= 3) {
        return Err(CharError::UnsupportedLevel(format!("{level} is not cubefree")));
    }
    let primes: Vec<u64> = fac.iter().map(|&(p, _)| p).collect();
    let mut cs: Vec<u64> = (0..1u32 << primes.len())
        .map(|mask| {
            primes
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, p)| p)
                .product()
        })
        .collect();
    cs.sort_unstable();
    let mut out = Vec::with_capacity(4 * cs.len());
    for a in [1i8, -1, 2, -2] {
        for &c in &cs {
            out.push((a, c));
        }
    }
    Ok(out)
}

/// Conductor of the primitive character and `gcd(conductor, 8)`.
pub fn conductor(spec: &CharSpec) -> (u64, u64) {
    let q = spec.discriminant().unsigned_abs();
    (q, gcd(q, 8))
}

/// 0 for even characters, 1 for odd ones.
pub fn parity(spec: &CharSpec) -> u32 {
    if chi_eval(spec, -1) == 1 {
        0
    } else {
        1
    }
}

/// Normalised Gauss sum `Q^{-1/2} sum_x chi(x) e(x/Q)`.
pub fn gauss_sum(spec: &CharSpec) -> Complex64 {
    let (q, _) = conductor(spec);
    let mut s = Complex64::new(0.0, 0.0);
    for x in 0..q {
        let v = chi_eval(spec, x as i64);
        if v != 0 {
            s += v as f64 * Complex64::from_polar(1.0, 2.0 * PI * x as f64 / q as f64);
        }
    }
    s / (q as f64).sqrt()
}

/// Gauss sum of an arbitrary function of period `q`; fails unless it is
/// primitive, i.e. `|g| = 1`.
pub fn gauss_sum_checked(values: &[i8]) -> Result<Complex64, CharError> {
    let q = values.len();
    let mut s = Complex64::new(0.0, 0.0);
    for (x, &v) in values.iter().enumerate() {
        s += v as f64 * Complex64::from_polar(1.0, 2.0 * PI * x as f64 / q as f64);
    }
    let g = s / (q as f64).sqrt();
    if (g.norm() - 1.0).abs() > 1e-9 {
        return Err(CharError::NotPrimitive);
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LMethod {
    /// Hurwitz zeta decomposition summed by Euler-Maclaurin.
    Direct,
    /// Theta-series representation with incomplete Gamma weights; the
    /// functional equation folds the tail back onto a rapidly converging sum.
    FunctionalEquation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirichletLValue {
    pub w: Complex64,
    pub spec: CharSpec,
    pub value: Complex64,
    pub method: LMethod,
}

/// `L(w, chi)` for the primitive character attached to `spec`.
///
/// The Hurwitz route is used for `Re w >= 1.5` or small conductors, the
/// theta route otherwise.
pub fn dirichlet_l(w: Complex64, spec: &CharSpec) -> Result<DirichletLValue, CharError> {
    let (q, _) = conductor(spec);
    let method = if w.re >= 1.5 && q <= 2000 { LMethod::Direct } else { LMethod::FunctionalEquation };
    dirichlet_l_with(w, spec, method)
}

pub fn dirichlet_l_with(w: Complex64, spec: &CharSpec, method: LMethod) -> Result<DirichletLValue, CharError> {
    if spec.is_principal() && (w - 1.0).norm() < 1e-14 {
        return Err(CharError::Pole);
    }
    let value = match method {
        LMethod::Direct => l_hurwitz(w, spec),
        LMethod::FunctionalEquation => l_theta(w, spec)?,
    };
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(CharError::Precision);
    }
    Ok(DirichletLValue { w, spec: *spec, value, method })
}

fn l_hurwitz(w: Complex64, spec: &CharSpec) -> Complex64 {
    let (q, _) = conductor(spec);
    let mut s = Complex64::new(0.0, 0.0);
    for b in 1..=q {
        let v = chi_eval(spec, b as i64);
        if v != 0 {
            s += v as f64 * hurwitz_zeta(w, b as f64 / q as f64);
        }
    }
    s * Complex64::new(q as f64, 0.0).powc(-w)
}

/// Root number `g / i^a` of the functional equation.
pub fn root_number_dirichlet(spec: &CharSpec) -> Complex64 {
    let a = parity(spec);
    let g = gauss_sum(spec);
    if a == 1 {
        g / Complex64::new(0.0, 1.0)
    } else {
        g
    }
}

fn l_theta(w: Complex64, spec: &CharSpec) -> Result<Complex64, CharError> {
    let (q, _) = conductor(spec);
    let qf = q as f64;
    let a = parity(spec) as f64;
    let eps = if q == 1 { Complex64::new(1.0, 0.0) } else { root_number_dirichlet(spec) };
    let s1 = (w + a) / 2.0;
    let s2 = (Complex64::new(1.0, 0.0) - w + a) / 2.0;
    let scale = |s: Complex64| Complex64::new(qf / PI, 0.0).powc(s);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut n = 1u64;
    loop {
        let x = PI * (n * n) as f64 / qf;
        if x > 750.0 {
            break;
        }
        let v = chi_eval(spec, n as i64);
        if v != 0 {
            let nf = n as f64;
            let t1 = Complex64::new(nf, 0.0).powc(-w) * scale(s1) * gamma_upper(s1, x).ok_or(CharError::Precision)?;
            let t2 = Complex64::new(nf, 0.0).powc(w - 1.0)
                * scale(s2)
                * gamma_upper(s2, x).ok_or(CharError::Precision)?;
            let term = v as f64 * (t1 + eps * t2);
            sum += term;
            if term.norm() < 1e-18 * sum.norm().max(1e-300) && x > 40.0 {
                break;
            }
        }
        n += 1;
    }
    if q == 1 {
        sum -= 1.0 / w + 1.0 / (Complex64::new(1.0, 0.0) - w);
    }
    let lam_factor = scale(s1) * gamma(s1);
    Ok(sum / lam_factor)
}

/// `L(w, chi)` with the Euler factors at the primes dividing `m` removed.
pub fn dirichlet_l_partial(w: Complex64, spec: &CharSpec, m: u64) -> Result<Complex64, CharError> {
    let mut v = dirichlet_l(w, spec)?.value;
    for (p, _) in factor(m) {
        let c = chi_eval(spec, p as i64) as f64;
        v *= 1.0 - c * Complex64::new(p as f64, 0.0).powc(-w);
    }
    Ok(v)
}

/// Partial Euler product `prod_{p <= pmax, p not | m} (1 - chi(p) p^{-w})^{-1}`
/// with a bound on the omitted tail for `Re w > 1`.
pub fn dirichlet_l_euler(w: Complex64, spec: &CharSpec, m: u64, primes: &[u64]) -> (Complex64, f64) {
    let mut v = Complex64::new(1.0, 0.0);
    for &p in primes {
        if m % p == 0 {
            continue;
        }
        let c = chi_eval(spec, p as i64);
        if c != 0 {
            v /= 1.0 - c as f64 * Complex64::new(p as f64, 0.0).powc(-w);
        }
    }
    let pmax = *primes.last().unwrap_or(&2) as f64;
    let sigma = w.re;
    let tail = 2.0 * pmax.powf(1.0 - sigma) / ((sigma - 1.0) * pmax.ln());
    (v, v.norm() * tail)
}

/// Primes up to `n` by sieve.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    if n < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_small() {
        assert_eq!(kronecker(5, 3), -1);
        assert_eq!(kronecker(15, 9), 0);
        assert_eq!(kronecker(7, 1), 1);
        assert_eq!(kronecker(-1, 7), -1);
        assert_eq!(kronecker(2, 7), 1);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(-3, -1), -1);
    }

    #[test]
    fn spec_validation() {
        assert!(CharSpec::new(9, 1, 1).is_err());
        assert!(CharSpec::new(3, 3, 1).is_err());
        assert!(CharSpec::new(3, 1, 3).is_err());
        assert!(CharSpec::new(-15, -2, 7).is_ok());
    }

    #[test]
    fn kernel_round_trip() {
        let s = CharSpec::new(-15, -2, 7).unwrap();
        let t = from_kernel(s.kernel()).unwrap();
        assert_eq!(s.discriminant(), t.discriminant());
    }
}
