//! Hecke eigenforms: built-in eta products, CSV ingestion, validation,
//! Satake parameters and conductor bookkeeping.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::characters::{factor, gcd, CharSpec};

/// Default coefficient table length. Large enough for the moment computation
/// at `X = 2048` on level 11.
pub const DEFAULT_TABLE_LEN: usize = 300_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NewformError {
    #[error("malformed coefficient file: {0}")]
    Malformed(String),
    #[error("a(1) must be 1")]
    FirstCoefficient,
    #[error("unsupported level: {0}")]
    UnsupportedLevel(String),
    #[error("insufficient coefficients: need {need}, have {have}")]
    Insufficient { need: usize, have: usize },
    #[error("character not coprime to level")]
    NotCoprime,
    #[error("unknown form: {0}")]
    UnknownForm(String),
    #[error("validation failed: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtaTag {
    /// `eta(tau)^2 eta(11 tau)^2`, weight 2, level 11.
    Level11W2,
    /// `eta(3 tau)^8`, weight 4, level 9.
    Level9W4,
}

impl EtaTag {
    pub fn name(&self) -> &'static str {
        match self {
            EtaTag::Level11W2 => "level11w2",
            EtaTag::Level9W4 => "level9w4",
        }
    }

    pub fn all() -> [EtaTag; 2] {
        [EtaTag::Level11W2, EtaTag::Level9W4]
    }
}

impl fmt::Display for EtaTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EtaTag {
    type Err = NewformError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "level11w2" => Ok(EtaTag::Level11W2),
            "level9w4" => Ok(EtaTag::Level9W4),
            _ => Err(NewformError::UnknownForm(s.to_string())),
        }
    }
}

/// A newform given by its integer Fourier coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Newform {
    level: u64,
    weight: u32,
    /// `a[n]` for `0 <= n <= M`, with `a[0] = 0`.
    a: Vec<i64>,
    n0: u64,
    n1: u64,
    source: String,
    root_number: Option<i8>,
}

impl Newform {
    /// Builds a form after checking the level and `a(1)`.
    pub fn new(level: u64, weight: u32, coeffs: Vec<i64>, source: impl Into<String>) -> Result<Self, NewformError> {
        check_level(level)?;
        if weight == 0 || weight % 2 == 1 {
            return Err(NewformError::Malformed(format!("weight {weight} must be even and positive")));
        }
        if coeffs.first() != Some(&1) {
            return Err(NewformError::FirstCoefficient);
        }
        let mut a = Vec::with_capacity(coeffs.len() + 1);
        a.push(0);
        a.extend(coeffs);
        let (mut n0, mut n1) = (1, 1);
        for (p, e) in factor(level) {
            if e == 1 {
                n0 *= p;
            } else {
                n1 *= p;
            }
        }
        Ok(Newform { level, weight, a, n0, n1, source: source.into(), root_number: None })
    }

    pub fn level(&self) -> u64 {
        self.level
    }
    pub fn weight(&self) -> u32 {
        self.weight
    }
    pub fn n0(&self) -> u64 {
        self.n0
    }
    pub fn n1(&self) -> u64 {
        self.n1
    }
    pub fn source(&self) -> &str {
        &self.source
    }
    /// Number of stored coefficients `M`.
    pub fn len(&self) -> usize {
        self.a.len() - 1
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn is_square_level(&self) -> bool {
        self.n0 == 1
    }

    /// Integer coefficient `a(n)`; zero beyond the table.
    pub fn a(&self, n: usize) -> i64 {
        self.a.get(n).copied().unwrap_or(0)
    }

    pub fn coefficients(&self) -> &[i64] {
        &self.a[1..]
    }

    /// `lambda_f(n) = a(n) / n^{(l-1)/2}`.
    pub fn lambda(&self, n: usize) -> f64 {
        self.a(n) as f64 / (n as f64).powf((self.weight as f64 - 1.0) / 2.0)
    }

    /// Normalised table `lambda_f(1..=m)`, index 0 unused.
    pub fn lambda_table(&self, m: usize) -> Result<Vec<f64>, NewformError> {
        self.require(m)?;
        let e = (self.weight as f64 - 1.0) / 2.0;
        let mut out = vec![0.0; m + 1];
        for (n, v) in out.iter_mut().enumerate().skip(1) {
            *v = self.a[n] as f64 / (n as f64).powf(e);
        }
        Ok(out)
    }

    pub fn require(&self, m: usize) -> Result<(), NewformError> {
        if m > self.len() {
            return Err(NewformError::Insufficient { need: m, have: self.len() });
        }
        Ok(())
    }

    pub fn root_number(&self) -> Option<i8> {
        self.root_number
    }

    pub fn set_root_number(&mut self, eps: i8) {
        self.root_number = Some(eps);
    }

    /// Truncated copy with `m` coefficients.
    pub fn truncated(&self, m: usize) -> Newform {
        let mut f = self.clone();
        f.a.truncate(m.min(self.len()) + 1);
        f
    }
}

fn check_level(level: u64) -> Result<(), NewformError> {
    if level == 0 || level % 2 == 0 {
        return Err(NewformError::UnsupportedLevel("even".into()));
    }
    if factor(level).iter().any(|&(_, e)| e >= 3) {
        return Err(NewformError::UnsupportedLevel("not cubefree".into()));
    }
    Ok(())
}

/// Exponents and signs of `prod_{n>=1} (1 - x^n)` up to `x^bound`.
pub fn pentagonal(bound: usize) -> Vec<(usize, i64)> {
    let mut out = vec![(0usize, 1i64)];
    let mut k = 1usize;
    loop {
        let e1 = k * (3 * k - 1) / 2;
        if e1 > bound {
            break;
        }
        let s = if k % 2 == 1 { -1 } else { 1 };
        out.push((e1, s));
        let e2 = k * (3 * k + 1) / 2;
        if e2 <= bound {
            out.push((e2, s));
        }
        k += 1;
    }
    out.sort_unstable();
    out
}

/// Exponents and coefficients of `prod (1 - x^n)^3 = sum (-1)^k (2k+1) x^{k(k+1)/2}`.
pub fn jacobi_cube(bound: usize) -> Vec<(usize, i64)> {
    let mut out = Vec::new();
    let mut k = 0usize;
    while k * (k + 1) / 2 <= bound {
        let s = if k % 2 == 0 { 1 } else { -1 };
        out.push((k * (k + 1) / 2, s * (2 * k as i64 + 1)));
        k += 1;
    }
    out
}

fn sparse_square(s: &[(usize, i64)], len: usize) -> Vec<i64> {
    let mut out = vec![0i64; len];
    for &(e1, c1) in s {
        for &(e2, c2) in s {
            if e1 + e2 < len {
                out[e1 + e2] += c1 * c2;
            }
        }
    }
    out
}

/// `dense * sparse(x^step)`, truncated to the dense length.
fn mul_sparse(dense: &[i64], sparse: &[(usize, i64)], step: usize) -> Vec<i64> {
    let mut out = vec![0i64; dense.len()];
    for &(e, c) in sparse {
        let sh = e * step;
        if sh >= dense.len() {
            break;
        }
        for (o, &d) in out[sh..].iter_mut().zip(dense) {
            *o += c * d;
        }
    }
    out
}

/// Coefficients `a(1..=m)` via the pentagonal and Jacobi-triple-product
/// sparse expansions.
pub fn eta_coefficients(tag: EtaTag, m: usize) -> Vec<i64> {
    match tag {
        EtaTag::Level11W2 => {
            // q * E(q)^2 E(q^11)^2 with E(x) = prod (1 - x^n).
            let len = m;
            let e = pentagonal(len);
            let b = sparse_square(&e, len);
            let e11 = pentagonal(len / 11 + 1);
            let b = mul_sparse(&b, &e11, 11);
            mul_sparse(&b, &e11, 11)
        }
        EtaTag::Level9W4 => {
            // q * E(q^3)^8: a(3k+1) = [x^k] E(x)^8 = (E^3)^2 E E.
            let len = m.div_ceil(3);
            let e3 = jacobi_cube(len);
            let b = sparse_square(&e3, len);
            let e = pentagonal(len);
            let b = mul_sparse(&mul_sparse(&b, &e, 1), &e, 1);
            let mut out = vec![0i64; m];
            for (k, &c) in b.iter().enumerate() {
                if 3 * k < m {
                    out[3 * k] = c;
                }
            }
            out
        }
    }
}

/// Same coefficients by multiplying in one factor `(1 - q^{kn})` at a time.
/// Quadratic cost; used as an independent check. Partial products overflow
/// but the final table fits, so the arithmetic wraps (it is exact mod 2^64).
pub fn eta_coefficients_naive(tag: EtaTag, m: usize) -> Vec<i64> {
    let (factors, shift): (Vec<(usize, u32)>, usize) = match tag {
        EtaTag::Level11W2 => (vec![(1, 2), (11, 2)], 1),
        EtaTag::Level9W4 => (vec![(3, 8)], 1),
    };
    let len = m + 1;
    let mut c = vec![0i64; len];
    c[shift] = 1;
    for (step, power) in factors {
        for n in 1.. {
            let e = n * step;
            if e >= len {
                break;
            }
            for _ in 0..power {
                for i in (e..len).rev() {
                    c[i] = c[i].wrapping_sub(c[i - e]);
                }
            }
        }
    }
    c[1..].to_vec()
}

/// Built-in eta-product newform with `m` coefficients.
pub fn eta_form(tag: EtaTag, m: usize) -> Newform {
    let (level, weight) = match tag {
        EtaTag::Level11W2 => (11, 2),
        EtaTag::Level9W4 => (9, 4),
    };
    Newform::new(level, weight, eta_coefficients(tag, m), format!("builtin:{}", tag.name()))
        .expect("built-in forms are well formed")
}

/// Parses the coefficient CSV format.
pub fn parse_coefficients(text: &str, source: &str) -> Result<Newform, NewformError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| NewformError::Malformed("empty file".into()))?;
    let header = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| NewformError::Malformed("missing header line".into()))?;
    let (mut level, mut weight, mut count) = (None, None, None);
    for field in header.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| NewformError::Malformed(format!("bad header field {field:?}")))?;
        let v: u64 = v.parse().map_err(|_| NewformError::Malformed(format!("bad header value {field:?}")))?;
        match k {
            "level" => level = Some(v),
            "weight" => weight = Some(v as u32),
            "count" => count = Some(v as usize),
            _ => return Err(NewformError::Malformed(format!("unknown header key {k:?}"))),
        }
    }
    let level = level.ok_or_else(|| NewformError::Malformed("header lacks level".into()))?;
    let weight = weight.ok_or_else(|| NewformError::Malformed("header lacks weight".into()))?;
    let count = count.ok_or_else(|| NewformError::Malformed("header lacks count".into()))?;
    check_level(level)?;
    let mut coeffs = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let (n, a) = line
            .split_once(',')
            .ok_or_else(|| NewformError::Malformed(format!("line {}: expected n,a_n", i + 2)))?;
        let n: usize = n.trim().parse().map_err(|_| NewformError::Malformed(format!("line {}: bad n", i + 2)))?;
        let a: i64 = a.trim().parse().map_err(|_| NewformError::Malformed(format!("line {}: bad a_n", i + 2)))?;
        if n != i + 1 {
            return Err(NewformError::Malformed(format!("line {}: expected n={}, found {n}", i + 2, i + 1)));
        }
        coeffs.push(a);
    }
    if coeffs.len() != count {
        return Err(NewformError::Malformed(format!("header count {count} but {} rows", coeffs.len())));
    }
    let f = Newform::new(level, weight, coeffs, source)?;
    let report = validate(&f, f.len().min(10_000));
    if !report.passed() {
        return Err(NewformError::Invalid(report.violations[0].to_string()));
    }
    Ok(f)
}

pub fn load_coefficients(path: &Path) -> Result<Newform, NewformError> {
    let text = std::fs::read_to_string(path).map_err(|e| NewformError::Io(e.to_string()))?;
    parse_coefficients(&text, &format!("file:{}", path.display()))
}

/// Serialises a form in the coefficient CSV format.
pub fn write_coefficients(f: &Newform) -> String {
    let mut s = format!("# level={} weight={} count={}\n", f.level, f.weight, f.len());
    for n in 1..=f.len() {
        s.push_str(&format!("{n},{}\n", f.a[n]));
    }
    s
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Multiplicativity { m: usize, n: usize },
    Hecke { p: u64, k: u32 },
    DivisorBound { n: usize, lambda: f64 },
    Special { p: u64 },
    Supercuspidal { p: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Multiplicativity { m, n } => write!(f, "multiplicativity fails: a({})!=a({m})a({n})", m * n),
            Violation::Hecke { p, k } => write!(f, "Hecke recursion fails at p={p}, k={k}"),
            Violation::DivisorBound { n, lambda } => write!(f, "divisor bound fails: lambda({n})={lambda}"),
            Violation::Special { p } => write!(f, "lambda({p})^2 != 1/{p} at special prime"),
            Violation::Supercuspidal { p } => write!(f, "lambda({p}) != 0 at supercuspidal prime"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub limit: usize,
    pub checked_pairs: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Smallest-prime-factor sieve on `0..=n`.
pub fn spf_sieve(n: usize) -> Vec<u32> {
    let mut spf = vec![0u32; n + 1];
    for i in 2..=n {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    spf
}

fn num_divisors(mut n: usize, spf: &[u32]) -> u32 {
    let mut d = 1;
    while n > 1 {
        let p = spf[n] as usize;
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        d *= e + 1;
    }
    d
}

/// Hecke-relation, divisor-bound and ramification checks on `n <= limit`.
pub fn validate(f: &Newform, limit: usize) -> ValidationReport {
    let limit = limit.min(f.len());
    let spf = spf_sieve(limit);
    let mut rep = ValidationReport { limit, ..Default::default() };
    let pk1 = f.weight - 1;
    // Multiplicativity on the prime-power split of every n.
    for n in 2..=limit {
        let p = spf[n] as usize;
        let mut q = 1;
        let mut m = n;
        while m % p == 0 {
            m /= p;
            q *= p;
        }
        if m > 1 {
            rep.checked_pairs += 1;
            if f.a(n) as i128 != f.a(q) as i128 * f.a(m) as i128 {
                rep.violations.push(Violation::Multiplicativity { m: q, n: m });
            }
        }
        let lam = f.lambda(n).abs();
        if lam > num_divisors(n, &spf) as f64 + 1e-9 {
            rep.violations.push(Violation::DivisorBound { n, lambda: f.lambda(n) });
        }
    }
    for p in 2..=limit {
        if spf[p] as usize != p {
            continue;
        }
        let p64 = p as u64;
        if f.level % p64 == 0 {
            if f.n1 % p64 == 0 {
                if f.a(p) != 0 {
                    rep.violations.push(Violation::Supercuspidal { p: p64 });
                }
            } else if (f.a(p) as i128).pow(2) != (p as i128).pow(f.weight - 2) {
                rep.violations.push(Violation::Special { p: p64 });
            }
            continue;
        }
        let ppow = (p as i128).pow(pk1);
        let mut k = 1u32;
        let mut prev = 1usize;
        let mut cur = p;
        while let Some(next) = cur.checked_mul(p).filter(|&x| x <= limit) {
            let lhs = f.a(p) as i128 * f.a(cur) as i128;
            let rhs = f.a(next) as i128 + ppow * f.a(prev) as i128;
            if lhs != rhs {
                rep.violations.push(Violation::Hecke { p: p64, k });
            }
            prev = cur;
            cur = next;
            k += 1;
        }
    }
    rep
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SatakeData {
    Unramified { p: u64, alpha: Complex64, beta: Complex64 },
    Special { p: u64, alpha: f64 },
    Supercuspidal { p: u64 },
}

impl SatakeData {
    /// `(alpha, beta)` with missing parameters set to zero.
    pub fn pair(&self) -> (Complex64, Complex64) {
        match *self {
            SatakeData::Unramified { alpha, beta, .. } => (alpha, beta),
            SatakeData::Special { alpha, .. } => (Complex64::new(alpha, 0.0), Complex64::new(0.0, 0.0)),
            SatakeData::Supercuspidal { .. } => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
        }
    }
}

/// Roots of `x^2 - lambda x + 1`.
pub fn satake_roots(lambda: f64) -> (Complex64, Complex64) {
    let disc = Complex64::new(lambda * lambda - 4.0, 0.0).sqrt();
    ((lambda + disc) / 2.0, (lambda - disc) / 2.0)
}

pub fn satake(f: &Newform, p: u64) -> Result<SatakeData, NewformError> {
    f.require(p as usize)?;
    let lam = f.lambda(p as usize);
    Ok(if f.level % p != 0 {
        let (alpha, beta) = satake_roots(lam);
        SatakeData::Unramified { p, alpha, beta }
    } else if f.n1 % p == 0 {
        SatakeData::Supercuspidal { p }
    } else {
        SatakeData::Special { p, alpha: lam }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConductorData {
    pub n0: u64,
    pub n1: u64,
    pub sym2: u64,
    /// Upper bound `8 N c d0^2` for the twisted conductor.
    pub twisted_bound: u64,
    /// Exact conductor of the twist, assuming twist minimality.
    pub twisted: u64,
}

/// Conductor of `pi_f (x) chi` for the primitive character of `spec`.
///
/// Primes outside the level contribute the square of the character
/// conductor. At `p | N` an unramified twist keeps `p^{ord_p N}`; a ramified
/// quadratic twist of a twist-minimal form has local conductor `p^2`.
pub fn twisted_conductor(f: &Newform, spec: &CharSpec) -> u64 {
    let disc = spec.discriminant().unsigned_abs();
    let mut c = 1u64;
    let mut primes: Vec<u64> = factor(disc).iter().map(|&(p, _)| p).collect();
    for (p, _) in factor(f.level) {
        if !primes.contains(&p) {
            primes.push(p);
        }
    }
    for p in primes {
        let ep = ord(disc, p);
        let en = ord(f.level, p);
        c *= if en == 0 {
            p.pow(2 * ep)
        } else if ep == 0 {
            p.pow(en)
        } else {
            p * p
        };
    }
    c
}

fn ord(mut n: u64, p: u64) -> u32 {
    let mut e = 0;
    while n > 0 && n % p == 0 {
        n /= p;
        e += 1;
    }
    e
}

pub fn conductor_data(f: &Newform, spec: Option<&CharSpec>) -> Result<ConductorData, NewformError> {
    let spec = spec.copied().unwrap_or_else(CharSpec::trivial);
    if gcd(spec.d0.unsigned_abs(), 2 * f.level) != 1 {
        return Err(NewformError::NotCoprime);
    }
    let d0 = spec.d0.unsigned_abs();
    Ok(ConductorData {
        n0: f.n0,
        n1: f.n1,
        sym2: f.n0 * f.n0 * f.n1.pow(3),
        twisted_bound: 8 * f.level * spec.c * d0 * d0,
        twisted: twisted_conductor(f, &spec),
    })
}
