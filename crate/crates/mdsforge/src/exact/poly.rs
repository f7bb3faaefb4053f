use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exponent vector `(k1, k2, j, e)` for `z1^k1 z2^k2 z3^j u^e`.
///
/// Exponents are signed so Laurent intermediates can be represented before
/// they are cleared into a numerator/denominator pair.
pub type Mono = [i32; 4];

pub const Z1: usize = 0;
pub const Z2: usize = 1;
pub const Z3: usize = 2;
pub const U: usize = 3;

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Sparse polynomial in `z1, z2, z3, u` over the rationals, keyed
/// lexicographically by exponent vector. Zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Mono, BigRational>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::constant(rat(1))
    }

    pub fn constant(c: BigRational) -> Self {
        Poly::term(c, [0; 4])
    }

    pub fn int(c: i64) -> Self {
        Poly::constant(rat(c))
    }

    pub fn term(c: BigRational, m: Mono) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    /// The monomial `c * z^m` with an integer coefficient.
    pub fn mono(c: i64, m: Mono) -> Self {
        Poly::term(rat(c), m)
    }

    pub fn var(i: usize) -> Self {
        let mut m = [0; 4];
        m[i] = 1;
        Poly::mono(1, m)
    }

    pub fn from_terms<I: IntoIterator<Item = (Mono, BigRational)>>(it: I) -> Self {
        let mut p = Poly::zero();
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Mono) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, m: Mono, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn scale(&self, c: &BigRational) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, a)| (*m, a * c)).collect(),
        }
    }

    /// Multiply by the monomial `z^m`.
    pub fn shift(&self, m: &Mono) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(k, a)| (add_mono(k, m), a.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one();
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

    /// Lexicographically largest monomial and its coefficient.
    pub fn leading(&self) -> Option<(&Mono, &BigRational)> {
        self.terms.iter().next_back()
    }

    /// Componentwise minimum of exponents over all stored terms.
    pub fn min_exponents(&self) -> Option<Mono> {
        let mut it = self.terms.keys();
        let first = *it.next()?;
        Some(it.fold(first, |mut acc, m| {
            for i in 0..4 {
                acc[i] = acc[i].min(m[i]);
            }
            acc
        }))
    }

    pub fn max_degree(&self, var: usize) -> Option<i32> {
        self.terms.keys().map(|m| m[var]).max()
    }

    pub fn min_degree(&self, var: usize) -> Option<i32> {
        self.terms.keys().map(|m| m[var]).min()
    }

    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|m| m.iter().all(|&e| e >= 0))
    }

    /// Coefficient of `var^e`, as a polynomial in the remaining variables.
    pub fn coeff_of(&self, var: usize, e: i32) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m[var] == e)
                .map(|(m, c)| {
                    let mut k = *m;
                    k[var] = 0;
                    (k, c.clone())
                })
                .collect(),
        }
    }

    /// Keep only terms satisfying the predicate.
    pub fn filter<F: Fn(&Mono) -> bool>(&self, f: F) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| f(m))
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// Set `var = 0`. Requires no negative powers of `var`.
    pub fn at_zero(&self, var: usize) -> Poly {
        debug_assert!(self.min_degree(var).unwrap_or(0) >= 0);
        self.filter(|m| m[var] == 0)
    }

    pub fn derivative(&self, var: usize) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            if m[var] != 0 {
                let mut k = *m;
                k[var] -= 1;
                out.add_term(k, c * rat(m[var] as i64));
            }
        }
        out
    }

    /// Replace every monomial by its image under a monomial map.
    pub fn substitute(&self, map: &MonoMap) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (sign, img) = map.image(m);
            if sign < 0 {
                out.add_term(img, -c.clone());
            } else {
                out.add_term(img, c.clone());
            }
        }
        out
    }

    /// Exact evaluation at a rational point; `None` if a negative power of a
    /// zero coordinate is required.
    pub fn eval(&self, point: &[BigRational; 4]) -> Option<BigRational> {
        let mut acc = BigRational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for i in 0..4 {
                t *= rat_pow(&point[i], m[i])?;
            }
            acc += t;
        }
        Some(acc)
    }

    /// Rational content: positive `c` with `self / c` primitive over the integers.
    pub fn content(&self) -> BigRational {
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        for c in self.terms.values() {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        if num.is_zero() {
            return rat(1);
        }
        BigRational::new(num, den)
    }

    /// Exact division by `d`, or `None` if `d` does not divide `self`.
    ///
    /// Plain lex-order multivariate division; the remainder must vanish.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        let (dm, dc) = d.leading()?;
        let (dm, dc) = (*dm, dc.clone());
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        let bound = self.len() * (d.len() + 1) + 64;
        let mut steps = 0usize;
        while let Some((rm, rc)) = rem.leading() {
            let qm = sub_mono(rm, &dm);
            if self.is_polynomial() && d.is_polynomial() && qm.iter().any(|&e| e < 0) {
                return None;
            }
            let qc = rc / &dc;
            let step = Poly::term(qc, qm);
            rem = &rem - &(&step * d);
            quot = &quot + &step;
            steps += 1;
            if steps > bound * 8 {
                return None;
            }
        }
        Some(quot)
    }
}

pub fn add_mono(a: &Mono, b: &Mono) -> Mono {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub fn sub_mono(a: &Mono, b: &Mono) -> Mono {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]]
}

fn rat_pow(x: &BigRational, e: i32) -> Option<BigRational> {
    if e == 0 {
        return Some(rat(1));
    }
    if e < 0 {
        if x.is_zero() {
            return None;
        }
        return Some(num_traits::pow(x.recip(), (-e) as usize));
    }
    Some(num_traits::pow(x.clone(), e as usize))
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let (mut big, small) = if self.len() >= rhs.len() {
            (self.clone(), rhs)
        } else {
            (rhs.clone(), self)
        };
        for (m, c) in &small.terms {
            big.add_term(*m, c.clone());
        }
        big
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(*m, -c.clone());
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut acc: BTreeMap<Mono, BigRational> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                let m = add_mono(ma, mb);
                let c = ca * cb;
                match acc.entry(m) {
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(c);
                    }
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        *o.get_mut() += c;
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Poly { terms: acc }
    }
}

macro_rules! owned_binop {
    ($tr:ident, $f:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        const NAMES: [&str; 4] = ["z1", "z2", "z3", "u"];
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let a = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            first = false;
            let mut parts: Vec<String> = Vec::new();
            for i in 0..4 {
                match m[i] {
                    0 => {}
                    1 => parts.push(NAMES[i].to_string()),
                    e => parts.push(format!("{}^{}", NAMES[i], e)),
                }
            }
            if parts.is_empty() || !a.is_one() {
                parts.insert(0, a.to_string());
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// Image of one variable under a monomial map: `sign * z^mono`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonoImage {
    pub sign: i8,
    pub mono: Mono,
}

impl MonoImage {
    pub fn identity(var: usize) -> Self {
        let mut mono = [0; 4];
        mono[var] = 1;
        MonoImage { sign: 1, mono }
    }

    pub fn new(sign: i8, mono: Mono) -> Self {
        MonoImage { sign, mono }
    }
}

/// A coordinate change sending each of `z1, z2, z3, u` to a signed Laurent
/// monomial. The maps generated by the reflections and sign changes of the
/// Weyl action are all of this kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonoMap {
    pub images: [MonoImage; 4],
}

impl Default for MonoMap {
    fn default() -> Self {
        MonoMap::identity()
    }
}

impl MonoMap {
    pub fn identity() -> Self {
        MonoMap {
            images: [
                MonoImage::identity(0),
                MonoImage::identity(1),
                MonoImage::identity(2),
                MonoImage::identity(3),
            ],
        }
    }

    pub fn with(mut self, var: usize, img: MonoImage) -> Self {
        self.images[var] = img;
        self
    }

    /// Image of the monomial `z^m`.
    pub fn image(&self, m: &Mono) -> (i8, Mono) {
        let mut sign = 1i8;
        let mut out = [0i32; 4];
        for (i, &e) in m.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let img = &self.images[i];
            if img.sign < 0 && e.rem_euclid(2) == 1 {
                sign = -sign;
            }
            for k in 0..4 {
                out[k] += img.mono[k] * e;
            }
        }
        (sign, out)
    }

    /// `self.then(other)` substitutes with `self` first, then with `other`;
    /// that is, `h.substitute(self).substitute(other)`.
    pub fn then(&self, other: &MonoMap) -> MonoMap {
        let mut images = self.images;
        for (i, img) in self.images.iter().enumerate() {
            let (s, m) = other.image(&img.mono);
            images[i] = MonoImage::new(s * img.sign, m);
        }
        MonoMap { images }
    }

    pub fn is_identity(&self) -> bool {
        *self == MonoMap::identity()
    }
}
