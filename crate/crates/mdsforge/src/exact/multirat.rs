use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::poly::{sub_mono, Mono, MonoMap, Poly};
use super::ExactError;

/// Quotient of two sparse polynomials in `z1, z2, z3, u`.
///
/// Canonical form: numerator and denominator carry no negative exponents and
/// no common monomial factor, the denominator is primitive over the integers
/// and its leading coefficient is positive. There is no gcd reduction, so two
/// equal functions may have different representations; compare with
/// [`rf_equal`].
#[derive(Clone, Debug)]
pub struct MultiRat {
    num: Poly,
    den: Poly,
}

impl MultiRat {
    pub fn new(num: Poly, den: Poly) -> Result<Self, ExactError> {
        if den.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        Ok(MultiRat { num, den }.canonical())
    }

    pub fn from_poly(p: Poly) -> Self {
        MultiRat { num: p, den: Poly::one() }.canonical()
    }

    pub fn one() -> Self {
        MultiRat::from_poly(Poly::one())
    }

    pub fn zero() -> Self {
        MultiRat::from_poly(Poly::zero())
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

    fn canonical(self) -> Self {
        let MultiRat { mut num, mut den } = self;
        if num.is_zero() {
            return MultiRat { num, den: Poly::one() };
        }
        // Clear Laurent exponents and common monomial factors.
        let mn = num.min_exponents().unwrap();
        let md = den.min_exponents().unwrap();
        let mut shift = [0i32; 4];
        for i in 0..4 {
            shift[i] = -mn[i].min(md[i]);
        }
        if shift != [0; 4] {
            num = num.shift(&shift);
            den = den.shift(&shift);
        }
        let mut c = den.content();
        if den.leading().unwrap().1.is_negative() {
            c = -c;
        }
        let inv = c.recip();
        MultiRat { num: num.scale(&inv), den: den.scale(&inv) }
    }

    pub fn add(&self, o: &MultiRat) -> MultiRat {
        if self.den == o.den {
            return MultiRat { num: &self.num + &o.num, den: self.den.clone() }.canonical();
        }
        MultiRat {
            num: &(&self.num * &o.den) + &(&o.num * &self.den),
            den: &self.den * &o.den,
        }
        .canonical()
    }

    pub fn sub(&self, o: &MultiRat) -> MultiRat {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> MultiRat {
        MultiRat { num: -&self.num, den: self.den.clone() }
    }

    pub fn mul(&self, o: &MultiRat) -> MultiRat {
        MultiRat { num: &self.num * &o.num, den: &self.den * &o.den }.canonical()
    }

    pub fn div(&self, o: &MultiRat) -> Result<MultiRat, ExactError> {
        if o.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        Ok(MultiRat { num: &self.num * &o.den, den: &self.den * &o.num }.canonical())
    }

    pub fn mul_poly(&self, p: &Poly) -> MultiRat {
        MultiRat { num: &self.num * p, den: self.den.clone() }.canonical()
    }

    pub fn scale(&self, c: &BigRational) -> MultiRat {
        MultiRat { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Compose with a monomial coordinate change.
    pub fn substitute(&self, map: &MonoMap) -> Result<MultiRat, ExactError> {
        MultiRat::new(self.num.substitute(map), self.den.substitute(map))
    }

    /// Set `var = 0`. Fails if the denominator vanishes identically there.
    pub fn at_zero(&self, var: usize) -> Result<MultiRat, ExactError> {
        MultiRat::new(self.num.at_zero(var), self.den.at_zero(var))
    }

    /// Partial derivative by the quotient rule.
    pub fn derivative(&self, var: usize) -> MultiRat {
        let n = &(&self.num.derivative(var) * &self.den) - &(&self.num * &self.den.derivative(var));
        MultiRat { num: n, den: &self.den * &self.den }.canonical()
    }

    pub fn eval(&self, point: &[BigRational; 4]) -> Option<BigRational> {
        let d = self.den.eval(point)?;
        if d.is_zero() {
            return None;
        }
        Some(self.num.eval(point)? / d)
    }

    /// The quotient as a polynomial, if the denominator divides the numerator.
    pub fn as_poly(&self) -> Option<Poly> {
        self.num.div_exact(&self.den)
    }

    /// Largest monomial dividing the numerator, relative to the denominator.
    pub fn monomial_shift(&self) -> Mono {
        let mn = self.num.min_exponents().unwrap_or([0; 4]);
        let md = self.den.min_exponents().unwrap_or([0; 4]);
        sub_mono(&mn, &md)
    }
}

/// Exact equality of rational functions by cross multiplication.
pub fn rf_equal(a: &MultiRat, b: &MultiRat) -> bool {
    if a.num == b.num && a.den == b.den {
        return true;
    }
    (&a.num * &b.den) == (&b.num * &a.den)
}

impl PartialEq for MultiRat {
    fn eq(&self, o: &Self) -> bool {
        rf_equal(self, o)
    }
}

impl Zero for MultiRat {
    fn zero() -> Self {
        MultiRat::zero()
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}

impl std::ops::Add for MultiRat {
    type Output = MultiRat;
    fn add(self, o: MultiRat) -> MultiRat {
        MultiRat::add(&self, &o)
    }
}
