//! Complex Gamma, upper incomplete Gamma and Hurwitz zeta.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `log Gamma(z)` on the principal branch away from the poles.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z).
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Complex64::new(0.5 * (2.0 * PI).ln(), 0.0) + (z + 0.5) * t.ln() - t + x.ln()
}

pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        let s = (Complex64::new(PI, 0.0) * z).sin();
        return PI / (s * gamma(Complex64::new(1.0, 0.0) - z));
    }
    ln_gamma(z).exp()
}

pub fn gamma_re(x: f64) -> f64 {
    gamma(Complex64::new(x, 0.0)).re
}

/// Upper incomplete Gamma `Gamma(a, x)` for complex `a` and real `x > 0`.
///
/// Series for the lower function when `x` is small relative to `a`,
/// Lentz continued fraction otherwise. Returns `None` on non-convergence.
pub fn gamma_upper(a: Complex64, x: f64) -> Option<Complex64> {
    if x <= 0.0 {
        return None;
    }
    if x >= 1.5 + a.re.max(0.0) {
        return gamma_upper_cf(a, x);
    }
    if a.re >= 0.5 {
        return Some(gamma(a) - gamma_lower_series(a, x)?);
    }
    // Shift to Re >= 0.5 and come back with
    // Gamma(b, x) = (Gamma(b + 1, x) - x^b e^{-x}) / b.
    let m = (0.5 - a.re).ceil() as usize;
    let integer = a.im == 0.0 && a.re.fract() == 0.0;
    let (mut g, top) = if integer {
        (Complex64::new(exp_integral_e1(x), 0.0), -a.re as usize)
    } else {
        let b = a + m as f64;
        (gamma(b) - gamma_lower_series(b, x)?, m)
    };
    for k in (0..top).rev() {
        let b = a + k as f64;
        g = (g - (b * x.ln() - x).exp()) / b;
    }
    Some(g)
}

/// `E_1(x) = Gamma(0, x)` by its power series, for small `x > 0`.
fn exp_integral_e1(x: f64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        let t = term / k as f64;
        sum += t;
        if t.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

fn gamma_lower_series(a: Complex64, x: f64) -> Option<Complex64> {
    let mut term = 1.0 / a;
    let mut sum = term;
    for k in 1..2000 {
        term *= x / (a + k as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            let lead = (a * x.ln() - x).exp();
            return Some(lead * sum);
        }
    }
    None
}

fn gamma_upper_cf(a: Complex64, x: f64) -> Option<Complex64> {
    let tiny = 1e-300;
    let mut b = Complex64::new(x + 1.0, 0.0) - a;
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..5000 {
        let an = -(i as f64) * (Complex64::new(i as f64, 0.0) - a);
        b += 2.0;
        d = an * d + b;
        if d.norm() < tiny {
            d = Complex64::new(tiny, 0.0);
        }
        c = b + an / c;
        if c.norm() < tiny {
            c = Complex64::new(tiny, 0.0);
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            return Some((a * x.ln() - x).exp() * h);
        }
    }
    None
}

const BERNOULLI_2K: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Hurwitz zeta `sum_{k>=0} (k+a)^{-s}` by Euler-Maclaurin, for `0 < a <= 1`
/// and `s != 1`.
pub fn hurwitz_zeta(s: Complex64, a: f64) -> Complex64 {
    let n = 24usize + (s.im.abs() as usize);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..n {
        sum += Complex64::new(k as f64 + a, 0.0).powc(-s);
    }
    let x = n as f64 + a;
    let xc = Complex64::new(x, 0.0);
    sum += xc.powc(1.0 - s) / (s - 1.0);
    sum += 0.5 * xc.powc(-s);
    // Rising factorial s (s+1) ... (s+2j-2) over (2j)!
    let mut rising = s;
    let mut fact = 2.0;
    let mut xpow = xc.powc(-s - 1.0);
    for (j, b) in BERNOULLI_2K.iter().enumerate() {
        let term = b / fact * rising * xpow;
        sum += term;
        let jj = (j + 1) as f64;
        rising *= (s + 2.0 * jj - 1.0) * (s + 2.0 * jj);
        fact *= (2.0 * jj + 1.0) * (2.0 * jj + 2.0);
        xpow /= x * x;
    }
    sum
}
