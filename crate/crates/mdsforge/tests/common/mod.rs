#![allow(dead_code)]

use mdsforge::newforms::{parse_coefficients, Newform};

fn legendre(a: i64, p: i64) -> i64 {
    let a = a.rem_euclid(p);
    if a == 0 {
        return 0;
    }
    let (mut base, mut e, mut r) = (a, (p - 1) / 2, 1i64);
    while e > 0 {
        if e & 1 == 1 {
            r = r * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

/// `a_p` of `y^2 + y = x^3 - x` by point counting.
fn ap_37a(p: i64) -> i64 {
    if p == 2 {
        let mut n = 0;
        for x in 0..2 {
            for y in 0..2 {
                if (y * y + y - x * x * x + x) % 2 == 0 {
                    n += 1;
                }
            }
        }
        return p - n;
    }
    -(0..p).map(|x| legendre(4 * x * x * x - 4 * x + 1, p)).sum::<i64>()
}

/// Coefficients of the weight-2 newform of level 37 with root number -1,
/// built from point counts and the Hecke relations.
pub fn curve_37a(m: usize) -> Vec<i64> {
    let mut a = vec![0i64; m + 1];
    a[1] = 1;
    let mut spf = vec![0usize; m + 1];
    for i in 2..=m {
        if spf[i] == 0 {
            let mut j = i;
            while j <= m {
                if spf[j] == 0 {
                    spf[j] = i;
                }
                j += i;
            }
        }
    }
    for n in 2..=m {
        let p = spf[n];
        let (mut q, mut k) = (n, 0);
        while q % p == 0 {
            q /= p;
            k += 1;
        }
        if q > 1 {
            a[n] = a[q] * a[n / q];
            continue;
        }
        let ap = ap_37a(p as i64);
        a[n] = if k == 1 {
            ap
        } else if p == 37 {
            ap * a[n / p]
        } else {
            ap * a[n / p] - p as i64 * a[n / p / p]
        };
    }
    a.remove(0);
    a
}

pub fn form_37a(m: usize) -> Newform {
    let a = curve_37a(m);
    let mut text = format!("# level=37 weight=2 count={m}\n");
    for (i, x) in a.iter().enumerate() {
        text.push_str(&format!("{},{}\n", i + 1, x));
    }
    parse_coefficients(&text, "test:37a").unwrap()
}
