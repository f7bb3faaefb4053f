use mdsforge::characters::{gcd, square_split};
use mdsforge::exact::{Poly, U, Z1, Z2};
use mdsforge::mds::*;
use mdsforge::newforms::*;
use mdsforge::weyl_cg::{CgFunction, CorrectionPolyTable};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use std::sync::OnceLock;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn cz(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mds(tag: EtaTag) -> &'static Mds {
    static M: OnceLock<Vec<Mds>> = OnceLock::new();
    let v = M.get_or_init(|| EtaTag::all().iter().map(|&t| Mds::new(eta_form(t, DEFAULT_TABLE_LEN)).unwrap()).collect());
    &v[EtaTag::all().iter().position(|&t| t == tag).unwrap()]
}

fn cg() -> &'static CgFunction {
    static G: OnceLock<CgFunction> = OnceLock::new();
    G.get_or_init(CgFunction::default)
}

/// Jacobi symbol by the textbook reciprocity loop.
fn jacobi(a: i64, n: i64) -> i64 {
    let (mut a, mut n, mut t) = (a.rem_euclid(n), n, 1);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// `H(p^k1, p^k2, p^j)` from the exact series coefficient and Satake data.
fn h_local(f: &Newform, p: u64, k1: u32, k2: u32, j: u32) -> Complex64 {
    let a = cg().coefficient(k1, k2, j).unwrap().eval_f64((p as f64).sqrt());
    let (al, be) = satake(f, p).unwrap().pair();
    a * al.powu(k1) * be.powu(k2)
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

#[test]
fn h_examples() {
    let m = mds(EtaTag::Level11W2);
    let (a3, _) = satake(m.form(), 3).unwrap().pair();
    assert!(close(m.h(3, 1, 1).unwrap(), a3, 1e-14));
    assert_eq!(m.h(3, 1, 3).unwrap(), c(0.0));
    assert_eq!(m.h(1, 1, 15).unwrap(), c(1.0));
    assert_eq!(m.h(1, 1, 1).unwrap(), c(1.0));
    assert!(matches!(m.h(11, 1, 1), Err(MdsError::NotCoprime(11))));
    assert!(matches!(m.h(1, 2, 1), Err(MdsError::NotCoprime(2))));
    let g = mds(EtaTag::Level9W4);
    assert!(matches!(g.h(3, 1, 1), Err(MdsError::NotCoprime(3))));
}

#[test]
fn parity_vanishing_over_cached_range() {
    for tag in EtaTag::all() {
        let m = mds(tag);
        for p in [5u64, 7, 13] {
            for k1 in 0..=16u32 {
                for k2 in 0..=16 - k1 {
                    for j in 0..=16 - k1 - k2 {
                        let odd = (k1 + k2) % 2 == 1 && j % 2 == 1;
                        let min1 = (k1 + k2).min(j) == 1;
                        if odd || min1 {
                            assert_eq!(m.local_coefficient(k1, k2, j, p).unwrap(), 0.0, "{k1} {k2} {j}");
                        }
                    }
                }
            }
            for (k1, k2, j) in [(1, 0, 1), (2, 1, 3), (0, 3, 5), (1, 2, 1)] {
                let v = m.h(p.pow(k1), p.pow(k2), p.pow(j)).unwrap();
                assert_eq!(v, c(0.0));
            }
        }
    }
}

#[test]
fn prime_power_values_match_series() {
    let m = mds(EtaTag::Level11W2);
    for p in [3u64, 5, 7] {
        for (k1, k2, j) in [(1, 0, 0), (2, 1, 0), (0, 0, 4), (2, 0, 2), (1, 1, 2), (3, 1, 2), (2, 2, 4)] {
            let want = h_local(m.form(), p, k1, k2, j);
            let got = m.h(p.pow(k1), p.pow(k2), p.pow(j)).unwrap();
            assert!(close(got, want, 1e-12), "p={p} {k1} {k2} {j}: {got} vs {want}");
        }
    }
}

const PRIMES: [u64; 6] = [3, 5, 7, 13, 17, 19];

fn tuple_strategy() -> impl Strategy<Value = (Vec<(u64, [u32; 3])>, Vec<(u64, [u32; 3])>)> {
    let exps = prop::array::uniform3(0u32..2).prop_filter("nonempty", |e| e.iter().sum::<u32>() > 0);
    (Just(PRIMES.to_vec()).prop_shuffle(), 1usize..3, 1usize..3, prop::collection::vec(exps, 4)).prop_map(|(ps, a, b, es)| {
        let first = (0..a).map(|i| (ps[i], es[i])).collect();
        let second = (0..b).map(|i| (ps[a + i], es[a + i])).collect();
        (first, second)
    })
}

fn assemble(parts: &[(u64, [u32; 3])]) -> (u64, u64, u64) {
    parts.iter().fold((1, 1, 1), |(m1, m2, d), &(p, e)| (m1 * p.pow(e[0]), m2 * p.pow(e[1]), d * p.pow(e[2])))
}

fn h_oracle(f: &Newform, parts: &[(u64, [u32; 3])]) -> Complex64 {
    let (_, _, d) = assemble(parts);
    parts
        .iter()
        .map(|&(p, [k1, k2, j])| {
            let glue = if (k1 + k2) % 2 == 1 { jacobi((d / p.pow(j)) as i64, p as i64) as f64 } else { 1.0 };
            h_local(f, p, k1, k2, j) * glue
        })
        .product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn twisted_multiplicativity((t1, t2) in tuple_strategy()) {
        for tag in EtaTag::all() {
            let m = mds(tag);
            let ((m1, m2, d), (n1, n2, e)) = (assemble(&t1), assemble(&t2));
            prop_assume!(gcd(m1 * m2 * d * n1 * n2 * e, 2 * m.level()) == 1);
            let whole = m.h(m1 * n1, m2 * n2, d * e).unwrap();
            let glued = m.h(m1, m2, d).unwrap()
                * m.h(n1, n2, e).unwrap()
                * (jacobi(d as i64, (n1 * n2) as i64) * jacobi(e as i64, (m1 * m2) as i64)) as f64;
            prop_assert!(close(whole, glued, 1e-12), "{} vs {}", whole, glued);
            let mut all = t1.clone();
            all.extend(t2.iter().copied());
            prop_assert!(close(whole, h_oracle(m.form(), &all), 1e-12));
        }
    }
}

#[test]
fn h_tilde_sums_over_factorisations() {
    let m = mds(EtaTag::Level11W2);
    for (mm, d) in [(9u64, 5u64), (15, 7), (45, 1), (27, 25), (7, 49)] {
        let mut want = c(0.0);
        for m1 in 1..=mm {
            if mm % m1 == 0 {
                want += m.h(m1, mm / m1, d).unwrap();
            }
        }
        assert!(close(m.h_tilde(mm, d).unwrap(), want, 1e-12), "{mm} {d}");
    }
}

#[test]
fn squarefree_corrections_are_one() {
    for tag in EtaTag::all() {
        let m = mds(tag);
        for n in [1u64, 5, 7, 35, 65, 455] {
            for &ac in m.div() {
                assert_eq!(m.p_d(n, cz(0.3, 1.0), ac).unwrap(), c(1.0));
                assert_eq!(m.q_tilde(n, cz(0.7, -2.0), ac).unwrap(), c(1.0));
            }
        }
    }
}

fn eval_poly(p: &Poly, z1: Complex64, z2: Complex64, u: f64) -> Complex64 {
    p.terms()
        .map(|(e, k)| k.to_f64().unwrap() * z1.powi(e[Z1]) * z2.powi(e[Z2]) * u.powi(e[U]))
        .sum()
}

#[test]
fn p_of_prime_square_is_p2() {
    let m = mds(EtaTag::Level11W2);
    let tab = CorrectionPolyTable::default();
    let s = cz(0.4, 0.9);
    for p in [3u64, 5, 7] {
        let (a, b) = satake(m.form(), p).unwrap().pair();
        let x = c(p as f64).powc(-s);
        let want = eval_poly(tab.p(2).unwrap(), a * x, b * x, (p as f64).sqrt());
        assert!(close(m.p_d(p * p, s, TRIVIAL).unwrap(), want, 1e-13));
    }
}

fn fe_grid() -> [Complex64; 5] {
    [c(0.3), c(0.8), cz(0.5, 1.5), cz(0.1, -0.7), cz(2.0, 0.4)]
}

#[test]
fn correction_functional_equations() {
    for (tag, ns) in [(EtaTag::Level11W2, [9u64, 25, 225, 27, 567]), (EtaTag::Level9W4, [25, 49, 1225, 125, 4375])] {
        let m = mds(tag);
        for &n in &ns {
            let n1 = square_split(n).1 as f64;
            for &ac in m.div() {
                for z in fe_grid() {
                    let lhs = m.p_d(n, z, ac).unwrap();
                    let rhs = c(n1).powc(2.0 - 4.0 * z) * m.p_d(n, 1.0 - z, ac).unwrap();
                    assert!(close(lhs, rhs, 1e-10), "{tag} P n={n} {ac:?} {z}");
                    let lhs = m.q_tilde(n, z, ac).unwrap();
                    let rhs = c(n1).powc(1.0 - 2.0 * z) * m.q_tilde(n, 1.0 - z, ac).unwrap();
                    assert!(close(lhs, rhs, 1e-10), "{tag} Q n={n} {ac:?} {z}");
                }
            }
        }
    }
}

#[test]
fn q_tilde_growth_on_critical_line() {
    for tag in EtaTag::all() {
        let m = mds(tag);
        for n1 in (1..=30u64).filter(|&k| gcd(k, 2 * m.level()) == 1) {
            for n0 in [1u64, 5, 13] {
                let n = n1 * n1 * n0;
                if gcd(n, 2 * m.level()) != 1 {
                    continue;
                }
                for t in [0.0, 3.0, 17.0] {
                    for &ac in m.div() {
                        let q = m.q_tilde(n, cz(0.5, t), ac).unwrap().norm();
                        assert!(q <= 2.0 * (n1 as f64).powf(0.6), "{tag} n={n} t={t}: {q}");
                    }
                }
            }
        }
    }
}

#[test]
fn raw_sum_leading_term() {
    let m = mds(EtaTag::Level11W2);
    let cfg = ZConfig { raw_cutoff: 1.0, ..ZConfig::default() };
    let z = m.z_raw(c(2.0), c(2.5), TRIVIAL, TRIVIAL, &cfg).unwrap();
    assert_eq!(z.value, c(1.0));
    assert_eq!(z.terms, 1);
}

#[test]
fn region_and_pole_guards() {
    let m = mds(EtaTag::Level11W2);
    let cfg = ZConfig::default();
    let e = m.z_rep2(c(2.0), c(1.0), TRIVIAL, TRIVIAL, &cfg).unwrap_err();
    assert_eq!(e.to_string(), "polar hyperplane w=1");
    assert!(matches!(m.z_raw(c(1.5), c(3.0), TRIVIAL, TRIVIAL, &cfg), Err(MdsError::Region { rep: Rep::Raw, .. })));
    assert!(matches!(m.z_rep1(c(0.4), c(1.1), TRIVIAL, TRIVIAL, &cfg), Err(MdsError::Region { rep: Rep::Rep1, .. })));
    assert!(matches!(m.z_rep2(c(0.9), c(3.0), TRIVIAL, TRIVIAL, &cfg), Err(MdsError::Region { rep: Rep::Rep2, .. })));
    assert!(matches!(m.z_rep1(c(3.0), c(3.0), (1, 3), TRIVIAL, &cfg), Err(MdsError::NotInDiv(1, 3))));
    let small = ZConfig { d_max: 300, ..ZConfig::default() };
    let z = m.z_rep1(c(0.8), c(2.5), TRIVIAL, TRIVIAL, &small).unwrap();
    assert!(z.value.re.is_finite() && z.value.norm() > 0.1);
}

#[test]
fn representations_agree_at_two() {
    // Re s = 2 puts rep1 on the approximate functional equation, which needs
    // twists of conductor up to 11 (4 * 3000)^2.
    let m = Mds::new(eta_form(EtaTag::Level11W2, 600_000)).unwrap();
    let cfg = ZConfig { raw_cutoff: 1e5, d_max: 3000, n_max: 3000, ..ZConfig::default() };
    let (s, w) = (c(2.0), c(2.1));
    let raw = m.z_raw(s, w, TRIVIAL, TRIVIAL, &cfg).unwrap();
    let r1 = m.z_rep1(s, w, TRIVIAL, TRIVIAL, &cfg).unwrap();
    let r2 = m.z_rep2(s, w, TRIVIAL, TRIVIAL, &cfg).unwrap();
    assert!((raw.value - r1.value).norm() <= raw.error + r1.error);
    assert!((raw.value - r2.value).norm() <= raw.error + r2.error);
    assert!((raw.value.re - 1.123_89).abs() < 1e-4);
}

#[test]
fn representations_agree_at_three() {
    let cfg = ZConfig::default();
    for (tag, q) in [(EtaTag::Level11W2, 11u64), (EtaTag::Level9W4, 3)] {
        let m = mds(tag);
        for (a2c2, a1c1) in [(TRIVIAL, TRIVIAL), ((-2, q), (-1, 1))] {
            let (s, w) = (c(3.0), c(3.5));
            let raw = m.z_raw(s, w, a2c2, a1c1, &cfg).unwrap();
            for rep in [Rep::Rep1, Rep::Rep2] {
                let z = m.z(rep, s, w, a2c2, a1c1, &cfg).unwrap();
                let diff = (raw.value - z.value).norm();
                assert!(diff <= raw.error + z.error && diff < 1e-6, "{tag} {rep} {diff:e}");
            }
        }
    }
    let z = mds(EtaTag::Level11W2).z_raw(c(3.0), c(3.0), TRIVIAL, TRIVIAL, &cfg).unwrap();
    assert!((z.value.re - 1.030_517_524_9).abs() < 1e-8);
}

#[test]
fn rep1_vector_matches_single_entries() {
    let m = mds(EtaTag::Level9W4);
    let cfg = ZConfig { d_max: 2000, ..ZConfig::default() };
    let v = m.z_rep1_vector(c(3.0), c(3.0), (-1, 1), &cfg).unwrap();
    assert_eq!(v.len(), m.div().len());
    for (z, &ac) in v.iter().zip(m.div()) {
        assert_eq!(z.a2c2, ac);
        let one = m.z_rep1(c(3.0), c(3.0), ac, (-1, 1), &cfg).unwrap();
        assert!((one.value - z.value).norm() < 1e-14);
    }
}

#[test]
fn phi_closed_form_matches_orthogonality_oracle() {
    for tag in EtaTag::all() {
        let m = mds(tag);
        for s in [cz(0.3, 0.2), c(0.8), cz(0.5, 3.0)] {
            for &a1c1 in m.div() {
                let closed = m.phi_matrix(s, a1c1, PhiOptions::default()).unwrap();
                let oracle = m.phi_oracle(s, a1c1).unwrap();
                for (r1, r2) in closed.iter().zip(&oracle) {
                    for (x, y) in r1.iter().zip(r2) {
                        assert!(close(*x, *y, 1e-12), "{tag} {a1c1:?} {s}: {x} vs {y}");
                    }
                }
            }
        }
    }
}

#[test]
fn phi_special_value() {
    let half = c(0.5);
    let p11 = mds(EtaTag::Level11W2).phi_entry(half, TRIVIAL, TRIVIAL, TRIVIAL, PhiOptions::default()).unwrap();
    assert!(p11.norm() < 1e-8);
    let m9 = mds(EtaTag::Level9W4);
    let p9 = m9.phi_entry(half, TRIVIAL, TRIVIAL, TRIVIAL, PhiOptions::default()).unwrap();
    assert!((p9 - m9.root_number() as f64).norm() < 1e-8);
    assert_eq!(m9.root_number(), 1);
}

#[test]
fn psi_structure() {
    let m = mds(EtaTag::Level11W2);
    let w = cz(0.3, 0.5);
    // c2 = 11 shares its prime with c1' = 11 but not with c1 = 1
    assert_eq!(m.psi_entry(w, (1, 11), TRIVIAL, (1, 11)).unwrap(), c(0.0));
    assert_eq!(m.psi_entry(w, (-2, 11), (-1, 1), (2, 11)).unwrap(), c(0.0));
    assert!(m.psi_entry(w, (1, 11), TRIVIAL, (-1, 1)).unwrap().norm() > 1e-6);
    assert!(m.psi_entry(w, TRIVIAL, TRIVIAL, TRIVIAL).unwrap().norm() > 1e-6);
    assert!(matches!(m.psi_entry(c(1.0), TRIVIAL, TRIVIAL, TRIVIAL), Err(MdsError::EntryPole(_))));
}

#[test]
fn gamma1_functional_equation() {
    let cfg = ZConfig { d_max: 300, ..ZConfig::default() };
    let (s, w) = (c(0.8), c(2.5));
    // the reflected side runs at a larger balance and needs a longer table
    let forms: Vec<Mds> = EtaTag::all().iter().map(|&t| Mds::new(eta_form(t, 400_000)).unwrap()).collect();
    for m in &forms {
        let tag = m.form().source();
        for &a1c1 in m.div() {
            let r = m.check_fe_gamma1(s, w, a1c1, &cfg, PhiOptions::default()).unwrap();
            assert!(r.residual < 1e-3, "{tag} {a1c1:?} {}", r.residual);
            assert_eq!(r.lhs.len(), m.div().len());
        }
    }
    let m = &forms[0];
    let broken = m.check_fe_gamma1(s, w, TRIVIAL, &cfg, PhiOptions { zero_n0_product: true }).unwrap();
    assert!(broken.residual > 0.1);
}

#[test]
fn residue_at_two() {
    let cfg = ZConfig { n_max: 300, ..ZConfig::default() };
    for tag in EtaTag::all() {
        let r = mds(tag).residue_check(c(2.0), &[2, 3, 4], TRIVIAL, &cfg).unwrap();
        assert!(r.relative_error < 1e-2, "{tag} {}", r.relative_error);
        assert_eq!(r.samples.len(), 3);
    }
}

#[test]
fn richardson_recovers_polynomials() {
    let f = |x: f64| c(2.0 - 3.0 * x + 0.5 * x * x);
    let pts: Vec<(f64, Complex64)> = [0.1, 0.01, 0.001].iter().map(|&x| (x, f(x))).collect();
    assert!((richardson(&pts) - 2.0).norm() < 1e-12);
}

#[test]
fn sequential_and_default_exec_agree() {
    let m = mds(EtaTag::Level11W2);
    let seq = ZConfig { exec: mdsforge::Exec::Sequential, d_max: 1500, ..ZConfig::default() };
    let def = ZConfig { d_max: 1500, ..ZConfig::default() };
    for rep in [Rep::Raw, Rep::Rep1, Rep::Rep2] {
        let a = m.z(rep, c(3.0), cz(3.0, 0.5), TRIVIAL, (-1, 1), &seq).unwrap();
        let b = m.z(rep, c(3.0), cz(3.0, 0.5), TRIVIAL, (-1, 1), &def).unwrap();
        assert_eq!(a.value, b.value, "{rep}");
    }
}
