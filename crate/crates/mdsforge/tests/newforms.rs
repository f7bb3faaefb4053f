mod common;

use mdsforge::characters::{gcd, CharSpec};
use mdsforge::newforms::*;

#[test]
fn level11_initial_coefficients() {
    let f = eta_form(EtaTag::Level11W2, 20);
    let expect = [1, -2, -1, 2, 1, 2, -2, 0, -2, -2, 1, -2, 4, 4, -1, -4, -2, 4, 0, 2];
    assert_eq!(f.coefficients(), &expect[..]);
    assert!((f.lambda(11) - 11f64.powf(-0.5)).abs() < 1e-15);
    assert_eq!((f.n0(), f.n1()), (11, 1));
}

#[test]
fn level9_initial_coefficients() {
    let f = eta_form(EtaTag::Level9W4, 3000);
    assert_eq!(f.a(1), 1);
    assert_eq!(f.a(4), -8);
    assert_eq!(f.a(7), 20);
    assert!((1..=3000).filter(|n| n % 3 != 1).all(|n| f.a(n) == 0));
    assert_eq!((f.n0(), f.n1()), (1, 3));
}

#[test]
fn expansions_agree_with_naive_products() {
    for tag in EtaTag::all() {
        assert_eq!(eta_coefficients(tag, 4000), eta_coefficients_naive(tag, 4000), "{tag}");
    }
}

#[test]
fn built_in_forms_validate() {
    for tag in EtaTag::all() {
        let r = validate(&eta_form(tag, 10_000), 10_000);
        assert!(r.passed(), "{tag}: {:?}", &r.violations[..r.violations.len().min(3)]);
        assert!(r.checked_pairs > 0);
    }
}

#[test]
fn integer_multiplicativity() {
    for tag in EtaTag::all() {
        let f = eta_form(tag, 1_000_000);
        for m in 1..=1000usize {
            for n in (1..=1000usize).step_by(7) {
                if gcd(m as u64, n as u64) == 1 {
                    assert_eq!(f.a(m * n), f.a(m) * f.a(n), "{tag} {m} {n}");
                }
            }
        }
    }
}

#[test]
fn violations_flagged() {
    let mut a = eta_coefficients(EtaTag::Level11W2, 200);
    a[5] += 1;
    let f = Newform::new(11, 2, a, "bad").unwrap();
    let r = validate(&f, 200);
    assert!(r.violations.iter().any(|v| matches!(v, Violation::Multiplicativity { m: 2, n: 3 } | Violation::Multiplicativity { m: 3, n: 2 })));

    let mut a = eta_coefficients(EtaTag::Level11W2, 200);
    a[1] = 5;
    let f = Newform::new(11, 2, a, "bad").unwrap();
    let r = validate(&f, 200);
    assert!(r.violations.iter().any(|v| matches!(v, Violation::DivisorBound { n: 2, .. })));

    let mut a = eta_coefficients(EtaTag::Level11W2, 200);
    a[10] = 2;
    let f = Newform::new(11, 2, a, "bad").unwrap();
    assert!(validate(&f, 200).violations.iter().any(|v| matches!(v, Violation::Special { p: 11 })));
}

#[test]
fn csv_round_trip_and_errors() {
    let f = eta_form(EtaTag::Level11W2, 500);
    let g = parse_coefficients(&write_coefficients(&f), "mem").unwrap();
    assert_eq!(g.coefficients(), f.coefficients());
    assert_eq!((g.level(), g.weight()), (11, 2));

    let bad_first = "# level=11 weight=2 count=2\n1,2\n2,-2\n";
    assert_eq!(parse_coefficients(bad_first, "mem").unwrap_err().to_string(), "a(1) must be 1");
    let even = "# level=8 weight=2 count=1\n1,1\n";
    assert_eq!(parse_coefficients(even, "mem").unwrap_err().to_string(), "unsupported level: even");
    assert!(parse_coefficients("# level=27 weight=2 count=1\n1,1\n", "mem").is_err());
    assert!(parse_coefficients("# level=11 weight=2 count=2\n1,1\n3,0\n", "mem").is_err());
    assert!(parse_coefficients("1,1\n", "mem").is_err());
}

#[test]
fn load_from_file() {
    let f = eta_form(EtaTag::Level9W4, 300);
    let path = std::env::temp_dir().join(format!("mdsforge-nf-{}.csv", std::process::id()));
    std::fs::write(&path, write_coefficients(&f)).unwrap();
    let g = load_coefficients(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(g.coefficients(), f.coefficients());
    assert!(g.source().starts_with("file:"));
}

#[test]
fn ingested_rank_one_curve() {
    let a = common::curve_37a(20);
    assert_eq!(&a[..7], &[1, -2, -3, 2, -2, 6, -1]);
    let f = common::form_37a(5000);
    assert!(validate(&f, 5000).passed());
}

#[test]
fn satake_parameters() {
    let f = eta_form(EtaTag::Level11W2, 2000);
    match satake(&f, 2).unwrap() {
        SatakeData::Unramified { alpha, beta, .. } => {
            assert!(((alpha + beta).re + 2f64.sqrt()).abs() < 1e-14);
            assert!(((alpha * beta) - 1.0).norm() < 1e-14);
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(satake(&f, 11).unwrap(), SatakeData::Special { p: 11, alpha: 11f64.powf(-0.5) });
    let g = eta_form(EtaTag::Level9W4, 2000);
    assert_eq!(satake(&g, 3).unwrap(), SatakeData::Supercuspidal { p: 3 });
    assert!(satake(&f, 3001).is_err());
    for h in [&f, &g] {
        for p in mdsforge::characters::primes_up_to(1000) {
            if h.level() % p == 0 {
                continue;
            }
            let (a, b) = satake(h, p).unwrap().pair();
            assert!((a.norm() - 1.0).abs() < 1e-12 && (b.norm() - 1.0).abs() < 1e-12, "p={p}");
        }
    }
}

#[test]
fn conductors() {
    let f = eta_form(EtaTag::Level11W2, 100);
    let c = conductor_data(&f, None).unwrap();
    assert_eq!((c.n0, c.n1, c.sym2, c.twisted_bound, c.twisted), (11, 1, 121, 88, 11));
    let g = eta_form(EtaTag::Level9W4, 100);
    let c = conductor_data(&g, None).unwrap();
    assert_eq!((c.n0, c.n1, c.sym2), (1, 3, 27));
    // chi_5 has conductor 5, chi_{-1} conductor 4, chi_3 conductor 12
    assert_eq!(conductor_data(&f, Some(&CharSpec::quadratic(5).unwrap())).unwrap().twisted, 11 * 25);
    assert_eq!(conductor_data(&f, Some(&CharSpec::from_ac(-1, 1).unwrap())).unwrap().twisted, 11 * 16);
    assert_eq!(conductor_data(&f, Some(&CharSpec::quadratic(11).unwrap())).unwrap_err(), NewformError::NotCoprime);
    assert_eq!(twisted_conductor(&g, &CharSpec::quadratic(5).unwrap()), 9 * 25);
    assert_eq!(twisted_conductor(&g, &CharSpec::from_ac(1, 3).unwrap()), 9 * 16);
}
