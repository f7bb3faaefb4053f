mod common;

use mdsforge::characters::{gcd, square_split, CharSpec};
use mdsforge::lfuncs::{attach_root_number, twist_root_number, NONZERO_THRESHOLD, ZERO_THRESHOLD};
use mdsforge::mds::Mds;
use mdsforge::moment::*;
use mdsforge::newforms::*;
use mdsforge::Exec;
use std::sync::OnceLock;

const XS: [f64; 4] = [256.0, 512.0, 1024.0, 2048.0];

fn mds(tag: EtaTag) -> &'static Mds {
    static M: OnceLock<Vec<Mds>> = OnceLock::new();
    let v = M.get_or_init(|| {
        EtaTag::all()
            .iter()
            .map(|&t| {
                let need = required_table_len(eta_form(t, 10).level(), 2048.0, 1.0);
                Mds::new(eta_form(t, need.max(DEFAULT_TABLE_LEN))).unwrap()
            })
            .collect()
    });
    &v[EtaTag::all().iter().position(|&t| t == tag).unwrap()]
}

fn deviations(tag: EtaTag, kind: BumpKind) -> Vec<f64> {
    let w = SmoothWeight::new(kind);
    XS.iter().map(|&x| moment_report(mds(tag), x, &w, Exec::default()).unwrap().deviation).collect()
}

#[test]
fn moment_tracks_main_term() {
    for tag in EtaTag::all() {
        let dev = deviations(tag, BumpKind::Standard);
        assert!(dev.iter().all(|&d| d < 0.5), "{tag} {dev:?}");
        assert!(dev[3] < 0.1 && dev[3] < dev[0], "{tag} {dev:?}");
    }
}

#[test]
fn skewed_weight_gives_same_asymptotics() {
    for tag in EtaTag::all() {
        let dev = deviations(tag, BumpKind::Skewed);
        assert!(dev.iter().all(|&d| d < 0.5), "{tag} {dev:?}");
        assert!(dev[2] < 0.1 && dev[3] < 0.1, "{tag} {dev:?}");
    }
}

#[test]
fn main_term_scaling_and_square_doubling() {
    let w = SmoothWeight::default();
    for tag in EtaTag::all() {
        let f = mds(tag).form();
        let a = main_term(f, 1, 300.0, &w).unwrap();
        let b = main_term(f, 1, 1200.0, &w).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
    }
    let f9 = mds(EtaTag::Level9W4).form();
    let plus = main_term(f9, 1, 500.0, &w).unwrap();
    assert_eq!(main_term(f9, -1, 500.0, &w).unwrap(), 0.0);
    let f11 = mds(EtaTag::Level11W2).form();
    assert_eq!(main_term(f11, 1, 500.0, &w).unwrap(), main_term(f11, -1, 500.0, &w).unwrap());
    let euler = (1.0 - 1.0 / 2.0) * (1.0 - 1.0 / 3.0);
    let direct = 2.0 * 500f64.sqrt() * w.mellin_half() * sym2_value(f9).unwrap() * euler;
    assert!((plus - direct).abs() < 1e-12 * plus);
}

#[test]
fn moment_terms_and_twist_signs() {
    let m = mds(EtaTag::Level11W2);
    let (total, terms, twists) = moment_m(m, 300.0, &SmoothWeight::default(), Exec::default()).unwrap();
    assert_eq!(terms, (300..=600).filter(|&d| gcd(d, 22) == 1).count());
    assert!(total > 0.0);
    let forced: Vec<_> = twists.iter().filter(|t| t.root_number == -1).collect();
    assert!(!forced.is_empty());
    for t in forced {
        assert!(t.central.abs() < 1e-6, "d0={} {}", t.d0, t.central);
    }
    for t in &twists {
        let spec = CharSpec::quadratic(t.d0 as i64).unwrap();
        assert_eq!(twist_root_number(m.form(), &spec).unwrap(), t.root_number);
        assert_eq!(square_split(t.d0).0, t.d0);
    }
}

#[test]
fn sequential_matches_parallel() {
    let m = mds(EtaTag::Level9W4);
    let w = SmoothWeight::new(BumpKind::Skewed);
    let a = moment_m(m, 200.0, &w, Exec::Sequential).unwrap().0;
    let b = moment_m(m, 200.0, &w, Exec::default()).unwrap().0;
    assert_eq!(a, b);
}

#[test]
fn input_guards() {
    let m = mds(EtaTag::Level11W2);
    assert!(matches!(moment_m(m, 2.0, &SmoothWeight::default(), Exec::Sequential), Err(MomentError::SmallX(_))));
    let short = Mds::new(eta_form(EtaTag::Level11W2, 20_000)).unwrap();
    assert!(matches!(moment_m(&short, 2048.0, &SmoothWeight::default(), Exec::Sequential), Err(MomentError::Table { .. })));
}

#[test]
fn least_twists_of_built_in_forms() {
    for tag in EtaTag::all() {
        let s = least_twist(mds(tag).form(), 50).unwrap();
        assert_eq!(s.outcome, SearchOutcome::Found(1), "{tag}");
        assert!(s.skipped.is_empty());
        assert_eq!(s.convention, D0_CONVENTION);
    }
}

#[test]
fn least_twist_skips_sign_forced_zeros() {
    let mut f = common::form_37a(40_000);
    attach_root_number(&mut f).unwrap();
    let s = least_twist(&f, 50).unwrap();
    assert_eq!(s.outcome, SearchOutcome::Found(5));
    let skipped: Vec<u64> = s.skipped.iter().map(|t| t.d0).collect();
    assert_eq!(skipped, [1, 3]);
    for t in &s.skipped {
        assert_eq!(t.root_number, -1);
        assert!(t.central.abs() < ZERO_THRESHOLD);
    }
    let l5 = mdsforge::lfuncs::L_twisted(num_complex::Complex64::new(0.5, 0.0), &f, &CharSpec::quadratic(5).unwrap(), &Default::default())
        .unwrap();
    assert!(l5.value.re > NONZERO_THRESHOLD);
}

#[test]
fn candidates_are_odd_squarefree_coprime() {
    assert_eq!(twist_candidates(11, 40), [1, 3, 5, 7, 13, 15, 17, 19, 21, 23, 29, 31, 35, 37, 39]);
    assert_eq!(twist_candidates(9, 20), [1, 5, 7, 11, 13, 17, 19]);
}

#[test]
fn bump_mellin_at_half() {
    for kind in [BumpKind::Standard, BumpKind::Skewed] {
        let w = SmoothWeight::new(kind);
        let n = 200_000;
        let h = 1.0 / n as f64;
        let direct: f64 = (0..n).map(|i| 1.0 + (i as f64 + 0.5) * h).map(|x| w.eval(x) * x.powf(-0.5) * h).sum();
        assert!((direct - w.mellin_half()).abs() < 1e-9, "{kind:?}");
        assert!((w.mellin(num_complex::Complex64::new(0.5, 0.0)).re - w.mellin_half()).abs() < 1e-12);
    }
}
