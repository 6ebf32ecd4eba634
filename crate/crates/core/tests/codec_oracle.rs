use asyncsw::bounds::SourceClass;
use asyncsw::codec::*;
use asyncsw::delaysource::{delayed_pmf, sequence_from_index};
use asyncsw::probcore::JointPmf;
use asyncsw::typesys::MixedSource;

fn class() -> SourceClass {
    SourceClass::new(vec![
        JointPmf::dsbs(0.1).unwrap(),
        JointPmf::new(2, 2, vec![0.4, 0.1, 0.15, 0.35]).unwrap(),
    ])
    .unwrap()
}

/// Mixture probability as a plain average of delayed probabilities.
fn mixture(ms: &MixedSource, x: &[usize], y: &[usize]) -> f64 {
    let mut s = 0.0;
    for c in ms.components() {
        for &d in ms.delays() {
            s += delayed_pmf(c, ms.n(), d, x, y).unwrap();
        }
    }
    s / (ms.components().len() * ms.delays().len()) as f64
}

/// Reference maximum-likelihood decisions, checked against the library for
/// every bin pair, then the exact error of the library's decisions summed
/// directly from the delayed probabilities.
fn check_against_reference(
    n: usize,
    r1: f64,
    r2: f64,
    seed: u64,
    score: impl Fn(&[usize], &[usize]) -> f64,
    rule: &DecodeRule,
) {
    let code = build_code(n, 2, 2, r1, r2, seed).unwrap();
    let mut dec = Decoder::new(&code, rule).unwrap();
    let (m1, m2) = code.bin_counts();
    let mut decisions = std::collections::HashMap::new();
    for b1 in 0..m1 as u32 {
        for b2 in 0..m2 as u32 {
            let got = dec.decode(b1, b2).unwrap();
            let (xs, ys) = (code.members_x(b1), code.members_y(b2));
            if xs.is_empty() || ys.is_empty() {
                assert_eq!(got, None);
                continue;
            }
            let (gx, gy) = got.unwrap();
            let mut scores = Vec::new();
            for &x in xs {
                for &y in ys {
                    let v = score(
                        &sequence_from_index(x as u64, 2, n),
                        &sequence_from_index(y as u64, 2, n),
                    );
                    scores.push(((x, y), v));
                }
            }
            let best = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
            let near: Vec<(u32, u32)> = scores
                .iter()
                .filter(|s| s.1 >= best * (1.0 - 1e-9))
                .map(|s| s.0)
                .collect();
            assert!(
                near.contains(&(gx, gy)),
                "bins ({b1}, {b2}): {:?} not among {near:?}",
                (gx, gy)
            );
            if near.len() == 1 {
                assert_eq!(near[0], (gx, gy));
            }
            decisions.insert((b1, b2), (gx, gy));
        }
    }
    assert!(decisions.len() > 1);
    let sources: Vec<(JointPmf, i64)> = class()
        .members()
        .iter()
        .flat_map(|m| [-1i64, 0, 1].map(|d| (m.clone(), d)))
        .collect();
    let lib = exact_errors(&dec, &sources).unwrap();
    for (k, (m, d)) in sources.iter().enumerate() {
        let mut err = 0.0;
        for x in 0..(1u32 << n) {
            for y in 0..(1u32 << n) {
                if decisions[&(code.bin_x(x), code.bin_y(y))] != (x, y) {
                    err += delayed_pmf(
                        m,
                        n,
                        *d,
                        &sequence_from_index(x as u64, 2, n),
                        &sequence_from_index(y as u64, 2, n),
                    )
                    .unwrap();
                }
            }
        }
        assert!(
            (err - lib[k]).abs() < 1e-12,
            "source {k}: reference {err} library {}",
            lib[k]
        );
        assert!((exact_error_probability(&code, rule, m, *d).unwrap() - err).abs() < 1e-12);
    }
}

#[test]
fn mixed_decoder_matches_reference_at_n3() {
    let c = class();
    for seed in [1, 2, 3] {
        for (r1, r2) in [(0.5, 0.5), (0.7, 0.4), (1.0, 0.34)] {
            let ms = MixedSource::from_class(&c, 3, vec![-1, 0, 1]).unwrap();
            let rule = DecodeRule::Mixed(ms.clone());
            check_against_reference(3, r1, r2, seed, |x, y| mixture(&ms, x, y), &rule);
        }
    }
}

#[test]
fn oracle_decoder_matches_reference_at_n3() {
    let src = JointPmf::new(2, 2, vec![0.4, 0.1, 0.15, 0.35]).unwrap();
    for d in [-1, 0, 1] {
        let rule = DecodeRule::Oracle { source: src.clone(), d };
        check_against_reference(3, 0.5, 0.6, 7, |x, y| delayed_pmf(&src, 3, d, x, y).unwrap(), &rule);
    }
}

#[test]
fn decoder_entry_points_agree_at_n2() {
    let c = class();
    let n = 2;
    let delays = vec![-1, 0, 1];
    let code = build_code(n, 2, 2, 0.6, 0.8, 11).unwrap();
    let rule = DecodeRule::mixed(&c, n, delays.clone()).unwrap();
    let ms = match &rule {
        DecodeRule::Mixed(ms) => ms.clone(),
        _ => unreachable!(),
    };
    let mut dec = Decoder::new(&code, &rule).unwrap();
    for x in 0..4u32 {
        for y in 0..4u32 {
            let (xs, ys) = (sequence_from_index(x as u64, 2, n), sequence_from_index(y as u64, 2, n));
            let want = mixture(&ms, &xs, &ys).ln();
            let got = dec.score(x, y);
            assert!(got == want || (got - want).abs() < 1e-12, "{x} {y}: {got} vs {want}");
            let (b1, b2) = (code.bin_x(x), code.bin_y(y));
            let pair = dec.decode(b1, b2).unwrap().unwrap();
            assert_eq!(dec.decode_sequences(x, y), pair);
            let (sx, sy) = decode(&code, &rule, b1, b2).unwrap();
            assert_eq!(
                (sx, sy),
                (
                    sequence_from_index(pair.0 as u64, 2, n),
                    sequence_from_index(pair.1 as u64, 2, n)
                )
            );
        }
    }
    let per: Vec<f64> = c
        .members()
        .iter()
        .flat_map(|m| {
            delays
                .iter()
                .map(|&d| exact_error_probability(&code, &rule, m, d).unwrap())
        })
        .collect();
    let worst = per.iter().copied().fold(0.0, f64::max);
    assert!((sup_max_error(&code, &rule, &c, &delays).unwrap() - worst).abs() < 1e-15);
    assert!(universality_gap_check(&code, &c, &delays).is_err());

    let (dcode, drule) = dummy_bound_code(n, 0.6, 0.8, &c, 11).unwrap();
    assert_eq!(dcode, code);
    match drule {
        DecodeRule::Mixed(m) => assert_eq!(m.delays(), &[-2, -1, 0, 1, 2]),
        _ => panic!("dummy rule is a mixture"),
    }
}

#[test]
fn exact_and_sampled_errors_agree() {
    let c = class();
    let code = build_code(4, 2, 2, 0.75, 0.75, 5).unwrap();
    let rule = DecodeRule::mixed(&c, 4, vec![-1, 0, 1]).unwrap();
    let mut dec = Decoder::new(&code, &rule).unwrap();
    let m = &c.members()[1];
    let exact = exact_error_probability(&code, &rule, m, 1).unwrap();
    let mc = monte_carlo_error(&mut dec, m, 1, 20_000, 9, 0).unwrap();
    assert!(mc.lo - 0.01 <= exact && exact <= mc.hi + 0.01, "{exact} vs {mc:?}");
}

#[test]
fn codes_are_reproducible() {
    let a = build_code(10, 2, 2, 0.6, 0.7, 42).unwrap();
    let b = build_code(10, 2, 2, 0.6, 0.7, 42).unwrap();
    let c = build_code(10, 2, 2, 0.6, 0.7, 43).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn budgets_are_enforced() {
    assert!(matches!(
        build_code(23, 2, 2, 0.5, 0.5, 0),
        Err(asyncsw::Error::BudgetExceeded { .. })
    ));
    let code = build_code(13, 2, 2, 0.9, 0.9, 0).unwrap();
    let c = SourceClass::singleton(JointPmf::dsbs(0.1).unwrap());
    let rule = DecodeRule::mixed(&c, 13, vec![0]).unwrap();
    assert!(matches!(
        exact_error_probability(&code, &rule, &c.members()[0], 0),
        Err(asyncsw::Error::BudgetExceeded { .. })
    ));
}
