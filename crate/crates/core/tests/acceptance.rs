//! Acceptance criteria, one pass/fail line each. Exits nonzero if any fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use asyncsw::bounds::{best_exponent, rate_region, SourceClass};
use asyncsw::codec::{build_code, monte_carlo_sup_max, universality_gap_check, DecodeRule, Decoder};
use asyncsw::delaysource::dummy_delay_set;
use asyncsw::probcore::{random_joint, JointPmf};
use asyncsw::verify::{
    check_block_entropy, check_gallager_identities, check_mixture_bound, check_tilt_bounds, check_type_caps,
    random_joints, rho_grid_11, CheckReport, Status,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RESIDUAL_TOL: f64 = 1e-9;
const SWEEP_POINTS: usize = 21;
const SWEEP_FROM: f64 = 0.55;
const SWEEP_TO: f64 = 0.95;
const RHO_GRID: usize = 101;
const SEEDS: [u64; 3] = [1, 2, 3];
const TRIALS: u64 = 10_000;
const DELAYS: [i64; 3] = [-1, 0, 1];
const OPERATING_RATE: f64 = 0.85;
const BELOW_RATE: f64 = 0.40;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn from_report(r: &CheckReport) -> Verdict {
    verdict(
        r.status == Status::Pass,
        format!("{} worst {:.3e} over {} cases", r.status, r.worst, r.cases),
    )
}

fn residual_verdict(r: &CheckReport) -> Verdict {
    verdict(
        r.status == Status::Pass && r.worst <= RESIDUAL_TOL,
        format!(
            "max residual {:.3e} (tolerance {RESIDUAL_TOL:.0e}) over {} cases",
            r.worst, r.cases
        ),
    )
}

fn dsbs() -> SourceClass {
    SourceClass::singleton(JointPmf::dsbs(0.1).unwrap())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn c1() -> Verdict {
    let joints = random_joints(50, 2, 2, 101);
    let r = check_block_entropy(&joints, &[2, 3, 4, 5, 6]).unwrap();
    residual_verdict(&r)
}

fn c2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let joints: Vec<JointPmf> = (0..100)
        .map(|_| {
            let (r, c) = (rng.random_range(2..=4), rng.random_range(2..=4));
            random_joint(&mut rng, r, c)
        })
        .collect();
    let r = check_gallager_identities(&joints, &rho_grid_11()).unwrap();
    residual_verdict(&r)
}

fn c3() -> Verdict {
    let joints = random_joints(50, 2, 2, 103);
    let r = check_type_caps(&joints, &[12, 16, 24, 48]).unwrap();
    from_report(&r)
}

fn c4() -> Verdict {
    let class = dsbs();
    let mut pass = true;
    let mut parts = Vec::new();
    for seed in SEEDS {
        let code = build_code(12, 2, 2, OPERATING_RATE, OPERATING_RATE, seed).unwrap();
        let u = universality_gap_check(&code, &class, &DELAYS).unwrap();
        pass &= u.pass && u.rhs - u.lhs > 0.0;
        parts.push(format!(
            "seed {seed}: lhs {:.4} rhs {:.3e} slack {:.3e} (tight rhs {:.3e}, tight slack {:.3e})",
            u.lhs,
            u.rhs,
            u.rhs - u.lhs,
            u.rhs_tight,
            u.rhs_tight - u.lhs
        ));
    }
    verdict(pass, parts.join("; "))
}

fn c5() -> Verdict {
    let mix = check_mixture_bound(200, 105).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(205);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let (r, c) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let j = random_joint(&mut rng, r, c);
        let rho: f64 = rng.random();
        let t = check_tilt_bounds(&[j], &[rho]).unwrap();
        if t.status != Status::Pass {
            violations += 1;
        }
        worst = worst.max(t.worst);
    }
    verdict(
        mix.status == Status::Pass && violations == 0,
        format!(
            "mixture bound: {} ({}); distance bounds: {violations} violating instances of 200, worst margin {worst:.3e}",
            mix.status, mix.detail
        ),
    )
}

fn sweep() -> Vec<(f64, f64)> {
    let class = dsbs();
    (0..SWEEP_POINTS)
        .map(|k| {
            let r = SWEEP_FROM + (SWEEP_TO - SWEEP_FROM) * k as f64 / (SWEEP_POINTS - 1) as f64;
            (r, best_exponent(r, r, class.members(), 0.5, RHO_GRID).unwrap().value)
        })
        .collect()
}

fn sweep_check(points: &[(f64, f64)], threshold: f64) -> Verdict {
    let step = (SWEEP_TO - SWEEP_FROM) / (SWEEP_POINTS - 1) as f64;
    let bad: Vec<String> = points
        .iter()
        .filter(|&&(r, e)| (r < threshold - step && e > 0.0) || (r > threshold + step && e <= 0.0))
        .map(|(r, e)| format!("R={r:.2}: {e:.3e}"))
        .collect();
    let detail = if bad.is_empty() {
        format!("threshold {threshold:.6}, sign changes within one grid step")
    } else {
        format!("threshold {threshold:.6}, wrong sign at {}", bad.join(", "))
    };
    verdict(bad.is_empty(), detail)
}

fn c6() -> Verdict {
    let r = rate_region(&dsbs(), 0.5).unwrap();
    sweep_check(&sweep(), r.r1_star)
}

fn c6b() -> Verdict {
    let r = rate_region(&dsbs(), 0.5).unwrap();
    sweep_check(&sweep(), r.r1_star.max(r.r3_star / 2.0))
}

/// Sup-max Monte Carlo estimate and its interval width for one run.
fn sup_max(n: usize, rate: f64, seed: u64, dummy: bool) -> (f64, f64) {
    let class = dsbs();
    let code = build_code(n, 2, 2, rate, rate, seed).unwrap();
    let hyp = if dummy { dummy_delay_set(n) } else { DELAYS.to_vec() };
    let rule = DecodeRule::mixed(&class, n, hyp).unwrap();
    let mut dec = Decoder::new(&code, &rule).unwrap();
    let s = monte_carlo_sup_max(&mut dec, &class, &DELAYS, TRIALS, seed).unwrap();
    (s.worst.2.estimate, s.worst.2.width())
}

fn medians(rate: f64, ns: &[usize], dummy: bool) -> Vec<f64> {
    ns.iter()
        .map(|&n| median(SEEDS.iter().map(|&s| sup_max(n, rate, s, dummy).0).collect()))
        .collect()
}

fn c7() -> Verdict {
    let m = medians(OPERATING_RATE, &[8, 12, 16], false);
    let below = medians(BELOW_RATE, &[16], false)[0];
    let pass = m[0] > m[1] && m[1] > m[2] && below > 0.5;
    verdict(
        pass,
        format!(
            "median sup-max at R={OPERATING_RATE}: n=8 {:.4}, n=12 {:.4}, n=16 {:.4}; at R={BELOW_RATE}, n=16: {below:.4}",
            m[0], m[1], m[2]
        ),
    )
}

fn c8() -> Verdict {
    let mut close = true;
    let mut parts = Vec::new();
    for seed in SEEDS {
        let (known, wk) = sup_max(16, OPERATING_RATE, seed, false);
        let (dummy, wd) = sup_max(16, OPERATING_RATE, seed, true);
        let allowed = 2.0 * wk.max(wd);
        close &= (dummy - known).abs() <= allowed;
        parts.push(format!(
            "seed {seed}: known {known:.4} dummy {dummy:.4} |diff| {:.4} allowed {allowed:.4}",
            (dummy - known).abs()
        ));
    }
    let d = medians(OPERATING_RATE, &[8, 12, 16], true);
    let k = medians(OPERATING_RATE, &[8, 12, 16], false);
    let decreasing = d[0] > d[1] && d[1] > d[2] && k[0] > k[1] && k[1] > k[2];
    parts.push(format!(
        "dummy medians {:.4} > {:.4} > {:.4}, known medians {:.4} > {:.4} > {:.4}",
        d[0], d[1], d[2], k[0], k[1], k[2]
    ));
    verdict(close && decreasing, parts.join("; "))
}

fn c9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let src = configs.join("dsbs_p010.json");
    let pair = configs.join("binary_pair.json");
    let (src, pair) = (src.to_str().unwrap(), pair.to_str().unwrap());
    let commands: Vec<Vec<&str>> = vec![
        vec!["region", "--source", src, "--sweep", "0,0.25,0.5,1"],
        vec![
            "exponent",
            "--source",
            src,
            "--delay-ratio",
            "0.5",
            "--sweep",
            "0.55,0.95,21",
        ],
        vec![
            "simulate",
            "--source",
            pair,
            "--delay-bound",
            "1",
            "--rates",
            "0.85,0.85",
            "--n-list",
            "4,10",
            "--trials",
            "2000",
            "--seed",
            "1,2",
            "--decoders",
            "mixed,oracle,dummy",
        ],
        vec!["verify", "--source", pair, "--delay-ratio", "0.5"],
    ];
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for args in &commands {
        for format in ["csv", "json"] {
            let mut outputs = Vec::new();
            for k in 0..2 {
                let out = dir.path().join(format!("{}_{format}_{k}", args[0]));
                let status = Command::new(env!("CARGO_BIN_EXE_asyncsw"))
                    .args(args)
                    .args(["--format", format, "--out", out.to_str().unwrap()])
                    .output()
                    .unwrap()
                    .status;
                if !status.success() {
                    mismatches.push(format!("{} {format} exited with {status}", args[0]));
                }
                outputs.push(std::fs::read(&out).unwrap_or_default());
                runs += 1;
            }
            if outputs[0] != outputs[1] || outputs[0].is_empty() {
                mismatches.push(format!("{} {format}", args[0]));
            }
        }
    }
    let detail = if mismatches.is_empty() {
        format!("{runs} runs, all pairs byte-identical")
    } else {
        format!("differences: {}", mismatches.join(", "))
    };
    verdict(mismatches.is_empty(), detail)
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Duration,
    primary: bool,
    run: fn() -> Verdict,
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria = [
        Criterion {
            id: "1",
            name: "block entropy closed form",
            limit: secs(10),
            primary: true,
            run: c1,
        },
        Criterion {
            id: "2",
            name: "Gallager identities and zero-delay collapse",
            limit: secs(5),
            primary: true,
            run: c2,
        },
        Criterion {
            id: "3",
            name: "n-type distance and likelihood-ratio caps",
            limit: secs(10),
            primary: true,
            run: c3,
        },
        Criterion {
            id: "4",
            name: "universality inequality, n = 12",
            limit: secs(300),
            primary: true,
            run: c4,
        },
        Criterion {
            id: "5",
            name: "mixture exponent and tilted distance bounds",
            limit: secs(10),
            primary: true,
            run: c5,
        },
        Criterion {
            id: "6",
            name: "exponent sign across the R1 threshold",
            limit: secs(30),
            primary: true,
            run: c6,
        },
        Criterion {
            id: "6b",
            name: "exponent sign across the binding threshold",
            limit: secs(30),
            primary: false,
            run: c6b,
        },
        Criterion {
            id: "7",
            name: "Monte Carlo error trend",
            limit: secs(600),
            primary: true,
            run: c7,
        },
        Criterion {
            id: "8",
            name: "dummy-bound decoder",
            limit: secs(600),
            primary: true,
            run: c8,
        },
        Criterion {
            id: "9",
            name: "CLI determinism",
            limit: secs(600),
            primary: true,
            run: c9,
        },
    ];
    let mut failed = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let v = (c.run)();
        let elapsed = start.elapsed();
        let in_time = elapsed <= c.limit;
        let pass = v.pass && in_time;
        let tag = if pass { "PASS" } else { "FAIL" };
        let kind = if c.primary { "" } else { " (companion)" };
        println!(
            "{tag} {:>2} {}{kind}: {} [{:.1} s, limit {} s{}]",
            c.id,
            c.name,
            v.detail,
            elapsed.as_secs_f64(),
            c.limit.as_secs(),
            if in_time { "" } else { ", over time" }
        );
        if !pass && c.primary {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("all primary criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("failed primary criteria: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
