//! Numerical checks of the exact identities and inequalities the library
//! relies on. Each check reports the worst residual or margin it saw.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{best_exponent, block_exponent_with_delay, brute_force_block_exponent, f_function, SourceClass};
use crate::codec::{build_code, universality_gap_check};
use crate::delaysource::{
    brute_force_block_entropy, delayed_block_entropy, delayed_block_pmf, sequence_count, PAIR_BUDGET,
};
use crate::error::Result;
use crate::probcore::{
    gallager_e, gallager_identity_residual, kl_raw, l1, marginal_identity_residual, random_joint, tilt, tilt_pmf,
    ErrorEvent, JointPmf, Probabilities, IDENTITY_TOLERANCE,
};
use crate::typesys::{alpha_for, joint_delayed_cap_check, n_type_approx};

/// Slack allowed on inequalities that can be tight.
pub const INEQUALITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Ran below the blocklength at which the bound is claimed.
    Unguaranteed,
    /// Not run; the reason is in the detail.
    Skipped,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Unguaranteed => "unguaranteed",
            Status::Skipped => "skipped",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub status: Status,
    /// Largest residual, or largest violation margin (positive means violated).
    pub worst: f64,
    pub cases: usize,
    pub detail: String,
}

impl CheckReport {
    fn from_residual(name: &str, worst: f64, tol: f64, cases: usize, detail: String) -> Self {
        CheckReport {
            name: name.into(),
            status: if worst <= tol { Status::Pass } else { Status::Fail },
            worst,
            cases,
            detail,
        }
    }

    fn from_violations(name: &str, violations: usize, worst: f64, cases: usize, detail: String) -> Self {
        CheckReport {
            name: name.into(),
            status: if violations == 0 { Status::Pass } else { Status::Fail },
            worst,
            cases,
            detail: format!("{violations} violations; {detail}"),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }
}

/// `count` random joints of the given shape from a seeded generator.
pub fn random_joints(count: usize, rows: usize, cols: usize, seed: u64) -> Vec<JointPmf> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_joint(&mut rng, rows, cols)).collect()
}

/// `rho = 0, 0.1, ..., 1`.
pub fn rho_grid_11() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

fn fits(j: &JointPmf, n: usize, limit: u128) -> bool {
    match (sequence_count(j.rows(), n), sequence_count(j.cols(), n)) {
        (Some(a), Some(b)) => (a as u128) * (b as u128) <= limit,
        _ => false,
    }
}

/// Closed-form block entropy against full enumeration for every `|d| <= n`
/// and every error event.
pub fn check_block_entropy(joints: &[JointPmf], ns: &[usize]) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut skipped = 0;
    for j in joints {
        for &n in ns {
            if !fits(j, n, PAIR_BUDGET) {
                skipped += 1;
                continue;
            }
            for d in -(n as i64)..=n as i64 {
                for e in ErrorEvent::ALL {
                    let a = delayed_block_entropy(j, n, d, e)?;
                    let b = brute_force_block_entropy(j, n, d, e)?;
                    worst = worst.max((a - b).abs());
                    cases += 1;
                }
            }
        }
    }
    Ok(CheckReport::from_residual(
        "block entropy",
        worst,
        IDENTITY_TOLERANCE,
        cases,
        format!("max |closed form - enumeration| over {cases} cases, {skipped} (joint, n) over budget"),
    ))
}

/// Gallager identities on the joint and on both marginals, and the zero-delay
/// collapse `F_i = rho R_i - E^(i)`.
pub fn check_gallager_identities(joints: &[JointPmf], rhos: &[f64]) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let rates = [0.7, 0.9, 1.6];
    for j in joints {
        for &rho in rhos {
            for e in ErrorEvent::ALL {
                worst = worst.max(gallager_identity_residual(e, rho, j)?.abs());
                let rate = rates[e.index() - 1];
                let f = f_function(e, rho, rate, j, 0.0)?;
                worst = worst.max((f - (rho * rate - gallager_e(e, rho, j)?)).abs());
                cases += 2;
            }
            worst = worst.max(marginal_identity_residual(rho, &j.marginal_x())?.abs());
            worst = worst.max(marginal_identity_residual(rho, &j.marginal_y())?.abs());
            cases += 2;
        }
    }
    Ok(CheckReport::from_residual(
        "gallager identities",
        worst,
        IDENTITY_TOLERANCE,
        cases,
        format!("max |residual| over {cases} evaluations"),
    ))
}

/// n-type distance bound `d_v <= 2(K-1)/n` and the delayed likelihood-ratio
/// cap for every `|d| <= n`.
pub fn check_type_caps(joints: &[JointPmf], ns: &[u64]) -> Result<CheckReport> {
    let mut violations = 0;
    let mut unguaranteed = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    for j in joints {
        let k = j.rows() * j.cols();
        for &n in ns {
            let a = n_type_approx(j, n)?;
            let cap = joint_delayed_cap_check(j, &a.ntype, n)?;
            if !a.guaranteed || !cap.guaranteed {
                unguaranteed += 1;
                continue;
            }
            let dv = l1(j.probs(), a.ntype.as_joint().probs());
            let dv_margin = dv - 2.0 * (k - 1) as f64 / n as f64;
            let cap_margin = if cap.log_cap.is_infinite() {
                f64::NEG_INFINITY
            } else {
                cap.log_max_ratio - cap.log_cap
            };
            worst = worst.max(dv_margin).max(cap_margin);
            if dv_margin > INEQUALITY_TOLERANCE || !cap.pass {
                violations += 1;
            }
            cases += 1;
        }
    }
    let mut r = CheckReport::from_violations(
        "n-type bounds",
        violations,
        worst,
        cases,
        format!("worst margin (distance or log-ratio minus bound) over {cases} cases"),
    );
    if unguaranteed > 0 && violations == 0 {
        r.detail
            .push_str(&format!("; {unguaranteed} cases with n < alpha not claimed"));
        if cases == 0 {
            r.status = Status::Unguaranteed;
        }
    }
    Ok(r)
}

/// The exponent of a uniform mixture of `k` block distributions is at most
/// `log2(k) / n` above the largest member exponent. Mixtures are drawn at
/// random with `n <= 4`.
pub fn check_mixture_bound(instances: usize, seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    for _ in 0..instances {
        let n = rng.random_range(1..=4usize);
        let k = rng.random_range(1..=5usize);
        let rho: f64 = rng.random();
        let mut blocks = Vec::with_capacity(k);
        for _ in 0..k {
            let j = random_joint(&mut rng, 2, 2);
            let d = rng.random_range(-(n as i64)..=n as i64);
            blocks.push(delayed_block_pmf(&j, n, d)?);
        }
        let (rows, cols) = (blocks[0].rows(), blocks[0].cols());
        let mut mix = vec![0.0; rows * cols];
        for b in &blocks {
            for (m, p) in mix.iter_mut().zip(b.probs()) {
                *m += p / k as f64;
            }
        }
        let s: f64 = mix.iter().sum();
        mix.iter_mut().for_each(|v| *v /= s);
        let mix = JointPmf::new(rows, cols, mix)?;
        for e in ErrorEvent::ALL {
            let lhs = gallager_e(e, rho, &mix)? / n as f64;
            let mut top = f64::NEG_INFINITY;
            for b in &blocks {
                top = top.max(gallager_e(e, rho, b)? / n as f64);
            }
            let margin = lhs - ((k as f64).log2() / n as f64 + top);
            worst = worst.max(margin);
            if margin > INEQUALITY_TOLERANCE {
                violations += 1;
            }
            cases += 1;
        }
    }
    Ok(CheckReport::from_violations(
        "mixture exponent bound",
        violations,
        worst,
        cases,
        format!("worst margin over {cases} cases"),
    ))
}

/// Distance and divergence bounds on tilted distributions, and the sandwich
/// `P_Y(y) <= (sum_x P(x,y)^(1/(1+rho)))^(1+rho) <= P_Y(y) |X|^rho`, both
/// orientations.
pub fn check_tilt_bounds(joints: &[JointPmf], rhos: &[f64]) -> Result<CheckReport> {
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    let mut note = |margin: f64, worst: &mut f64, cases: &mut usize| {
        *worst = worst.max(margin);
        *cases += 1;
        if margin > INEQUALITY_TOLERANCE {
            violations += 1;
        }
    };
    for j in joints {
        for orient in [j.clone(), j.transpose()] {
            let k = orient.rows() as f64;
            let px = orient.marginal_x();
            let py = orient.marginal_y();
            for &rho in rhos {
                let t = tilt(&orient, rho)?;
                let spread = 2.0 * (1.0 - k.powf(-rho));
                let tx = tilt_pmf(&px, rho)?;
                note(l1(px.probs(), tx.probs()) - spread, &mut worst, &mut cases);
                let via_y = t.joint_via_y();
                note(l1(orient.probs(), via_y.probs()) - spread, &mut worst, &mut cases);
                note(kl_raw(tx.probs(), px.probs())? - k.log2(), &mut worst, &mut cases);
                note(
                    kl_raw(via_y.probs(), orient.probs())? - k.log2(),
                    &mut worst,
                    &mut cases,
                );
                let a = 1.0 / (1.0 + rho);
                for y in 0..orient.cols() {
                    let s: f64 = (0..orient.rows())
                        .map(|x| orient.get(x, y))
                        .filter(|&p| p > 0.0)
                        .map(|p| p.powf(a))
                        .sum::<f64>()
                        .powf(1.0 + rho);
                    let scale = py.get(y).max(f64::MIN_POSITIVE);
                    note((py.get(y) - s) / scale, &mut worst, &mut cases);
                    note((s - py.get(y) * k.powf(rho)) / scale, &mut worst, &mut cases);
                }
            }
        }
    }
    Ok(CheckReport::from_violations(
        "tilted distribution bounds",
        violations,
        worst,
        cases,
        format!("worst margin over {cases} cases"),
    ))
}

/// Delay-weighted exponent against the exponent of the enumerated block.
pub fn check_block_exponent(joints: &[JointPmf], ns: &[usize], rhos: &[f64]) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for j in joints {
        for &n in ns {
            if !fits(j, n, 1 << 16) {
                continue;
            }
            for d in -(n as i64)..=n as i64 {
                let r = d.unsigned_abs() as f64 / n as f64;
                for &rho in rhos {
                    for e in ErrorEvent::ALL {
                        let a = block_exponent_with_delay(e, rho, j, r)?;
                        let b = brute_force_block_exponent(e, rho, j, n, d)?;
                        worst = worst.max((a - b).abs());
                        cases += 1;
                    }
                }
            }
        }
    }
    Ok(CheckReport::from_residual(
        "block exponent",
        worst,
        IDENTITY_TOLERANCE,
        cases,
        format!("max |closed form - enumeration| over {cases} cases"),
    ))
}

/// Mixed-decoder universality inequality, by exact enumeration, for each seed.
pub fn check_universality(
    class: &SourceClass,
    n: usize,
    delays: &[i64],
    rates: (f64, f64),
    seeds: &[u64],
) -> Result<CheckReport> {
    let alpha = alpha_for(class.rows() * class.cols()) as usize;
    if n < alpha {
        return Ok(CheckReport {
            name: "universality".into(),
            status: Status::Unguaranteed,
            worst: f64::NAN,
            cases: 0,
            detail: format!("n = {n} < alpha = {alpha}"),
        });
    }
    if !fits(&class.members()[0], n, PAIR_BUDGET) {
        return Ok(CheckReport {
            name: "universality".into(),
            status: Status::Skipped,
            worst: f64::NAN,
            cases: 0,
            detail: format!("n = {n} exceeds the enumeration budget"),
        });
    }
    let mut violations = 0;
    let mut parts = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    for &seed in seeds {
        let code = build_code(n, class.rows(), class.cols(), rates.0, rates.1, seed)?;
        let u = universality_gap_check(&code, class, delays)?;
        if !u.pass {
            violations += 1;
        }
        worst = worst.max(u.lhs - u.rhs);
        parts.push(format!(
            "seed {seed}: lhs {:.6e} rhs {:.6e} tight rhs {:.6e} ({})",
            u.lhs,
            u.rhs,
            u.rhs_tight,
            if u.pass_tight { "tight holds" } else { "tight fails" }
        ));
    }
    Ok(CheckReport::from_violations(
        "universality",
        violations,
        worst,
        seeds.len(),
        parts.join("; "),
    ))
}

/// Exponents below the region are never positive.
pub fn check_exponent_sign(class: &SourceClass, delta_ratio: f64, resolution: usize) -> Result<CheckReport> {
    let region = crate::bounds::rate_region(class, delta_ratio)?;
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    let mut violations = 0;
    for k in 1..=5 {
        let f = k as f64 / 6.0;
        for (r1, r2) in [
            (region.r1_star * f, region.r2_star + 1.0),
            (region.r1_star + 1.0, region.r2_star * f),
            (region.r3_star * f / 2.0, region.r3_star * f / 2.0),
        ] {
            let v = best_exponent(r1, r2, class.members(), delta_ratio, resolution)?.value;
            worst = worst.max(v);
            cases += 1;
            if v > 0.0 {
                violations += 1;
            }
        }
    }
    Ok(CheckReport::from_violations(
        "exponent sign outside region",
        violations,
        worst,
        cases,
        format!("largest exponent over {cases} rate pairs outside the region"),
    ))
}

/// Options of [`run_suite`].
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub random_joints: usize,
    pub seed: u64,
    /// Blocklengths for the n-type checks; empty means `alpha .. 4 alpha`.
    pub type_ns: Vec<u64>,
    pub delta_ratio: f64,
    pub resolution: usize,
    pub universality_delays: Vec<i64>,
    pub universality_rates: (f64, f64),
    pub universality_seeds: Vec<u64>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            random_joints: 20,
            seed: 1,
            type_ns: Vec::new(),
            delta_ratio: 0.5,
            resolution: 101,
            universality_delays: vec![-1, 0, 1],
            universality_rates: (0.85, 0.85),
            universality_seeds: vec![1],
        }
    }
}

/// Every check on the members of `class` plus random joints of the same shape.
pub fn run_suite(class: &SourceClass, opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let (rows, cols) = (class.rows(), class.cols());
    let mut joints = class.members().to_vec();
    joints.extend(random_joints(opts.random_joints, rows, cols, opts.seed));
    let rhos = rho_grid_11();
    let small_ns: Vec<usize> = (1..=6).filter(|&n| fits(&joints[0], n, 1 << 16)).collect();
    let alpha = alpha_for(rows * cols);
    let type_ns = if opts.type_ns.is_empty() {
        (alpha.max(1)..=4 * alpha.max(1)).collect()
    } else {
        opts.type_ns.clone()
    };
    Ok(vec![
        check_block_entropy(&joints, &small_ns)?,
        check_gallager_identities(&joints, &rhos)?,
        check_type_caps(&joints, &type_ns)?,
        check_mixture_bound(50, opts.seed)?,
        check_tilt_bounds(&joints, &rhos)?,
        check_block_exponent(
            &joints[..joints.len().min(5)],
            &small_ns[..small_ns.len().min(4)],
            &[0.0, 0.25, 0.5, 0.75, 1.0],
        )?,
        check_exponent_sign(class, opts.delta_ratio, opts.resolution)?,
        check_universality(
            class,
            alpha as usize,
            &opts.universality_delays,
            opts.universality_rates,
            &opts.universality_seeds,
        )?,
    ])
}
