//! Rate regions, converse floors and error-exponent bounds for a finite
//! class of sources observed with a delay of bounded ratio.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::delaysource::{delayed_block_pmf, DelaySpec};
use crate::error::{Error, Result};
use crate::probcore::{
    binary_entropy, entropy, gallager_e, gallager_e_pmf, joint_quantities, kl_raw, l1, random_pmf, tilt, ErrorEvent,
    JointPmf, Probabilities,
};

/// A finite, nonempty set of joint distributions over a common alphabet pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceClass {
    members: Vec<JointPmf>,
}

impl SourceClass {
    pub fn new(members: Vec<JointPmf>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Config("source class has no members".into()))?;
        let shape = (first.rows(), first.cols());
        if members.iter().any(|m| (m.rows(), m.cols()) != shape) {
            return Err(Error::ShapeMismatch(
                "source class members differ in alphabet sizes".into(),
            ));
        }
        Ok(SourceClass { members })
    }

    pub fn singleton(j: JointPmf) -> Self {
        SourceClass { members: vec![j] }
    }

    pub fn members(&self) -> &[JointPmf] {
        &self.members
    }

    pub fn rows(&self) -> usize {
        self.members[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.members[0].cols()
    }

    pub fn contains(&self, j: &JointPmf) -> bool {
        self.members.iter().any(|m| m.approx_eq(j, 1e-12))
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange(format!("{name} = {v} not in [0, 1]")));
    }
    Ok(())
}

/// Thresholds of the achievable region: `R1 >= r1`, `R2 >= r2`, `R1 + R2 >= r3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRegion {
    pub r1_star: f64,
    pub r2_star: f64,
    pub r3_star: f64,
}

impl RateRegion {
    /// Boundary points count as inside.
    pub fn contains(&self, r1: f64, r2: f64) -> bool {
        r1 >= self.r1_star && r2 >= self.r2_star && r1 + r2 >= self.r3_star
    }

    pub fn threshold(&self, event: ErrorEvent) -> f64 {
        match event {
            ErrorEvent::WrongX => self.r1_star,
            ErrorEvent::WrongY => self.r2_star,
            ErrorEvent::WrongBoth => self.r3_star,
        }
    }

    /// `(R_i - r_i*)` for each event, with `R3 = R1 + R2`.
    pub fn slacks(&self, r1: f64, r2: f64) -> [f64; 3] {
        [r1 - self.r1_star, r2 - self.r2_star, r1 + r2 - self.r3_star]
    }

    /// Corner points of the boundary, from the top of the vertical edge to the
    /// end of the horizontal one. `extent` is how far the two unbounded edges
    /// run past the corners.
    pub fn corners(&self, extent: f64) -> Vec<(f64, f64)> {
        let (a, b) = (self.r1_star, self.r2_star);
        let c = self.r3_star.max(a + b);
        vec![(a, c - a + extent), (a, c - a), (c - b, b), (c - b + extent, b)]
    }

    /// The boundary sampled at `points` positions evenly spaced by arc length.
    pub fn polyline(&self, points: usize, extent: f64) -> Vec<(f64, f64)> {
        let corners = self.corners(extent);
        let seg_len: Vec<f64> = corners
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .collect();
        let total: f64 = seg_len.iter().sum();
        if points < 2 || total == 0.0 {
            return corners;
        }
        let mut out = Vec::with_capacity(points);
        for k in 0..points {
            let mut s = total * k as f64 / (points - 1) as f64;
            let mut i = 0;
            while i + 1 < seg_len.len() && s > seg_len[i] {
                s -= seg_len[i];
                i += 1;
            }
            let t = if seg_len[i] > 0.0 {
                (s / seg_len[i]).min(1.0)
            } else {
                0.0
            };
            let (p, q) = (corners[i], corners[i + 1]);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
        out
    }
}

/// `max over S of H_i + delta_ratio * I` for each event.
pub fn rate_region(class: &SourceClass, delta_ratio: f64) -> Result<RateRegion> {
    check_unit("delay ratio", delta_ratio)?;
    let mut r = [f64::NEG_INFINITY; 3];
    for m in class.members() {
        let q = joint_quantities(m);
        for (k, e) in ErrorEvent::ALL.iter().enumerate() {
            r[k] = r[k].max(q.h(*e) + delta_ratio * q.mutual_info);
        }
    }
    Ok(RateRegion {
        r1_star: r[0],
        r2_star: r[1],
        r3_star: r[2],
    })
}

/// Whether the delayed region of `class` coincides with the synchronous region
/// of `reference`, a member of the class.
pub fn region_equality_check(class: &SourceClass, delta_ratio: f64, reference: &JointPmf) -> Result<bool> {
    if !class.contains(reference) {
        return Err(Error::NotInClass);
    }
    let region = rate_region(class, delta_ratio)?;
    let q = joint_quantities(reference);
    Ok(ErrorEvent::ALL
        .iter()
        .all(|&e| (region.threshold(e) - q.h(e)).abs() <= 1e-12))
}

/// Rates below which no blocklength-`n` code can keep its worst-case error at
/// or below `err_prob`: `max_S (H_i + ratio_n I) - (err_prob log2(|X||Y|) + 1/n)`.
pub fn converse_rate_floor(class: &SourceClass, n: usize, delay: &DelaySpec, err_prob: f64) -> Result<[f64; 3]> {
    check_unit("error probability", err_prob)?;
    if n == 0 {
        return Err(Error::OutOfRange("blocklength 0".into()));
    }
    let region = rate_region(class, delay.ratio(n))?;
    let penalty = err_prob * ((class.rows() * class.cols()) as f64).log2() + 1.0 / n as f64;
    Ok(ErrorEvent::ALL.map(|e| region.threshold(e) - penalty))
}

/// Per-symbol Gallager exponent of the delayed block distribution when a
/// fraction `d_ratio` of each block is unaligned.
pub fn block_exponent_with_delay(event: ErrorEvent, rho: f64, j: &JointPmf, d_ratio: f64) -> Result<f64> {
    check_unit("delay ratio", d_ratio)?;
    let aligned = gallager_e(event, rho, j)?;
    let iso = match event {
        ErrorEvent::WrongX => gallager_e_pmf(rho, &j.marginal_x())?,
        ErrorEvent::WrongY => gallager_e_pmf(rho, &j.marginal_y())?,
        ErrorEvent::WrongBoth => gallager_e_pmf(rho, &j.marginal_x())? + gallager_e_pmf(rho, &j.marginal_y())?,
    };
    Ok((1.0 - d_ratio) * aligned + d_ratio * iso)
}

/// `(1/n) E^(i)` of the full block distribution, by enumeration.
pub fn brute_force_block_exponent(event: ErrorEvent, rho: f64, j: &JointPmf, n: usize, d: i64) -> Result<f64> {
    let block = delayed_block_pmf(j, n, d)?;
    Ok(gallager_e(event, rho, &block)? / n as f64)
}

fn pos(v: f64) -> f64 {
    v.max(0.0)
}

/// The exponent function `F_i(rho, R, P, delta)`.
///
/// It is built from the tilted distributions of `P`: a rate-slack term scaled
/// by `rho`, plus a divergence term, each reduced by `delta` times the clipped
/// gap between the aligned and unaligned contributions.
pub fn f_function(event: ErrorEvent, rho: f64, rate: f64, j: &JointPmf, delta_ratio: f64) -> Result<f64> {
    check_unit("delay ratio", delta_ratio)?;
    let t = tilt(j, rho)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let px = j.marginal_x();
    let py = j.marginal_y();
    let dx = || kl_raw(t.tilted_x.probs(), px.probs());
    let dy = || kl_raw(t.tilted_y.probs(), py.probs());
    let value = match event {
        ErrorEvent::WrongX => {
            let hc = t.cond_entropy_x_given_y();
            let hx = entropy(&t.tilted_x);
            let dc = kl_raw(t.joint_via_y().probs(), j.probs())?;
            rho * (rate - hc - delta_ratio * pos(hx - hc)) + dc - delta_ratio * pos(dc - dx()?)
        }
        ErrorEvent::WrongY => {
            let hc = t.cond_entropy_y_given_x();
            let hy = entropy(&t.tilted_y);
            let dc = kl_raw(t.joint_via_x().probs(), j.probs())?;
            rho * (rate - hc - delta_ratio * pos(hy - hc)) + dc - delta_ratio * pos(dc - dy()?)
        }
        ErrorEvent::WrongBoth => {
            let hj = entropy(&t.tilted_joint.flatten());
            let hx = entropy(&t.tilted_x);
            let hy = entropy(&t.tilted_y);
            let dj = kl_raw(t.tilted_joint.probs(), j.probs())?;
            rho * (rate - hj - delta_ratio * pos(hx + hy - hj)) + dj - delta_ratio * pos(dj - dx()? - dy()?)
        }
    };
    Ok(value)
}

/// Maximizer of one event's worst-case exponent over `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOptimum {
    pub event: ErrorEvent,
    pub rho: f64,
    pub value: f64,
    /// Index of the member attaining the minimum at `rho`.
    pub argmin_member: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentResult {
    pub value: f64,
    pub binding: ErrorEvent,
    pub per_event: [EventOptimum; 3],
}

fn rate_for(event: ErrorEvent, r1: f64, r2: f64) -> f64 {
    match event {
        ErrorEvent::WrongX => r1,
        ErrorEvent::WrongY => r2,
        ErrorEvent::WrongBoth => r1 + r2,
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Grid search over `rho_k = k / (resolution - 1)` followed by three
/// golden-section steps on the bracket around the best grid point.
fn maximize_over_rho(resolution: usize, mut g: impl FnMut(f64) -> Result<(f64, usize)>) -> Result<(f64, f64, usize)> {
    let step = 1.0 / (resolution - 1) as f64;
    let mut best = (f64::NEG_INFINITY, 0.0, 0);
    let mut best_k = 0;
    for k in 0..resolution {
        let rho = k as f64 * step;
        let (v, m) = g(rho)?;
        if v > best.0 {
            best = (v, rho, m);
            best_k = k;
        }
    }
    let mut a = best_k.saturating_sub(1) as f64 * step;
    let mut b = ((best_k + 1).min(resolution - 1)) as f64 * step;
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut gc = g(c)?;
    let mut gd = g(d)?;
    for _ in 0..3 {
        for (rho, val) in [(c, gc), (d, gd)] {
            if val.0 > best.0 {
                best = (val.0, rho, val.1);
            }
        }
        if gc.0 >= gd.0 {
            b = d;
            d = c;
            gd = gc;
            c = b - GOLDEN * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + GOLDEN * (b - a);
            gd = g(d)?;
        }
    }
    for (rho, val) in [(c, gc), (d, gd)] {
        if val.0 > best.0 {
            best = (val.0, rho, val.1);
        }
    }
    Ok(best)
}

fn best_by(
    r1: f64,
    r2: f64,
    resolution: usize,
    mut f: impl FnMut(ErrorEvent, f64, f64) -> Result<(f64, usize)>,
) -> Result<ExponentResult> {
    if resolution < 11 {
        return Err(Error::OutOfRange(format!("rho grid resolution {resolution} < 11")));
    }
    let mut per_event = Vec::with_capacity(3);
    for e in ErrorEvent::ALL {
        let rate = rate_for(e, r1, r2);
        let (value, rho, argmin_member) = maximize_over_rho(resolution, |rho| f(e, rho, rate))?;
        per_event.push(EventOptimum {
            event: e,
            rho,
            value,
            argmin_member,
        });
    }
    let per_event: [EventOptimum; 3] = per_event.try_into().expect("three events");
    let binding = per_event
        .iter()
        .fold(per_event[0], |acc, o| if o.value < acc.value { *o } else { acc });
    Ok(ExponentResult {
        value: binding.value,
        binding: binding.event,
        per_event,
    })
}

/// `min_i sup_rho min_{P in members} F_i(rho, R_i, P, delta)` with `R3 = R1 + R2`.
pub fn best_exponent(
    r1: f64,
    r2: f64,
    members: &[JointPmf],
    delta_ratio: f64,
    resolution: usize,
) -> Result<ExponentResult> {
    if members.is_empty() {
        return Err(Error::Config("no members".into()));
    }
    best_by(r1, r2, resolution, |e, rho, rate| {
        let mut worst = (f64::INFINITY, 0);
        for (k, m) in members.iter().enumerate() {
            let v = f_function(e, rho, rate, m, delta_ratio)?;
            if v < worst.0 {
                worst = (v, k);
            }
        }
        Ok(worst)
    })
}

/// The synchronous random-binning exponent `min_i sup_rho (rho R_i - E^(i)(rho, P))`
/// for one source, on the same search grid as [`best_exponent`].
pub fn synchronous_exponent(r1: f64, r2: f64, j: &JointPmf, resolution: usize) -> Result<ExponentResult> {
    best_by(r1, r2, resolution, |e, rho, rate| {
        Ok((rho * rate - gallager_e(e, rho, j)?, 0))
    })
}

/// `delta log2(K - 1) / 2 + h(delta / 2)`, and 0 for `K = 1`.
pub fn delta_bar(k: usize, delta: f64) -> Result<f64> {
    check_unit("delta", delta)?;
    if k == 0 {
        return Err(Error::OutOfRange("alphabet size 0".into()));
    }
    if k == 1 {
        return Ok(0.0);
    }
    Ok(0.5 * delta * ((k - 1) as f64).log2() + binary_entropy(delta / 2.0))
}

/// A finite stand-in for the variational ball of radius `delta` around a class.
#[derive(Debug, Clone)]
pub struct BallClass {
    pub base: SourceClass,
    pub delta: f64,
    /// Base members first, then `per_member` perturbations of each in order.
    pub samples: Vec<JointPmf>,
}

/// Base members plus `per_member` random points within variational distance
/// `delta` of each. A point is `(1 - t) p + t q` for a uniform random `q` on
/// the simplex and `t` chosen so the distance to `p` is a uniform fraction of
/// `min(delta, d_v(p, q))`.
pub fn ball_sample(class: &SourceClass, delta: f64, per_member: usize, seed: u64) -> Result<BallClass> {
    if delta.is_nan() || delta <= 0.0 {
        return Err(Error::OutOfRange(format!("ball radius {delta} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = class.members().to_vec();
    for p in class.members() {
        let (rows, cols) = (p.rows(), p.cols());
        for _ in 0..per_member {
            let q = random_pmf(&mut rng, rows * cols);
            let dist = l1(p.probs(), q.probs());
            let u: f64 = rng.random();
            let t = if dist > 0.0 { u * (delta / dist).min(1.0) } else { 0.0 };
            let mut s: Vec<f64> = p
                .probs()
                .iter()
                .zip(q.probs())
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect();
            let total: f64 = s.iter().sum();
            s.iter_mut().for_each(|v| *v /= total);
            let s = JointPmf::new(rows, cols, s)?;
            assert!(l1(p.probs(), s.probs()) <= delta + 1e-12);
            samples.push(s);
        }
    }
    Ok(BallClass {
        base: class.clone(),
        delta,
        samples,
    })
}

/// Tuning of [`positivity_certificate_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateOptions {
    pub per_member: usize,
    pub seed: u64,
    pub resolution: usize,
    /// Ratio of the decreasing geometric grids searched for `delta` and `rho`.
    pub grid_ratio: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            per_member: 8,
            seed: 0,
            resolution: 101,
            grid_ratio: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// A third of the smallest rate slack.
    pub gamma: f64,
    pub delta: f64,
    pub rho: f64,
    /// `best_exponent` over the ball samples.
    pub exponent: f64,
    /// `min_i min_samples F_i` evaluated at `rho`.
    pub min_f_at_rho: f64,
    pub pass: bool,
}

/// Witness that the exponent is positive strictly inside the region.
pub fn positivity_certificate(r1: f64, r2: f64, class: &SourceClass, delta_ratio: f64) -> Result<Certificate> {
    positivity_certificate_with(r1, r2, class, delta_ratio, CertificateOptions::default())
}

pub fn positivity_certificate_with(
    r1: f64,
    r2: f64,
    class: &SourceClass,
    delta_ratio: f64,
    opts: CertificateOptions,
) -> Result<Certificate> {
    let region = rate_region(class, delta_ratio)?;
    let min_slack = region.slacks(r1, r2).into_iter().fold(f64::INFINITY, f64::min);
    if min_slack.is_nan() || min_slack <= 0.0 {
        return Err(Error::NoSlack(min_slack));
    }
    let gamma = min_slack / 3.0;
    let (kx, ky) = (class.rows(), class.cols());
    let kxy = kx * ky;
    let dl = delta_ratio;
    let feasible_delta = |d: f64| -> Result<bool> {
        let (bx, by, bxy) = (delta_bar(kx, d)?, delta_bar(ky, d)?, delta_bar(kxy, d)?);
        Ok((1.0 + dl) * 2.0 * bxy + dl * bx <= gamma
            && (1.0 + dl) * 2.0 * bxy + dl * by <= gamma
            && bxy + dl * (bx + by + bxy) <= gamma)
    };
    let grid = |k: i32| opts.grid_ratio.powi(k);
    let mut delta = None;
    for k in 0..4000 {
        if feasible_delta(grid(k))? {
            delta = Some(grid(k));
            break;
        }
    }
    let delta = delta.ok_or(Error::NoSlack(min_slack))?;
    let spread = |k: usize, rho: f64| 2.0 * (1.0 - (k as f64).powf(-rho));
    let mut rho = None;
    for k in 0..4000 {
        let r = grid(k);
        if [kx, ky, kxy].iter().all(|&a| spread(a, r) <= delta) {
            rho = Some(r);
            break;
        }
    }
    let rho = rho.ok_or(Error::NoSlack(min_slack))?;
    let ball = ball_sample(class, delta, opts.per_member, opts.seed)?;
    let exponent = best_exponent(r1, r2, &ball.samples, delta_ratio, opts.resolution)?.value;
    let mut min_f_at_rho = f64::INFINITY;
    for e in ErrorEvent::ALL {
        for s in &ball.samples {
            min_f_at_rho = min_f_at_rho.min(f_function(e, rho, rate_for(e, r1, r2), s, delta_ratio)?);
        }
    }
    let target = rho * gamma;
    Ok(Certificate {
        gamma,
        delta,
        rho,
        exponent,
        min_f_at_rho,
        pass: target > 0.0 && exponent >= target && min_f_at_rho >= target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::{random_joint, Pmf};

    const H01: f64 = 0.468_995_593_589_281_2;

    fn dsbs() -> SourceClass {
        SourceClass::singleton(JointPmf::dsbs(0.1).unwrap())
    }

    #[test]
    fn region_examples() {
        let px = Pmf::new(vec![0.3, 0.7]).unwrap();
        let py = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let ind = SourceClass::singleton(JointPmf::independent(&px, &py));
        let r = rate_region(&ind, 0.7).unwrap();
        assert!((r.r1_star - entropy(&px)).abs() < 1e-12);
        assert!((r.r2_star - entropy(&py)).abs() < 1e-12);
        assert!((r.r3_star - entropy(&px) - entropy(&py)).abs() < 1e-12);

        let r = rate_region(&dsbs(), 0.5).unwrap();
        assert!((r.r1_star - 0.734498).abs() < 1e-6);
        assert!((r.r2_star - 0.734498).abs() < 1e-6);
        assert!((r.r3_star - 1.734498).abs() < 1e-6);
        assert!(r.contains(0.734498, 1.0) && !r.contains(0.8, 0.8));

        let lin = DelaySpec::linear_ratio(0.25).unwrap();
        let r = rate_region(&dsbs(), lin.limit_ratio()).unwrap();
        assert!((r.r1_star - (H01 + 0.25 * (1.0 - H01))).abs() < 1e-12);
    }

    #[test]
    fn equality_examples() {
        let j = JointPmf::dsbs(0.1).unwrap();
        let c = SourceClass::singleton(j.clone());
        assert!(region_equality_check(&c, 0.0, &j).unwrap());
        assert!(!region_equality_check(&c, 0.3, &j).unwrap());
        let ind = JointPmf::independent(&Pmf::uniform(2), &Pmf::uniform(2));
        assert!(region_equality_check(&SourceClass::singleton(ind.clone()), 1.0, &ind).unwrap());
        assert!(matches!(region_equality_check(&c, 0.0, &ind), Err(Error::NotInClass)));
    }

    #[test]
    fn converse_examples() {
        let spec = DelaySpec::linear_ratio(0.5).unwrap();
        let f = converse_rate_floor(&dsbs(), 100, &spec, 0.0).unwrap();
        assert!((f[0] - 0.724498).abs() < 1e-6);
        let f = converse_rate_floor(&dsbs(), 2, &spec, 1.0).unwrap();
        assert!(f[0] <= 0.0);
        let sync = converse_rate_floor(&dsbs(), 10, &DelaySpec::constant_bound(0), 0.0).unwrap();
        assert!((sync[0] - (H01 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn block_exponent_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let j = random_joint(&mut rng, 2, 2);
        for e in ErrorEvent::ALL {
            let a = block_exponent_with_delay(e, 0.6, &j, 0.0).unwrap();
            assert!((a - gallager_e(e, 0.6, &j).unwrap()).abs() < 1e-15);
        }
        let full = block_exponent_with_delay(ErrorEvent::WrongBoth, 0.6, &j, 1.0).unwrap();
        let want = gallager_e_pmf(0.6, &j.marginal_x()).unwrap() + gallager_e_pmf(0.6, &j.marginal_y()).unwrap();
        assert!((full - want).abs() < 1e-12);
        for e in ErrorEvent::ALL {
            let a = block_exponent_with_delay(e, 0.5, &j, 0.5).unwrap();
            let b = brute_force_block_exponent(e, 0.5, &j, 4, 2).unwrap();
            assert!((a - b).abs() < 1e-9, "{e:?}: {a} vs {b}");
        }
    }

    #[test]
    fn f_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let j = random_joint(&mut rng, 2, 3);
        for e in ErrorEvent::ALL {
            assert_eq!(f_function(e, 0.0, 0.9, &j, 0.4).unwrap(), 0.0);
        }
        let f1 = f_function(ErrorEvent::WrongX, 0.7, 0.8, &j, 0.0).unwrap();
        assert!((f1 - (0.7 * 0.8 - gallager_e(ErrorEvent::WrongX, 0.7, &j).unwrap())).abs() < 1e-9);
        let f3 = f_function(ErrorEvent::WrongBoth, 0.7, 1.9, &j, 0.0).unwrap();
        assert!((f3 - (0.7 * 1.9 - gallager_e(ErrorEvent::WrongBoth, 0.7, &j).unwrap())).abs() < 1e-9);
        // The clipped terms only lower F below the rate minus the block exponent.
        for e in ErrorEvent::ALL {
            let f = f_function(e, 0.5, 1.0, &j, 0.3).unwrap();
            let g = 0.5 * 1.0 - block_exponent_with_delay(e, 0.5, &j, 0.3).unwrap();
            assert!(f <= g + 1e-12);
        }
    }

    #[test]
    fn best_exponent_examples() {
        let c = dsbs();
        let inside = best_exponent(1.0, 1.0, c.members(), 0.5, 101).unwrap();
        assert!(inside.value > 0.0);
        // Regression anchor computed by this implementation.
        assert!((inside.value - 0.160_964_047).abs() < 1e-8, "{}", inside.value);
        let below = best_exponent(0.4, 0.4, c.members(), 0.5, 101).unwrap();
        assert_eq!(below.value, 0.0);
        for e in ErrorEvent::ALL {
            for k in 1..=10 {
                let rho = k as f64 / 10.0;
                assert!(f_function(e, rho, rate_for(e, 0.4, 0.4), &c.members()[0], 0.5).unwrap() < 0.0);
            }
        }
        let sync = best_exponent(0.8, 0.8, c.members(), 0.0, 101).unwrap();
        let classic = synchronous_exponent(0.8, 0.8, &c.members()[0], 101).unwrap();
        assert!((sync.value - classic.value).abs() < 1e-9);
        assert!(best_exponent(1.0, 1.0, c.members(), 0.5, 5).is_err());
    }

    #[test]
    fn delta_bar_examples() {
        assert_eq!(delta_bar(4, 0.0).unwrap(), 0.0);
        assert!((delta_bar(2, 0.2).unwrap() - H01).abs() < 1e-12);
        assert_eq!(delta_bar(1, 0.7).unwrap(), 0.0);
        assert!(delta_bar(3, 1.2).is_err());
        let mut prev = 0.0;
        for k in 0..=100 {
            let v = delta_bar(5, k as f64 / 100.0).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn ball_examples() {
        let c = dsbs();
        assert_eq!(ball_sample(&c, 0.1, 0, 1).unwrap().samples, c.members().to_vec());
        let b = ball_sample(&c, 0.05, 10, 1).unwrap();
        assert_eq!(b.samples.len(), 11);
        for s in &b.samples {
            assert!(l1(s.probs(), c.members()[0].probs()) <= 0.05 + 1e-12);
        }
        assert_eq!(ball_sample(&c, 0.05, 10, 1).unwrap().samples, b.samples);
    }

    #[test]
    fn certificate_examples() {
        let cert = positivity_certificate(1.2, 1.2, &dsbs(), 0.5).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert!(cert.rho * cert.gamma > 0.0);
        let r = rate_region(&dsbs(), 0.5).unwrap();
        assert!(matches!(
            positivity_certificate(r.r1_star, 1.5, &dsbs(), 0.5),
            Err(Error::NoSlack(_))
        ));
        let cert = positivity_certificate(0.8, 0.8, &dsbs(), 0.0).unwrap();
        assert!(cert.pass, "{cert:?}");
    }

    #[test]
    fn polyline_shape() {
        let r = rate_region(&dsbs(), 0.5).unwrap();
        let c = r.corners(0.5);
        assert!((c[1].0 - r.r1_star).abs() < 1e-12 && (c[1].1 - (r.r3_star - r.r1_star)).abs() < 1e-12);
        let p = r.polyline(25, 0.5);
        assert_eq!(p.len(), 25);
        assert_eq!(p[0], c[0]);
        assert!((p[24].0 - c[3].0).abs() < 1e-12);
        for (a, b) in p {
            assert!(a >= r.r1_star - 1e-12 && b >= r.r2_star - 1e-12 && a + b >= r.r3_star - 1e-9);
        }
    }
}
