//! n-types: rational approximations of distributions with denominator `n`,
//! the shadow of a source class on that lattice, and the mixed source built
//! from the shadow.

use crate::bounds::SourceClass;
use crate::delaysource::{delayed_pmf, DelayedSegments};
use crate::error::{Error, Result};
use crate::probcore::{JointPmf, Pmf, Probabilities};

/// An n-type: nonnegative integer counts summing to `n`, laid out as a
/// `rows x cols` table (a plain distribution has `cols == 1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NType {
    n: u64,
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

impl NType {
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Entries `N(x) / n`, flattened.
    pub fn as_pmf(&self) -> Pmf {
        Pmf::new(self.probs()).expect("counts sum to n")
    }

    pub fn as_joint(&self) -> JointPmf {
        JointPmf::new(self.rows, self.cols, self.probs()).expect("counts sum to n")
    }

    fn probs(&self) -> Vec<f64> {
        let mut probs: Vec<f64> = self.counts.iter().map(|&c| c as f64 / self.n as f64).collect();
        // Division can leave the sum a few ulps off; push the residue onto the largest cell.
        let resid = 1.0 - probs.iter().sum::<f64>();
        let big = argmax(&probs);
        probs[big] += resid;
        probs
    }
}

/// Result of [`n_type_approx`]. `guaranteed` is false when `n` is below the
/// threshold `alpha` at which the approximation bounds are proven.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeApprox {
    pub ntype: NType,
    pub guaranteed: bool,
}

/// `K (K - 1)` for an alphabet of `K` cells.
pub fn alpha_for(cells: usize) -> u64 {
    let k = cells as u64;
    k * (k.saturating_sub(1))
}

/// Constants of the approximation bound at blocklength `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxConstants {
    pub n: u64,
    pub alpha: u64,
    /// `alpha ln(1 + alpha / (n - alpha))`, in nats; infinite at `n == alpha > 0`.
    pub eps_n: f64,
}

impl ApproxConstants {
    /// Constants for distributions over `cells` cells. Requires `n >= alpha`.
    pub fn new(cells: usize, n: u64) -> Result<Self> {
        let alpha = alpha_for(cells);
        if n < alpha || n == 0 {
            return Err(Error::OutOfRange(format!("n = {n} is below alpha = {alpha}")));
        }
        let eps_n = if alpha == 0 {
            0.0
        } else if n == alpha {
            f64::INFINITY
        } else {
            let a = alpha as f64;
            a * (a / (n - alpha) as f64).ln_1p()
        };
        Ok(ApproxConstants { n, alpha, eps_n })
    }

    /// `alpha + eps_n`: the log of the per-sequence cap for one distribution.
    pub fn log_single_cap(&self) -> f64 {
        self.alpha as f64 + self.eps_n
    }

    /// `3 (alpha + eps_n)`: the log of the cap for a delayed pair.
    pub fn log_ratio_cap(&self) -> f64 {
        3.0 * self.log_single_cap()
    }

    /// `e^(3 (alpha + eps_n))`.
    pub fn ratio_cap(&self) -> f64 {
        self.log_ratio_cap().exp()
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > v[best] {
            best = i;
        }
    }
    best
}

/// Ceiling that treats values within 1e-9 of an integer as that integer, so
/// that `n p` for an exact n-type does not round up on representation error.
fn tolerant_ceil(v: f64) -> u64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 {
        r.max(0.0) as u64
    } else {
        v.ceil().max(0.0) as u64
    }
}

fn approx_counts(probs: &[f64], n: u64) -> (Vec<u64>, bool) {
    let star = argmax(probs);
    let mut counts: Vec<u64> = probs.iter().map(|&p| tolerant_ceil(n as f64 * p)).collect();
    counts[star] = 0;
    let mut others: u64 = counts.iter().sum();
    let mut repaired = false;
    // Only reachable when n < alpha: take units back from the largest cells.
    while others > n {
        repaired = true;
        let mut big = if star == 0 { 1 } else { 0 };
        for i in 0..counts.len() {
            if i != star && counts[i] > counts[big] {
                big = i;
            }
        }
        counts[big] -= 1;
        others -= 1;
    }
    counts[star] = n - others;
    (counts, repaired)
}

/// Approximate `p` by an n-type: every cell except the most probable one is
/// rounded up to a multiple of `1/n`; the most probable cell takes the rest.
pub fn n_type_approx<P: Probabilities>(p: &P, n: u64) -> Result<TypeApprox> {
    if n == 0 {
        return Err(Error::OutOfRange("n-type with n = 0".into()));
    }
    let (rows, cols) = p.shape();
    let (counts, repaired) = approx_counts(p.probs(), n);
    Ok(TypeApprox {
        ntype: NType { n, rows, cols, counts },
        guaranteed: !repaired && n >= alpha_for(rows * cols),
    })
}

/// Outcome of a likelihood-ratio cap check; ratios are kept in natural log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapCheck {
    /// `ln max_seq P(seq) / T(seq)`.
    pub log_max_ratio: f64,
    /// `ln` of the cap.
    pub log_cap: f64,
    pub pass: bool,
    /// False when `n < alpha`. No cap exists there: `log_cap` is NaN and
    /// `pass` is false.
    pub guaranteed: bool,
    /// Delay attaining the worst ratio (0 for single distributions).
    pub worst_d: i64,
}

impl CapCheck {
    pub fn max_ratio(&self) -> f64 {
        self.log_max_ratio.exp()
    }

    pub fn cap(&self) -> f64 {
        self.log_cap.exp()
    }
}

/// `max(0, max_x ln(p(x) / t(x)))`: the per-symbol worst log-ratio.
fn worst_symbol_log_ratio(p: &[f64], t: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (&a, &b) in p.iter().zip(t) {
        if a > 0.0 {
            worst = worst.max(if b > 0.0 { (a / b).ln() } else { f64::INFINITY });
        }
    }
    worst
}

/// Worst-sequence ratio `P^n / T^n` of a single distribution against its type,
/// compared with `e^(alpha + eps_n)`.
pub fn likelihood_ratio_cap_check<P: Probabilities>(p: &P, t: &NType, n: u64) -> Result<CapCheck> {
    if t.n != n || t.counts.len() != p.probs().len() {
        return Err(Error::ShapeMismatch("type does not match the distribution".into()));
    }
    let c = ApproxConstants::new(p.probs().len(), n).ok();
    let log_max_ratio = n as f64 * worst_symbol_log_ratio(p.probs(), t.as_pmf().probs());
    let log_cap = c.map_or(f64::NAN, |c| c.log_single_cap());
    Ok(CapCheck {
        log_max_ratio,
        log_cap,
        pass: log_max_ratio <= log_cap,
        guaranteed: c.is_some(),
        worst_d: 0,
    })
}

/// Worst-sequence ratio of the delayed block distribution of `j` against that
/// of its joint type `t`, over every delay `|d| <= n`, compared with
/// `e^(3 (alpha + eps_n))`.
///
/// The block distribution factors over the three segments, so the worst
/// sequence picks the worst symbol independently in each segment.
pub fn joint_delayed_cap_check(j: &JointPmf, t: &NType, n: u64) -> Result<CapCheck> {
    if t.n != n || t.shape() != (j.rows(), j.cols()) {
        return Err(Error::ShapeMismatch("type does not match the joint".into()));
    }
    let c = ApproxConstants::new(j.rows() * j.cols(), n).ok();
    let tj = t.as_joint();
    let lxy = worst_symbol_log_ratio(j.probs(), tj.probs());
    let lx = worst_symbol_log_ratio(j.marginal_x().probs(), tj.marginal_x().probs());
    let ly = worst_symbol_log_ratio(j.marginal_y().probs(), tj.marginal_y().probs());
    let mut worst = (f64::NEG_INFINITY, 0);
    for d in -(n as i64)..=n as i64 {
        let seg = DelayedSegments::new(n as usize, d)?;
        let e = seg.shift() as f64;
        let v = e * lx + seg.aligned_len() as f64 * lxy + e * ly;
        if v > worst.0 {
            worst = (v, d);
        }
    }
    let log_cap = c.map_or(f64::NAN, |c| c.log_ratio_cap());
    Ok(CapCheck {
        log_max_ratio: worst.0,
        log_cap,
        pass: worst.0 <= log_cap,
        guaranteed: c.is_some(),
        worst_d: worst.1,
    })
}

/// The n-types of every member, deduplicated by exact counts in first-seen
/// order. The flag is false if any member's approximation is unguaranteed.
pub fn build_class_shadow(class: &SourceClass, n: u64) -> Result<(Vec<NType>, bool)> {
    let mut out: Vec<NType> = Vec::new();
    let mut guaranteed = true;
    for m in class.members() {
        let a = n_type_approx(m, n)?;
        guaranteed &= a.guaranteed;
        if !out.contains(&a.ntype) {
            out.push(a.ntype);
        }
    }
    Ok((out, guaranteed))
}

/// Uniform mixture of delayed block distributions over `components x delays`.
#[derive(Debug, Clone)]
pub struct MixedSource {
    n: usize,
    components: Vec<JointPmf>,
    delays: Vec<i64>,
}

impl MixedSource {
    pub fn new(n: usize, components: Vec<JointPmf>, delays: Vec<i64>) -> Result<Self> {
        if components.is_empty() || delays.is_empty() {
            return Err(Error::Config(
                "mixed source needs at least one component and one delay".into(),
            ));
        }
        let shape = (components[0].rows(), components[0].cols());
        if components.iter().any(|c| (c.rows(), c.cols()) != shape) {
            return Err(Error::ShapeMismatch("mixed source components differ in shape".into()));
        }
        if let Some(&d) = delays.iter().find(|d| d.unsigned_abs() as usize > n) {
            return Err(Error::DelayOutOfRange { d, n });
        }
        Ok(MixedSource { n, components, delays })
    }

    /// Mixture over the n-type shadow of `class`.
    pub fn from_class(class: &SourceClass, n: usize, delays: Vec<i64>) -> Result<Self> {
        let (types, _) = build_class_shadow(class, n as u64)?;
        MixedSource::new(n, types.iter().map(NType::as_joint).collect(), delays)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> &[JointPmf] {
        &self.components
    }

    pub fn delays(&self) -> &[i64] {
        &self.delays
    }

    /// `1 / (|components| |delays|)`.
    pub fn weight(&self) -> f64 {
        1.0 / (self.components.len() * self.delays.len()) as f64
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.components[0].rows(), self.components[0].cols())
    }
}

/// Probability of `(x, y)` under the mixed source.
pub fn mixed_pmf(ms: &MixedSource, x: &[usize], y: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for c in &ms.components {
        for &d in &ms.delays {
            total += delayed_pmf(c, ms.n, d, x, y)?;
        }
    }
    Ok(total * ms.weight())
}
