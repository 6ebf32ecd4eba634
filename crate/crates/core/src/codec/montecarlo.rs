//! Monte Carlo estimates of decoding error.
//!
//! Trial `t` of source `s` draws from `ChaCha8Rng::seed_from_u64(seed + t)` on
//! stream `2 + s`, so every trial is reproducible on its own and the estimate
//! does not depend on the order in which trials run.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Decoder;
use crate::bounds::SourceClass;
use crate::delaysource::{index_from_sequence, DelayedSegments};
use crate::error::{Error, Result};
use crate::probcore::{JointPmf, Probabilities};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub errors: u64,
    pub trials: u64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl McEstimate {
    fn new(errors: u64, trials: u64) -> Self {
        let (lo, hi) = wilson_interval(errors, trials);
        McEstimate {
            errors,
            trials,
            estimate: errors as f64 / trials as f64,
            lo,
            hi,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

struct SegmentSampler {
    seg: DelayedSegments,
    x: WeightedIndex<f64>,
    y: WeightedIndex<f64>,
    xy: WeightedIndex<f64>,
    cols: usize,
}

impl SegmentSampler {
    fn new(j: &JointPmf, n: usize, d: i64) -> Result<Self> {
        let w = |p: &[f64]| WeightedIndex::new(p.to_vec()).map_err(|e| Error::InvalidPmf(e.to_string()));
        Ok(SegmentSampler {
            seg: DelayedSegments::new(n, d)?,
            x: w(j.marginal_x().probs())?,
            y: w(j.marginal_y().probs())?,
            xy: w(j.probs())?,
            cols: j.cols(),
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [usize], y: &mut [usize]) {
        for i in self.seg.x_iso.clone() {
            x[i] = self.x.sample(rng);
        }
        for (a, b) in self.seg.pairs() {
            let c = self.xy.sample(rng);
            x[a] = c / self.cols;
            y[b] = c % self.cols;
        }
        for i in self.seg.y_iso.clone() {
            y[i] = self.y.sample(rng);
        }
    }
}

/// Draw one delayed block pair, each segment independently.
pub fn sample_delayed_pair<R: Rng + ?Sized>(
    j: &JointPmf,
    n: usize,
    d: i64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let s = SegmentSampler::new(j, n, d)?;
    let (mut x, mut y) = (vec![0; n], vec![0; n]);
    s.sample(rng, &mut x, &mut y);
    Ok((x, y))
}

/// Fraction of `trials` pairs from `(source, d)` that the decoder gets wrong.
/// `stream_offset` selects the generator stream `2 + stream_offset`.
pub fn monte_carlo_error(
    decoder: &mut Decoder,
    source: &JointPmf,
    d: i64,
    trials: u64,
    seed: u64,
    stream_offset: u64,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::OutOfRange("at least one trial is required".into()));
    }
    let code = decoder.code();
    let (n, (kx, ky)) = (code.n(), code.alphabets());
    if (source.rows(), source.cols()) != (kx, ky) {
        return Err(Error::ShapeMismatch("source alphabet differs from the code".into()));
    }
    let sampler = SegmentSampler::new(source, n, d)?;
    let (mut x, mut y) = (vec![0; n], vec![0; n]);
    let mut errors = 0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t));
        rng.set_stream(2 + stream_offset);
        sampler.sample(&mut rng, &mut x, &mut y);
        let xi = index_from_sequence(&x, kx) as u32;
        let yi = index_from_sequence(&y, ky) as u32;
        if decoder.decode_sequences(xi, yi) != (xi, yi) {
            errors += 1;
        }
    }
    Ok(McEstimate::new(errors, trials))
}

/// Per-source estimates and the worst of them.
#[derive(Debug, Clone, PartialEq)]
pub struct SupMaxEstimate {
    /// `(member index, delay, estimate)` in member-major order.
    pub per_source: Vec<(usize, i64, McEstimate)>,
    /// The entry with the largest estimate; the first one on ties.
    pub worst: (usize, i64, McEstimate),
}

/// Estimate the error under every member and delay, with `trials` draws each.
pub fn monte_carlo_sup_max(
    decoder: &mut Decoder,
    class: &SourceClass,
    delays: &[i64],
    trials: u64,
    seed: u64,
) -> Result<SupMaxEstimate> {
    let mut per_source = Vec::with_capacity(class.members().len() * delays.len());
    for (mi, m) in class.members().iter().enumerate() {
        for (di, &d) in delays.iter().enumerate() {
            let stream = (mi * delays.len() + di) as u64;
            per_source.push((mi, d, monte_carlo_error(decoder, m, d, trials, seed, stream)?));
        }
    }
    let worst = *per_source
        .iter()
        .fold(None, |acc: Option<&(usize, i64, McEstimate)>, e| match acc {
            Some(a) if a.2.estimate >= e.2.estimate => Some(a),
            _ => Some(e),
        })
        .ok_or_else(|| Error::Config("no delays".into()))?;
    Ok(SupMaxEstimate { per_source, worst })
}
