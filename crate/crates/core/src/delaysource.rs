//! The delayed two-terminal source.
//!
//! Encoder 1 sees `x[0..n]`; encoder 2 sees a window of the `Y` process shifted
//! by an integer delay `d`. Within one block the pair splits into three
//! independent segments: `|d|` symbols of `x` with no partner, `n - |d|`
//! aligned pairs, and `|d|` symbols of `y` with no partner.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::probcore::{entropy_of, joint_quantities, ErrorEvent, JointPmf, Probabilities};

/// Upper bound on `|X|^n * |Y|^n` for any exhaustive enumeration.
pub const PAIR_BUDGET: u128 = 1 << 24;

/// How the admissible delay interval `[lo_n, hi_n]` depends on the blocklength.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayKind {
    /// `[-min(c, n), min(c, n)]`.
    ConstantBound(u64),
    /// `[-floor(alpha n), floor(alpha n)]`.
    LinearRatio(f64),
    /// Entry `k` gives the interval at blocklength `k + 1`; the last entry
    /// repeats for longer blocks. Intervals are clamped to `[-n, n]`.
    Explicit(Vec<(i64, i64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaySpec {
    kind: DelayKind,
}

impl DelaySpec {
    pub fn constant_bound(c: u64) -> Self {
        DelaySpec {
            kind: DelayKind::ConstantBound(c),
        }
    }

    pub fn linear_ratio(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::OutOfRange(format!("delay ratio {alpha} not in [0, 1]")));
        }
        Ok(DelaySpec {
            kind: DelayKind::LinearRatio(alpha),
        })
    }

    pub fn explicit(bounds: Vec<(i64, i64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Config("empty delay sequence".into()));
        }
        if let Some((k, &(lo, hi))) = bounds.iter().enumerate().find(|(_, (lo, hi))| lo > hi) {
            return Err(Error::Config(format!(
                "delay entry {k}: lower bound {lo} > upper bound {hi}"
            )));
        }
        Ok(DelaySpec {
            kind: DelayKind::Explicit(bounds),
        })
    }

    pub fn kind(&self) -> &DelayKind {
        &self.kind
    }

    /// `(lo_n, hi_n)`, always inside `[-n, n]`.
    pub fn bounds(&self, n: usize) -> (i64, i64) {
        let n = n as i64;
        match &self.kind {
            DelayKind::ConstantBound(c) => {
                let c = (*c).min(n as u64) as i64;
                (-c, c)
            }
            DelayKind::LinearRatio(a) => {
                // Multiplying first keeps exact products such as 0.5 * 8 exact.
                let m = ((a * n as f64) + 1e-9).floor().min(n as f64) as i64;
                (-m, m)
            }
            DelayKind::Explicit(v) => {
                let idx = (n.max(1) as usize - 1).min(v.len() - 1);
                let (lo, hi) = v[idx];
                (lo.clamp(-n, n), hi.clamp(-n, n))
            }
        }
    }

    pub fn delay_set(&self, n: usize) -> Vec<i64> {
        let (lo, hi) = self.bounds(n);
        (lo..=hi).collect()
    }

    /// `max(|lo_n|, |hi_n|) / n`.
    pub fn ratio(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let (lo, hi) = self.bounds(n);
        lo.unsigned_abs().max(hi.unsigned_abs()) as f64 / n as f64
    }

    /// Limit superior of [`ratio`](Self::ratio) as `n` grows.
    pub fn limit_ratio(&self) -> f64 {
        match &self.kind {
            DelayKind::LinearRatio(a) => *a,
            // Both remaining kinds have bounded intervals, so the ratio decays.
            DelayKind::ConstantBound(_) | DelayKind::Explicit(_) => 0.0,
        }
    }
}

/// The `[-ceil(sqrt n), ceil(sqrt n)]` delay set used when the true bound is unknown.
pub fn dummy_delay_set(n: usize) -> Vec<i64> {
    let mut b = (n as f64).sqrt().ceil() as i64;
    // Guard against rounding in sqrt for perfect squares.
    while (b - 1) * (b - 1) >= n as i64 && b > 0 {
        b -= 1;
    }
    while b * b < n as i64 {
        b += 1;
    }
    (-b..=b).collect()
}

/// Index ranges of the three segments of a delayed block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayedSegments {
    pub n: usize,
    pub d: i64,
    /// Positions of `x` with no partner in the `Y` window.
    pub x_iso: Range<usize>,
    /// Positions of `x` paired with `y_aligned` element by element.
    pub x_aligned: Range<usize>,
    pub y_aligned: Range<usize>,
    /// Positions of `y` with no partner in the `X` window.
    pub y_iso: Range<usize>,
}

impl DelayedSegments {
    pub fn new(n: usize, d: i64) -> Result<Self> {
        let e = d.unsigned_abs() as usize;
        if e > n {
            return Err(Error::DelayOutOfRange { d, n });
        }
        Ok(if d >= 0 {
            DelayedSegments {
                n,
                d,
                x_iso: 0..e,
                x_aligned: e..n,
                y_aligned: 0..n - e,
                y_iso: n - e..n,
            }
        } else {
            DelayedSegments {
                n,
                d,
                x_iso: n - e..n,
                x_aligned: 0..n - e,
                y_aligned: e..n,
                y_iso: 0..e,
            }
        })
    }

    pub fn shift(&self) -> usize {
        self.d.unsigned_abs() as usize
    }

    pub fn aligned_len(&self) -> usize {
        self.n - self.shift()
    }

    /// The aligned `(x, y)` coordinate pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.x_aligned.clone().zip(self.y_aligned.clone())
    }
}

fn check_seqs(j: &JointPmf, n: usize, x: &[usize], y: &[usize]) -> Result<()> {
    if x.len() != n || y.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "sequences of length {} and {} for n = {n}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().any(|&s| s >= j.rows()) || y.iter().any(|&s| s >= j.cols()) {
        return Err(Error::OutOfRange("sequence symbol outside the alphabet".into()));
    }
    Ok(())
}

/// Probability of the block `(x, y)` under the source `j` with delay `d`.
pub fn delayed_pmf(j: &JointPmf, n: usize, d: i64, x: &[usize], y: &[usize]) -> Result<f64> {
    let seg = DelayedSegments::new(n, d)?;
    check_seqs(j, n, x, y)?;
    let px = j.marginal_x();
    let py = j.marginal_y();
    let mut p = 1.0;
    for i in seg.x_iso.clone() {
        p *= px.get(x[i]);
    }
    for (a, b) in seg.pairs() {
        p *= j.get(x[a], y[b]);
    }
    for i in seg.y_iso.clone() {
        p *= py.get(y[i]);
    }
    Ok(p)
}

/// Number of sequences of length `n` over `k` symbols, if it fits in `u64`.
pub fn sequence_count(k: usize, n: usize) -> Option<u64> {
    (k as u64).checked_pow(n as u32)
}

/// Little-endian digits of `index` in base `k`: digit `i` is symbol `i`.
pub fn sequence_from_index(index: u64, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    fill_sequence(index, k, &mut out);
    out
}

pub fn fill_sequence(mut index: u64, k: usize, out: &mut [usize]) {
    for s in out.iter_mut() {
        *s = (index % k as u64) as usize;
        index /= k as u64;
    }
}

pub fn index_from_sequence(seq: &[usize], k: usize) -> u64 {
    seq.iter().rev().fold(0u64, |acc, &s| acc * k as u64 + s as u64)
}

/// Number of block pairs `|X|^n |Y|^n`, checked against [`PAIR_BUDGET`].
pub fn pair_space(j: &JointPmf, n: usize, what: &'static str) -> Result<(u64, u64)> {
    let nx = sequence_count(j.rows(), n);
    let ny = sequence_count(j.cols(), n);
    let needed = match (nx, ny) {
        (Some(a), Some(b)) => a as u128 * b as u128,
        _ => u128::MAX,
    };
    if needed > PAIR_BUDGET {
        return Err(Error::BudgetExceeded {
            what,
            needed,
            limit: PAIR_BUDGET,
        });
    }
    Ok((nx.unwrap(), ny.unwrap()))
}

/// All symbols of every sequence of length `n` over `k` symbols, row by row.
pub(crate) fn all_sequences(k: usize, n: usize, count: u64) -> Vec<usize> {
    let mut out = vec![0; count as usize * n];
    for (i, chunk) in out.chunks_mut(n.max(1)).enumerate().take(count as usize) {
        if n > 0 {
            fill_sequence(i as u64, k, chunk);
        }
    }
    out
}

/// The whole block distribution as a joint over `X^n x Y^n`.
pub fn delayed_block_pmf(j: &JointPmf, n: usize, d: i64) -> Result<JointPmf> {
    let seg = DelayedSegments::new(n, d)?;
    let (nx, ny) = pair_space(j, n, "block distribution")?;
    let px = j.marginal_x();
    let py = j.marginal_y();
    let xs = all_sequences(j.rows(), n, nx);
    let ys = all_sequences(j.cols(), n, ny);
    // Factor the product: the x-only and y-only parts are computed once per sequence.
    let x_part: Vec<f64> = (0..nx as usize)
        .map(|a| seg.x_iso.clone().map(|i| px.get(xs[a * n + i])).product())
        .collect();
    let y_part: Vec<f64> = (0..ny as usize)
        .map(|b| seg.y_iso.clone().map(|i| py.get(ys[b * n + i])).product())
        .collect();
    let mut probs = Vec::with_capacity((nx * ny) as usize);
    for a in 0..nx as usize {
        let xa = &xs[a * n..a * n + n];
        for b in 0..ny as usize {
            let yb = &ys[b * n..b * n + n];
            let mut p = x_part[a] * y_part[b];
            for (s, t) in seg.pairs() {
                p *= j.get(xa[s], yb[t]);
            }
            probs.push(p);
        }
    }
    Ok(JointPmf::from_raw(nx as usize, ny as usize, probs))
}

/// Block entropy `n H_i + |d| I(X;Y)` in bits.
pub fn delayed_block_entropy(j: &JointPmf, n: usize, d: i64, event: ErrorEvent) -> Result<f64> {
    let seg = DelayedSegments::new(n, d)?;
    let q = joint_quantities(j);
    Ok(n as f64 * q.h(event) + seg.shift() as f64 * q.mutual_info)
}

/// The same block entropy by enumerating every block pair.
pub fn brute_force_block_entropy(j: &JointPmf, n: usize, d: i64, event: ErrorEvent) -> Result<f64> {
    let block = delayed_block_pmf(j, n, d)?;
    let h_xy = entropy_of(block.probs());
    let h = match event {
        ErrorEvent::WrongX => h_xy - entropy_of(block.marginal_y().probs()),
        ErrorEvent::WrongY => h_xy - entropy_of(block.marginal_x().probs()),
        ErrorEvent::WrongBoth => h_xy,
    };
    Ok(h)
}
