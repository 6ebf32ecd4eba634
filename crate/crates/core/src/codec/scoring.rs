//! Log-likelihood scoring of candidate pairs under a list of delayed sources.
//!
//! Each component is a `(joint, delay)` pair; the log-mass of `(x, y)` is the
//! sum of the three segment log-masses. Binary alphabets use packed bit tables
//! so that the aligned part reduces to one popcount per component.

use crate::delaysource::{all_sequences, DelayedSegments};
use crate::error::{Error, Result};
use crate::probcore::JointPmf;

/// Above this many `(component, sequence)` entries the generic tables are used.
const BINARY_TABLE_LIMIT: usize = 1 << 24;

fn ln_or_neg_inf(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `count * l`, taking `0 * (-inf)` as 0.
fn term(count: u32, l: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        count as f64 * l
    }
}

/// `ln sum exp(s)` given `m = max s`.
pub(crate) fn log_sum_exp(s: &[f64], m: f64) -> f64 {
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + s.iter().map(|&v| (v - m).exp()).sum::<f64>().ln()
}

struct BinaryComp {
    /// Aligned bits of each x sequence, packed from the first aligned position.
    ax: Vec<u32>,
    ay: Vec<u32>,
    /// Per-sequence offsets: with `fast`, everything except the `n11 * w` term;
    /// otherwise only the unaligned segment.
    bx: Vec<f64>,
    by: Vec<f64>,
    /// `l00 - l01 - l10 + l11`.
    w: f64,
    /// Log cells `[l00, l01, l10, l11]`.
    l: [f64; 4],
    aligned_len: u32,
    /// All four cells positive, so the linear decomposition is exact.
    fast: bool,
}

struct GenericComp {
    seg: DelayedSegments,
    iso_x: Vec<f64>,
    iso_y: Vec<f64>,
    lxy: Vec<f64>,
}

enum Tables {
    Binary(Vec<BinaryComp>),
    Generic {
        xs: Vec<u8>,
        ys: Vec<u8>,
        comps: Vec<GenericComp>,
    },
}

/// Per-component log-likelihood tables over every sequence of length `n`.
pub(crate) struct Components {
    n: usize,
    ky: usize,
    tables: Tables,
}

fn bits(seq: &[usize], range: std::ops::Range<usize>) -> u32 {
    range.enumerate().fold(0u32, |acc, (k, i)| acc | ((seq[i] as u32) << k))
}

fn iso_log(seq: &[usize], range: std::ops::Range<usize>, l: &[f64], counts: &mut [u32]) -> f64 {
    counts.iter_mut().for_each(|c| *c = 0);
    for i in range {
        counts[seq[i]] += 1;
    }
    counts.iter().zip(l).map(|(&c, &v)| term(c, v)).sum()
}

impl Components {
    pub fn new(n: usize, kx: usize, ky: usize, sources: &[(JointPmf, i64)]) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::Config("no scoring components".into()));
        }
        for (j, d) in sources {
            if (j.rows(), j.cols()) != (kx, ky) {
                return Err(Error::ShapeMismatch("component alphabet differs from the code".into()));
            }
            DelayedSegments::new(n, *d)?;
        }
        let nx = kx.pow(n as u32);
        let ny = ky.pow(n as u32);
        let xs = all_sequences(kx, n, nx as u64);
        let ys = all_sequences(ky, n, ny as u64);
        let binary = kx == 2 && ky == 2 && n <= 32 && sources.len() * (nx + ny) <= BINARY_TABLE_LIMIT;
        let tables = if binary {
            Tables::Binary(
                sources
                    .iter()
                    .map(|(j, d)| binary_comp(n, j, *d, &xs, &ys, nx, ny))
                    .collect(),
            )
        } else {
            let comps = sources
                .iter()
                .map(|(j, d)| generic_comp(n, j, *d, &xs, &ys, nx, ny))
                .collect();
            Tables::Generic {
                xs: xs.iter().map(|&s| s as u8).collect(),
                ys: ys.iter().map(|&s| s as u8).collect(),
                comps,
            }
        };
        Ok(Components { n, ky, tables })
    }

    pub fn len(&self) -> usize {
        match &self.tables {
            Tables::Binary(c) => c.len(),
            Tables::Generic { comps, .. } => comps.len(),
        }
    }

    /// Log-mass of `(x, y)` under every component.
    pub fn log_scores(&self, x: u32, y: u32, out: &mut [f64]) {
        let (x, y) = (x as usize, y as usize);
        match &self.tables {
            Tables::Binary(comps) => {
                for (o, c) in out.iter_mut().zip(comps) {
                    *o = binary_score(c, c.bx[x], c.ax[x], c.by[y], c.ay[y]);
                }
            }
            Tables::Generic { xs, ys, comps } => {
                let n = self.n;
                let xa = &xs[x * n..x * n + n];
                let yb = &ys[y * n..y * n + n];
                for (o, c) in out.iter_mut().zip(comps) {
                    *o = generic_score(c, self.ky, x, y, xa, yb);
                }
            }
        }
    }

    /// The candidate with the highest mixture score
    /// `ln(sum_c exp(s_c)) - ln_count`; ties keep the first in
    /// `(x, y)` scan order.
    pub fn argmax(&self, xs: &[u32], ys: &[u32], ln_count: f64) -> (u32, u32, f64) {
        let mut buf = vec![0.0; self.len()];
        let mut best = f64::NEG_INFINITY;
        let mut winner = (xs[0], ys[0]);
        match &self.tables {
            Tables::Binary(comps) => return binary_argmax(comps, xs, ys, ln_count),
            Tables::Generic { .. } => {
                for &x in xs {
                    for &y in ys {
                        self.log_scores(x, y, &mut buf);
                        let m = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        if m < floor(best) {
                            continue;
                        }
                        let total = log_sum_exp(&buf, m) - ln_count;
                        if total > best {
                            best = total;
                            winner = (x, y);
                        }
                    }
                }
            }
        }
        (winner.0, winner.1, best)
    }
}

/// Candidates whose best component falls below this cannot win. Skipping on
/// the max component is exact because the mixture score never exceeds it; the
/// margin absorbs rounding in the log-sum-exp.
#[inline]
fn floor(best: f64) -> f64 {
    if best.is_finite() {
        best - 1e-9 * best.abs().max(1.0)
    } else {
        f64::NEG_INFINITY
    }
}

fn binary_argmax(comps: &[BinaryComp], xs: &[u32], ys: &[u32], ln_count: f64) -> (u32, u32, f64) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("popcnt") {
            // SAFETY: the CPU supports the enabled feature.
            return unsafe { binary_argmax_popcnt(comps, xs, ys, ln_count) };
        }
    }
    binary_argmax_dispatch(comps, xs, ys, ln_count)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
unsafe fn binary_argmax_popcnt(comps: &[BinaryComp], xs: &[u32], ys: &[u32], ln_count: f64) -> (u32, u32, f64) {
    binary_argmax_dispatch(comps, xs, ys, ln_count)
}

#[inline(always)]
fn binary_argmax_dispatch(comps: &[BinaryComp], xs: &[u32], ys: &[u32], ln_count: f64) -> (u32, u32, f64) {
    if comps.iter().all(|k| k.fast) {
        match comps.len() {
            1 => return fast_kernel::<1>(comps, xs, ys, ln_count),
            2 => return fast_kernel::<2>(comps, xs, ys, ln_count),
            3 => return fast_kernel::<3>(comps, xs, ys, ln_count),
            4 => return fast_kernel::<4>(comps, xs, ys, ln_count),
            5 => return fast_kernel::<5>(comps, xs, ys, ln_count),
            6 => return fast_kernel::<6>(comps, xs, ys, ln_count),
            7 => return fast_kernel::<7>(comps, xs, ys, ln_count),
            8 => return fast_kernel::<8>(comps, xs, ys, ln_count),
            9 => return fast_kernel::<9>(comps, xs, ys, ln_count),
            _ => {}
        }
    }
    general_kernel(comps, xs, ys, ln_count)
}

/// Every component has four positive cells, `C` components in total.
#[inline(always)]
fn fast_kernel<const C: usize>(comps: &[BinaryComp], xs: &[u32], ys: &[u32], ln_count: f64) -> (u32, u32, f64) {
    let w: [f64; C] = std::array::from_fn(|k| comps[k].w);
    // Gather the y-side tables once so the inner loop reads contiguous memory.
    let gy: Vec<([f64; C], [u32; C])> = ys
        .iter()
        .map(|&y| {
            let y = y as usize;
            (
                std::array::from_fn(|k| comps[k].by[y]),
                std::array::from_fn(|k| comps[k].ay[y]),
            )
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    let mut thr = f64::NEG_INFINITY;
    let mut winner = (xs[0], ys[0]);
    let mut buf = [0.0; C];
    for &x in xs {
        let bx: [f64; C] = std::array::from_fn(|k| comps[k].bx[x as usize]);
        let ax: [u32; C] = std::array::from_fn(|k| comps[k].ax[x as usize]);
        for (yi, (by, ay)) in gy.iter().enumerate() {
            let mut m = f64::NEG_INFINITY;
            for k in 0..C {
                let s = bx[k] + by[k] + (ax[k] & ay[k]).count_ones() as f64 * w[k];
                buf[k] = s;
                m = m.max(s);
            }
            if m < thr {
                continue;
            }
            let total = log_sum_exp(&buf, m) - ln_count;
            if total > best {
                best = total;
                thr = floor(best);
                winner = (x, ys[yi]);
            }
        }
    }
    (winner.0, winner.1, best)
}

fn general_kernel(comps: &[BinaryComp], xs: &[u32], ys: &[u32], ln_count: f64) -> (u32, u32, f64) {
    let c = comps.len();
    let mut buf = vec![0.0; c];
    let mut best = f64::NEG_INFINITY;
    let mut thr = f64::NEG_INFINITY;
    let mut winner = (xs[0], ys[0]);
    for &x in xs {
        let x = x as usize;
        for &y in ys {
            let yu = y as usize;
            let mut m = f64::NEG_INFINITY;
            for (k, comp) in comps.iter().enumerate() {
                let s = binary_score(comp, comp.bx[x], comp.ax[x], comp.by[yu], comp.ay[yu]);
                buf[k] = s;
                m = m.max(s);
            }
            if m < thr {
                continue;
            }
            let total = log_sum_exp(&buf, m) - ln_count;
            if total > best {
                best = total;
                thr = floor(best);
                winner = (x as u32, y);
            }
        }
    }
    (winner.0, winner.1, best)
}

#[inline(always)]
fn binary_score(c: &BinaryComp, bx: f64, ax: u32, by: f64, ay: u32) -> f64 {
    let n11 = (ax & ay).count_ones();
    if c.fast {
        return bx + by + n11 as f64 * c.w;
    }
    let n1x = ax.count_ones();
    let n1y = ay.count_ones();
    let n10 = n1x - n11;
    let n01 = n1y - n11;
    let n00 = c.aligned_len + n11 - n1x - n1y;
    bx + by + term(n00, c.l[0]) + term(n01, c.l[1]) + term(n10, c.l[2]) + term(n11, c.l[3])
}

fn binary_comp(n: usize, j: &JointPmf, d: i64, xs: &[usize], ys: &[usize], nx: usize, ny: usize) -> BinaryComp {
    let seg = DelayedSegments::new(n, d).expect("delay checked");
    let px = j.marginal_x();
    let py = j.marginal_y();
    let lx = [ln_or_neg_inf(px.get(0)), ln_or_neg_inf(px.get(1))];
    let ly = [ln_or_neg_inf(py.get(0)), ln_or_neg_inf(py.get(1))];
    let l = [
        ln_or_neg_inf(j.get(0, 0)),
        ln_or_neg_inf(j.get(0, 1)),
        ln_or_neg_inf(j.get(1, 0)),
        ln_or_neg_inf(j.get(1, 1)),
    ];
    let fast = l.iter().all(|v| v.is_finite());
    let aligned_len = seg.aligned_len() as u32;
    let mut counts = [0u32; 2];
    let mut ax = Vec::with_capacity(nx);
    let mut bx = Vec::with_capacity(nx);
    for a in 0..nx {
        let s = &xs[a * n..a * n + n];
        let bits_a = bits(s, seg.x_aligned.clone());
        let mut off = iso_log(s, seg.x_iso.clone(), &lx, &mut counts);
        if fast {
            off += aligned_len as f64 * l[0] + bits_a.count_ones() as f64 * (l[2] - l[0]);
        }
        ax.push(bits_a);
        bx.push(off);
    }
    let mut ay = Vec::with_capacity(ny);
    let mut by = Vec::with_capacity(ny);
    for b in 0..ny {
        let s = &ys[b * n..b * n + n];
        let bits_b = bits(s, seg.y_aligned.clone());
        let mut off = iso_log(s, seg.y_iso.clone(), &ly, &mut counts);
        if fast {
            off += bits_b.count_ones() as f64 * (l[1] - l[0]);
        }
        ay.push(bits_b);
        by.push(off);
    }
    BinaryComp {
        ax,
        ay,
        bx,
        by,
        w: l[0] - l[1] - l[2] + l[3],
        l,
        aligned_len,
        fast,
    }
}

fn generic_comp(n: usize, j: &JointPmf, d: i64, xs: &[usize], ys: &[usize], nx: usize, ny: usize) -> GenericComp {
    let seg = DelayedSegments::new(n, d).expect("delay checked");
    let lx: Vec<f64> = (0..j.rows()).map(|a| ln_or_neg_inf(j.marginal_x().get(a))).collect();
    let ly: Vec<f64> = (0..j.cols()).map(|b| ln_or_neg_inf(j.marginal_y().get(b))).collect();
    let mut cx = vec![0u32; j.rows()];
    let mut cy = vec![0u32; j.cols()];
    let iso_x = (0..nx)
        .map(|a| iso_log(&xs[a * n..a * n + n], seg.x_iso.clone(), &lx, &mut cx))
        .collect();
    let iso_y = (0..ny)
        .map(|b| iso_log(&ys[b * n..b * n + n], seg.y_iso.clone(), &ly, &mut cy))
        .collect();
    let mut lxy = Vec::with_capacity(j.rows() * j.cols());
    for a in 0..j.rows() {
        for b in 0..j.cols() {
            lxy.push(ln_or_neg_inf(j.get(a, b)));
        }
    }
    GenericComp { seg, iso_x, iso_y, lxy }
}

fn generic_score(c: &GenericComp, ky: usize, x: usize, y: usize, xa: &[u8], yb: &[u8]) -> f64 {
    let mut s = c.iso_x[x] + c.iso_y[y];
    for (i, k) in c.seg.pairs() {
        s += c.lxy[xa[i] as usize * ky + yb[k] as usize];
    }
    s
}
