//! Random binning with maximum-likelihood decoding.
//!
//! Each encoder maps its length-`n` sequence to a bin drawn uniformly at
//! random when the code is built. The decoder receives both bin indices and
//! returns the most likely pair among the sequences sharing them, either under
//! a single known source or under a uniform mixture of candidate sources.

mod montecarlo;
mod scoring;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use montecarlo::{
    monte_carlo_error, monte_carlo_sup_max, sample_delayed_pair, wilson_interval, McEstimate, SupMaxEstimate, WILSON_Z,
};
use scoring::Components;

use crate::bounds::SourceClass;
use crate::delaysource::{dummy_delay_set, fill_sequence, pair_space, sequence_count};
use crate::error::{Error, Result};
use crate::probcore::JointPmf;
use crate::typesys::{build_class_shadow, joint_delayed_cap_check, n_type_approx, ApproxConstants, MixedSource};

/// Largest per-encoder sequence space a code will materialize.
pub const SEQUENCE_BUDGET: u64 = 1 << 22;

/// Compressed list of the sequences in each bin, in increasing index order.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BinIndex {
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl BinIndex {
    fn build(bins: &[u32], m: u64) -> Self {
        let mut offsets = vec![0u32; m as usize + 1];
        for &b in bins {
            offsets[b as usize + 1] += 1;
        }
        for i in 0..m as usize {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut items = vec![0u32; bins.len()];
        for (s, &b) in bins.iter().enumerate() {
            items[fill[b as usize] as usize] = s as u32;
            fill[b as usize] += 1;
        }
        BinIndex { offsets, items }
    }

    fn members(&self, bin: u32) -> &[u32] {
        let b = bin as usize;
        &self.items[self.offsets[b] as usize..self.offsets[b + 1] as usize]
    }
}

/// A pair of random binning encoders for blocklength `n`. Bins are numbered
/// from 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinningCode {
    n: usize,
    kx: usize,
    ky: usize,
    m1: u64,
    m2: u64,
    seed: u64,
    bins1: Vec<u32>,
    bins2: Vec<u32>,
    inv1: BinIndex,
    inv2: BinIndex,
}

/// `ceil(2^(n R))`, treating values within 1e-9 of an integer as exact.
pub fn bin_count(n: usize, rate: f64) -> Result<u64> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::OutOfRange(format!("rate {rate}")));
    }
    let v = (n as f64 * rate).exp2();
    let r = v.round();
    let m = if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r
    } else {
        v.ceil()
    };
    if m > u32::MAX as f64 + 1.0 {
        return Err(Error::BudgetExceeded {
            what: "bin count",
            needed: m as u128,
            limit: u32::MAX as u128 + 1,
        });
    }
    Ok(m as u64)
}

fn seq_space(k: usize, n: usize) -> Result<u64> {
    match sequence_count(k, n) {
        Some(c) if c <= SEQUENCE_BUDGET => Ok(c),
        c => Err(Error::BudgetExceeded {
            what: "sequences per encoder",
            needed: c.map_or(u128::MAX, |c| c as u128),
            limit: SEQUENCE_BUDGET as u128,
        }),
    }
}

fn draw_bins(count: u64, m: u64, seed: u64, stream: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| rng.random_range(0..m) as u32).collect()
}

/// Draw a code with `ceil(2^(n R_i))` bins per encoder. Encoder 1 uses stream 0
/// of the seeded generator, encoder 2 stream 1.
pub fn build_code(n: usize, kx: usize, ky: usize, r1: f64, r2: f64, seed: u64) -> Result<BinningCode> {
    if n == 0 || kx == 0 || ky == 0 {
        return Err(Error::OutOfRange("blocklength and alphabets must be positive".into()));
    }
    let nx = seq_space(kx, n)?;
    let ny = seq_space(ky, n)?;
    let m1 = bin_count(n, r1)?;
    let m2 = bin_count(n, r2)?;
    let bins1 = draw_bins(nx, m1, seed, 0);
    let bins2 = draw_bins(ny, m2, seed, 1);
    Ok(BinningCode {
        n,
        kx,
        ky,
        m1,
        m2,
        seed,
        inv1: BinIndex::build(&bins1, m1),
        inv2: BinIndex::build(&bins2, m2),
        bins1,
        bins2,
    })
}

impl BinningCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alphabets(&self) -> (usize, usize) {
        (self.kx, self.ky)
    }

    pub fn bin_counts(&self) -> (u64, u64) {
        (self.m1, self.m2)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `(1/n) log2 m_i`.
    pub fn rates(&self) -> (f64, f64) {
        let n = self.n as f64;
        ((self.m1 as f64).log2() / n, (self.m2 as f64).log2() / n)
    }

    pub fn bin_x(&self, x: u32) -> u32 {
        self.bins1[x as usize]
    }

    pub fn bin_y(&self, y: u32) -> u32 {
        self.bins2[y as usize]
    }

    pub fn members_x(&self, bin: u32) -> &[u32] {
        self.inv1.members(bin)
    }

    pub fn members_y(&self, bin: u32) -> &[u32] {
        self.inv2.members(bin)
    }

    /// Bins holding at least one sequence, ascending.
    fn nonempty_bins(&self) -> (Vec<u32>, Vec<u32>) {
        let f = |inv: &BinIndex, m: u64| (0..m as u32).filter(|&b| !inv.members(b).is_empty()).collect();
        (f(&self.inv1, self.m1), f(&self.inv2, self.m2))
    }
}

/// How the decoder scores candidate pairs.
#[derive(Debug, Clone)]
pub enum DecodeRule {
    /// Maximum likelihood under a uniform mixture of delayed sources.
    Mixed(MixedSource),
    /// Maximum likelihood under one known source and delay.
    Oracle { source: JointPmf, d: i64 },
}

impl DecodeRule {
    /// Mixture over the n-type shadow of `class` and the given delays.
    pub fn mixed(class: &SourceClass, n: usize, delays: Vec<i64>) -> Result<Self> {
        Ok(DecodeRule::Mixed(MixedSource::from_class(class, n, delays)?))
    }

    fn components(&self) -> Vec<(JointPmf, i64)> {
        match self {
            DecodeRule::Mixed(ms) => ms
                .components()
                .iter()
                .flat_map(|c| ms.delays().iter().map(move |&d| (c.clone(), d)))
                .collect(),
            DecodeRule::Oracle { source, d } => vec![(source.clone(), *d)],
        }
    }
}

/// A code bound to a decoding rule. Decisions are memoized per bin pair.
pub struct Decoder<'a> {
    code: &'a BinningCode,
    comps: Components,
    ln_count: f64,
    memo: HashMap<(u32, u32), (u32, u32)>,
}

impl<'a> Decoder<'a> {
    pub fn new(code: &'a BinningCode, rule: &DecodeRule) -> Result<Self> {
        if let DecodeRule::Mixed(ms) = rule {
            if ms.n() != code.n {
                return Err(Error::ShapeMismatch(format!(
                    "mixed source built for n = {}, code has n = {}",
                    ms.n(),
                    code.n
                )));
            }
        }
        let sources = rule.components();
        let comps = Components::new(code.n, code.kx, code.ky, &sources)?;
        Ok(Decoder {
            code,
            ln_count: (sources.len() as f64).ln(),
            comps,
            memo: HashMap::new(),
        })
    }

    pub fn code(&self) -> &BinningCode {
        self.code
    }

    fn check_bins(&self, b1: u32, b2: u32) -> Result<()> {
        if b1 as u64 >= self.code.m1 || b2 as u64 >= self.code.m2 {
            return Err(Error::OutOfRange(format!("bin pair ({b1}, {b2})")));
        }
        Ok(())
    }

    /// Sequence indices of the decoded pair. A bin with no sequences decodes
    /// to `None`; no encoder output can produce it.
    pub fn decode(&mut self, b1: u32, b2: u32) -> Result<Option<(u32, u32)>> {
        self.check_bins(b1, b2)?;
        if let Some(&w) = self.memo.get(&(b1, b2)) {
            return Ok(Some(w));
        }
        let w = self.decode_uncached(b1, b2);
        if let Some(w) = w {
            self.memo.insert((b1, b2), w);
        }
        Ok(w)
    }

    fn decode_uncached(&self, b1: u32, b2: u32) -> Option<(u32, u32)> {
        let xs = self.code.members_x(b1);
        let ys = self.code.members_y(b2);
        if xs.is_empty() || ys.is_empty() {
            return None;
        }
        let (x, y, _) = self.comps.argmax(xs, ys, self.ln_count);
        Some((x, y))
    }

    /// Decoder score of a pair: `ln` of its mixture mass.
    pub fn score(&self, x: u32, y: u32) -> f64 {
        let mut buf = vec![0.0; self.comps.len()];
        self.comps.log_scores(x, y, &mut buf);
        let m = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        scoring::log_sum_exp(&buf, m) - self.ln_count
    }

    /// Decode the pair of sequences encoded by `x` and `y`.
    pub fn decode_sequences(&mut self, x: u32, y: u32) -> (u32, u32) {
        let (b1, b2) = (self.code.bin_x(x), self.code.bin_y(y));
        self.decode(b1, b2)
            .expect("bins come from the code")
            .expect("bins are nonempty")
    }
}

/// One-shot decode of a bin pair into symbol sequences.
pub fn decode(code: &BinningCode, rule: &DecodeRule, b1: u32, b2: u32) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut dec = Decoder::new(code, rule)?;
    let (x, y) = dec
        .decode(b1, b2)?
        .ok_or_else(|| Error::OutOfRange(format!("bin pair ({b1}, {b2}) holds no sequences")))?;
    let mut xs = vec![0; code.n];
    let mut ys = vec![0; code.n];
    fill_sequence(x as u64, code.kx, &mut xs);
    fill_sequence(y as u64, code.ky, &mut ys);
    Ok((xs, ys))
}

/// Exact error probability of the decoder under each `(source, delay)`,
/// accumulated in one pass over every bin pair.
pub fn exact_errors(decoder: &Decoder, sources: &[(JointPmf, i64)]) -> Result<Vec<f64>> {
    let code = decoder.code;
    let probe = sources
        .first()
        .ok_or_else(|| Error::Config("no sources to evaluate".into()))?;
    pair_space(&probe.0, code.n, "exact error enumeration")?;
    let truth = Components::new(code.n, code.kx, code.ky, sources)?;
    let mut err = vec![0.0; sources.len()];
    let mut buf = vec![0.0; sources.len()];
    let (b1s, b2s) = code.nonempty_bins();
    for &b1 in &b1s {
        let xs = code.members_x(b1);
        for &b2 in &b2s {
            let ys = code.members_y(b2);
            let winner = decoder.decode_uncached(b1, b2).expect("nonempty bins");
            for &x in xs {
                for &y in ys {
                    if (x, y) == winner {
                        continue;
                    }
                    truth.log_scores(x, y, &mut buf);
                    for (e, &s) in err.iter_mut().zip(&buf) {
                        *e += s.exp();
                    }
                }
            }
        }
    }
    Ok(err)
}

/// Exact error probability when the pair comes from `source` with delay `d`.
pub fn exact_error_probability(code: &BinningCode, rule: &DecodeRule, source: &JointPmf, d: i64) -> Result<f64> {
    let dec = Decoder::new(code, rule)?;
    Ok(exact_errors(&dec, &[(source.clone(), d)])?[0])
}

/// Worst exact error over every member of `class` and every delay.
pub fn sup_max_error(code: &BinningCode, rule: &DecodeRule, class: &SourceClass, delays: &[i64]) -> Result<f64> {
    let dec = Decoder::new(code, rule)?;
    let sources = cross(class.members(), delays);
    Ok(exact_errors(&dec, &sources)?.into_iter().fold(0.0, f64::max))
}

pub(crate) fn cross(members: &[JointPmf], delays: &[i64]) -> Vec<(JointPmf, i64)> {
    members
        .iter()
        .flat_map(|m| delays.iter().map(move |&d| (m.clone(), d)))
        .collect()
}

/// Outcome of comparing the worst-case error of the mixed-source decoder with
/// its error under the mixture itself.
#[derive(Debug, Clone, PartialEq)]
pub struct UniversalityCheck {
    /// Worst exact error over members and delays.
    pub lhs: f64,
    /// `e^(3 (alpha + eps_n)) (2n + 1) (n + 1)^(|X||Y|) * eps_mixed`.
    pub rhs: f64,
    /// The same product with the cap replaced by the attained worst likelihood
    /// ratio and the counting factor by the actual number of components.
    pub rhs_tight: f64,
    /// Error under the mixed source: mean error over its components.
    pub eps_mixed: f64,
    pub pass: bool,
    pub pass_tight: bool,
}

/// Evaluate the universality inequality for the mixed-source decoder of
/// `class` and `delays` on `code`. Requires `n >= alpha`.
pub fn universality_gap_check(code: &BinningCode, class: &SourceClass, delays: &[i64]) -> Result<UniversalityCheck> {
    let n = code.n;
    let cells = class.rows() * class.cols();
    let consts = ApproxConstants::new(cells, n as u64)?;
    let (types, _) = build_class_shadow(class, n as u64)?;
    let type_joints: Vec<JointPmf> = types.iter().map(|t| t.as_joint()).collect();
    let ms = MixedSource::new(n, type_joints.clone(), delays.to_vec())?;
    let rule = DecodeRule::Mixed(ms);
    let dec = Decoder::new(code, &rule)?;
    let mut sources = cross(class.members(), delays);
    let n_true = sources.len();
    sources.extend(cross(&type_joints, delays));
    let errs = exact_errors(&dec, &sources)?;
    let lhs = errs[..n_true].iter().copied().fold(0.0, f64::max);
    let eps_mixed = errs[n_true..].iter().sum::<f64>() / (errs.len() - n_true) as f64;
    let counting = (2 * n + 1) as f64 * ((n + 1) as f64).powi(cells as i32);
    let mut log_worst: f64 = 0.0;
    for m in class.members() {
        let t = n_type_approx(m, n as u64)?.ntype;
        log_worst = log_worst.max(joint_delayed_cap_check(m, &t, n as u64)?.log_max_ratio);
    }
    let scaled = |log_factor: f64, count: f64| {
        if eps_mixed == 0.0 {
            0.0
        } else {
            (log_factor + count.ln() + eps_mixed.ln()).exp()
        }
    };
    let rhs = scaled(consts.log_ratio_cap(), counting);
    let rhs_tight = scaled(log_worst, (types.len() * delays.len()) as f64);
    Ok(UniversalityCheck {
        lhs,
        rhs,
        rhs_tight,
        eps_mixed,
        pass: lhs <= rhs,
        pass_tight: lhs <= rhs_tight,
    })
}

/// A code whose decoder assumes delays up to `ceil(sqrt n)` in magnitude,
/// whatever the true delay bound.
pub fn dummy_bound_code(
    n: usize,
    r1: f64,
    r2: f64,
    class: &SourceClass,
    seed: u64,
) -> Result<(BinningCode, DecodeRule)> {
    let code = build_code(n, class.rows(), class.cols(), r1, r2, seed)?;
    let rule = DecodeRule::mixed(class, n, dummy_delay_set(n))?;
    Ok((code, rule))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaysource::{delayed_pmf, sequence_from_index};

    fn dsbs() -> JointPmf {
        JointPmf::dsbs(0.1).unwrap()
    }

    #[test]
    fn bin_counts() {
        assert_eq!(bin_count(8, 0.0).unwrap(), 1);
        assert_eq!(bin_count(8, 0.5).unwrap(), 16);
        assert_eq!(bin_count(16, 0.85).unwrap(), 12417);
        assert!(bin_count(40, 1.0).is_err());
    }

    #[test]
    fn code_construction() {
        let c = build_code(6, 2, 2, 0.0, 0.0, 3).unwrap();
        assert_eq!(c.members_x(0).len(), 64);
        assert_eq!(c.bin_counts(), (1, 1));
        let a = build_code(8, 2, 2, 0.6, 0.7, 42).unwrap();
        let b = build_code(8, 2, 2, 0.6, 0.7, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, build_code(8, 2, 2, 0.6, 0.7, 43).unwrap());
        let total: usize = (0..a.m1 as u32).map(|k| a.members_x(k).len()).sum();
        assert_eq!(total, 256);
        for x in 0..256u32 {
            assert!(a.members_x(a.bin_x(x)).contains(&x));
        }
        let (r1, _) = a.rates();
        assert!((r1 - (a.m1 as f64).log2() / 8.0).abs() < 1e-15);
        assert!(matches!(
            build_code(23, 2, 2, 0.5, 0.5, 0),
            Err(Error::BudgetExceeded { .. })
        ));
        // Full rate still draws bins at random, so collisions are allowed.
        let full = build_code(4, 2, 2, 1.0, 1.0, 0).unwrap();
        assert_eq!(full.bin_counts(), (16, 16));
    }

    #[test]
    fn single_candidate_decodes_to_itself() {
        let code = build_code(3, 2, 2, 3.0, 3.0, 9).unwrap();
        let rule = DecodeRule::Oracle { source: dsbs(), d: 0 };
        let mut dec = Decoder::new(&code, &rule).unwrap();
        for x in 0..8u32 {
            let b = code.bin_x(x);
            if code.members_x(b).len() == 1 {
                let y = 5u32;
                if code.members_y(code.bin_y(y)).len() == 1 {
                    assert_eq!(dec.decode_sequences(x, y), (x, y));
                }
            }
        }
    }

    #[test]
    fn one_bin_error_is_one_minus_max_mass() {
        let j = JointPmf::new(2, 2, vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let code = build_code(2, 2, 2, 0.0, 0.0, 1).unwrap();
        let rule = DecodeRule::Oracle {
            source: j.clone(),
            d: 1,
        };
        let err = exact_error_probability(&code, &rule, &j, 1).unwrap();
        let mut best: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let p = delayed_pmf(&j, 2, 1, &sequence_from_index(a, 2, 2), &sequence_from_index(b, 2, 2)).unwrap();
                best = best.max(p);
            }
        }
        assert!((err - (1.0 - best)).abs() < 1e-12);
    }

    #[test]
    fn injective_code_is_lossless() {
        // Search seeds for a code whose bins happen to be injective.
        for seed in 0..200 {
            let code = build_code(2, 2, 2, 3.0, 3.0, seed).unwrap();
            let inj = |k: u64| (0..k as u32).all(|b| code.members_x(b).len() <= 1 && code.members_y(b).len() <= 1);
            if inj(code.m1) {
                let rule = DecodeRule::Oracle { source: dsbs(), d: 0 };
                assert_eq!(exact_error_probability(&code, &rule, &dsbs(), 0).unwrap(), 0.0);
                return;
            }
        }
        panic!("no injective code found");
    }

    #[test]
    fn mixed_singleton_matches_oracle() {
        let j = JointPmf::new(2, 2, vec![0.375, 0.125, 0.125, 0.375]).unwrap();
        let class = SourceClass::singleton(j.clone());
        let code = build_code(8, 2, 2, 0.6, 0.6, 5).unwrap();
        let mixed = DecodeRule::mixed(&class, 8, vec![0]).unwrap();
        let oracle = DecodeRule::Oracle {
            source: j.clone(),
            d: 0,
        };
        let mut a = Decoder::new(&code, &mixed).unwrap();
        let mut b = Decoder::new(&code, &oracle).unwrap();
        for b1 in 0..code.m1 as u32 {
            for b2 in 0..code.m2 as u32 {
                assert_eq!(a.decode(b1, b2).unwrap(), b.decode(b1, b2).unwrap());
            }
        }
    }

    #[test]
    fn sup_max_monotone_in_delays() {
        let class = SourceClass::singleton(dsbs());
        let code = build_code(4, 2, 2, 0.5, 0.5, 2).unwrap();
        let rule = DecodeRule::mixed(&class, 4, vec![-1, 0, 1]).unwrap();
        let small = sup_max_error(&code, &rule, &class, &[0]).unwrap();
        let big = sup_max_error(&code, &rule, &class, &[0, 4]).unwrap();
        assert!(big >= small);
        let single = exact_error_probability(&code, &rule, &dsbs(), 0).unwrap();
        assert_eq!(small, single);
    }

    #[test]
    fn dummy_code_delays() {
        let class = SourceClass::singleton(dsbs());
        let (_, rule) = dummy_bound_code(9, 0.5, 0.5, &class, 0).unwrap();
        match rule {
            DecodeRule::Mixed(ms) => assert_eq!(ms.delays(), &[-3, -2, -1, 0, 1, 2, 3]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn universality_small_alpha() {
        // A deterministic pair has one cell, so alpha = 0 and any n is allowed.
        let j = JointPmf::new(1, 1, vec![1.0]).unwrap();
        let class = SourceClass::singleton(j);
        let code = build_code(3, 1, 1, 0.0, 0.0, 0).unwrap();
        let u = universality_gap_check(&code, &class, &[-1, 0, 1]).unwrap();
        assert_eq!(u.lhs, 0.0);
        assert!(u.pass);
    }
}
