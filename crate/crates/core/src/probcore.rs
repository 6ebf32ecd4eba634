//! Finite-alphabet probability arithmetic.
//!
//! Everything public here is measured in bits. Power sums are formed with
//! `powf` on the raw probabilities and only the final logarithm is taken in
//! base 2. Zero cells follow the usual conventions: `0 log 0 = 0`, and a
//! tilted distribution keeps every zero of the distribution it came from.

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` for a valid distribution.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// Tolerance used when checking identities that hold exactly in real arithmetic.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;

/// Read-only access to a flat probability vector with a 2-D shape.
pub trait Probabilities {
    fn probs(&self) -> &[f64];
    /// `(rows, cols)`; a plain PMF reports `(len, 1)`.
    fn shape(&self) -> (usize, usize);
}

fn validate(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidPmf("empty alphabet".into()));
    }
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidPmf(format!("entry {i} = {p} is not a probability")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PMF_TOLERANCE {
        return Err(Error::InvalidPmf(format!("entries sum to {sum}")));
    }
    Ok(())
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    for p in &mut v {
        *p /= s;
    }
    v
}

/// A probability mass function over `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate(&probs)?;
        Ok(Pmf { probs })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0);
        Pmf {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn point_mass(k: usize, at: usize) -> Self {
        assert!(at < k);
        let mut probs = vec![0.0; k];
        probs[at] = 1.0;
        Pmf { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }
}

impl Probabilities for Pmf {
    fn probs(&self) -> &[f64] {
        &self.probs
    }
    fn shape(&self) -> (usize, usize) {
        (self.probs.len(), 1)
    }
}

/// Joint distribution of `(X, Y)` stored row-major: entry `(x, y)` lives at
/// `x * cols + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(rows: usize, cols: usize, probs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidPmf("empty alphabet".into()));
        }
        if probs.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {rows}x{cols} joint",
                probs.len()
            )));
        }
        validate(&probs)?;
        Ok(JointPmf { rows, cols, probs })
    }

    /// Product distribution `P_X x P_Y`.
    pub fn independent(px: &Pmf, py: &Pmf) -> Self {
        let mut probs = Vec::with_capacity(px.len() * py.len());
        for &a in &px.probs {
            for &b in &py.probs {
                probs.push(a * b);
            }
        }
        JointPmf {
            rows: px.len(),
            cols: py.len(),
            probs,
        }
    }

    /// Doubly symmetric binary source: `X` uniform, `Y = X xor Z`, `Z ~ Bern(p)`.
    pub fn dsbs(crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::OutOfRange(format!("crossover {crossover}")));
        }
        let (a, b) = ((1.0 - crossover) / 2.0, crossover / 2.0);
        JointPmf::new(2, 2, vec![a, b, b, a])
    }

    /// Reinterpret a flat PMF over `rows * cols` cells as a joint.
    pub fn from_flat(rows: usize, cols: usize, p: &Pmf) -> Result<Self> {
        JointPmf::new(rows, cols, p.probs.clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.cols + y]
    }

    pub fn marginal_x(&self) -> Pmf {
        let probs = (0..self.rows)
            .map(|x| self.probs[x * self.cols..(x + 1) * self.cols].iter().sum())
            .collect();
        Pmf { probs }
    }

    pub fn marginal_y(&self) -> Pmf {
        let mut probs = vec![0.0; self.cols];
        for x in 0..self.rows {
            for (y, p) in probs.iter_mut().enumerate() {
                *p += self.get(x, y);
            }
        }
        Pmf { probs }
    }

    pub fn flatten(&self) -> Pmf {
        Pmf {
            probs: self.probs.clone(),
        }
    }

    /// Swap the roles of `X` and `Y`.
    pub fn transpose(&self) -> JointPmf {
        let mut probs = Vec::with_capacity(self.probs.len());
        for y in 0..self.cols {
            for x in 0..self.rows {
                probs.push(self.get(x, y));
            }
        }
        JointPmf {
            rows: self.cols,
            cols: self.rows,
            probs,
        }
    }

    /// Entrywise equality within `tol`.
    pub fn approx_eq(&self, other: &JointPmf, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.probs.iter().zip(&other.probs).all(|(a, b)| (a - b).abs() <= tol)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, probs: Vec<f64>) -> Self {
        debug_assert_eq!(probs.len(), rows * cols);
        JointPmf { rows, cols, probs }
    }
}

impl Probabilities for JointPmf {
    fn probs(&self) -> &[f64] {
        &self.probs
    }
    fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

/// Conditional PMF `W(o | g)`, stored as one row per conditioning symbol `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct CondPmf {
    given: usize,
    outcomes: usize,
    probs: Vec<f64>,
}

impl CondPmf {
    pub fn given(&self) -> usize {
        self.given
    }

    pub fn outcomes(&self) -> usize {
        self.outcomes
    }

    /// `W(outcome | given)`.
    pub fn get(&self, outcome: usize, given: usize) -> f64 {
        self.probs[given * self.outcomes + outcome]
    }

    pub fn row(&self, given: usize) -> &[f64] {
        &self.probs[given * self.outcomes..(given + 1) * self.outcomes]
    }
}

/// The three decoding error events of a two-terminal code: only `x` wrong,
/// only `y` wrong, or both wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorEvent {
    WrongX,
    WrongY,
    WrongBoth,
}

impl ErrorEvent {
    pub const ALL: [ErrorEvent; 3] = [ErrorEvent::WrongX, ErrorEvent::WrongY, ErrorEvent::WrongBoth];

    /// 1-based index as used in rate-region notation.
    pub fn index(self) -> usize {
        match self {
            ErrorEvent::WrongX => 1,
            ErrorEvent::WrongY => 2,
            ErrorEvent::WrongBoth => 3,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(ErrorEvent::WrongX),
            2 => Ok(ErrorEvent::WrongY),
            3 => Ok(ErrorEvent::WrongBoth),
            _ => Err(Error::OutOfRange(format!("event index {i} (expected 1, 2 or 3)"))),
        }
    }
}

pub fn entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn entropy(p: &Pmf) -> f64 {
    entropy_of(&p.probs)
}

/// Binary entropy function `h(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

/// Entropy quantities of a joint distribution, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointQuantities {
    pub h_x: f64,
    pub h_y: f64,
    pub h_x_given_y: f64,
    pub h_y_given_x: f64,
    pub h_xy: f64,
    pub mutual_info: f64,
}

impl JointQuantities {
    /// `H_1 = H(X|Y)`, `H_2 = H(Y|X)`, `H_3 = H(X,Y)`.
    pub fn h(&self, event: ErrorEvent) -> f64 {
        match event {
            ErrorEvent::WrongX => self.h_x_given_y,
            ErrorEvent::WrongY => self.h_y_given_x,
            ErrorEvent::WrongBoth => self.h_xy,
        }
    }
}

pub fn joint_quantities(j: &JointPmf) -> JointQuantities {
    let h_xy = entropy_of(&j.probs);
    let h_x = entropy(&j.marginal_x());
    let h_y = entropy(&j.marginal_y());
    JointQuantities {
        h_x,
        h_y,
        h_x_given_y: (h_xy - h_y).max(0.0),
        h_y_given_x: (h_xy - h_x).max(0.0),
        h_xy,
        mutual_info: (h_x + h_y - h_xy).max(0.0),
    }
}

fn check_shape<P: Probabilities>(p: &P, q: &P) -> Result<()> {
    if p.shape() != q.shape() {
        return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", p.shape(), q.shape())));
    }
    Ok(())
}

pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut d = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a > 0.0 {
            if b <= 0.0 {
                return Err(Error::SupportViolation { index: i, p: a });
            }
            d += a * (a / b).log2();
        }
    }
    Ok(d.max(0.0))
}

/// Kullback-Leibler divergence `D(p || q)` in bits.
pub fn kl_divergence<P: Probabilities>(p: &P, q: &P) -> Result<f64> {
    check_shape(p, q)?;
    kl_raw(p.probs(), q.probs())
}

/// L1 distance `sum |p - q|`, in `[0, 2]`.
pub fn variational_distance<P: Probabilities>(p: &P, q: &P) -> Result<f64> {
    check_shape(p, q)?;
    Ok(l1(p.probs(), q.probs()))
}

pub(crate) fn l1(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum()
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) || rho.is_nan() {
        return Err(Error::RhoOutOfRange(rho));
    }
    Ok(())
}

fn powered(probs: &[f64], a: f64) -> Vec<f64> {
    probs.iter().map(|&p| if p > 0.0 { p.powf(a) } else { 0.0 }).collect()
}

/// The tilted distributions of a joint at parameter `rho`.
///
/// `bar_y` and `tilted_cond_x_given_y` multiply to a joint on `X x Y`
/// ([`TiltedTriple::joint_via_y`]); likewise on the `X` side.
#[derive(Debug, Clone)]
pub struct TiltedTriple {
    pub rho: f64,
    pub tilted_x: Pmf,
    pub tilted_y: Pmf,
    pub tilted_joint: JointPmf,
    pub tilted_cond_x_given_y: CondPmf,
    pub tilted_cond_y_given_x: CondPmf,
    pub bar_x: Pmf,
    pub bar_y: Pmf,
}

impl TiltedTriple {
    /// `bar_y(y) * W(x|y)` as a joint over `X x Y`.
    pub fn joint_via_y(&self) -> JointPmf {
        let (rows, cols) = (self.tilted_cond_x_given_y.outcomes, self.tilted_cond_x_given_y.given);
        let mut probs = vec![0.0; rows * cols];
        for x in 0..rows {
            for y in 0..cols {
                probs[x * cols + y] = self.bar_y.get(y) * self.tilted_cond_x_given_y.get(x, y);
            }
        }
        JointPmf::from_raw(rows, cols, probs)
    }

    /// `bar_x(x) * V(y|x)` as a joint over `X x Y`.
    pub fn joint_via_x(&self) -> JointPmf {
        let (rows, cols) = (self.tilted_cond_y_given_x.given, self.tilted_cond_y_given_x.outcomes);
        let mut probs = vec![0.0; rows * cols];
        for x in 0..rows {
            for y in 0..cols {
                probs[x * cols + y] = self.bar_x.get(x) * self.tilted_cond_y_given_x.get(y, x);
            }
        }
        JointPmf::from_raw(rows, cols, probs)
    }

    /// `H(W | bar_y)`: conditional entropy of `X` given `Y` under the tilted pair.
    pub fn cond_entropy_x_given_y(&self) -> f64 {
        conditional_entropy(&self.bar_y, &self.tilted_cond_x_given_y)
    }

    pub fn cond_entropy_y_given_x(&self) -> f64 {
        conditional_entropy(&self.bar_x, &self.tilted_cond_y_given_x)
    }
}

/// `sum_g w(g) H(W(.|g))`.
pub fn conditional_entropy(weights: &Pmf, cond: &CondPmf) -> f64 {
    (0..cond.given)
        .filter(|&g| weights.get(g) > 0.0)
        .map(|g| weights.get(g) * entropy_of(cond.row(g)))
        .sum()
}

/// Row-normalize `cells[g][o]`; rows with no mass become uniform (they are
/// weighted by zero wherever they are used).
fn cond_from_rows(given: usize, outcomes: usize, cells: impl Fn(usize, usize) -> f64) -> (CondPmf, Vec<f64>) {
    let mut probs = vec![0.0; given * outcomes];
    let mut sums = vec![0.0; given];
    for g in 0..given {
        let s: f64 = (0..outcomes).map(|o| cells(g, o)).sum();
        sums[g] = s;
        for o in 0..outcomes {
            probs[g * outcomes + o] = if s > 0.0 {
                cells(g, o) / s
            } else {
                1.0 / outcomes as f64
            };
        }
    }
    (CondPmf { given, outcomes, probs }, sums)
}

/// Power-`1/(1+rho)` tilting of a joint and its marginal/conditional pieces.
pub fn tilt(j: &JointPmf, rho: f64) -> Result<TiltedTriple> {
    check_rho(rho)?;
    let (rows, cols) = (j.rows, j.cols);
    let px = j.marginal_x();
    let py = j.marginal_y();
    if rho == 0.0 {
        let (tilted_cond_x_given_y, _) = cond_from_rows(cols, rows, |y, x| j.get(x, y));
        let (tilted_cond_y_given_x, _) = cond_from_rows(rows, cols, |x, y| j.get(x, y));
        return Ok(TiltedTriple {
            rho,
            tilted_x: px.clone(),
            tilted_y: py.clone(),
            tilted_joint: j.clone(),
            tilted_cond_x_given_y,
            tilted_cond_y_given_x,
            bar_x: px,
            bar_y: py,
        });
    }
    let a = 1.0 / (1.0 + rho);
    let pw = powered(&j.probs, a);
    let (tilted_cond_x_given_y, col_sums) = cond_from_rows(cols, rows, |y, x| pw[x * cols + y]);
    let (tilted_cond_y_given_x, row_sums) = cond_from_rows(rows, cols, |x, y| pw[x * cols + y]);
    let bar = |sums: &[f64]| Pmf {
        probs: normalized(sums.iter().map(|&s| s.powf(1.0 + rho)).collect()),
    };
    Ok(TiltedTriple {
        rho,
        tilted_x: Pmf {
            probs: normalized(powered(&px.probs, a)),
        },
        tilted_y: Pmf {
            probs: normalized(powered(&py.probs, a)),
        },
        tilted_joint: JointPmf::from_raw(rows, cols, normalized(pw)),
        bar_x: bar(&row_sums),
        bar_y: bar(&col_sums),
        tilted_cond_x_given_y,
        tilted_cond_y_given_x,
    })
}

/// Tilt a single PMF: `p^(1/(1+rho))`, renormalized.
pub fn tilt_pmf(p: &Pmf, rho: f64) -> Result<Pmf> {
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(p.clone());
    }
    Ok(Pmf {
        probs: normalized(powered(&p.probs, 1.0 / (1.0 + rho))),
    })
}

/// `log2 (sum p^(1/(1+rho)))^(1+rho)` for a PMF.
pub fn gallager_e_pmf(rho: f64, p: &Pmf) -> Result<f64> {
    check_rho(rho)?;
    Ok(e3_raw(rho, &p.probs))
}

fn e3_raw(rho: f64, probs: &[f64]) -> f64 {
    if rho == 0.0 {
        return 0.0;
    }
    let s: f64 = powered(probs, 1.0 / (1.0 + rho)).iter().sum();
    ((1.0 + rho) * s.log2()).max(0.0)
}

/// Single-letter Gallager function of a joint for the given error event.
///
/// * `WrongX`:    `log2 sum_y (sum_x P(x,y)^(1/(1+rho)))^(1+rho)`
/// * `WrongY`:    `log2 sum_x (sum_y P(x,y)^(1/(1+rho)))^(1+rho)`
/// * `WrongBoth`: `log2 (sum_{x,y} P(x,y)^(1/(1+rho)))^(1+rho)`
pub fn gallager_e(event: ErrorEvent, rho: f64, j: &JointPmf) -> Result<f64> {
    check_rho(rho)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let a = 1.0 / (1.0 + rho);
    let pw = powered(&j.probs, a);
    let (rows, cols) = (j.rows, j.cols);
    let value = match event {
        ErrorEvent::WrongX => (0..cols)
            .map(|y| (0..rows).map(|x| pw[x * cols + y]).sum::<f64>().powf(1.0 + rho))
            .sum::<f64>()
            .log2(),
        ErrorEvent::WrongY => (0..rows)
            .map(|x| pw[x * cols..(x + 1) * cols].iter().sum::<f64>().powf(1.0 + rho))
            .sum::<f64>()
            .log2(),
        ErrorEvent::WrongBoth => (1.0 + rho) * pw.iter().sum::<f64>().log2(),
    };
    Ok(value.max(0.0))
}

/// `rho H(tilted) - E(rho) - D(tilted || original)` for the identity matching
/// `event`. Vanishes for every valid input.
pub fn gallager_identity_residual(event: ErrorEvent, rho: f64, j: &JointPmf) -> Result<f64> {
    let t = tilt(j, rho)?;
    let e = gallager_e(event, rho, j)?;
    let (h, d) = match event {
        ErrorEvent::WrongX => (t.cond_entropy_x_given_y(), kl_raw(&t.joint_via_y().probs, &j.probs)?),
        ErrorEvent::WrongY => (t.cond_entropy_y_given_x(), kl_raw(&t.joint_via_x().probs, &j.probs)?),
        ErrorEvent::WrongBoth => (
            entropy_of(&t.tilted_joint.probs),
            kl_raw(&t.tilted_joint.probs, &j.probs)?,
        ),
    };
    Ok(rho * h - e - d)
}

/// The same identity for a single PMF: `rho H(p^rho) - E(rho, p) - D(p^rho || p)`.
pub fn marginal_identity_residual(rho: f64, p: &Pmf) -> Result<f64> {
    let t = tilt_pmf(p, rho)?;
    let e = gallager_e_pmf(rho, p)?;
    Ok(rho * entropy(&t) - e - kl_raw(&t.probs, &p.probs)?)
}

/// Random PMF with i.i.d. exponential weights (uniform on the simplex).
pub fn random_pmf<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Pmf {
    let w: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    Pmf { probs: normalized(w) }
}

pub fn random_joint<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> JointPmf {
    JointPmf::from_raw(rows, cols, random_pmf(rng, rows * cols).probs)
}
