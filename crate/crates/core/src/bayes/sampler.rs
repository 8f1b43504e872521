//! MCMC kernels on a positive parameter space.
//!
//! Both samplers split a step into `propose` (no state change) and `finish`
//! (accept/reject against the stored log posteriors) so that the caller can
//! re-evaluate the stored points in between, e.g. after the forward map was
//! refined.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
// float methods for no_std builds; unused when std is linked
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerKind {
    /// Random-walk Metropolis on `log(theta)`, tuned during burn-in.
    #[default]
    AdaptiveMetropolis,
    /// The t-walk (walk, traverse, blow and hop kernels on a pair of points).
    TWalk,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::AdaptiveMetropolis => "adaptive-metropolis",
            SamplerKind::TWalk => "twalk",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive-metropolis" | "am" | "rwm" | "metropolis" => Ok(SamplerKind::AdaptiveMetropolis),
            "twalk" | "t-walk" => Ok(SamplerKind::TWalk),
            _ => Err(Error::Invalid("unknown sampler")),
        }
    }
}

/// A point waiting for its log posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub theta: Vec<f64>,
    /// Which stored point would be replaced.
    slot: usize,
    /// Log proposal-density ratio `log q(x | y) - log q(y | x)`, including any
    /// change-of-variables term.
    log_ratio: f64,
    /// Proposal outside the support; rejected without evaluation.
    outside: bool,
}

impl Proposal {
    pub fn needs_evaluation(&self) -> bool {
        !self.outside
    }
}

/// A stored point and its log posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub theta: Vec<f64>,
    pub log_post: f64,
}

fn in_support(theta: &[f64]) -> bool {
    theta.iter().all(|&x| x > 0.0 && x.is_finite())
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Random-walk Metropolis on `z = log(theta)` with proposal covariance
/// `scale^2 * C`. During adaptation `scale` is nudged after every batch
/// toward an acceptance rate in `[0.25, 0.40]` and `C` follows the empirical
/// covariance of the visited `z`; both freeze when adaptation stops.
#[derive(Debug, Clone)]
pub struct AdaptiveMetropolis {
    current: Point,
    scale: f64,
    chol: Vec<f64>,
    adapting: bool,
    batch: usize,
    batch_accepted: usize,
    batch_seen: usize,
    // running moments of z for the covariance
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl AdaptiveMetropolis {
    pub const BATCH: usize = 50;
    pub const TARGET: (f64, f64) = (0.25, 0.40);

    /// `step` is the initial proposal standard deviation in log space.
    pub fn new(start: Point, step: f64) -> Result<Self> {
        if !in_support(&start.theta) {
            return Err(Error::Invalid("initial point outside the positive support"));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidParameter {
                name: "step",
                value: step,
                reason: "must be positive",
            });
        }
        let d = start.theta.len();
        let mut chol = vec![0.0; d * d];
        for i in 0..d {
            chol[i * d + i] = 1.0;
        }
        Ok(Self {
            current: start,
            scale: step,
            chol,
            adapting: true,
            batch: Self::BATCH,
            batch_accepted: 0,
            batch_seen: 0,
            count: 0,
            mean: vec![0.0; d],
            m2: vec![0.0; d * d],
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn dim(&self) -> usize {
        self.current.theta.len()
    }

    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Proposal {
        let d = self.dim();
        let eps: Vec<f64> = (0..d).map(|_| normal(rng)).collect();
        let mut theta = vec![0.0; d];
        let mut log_ratio = 0.0;
        for i in 0..d {
            let mut step = 0.0;
            for j in 0..=i {
                step += self.chol[i * d + j] * eps[j];
            }
            let z = self.current.theta[i].ln() + self.scale * step;
            theta[i] = z.exp();
            // Jacobian of theta = exp(z): density in z picks up prod theta
            log_ratio += z - self.current.theta[i].ln();
        }
        let outside = !in_support(&theta);
        Proposal {
            theta,
            slot: 0,
            log_ratio,
            outside,
        }
    }

    pub fn finish<R: Rng + ?Sized>(
        &mut self,
        proposal: Proposal,
        log_post: f64,
        rng: &mut R,
    ) -> bool {
        let accepted = !proposal.outside
            && log_post.is_finite()
            && accept(log_post - self.current.log_post + proposal.log_ratio, rng);
        if accepted {
            self.current = Point {
                theta: proposal.theta,
                log_post,
            };
        }
        if self.adapting {
            self.record(accepted);
        }
        accepted
    }

    fn record(&mut self, accepted: bool) {
        let d = self.dim();
        let z: Vec<f64> = self.current.theta.iter().map(|x| x.ln()).collect();
        self.count += 1;
        let n = self.count as f64;
        let delta: Vec<f64> = z.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for i in 0..d {
            self.mean[i] += delta[i] / n;
        }
        for i in 0..d {
            for j in 0..d {
                self.m2[i * d + j] += delta[i] * (z[j] - self.mean[j]);
            }
        }

        self.batch_seen += 1;
        self.batch_accepted += accepted as usize;
        if self.batch_seen < self.batch {
            return;
        }
        let rate = self.batch_accepted as f64 / self.batch_seen as f64;
        if rate < Self::TARGET.0 {
            self.scale *= if rate < 0.05 { 0.5 } else { 0.75 };
        } else if rate > Self::TARGET.1 {
            self.scale *= if rate > 0.8 { 2.0 } else { 1.35 };
        }
        self.batch_seen = 0;
        self.batch_accepted = 0;

        // switch to the empirical shape once there are enough samples
        if d > 1 && self.count >= 200 * d {
            let cov: Vec<f64> = self.m2.iter().map(|v| v / (n - 1.0)).collect();
            if let Some(l) = shape_from_cov(&cov, d) {
                self.chol = l;
            }
        }
    }

    /// Stops adaptation; the proposal is fixed from here on.
    pub fn freeze(&mut self) {
        self.adapting = false;
    }

    pub fn current(&self) -> &Point {
        &self.current
    }

    pub fn current_mut(&mut self) -> &mut Point {
        &mut self.current
    }
}

/// Cholesky factor of `cov` normalised to unit geometric-mean variance so
/// that the overall size stays with `scale`.
fn shape_from_cov(cov: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut s = cov[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    let log_det: f64 = (0..d).map(|i| l[i * d + i].ln()).sum();
    let norm = (-log_det / d as f64).exp();
    if !norm.is_finite() {
        return None;
    }
    for v in &mut l {
        *v *= norm;
    }
    Some(l)
}

fn accept<R: Rng + ?Sized>(log_alpha: f64, rng: &mut R) -> bool {
    if log_alpha >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_alpha
}

/// The t-walk of Christen and Fox (2010) with its default tuning.
#[derive(Debug, Clone)]
pub struct TWalk {
    points: [Point; 2],
    /// Which point is reported as the chain state.
    pub report: usize,
}

impl TWalk {
    pub const AW: f64 = 1.5;
    pub const AT: f64 = 6.0;
    /// Kernel probabilities: walk, traverse, blow, hop.
    pub const KERNEL_PROBS: [f64; 4] = [0.4918, 0.4918, 0.0082, 0.0082];
    const N1PHI: f64 = 4.0;

    pub fn new(x: Point, xp: Point) -> Result<Self> {
        if !in_support(&x.theta) || !in_support(&xp.theta) {
            return Err(Error::Invalid("initial points outside the positive support"));
        }
        if x.theta.len() != xp.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: x.theta.len(),
                got: xp.theta.len(),
            });
        }
        if x.theta.iter().zip(&xp.theta).any(|(a, b)| a == b) {
            return Err(Error::Invalid("t-walk initial points must differ in every coordinate"));
        }
        Ok(Self {
            points: [x, xp],
            report: 0,
        })
    }

    fn pphi(&self) -> f64 {
        let n = self.points[0].theta.len() as f64;
        n.min(Self::N1PHI) / n
    }

    fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        let p = self.pphi();
        self.points[0]
            .theta
            .iter()
            .map(|_| rng.random::<f64>() < p)
            .collect()
    }

    fn sim_beta<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        let at = Self::AT;
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        if u < (at - 1.0) / (2.0 * at) {
            (v.ln() / (at + 1.0)).exp()
        } else {
            (v.ln() / (1.0 - at)).exp()
        }
    }

    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Proposal {
        let ker: f64 = rng.random();
        let dir: f64 = rng.random();
        let slot = if dir < 0.5 { 0 } else { 1 };
        let x = &self.points[slot].theta;
        let xp = &self.points[1 - slot].theta;
        let phi = self.select(rng);
        let nphi = phi.iter().filter(|&&p| p).count();
        let n = x.len();
        let mut y = x.clone();
        let mut log_ratio = 0.0;
        let [p_walk, p_trav, p_blow, _] = Self::KERNEL_PROBS;

        if nphi > 0 {
            if ker < p_walk {
                let aw = Self::AW;
                for i in 0..n {
                    if phi[i] {
                        let u: f64 = rng.random();
                        let z = aw / (1.0 + aw) * (aw * u * u + 2.0 * u - 1.0);
                        y[i] = x[i] + (x[i] - xp[i]) * z;
                    }
                }
            } else if ker < p_walk + p_trav {
                let beta = Self::sim_beta(rng);
                for i in 0..n {
                    if phi[i] {
                        y[i] = xp[i] + beta * (xp[i] - x[i]);
                    }
                }
                log_ratio = (nphi as f64 - 2.0) * beta.ln();
            } else {
                let blow = ker < p_walk + p_trav + p_blow;
                let spread = |a: &[f64], b: &[f64]| -> f64 {
                    let s = (0..n)
                        .filter(|&i| phi[i])
                        .fold(0.0_f64, |m, i| m.max((a[i] - b[i]).abs()));
                    if blow {
                        s
                    } else {
                        s / 3.0
                    }
                };
                let sigma = spread(xp, x);
                for i in 0..n {
                    if phi[i] {
                        let centre = if blow { xp[i] } else { x[i] };
                        y[i] = centre + sigma * normal(rng);
                    }
                }
                // -log q(h | from, pivot)
                let g = |h: &[f64], from: &[f64], pivot: &[f64]| -> f64 {
                    let s = spread(pivot, from);
                    let centre = if blow { pivot } else { from };
                    let sq: f64 = (0..n)
                        .filter(|&i| phi[i])
                        .map(|i| (h[i] - centre[i]) * (h[i] - centre[i]))
                        .sum();
                    let k = nphi as f64;
                    0.5 * k * (2.0 * core::f64::consts::PI).ln() + k * s.ln() + 0.5 * sq / (s * s)
                };
                let w1 = g(&y, x, xp);
                let w2 = g(x, &y, xp);
                log_ratio = w1 - w2;
                if !log_ratio.is_finite() {
                    log_ratio = f64::NEG_INFINITY;
                }
            }
        }
        let outside = !in_support(&y) || !log_ratio.is_finite();
        Proposal {
            theta: y,
            slot,
            log_ratio,
            outside,
        }
    }

    pub fn finish<R: Rng + ?Sized>(
        &mut self,
        proposal: Proposal,
        log_post: f64,
        rng: &mut R,
    ) -> bool {
        let slot = proposal.slot;
        let accepted = !proposal.outside
            && log_post.is_finite()
            && accept(log_post - self.points[slot].log_post + proposal.log_ratio, rng);
        if accepted {
            self.points[slot] = Point {
                theta: proposal.theta,
                log_post,
            };
        }
        accepted
    }

    pub fn points(&self) -> &[Point; 2] {
        &self.points
    }

    pub fn points_mut(&mut self) -> &mut [Point; 2] {
        &mut self.points
    }

    pub fn current(&self) -> &Point {
        &self.points[self.report]
    }
}

/// Either sampler behind one interface.
#[derive(Debug, Clone)]
pub enum Sampler {
    Metropolis(AdaptiveMetropolis),
    TWalk(TWalk),
}

impl Sampler {
    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> Proposal {
        match self {
            Sampler::Metropolis(s) => s.propose(rng),
            Sampler::TWalk(s) => s.propose(rng),
        }
    }

    pub fn finish<R: Rng + ?Sized>(&mut self, p: Proposal, log_post: f64, rng: &mut R) -> bool {
        match self {
            Sampler::Metropolis(s) => s.finish(p, log_post, rng),
            Sampler::TWalk(s) => s.finish(p, log_post, rng),
        }
    }

    pub fn current(&self) -> &Point {
        match self {
            Sampler::Metropolis(s) => s.current(),
            Sampler::TWalk(s) => s.current(),
        }
    }

    /// All stored points, for re-evaluation.
    pub fn points_mut(&mut self) -> &mut [Point] {
        match self {
            Sampler::Metropolis(s) => core::slice::from_mut(s.current_mut()),
            Sampler::TWalk(s) => s.points_mut(),
        }
    }

    pub fn end_burn_in(&mut self) {
        if let Sampler::Metropolis(s) = self {
            s.freeze();
        }
    }
}
