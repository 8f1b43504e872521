//! Bayesian inverse problems whose forward map is the error-controlled solver.
//!
//! The forward map is refined (globally, by halving `h`) until the estimated
//! absolute global error at the observation time stays below the budget
//! `B = sigma b / (m rho(0))`.

pub mod sampler;

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::PI;
// float methods for no_std builds; unused when std is linked
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::discretize::{interpolate, Mesh1D};
use crate::error::{Error, Result};
use crate::estimate::{solve_with_error, SolveConfig, TePolicy};
use crate::model::{Benchmark, PdeModel};
use crate::with_benchmark;

pub use sampler::{AdaptiveMetropolis, Point, Proposal, Sampler, SamplerKind, TWalk};

/// `rho(0)` for the standard Gaussian.
pub const GAUSSIAN_RHO0: f64 = 0.398_942_280_401_432_7;

/// Smallest mesh width the refinement loop may reach.
pub const H_MIN: f64 = 1e-5;

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && !value.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        })
    }
}

/// Forward-map error budget `sigma b / (m rho0)`.
pub fn error_bound(sigma: f64, m: usize, b: f64, rho0: f64) -> Result<f64> {
    positive("sigma", sigma)?;
    positive("m", m as f64)?;
    positive("rho0", rho0)?;
    if !(b >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "b",
            value: b,
            reason: "must be non-negative",
        });
    }
    Ok(sigma * b / (m as f64 * rho0))
}

/// `m` observation points at the cell midpoints `(i - 1/2)/m` of `[a, b]`.
pub fn observation_points(a: f64, b: f64, m: usize) -> Vec<f64> {
    (1..=m)
        .map(|i| a + (b - a) * (i as f64 - 0.5) / m as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        positive("shape", shape)?;
        positive("rate", rate)?;
        Ok(Self { shape, rate })
    }

    /// Shape 2 with the mean at `guess`.
    pub fn from_guess(guess: f64) -> Result<Self> {
        positive("prior guess", guess)?;
        Self::new(2.0, 2.0 / guess)
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        if !(x > 0.0) || !x.is_finite() {
            return f64::NEG_INFINITY;
        }
        self.shape * self.rate.ln() - libm::lgamma(self.shape) + (self.shape - 1.0) * x.ln()
            - self.rate * x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverseProblem {
    /// Model family; its own parameters are ignored, its horizon is kept.
    pub family: Benchmark,
    pub t1: f64,
    pub x_obs: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: f64,
    pub prior: Vec<GammaPrior>,
}

impl InverseProblem {
    pub fn new(
        family: Benchmark,
        t1: f64,
        x_obs: Vec<f64>,
        y: Vec<f64>,
        sigma: f64,
        prior: Vec<GammaPrior>,
    ) -> Result<Self> {
        if x_obs.is_empty() {
            return Err(Error::Invalid("need at least one observation"));
        }
        if x_obs.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x_obs.len(),
                got: y.len(),
            });
        }
        if prior.len() != family.theta().len() {
            return Err(Error::DimensionMismatch {
                expected: family.theta().len(),
                got: prior.len(),
            });
        }
        positive("sigma", sigma)?;
        if !(t1 > 0.0) || t1 > family.horizon() {
            return Err(Error::InvalidParameter {
                name: "t1",
                value: t1,
                reason: "must lie in (0, horizon]",
            });
        }
        let (a, b) = family.interval();
        if let Some(&x) = x_obs.iter().find(|&&x| !(x > a && x < b)) {
            return Err(Error::InvalidParameter {
                name: "x_obs",
                value: x,
                reason: "must lie strictly inside the interval",
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("observations must be finite"));
        }
        Ok(Self {
            family,
            t1,
            x_obs,
            y,
            sigma,
            prior,
        })
    }

    pub fn m(&self) -> usize {
        self.x_obs.len()
    }

    pub fn dim(&self) -> usize {
        self.prior.len()
    }

    pub fn bound(&self, b: f64) -> Result<f64> {
        error_bound(self.sigma, self.m(), b, GAUSSIAN_RHO0)
    }

    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        self.prior
            .iter()
            .zip(theta)
            .map(|(p, &x)| p.log_pdf(x))
            .sum()
    }

    pub fn log_likelihood(&self, eta: &[f64]) -> f64 {
        log_likelihood(&self.y, self.sigma, eta)
    }
}

/// Synthetic data from the closed-form solution plus Gaussian noise.
/// The prior defaults to shape 2 centred on the family's default parameters.
pub fn simulate_data<R: Rng + ?Sized>(
    model: &Benchmark,
    sigma: f64,
    m: usize,
    t1: f64,
    rng: &mut R,
) -> Result<InverseProblem> {
    if m == 0 {
        return Err(Error::Invalid("need at least one observation"));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            value: sigma,
            reason: "must be non-negative",
        });
    }
    let (a, b) = model.interval();
    let x_obs = observation_points(a, b, m);
    let mut y = Vec::with_capacity(m);
    for &x in &x_obs {
        let exact = model
            .analytic(x, t1)
            .ok_or_else(|| Error::NoAnalyticSolution(model.name().to_string()))?;
        let z: f64 = StandardNormal.sample(rng);
        y.push(exact + sigma * z);
    }
    let prior = Benchmark::default_theta(model.name())?
        .iter()
        .map(|&g| GammaPrior::from_guess(g))
        .collect::<Result<Vec<_>>>()?;
    // sigma = 0 is allowed for the data but the likelihood needs a scale
    let ip_sigma = if sigma > 0.0 { sigma } else { f64::MIN_POSITIVE };
    InverseProblem::new(*model, t1, x_obs, y, ip_sigma, prior)
}

/// Gaussian log likelihood of `y` given model observations `eta`.
pub fn log_likelihood(y: &[f64], sigma: f64, eta: &[f64]) -> f64 {
    if eta.len() != y.len() || eta.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let norm = -sigma.ln() - 0.5 * (2.0 * PI).ln();
    y.iter()
        .zip(eta)
        .map(|(yi, ei)| {
            let r = (yi - ei) / sigma;
            norm - 0.5 * r * r
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub eta: Vec<f64>,
    pub k_hat: f64,
}

/// Numerical forward map: solve to `t1` on the mesh of width `h` and read the
/// solution off at the observation points.
pub fn forward_observe(
    ip: &InverseProblem,
    theta: &[f64],
    h: f64,
    config: &SolveConfig,
) -> Result<Observation> {
    let model = ip.family.with_theta(theta)?;
    let (a, b) = model.interval();
    let (mesh, exact) = Mesh1D::with_step(a, b, h)?;
    if !exact {
        return Err(Error::InvalidParameter {
            name: "h",
            value: h,
            reason: "must divide the interval into a whole number of cells",
        });
    }
    let config = config.clone().with_end_time(ip.t1);
    let wrap = |e: Error| Error::ForwardMap {
        theta: theta.to_vec(),
        source: alloc::boxed::Box::new(e),
    };
    let result = with_benchmark!(&model, m => solve_with_error(m, &mesh, &config)).map_err(wrap)?;
    let (left, right) = (model.left(ip.t1), model.right(ip.t1));
    let eta = ip
        .x_obs
        .iter()
        .map(|&x| interpolate(&mesh, left, &result.w, right, x))
        .collect();
    Ok(Observation {
        eta,
        k_hat: result.k_hat,
    })
}

/// Forward map through the closed-form solution (`K = 0`).
pub fn forward_observe_exact(ip: &InverseProblem, theta: &[f64]) -> Result<Observation> {
    let model = ip.family.with_theta(theta)?;
    let eta = ip
        .x_obs
        .iter()
        .map(|&x| {
            model
                .analytic(x, ip.t1)
                .ok_or_else(|| Error::NoAnalyticSolution(model.name().to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Observation { eta, k_hat: 0.0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub h0: f64,
    /// Tolerance on the expected absolute Bayes factor.
    pub b: f64,
    /// Number of stored states, the initial one included.
    pub chain_length: usize,
    pub burn_in: usize,
    pub sampler: SamplerKind,
    pub h_min: f64,
    /// Use the closed form instead of the solver.
    pub exact: bool,
    pub solve: SolveConfig,
    /// Starting point; defaults to the prior means.
    pub init: Option<Vec<f64>>,
    /// Initial random-walk step in log space.
    pub rw_step: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            h0: 0.05,
            b: 0.05,
            chain_length: 10_000,
            burn_in: 2_000,
            sampler: SamplerKind::default(),
            h_min: H_MIN,
            exact: false,
            solve: SolveConfig::default()
                .with_alpha(0.75)
                .with_policy(TePolicy::HpOverTau),
            init: None,
            rw_step: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub samples: Vec<Vec<f64>>,
    pub log_post: Vec<f64>,
    pub accepted: Vec<bool>,
    pub h_used: Vec<f64>,
    pub k_hat: Vec<f64>,
    pub burn_in: usize,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Acceptance rate over the moves after the initial state.
    pub fn acceptance_rate(&self) -> f64 {
        let moves = self.accepted.len().saturating_sub(1);
        if moves == 0 {
            return 0.0;
        }
        self.accepted[1..].iter().filter(|&&a| a).count() as f64 / moves as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    /// Accepted forward solve with `K <= B`.
    Eval,
    /// `K > B`: the mesh was halved.
    Refine,
    /// The solve failed; the point was given zero posterior density.
    Diverged,
}

impl TraceEvent {
    pub fn name(self) -> &'static str {
        match self {
            TraceEvent::Eval => "eval",
            TraceEvent::Refine => "refine",
            TraceEvent::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub event: TraceEvent,
    pub theta: Vec<f64>,
    pub h_before: f64,
    pub h_after: f64,
    pub k_hat: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTrace {
    pub records: Vec<TraceRecord>,
    pub bound: f64,
    pub h0: f64,
    pub final_h: f64,
    pub refinements: usize,
}

impl RefinementTrace {
    /// Every accepted solve respects the bound.
    pub fn bound_respected(&self) -> bool {
        self.records
            .iter()
            .filter(|r| r.event == TraceEvent::Eval)
            .all(|r| r.k_hat <= r.bound)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Cached {
    theta: Vec<f64>,
    h: f64,
    log_post: f64,
    k_hat: f64,
}

/// The forward map together with the global mesh width and its trace.
struct Posterior<'a> {
    ip: &'a InverseProblem,
    cfg: &'a McmcConfig,
    bound: f64,
    h: f64,
    iter: usize,
    trace: Vec<TraceRecord>,
    refinements: usize,
    cache: Vec<Cached>,
}

impl Posterior<'_> {
    const CACHE: usize = 8;

    fn lookup(&self, theta: &[f64]) -> Option<&Cached> {
        self.cache
            .iter()
            .find(|c| c.h == self.h && c.theta.as_slice() == theta)
    }

    fn evaluate(&mut self, theta: &[f64]) -> Result<(f64, f64)> {
        if let Some(c) = self.lookup(theta) {
            return Ok((c.log_post, c.k_hat));
        }
        let log_prior = self.ip.log_prior(theta);
        if !log_prior.is_finite() || self.ip.family.with_theta(theta).is_err() {
            return Ok((f64::NEG_INFINITY, f64::NAN));
        }
        let (log_post, k_hat) = if self.cfg.exact {
            let obs = forward_observe_exact(self.ip, theta)?;
            (log_prior + self.ip.log_likelihood(&obs.eta), 0.0)
        } else {
            loop {
                let obs = match forward_observe(self.ip, theta, self.h, &self.cfg.solve) {
                    Ok(obs) => obs,
                    Err(Error::ForwardMap { .. }) => {
                        self.record(TraceEvent::Diverged, theta, self.h, f64::NAN);
                        return Ok((f64::NEG_INFINITY, f64::NAN));
                    }
                    Err(e) => return Err(e),
                };
                if obs.k_hat > self.bound || obs.k_hat.is_nan() {
                    let h_before = self.h;
                    self.h *= 0.5;
                    self.refinements += 1;
                    self.record(TraceEvent::Refine, theta, h_before, obs.k_hat);
                    if self.h < self.cfg.h_min {
                        return Err(Error::BoundUnattainable {
                            h_min: self.cfg.h_min,
                            theta: theta.to_vec(),
                        });
                    }
                    continue;
                }
                self.record(TraceEvent::Eval, theta, self.h, obs.k_hat);
                break (log_prior + self.ip.log_likelihood(&obs.eta), obs.k_hat);
            }
        };
        if self.cache.len() == Self::CACHE {
            self.cache.remove(0);
        }
        self.cache.push(Cached {
            theta: theta.to_vec(),
            h: self.h,
            log_post,
            k_hat,
        });
        Ok((log_post, k_hat))
    }

    fn record(&mut self, event: TraceEvent, theta: &[f64], h_before: f64, k_hat: f64) {
        let h_after = self.h;
        self.trace.push(TraceRecord {
            iter: self.iter,
            event,
            theta: theta.to_vec(),
            h_before,
            h_after,
            k_hat,
            bound: self.bound,
        });
    }

    /// Re-evaluates the sampler's stored points until `h` stops changing.
    fn refresh(&mut self, points: &mut [Point], since: f64) -> Result<f64> {
        let mut seen = since;
        while self.h != seen {
            seen = self.h;
            for p in points.iter_mut() {
                p.log_post = self.evaluate(&p.theta)?.0;
            }
        }
        Ok(seen)
    }
}

/// Runs the sampler with the error-controlled forward map.
pub fn run_mcmc<R: Rng + ?Sized>(
    ip: &InverseProblem,
    cfg: &McmcConfig,
    rng: &mut R,
) -> Result<(Chain, RefinementTrace)> {
    positive("h0", cfg.h0)?;
    positive("h_min", cfg.h_min)?;
    if cfg.chain_length == 0 {
        return Err(Error::Invalid("chain length must be at least 1"));
    }
    if cfg.burn_in >= cfg.chain_length {
        return Err(Error::Invalid("burn-in must be shorter than the chain"));
    }
    let bound = ip.bound(cfg.b)?;
    let mut post = Posterior {
        ip,
        cfg,
        bound,
        h: cfg.h0,
        iter: 0,
        trace: Vec::new(),
        refinements: 0,
        cache: Vec::new(),
    };

    let theta0 = match &cfg.init {
        Some(t) => {
            if t.len() != ip.dim() {
                return Err(Error::DimensionMismatch {
                    expected: ip.dim(),
                    got: t.len(),
                });
            }
            t.clone()
        }
        None => ip.prior.iter().map(|p| p.mean()).collect(),
    };
    let lp0 = post.evaluate(&theta0)?.0;
    if !lp0.is_finite() {
        return Err(Error::Invalid("initial point has zero posterior density"));
    }
    let start = Point {
        theta: theta0.clone(),
        log_post: lp0,
    };
    let mut sampler = match cfg.sampler {
        SamplerKind::AdaptiveMetropolis => {
            Sampler::Metropolis(AdaptiveMetropolis::new(start, cfg.rw_step)?)
        }
        SamplerKind::TWalk => {
            let companion: Vec<f64> = theta0
                .iter()
                .map(|&x| {
                    let z: f64 = StandardNormal.sample(rng);
                    x * (0.01 * z).exp()
                })
                .collect();
            let h_before = post.h;
            let lp1 = post.evaluate(&companion)?.0;
            let mut start = start;
            if post.h != h_before {
                start.log_post = post.evaluate(&start.theta)?.0;
            }
            Sampler::TWalk(TWalk::new(
                start,
                Point {
                    theta: companion,
                    log_post: lp1,
                },
            )?)
        }
    };
    // all stored points must share the final initial h
    let h = post.h;
    post.refresh(sampler.points_mut(), f64::NAN)?;
    debug_assert!(post.h <= h);

    let n = cfg.chain_length;
    let mut chain = Chain {
        samples: Vec::with_capacity(n),
        log_post: Vec::with_capacity(n),
        accepted: Vec::with_capacity(n),
        h_used: Vec::with_capacity(n),
        k_hat: Vec::with_capacity(n),
        burn_in: cfg.burn_in,
    };
    let push = |chain: &mut Chain, post: &mut Posterior<'_>, s: &Sampler, acc: bool| -> Result<()> {
        let cur = s.current();
        let k = post.evaluate(&cur.theta)?.1;
        chain.samples.push(cur.theta.clone());
        chain.log_post.push(cur.log_post);
        chain.accepted.push(acc);
        chain.h_used.push(if cfg.exact { 0.0 } else { post.h });
        chain.k_hat.push(k);
        Ok(())
    };
    push(&mut chain, &mut post, &sampler, true)?;

    for i in 1..n {
        post.iter = i;
        if i == cfg.burn_in {
            sampler.end_burn_in();
        }
        let proposal = sampler.propose(rng);
        let h_before = post.h;
        let mut lp = if proposal.needs_evaluation() {
            post.evaluate(&proposal.theta)?.0
        } else {
            f64::NEG_INFINITY
        };
        if post.h != h_before {
            // the comparison must use one forward map for both points
            loop {
                let h = post.refresh(sampler.points_mut(), h_before)?;
                lp = post.evaluate(&proposal.theta)?.0;
                if post.h == h {
                    break;
                }
            }
        }
        let acc = sampler.finish(proposal, lp, rng);
        push(&mut chain, &mut post, &sampler, acc)?;
    }

    let trace = RefinementTrace {
        records: post.trace,
        bound,
        h0: cfg.h0,
        final_h: post.h,
        refinements: post.refinements,
    };
    Ok((chain, trace))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, standard deviation and central 95% interval after burn-in.
pub fn posterior_summary(chain: &Chain, burn_in: usize) -> Result<Vec<ParamSummary>> {
    if burn_in >= chain.len() {
        return Err(Error::EmptyChain);
    }
    let kept = &chain.samples[burn_in..];
    let d = kept[0].len();
    let n = kept.len() as f64;
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        let mut xs: Vec<f64> = kept.iter().map(|s| s[j]).collect();
        let mean = xs.iter().sum::<f64>() / n;
        let var = if kept.len() > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        xs.sort_by(|a, b| a.total_cmp(b));
        out.push(ParamSummary {
            mean,
            sd: var.sqrt(),
            q025: quantile(&xs, 0.025),
            q975: quantile(&xs, 0.975),
        });
    }
    Ok(out)
}
