//! Numerical solution with an after-the-fact estimate of the absolute global
//! error.
//!
//! The error is split into the time-integration part `e_hat`, accumulated
//! from the embedded local errors, and the spatial part `eta_hat`, the
//! solution of the linear error equation
//!
//! ```text
//! eta' = J eta + TE,   eta(0) = 0
//! ```
//!
//! where `J` is a diagonal secant approximation of `dG/dV` and `TE` an
//! estimate of the spatial truncation error. Both parts are signed as
//! "numerical minus exact".

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use num_traits::Float;

use crate::discretize::{prolong, restrict, Linearization, Mesh1D, Semidiscrete};
use crate::error::{Error, Result};
use crate::inf_norm;
use crate::model::PdeModel;
use crate::rkck::{ButcherTableau, TimeGrid, Workspace, CASH_KARP, STAGES};

/// Denominators below this are treated as zero in the secant Jacobian.
pub const EPS_DEN: f64 = 1e-12;

/// How the spatial truncation error is estimated at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TePolicy {
    /// `(W_2h - R W_h) / (2^p - 1)` per coarse node, linearly interpolated to
    /// the fine nodes with zero at the boundary.
    RichardsonField,
    /// Richardson applied to the semi-discrete residual:
    /// `(G_2h(R W_h) - R G_h(W_h)) / (2^p - 1)`. Estimates `G_h(U) - U'` and
    /// needs no coarse integration.
    #[default]
    RichardsonResidual,
    /// The scalar `||R W_h - W_2h|| / (2^p - 1)` broadcast to every node.
    Alg1Scalar,
    /// The constant `h^p / tau`, `tau` being the model's time horizon.
    HpOverTau,
}

impl TePolicy {
    pub const NAMES: [&'static str; 4] = [
        "richardson_field",
        "richardson_residual",
        "alg1_scalar",
        "hp_over_tau",
    ];

    pub fn name(self) -> &'static str {
        match self {
            TePolicy::RichardsonField => Self::NAMES[0],
            TePolicy::RichardsonResidual => Self::NAMES[1],
            TePolicy::Alg1Scalar => Self::NAMES[2],
            TePolicy::HpOverTau => Self::NAMES[3],
        }
    }

    /// Whether the policy needs the coarse-mesh integration.
    pub fn needs_coarse_solve(self) -> bool {
        matches!(self, TePolicy::RichardsonField | TePolicy::Alg1Scalar)
    }
}

impl fmt::Display for TePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "richardson_field" => Ok(TePolicy::RichardsonField),
            "richardson_residual" => Ok(TePolicy::RichardsonResidual),
            "alg1_scalar" => Ok(TePolicy::Alg1Scalar),
            "hp_over_tau" => Ok(TePolicy::HpOverTau),
            _ => Err(Error::Invalid("unknown truncation-error policy")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// `k = alpha h^2` unless `fixed_k` is set.
    pub alpha: f64,
    pub fixed_k: Option<f64>,
    /// Integrate to this time instead of the model horizon.
    pub end_time: Option<f64>,
    pub policy: TePolicy,
    pub linearization: Linearization,
    pub tableau: ButcherTableau,
    /// Skip the error estimate entirely (plain solve).
    pub estimate_error: bool,
    /// Keep every `n`-th state (the final state is always kept).
    pub snapshot_every: Option<usize>,
    /// Record per-step norms.
    pub diagnostics: bool,
    /// Track `max_n ||W_n - U(t_n)||` against the closed form, if there is one.
    pub track_true_error: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            alpha: CASH_KARP.default_alpha(),
            fixed_k: None,
            end_time: None,
            policy: TePolicy::default(),
            linearization: Linearization::default(),
            tableau: CASH_KARP,
            estimate_error: true,
            snapshot_every: None,
            diagnostics: false,
            track_true_error: false,
        }
    }
}

impl SolveConfig {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_policy(mut self, policy: TePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_end_time(mut self, t: f64) -> Self {
        self.end_time = Some(t);
        self
    }

    pub fn without_estimate(mut self) -> Self {
        self.estimate_error = false;
        self
    }

    fn time_grid(&self, tau: f64, h: f64) -> Result<TimeGrid> {
        if tau == 0.0 {
            return TimeGrid::with_steps(0.0, 0);
        }
        let k = match self.fixed_k {
            Some(k) => k,
            None => {
                if !(self.alpha > 0.0) || !self.alpha.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "alpha",
                        value: self.alpha,
                        reason: "must be positive",
                    });
                }
                self.alpha * h * h
            }
        };
        TimeGrid::covering(tau, k)
    }
}

/// Per-step norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostic {
    pub t: f64,
    pub tau_inf: f64,
    pub eta_inf: f64,
    pub e_inf: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub mesh: Mesh1D,
    pub h: f64,
    pub k: f64,
    pub steps: usize,
    pub alpha: f64,
    pub t_end: f64,
    pub policy: TePolicy,
    /// Fine-mesh state at `t_end`.
    pub w: Vec<f64>,
    /// `(t_n, W_n)` for the requested snapshots, ending with `t_end`.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    /// Time part of the error; all zero when the estimate is disabled.
    pub e_hat: Vec<f64>,
    /// Spatial part of the error.
    pub eta_hat: Vec<f64>,
    /// `e_hat + eta_hat`.
    pub e_total: Vec<f64>,
    /// `||e_total||_inf`
    pub k_hat: f64,
    pub diagnostics: Vec<StepDiagnostic>,
    /// `max_n ||W_n - U(t_n)||_inf`, when tracked.
    pub max_true_error: Option<f64>,
}

impl SolveResult {
    /// `||W_M - U(t_end)||_inf` against the closed form.
    pub fn final_true_error<M: PdeModel + ?Sized>(&self, model: &M) -> Option<f64> {
        true_error(model, &self.mesh, self.t_end, &self.w)
    }
}

fn true_error<M: PdeModel + ?Sized>(model: &M, mesh: &Mesh1D, t: f64, w: &[f64]) -> Option<f64> {
    let mut worst = 0.0_f64;
    for (x, wi) in mesh.interior_nodes().zip(w) {
        worst = worst.max((wi - model.analytic(x, t)?).abs());
    }
    Some(worst)
}

/// Estimate of the spatial truncation error on the fine mesh.
///
/// `w_h`/`w_2h` are the fine and coarse states at `t`; `g_h` is `G_h(t, w_h)`
/// (only read by the residual policy, which ignores `w_2h`).
#[allow(clippy::too_many_arguments)]
pub fn truncation_error<M: PdeModel + ?Sized>(
    policy: TePolicy,
    fine: &Semidiscrete<'_, M>,
    coarse: &Semidiscrete<'_, M>,
    t: f64,
    w_h: &[f64],
    w_2h: &[f64],
    g_h: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let mesh = fine.mesh();
    let p = fine.model().order();
    let scale = 1.0 / (2.0.powf(p) - 1.0);
    let n = mesh.dim();
    if w_h.len() != n || out.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if w_h.len() != n { w_h.len() } else { out.len() },
        });
    }
    let check_coarse = |v: &[f64]| {
        if v.len() != coarse.dim() {
            Err(Error::DimensionMismatch {
                expected: coarse.dim(),
                got: v.len(),
            })
        } else {
            Ok(())
        }
    };
    match policy {
        TePolicy::RichardsonField => {
            check_coarse(w_2h)?;
            let r = restrict(w_h, mesh)?;
            let d: Vec<f64> = w_2h.iter().zip(&r).map(|(c, f)| (c - f) * scale).collect();
            prolong(&d, 0.0, 0.0, out)
        }
        TePolicy::RichardsonResidual => {
            if g_h.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: g_h.len(),
                });
            }
            let r = restrict(w_h, mesh)?;
            let gc = coarse.eval_vec(t, &r)?;
            let rg = restrict(g_h, mesh)?;
            let d: Vec<f64> = gc.iter().zip(&rg).map(|(c, f)| (c - f) * scale).collect();
            let (first, last) = (d[0], d[d.len() - 1]);
            prolong(&d, first, last, out)
        }
        TePolicy::Alg1Scalar => {
            check_coarse(w_2h)?;
            let r = restrict(w_h, mesh)?;
            let worst = r
                .iter()
                .zip(w_2h)
                .fold(0.0_f64, |m, (f, c)| m.max((f - c).abs()));
            // ||.|| / (h^p (2^p - 1)) is the error constant; times h^p
            out.fill(worst * scale);
            Ok(())
        }
        TePolicy::HpOverTau => {
            out.fill(mesh.h().powf(p) / fine.model().horizon());
            Ok(())
        }
    }
}

/// Elementwise secant `(G(t, w_next) - G(t, w_prev)) / (w_next - w_prev)`,
/// zero where the denominator is below [`EPS_DEN`].
pub fn jacobian_quotient(
    g_next: &[f64],
    g_prev: &[f64],
    w_prev: &[f64],
    w_next: &[f64],
    out: &mut [f64],
) {
    for i in 0..out.len() {
        let dw = w_next[i] - w_prev[i];
        out[i] = if dw.abs() < EPS_DEN {
            0.0
        } else {
            (g_next[i] - g_prev[i]) / dw
        };
    }
}

/// One step of `eta' = J eta + te` with the tableau's `b` weights; `J` and
/// `te` are frozen over the step.
fn advance_eta(tab: &ButcherTableau, k: f64, jac: &[f64], te: &[f64], eta: &mut [f64]) {
    for i in 0..eta.len() {
        let (j, s, y) = (jac[i], te[i], eta[i]);
        let mut stages = [0.0; STAGES];
        let mut acc = 0.0;
        for l in 0..STAGES {
            let mut arg = y;
            if l > 0 {
                let mut inc = 0.0;
                for (a, kj) in tab.a[l][..l].iter().zip(&stages[..l]) {
                    inc += a * kj;
                }
                arg += k * inc;
            }
            stages[l] = j * arg + s;
            acc += tab.b[l] * stages[l];
        }
        eta[i] = y + k * acc;
    }
}

/// Solves the model on `mesh` with fourth-order Cash-Karp steps and,
/// unless disabled, estimates the global error of the result.
pub fn solve_with_error<M: PdeModel + ?Sized>(
    model: &M,
    mesh: &Mesh1D,
    config: &SolveConfig,
) -> Result<SolveResult> {
    let (a, b) = model.interval();
    if (mesh.a() - a).abs() > 1e-12 || (mesh.b() - b).abs() > 1e-12 {
        return Err(Error::Invalid("mesh does not cover the model interval"));
    }
    let estimate = config.estimate_error;
    if estimate {
        mesh.check_nested()?;
    }
    let tab = &config.tableau;
    let t_end = config.end_time.unwrap_or_else(|| model.horizon());
    let grid = config.time_grid(t_end, mesh.h())?;
    let k = grid.k();
    let h = mesh.h();

    let fine = Semidiscrete::new(model, *mesh).with_linearization(config.linearization);
    let n = mesh.dim();
    let mut w = mesh.sample_initial(model);
    let mut w_next = vec![0.0; n];
    let mut tau = vec![0.0; n];
    let mut ws = Workspace::new(n);

    let coarse_mesh = if estimate { mesh.coarsen()? } else { *mesh };
    let coarse = Semidiscrete::new(model, coarse_mesh).with_linearization(config.linearization);
    let run_coarse = estimate && config.policy.needs_coarse_solve();
    let mut wc = if run_coarse {
        coarse_mesh.sample_initial(model)
    } else {
        Vec::new()
    };
    let mut wc_next = vec![0.0; wc.len()];
    let mut ws_c = Workspace::new(wc.len());

    let mut e_hat = vec![0.0; n];
    let mut eta = vec![0.0; n];
    let mut te = vec![0.0; n];
    let mut jac = vec![0.0; n];
    let mut g_next = vec![0.0; n];
    let mut g_prev = vec![0.0; n];

    let mut snapshots = Vec::new();
    let mut diagnostics = Vec::new();
    let mut max_true = if config.track_true_error {
        true_error(model, mesh, 0.0, &w)
    } else {
        None
    };
    if config.snapshot_every.is_some() {
        snapshots.push((0.0, w.clone()));
    }

    let unstable = |which: &'static str, hh: f64, step: usize| {
        move |e: Error| Error::Unstable {
            mesh: which,
            h: hh,
            source: alloc::boxed::Box::new(e.at_step(step)),
        }
    };

    for step in 0..grid.steps() {
        let t = grid.time(step);
        let t_next = grid.time(step + 1);
        tab.step(
            |s, v, out| fine.eval(s, v, out),
            t,
            &w,
            k,
            &mut ws,
            &mut w_next,
            estimate.then_some(&mut tau[..]),
        )
        .map_err(unstable("fine", h, step + 1))?;

        if estimate {
            if run_coarse {
                tab.step(
                    |s, v, out| coarse.eval(s, v, out),
                    t,
                    &wc,
                    k,
                    &mut ws_c,
                    &mut wc_next,
                    None,
                )
                .map_err(unstable("coarse", 2.0 * h, step + 1))?;
            }
            // G(t_{n+1}, W_{n+1}) doubles as the next step's first stage
            fine.eval(t_next, &w_next, &mut g_next)
                .map_err(unstable("fine", h, step + 1))?;
            fine.eval(t_next, &w, &mut g_prev)
                .map_err(unstable("fine", h, step + 1))?;
            truncation_error(
                config.policy,
                &fine,
                &coarse,
                t_next,
                &w_next,
                &wc_next,
                &g_next,
                &mut te,
            )
            .map_err(unstable("coarse", 2.0 * h, step + 1))?;
            jacobian_quotient(&g_next, &g_prev, &w, &w_next, &mut jac);
            advance_eta(tab, k, &jac, &te, &mut eta);
            // e_hat accumulates W - Y, the negated embedded estimate
            for (e, t) in e_hat.iter_mut().zip(&tau) {
                *e -= t;
            }
            ws.first_stage_mut().copy_from_slice(&g_next);
            ws.mark_k1_ready();
            if run_coarse {
                core::mem::swap(&mut wc, &mut wc_next);
            }
            if config.diagnostics {
                let total = e_hat.iter().zip(&eta).fold(0.0_f64, |m, (a, b)| m.max((a + b).abs()));
                diagnostics.push(StepDiagnostic {
                    t: t_next,
                    tau_inf: inf_norm(&tau),
                    eta_inf: inf_norm(&eta),
                    e_inf: total,
                });
            }
        }
        core::mem::swap(&mut w, &mut w_next);

        if config.track_true_error {
            if let (Some(m), Some(e)) = (max_true, true_error(model, mesh, t_next, &w)) {
                max_true = Some(m.max(e));
            }
        }
        if let Some(every) = config.snapshot_every {
            if every > 0 && (step + 1) % every == 0 && step + 1 != grid.steps() {
                snapshots.push((t_next, w.clone()));
            }
        }
    }
    if config.snapshot_every.is_some() && grid.steps() > 0 {
        snapshots.push((t_end, w.clone()));
    }

    let e_total: Vec<f64> = e_hat.iter().zip(&eta).map(|(a, b)| a + b).collect();
    let k_hat = inf_norm(&e_total);
    if !k_hat.is_finite() {
        return Err(Error::Unstable {
            mesh: "fine",
            h,
            source: alloc::boxed::Box::new(Error::Invalid("error estimate is not finite")),
        });
    }
    Ok(SolveResult {
        mesh: *mesh,
        h,
        k,
        steps: grid.steps(),
        alpha: k / (h * h),
        t_end,
        policy: config.policy,
        w,
        snapshots,
        e_hat,
        eta_hat: eta,
        e_total,
        k_hat,
        diagnostics,
        max_true_error: max_true,
    })
}

/// Observed order `log2(||u_4h - u_2h|| / ||u_2h - u_h||)` from three nested
/// plain solves, compared at the interior nodes of the coarsest mesh at the
/// final time. Each level uses its own step `k = alpha h_level^2`.
pub fn convergence_order<M: PdeModel + ?Sized>(
    model: &M,
    mesh: &Mesh1D,
    config: &SolveConfig,
) -> Result<f64> {
    if mesh.intervals() % 4 != 0 {
        return Err(Error::Invalid("convergence order needs N divisible by 4"));
    }
    let mid = mesh.coarsen()?;
    let coarsest = mid.coarsen()?;
    let plain = SolveConfig {
        estimate_error: false,
        snapshot_every: None,
        diagnostics: false,
        track_true_error: false,
        ..config.clone()
    };
    let u_h = solve_with_error(model, mesh, &plain)?.w;
    let u_2h = solve_with_error(model, &mid, &plain)?.w;
    let u_4h = solve_with_error(model, &coarsest, &plain)?.w;
    let u_h = restrict(&restrict(&u_h, mesh)?, &mid)?;
    let u_2h = restrict(&u_2h, &mid)?;
    let num = diff_norm(&u_4h, &u_2h);
    let den = diff_norm(&u_2h, &u_h);
    if den == 0.0 || num == 0.0 {
        return Err(Error::DegenerateOrder);
    }
    Ok((num / den).log2())
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
