//! Fixed-step explicit Runge-Kutta integration with the Cash-Karp 4(5)
//! embedded pair.
//!
//! The fourth-order weights `b` advance the solution; the fifth-order
//! weights `b_hat` share the stages and are only used for the local error
//! `tau_hat = k * sum (b_hat_i - b_i) K_i`.

use alloc::vec;
use alloc::vec::Vec;
// float methods for no_std builds; unused when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

pub const STAGES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ButcherTableau {
    /// Strictly lower-triangular stage matrix.
    pub a: [[f64; STAGES]; STAGES],
    /// Fourth-order weights; these advance the solution.
    pub b: [f64; STAGES],
    /// Fifth-order weights.
    pub b_hat: [f64; STAGES],
    pub c: [f64; STAGES],
}

pub const CASH_KARP: ButcherTableau = ButcherTableau {
    a: [
        [0.0; STAGES],
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0, 0.0, 0.0, 0.0],
        [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0, 0.0, 0.0],
        [
            1631.0 / 55296.0,
            175.0 / 512.0,
            575.0 / 13824.0,
            44275.0 / 110592.0,
            253.0 / 4096.0,
            0.0,
        ],
    ],
    b: [
        2825.0 / 27648.0,
        0.0,
        18575.0 / 48384.0,
        13525.0 / 55296.0,
        277.0 / 14336.0,
        1.0 / 4.0,
    ],
    b_hat: [
        37.0 / 378.0,
        0.0,
        250.0 / 621.0,
        125.0 / 594.0,
        0.0,
        512.0 / 1771.0,
    ],
    c: [0.0, 1.0 / 5.0, 3.0 / 10.0, 3.0 / 5.0, 1.0, 7.0 / 8.0],
};

impl ButcherTableau {
    /// Largest weight over both formulas; 250/621 for Cash-Karp.
    pub fn b_max(&self) -> f64 {
        self.b
            .iter()
            .chain(self.b_hat.iter())
            .fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }

    /// Default CFL factor `alpha = 1 / (4 b_max)`.
    pub fn default_alpha(&self) -> f64 {
        1.0 / (4.0 * self.b_max())
    }

    /// `k = alpha h^2` with the default factor.
    pub fn cfl_step(&self, h: f64) -> f64 {
        self.default_alpha() * h * h
    }

    /// One step from `(t, w)` with step `k`.
    ///
    /// Writes `w + k sum b_l K_l` into `w_next` and, when given,
    /// `k sum (b_hat_l - b_l) K_l` into `tau_hat`. If `ws.k1_ready` is set the
    /// first stage is taken from `ws` instead of being evaluated; it is
    /// cleared on return.
    pub fn step<F>(
        &self,
        mut f: F,
        t: f64,
        w: &[f64],
        k: f64,
        ws: &mut Workspace,
        w_next: &mut [f64],
        tau_hat: Option<&mut [f64]>,
    ) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = w.len();
        ws.resize(n);
        if w_next.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w_next.len(),
            });
        }
        for l in 0..STAGES {
            if l == 0 && ws.k1_ready {
                ws.k1_ready = false;
            } else {
                let (done, rest) = ws.stages.split_at_mut(l);
                let arg: &[f64] = if l == 0 {
                    w
                } else {
                    let row = &self.a[l];
                    for (i, s) in ws.arg.iter_mut().enumerate() {
                        let mut acc = 0.0;
                        for (j, kj) in done.iter().enumerate() {
                            acc += row[j] * kj[i];
                        }
                        *s = w[i] + k * acc;
                    }
                    &ws.arg
                };
                f(t + self.c[l] * k, arg, &mut rest[0])?;
            }
            if ws.stages[l].iter().any(|x| !x.is_finite()) {
                return Err(Error::StepDiverged { stage: l + 1 });
            }
        }
        let stages = &ws.stages;
        for i in 0..n {
            let mut acc = 0.0;
            for l in 0..STAGES {
                acc += self.b[l] * stages[l][i];
            }
            w_next[i] = w[i] + k * acc;
        }
        if let Some(tau) = tau_hat {
            if tau.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: tau.len(),
                });
            }
            for i in 0..n {
                let mut acc = 0.0;
                for l in 0..STAGES {
                    acc += (self.b_hat[l] - self.b[l]) * stages[l][i];
                }
                tau[i] = k * acc;
            }
        }
        Ok(())
    }

    /// Applies [`step`](Self::step) over every interval of `grid`.
    pub fn integrate<F>(&self, mut f: F, grid: &TimeGrid, w0: &[f64]) -> Result<Integration>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = w0.len();
        let mut ws = Workspace::new(n);
        let mut out = Integration {
            trajectory: vec![w0.to_vec()],
            tau_hat: Vec::with_capacity(grid.steps()),
            e_hat: vec![vec![0.0; n]],
        };
        for step in 0..grid.steps() {
            let mut next = vec![0.0; n];
            let mut tau = vec![0.0; n];
            let w = &out.trajectory[step];
            self.step(&mut f, grid.time(step), w, grid.k(), &mut ws, &mut next, Some(&mut tau))
                .map_err(|e| e.at_step(step + 1))?;
            let e: Vec<f64> = out.e_hat[step].iter().zip(&tau).map(|(a, b)| a + b).collect();
            out.trajectory.push(next);
            out.tau_hat.push(tau);
            out.e_hat.push(e);
        }
        Ok(out)
    }
}

/// Stage storage reused across steps.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    stages: [Vec<f64>; STAGES],
    arg: Vec<f64>,
    k1_ready: bool,
}

impl Workspace {
    pub fn new(n: usize) -> Self {
        let mut ws = Self::default();
        ws.resize(n);
        ws
    }

    fn resize(&mut self, n: usize) {
        if self.arg.len() != n {
            for s in &mut self.stages {
                s.resize(n, 0.0);
            }
            self.arg.resize(n, 0.0);
            self.k1_ready = false;
        }
    }

    /// Buffer for the first stage of the next step. Fill it with
    /// `G(t_next, w_next)` and call [`mark_k1_ready`](Self::mark_k1_ready) to
    /// skip that evaluation.
    pub fn first_stage_mut(&mut self) -> &mut [f64] {
        &mut self.stages[0]
    }

    pub fn mark_k1_ready(&mut self) {
        self.k1_ready = true;
    }
}

/// Result of [`ButcherTableau::integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    /// `W_0 .. W_M`
    pub trajectory: Vec<Vec<f64>>,
    /// `tau_hat_1 .. tau_hat_M`
    pub tau_hat: Vec<Vec<f64>>,
    /// Running sums of `tau_hat`, starting with `e_hat_0 = 0`.
    pub e_hat: Vec<Vec<f64>>,
}

/// Uniform time grid `t_n = n k` on `[0, tau]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    m: usize,
    k: f64,
}

impl TimeGrid {
    /// `M = ceil(tau / k_max)` steps, with `k` shrunk so that `M k = tau`.
    pub fn covering(tau: f64, k_max: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
                reason: "must be positive and finite",
            });
        }
        if !(k_max > 0.0) || !k_max.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k_max,
                reason: "must be positive and finite",
            });
        }
        // tolerate round-off in tau / k so exact multiples are not bumped up
        let m = ((tau / k_max) * (1.0 - 1e-12)).ceil().max(1.0);
        if m > usize::MAX as f64 / 2.0 {
            return Err(Error::Invalid("time step too small"));
        }
        let m = m as usize;
        Ok(Self {
            tau,
            m,
            k: tau / m as f64,
        })
    }

    /// Exactly `m` steps; `m = 0` gives the trivial grid `{0}` and requires
    /// `tau = 0`.
    pub fn with_steps(tau: f64, m: usize) -> Result<Self> {
        if m == 0 {
            if tau != 0.0 {
                return Err(Error::Invalid("zero steps need tau = 0"));
            }
            return Ok(Self { tau, m, k: 0.0 });
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
                reason: "must be positive and finite",
            });
        }
        Ok(Self {
            tau,
            m,
            k: tau / m as f64,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.m {
            self.tau
        } else {
            n as f64 * self.k
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar<F: Fn(f64, f64) -> f64>(f: F) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> {
        move |t, y, out| {
            out[0] = f(t, y[0]);
            Ok(())
        }
    }

    #[test]
    fn cfl_examples() {
        let t = CASH_KARP;
        assert_eq!(t.b_max(), 250.0 / 621.0);
        assert!((t.cfl_step(0.1) - 0.006210).abs() < 1e-15);
        assert!((t.cfl_step(0.05) - 0.0015525).abs() < 1e-15);
        for h in [0.3, 0.1, 0.0125, 1e-4] {
            assert!((t.b_max() * t.cfl_step(h) / (h * h) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_field_is_a_fixed_point() {
        let mut ws = Workspace::new(3);
        let w = [1.0, -2.0, 0.5];
        let mut next = [0.0; 3];
        let mut tau = [1.0; 3];
        CASH_KARP
            .step(
                |_, _, out: &mut [f64]| {
                    out.fill(0.0);
                    Ok(())
                },
                0.0,
                &w,
                0.1,
                &mut ws,
                &mut next,
                Some(&mut tau),
            )
            .unwrap();
        assert_eq!(next, w);
        assert_eq!(tau, [0.0; 3]);
    }

    #[test]
    fn one_step_exponential() {
        let k = 0.1;
        let mut ws = Workspace::new(1);
        let mut next = [0.0];
        CASH_KARP
            .step(scalar(|_, y| y), 0.0, &[1.0], k, &mut ws, &mut next, None)
            .unwrap();
        assert!((next[0] - k.exp()).abs() <= 10.0 * k.powi(5));
    }

    #[test]
    fn nonfinite_stage_is_reported() {
        let mut ws = Workspace::new(1);
        let mut next = [0.0];
        let err = CASH_KARP
            .step(
                scalar(|t, _| if t > 0.0 { f64::NAN } else { 1.0 }),
                0.0,
                &[1.0],
                0.1,
                &mut ws,
                &mut next,
                None,
            )
            .unwrap_err();
        assert_eq!(err, Error::StepDiverged { stage: 2 });
    }

    #[test]
    fn reused_first_stage_matches_fresh_evaluation() {
        let f = |t: f64, y: &[f64], out: &mut [f64]| {
            out[0] = t.cos() * y[0] - y[1];
            out[1] = y[0] * y[1];
            Ok(())
        };
        let w = [0.3, -0.7];
        let mut ws = Workspace::new(2);
        let mut a = [0.0; 2];
        CASH_KARP.step(f, 0.2, &w, 0.05, &mut ws, &mut a, None).unwrap();
        let mut ws2 = Workspace::new(2);
        f(0.2, &w, ws2.first_stage_mut()).unwrap();
        ws2.mark_k1_ready();
        let mut b = [0.0; 2];
        CASH_KARP
            .step(
                |t, y, out: &mut [f64]| {
                    assert!(t > 0.2);
                    f(t, y, out)
                },
                0.2,
                &w,
                0.05,
                &mut ws2,
                &mut b,
                None,
            )
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn time_grid_lands_on_tau() {
        let g = TimeGrid::covering(1.0, 0.3).unwrap();
        assert_eq!(g.steps(), 4);
        assert_eq!(g.k(), 0.25);
        assert_eq!(g.time(4), 1.0);
        let g = TimeGrid::covering(1.0, 0.01).unwrap();
        assert_eq!(g.steps(), 100);
        assert!(TimeGrid::covering(0.0, 0.1).is_err());
        assert!(TimeGrid::covering(1.0, -0.1).is_err());
        assert!(TimeGrid::with_steps(1.0, 0).is_err());
    }

    #[test]
    fn zero_steps_return_initial_state() {
        let g = TimeGrid::with_steps(0.0, 0).unwrap();
        let out = CASH_KARP.integrate(scalar(|_, y| y), &g, &[2.0]).unwrap();
        assert_eq!(out.trajectory, vec![vec![2.0]]);
        assert_eq!(out.e_hat, vec![vec![0.0]]);
        assert!(out.tau_hat.is_empty());
    }

    #[test]
    fn decay_over_unit_interval() {
        let g = TimeGrid::with_steps(1.0, 100).unwrap();
        let out = CASH_KARP.integrate(scalar(|_, y| -y), &g, &[1.0]).unwrap();
        let y = out.trajectory[100][0];
        let err = (y - (-1.0_f64).exp()).abs();
        assert!(err <= 1e-10);
        assert!(out.e_hat[100][0].abs() >= err);
    }

    #[test]
    fn errors_carry_step_index() {
        let g = TimeGrid::with_steps(1.0, 10).unwrap();
        let err = CASH_KARP
            .integrate(scalar(|t, y| if t > 0.45 { f64::INFINITY } else { y }), &g, &[1.0])
            .unwrap_err();
        match err {
            Error::AtStep { step, .. } => assert_eq!(step, 5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
