//! Semilinear model problems `u_t = u_xx + L(u, u_x) + N(u, u_x)`.
//!
//! A model splits its reaction term into a linear part `L` and a nonlinear
//! part `N`, and supplies the partial derivatives `phi0 = dN/du` and
//! `phi1 = dN/du_x` used by the quasi-linearized difference scheme.

use alloc::string::ToString;
use num_traits::Float;

use crate::error::{Error, Result};

pub trait PdeModel {
    fn name(&self) -> &str;

    /// Spatial interval `(a, b)`.
    fn interval(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    /// Final time of the model's time window.
    fn horizon(&self) -> f64;

    /// Model parameters in their canonical order.
    fn theta(&self) -> &[f64];

    fn linear(&self, u: f64, du: f64) -> f64;
    fn nonlinear(&self, u: f64, du: f64) -> f64;
    /// `dN/du`
    fn phi0(&self, u: f64, du: f64) -> f64;
    /// `dN/du_x`
    fn phi1(&self, u: f64, du: f64) -> f64;

    /// The full reaction term as written for the equation.
    fn reaction(&self, u: f64, du: f64) -> f64 {
        self.linear(u, du) + self.nonlinear(u, du)
    }

    fn left(&self, t: f64) -> f64;
    fn right(&self, t: f64) -> f64;
    fn initial(&self, x: f64) -> f64;

    fn analytic(&self, _x: f64, _t: f64) -> Option<f64> {
        None
    }

    /// Expected order of the spatial truncation error.
    fn order(&self) -> f64;
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive",
        })
    }
}

fn check_horizon(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "tau",
            value: tau,
            reason: "must be finite and non-negative",
        })
    }
}

/// Fisher-KPP: `u_t = u_xx + r u (1 - u)` with the travelling-wave solution
/// `u = 1 / (1 + exp(sqrt(r/6) x - 5r t / 6))^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fisher {
    theta: [f64; 1],
    tau: f64,
}

impl Fisher {
    pub fn new(r: f64) -> Result<Self> {
        check_positive("r", r)?;
        Ok(Self {
            theta: [r],
            tau: 1.0,
        })
    }

    pub fn with_horizon(mut self, tau: f64) -> Result<Self> {
        check_horizon(tau)?;
        self.tau = tau;
        Ok(self)
    }

    pub fn r(&self) -> f64 {
        self.theta[0]
    }

    fn exact(&self, x: f64, t: f64) -> f64 {
        let r = self.r();
        let z = 1.0 + ((r / 6.0).sqrt() * x - 5.0 * r / 6.0 * t).exp();
        1.0 / (z * z)
    }
}

impl PdeModel for Fisher {
    fn name(&self) -> &str {
        "fisher"
    }
    fn horizon(&self) -> f64 {
        self.tau
    }
    fn theta(&self) -> &[f64] {
        &self.theta
    }
    #[inline]
    fn linear(&self, u: f64, _du: f64) -> f64 {
        self.r() * u
    }
    #[inline]
    fn nonlinear(&self, u: f64, _du: f64) -> f64 {
        -self.r() * u * u
    }
    #[inline]
    fn phi0(&self, u: f64, _du: f64) -> f64 {
        -2.0 * self.r() * u
    }
    #[inline]
    fn phi1(&self, _u: f64, _du: f64) -> f64 {
        0.0
    }
    fn reaction(&self, u: f64, _du: f64) -> f64 {
        self.r() * u * (1.0 - u)
    }
    fn left(&self, t: f64) -> f64 {
        self.exact(0.0, t)
    }
    fn right(&self, t: f64) -> f64 {
        self.exact(1.0, t)
    }
    fn initial(&self, x: f64) -> f64 {
        self.exact(x, 0.0)
    }
    fn analytic(&self, x: f64, t: f64) -> Option<f64> {
        Some(self.exact(x, t))
    }
    fn order(&self) -> f64 {
        2.0
    }
}

/// Fitzhugh-Nagumo: `u_t = u_xx + u (1 - u) (u - a)`, `0 < a < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitzhughNagumo {
    theta: [f64; 1],
    tau: f64,
}

impl FitzhughNagumo {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidParameter {
                name: "a",
                value: a,
                reason: "must lie in (0, 1)",
            });
        }
        Ok(Self {
            theta: [a],
            tau: 1.0,
        })
    }

    pub fn with_horizon(mut self, tau: f64) -> Result<Self> {
        check_horizon(tau)?;
        self.tau = tau;
        Ok(self)
    }

    pub fn a(&self) -> f64 {
        self.theta[0]
    }

    fn exact(&self, x: f64, t: f64) -> f64 {
        let a = self.a();
        let arg = 2.0.sqrt() * (1.0 - a) * x / 4.0 + (1.0 - a * a) / 4.0 * t;
        0.5 * (1.0 + a) + 0.5 * (1.0 - a) * arg.tanh()
    }
}

impl PdeModel for FitzhughNagumo {
    fn name(&self) -> &str {
        "fitzhugh-nagumo"
    }
    fn horizon(&self) -> f64 {
        self.tau
    }
    fn theta(&self) -> &[f64] {
        &self.theta
    }
    #[inline]
    fn linear(&self, u: f64, _du: f64) -> f64 {
        -self.a() * u
    }
    #[inline]
    fn nonlinear(&self, u: f64, _du: f64) -> f64 {
        u * u * (1.0 - u + self.a())
    }
    #[inline]
    fn phi0(&self, u: f64, _du: f64) -> f64 {
        2.0 * u * (1.0 + self.a()) - 3.0 * u * u
    }
    #[inline]
    fn phi1(&self, _u: f64, _du: f64) -> f64 {
        0.0
    }
    fn reaction(&self, u: f64, _du: f64) -> f64 {
        u * (1.0 - u) * (u - self.a())
    }
    fn left(&self, t: f64) -> f64 {
        self.exact(0.0, t)
    }
    fn right(&self, t: f64) -> f64 {
        self.exact(1.0, t)
    }
    fn initial(&self, x: f64) -> f64 {
        self.exact(x, 0.0)
    }
    fn analytic(&self, x: f64, t: f64) -> Option<f64> {
        Some(self.exact(x, t))
    }
    fn order(&self) -> f64 {
        2.0
    }
}

/// Burgers-Fisher: `u_t = u_xx - r u u_x + s u (1 - u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurgersFisher {
    theta: [f64; 2],
    tau: f64,
}

impl BurgersFisher {
    pub fn new(r: f64, s: f64) -> Result<Self> {
        check_positive("r", r)?;
        check_positive("s", s)?;
        Ok(Self {
            theta: [r, s],
            tau: 1.0,
        })
    }

    pub fn with_horizon(mut self, tau: f64) -> Result<Self> {
        check_horizon(tau)?;
        self.tau = tau;
        Ok(self)
    }

    pub fn r(&self) -> f64 {
        self.theta[0]
    }

    pub fn s(&self) -> f64 {
        self.theta[1]
    }

    fn exact(&self, x: f64, t: f64) -> f64 {
        let (r, s) = (self.r(), self.s());
        let speed = r / 2.0 + 2.0 * s / r;
        0.5 + 0.5 * (-r / 4.0 * (x - speed * t)).tanh()
    }
}

impl PdeModel for BurgersFisher {
    fn name(&self) -> &str {
        "burgers-fisher"
    }
    fn horizon(&self) -> f64 {
        self.tau
    }
    fn theta(&self) -> &[f64] {
        &self.theta
    }
    #[inline]
    fn linear(&self, u: f64, _du: f64) -> f64 {
        self.s() * u
    }
    #[inline]
    fn nonlinear(&self, u: f64, du: f64) -> f64 {
        -self.r() * u * du - self.s() * u * u
    }
    #[inline]
    fn phi0(&self, u: f64, du: f64) -> f64 {
        -self.r() * du - 2.0 * self.s() * u
    }
    #[inline]
    fn phi1(&self, u: f64, _du: f64) -> f64 {
        -self.r() * u
    }
    fn reaction(&self, u: f64, du: f64) -> f64 {
        -self.r() * u * du + self.s() * u * (1.0 - u)
    }
    fn left(&self, t: f64) -> f64 {
        self.exact(0.0, t)
    }
    fn right(&self, t: f64) -> f64 {
        self.exact(1.0, t)
    }
    fn initial(&self, x: f64) -> f64 {
        self.exact(x, 0.0)
    }
    fn analytic(&self, x: f64, t: f64) -> Option<f64> {
        Some(self.exact(x, t))
    }
    fn order(&self) -> f64 {
        1.0
    }
}

/// Heat equation `u_t = u_xx` with affine Dirichlet data `u = c0 + c1 x`,
/// which is also its exact (steady) solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureDiffusion {
    c0: f64,
    c1: f64,
    tau: f64,
}

impl PureDiffusion {
    pub fn affine(c0: f64, c1: f64) -> Self {
        Self { c0, c1, tau: 1.0 }
    }

    pub fn zero() -> Self {
        Self::affine(0.0, 0.0)
    }

    pub fn with_horizon(mut self, tau: f64) -> Result<Self> {
        check_horizon(tau)?;
        self.tau = tau;
        Ok(self)
    }
}

impl PdeModel for PureDiffusion {
    fn name(&self) -> &str {
        "pure-diffusion"
    }
    fn horizon(&self) -> f64 {
        self.tau
    }
    fn theta(&self) -> &[f64] {
        &[]
    }
    fn linear(&self, _u: f64, _du: f64) -> f64 {
        0.0
    }
    fn nonlinear(&self, _u: f64, _du: f64) -> f64 {
        0.0
    }
    fn phi0(&self, _u: f64, _du: f64) -> f64 {
        0.0
    }
    fn phi1(&self, _u: f64, _du: f64) -> f64 {
        0.0
    }
    fn left(&self, _t: f64) -> f64 {
        self.c0
    }
    fn right(&self, _t: f64) -> f64 {
        self.c0 + self.c1
    }
    fn initial(&self, x: f64) -> f64 {
        self.c0 + self.c1 * x
    }
    fn analytic(&self, x: f64, _t: f64) -> Option<f64> {
        Some(self.c0 + self.c1 * x)
    }
    fn order(&self) -> f64 {
        2.0
    }
}

/// The three benchmark families, selectable by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Benchmark {
    Fisher(Fisher),
    FitzhughNagumo(FitzhughNagumo),
    BurgersFisher(BurgersFisher),
}

/// Runs `$body` with `$m` bound to the concrete model inside a [`Benchmark`],
/// so generic code is monomorphized per family instead of dispatching per
/// grid node.
#[macro_export]
macro_rules! with_benchmark {
    ($bench:expr, $m:ident => $body:expr) => {
        match $bench {
            $crate::model::Benchmark::Fisher($m) => $body,
            $crate::model::Benchmark::FitzhughNagumo($m) => $body,
            $crate::model::Benchmark::BurgersFisher($m) => $body,
        }
    };
}

impl Benchmark {
    pub const NAMES: [&'static str; 3] = ["fisher", "fitzhugh-nagumo", "burgers-fisher"];

    /// Parameter names of a family, in `theta` order.
    pub fn param_names(name: &str) -> Result<&'static [&'static str]> {
        match name {
            "fisher" => Ok(&["r"]),
            "fitzhugh-nagumo" => Ok(&["a"]),
            "burgers-fisher" => Ok(&["r", "s"]),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    /// Default parameters used for the benchmark runs.
    pub fn default_theta(name: &str) -> Result<&'static [f64]> {
        match name {
            "fisher" => Ok(&[4.0]),
            "fitzhugh-nagumo" => Ok(&[0.3]),
            "burgers-fisher" => Ok(&[4.5, 5.5]),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }

    pub fn from_theta(name: &str, theta: &[f64]) -> Result<Self> {
        let expected = Self::param_names(name)?.len();
        if theta.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: theta.len(),
            });
        }
        Ok(match name {
            "fisher" => Benchmark::Fisher(Fisher::new(theta[0])?),
            "fitzhugh-nagumo" => Benchmark::FitzhughNagumo(FitzhughNagumo::new(theta[0])?),
            _ => Benchmark::BurgersFisher(BurgersFisher::new(theta[0], theta[1])?),
        })
    }

    /// Builds a family from `key=value` pairs; missing keys take the defaults.
    pub fn from_params(name: &str, params: &[(&str, f64)]) -> Result<Self> {
        let names = Self::param_names(name)?;
        let mut theta = [0.0; 2];
        theta[..names.len()].copy_from_slice(Self::default_theta(name)?);
        for (key, value) in params {
            match names.iter().position(|n| n == key) {
                Some(i) => theta[i] = *value,
                None => return Err(Error::Invalid("unknown model parameter")),
            }
        }
        Self::from_theta(name, &theta[..names.len()])
    }

    /// Same family with new parameters and the same horizon.
    pub fn with_theta(&self, theta: &[f64]) -> Result<Self> {
        Self::from_theta(self.name(), theta)?.with_horizon(self.horizon())
    }

    pub fn with_horizon(self, tau: f64) -> Result<Self> {
        Ok(match self {
            Benchmark::Fisher(m) => Benchmark::Fisher(m.with_horizon(tau)?),
            Benchmark::FitzhughNagumo(m) => Benchmark::FitzhughNagumo(m.with_horizon(tau)?),
            Benchmark::BurgersFisher(m) => Benchmark::BurgersFisher(m.with_horizon(tau)?),
        })
    }
}

impl PdeModel for Benchmark {
    fn name(&self) -> &str {
        with_benchmark!(self, m => m.name())
    }
    fn horizon(&self) -> f64 {
        with_benchmark!(self, m => m.horizon())
    }
    fn theta(&self) -> &[f64] {
        with_benchmark!(self, m => m.theta())
    }
    fn linear(&self, u: f64, du: f64) -> f64 {
        with_benchmark!(self, m => m.linear(u, du))
    }
    fn nonlinear(&self, u: f64, du: f64) -> f64 {
        with_benchmark!(self, m => m.nonlinear(u, du))
    }
    fn phi0(&self, u: f64, du: f64) -> f64 {
        with_benchmark!(self, m => m.phi0(u, du))
    }
    fn phi1(&self, u: f64, du: f64) -> f64 {
        with_benchmark!(self, m => m.phi1(u, du))
    }
    fn reaction(&self, u: f64, du: f64) -> f64 {
        with_benchmark!(self, m => m.reaction(u, du))
    }
    fn left(&self, t: f64) -> f64 {
        with_benchmark!(self, m => m.left(t))
    }
    fn right(&self, t: f64) -> f64 {
        with_benchmark!(self, m => m.right(t))
    }
    fn initial(&self, x: f64) -> f64 {
        with_benchmark!(self, m => m.initial(x))
    }
    fn analytic(&self, x: f64, t: f64) -> Option<f64> {
        with_benchmark!(self, m => m.analytic(x, t))
    }
    fn order(&self) -> f64 {
        with_benchmark!(self, m => m.order())
    }
}
