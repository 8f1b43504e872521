//! Uniform meshes, central-difference operators and the semi-discrete
//! right-hand side `G(t, V) = A_xx V / h^2 + F(t, V)`.
//!
//! Unknowns are the `N - 1` interior nodes `x_1 .. x_{N-1}`; the boundary
//! values come from the model's Dirichlet data at the evaluation time. The
//! nonlinear part of the reaction is quasi-linearized around the left
//! neighbour: at node `i`
//!
//! ```text
//! N(u_i, u'_i) ~ N(u_{i-1}, u'_{i-1}) + phi0 (u_i - u_{i-1}) + phi1 (u'_i - u'_{i-1})
//! ```
//!
//! with the slope at `x_0` taken from the forward difference.

use alloc::vec;
use alloc::vec::Vec;
// float methods for no_std builds; unused when std is linked
#[allow(unused_imports)]
use num_traits::Float;

use crate::band::BandMatrix;
use crate::error::{Error, Result};
use crate::model::PdeModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
}

impl Mesh1D {
    /// Uniform mesh of `[a, b]` with `n` intervals.
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Invalid("mesh interval must satisfy a < b"));
        }
        if n < 2 {
            return Err(Error::MeshTooCoarse("at least two intervals are required"));
        }
        Ok(Self {
            a,
            b,
            n,
            h: (b - a) / n as f64,
        })
    }

    /// Mesh on `[a, b]` whose step is closest to `h`. The second value is
    /// `true` when `h` divides the interval exactly (to 1e-9 relative).
    pub fn with_step(a: f64, b: f64, h: f64) -> Result<(Self, bool)> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter {
                name: "h",
                value: h,
                reason: "must be positive",
            });
        }
        let ratio = (b - a) / h;
        let n = ratio.round().max(1.0) as usize;
        let exact = (ratio - n as f64).abs() <= 1e-9 * ratio;
        Ok((Self::new(a, b, n)?, exact))
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior unknowns, `N - 1`.
    pub fn dim(&self) -> usize {
        self.n - 1
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.b
        } else {
            self.a + i as f64 * self.h
        }
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (1..self.n).map(move |i| self.node(i))
    }

    /// The nested mesh with step `2h`.
    pub fn coarsen(&self) -> Result<Self> {
        if self.n % 2 != 0 {
            return Err(Error::Invalid("coarsening needs an even number of intervals"));
        }
        Self::new(self.a, self.b, self.n / 2)
    }

    /// Checks the fine/coarse nesting requirement: `N >= 4` and even.
    pub fn check_nested(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::MeshTooCoarse("nested meshes need N >= 4"));
        }
        if self.n % 2 != 0 {
            return Err(Error::Invalid("nested meshes need an even number of intervals"));
        }
        Ok(())
    }

    /// Model's initial data sampled at the interior nodes.
    pub fn sample_initial<M: PdeModel + ?Sized>(&self, model: &M) -> Vec<f64> {
        self.interior_nodes().map(|x| model.initial(x)).collect()
    }
}

/// Matrix form of the difference operators.
#[derive(Debug, Clone, PartialEq)]
pub struct FdOperators {
    /// Central first difference, `(N-1) x (N-1)`, skew tridiagonal.
    pub a_x: BandMatrix,
    /// Second difference, `(N-1) x (N-1)`, tridiagonal `[1, -2, 1]`.
    pub a_xx: BandMatrix,
    /// First difference at the shifted nodes `x_0 .. x_{N-2}`; forward
    /// difference in the first row.
    pub a_hat_x: BandMatrix,
    h: f64,
}

/// Boundary contributions for the difference operators at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVectors {
    pub c_x: Vec<f64>,
    pub c_xx: Vec<f64>,
    pub c_hat_x: Vec<f64>,
}

impl FdOperators {
    pub fn assemble(mesh: &Mesh1D) -> Result<Self> {
        let n = mesh.dim();
        if n < 2 {
            return Err(Error::MeshTooCoarse("fewer than two interior unknowns"));
        }
        let mut a_x = BandMatrix::zeros(n, 1, 1);
        let mut a_xx = BandMatrix::zeros(n, 1, 1);
        let mut a_hat_x = BandMatrix::zeros(n, 2, 0);
        for r in 0..n {
            a_xx.set(r, r, -2.0);
            if r + 1 < n {
                a_x.set(r, r + 1, 1.0);
                a_xx.set(r, r + 1, 1.0);
            }
            if r >= 1 {
                a_x.set(r, r - 1, -1.0);
                a_xx.set(r, r - 1, 1.0);
            }
            // row r is the slope at node x_r; column c holds v_{c+1}
            match r {
                0 => a_hat_x.set(0, 0, 2.0),
                _ => {
                    a_hat_x.set(r, r, 1.0);
                    if r >= 2 {
                        a_hat_x.set(r, r - 2, -1.0);
                    }
                }
            }
        }
        Ok(Self {
            a_x,
            a_xx,
            a_hat_x,
            h: mesh.h(),
        })
    }

    pub fn dim(&self) -> usize {
        self.a_xx.dim()
    }

    /// Boundary vectors for left value `g` and right value `hr`.
    pub fn boundary_vectors(&self, g: f64, hr: f64) -> BoundaryVectors {
        let n = self.dim();
        let h = self.h;
        let mut c_x = vec![0.0; n];
        let mut c_xx = vec![0.0; n];
        let mut c_hat_x = vec![0.0; n];
        c_x[0] = -g / (2.0 * h);
        c_x[n - 1] += hr / (2.0 * h);
        c_xx[0] = g / (h * h);
        c_xx[n - 1] += hr / (h * h);
        c_hat_x[0] = -2.0 * g / (2.0 * h);
        c_hat_x[1] = -g / (2.0 * h);
        BoundaryVectors { c_x, c_xx, c_hat_x }
    }
}

/// Which slope the nonlinear term `N` sees at the shifted node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linearization {
    /// `N` and its derivatives all take the shifted slope `u'_{i-1}`. For a
    /// nonlinearity that is linear in `u'` the `phi1` correction then cancels
    /// the slope error exactly and the scheme stays second order.
    #[default]
    Paired,
    /// `N` takes the central slope at the node itself while `phi0`, `phi1`
    /// use the shifted slope. Leaves an `O(h)` residual whenever `phi1 != 0`,
    /// which gives the first-order convergence reported for Burgers-Fisher.
    NodeSlope,
}

/// The semi-discrete system for one model on one mesh.
#[derive(Debug, Clone, Copy)]
pub struct Semidiscrete<'a, M: ?Sized> {
    model: &'a M,
    mesh: Mesh1D,
    linearization: Linearization,
}

impl<'a, M: PdeModel + ?Sized> Semidiscrete<'a, M> {
    pub fn new(model: &'a M, mesh: Mesh1D) -> Self {
        Self {
            model,
            mesh,
            linearization: Linearization::default(),
        }
    }

    pub fn with_linearization(mut self, linearization: Linearization) -> Self {
        self.linearization = linearization;
        self
    }

    pub fn model(&self) -> &'a M {
        self.model
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn linearization(&self) -> Linearization {
        self.linearization
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    /// `out = G(t, v)`.
    pub fn eval(&self, t: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.mesh.dim();
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        if out.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: out.len(),
            });
        }
        match self.linearization {
            Linearization::Paired => self.eval_inner::<false>(t, v, out),
            Linearization::NodeSlope => self.eval_inner::<true>(t, v, out),
        }
        match out.iter().position(|x| !x.is_finite()) {
            Some(index) => Err(Error::RhsOverflow { t, index }),
            None => Ok(()),
        }
    }

    #[inline(always)]
    fn eval_inner<const NODE_SLOPE: bool>(&self, t: f64, v: &[f64], out: &mut [f64]) {
        let m = self.model;
        let h = self.mesh.h();
        let inv_h = 1.0 / h;
        let inv_2h = 0.5 / h;
        let inv_h2 = 1.0 / (h * h);
        let n = v.len();
        let right = m.right(t);

        let mut prev = m.left(t);
        let mut cur = v[0];
        let mut slope_prev = (cur - prev) * inv_h;
        for i in 0..n {
            let next = if i + 1 < n { v[i + 1] } else { right };
            let slope = (next - prev) * inv_2h;
            let n_slope = if NODE_SLOPE { slope } else { slope_prev };
            out[i] = (next - 2.0 * cur + prev) * inv_h2
                + m.linear(cur, slope)
                + m.nonlinear(prev, n_slope)
                + m.phi0(prev, slope_prev) * (cur - prev)
                + m.phi1(prev, slope_prev) * (slope - slope_prev);
            prev = cur;
            cur = next;
            slope_prev = slope;
        }
    }

    pub fn eval_vec(&self, t: f64, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; v.len()];
        self.eval(t, v, &mut out)?;
        Ok(out)
    }
}

/// Restriction to the nested coarse mesh: keeps the fine values at the even
/// nodes `x_{2i}`.
pub fn restrict(fine: &[f64], mesh: &Mesh1D) -> Result<Vec<f64>> {
    if mesh.intervals() % 2 != 0 {
        return Err(Error::Invalid("restriction needs an even number of intervals"));
    }
    if fine.len() != mesh.dim() {
        return Err(Error::DimensionMismatch {
            expected: mesh.dim(),
            got: fine.len(),
        });
    }
    Ok(fine.iter().skip(1).step_by(2).copied().collect())
}

/// Piecewise-linear prolongation of coarse interior values onto the fine
/// interior nodes; `left`/`right` are the values at the two end nodes.
pub fn prolong(coarse: &[f64], left: f64, right: f64, fine: &mut [f64]) -> Result<()> {
    let expected = 2 * coarse.len() + 1;
    if fine.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: fine.len(),
        });
    }
    let at = |j: usize| -> f64 {
        if j == 0 {
            left
        } else if j > coarse.len() {
            right
        } else {
            coarse[j - 1]
        }
    };
    for (i, out) in fine.iter_mut().enumerate() {
        let node = i + 1;
        *out = if node % 2 == 0 {
            at(node / 2)
        } else {
            0.5 * (at(node / 2) + at(node / 2 + 1))
        };
    }
    Ok(())
}

/// Linear interpolation of nodal values (including both boundary values) at
/// `x`. Exact when `x` is a node.
pub fn interpolate(mesh: &Mesh1D, left: f64, interior: &[f64], right: f64, x: f64) -> f64 {
    let n = mesh.intervals();
    let value = |i: usize| -> f64 {
        if i == 0 {
            left
        } else if i == n {
            right
        } else {
            interior[i - 1]
        }
    };
    let s = ((x - mesh.a()) / mesh.h()).clamp(0.0, n as f64);
    let nearest = s.round();
    if (s - nearest).abs() < 1e-9 {
        return value(nearest as usize);
    }
    let i = (s.floor() as usize).min(n - 1);
    let w = s - i as f64;
    (1.0 - w) * value(i) + w * value(i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BurgersFisher, Fisher, PureDiffusion};

    #[test]
    fn mesh_basics() {
        let m = Mesh1D::new(0.0, 1.0, 8).unwrap();
        assert_eq!(m.dim(), 7);
        assert!((m.h() * 8.0 - 1.0).abs() <= 1e-12);
        assert_eq!(m.node(8), 1.0);
        assert!(m.check_nested().is_ok());
        assert!(Mesh1D::new(0.0, 1.0, 7).unwrap().check_nested().is_err());
        assert!(Mesh1D::new(0.0, 1.0, 2).unwrap().check_nested().is_err());
        assert!(Mesh1D::new(0.0, 1.0, 1).is_err());
        assert!(Mesh1D::new(1.0, 0.0, 4).is_err());
        let (m, exact) = Mesh1D::with_step(0.0, 1.0, 0.0083).unwrap();
        assert_eq!(m.intervals(), 120);
        assert!(!exact);
        let (m, exact) = Mesh1D::with_step(0.0, 1.0, 0.0125).unwrap();
        assert_eq!(m.intervals(), 80);
        assert!(exact);
    }

    #[test]
    fn operators_for_four_intervals() {
        let ops = FdOperators::assemble(&Mesh1D::new(0.0, 1.0, 4).unwrap()).unwrap();
        assert_eq!(
            ops.a_xx.to_dense(),
            vec![
                vec![-2.0, 1.0, 0.0],
                vec![1.0, -2.0, 1.0],
                vec![0.0, 1.0, -2.0]
            ]
        );
        assert_eq!(ops.a_x.to_dense()[0], vec![0.0, 1.0, 0.0]);
        assert_eq!(ops.a_x.to_dense()[1], vec![-1.0, 0.0, 1.0]);
        assert_eq!(
            ops.a_hat_x.to_dense(),
            vec![
                vec![2.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![-1.0, 0.0, 1.0]
            ]
        );
        assert!(ops.a_xx.is_symmetric());
        let bv = ops.boundary_vectors(1.0, 2.0);
        assert_eq!(bv.c_x, vec![-2.0, 0.0, 4.0]);
        assert_eq!(bv.c_xx, vec![16.0, 0.0, 32.0]);
        assert_eq!(bv.c_hat_x, vec![-4.0, -2.0, 0.0]);
    }

    #[test]
    fn too_coarse_mesh_is_rejected() {
        let m = Mesh1D::new(0.0, 1.0, 2).unwrap();
        assert!(matches!(
            FdOperators::assemble(&m),
            Err(Error::MeshTooCoarse(_))
        ));
    }

    #[test]
    fn zero_state_of_pure_diffusion_is_stationary() {
        let model = PureDiffusion::zero();
        let mesh = Mesh1D::new(0.0, 1.0, 10).unwrap();
        let g = Semidiscrete::new(&model, mesh);
        assert_eq!(g.eval_vec(0.3, &[0.0; 9]).unwrap(), vec![0.0; 9]);
    }

    #[test]
    fn restriction_picks_even_nodes() {
        let mesh = Mesh1D::new(0.0, 1.0, 8).unwrap();
        let fine = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        assert_eq!(restrict(&fine, &mesh).unwrap(), vec![2.0, 4.0, 6.0]);
        let odd = Mesh1D::new(0.0, 1.0, 7).unwrap();
        assert!(restrict(&[0.0; 6], &odd).is_err());
        assert!(restrict(&[0.0; 6], &mesh).is_err());

        // twice = every fourth node
        let mesh16 = Mesh1D::new(0.0, 1.0, 16).unwrap();
        let fine: Vec<f64> = (1..16).map(|i| i as f64).collect();
        let once = restrict(&fine, &mesh16).unwrap();
        let twice = restrict(&once, &mesh16.coarsen().unwrap()).unwrap();
        assert_eq!(twice, vec![4.0, 8.0, 12.0]);
    }

    #[test]
    fn restriction_of_sampled_closed_form() {
        let model = Fisher::new(4.0).unwrap();
        let fine = Mesh1D::new(0.0, 1.0, 40).unwrap();
        let coarse = fine.coarsen().unwrap();
        let t = 0.37;
        let on_fine: Vec<f64> = fine
            .interior_nodes()
            .map(|x| model.analytic(x, t).unwrap())
            .collect();
        let on_coarse: Vec<f64> = coarse
            .interior_nodes()
            .map(|x| model.analytic(x, t).unwrap())
            .collect();
        let r = restrict(&on_fine, &fine).unwrap();
        for (a, b) in r.iter().zip(&on_coarse) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn prolongation_is_linear_interpolation() {
        let mut fine = [0.0; 5];
        prolong(&[2.0, 4.0], 0.0, 6.0, &mut fine).unwrap();
        assert_eq!(fine, [1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(prolong(&[1.0], 0.0, 0.0, &mut fine).is_err());
    }

    #[test]
    fn interpolation_reads_nodes_exactly() {
        let mesh = Mesh1D::new(0.0, 1.0, 4).unwrap();
        let interior = [1.0, 2.0, 3.0];
        assert_eq!(interpolate(&mesh, 0.0, &interior, 4.0, 0.5), 2.0);
        assert_eq!(interpolate(&mesh, 0.0, &interior, 4.0, 0.0), 0.0);
        assert_eq!(interpolate(&mesh, 0.0, &interior, 4.0, 1.0), 4.0);
        assert!((interpolate(&mesh, 0.0, &interior, 4.0, 0.625) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rhs_rejects_wrong_dimension_and_overflow() {
        let model = BurgersFisher::new(4.5, 5.5).unwrap();
        let mesh = Mesh1D::new(0.0, 1.0, 8).unwrap();
        let g = Semidiscrete::new(&model, mesh);
        assert!(matches!(
            g.eval_vec(0.0, &[0.0; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut v = [0.5; 7];
        v[3] = f64::INFINITY;
        match g.eval_vec(0.25, &v) {
            Err(Error::RhsOverflow { t, index }) => {
                assert_eq!(t, 0.25);
                assert!(index >= 2 && index <= 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
