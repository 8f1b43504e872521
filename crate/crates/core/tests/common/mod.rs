//! Checks shared by the property tests and the acceptance report. Each
//! returns the measured quantity so callers can assert or print it.
#![allow(dead_code)]

use fdrk_core::discretize::FdOperators;
use fdrk_core::estimate::{solve_with_error, SolveConfig, TePolicy};
use fdrk_core::model::{Benchmark, PdeModel, PureDiffusion};
use fdrk_core::rkck::{TimeGrid, CASH_KARP};
use fdrk_core::{Mesh1D, Semidiscrete};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- rationals

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Q(i128, i128);

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Q {
    pub fn new(n: i128, d: i128) -> Q {
        let g = gcd(n, d).max(1);
        let s = if d < 0 { -1 } else { 1 };
        Q(s * n / g, s * d / g)
    }
    pub fn zero() -> Q {
        Q(0, 1)
    }
    pub fn add(self, o: Q) -> Q {
        Q::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    pub fn mul(self, o: Q) -> Q {
        let g1 = gcd(self.0, o.1).max(1);
        let g2 = gcd(o.0, self.1).max(1);
        Q::new((self.0 / g1) * (o.0 / g2), (self.1 / g2) * (o.1 / g1))
    }
    pub fn f(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

pub struct RationalTableau {
    pub a: Vec<Vec<Q>>,
    pub b4: Vec<Q>,
    pub b5: Vec<Q>,
    pub c: Vec<Q>,
}

pub fn cash_karp_rational() -> RationalTableau {
    let q = Q::new;
    let z = Q::zero();
    RationalTableau {
        a: vec![
            vec![z; 6],
            vec![q(1, 5), z, z, z, z, z],
            vec![q(3, 40), q(9, 40), z, z, z, z],
            vec![q(3, 10), q(-9, 10), q(6, 5), z, z, z],
            vec![q(-11, 54), q(5, 2), q(-70, 27), q(35, 27), z, z],
            vec![
                q(1631, 55296),
                q(175, 512),
                q(575, 13824),
                q(44275, 110592),
                q(253, 4096),
                z,
            ],
        ],
        b4: vec![
            q(2825, 27648),
            z,
            q(18575, 48384),
            q(13525, 55296),
            q(277, 14336),
            q(1, 4),
        ],
        b5: vec![q(37, 378), z, q(250, 621), q(125, 594), z, q(512, 1771)],
        c: vec![z, q(1, 5), q(3, 10), q(3, 5), q(1, 1), q(7, 8)],
    }
}

/// Order conditions up to order five as `(order, weight vector, target)`;
/// each weight vector `phi` is contracted with `b`.
pub fn conditions<T: Copy>(
    a: &[Vec<T>],
    c: &[T],
    add: impl Fn(T, T) -> T + Copy,
    mul: impl Fn(T, T) -> T + Copy,
    zero: T,
    one: T,
) -> Vec<(usize, Vec<T>, (i128, i128))> {
    let s = c.len();
    let av = |v: &[T]| -> Vec<T> {
        (0..s)
            .map(|i| (0..s).fold(zero, |acc, j| add(acc, mul(a[i][j], v[j]))))
            .collect()
    };
    let had = |u: &[T], v: &[T]| -> Vec<T> { u.iter().zip(v).map(|(&x, &y)| mul(x, y)).collect() };
    let ones = vec![one; s];
    let c2 = had(c, c);
    let c3 = had(&c2, c);
    let c4 = had(&c3, c);
    let ac = av(c);
    let ac2 = av(&c2);
    let ac3 = av(&c3);
    let aac = av(&ac);
    let aac2 = av(&ac2);
    let aaac = av(&aac);
    let a_cac = av(&had(c, &ac));
    vec![
        (1, ones, (1, 1)),
        (2, c.to_vec(), (1, 2)),
        (3, c2.clone(), (1, 3)),
        (3, ac.clone(), (1, 6)),
        (4, c3.clone(), (1, 4)),
        (4, had(c, &ac), (1, 8)),
        (4, ac2.clone(), (1, 12)),
        (4, aac.clone(), (1, 24)),
        (5, c4, (1, 5)),
        (5, had(&c2, &ac), (1, 10)),
        (5, had(c, &ac2), (1, 15)),
        (5, had(c, &aac), (1, 30)),
        (5, had(&ac, &ac), (1, 20)),
        (5, ac3, (1, 20)),
        (5, a_cac, (1, 40)),
        (5, aac2, (1, 60)),
        (5, aaac, (1, 120)),
    ]
}

/// Row sums and order conditions hold exactly in rational arithmetic, and
/// the fourth-order weights fail at order five.
pub fn rational_conditions_hold() -> bool {
    let t = cash_karp_rational();
    let rows = (0..6).all(|i| t.a[i].iter().fold(Q::zero(), |s, &x| s.add(x)) == t.c[i]);
    let conds = conditions(&t.a, &t.c, Q::add, Q::mul, Q::zero(), Q::new(1, 1));
    let dot = |b: &[Q], phi: &[Q]| b.iter().zip(phi).fold(Q::zero(), |s, (&x, &y)| s.add(x.mul(y)));
    let ok = conds.iter().all(|(order, phi, (n, d))| {
        (*order > 4 || dot(&t.b4, phi) == Q::new(*n, *d)) && dot(&t.b5, phi) == Q::new(*n, *d)
    });
    let fourth_fails = conds
        .iter()
        .filter(|c| c.0 == 5)
        .any(|(_, phi, (n, d))| dot(&t.b4, phi) != Q::new(*n, *d));
    rows && ok && fourth_fails
}

/// Largest order-condition residual of the floating-point tableau; infinite
/// if an entry differs from the rounded rational value.
pub fn float_tableau_defect() -> f64 {
    let t = cash_karp_rational();
    let tab = CASH_KARP;
    for i in 0..6 {
        let same = tab.c[i] == t.c[i].f()
            && tab.b[i] == t.b4[i].f()
            && tab.b_hat[i] == t.b5[i].f()
            && (0..6).all(|j| tab.a[i][j] == t.a[i][j].f());
        if !same {
            return f64::INFINITY;
        }
    }
    let a: Vec<Vec<f64>> = tab.a.iter().map(|r| r.to_vec()).collect();
    let conds = conditions(&a, &tab.c, |x, y| x + y, |x, y| x * y, 0.0, 1.0);
    let mut worst = 0.0_f64;
    for (order, phi, (n, d)) in &conds {
        let target = *n as f64 / *d as f64;
        let dot = |b: &[f64]| b.iter().zip(phi).map(|(x, y)| x * y).sum::<f64>();
        if *order <= 4 {
            worst = worst.max((dot(&tab.b) - target).abs());
        }
        worst = worst.max((dot(&tab.b_hat) - target).abs());
    }
    worst
}

/// Cyclic Jacobi eigenvalues of a dense symmetric matrix.
fn jacobi_eigenvalues(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let n = m.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Largest gap between the eigenvalues of `A_xx` and `-4 sin^2(j pi / 2N)`.
pub fn spectral_defect(n: usize) -> f64 {
    let mesh = Mesh1D::new(0.0, 1.0, n).unwrap();
    let ops = FdOperators::assemble(&mesh).unwrap();
    let numeric = jacobi_eigenvalues(ops.a_xx.to_dense());
    let mut closed: Vec<f64> = (1..n)
        .map(|j| {
            let s = (j as f64 * std::f64::consts::PI / (2.0 * n as f64)).sin();
            -4.0 * s * s
        })
        .collect();
    closed.sort_by(|a, b| a.total_cmp(b));
    numeric
        .iter()
        .zip(&closed)
        .fold(0.0, |m, (x, y)| f64::max(m, (x - y).abs()))
}

pub fn cos_growth_error(tab: fdrk_core::ButcherTableau, m: usize) -> f64 {
    let grid = TimeGrid::with_steps(2.0, m).unwrap();
    let out = tab
        .integrate(
            |t, y, dy| {
                dy[0] = t.cos() * y[0];
                Ok(())
            },
            &grid,
            &[1.0],
        )
        .unwrap();
    (out.trajectory[m][0] - 2f64.sin().exp()).abs()
}

pub fn slopes(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Global-error slopes on `y' = cos(t) y` with the fourth-order weights, or
/// with the fifth-order weights advancing the solution.
pub fn rk_slopes(fifth: bool) -> Vec<f64> {
    let mut tab = CASH_KARP;
    if fifth {
        tab.b = tab.b_hat;
    }
    let errs: Vec<f64> = [8, 16, 32, 64].iter().map(|&m| cos_growth_error(tab, m)).collect();
    slopes(&errs)
}

/// Largest one-step growth of the 2-norm for pure diffusion at the CFL step.
pub fn cfl_growth(seed: u64) -> f64 {
    let model = PureDiffusion::zero();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut worst = 0.0_f64;
    for n in [10usize, 40, 100] {
        let mesh = Mesh1D::new(0.0, 1.0, n).unwrap();
        let sd = Semidiscrete::new(&model, mesh);
        let k = CASH_KARP.cfl_step(mesh.h());
        let w0: Vec<f64> = (0..mesh.dim()).map(|_| rng.random::<f64>() - 0.5).collect();
        let steps = 200;
        let grid = TimeGrid::with_steps(k * steps as f64, steps).unwrap();
        let out = CASH_KARP
            .integrate(|t, v, o| sd.eval(t, v, o), &grid, &w0)
            .unwrap();
        for w in out.trajectory.windows(2) {
            worst = worst.max(norm(&w[1]) / norm(&w[0]));
        }
    }
    worst
}

pub fn benchmarks() -> Vec<Benchmark> {
    Benchmark::NAMES
        .iter()
        .map(|n| Benchmark::from_theta(n, Benchmark::default_theta(n).unwrap()).unwrap())
        .collect()
}

/// Largest scaled gap between `phi0`, `phi1` and central differences of `N`.
pub fn phi_fd_defect(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for model in benchmarks() {
        for _ in 0..200 {
            let u: f64 = rng.random_range(-1.0..2.0);
            let du: f64 = rng.random_range(-3.0..3.0);
            let d = 1e-6;
            let fd0 = (model.nonlinear(u + d, du) - model.nonlinear(u - d, du)) / (2.0 * d);
            let fd1 = (model.nonlinear(u, du + d) - model.nonlinear(u, du - d)) / (2.0 * d);
            worst = worst.max((fd0 - model.phi0(u, du)).abs() / (1.0 + fd0.abs()));
            worst = worst.max((fd1 - model.phi1(u, du)).abs() / (1.0 + fd1.abs()));
        }
    }
    worst
}

/// Largest `|E - (e + eta)|` over all models and policies on a small mesh.
pub fn decomposition_defect() -> f64 {
    let mut worst = 0.0_f64;
    for model in benchmarks() {
        for policy in [
            TePolicy::RichardsonField,
            TePolicy::RichardsonResidual,
            TePolicy::Alg1Scalar,
            TePolicy::HpOverTau,
        ] {
            let mesh = Mesh1D::new(0.0, 1.0, 16).unwrap();
            let cfg = SolveConfig::default().with_policy(policy).with_end_time(0.2);
            let r = solve_with_error(&model, &mesh, &cfg).unwrap();
            for i in 0..r.w.len() {
                worst = worst.max((r.e_total[i] - (r.e_hat[i] + r.eta_hat[i])).abs());
            }
        }
    }
    worst
}
