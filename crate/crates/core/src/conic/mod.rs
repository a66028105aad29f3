//! Second-order cone programs over real variables.
//!
//! A problem is
//!
//! ```text
//! minimize    ||x[..p] - center||_2 + linear^T x
//! subject to  ||A_i x + b_i||_2 <= c_i^T x + d_i,   i = 1..m
//! ```
//!
//! where `p = center.len()`. The norm objective is handled through an
//! epigraph variable `t` and one extra cone `||x[..p] - center|| <= t`. The
//! interior-point work is delegated to Clarabel (homogeneous self-dual
//! embedding, so infeasibility is certified rather than guessed).

mod lift;
pub mod text;

pub use lift::{complex_to_real, psd_sqrt, real_to_complex, realify_matrix, realify_re_inner};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus,
    SupportedConeT,
};
use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Default primal, dual and gap tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default interior-point iteration cap.
pub const DEFAULT_MAX_ITER: u32 = 200;

/// `||A x + b||_2 <= c^T x + d`. `A` may have zero rows, giving the
/// half-space `c^T x + d >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SocCone {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub d: f64,
}

impl SocCone {
    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// `c^T x + d - ||A x + b||`; nonnegative iff `x` is inside.
    pub fn slack(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x) + self.d - (&self.a * x + &self.b).norm()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.a.ncols() != n || self.c.len() != n || self.b.len() != self.a.nrows() {
            return Err(Error::Dimension(format!(
                "cone with A {:?}, b {}, c {} does not match dimension {n}",
                self.a.shape(),
                self.b.len(),
                self.c.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Objective {
    /// Target of the norm term; covers the first `center.len()` variables.
    pub center: DVector<f64>,
    /// Linear term over all variables.
    pub linear: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SocpProblem {
    pub objective: Objective,
    pub cones: Vec<SocCone>,
}

impl SocpProblem {
    /// `minimize ||x - center||` over the cones.
    pub fn proximal(center: DVector<f64>, cones: Vec<SocCone>) -> Self {
        let n = center.len();
        SocpProblem {
            objective: Objective {
                center,
                linear: DVector::zeros(n),
            },
            cones,
        }
    }

    /// `minimize ||x||` over the cones.
    pub fn min_norm(dim: usize, cones: Vec<SocCone>) -> Self {
        Self::proximal(DVector::zeros(dim), cones)
    }

    pub fn dim(&self) -> usize {
        self.objective.linear.len()
    }

    pub fn objective_value(&self, x: &DVector<f64>) -> f64 {
        let p = self.objective.center.len();
        (x.rows(0, p) - &self.objective.center).norm() + self.objective.linear.dot(x)
    }

    /// Smallest cone slack at `x` (infinity without cones).
    pub fn min_slack(&self, x: &DVector<f64>) -> f64 {
        self.cones.iter().map(|c| c.slack(x)).fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.objective.center.len() > n {
            return Err(Error::Dimension(format!(
                "objective center has {} entries for {n} variables",
                self.objective.center.len()
            )));
        }
        self.cones.iter().try_for_each(|c| c.validate(n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SocpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktResiduals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SocpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub status: SocpStatus,
    pub kkt_residuals: KktResiduals,
    pub iterations: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Column-major triplet accumulator for the Clarabel constraint matrix.
struct Triplets {
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    fn push(&mut self, r: usize, c: usize, v: f64) {
        if v != 0.0 {
            self.rows.push(r);
            self.cols.push(c);
            self.vals.push(v);
        }
    }
}

/// Solves `problem`. `Optimal` is only reported when the interior-point
/// method converged and every cone slack at the returned point is at least
/// `-tol`.
pub fn solve(problem: &SocpProblem, opts: &SolveOptions) -> Result<SocpSolution> {
    problem.validate()?;
    let n = problem.dim();
    let p = problem.objective.center.len();
    let t_col = n;
    let nvar = n + 1;

    // Clarabel form: A x + s = b, s in K.
    let mut trip = Triplets {
        rows: Vec::new(),
        cols: Vec::new(),
        vals: Vec::new(),
    };
    let mut rhs: Vec<f64> = Vec::new();
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();

    // ||x[..p] - center|| <= t
    trip.push(0, t_col, -1.0);
    rhs.push(0.0);
    for i in 0..p {
        trip.push(1 + i, i, -1.0);
        rhs.push(-problem.objective.center[i]);
    }
    cones.push(SecondOrderConeT(p + 1));

    // Cones that do not involve x are either vacuous or certify
    // infeasibility; interior-point methods handle neither gracefully.
    let mut live = Vec::with_capacity(problem.cones.len());
    for cone in &problem.cones {
        if cone.a.iter().chain(cone.c.iter()).all(|&v| v == 0.0) {
            if cone.d - cone.b.norm() < -opts.tol {
                return Ok(SocpSolution {
                    x: DVector::from_element(n, f64::NAN),
                    objective: f64::NAN,
                    status: SocpStatus::Infeasible,
                    kkt_residuals: KktResiduals { primal: f64::NAN, dual: f64::NAN, gap: f64::NAN },
                    iterations: 0,
                });
            }
        } else {
            live.push(cone);
        }
    }

    let mut row = p + 1;
    for cone in live {
        for j in 0..n {
            trip.push(row, j, -cone.c[j]);
        }
        rhs.push(cone.d);
        for i in 0..cone.a.nrows() {
            for j in 0..n {
                trip.push(row + 1 + i, j, -cone.a[(i, j)]);
            }
            rhs.push(cone.b[i]);
        }
        let m = cone.a.nrows() + 1;
        cones.push(if m == 1 {
            NonnegativeConeT(1)
        } else {
            SecondOrderConeT(m)
        });
        row += m;
    }

    let a = CscMatrix::new_from_triplets(row, nvar, trip.rows, trip.cols, trip.vals);
    let pmat = CscMatrix::<f64>::zeros((nvar, nvar));
    let mut q: Vec<f64> = problem.objective.linear.iter().copied().collect();
    q.push(1.0);

    // Clarabel's feasibility tolerance is relative to the data norms; ask for
    // a little more so the absolute check below rarely downgrades a solve.
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(opts.max_iter)
        .tol_feas(opts.tol * 0.1)
        .tol_gap_abs(opts.tol)
        .tol_gap_rel(opts.tol)
        .presolve_enable(false)
        .build()
        .map_err(|e| Error::Solver(format!("settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&pmat, &q, &a, &rhs, &cones, settings)
        .map_err(|e| Error::Solver(format!("setup: {e:?}")))?;
    solver.solve();

    let sol = &solver.solution;
    let x = DVector::from_iterator(n, sol.x.iter().take(n).copied());
    let kkt = KktResiduals {
        primal: solver.info.res_primal,
        dual: solver.info.res_dual,
        gap: solver.info.gap_rel.min(solver.info.gap_abs),
    };
    let mut status = match sol.status {
        SolverStatus::Solved => SocpStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SocpStatus::Infeasible,
        SolverStatus::MaxIterations | SolverStatus::MaxTime => SocpStatus::MaxIterations,
        _ => SocpStatus::NumericalFailure,
    };
    let finite = x.iter().all(|v| v.is_finite());
    if status == SocpStatus::Optimal && (!finite || problem.min_slack(&x) < -opts.tol) {
        status = SocpStatus::NumericalFailure;
    }
    let objective = if finite {
        problem.objective_value(&x)
    } else {
        f64::NAN
    };
    Ok(SocpSolution {
        x,
        objective,
        status,
        kkt_residuals: kkt,
        iterations: sol.iterations,
    })
}
