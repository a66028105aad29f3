//! Reflection update for the zero-forcing design: maximize the summed
//! received signal power `sum |phi^T varpi + varsigma|^2` over unit-modulus
//! `phi` by a fixed-point iteration on the lifted vector `[conj(phi); 1]`.

use nalgebra::SymmetricEigen;

use crate::admm::{Constraint, Problem};
use crate::model::{user_index, Beamformers};
use crate::{CMatrix, CVector, Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct ReflectionObjective {
    /// `(M + 1) x (M + 1)` Hermitian matrix `sum_{k,j} Omega_{k,j}`.
    pub omega: CMatrix,
    /// `varpi_{k,j} = diag(conj g) H w`, indexed `[k][j - 1]`.
    pub varpi: Vec<[CVector; 3]>,
    /// `varsigma_{k,j} = h^H w`.
    pub varsigma: Vec<[C64; 3]>,
}

impl ReflectionObjective {
    /// `sum_{k,j} |phi^T varpi + varsigma|^2`.
    pub fn signal_power(&self, phi: &CVector) -> f64 {
        self.varpi
            .iter()
            .zip(&self.varsigma)
            .flat_map(|(p, s)| p.iter().zip(s.iter()))
            .map(|(p, s)| (phi.dot(p) + s).norm_sqr())
            .sum()
    }

    /// `sum |varsigma|^2`, the part of the signal power the lifted quadratic
    /// form leaves out.
    pub fn constant(&self) -> f64 {
        self.varsigma.iter().flat_map(|s| s.iter()).map(|s| s.norm_sqr()).sum()
    }
}

/// `[conj(phi); 1]`.
pub fn lift(phi: &CVector) -> CVector {
    let m = phi.len();
    CVector::from_fn(m + 1, |i, _| if i < m { phi[i].conj() } else { C64::new(1.0, 0.0) })
}

/// Inverse of [`lift`] after normalizing by the last entry.
pub fn unlift(phi_tilde: &CVector) -> Result<CVector> {
    let m = phi_tilde.len() - 1;
    let last = phi_tilde[m];
    if last.norm() == 0.0 {
        return Err(Error::Domain("lifted reflection vector has a zero last entry".into()));
    }
    Ok(CVector::from_fn(m, |i, _| (phi_tilde[i] / last).conj()))
}

/// Builds `Omega` from the (full-space) beamformers.
pub fn reflection_objective(problem: &Problem<'_>, beams: &Beamformers) -> ReflectionObjective {
    let m = problem.config.elements;
    let mut omega = CMatrix::zeros(m + 1, m + 1);
    let mut varpi = Vec::with_capacity(beams.clusters());
    let mut varsigma = Vec::with_capacity(beams.clusters());
    for k in 0..beams.clusters() {
        let terms = Constraint::ALL.map(|c| {
            let o = user_index(k, c.observer());
            let w = beams.get(k, c.signal());
            (&problem.cascaded[o] * w, problem.channels.bs_user[o].dotc(w))
        });
        for (p, s) in &terms {
            let mut a = CVector::zeros(m + 1);
            a.rows_mut(0, m).copy_from(p);
            a[m] = *s;
            // a a^H without the |varsigma|^2 corner
            omega.ger(C64::new(1.0, 0.0), &a, &a.conjugate(), C64::new(1.0, 0.0));
            omega[(m, m)] -= C64::new(s.norm_sqr(), 0.0);
        }
        varpi.push(terms.clone().map(|t| t.0));
        varsigma.push(terms.map(|t| t.1));
    }
    ReflectionObjective { omega, varpi, varsigma }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoint {
    pub phi_tilde: CVector,
    pub iterations: usize,
    /// `phi_tilde^H Omega phi_tilde` after every iteration (unshifted Omega).
    pub objective: Vec<f64>,
    /// Diagonal shift applied after a non-monotone step, if any.
    pub shift: Option<f64>,
}

fn quad(omega: &CMatrix, x: &CVector) -> f64 {
    x.dotc(&(omega * x)).re
}

/// Iterates `x <- (Omega x) / |Omega x|` elementwise from `phi0` until the
/// largest phase change falls below `tol`. Entries where `Omega x` vanishes
/// are left as they are. If the objective ever decreases the iteration
/// restarts once with `Omega + s I`, `s` large enough to make it PSD; on
/// unit-modulus vectors the shift changes the objective by a constant only.
pub fn fixed_point_phi(omega: &CMatrix, phi0: &CVector, max_iter: usize, tol: f64) -> FixedPoint {
    let scale = omega.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut shift: Option<f64> = None;
    'restart: loop {
        let mut work = omega.clone();
        if let Some(s) = shift {
            for i in 0..work.nrows() {
                work[(i, i)] += C64::new(s, 0.0);
            }
        }
        let mut x = phi0.clone();
        let mut history = vec![quad(omega, &x)];
        for it in 1..=max_iter {
            let y = &work * &x;
            let next = CVector::from_fn(x.len(), |i, _| {
                let r = y[i].norm();
                if r > 0.0 {
                    y[i] / r
                } else {
                    x[i]
                }
            });
            let change = next.iter().zip(x.iter()).map(|(a, b)| (a * b.conj()).arg().abs()).fold(0.0, f64::max);
            let f = quad(omega, &next);
            if f < history[history.len() - 1] - 1e-12 * scale * x.len() as f64 && shift.is_none() {
                let lmin = SymmetricEigen::new(work.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
                shift = Some((-lmin).max(0.0) + 1e-12 * scale);
                continue 'restart;
            }
            history.push(f);
            x = next;
            if change < tol {
                return FixedPoint {
                    phi_tilde: x,
                    iterations: it,
                    objective: history,
                    shift,
                };
            }
        }
        return FixedPoint {
            phi_tilde: x,
            iterations: max_iter,
            objective: history,
            shift,
        };
    }
}

/// Rounds every phase to the nearest multiple of `2 pi / L`.
pub fn quantize_phi(phi: &CVector, levels: u32) -> CVector {
    crate::admm::project_reflection(phi, crate::model::ReflectionCase::DiscretePhase { levels })
}
