//! Quadratic forms of the surrogate constraints in the reflection vector and
//! in the stacked beamformer.
//!
//! With `y = conj(phi)` and `B = diag(conj g) H`, the effective channel
//! satisfies `h_hat^H w = y^H (B w) + h^H w`. For fixed `(w, u)` each
//! surrogate `tau - lhs <= 0` becomes
//! `2 Re{mu^H y} + y^H Upsilon y - e <= 0`, and for fixed `(phi, u)` it
//! becomes `w^H Psi w + 2 Re{rho^H w} - e_hat <= 0`.

use super::surrogate::{Aux, Constraint, SurrogateConstraints};
use super::Problem;
use crate::model::{user_index, Beamformers};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Reflection-side coefficients of one surrogate.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiCoeff {
    pub mu: CVector,
    pub upsilon: CMatrix,
    pub e: f64,
}

impl PhiCoeff {
    /// `2 Re{mu^H phi^*} + phi^T Upsilon phi^* - e`.
    pub fn evaluate(&self, phi: &CVector) -> f64 {
        let y = phi.map(|z| z.conj());
        2.0 * self.mu.dotc(&y).re + y.dotc(&(&self.upsilon * &y)).re - self.e
    }
}

/// Beamformer-side coefficients of one surrogate. `Psi` is block diagonal
/// with `2K` blocks of size `N x N`, in stacked-beam order.
#[derive(Clone, Debug, PartialEq)]
pub struct WCoeff {
    pub psi: Vec<CMatrix>,
    pub rho: CVector,
    pub e_hat: f64,
}

impl WCoeff {
    pub fn psi_dense(&self) -> CMatrix {
        let n = self.psi.first().map_or(0, |b| b.nrows());
        let mut out = CMatrix::zeros(n * self.psi.len(), n * self.psi.len());
        for (i, b) in self.psi.iter().enumerate() {
            out.view_mut((i * n, i * n), (n, n)).copy_from(b);
        }
        out
    }

    /// `w^H Psi w + 2 Re{rho^H w} - e_hat` for stacked `w`.
    pub fn evaluate(&self, w: &CVector) -> f64 {
        let n = self.psi.first().map_or(0, |b| b.nrows());
        let quad: f64 = self
            .psi
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let wi = w.rows(i * n, n);
                wi.dotc(&(b * wi)).re
            })
            .sum();
        quad + 2.0 * self.rho.dotc(w).re - self.e_hat
    }
}

/// Coefficients for every `(k, j)`, indexed `[k][j - 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintCoeffs<T> {
    pub entries: Vec<[T; 3]>,
}

impl<T> ConstraintCoeffs<T> {
    pub fn get(&self, k: usize, c: Constraint) -> &T {
        &self.entries[k][c.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.entries.iter().flat_map(|e| e.iter())
    }
}

fn check_state(problem: &Problem<'_>, beams: &Beamformers, aux: &Aux) -> Result<()> {
    let cfg = problem.config;
    if beams.antennas() != cfg.antennas || beams.clusters() != cfg.clusters || aux.values.len() != cfg.clusters {
        return Err(Error::Dimension(format!(
            "state has {} beams of length {} and {} aux triples for K={}, N={}",
            beams.as_slice().len(),
            beams.antennas(),
            aux.values.len(),
            cfg.clusters,
            cfg.antennas
        )));
    }
    Ok(())
}

/// Reflection-side coefficients at fixed `(w, u)`.
pub fn build_phi_coeffs(problem: &Problem<'_>, beams: &Beamformers, aux: &Aux) -> Result<ConstraintCoeffs<PhiCoeff>> {
    check_state(problem, beams, aux)?;
    let m = problem.config.elements;
    let sur: &SurrogateConstraints = &problem.surrogates;
    let entries = (0..problem.config.clusters)
        .map(|k| {
            Constraint::ALL.map(|c| {
                let o = user_index(k, c.observer());
                let b = &problem.cascaded[o];
                let h = problem.channels.bs_user[o].clone();
                let u = aux.get(k, c);
                let u2 = u.norm_sqr();
                let ws = beams.get(k, c.signal());
                let a_s = b * ws;
                let c_s = h.dotc(ws);
                let mut mu = a_s * (-u.conj());
                let mut ups = CMatrix::zeros(m, m);
                let mut interf = 0.0;
                for idx in c.interferers(k, beams.clusters()) {
                    let wb = &beams.as_slice()[idx];
                    let a_b = b * wb;
                    let c_b = h.dotc(wb);
                    mu.axpy(c_b.conj() * u2, &a_b, C64::new(1.0, 0.0));
                    ups.ger(C64::new(u2, 0.0), &a_b, &a_b.conjugate(), C64::new(1.0, 0.0));
                    interf += c_b.norm_sqr();
                }
                let e = 2.0 * (u.conj() * c_s).re - sur.tau(k, c) - u2 * (sur.noise + interf);
                PhiCoeff { mu, upsilon: ups, e }
            })
        })
        .collect();
    Ok(ConstraintCoeffs { entries })
}

/// Beamformer-side coefficients at fixed `(phi, u)`, given the effective
/// channels `h_hat` at that `phi`.
pub fn build_w_coeffs(problem: &Problem<'_>, h_hat: &[CVector], aux: &Aux) -> Result<ConstraintCoeffs<WCoeff>> {
    let cfg = problem.config;
    let n = cfg.antennas;
    let kk = cfg.clusters;
    if h_hat.len() != 2 * kk || h_hat.iter().any(|h| h.len() != n) || aux.values.len() != kk {
        return Err(Error::Dimension(format!(
            "expected {} effective channels of length {n} and {kk} aux triples",
            2 * kk
        )));
    }
    let sur = &problem.surrogates;
    let entries = (0..kk)
        .map(|k| {
            Constraint::ALL.map(|c| {
                let a = &h_hat[user_index(k, c.observer())];
                let u = aux.get(k, c);
                let u2 = u.norm_sqr();
                let outer = (a * a.adjoint()) * C64::new(u2, 0.0);
                let mut psi = vec![CMatrix::zeros(n, n); 2 * kk];
                for idx in c.interferers(k, kk) {
                    psi[idx] = outer.clone();
                }
                let mut rho = CVector::zeros(2 * kk * n);
                let s = user_index(k, c.signal());
                rho.rows_mut(s * n, n).copy_from(&(a * (-u)));
                WCoeff {
                    psi,
                    rho,
                    e_hat: -sur.tau(k, c) - u2 * sur.noise,
                }
            })
        })
        .collect();
    Ok(ConstraintCoeffs { entries })
}
