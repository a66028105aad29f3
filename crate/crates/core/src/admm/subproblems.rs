//! The two conic subproblems: proximal reflection step and minimum-power
//! beamformer step.
//!
//! A constraint `z^H Q z + 2 Re{r^H z} <= e` with `Q = R^H R` is the cone
//! `||[R z; (1 - e)/2 + Re{r^H z}]|| <= (1 + e)/2 - Re{r^H z}`.

use nalgebra::{DMatrix, DVector};

use super::coeffs::{ConstraintCoeffs, PhiCoeff, WCoeff};
use crate::conic::{
    self, complex_to_real, psd_sqrt, real_to_complex, realify_matrix, SocCone, SocpProblem, SocpSolution, SocpStatus,
    SolveOptions,
};
use crate::model::Beamformers;
use crate::{CMatrix, CVector, Error, Result};

/// Negative-eigenvalue clamp for the square-root factors.
pub const PSD_EPS: f64 = 1e-9;

/// Cone for `z^H (R^H R) z + 2 Re{r^H z} <= e`, over `[Re z; Im z]`
/// followed by `extra` trailing variables that do not enter.
fn quadratic_cone(root: &CMatrix, r: &CVector, e: f64, extra: usize) -> SocCone {
    let n = 2 * r.len();
    let rr = realify_matrix(root);
    let row = complex_to_real(r);
    let rows = rr.nrows() + 1;
    let mut a = DMatrix::zeros(rows, n + extra);
    a.view_mut((0, 0), (rr.nrows(), n)).copy_from(&rr);
    let mut c = DVector::zeros(n + extra);
    for j in 0..n {
        a[(rows - 1, j)] = row[j];
        c[j] = -row[j];
    }
    let mut b = DVector::zeros(rows);
    b[rows - 1] = (1.0 - e) / 2.0;
    SocCone { a, b, c, d: (1.0 + e) / 2.0 }
}

pub fn phi_cone(coeff: &PhiCoeff) -> Result<SocCone> {
    let root = psd_sqrt(&coeff.upsilon, PSD_EPS)?;
    Ok(quadratic_cone(&root, &coeff.mu, coeff.e, 0))
}

/// Square root of a block-diagonal `Psi`, block by block.
fn block_root(psi: &[CMatrix]) -> Result<CMatrix> {
    let n = psi.first().map_or(0, |b| b.nrows());
    let roots = psi.iter().map(|b| psd_sqrt(b, PSD_EPS)).collect::<Result<Vec<_>>>()?;
    let rows: usize = roots.iter().map(|r| r.nrows()).sum();
    let mut out = CMatrix::zeros(rows, n * psi.len());
    let mut at = 0;
    for (i, r) in roots.iter().enumerate() {
        out.view_mut((at, i * n), (r.nrows(), n)).copy_from(r);
        at += r.nrows();
    }
    Ok(out)
}

pub fn w_cone(coeff: &WCoeff, extra: usize) -> Result<SocCone> {
    Ok(quadratic_cone(&block_root(&coeff.psi)?, &coeff.rho, coeff.e_hat, extra))
}

/// A solve is usable when optimal, or when the solver stopped early at a
/// point that still satisfies every cone to `tol`.
fn usable(problem: &SocpProblem, sol: &SocpSolution, opts: &SolveOptions) -> bool {
    match sol.status {
        SocpStatus::Optimal => true,
        SocpStatus::MaxIterations | SocpStatus::NumericalFailure => {
            sol.x.iter().all(|v| v.is_finite()) && problem.min_slack(&sol.x) >= -opts.tol.max(1e-6)
        }
        SocpStatus::Infeasible => false,
    }
}

fn failure(sol: &SocpSolution, iteration: usize, stage: &'static str) -> Error {
    match sol.status {
        SocpStatus::Infeasible => Error::SubproblemInfeasible { iteration, stage },
        s => Error::Solver(format!("{stage} step at iteration {iteration}: {s:?}")),
    }
}

/// Proximal reflection step: the point closest to `target` (normally
/// `varphi - lambda`) satisfying every surrogate at the fixed `(w, u)`.
pub fn update_phi(
    coeffs: &ConstraintCoeffs<PhiCoeff>,
    target: &CVector,
    opts: &SolveOptions,
    iteration: usize,
) -> Result<CVector> {
    let cones = coeffs.iter().map(phi_cone).collect::<Result<Vec<_>>>()?;
    let center = complex_to_real(&target.map(|z| z.conj()));
    let problem = SocpProblem::proximal(center, cones);
    let sol = conic::solve(&problem, opts)?;
    if !usable(&problem, &sol, opts) {
        return Err(failure(&sol, iteration, "phi"));
    }
    Ok(real_to_complex(&sol.x).map(|z| z.conj()))
}

/// Minimum-norm stacked beamformer satisfying every surrogate at the fixed
/// `(phi, u)`.
pub fn update_w(
    coeffs: &ConstraintCoeffs<WCoeff>,
    antennas: usize,
    opts: &SolveOptions,
    iteration: usize,
) -> Result<Beamformers> {
    let dim = coeffs.iter().next().map_or(0, |c| 2 * c.rho.len());
    let cones = coeffs.iter().map(|c| w_cone(c, 0)).collect::<Result<Vec<_>>>()?;
    let problem = SocpProblem::min_norm(dim, cones);
    let sol = conic::solve(&problem, opts)?;
    if !usable(&problem, &sol, opts) {
        return Err(failure(&sol, iteration, "w"));
    }
    Beamformers::from_stacked(&real_to_complex(&sol.x), antennas)
}

/// Softened beamformer step: each surrogate may be violated by a slack
/// `s_j >= 0` charged at `penalty` per unit. Returns the beams and the
/// slacks in `coeffs.iter()` order.
pub fn update_w_soft(
    coeffs: &ConstraintCoeffs<WCoeff>,
    antennas: usize,
    penalty: f64,
    opts: &SolveOptions,
    iteration: usize,
) -> Result<(Beamformers, Vec<f64>)> {
    let list: Vec<&WCoeff> = coeffs.iter().collect();
    let n = list.first().map_or(0, |c| 2 * c.rho.len());
    let m = list.len();
    let mut cones = Vec::with_capacity(2 * m);
    for (j, co) in list.iter().enumerate() {
        let mut cone = w_cone(co, m)?;
        // e_hat -> e_hat + s_j
        let last = cone.a.nrows() - 1;
        cone.a[(last, n + j)] = -0.5;
        cone.c[n + j] = 0.5;
        cones.push(cone);
        let mut c = DVector::zeros(n + m);
        c[n + j] = 1.0;
        cones.push(SocCone {
            a: DMatrix::zeros(0, n + m),
            b: DVector::zeros(0),
            c,
            d: 0.0,
        });
    }
    let mut problem = SocpProblem::min_norm(n + m, cones);
    problem.objective.center = DVector::zeros(n);
    for j in 0..m {
        problem.objective.linear[n + j] = penalty;
    }
    let sol = conic::solve(&problem, opts)?;
    if !usable(&problem, &sol, opts) {
        return Err(failure(&sol, iteration, "w-soft"));
    }
    let w = real_to_complex(&sol.x.rows(0, n).into_owned());
    let slacks = (0..m).map(|j| sol.x[n + j].max(0.0)).collect();
    Ok((Beamformers::from_stacked(&w, antennas)?, slacks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admm::coeffs::build_w_coeffs;
    use crate::admm::surrogate::{Aux, Constraint};
    use crate::admm::Problem;
    use crate::channel::ChannelRealization;
    use crate::model::{SystemConfig, User};
    use crate::C64;

    fn disk_coeff(center: C64, radius: f64) -> PhiCoeff {
        // |y - c|^2 <= r^2  <=>  |y|^2 - 2 Re{c^* y} <= r^2 - |c|^2
        PhiCoeff {
            mu: CVector::from_element(1, -center),
            upsilon: CMatrix::from_element(1, 1, C64::new(1.0, 0.0)),
            e: radius * radius - center.norm_sqr(),
        }
    }

    #[test]
    fn scalar_cone_matches_disk_projection() {
        // y-disk centred at c is the phi-disk centred at conj(c)
        let c = C64::new(1.0, 2.0);
        let coeffs = ConstraintCoeffs {
            entries: vec![[disk_coeff(c, 0.5), disk_coeff(c, 3.0), disk_coeff(c, 3.0)]],
        };
        let target = CVector::from_element(1, C64::new(-1.0, 0.5));
        let phi = update_phi(&coeffs, &target, &SolveOptions::default(), 0).unwrap();
        let pc = c.conj();
        let d = target[0] - pc;
        let expect = pc + d / d.norm() * 0.5;
        // the objective is flat along the boundary, so compare distances
        assert!(((phi[0] - target[0]).norm() - (expect - target[0]).norm()).abs() < 1e-7);
        assert!((phi[0] - pc).norm() <= 0.5 + 1e-7);
        assert!((phi[0] - expect).norm() < 1e-3, "{} vs {}", phi[0], expect);
    }

    #[test]
    fn slack_constraints_give_pure_proximal_point() {
        let loose = PhiCoeff {
            mu: CVector::zeros(3),
            upsilon: CMatrix::zeros(3, 3),
            e: 1e6,
        };
        let coeffs = ConstraintCoeffs {
            entries: vec![[loose.clone(), loose.clone(), loose]],
        };
        let target = CVector::from_vec(vec![C64::new(0.3, -0.1), C64::new(1.0, 1.0), C64::new(0.0, 2.0)]);
        let phi = update_phi(&coeffs, &target, &SolveOptions::default(), 0).unwrap();
        assert!((phi - target).norm() < 1e-6);
    }

    #[test]
    fn infeasible_phi_step_is_reported() {
        let bad = PhiCoeff {
            mu: CVector::zeros(2),
            upsilon: CMatrix::zeros(2, 2),
            e: -1.0,
        };
        let coeffs = ConstraintCoeffs {
            entries: vec![[bad.clone(), bad.clone(), bad]],
        };
        let err = update_phi(&coeffs, &CVector::zeros(2), &SolveOptions::default(), 4).unwrap_err();
        assert!(matches!(err, Error::SubproblemInfeasible { iteration: 4, stage: "phi" }), "{err:?}");
    }

    fn scalar_pair(h_c: C64, h_e: C64, noise: f64, tc: f64, te: f64) -> (SystemConfig, ChannelRealization) {
        let mut cfg = SystemConfig::standard();
        cfg.clusters = 1;
        cfg.antennas = 1;
        cfg.elements = 0;
        cfg.irs_enabled = false;
        cfg.noise_power = noise;
        let cfg = cfg.with_uniform_targets((1.0 + tc).log2(), (1.0 + te).log2());
        let ch = ChannelRealization {
            bs_irs: CMatrix::zeros(0, 1),
            irs_user: vec![CVector::zeros(0), CVector::zeros(0)],
            bs_user: vec![CVector::from_element(1, h_c), CVector::from_element(1, h_e)],
        };
        (cfg, ch)
    }

    #[test]
    fn zero_targets_give_zero_beams() {
        let (cfg, ch) = scalar_pair(C64::new(1.0, 0.0), C64::new(0.5, 0.0), 1.0, 0.0, 0.0);
        let p = Problem::new(&cfg, &ch).unwrap();
        let hh = p.effective(&CVector::zeros(0));
        let aux = Aux::zeros(1);
        let w = update_w(&build_w_coeffs(&p, &hh, &aux).unwrap(), 1, &SolveOptions::default(), 0).unwrap();
        assert!(w.power() < 1e-12);
    }

    #[test]
    fn scalar_noma_pair_reaches_hand_derived_power() {
        // Single antenna: the minimum-power pair meets every constraint with
        // equality at p_c = tau_c s / |h_c|^2 and
        // p_e = tau_e (p_c + s / min(|h_c|^2, |h_e|^2)).
        let (hc, he, s, tc, te) = (C64::new(2.0, 0.0), C64::new(0.0, 1.0), 0.5, 3.0, 1.0);
        let (cfg, ch) = scalar_pair(hc, he, s, tc, te);
        let p = Problem::new(&cfg, &ch).unwrap();
        let hh = p.effective(&CVector::zeros(0));
        let pc = tc * s / hc.norm_sqr();
        let pe = te * (pc + s / hc.norm_sqr().min(he.norm_sqr()));
        // iterate the u/w surrogate pair to its fixed point
        let mut beams = Beamformers::from_vectors(vec![
            CVector::from_element(1, C64::new(3.0, 0.0)),
            CVector::from_element(1, C64::new(3.0, 0.0)),
        ])
        .unwrap();
        for it in 0..200 {
            let aux = crate::admm::update_u(&p.surrogates, &hh, &beams);
            beams = update_w(&build_w_coeffs(&p, &hh, &aux).unwrap(), 1, &SolveOptions::default(), it).unwrap();
        }
        assert!((beams.get(0, User::Center).norm_squared() - pc).abs() < 1e-4 * pc);
        assert!((beams.get(0, User::Edge).norm_squared() - pe).abs() < 1e-4 * pe);
        assert!((beams.power() - (pc + pe)).abs() < 1e-4 * (pc + pe));
    }

    #[test]
    fn soft_step_absorbs_infeasibility() {
        let (cfg, ch) = scalar_pair(C64::new(1.0, 0.0), C64::new(1.0, 0.0), 1.0, 1.0, 1.0);
        let p = Problem::new(&cfg, &ch).unwrap();
        let hh = p.effective(&CVector::zeros(0));
        // u = 0 makes every surrogate read 0 <= -tau
        let coeffs = build_w_coeffs(&p, &hh, &Aux::zeros(1)).unwrap();
        assert!(update_w(&coeffs, 1, &SolveOptions::default(), 0).is_err());
        let (w, s) = update_w_soft(&coeffs, 1, 1e3, &SolveOptions::default(), 0).unwrap();
        assert!(w.power() < 1e-8);
        assert_eq!(s.len(), 3);
        for (j, c) in Constraint::ALL.iter().enumerate() {
            assert!((s[j] - p.surrogates.tau(0, *c)).abs() < 1e-6);
        }
    }
}
