//! Zero-forcing design.
//!
//! Each cluster's beams live in the null space of the other clusters'
//! effective channels, so inter-cluster interference vanishes and the
//! beamformers decouple into closed forms per cluster. The reflection vector
//! is then chosen to maximize the summed received signal power, and the two
//! steps alternate.

pub mod edge;
pub mod reflection;

use std::time::Instant;

use nalgebra::SVD;

pub use edge::{solve_w_center, solve_w_edge, Definiteness, EdgeBeamCase, EdgeBranch};
pub use reflection::{fixed_point_phi, quantize_phi, reflection_objective, FixedPoint, ReflectionObjective};

use crate::admm::Problem;
use crate::channel::ChannelRealization;
use crate::model::{
    audit, sinrs_from, user_index, Beamformers, BeamformingSolution, Design, Normalized, ReflectionCase, SystemConfig,
    User, DEFAULT_AUDIT_TOL,
};
use crate::trace::{RunStatus, SolverTrace, TraceRow};
use crate::{CMatrix, CVector, Error, Result, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct ZfParams {
    /// Relative power change that ends the alternation.
    pub epsilon: f64,
    pub max_outer_iterations: usize,
    pub theta_grid: usize,
    pub fixed_point_max_iter: usize,
    /// Largest per-entry phase change (radians) ending the fixed point.
    pub fixed_point_tol: f64,
}

impl Default for ZfParams {
    fn default() -> Self {
        ZfParams {
            epsilon: 1e-3,
            max_outer_iterations: 50,
            theta_grid: 1024,
            fixed_point_max_iter: 1000,
            fixed_point_tol: 1e-9,
        }
    }
}

/// Orthonormal basis of the vectors orthogonal to every effective channel
/// outside cluster `k`. Its dimension is `N - rank`, at least `N - 2K + 2`.
pub fn null_space(h_hat: &[CVector], k: usize) -> Result<CMatrix> {
    let n = h_hat.first().map_or(0, |h| h.len());
    let clusters = h_hat.len() / 2;
    if n + 1 < 2 * clusters {
        return Err(Error::Dimension(format!(
            "zero forcing needs N >= 2K - 1 (N={n}, K={clusters})"
        )));
    }
    let others: Vec<&CVector> = h_hat
        .iter()
        .enumerate()
        .filter(|(i, _)| i / 2 != k)
        .map(|(_, h)| h)
        .collect();
    if others.is_empty() {
        return Ok(CMatrix::identity(n, n));
    }
    // Pad to square so the SVD returns a full set of left vectors.
    let mut hbar = CMatrix::zeros(n, n.max(others.len()));
    for (j, h) in others.iter().enumerate() {
        hbar.set_column(j, h);
    }
    let svd = SVD::new(hbar, true, false);
    let u = svd.u.ok_or_else(|| Error::Solver("SVD did not return left vectors".into()))?;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = n.max(others.len()) as f64 * f64::EPSILON * smax;
    let null: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= cutoff).collect();
    let mut basis = CMatrix::zeros(n, null.len());
    for (j, &i) in null.iter().enumerate() {
        basis.set_column(j, &u.column(i));
    }
    Ok(basis)
}

/// Per-cluster beams for fixed effective channels; returns the full-space
/// beams and the edge branch of every cluster.
pub fn zf_beams(
    problem: &Problem<'_>,
    h_hat: &[CVector],
    theta_grid: usize,
) -> Result<(Beamformers, Vec<EdgeBeamCase>)> {
    let kk = problem.config.clusters;
    let n = problem.config.antennas;
    let noise = problem.surrogates.noise;
    let mut vectors = vec![CVector::zeros(n); 2 * kk];
    let mut cases = Vec::with_capacity(kk);
    for k in 0..kk {
        let u = null_space(h_hat, k)?;
        let (tc, te) = problem.surrogates.tau[k];
        let hc = u.ad_mul(&h_hat[user_index(k, User::Center)]);
        let he = u.ad_mul(&h_hat[user_index(k, User::Edge)]);
        let tag = |e: Error| match e {
            Error::Infeasible { reason, .. } => Error::Infeasible { cluster: k, reason },
            other => other,
        };
        let wc = solve_w_center(&hc, tc, noise).map_err(tag)?;
        let (we, case) = solve_w_edge(&he, &hc, &wc, te, noise, theta_grid).map_err(tag)?;
        vectors[user_index(k, User::Center)] = &u * wc;
        vectors[user_index(k, User::Edge)] = &u * we;
        cases.push(case);
    }
    Ok((Beamformers::from_vectors(vectors)?, cases))
}

fn branch_tags(cases: &[EdgeBeamCase]) -> String {
    cases.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

/// Alternating zero-forcing design. Returns the iterate with the lowest
/// power; its beams are always computed at its own reflection vector.
pub fn run_zf(
    config: &SystemConfig,
    channels: &ChannelRealization,
    params: &ZfParams,
) -> Result<(BeamformingSolution, SolverTrace)> {
    let start = Instant::now();
    let norm = Normalized::new(config, channels)?;
    let problem = Problem::new(&norm.config, &norm.channels)?;
    let scale = norm.power_scale();
    let irs = problem.uses_irs();
    let mut trace = SolverTrace::new();

    let mut phi = CVector::from_element(config.elements, C64::new(1.0, 0.0));
    if let ReflectionCase::DiscretePhase { levels } = config.reflection {
        phi = quantize_phi(&phi, levels);
    }
    let mut best: Option<(f64, Beamformers, CVector)> = None;
    let mut prev: Option<f64> = None;
    let mut converged = false;
    for v in 1..=params.max_outer_iterations {
        let h_hat = problem.effective(&phi);
        let (beams, cases) = zf_beams(&problem, &h_hat, params.theta_grid)?;
        let power = beams.power() * scale;
        let min_slack = sinrs_from(&h_hat, &beams, problem.surrogates.noise)
            .iter()
            .zip(&config.targets)
            .map(|(s, t)| {
                let (rc, re) = s.rates();
                (rc - t.center).min(re - t.edge)
            })
            .fold(f64::INFINITY, f64::min);
        trace.rows.push(TraceRow {
            iteration: v,
            total_power_w: power,
            consensus_residual: 0.0,
            min_slack,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            branch: Some(branch_tags(&cases)),
        });
        if best.as_ref().map_or(true, |b| power < b.0) {
            best = Some((power, beams.clone(), phi.clone()));
        }
        if let Some(p) = prev {
            if (power - p).abs() / p.max(1.0) < params.epsilon {
                converged = true;
                break;
            }
        }
        prev = Some(power);
        if !irs {
            converged = true;
            break;
        }

        let obj = reflection_objective(&problem, &beams);
        let fp = fixed_point_phi(
            &obj.omega,
            &reflection::lift(&phi),
            params.fixed_point_max_iter,
            params.fixed_point_tol,
        );
        if let Some(s) = fp.shift {
            trace.events.push(format!("iteration {v}: fixed point restarted with diagonal shift {s:.3e}"));
        }
        phi = reflection::unlift(&fp.phi_tilde)?;
        if let ReflectionCase::DiscretePhase { levels } = config.reflection {
            phi = quantize_phi(&phi, levels);
        }
    }

    let (_, beams, phi) = best.ok_or_else(|| Error::Solver("no zero-forcing iterate".into()))?;
    let design = Design {
        beams: norm.restore(&beams),
        phi,
    };
    let report = audit(config, channels, &design, DEFAULT_AUDIT_TOL)?;
    trace.status = if !report.feasible {
        trace.events.push(format!("final audit failed (min rate slack {:.3e})", report.min_rate_slack()));
        RunStatus::NotConverged
    } else if converged {
        RunStatus::Converged
    } else {
        RunStatus::NotConverged
    };
    Ok((BeamformingSolution::evaluate(config, channels, design)?, trace))
}
