//! Consensus ADMM for the joint beamforming and reflection design.
//!
//! The reflection vector is split into a copy `phi` that satisfies the rate
//! surrogates and a copy `varphi` inside the reflection set, tied together by
//! the scaled dual `lambda`. One outer iteration updates, in order,
//! `phi` (proximal SOCP), `w` (minimum-power SOCP), `u` (closed form),
//! `varphi` (projection) and `lambda`.
//!
//! Everything runs on a [`Normalized`] copy of the instance; powers in the
//! trace and the returned solution are in watts.

pub mod coeffs;
pub mod projection;
pub mod subproblems;
pub mod surrogate;

use std::time::Instant;

pub use coeffs::{build_phi_coeffs, build_w_coeffs, ConstraintCoeffs, PhiCoeff, WCoeff};
pub use projection::{project_element, project_reflection, update_lambda};
pub use subproblems::{update_phi, update_w, update_w_soft};
pub use surrogate::{
    surrogate_maximizer, surrogate_trace, transform_rate_constraints, update_u, Aux, Constraint, SurrogateConstraints,
};

use crate::channel::ChannelRealization;
use crate::conic::SolveOptions;
use crate::model::{
    audit, cascaded, sinrs_from, user_index, Beamformers, BeamformingSolution, Design, Normalized, SystemConfig,
    DEFAULT_AUDIT_TOL,
};
use crate::trace::{RunStatus, SolverTrace, TraceRow};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Instance data shared by the update steps.
pub struct Problem<'a> {
    pub config: &'a SystemConfig,
    pub channels: &'a ChannelRealization,
    /// `diag(conj g) H` per user, stacked order.
    pub cascaded: Vec<CMatrix>,
    pub surrogates: SurrogateConstraints,
}

impl<'a> Problem<'a> {
    pub fn new(config: &'a SystemConfig, channels: &'a ChannelRealization) -> Result<Self> {
        config.validate()?;
        channels.check_dims(config)?;
        let cascaded = channels.irs_user.iter().map(|g| cascaded(&channels.bs_irs, g)).collect();
        Ok(Problem {
            config,
            channels,
            cascaded,
            surrogates: transform_rate_constraints(config),
        })
    }

    /// Whether the reflection vector enters the channels at all.
    pub fn uses_irs(&self) -> bool {
        self.config.irs_enabled && self.config.elements > 0
    }

    /// Effective channels at `phi`, stacked order.
    pub fn effective(&self, phi: &CVector) -> Vec<CVector> {
        if !self.uses_irs() {
            return self.channels.bs_user.clone();
        }
        let y = phi.map(|z| z.conj());
        self.cascaded
            .iter()
            .zip(&self.channels.bs_user)
            .map(|(b, h)| b.ad_mul(&y) + h)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InitStrategy {
    /// `phi = 1`; beams matched to the effective channels and scaled to the
    /// single-user SNR targets, followed by one beamformer SOCP.
    #[default]
    MatchedFilter,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmmParams {
    /// Penalty `xi`. With indicator-only splitting it only matters when
    /// residual balancing rescales the dual.
    pub xi: f64,
    pub epsilon: f64,
    pub max_outer_iterations: usize,
    pub init: InitStrategy,
    /// Rescale `xi` (and the scaled dual) when primal and dual residuals
    /// differ by more than 10x.
    pub residual_balancing: bool,
    /// Penalty per unit of constraint violation in the softened `w` step.
    pub soft_penalty: f64,
    /// Relative power change ending the final `(w, u)` refinement at the
    /// projected reflection vector.
    pub polish_tol: f64,
    pub polish_max_iterations: usize,
    pub solver: SolveOptions,
}

impl Default for AdmmParams {
    fn default() -> Self {
        AdmmParams {
            xi: 1.0,
            epsilon: 1e-3,
            max_outer_iterations: 100,
            init: InitStrategy::MatchedFilter,
            residual_balancing: false,
            soft_penalty: 1e3,
            polish_tol: 1e-6,
            polish_max_iterations: 30,
            solver: SolveOptions::default(),
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::Config(format!(
                "xi and epsilon must be positive (xi={}, epsilon={})",
                self.xi, self.epsilon
            )));
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::Config("max_outer_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState {
    pub phi: CVector,
    pub beams: Beamformers,
    pub aux: Aux,
    pub varphi: CVector,
    pub lambda: CVector,
    pub iteration: usize,
}

/// Beams along each effective channel with `|h_hat^H w|^2 = tau * noise`.
pub fn matched_filter(h_hat: &[CVector], surrogates: &SurrogateConstraints) -> Result<Beamformers> {
    let vectors = h_hat
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let (tc, te) = surrogates.tau[i / 2];
            let tau = if i % 2 == 0 { tc } else { te };
            let g = h.norm_squared();
            if g == 0.0 || tau == 0.0 {
                CVector::zeros(h.len())
            } else {
                h * C64::new((tau * surrogates.noise).sqrt() / g, 0.0)
            }
        })
        .collect();
    Beamformers::from_vectors(vectors)
}

/// Smallest factor `t >= 1` with every SINR of `t * beams` at its target, or
/// `None` when some constraint is interference limited below its target.
pub fn feasibility_scale(h_hat: &[CVector], beams: &Beamformers, surrogates: &SurrogateConstraints) -> Option<f64> {
    let mut t2: f64 = 1.0;
    for k in 0..beams.clusters() {
        for c in Constraint::ALL {
            let tau = surrogates.tau(k, c);
            if tau == 0.0 {
                continue;
            }
            let a = &h_hat[user_index(k, c.observer())];
            let s = a.dotc(beams.get(k, c.signal())).norm_sqr();
            let i = surrogates.beta(h_hat, beams, k, c) - surrogates.noise;
            let margin = s - tau * i;
            if margin <= 0.0 {
                return None;
            }
            t2 = t2.max(tau * surrogates.noise / margin);
        }
    }
    Some(t2.sqrt() * (1.0 + 1e-9))
}

/// Smallest rate slack over all users, in bits/s/Hz.
fn min_rate_slack(problem: &Problem<'_>, h_hat: &[CVector], beams: &Beamformers) -> f64 {
    sinrs_from(h_hat, beams, problem.surrogates.noise)
        .iter()
        .zip(&problem.config.targets)
        .map(|(s, t)| {
            let (rc, re) = s.rates();
            (rc - t.center).min(re - t.edge)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Beamformer step with the softened fallback. Returns the beams and whether
/// the hard step failed.
fn w_step(
    problem: &Problem<'_>,
    h_hat: &[CVector],
    aux: &Aux,
    params: &AdmmParams,
    iteration: usize,
    trace: &mut SolverTrace,
) -> Result<(Beamformers, bool)> {
    let wc = build_w_coeffs(problem, h_hat, aux)?;
    let n = problem.config.antennas;
    match update_w(&wc, n, &params.solver, iteration) {
        Ok(b) => Ok((b, false)),
        Err(e @ (Error::SubproblemInfeasible { .. } | Error::Solver(_))) => {
            let (b, s) = update_w_soft(&wc, n, params.soft_penalty, &params.solver, iteration)?;
            let worst = s.iter().copied().fold(0.0, f64::max);
            trace.events.push(format!("iteration {iteration}: {e}; softened w step (max slack {worst:.3e})"));
            Ok((b, true))
        }
        Err(e) => Err(e),
    }
}

/// Repeats `(u, w)` at a fixed reflection vector until the power settles.
/// The beams are first scaled onto the feasible side so the surrogate step
/// starts from a point it can keep.
fn polish(
    problem: &Problem<'_>,
    h_hat: &[CVector],
    mut beams: Beamformers,
    params: &AdmmParams,
    iteration: usize,
    trace: &mut SolverTrace,
) -> Result<Beamformers> {
    match feasibility_scale(h_hat, &beams, &problem.surrogates) {
        Some(t) if t > 1.0 => beams.scale(t),
        Some(_) => {}
        None => trace.events.push("polish: beams are interference limited at the projected reflection vector".into()),
    }
    let mut last = beams.power();
    for _ in 0..params.polish_max_iterations {
        let aux = update_u(&problem.surrogates, h_hat, &beams);
        let (next, soft) = w_step(problem, h_hat, &aux, params, iteration, trace)?;
        beams = next;
        let p = beams.power();
        let change = (p - last).abs() / last.max(f64::MIN_POSITIVE);
        last = p;
        if !soft && change < params.polish_tol {
            break;
        }
    }
    Ok(beams)
}

/// Consensus ADMM design. The returned reflection vector is the projected
/// copy `varphi`, and the beams are refined for it.
pub fn run(
    config: &SystemConfig,
    channels: &ChannelRealization,
    params: &AdmmParams,
) -> Result<(BeamformingSolution, SolverTrace)> {
    params.validate()?;
    let start = Instant::now();
    let norm = Normalized::new(config, channels)?;
    let problem = Problem::new(&norm.config, &norm.channels)?;
    let scale = norm.power_scale();
    let m = config.elements;
    let irs = problem.uses_irs();
    let mut trace = SolverTrace::new();
    let mut xi = params.xi;

    let phi0 = CVector::from_element(m, C64::new(1.0, 0.0));
    let mut state = AdmmState {
        phi: phi0.clone(),
        beams: Beamformers::zeros(config.antennas, config.clusters),
        aux: Aux::zeros(config.clusters),
        varphi: phi0,
        lambda: CVector::zeros(m),
        iteration: 0,
    };
    let mut h_hat = problem.effective(&state.phi);
    let InitStrategy::MatchedFilter = params.init;
    let mf = matched_filter(&h_hat, &problem.surrogates)?;
    let aux0 = update_u(&problem.surrogates, &h_hat, &mf);
    let (beams, _) = w_step(&problem, &h_hat, &aux0, params, 0, &mut trace)?;
    state.beams = beams;
    state.aux = update_u(&problem.surrogates, &h_hat, &state.beams);
    let mut prev_power = state.beams.power() * scale;

    let mut consecutive = 0;
    let mut converged = false;
    for v in 1..=params.max_outer_iterations {
        state.iteration = v;
        let mut failed = false;

        if irs {
            let pc = build_phi_coeffs(&problem, &state.beams, &state.aux)?;
            match update_phi(&pc, &(&state.varphi - &state.lambda), &params.solver, v) {
                Ok(phi) => state.phi = phi,
                Err(e @ (Error::SubproblemInfeasible { .. } | Error::Solver(_))) => {
                    trace.events.push(format!("iteration {v}: {e}; keeping previous phi"));
                    failed = true;
                }
                Err(e) => return Err(e),
            }
            h_hat = problem.effective(&state.phi);
        }

        let (beams, soft) = w_step(&problem, &h_hat, &state.aux, params, v, &mut trace)?;
        state.beams = beams;
        failed |= soft;
        state.aux = update_u(&problem.surrogates, &h_hat, &state.beams);

        let mut residual = 0.0;
        if irs {
            let prev = state.varphi.clone();
            state.varphi = project_reflection(&(&state.phi + &state.lambda), config.reflection);
            state.lambda = update_lambda(&state.lambda, &state.phi, &state.varphi);
            residual = (&state.phi - &state.varphi).norm();
            if params.residual_balancing {
                let dual = xi * (&state.varphi - &prev).norm();
                if residual > 10.0 * dual {
                    xi *= 2.0;
                    state.lambda /= C64::new(2.0, 0.0);
                } else if dual > 10.0 * residual {
                    xi /= 2.0;
                    state.lambda *= C64::new(2.0, 0.0);
                }
            }
        }

        let power = state.beams.power() * scale;
        let change = (power - prev_power).abs() / prev_power.max(1.0);
        prev_power = power;
        trace.rows.push(TraceRow {
            iteration: v,
            total_power_w: power,
            consensus_residual: residual,
            min_slack: min_rate_slack(&problem, &h_hat, &state.beams),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
            branch: None,
        });

        consecutive = if failed { consecutive + 1 } else { 0 };
        if consecutive >= 2 {
            trace.events.push(format!("iteration {v}: second consecutive subproblem failure"));
            trace.status = RunStatus::Failed;
            let design = Design {
                beams: norm.restore(&state.beams),
                phi: state.varphi.clone(),
            };
            return Ok((BeamformingSolution::evaluate(config, channels, design)?, trace));
        }
        if !failed && residual.max(change) < params.epsilon {
            converged = true;
            break;
        }
    }

    let final_phi = if irs { state.varphi.clone() } else { state.phi.clone() };
    let h_final = problem.effective(&final_phi);
    let beams = polish(&problem, &h_final, state.beams.clone(), params, state.iteration, &mut trace)?;
    let design = Design {
        beams: norm.restore(&beams),
        phi: final_phi,
    };
    let report = audit(config, channels, &design, DEFAULT_AUDIT_TOL)?;
    trace.status = if converged && report.feasible {
        RunStatus::Converged
    } else {
        if !report.feasible {
            trace.events.push(format!("final audit failed (min rate slack {:.3e})", report.min_rate_slack()));
        }
        RunStatus::NotConverged
    };
    Ok((BeamformingSolution::evaluate(config, channels, design)?, trace))
}
