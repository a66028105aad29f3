//! Quadratic surrogates of the rate constraints and the closed-form
//! auxiliary update.
//!
//! Each SINR constraint `|a^H w_s|^2 / beta >= tau` is replaced by
//! `2 Re{u^* a^H w_s} - |u|^2 beta >= tau`, whose maximum over the scalar `u`
//! (attained at `u = a^H w_s / beta`) equals the SINR itself.

use crate::model::{user_index, Beamformers, SystemConfig, User};
use crate::{CMatrix, CVector, Error, Result, C64};

/// The three surrogate constraints of a cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Central user, own symbol after SIC (`j = 1`).
    Center,
    /// Edge user, own symbol (`j = 2`).
    Edge,
    /// Central user decoding the edge symbol (`j = 3`).
    CenterSic,
}

impl Constraint {
    pub const ALL: [Constraint; 3] = [Constraint::Center, Constraint::Edge, Constraint::CenterSic];

    /// 0-based `j - 1`.
    pub fn index(self) -> usize {
        match self {
            Constraint::Center => 0,
            Constraint::Edge => 1,
            Constraint::CenterSic => 2,
        }
    }

    /// User whose channel the signal arrives through.
    pub fn observer(self) -> User {
        match self {
            Constraint::Edge => User::Edge,
            Constraint::Center | Constraint::CenterSic => User::Center,
        }
    }

    /// Beamformer carrying the decoded symbol.
    pub fn signal(self) -> User {
        match self {
            Constraint::Center => User::Center,
            Constraint::Edge | Constraint::CenterSic => User::Edge,
        }
    }

    /// Whether the cluster's own central beam counts as interference.
    pub fn intra_interference(self) -> bool {
        !matches!(self, Constraint::Center)
    }

    /// Stacked indices of every interfering beam for cluster `k`.
    pub fn interferers(self, k: usize, clusters: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * clusters);
        for j in 0..clusters {
            if j == k {
                if self.intra_interference() {
                    out.push(user_index(k, User::Center));
                }
            } else {
                out.push(user_index(j, User::Center));
                out.push(user_index(j, User::Edge));
            }
        }
        out
    }

    pub fn threshold(self, tau: (f64, f64)) -> f64 {
        match self {
            Constraint::Center => tau.0,
            _ => tau.1,
        }
    }
}

/// Auxiliary scalars `u_{k,j}`, one triple per cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct Aux {
    pub values: Vec<[C64; 3]>,
}

impl Aux {
    pub fn zeros(clusters: usize) -> Self {
        Aux {
            values: vec![[C64::new(0.0, 0.0); 3]; clusters],
        }
    }

    pub fn get(&self, k: usize, c: Constraint) -> C64 {
        self.values[k][c.index()]
    }

    /// `[u_{1,1}, ..., u_{K,1}, u_{1,2}, ..., u_{K,2}, u_{1,3}, ..., u_{K,3}]`.
    pub fn stacked(&self) -> Vec<C64> {
        Constraint::ALL
            .iter()
            .flat_map(|&c| self.values.iter().map(move |v| v[c.index()]))
            .collect()
    }
}

/// Rate constraints rewritten as surrogates; caches the SINR thresholds
/// `tau = 2^r - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateConstraints {
    /// `(tau_c, tau_e)` per cluster.
    pub tau: Vec<(f64, f64)>,
    pub noise: f64,
}

impl SurrogateConstraints {
    pub fn tau(&self, k: usize, c: Constraint) -> f64 {
        c.threshold(self.tau[k])
    }

    /// Interference-plus-noise `beta_{k,j}` seen through `h_hat`.
    pub fn beta(&self, h_hat: &[CVector], beams: &Beamformers, k: usize, c: Constraint) -> f64 {
        let a = &h_hat[user_index(k, c.observer())];
        self.noise
            + c.interferers(k, beams.clusters())
                .into_iter()
                .map(|b| a.dotc(&beams.as_slice()[b]).norm_sqr())
                .sum::<f64>()
    }

    /// `2 Re{u^* a^H w_s} - |u|^2 beta`, the left side of the surrogate.
    pub fn evaluate_lhs(&self, h_hat: &[CVector], beams: &Beamformers, u: C64, k: usize, c: Constraint) -> f64 {
        let a = &h_hat[user_index(k, c.observer())];
        let s = a.dotc(beams.get(k, c.signal()));
        2.0 * (u.conj() * s).re - u.norm_sqr() * self.beta(h_hat, beams, k, c)
    }

    /// Smallest `lhs - tau` over every surrogate.
    pub fn min_margin(&self, h_hat: &[CVector], beams: &Beamformers, aux: &Aux) -> f64 {
        (0..self.tau.len())
            .flat_map(|k| Constraint::ALL.map(|c| (k, c)))
            .map(|(k, c)| self.evaluate_lhs(h_hat, beams, aux.get(k, c), k, c) - self.tau(k, c))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Thresholds for `config`.
pub fn transform_rate_constraints(config: &SystemConfig) -> SurrogateConstraints {
    SurrogateConstraints {
        tau: config.targets.iter().map(|t| t.sinr_thresholds()).collect(),
        noise: config.noise_power,
    }
}

/// Closed-form maximizers `u_{k,j} = a^H w_s / beta_{k,j}`.
pub fn update_u(surrogates: &SurrogateConstraints, h_hat: &[CVector], beams: &Beamformers) -> Aux {
    let values = (0..beams.clusters())
        .map(|k| {
            Constraint::ALL.map(|c| {
                let a = &h_hat[user_index(k, c.observer())];
                a.dotc(beams.get(k, c.signal())) / surrogates.beta(h_hat, beams, k, c)
            })
        })
        .collect();
    Aux { values }
}

/// `tr(Y^H A + A^H Y - Y^H B Y)`, the matrix form of the surrogate.
pub fn surrogate_trace(a: &CMatrix, b: &CMatrix, y: &CMatrix) -> f64 {
    let t = y.adjoint() * a;
    (t.trace() + t.trace().conj() - (y.adjoint() * b * y).trace()).re
}

/// Maximizer `Y = B^{-1} A` of [`surrogate_trace`] for Hermitian `B > 0`.
/// The maximum equals `tr(A^H B^{-1} A)`; the scalar case is [`update_u`].
pub fn surrogate_maximizer(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if b.nrows() != b.ncols() || b.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "B is {}x{}, A has {} rows",
            b.nrows(),
            b.ncols(),
            a.nrows()
        )));
    }
    let not_pd = || Error::Domain("B must be Hermitian positive definite".into());
    let chol = b.clone().cholesky().ok_or_else(not_pd)?;
    // complex Cholesky happily takes square roots of negative pivots
    if chol.l_dirty().diagonal().iter().any(|d| !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re) {
        return Err(not_pd());
    }
    Ok(chol.solve(a))
}
