//! System model: effective channels, NOMA SINRs, rates, transmit power and
//! feasibility audits.
//!
//! Stacking convention for beamformers is `[w_{1,c}, w_{1,e}, ..., w_{K,c},
//! w_{K,e}]`; the same order is used for per-user channel vectors.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ChannelRealization};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Default feasibility tolerance (rate in bits/s/Hz, modulus for elements).
pub const DEFAULT_AUDIT_TOL: f64 = 1e-4;

/// Which user of a cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum User {
    Center,
    Edge,
}

impl User {
    pub const BOTH: [User; 2] = [User::Center, User::Edge];

    /// Position inside a cluster in the stacked ordering.
    pub fn offset(self) -> usize {
        match self {
            User::Center => 0,
            User::Edge => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            User::Center => "c",
            User::Edge => "e",
        }
    }
}

/// Index of user `(k, i)` in the stacked `2K` ordering.
pub fn user_index(k: usize, user: User) -> usize {
    2 * k + user.offset()
}

/// Feasible set of the reflection vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReflectionCase {
    /// `|phi_m| <= 1`.
    BoxModulus,
    /// `|phi_m| = 1`, continuous phase.
    UnitModulus,
    /// `|phi_m| = 1`, phase in `{0, 2pi/L, ..., 2pi(L-1)/L}`.
    DiscretePhase { levels: u32 },
}

impl ReflectionCase {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ReflectionCase::DiscretePhase { levels } if levels < 2 => Err(Error::Config(
                format!("discrete phase needs at least 2 levels, got {levels}"),
            )),
            _ => Ok(()),
        }
    }

    /// Membership slack of one coefficient; negative means outside the set.
    pub fn element_slack(&self, z: C64) -> f64 {
        match *self {
            ReflectionCase::BoxModulus => 1.0 - z.norm(),
            ReflectionCase::UnitModulus => -(z.norm() - 1.0).abs(),
            ReflectionCase::DiscretePhase { levels } => {
                let step = 2.0 * PI / levels as f64;
                -(0..levels)
                    .map(|l| (z - C64::from_polar(1.0, step * l as f64)).norm())
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn contains(&self, phi: &CVector, tol: f64) -> bool {
        phi.iter().all(|&z| self.element_slack(z) >= -tol)
    }
}

impl fmt::Display for ReflectionCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReflectionCase::BoxModulus => write!(f, "case1"),
            ReflectionCase::UnitModulus => write!(f, "case2"),
            ReflectionCase::DiscretePhase { levels } => write!(f, "case3-L{levels}"),
        }
    }
}

impl FromStr for ReflectionCase {
    type Err = Error;

    /// Accepts `1`, `2`, `3:L` and the display forms `case1`, `case2`,
    /// `case3-L<L>`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let t = t.strip_prefix("case").unwrap_or(&t);
        let parsed = match t {
            "1" | "i" => ReflectionCase::BoxModulus,
            "2" | "ii" => ReflectionCase::UnitModulus,
            _ => {
                let rest = t
                    .strip_prefix('3')
                    .or_else(|| t.strip_prefix("iii"))
                    .ok_or_else(|| Error::Parse(format!("unknown reflection case `{s}`")))?;
                let digits = rest.trim_start_matches([':', '-', 'l', 'L', '=']);
                let levels = digits
                    .parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad level count in `{s}`")))?;
                ReflectionCase::DiscretePhase { levels }
            }
        };
        parsed.validate()?;
        Ok(parsed)
    }
}

/// Per-cluster rate targets in bits/s/Hz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateTarget {
    pub center: f64,
    pub edge: f64,
}

impl RateTarget {
    /// SINR thresholds `2^r - 1` for (center, edge).
    pub fn sinr_thresholds(&self) -> (f64, f64) {
        (self.center.exp2() - 1.0, self.edge.exp2() - 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// BS antennas `N`.
    pub antennas: usize,
    /// IRS elements `M`.
    pub elements: usize,
    /// Clusters `K`, each a (center, edge) user pair.
    pub clusters: usize,
    /// Noise power in watts.
    pub noise_power: f64,
    /// One entry per cluster.
    pub targets: Vec<RateTarget>,
    pub reflection: ReflectionCase,
    /// `false` models the "without IRS" baseline: the reflected path is dropped.
    pub irs_enabled: bool,
    pub channel: ChannelParams,
}

impl SystemConfig {
    /// The simulation setup used throughout the evaluation: K = 3, N = 8,
    /// M = 30, noise -80 dBm, 4 bits/s/Hz for every user, unit-modulus
    /// reflection.
    pub fn standard() -> Self {
        let clusters = 3;
        SystemConfig {
            antennas: 8,
            elements: 30,
            clusters,
            noise_power: dbm_to_watts(-80.0),
            targets: vec![
                RateTarget {
                    center: 4.0,
                    edge: 4.0
                };
                clusters
            ],
            reflection: ReflectionCase::UnitModulus,
            irs_enabled: true,
            channel: ChannelParams::standard(),
        }
    }

    /// Sets the same targets for every cluster.
    pub fn with_uniform_targets(mut self, center: f64, edge: f64) -> Self {
        self.targets = vec![RateTarget { center, edge }; self.clusters];
        self
    }

    pub fn users(&self) -> usize {
        2 * self.clusters
    }

    pub fn validate(&self) -> Result<()> {
        // M = 0 only makes sense for the direct-link baseline.
        if self.antennas == 0 || self.clusters == 0 || (self.elements == 0 && self.irs_enabled) {
            return Err(Error::Config(format!(
                "dimensions must be positive (N={}, M={}, K={})",
                self.antennas, self.elements, self.clusters
            )));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::Config(format!(
                "noise power must be positive, got {}",
                self.noise_power
            )));
        }
        if self.targets.len() != self.clusters {
            return Err(Error::Config(format!(
                "expected {} rate targets, got {}",
                self.clusters,
                self.targets.len()
            )));
        }
        if self
            .targets
            .iter()
            .any(|t| !(t.center >= 0.0 && t.edge >= 0.0 && t.center.is_finite() && t.edge.is_finite()))
        {
            return Err(Error::Config("rate targets must be finite and >= 0".into()));
        }
        self.reflection.validate()?;
        self.channel.validate()
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Transmit beamformers, one `N`-vector per user in stacked order.
#[derive(Clone, Debug, PartialEq)]
pub struct Beamformers {
    vectors: Vec<CVector>,
}

impl Beamformers {
    pub fn zeros(antennas: usize, clusters: usize) -> Self {
        Beamformers {
            vectors: vec![CVector::zeros(antennas); 2 * clusters],
        }
    }

    pub fn from_vectors(vectors: Vec<CVector>) -> Result<Self> {
        if vectors.is_empty() || vectors.len() % 2 != 0 {
            return Err(Error::Dimension(format!(
                "need an even, nonzero number of beamformers, got {}",
                vectors.len()
            )));
        }
        let n = vectors[0].len();
        if vectors.iter().any(|v| v.len() != n) {
            return Err(Error::Dimension("beamformers differ in length".into()));
        }
        Ok(Beamformers { vectors })
    }

    /// Splits a stacked `2KN` vector.
    pub fn from_stacked(stacked: &CVector, antennas: usize) -> Result<Self> {
        if antennas == 0 || stacked.len() % (2 * antennas) != 0 {
            return Err(Error::Dimension(format!(
                "stacked length {} is not a multiple of 2N = {}",
                stacked.len(),
                2 * antennas
            )));
        }
        let vectors = (0..stacked.len() / antennas)
            .map(|b| stacked.rows(b * antennas, antennas).into_owned())
            .collect();
        Ok(Beamformers { vectors })
    }

    pub fn stacked(&self) -> CVector {
        let n = self.antennas();
        let mut out = CVector::zeros(n * self.vectors.len());
        for (b, v) in self.vectors.iter().enumerate() {
            out.rows_mut(b * n, n).copy_from(v);
        }
        out
    }

    pub fn antennas(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn clusters(&self) -> usize {
        self.vectors.len() / 2
    }

    pub fn get(&self, k: usize, user: User) -> &CVector {
        &self.vectors[user_index(k, user)]
    }

    pub fn get_mut(&mut self, k: usize, user: User) -> &mut CVector {
        &mut self.vectors[user_index(k, user)]
    }

    pub fn as_slice(&self) -> &[CVector] {
        &self.vectors
    }

    /// `sum_k ||w_{k,c}||^2 + ||w_{k,e}||^2`.
    pub fn power(&self) -> f64 {
        self.vectors.iter().map(|v| v.norm_squared()).sum()
    }

    pub fn scale(&mut self, t: f64) {
        for v in &mut self.vectors {
            *v *= C64::from(t);
        }
    }
}

/// Cascaded BS-IRS-user matrix `diag(g^H) H` (M x N); with it
/// `h_hat^H = phi^T B + h^H`.
pub fn cascaded(bs_irs: &CMatrix, g: &CVector) -> CMatrix {
    let mut b = bs_irs.clone();
    for (m, mut row) in b.row_iter_mut().enumerate() {
        row *= g[m].conj();
    }
    b
}

/// Effective channel `h_hat` with `h_hat^H = g^H diag(phi) H + h^H`.
///
/// Returned as the column vector `h_hat` (not its conjugate transpose), so
/// the received amplitude for beamformer `w` is `h_hat.dotc(w)`.
pub fn effective_channel(phi: &CVector, bs_irs: &CMatrix, g: &CVector, h: &CVector) -> Result<CVector> {
    let (m, n) = bs_irs.shape();
    if phi.len() != m || g.len() != m || h.len() != n {
        return Err(Error::Dimension(format!(
            "H is {m}x{n}, phi has {}, g has {}, h has {}",
            phi.len(),
            g.len(),
            h.len()
        )));
    }
    let weighted = g.zip_map(phi, |gm, pm| gm * pm.conj());
    Ok(bs_irs.ad_mul(&weighted) + h)
}

/// Effective channels of all `2K` users in stacked order. With the IRS
/// disabled these are the direct channels regardless of `phi`.
pub fn effective_channels(config: &SystemConfig, channels: &ChannelRealization, phi: &CVector) -> Result<Vec<CVector>> {
    channels.check_dims(config)?;
    (0..config.clusters)
        .flat_map(|k| User::BOTH.map(|u| (k, u)))
        .map(|(k, u)| {
            if config.irs_enabled {
                effective_channel(phi, &channels.bs_irs, channels.irs_user(k, u), channels.bs_user(k, u))
            } else {
                Ok(channels.bs_user(k, u).clone())
            }
        })
        .collect()
}

/// `|h^H w|^2`.
#[inline]
pub fn gain(h: &CVector, w: &CVector) -> f64 {
    h.dotc(w).norm_sqr()
}

/// Inter-cluster interference seen through `h_hat`, excluding cluster `k`.
pub fn zeta_from(h_hat: &CVector, beams: &Beamformers, k: usize) -> f64 {
    (0..beams.clusters())
        .filter(|&j| j != k)
        .map(|j| gain(h_hat, beams.get(j, User::Center)) + gain(h_hat, beams.get(j, User::Edge)))
        .sum()
}

/// Candidate design: beamformers plus reflection vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub beams: Beamformers,
    pub phi: CVector,
}

/// The three SINRs of one cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterSinr {
    /// Central user decoding its own symbol after SIC.
    pub center: f64,
    /// Edge user decoding its own symbol.
    pub edge: f64,
    /// Central user decoding the edge symbol (SIC stage).
    pub center_decoding_edge: f64,
}

impl ClusterSinr {
    /// Achievable edge-user SINR under SIC.
    pub fn edge_effective(&self) -> f64 {
        self.edge.min(self.center_decoding_edge)
    }

    /// `(center rate, edge rate)` in bits/s/Hz.
    pub fn rates(&self) -> (f64, f64) {
        ((1.0 + self.center).log2(), (1.0 + self.edge_effective()).log2())
    }
}

/// Interference term `zeta_{k,i}`.
pub fn interference_zeta(
    config: &SystemConfig,
    channels: &ChannelRealization,
    design: &Design,
    k: usize,
    user: User,
) -> Result<f64> {
    let hh = effective_channels(config, channels, &design.phi)?;
    Ok(zeta_from(&hh[user_index(k, user)], &design.beams, k))
}

/// SINRs of every cluster from precomputed effective channels.
pub fn sinrs_from(h_hat: &[CVector], beams: &Beamformers, noise: f64) -> Vec<ClusterSinr> {
    (0..beams.clusters())
        .map(|k| {
            let hc = &h_hat[user_index(k, User::Center)];
            let he = &h_hat[user_index(k, User::Edge)];
            let wc = beams.get(k, User::Center);
            let we = beams.get(k, User::Edge);
            let zeta_c = zeta_from(hc, beams, k);
            let zeta_e = zeta_from(he, beams, k);
            ClusterSinr {
                center: gain(hc, wc) / (noise + zeta_c),
                edge: gain(he, we) / (noise + gain(he, wc) + zeta_e),
                center_decoding_edge: gain(hc, we) / (noise + gain(hc, wc) + zeta_c),
            }
        })
        .collect()
}

pub fn sinrs(config: &SystemConfig, channels: &ChannelRealization, design: &Design) -> Result<Vec<ClusterSinr>> {
    let hh = effective_channels(config, channels, &design.phi)?;
    Ok(sinrs_from(&hh, &design.beams, config.noise_power))
}

/// SINR of the edge user of cluster `k` decoding its own symbol.
pub fn sinr_edge(config: &SystemConfig, channels: &ChannelRealization, design: &Design, k: usize) -> Result<f64> {
    Ok(sinrs(config, channels, design)?[k].edge)
}

/// SINR of the central user of cluster `k` decoding the edge symbol.
pub fn sinr_center_decoding_edge(
    config: &SystemConfig,
    channels: &ChannelRealization,
    design: &Design,
    k: usize,
) -> Result<f64> {
    Ok(sinrs(config, channels, design)?[k].center_decoding_edge)
}

/// SINR of the central user of cluster `k` after perfect SIC.
pub fn sinr_center(config: &SystemConfig, channels: &ChannelRealization, design: &Design, k: usize) -> Result<f64> {
    Ok(sinrs(config, channels, design)?[k].center)
}

/// Per-constraint slacks of a design.
#[derive(Clone, Debug, PartialEq)]
pub struct FeasibilityReport {
    /// `log2(1 + gamma_c) - r_c` per cluster.
    pub center_rate_slack: Vec<f64>,
    /// `log2(1 + min(gamma_e, gamma_ce)) - r_e` per cluster.
    pub edge_rate_slack: Vec<f64>,
    /// Reflection-set membership slack per element; empty without IRS.
    pub element_slack: Vec<f64>,
    pub tol: f64,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn min_rate_slack(&self) -> f64 {
        self.center_rate_slack
            .iter()
            .chain(&self.edge_rate_slack)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_element_slack(&self) -> f64 {
        self.element_slack.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Rows `(constraint, cluster, element, slack)`, where `cluster` and
    /// `element` are 1-based and empty when not applicable.
    pub fn rows(&self) -> Vec<(String, Option<usize>, Option<usize>, f64)> {
        let mut rows = Vec::new();
        for (k, s) in self.center_rate_slack.iter().enumerate() {
            rows.push(("rate_center".to_string(), Some(k + 1), None, *s));
        }
        for (k, s) in self.edge_rate_slack.iter().enumerate() {
            rows.push(("rate_edge".to_string(), Some(k + 1), None, *s));
        }
        for (m, s) in self.element_slack.iter().enumerate() {
            rows.push(("reflection".to_string(), None, Some(m + 1), *s));
        }
        rows
    }
}

/// Checks the rate constraints and reflection-set membership of `design`.
pub fn audit(config: &SystemConfig, channels: &ChannelRealization, design: &Design, tol: f64) -> Result<FeasibilityReport> {
    let s = sinrs(config, channels, design)?;
    let mut center = Vec::with_capacity(config.clusters);
    let mut edge = Vec::with_capacity(config.clusters);
    for (sinr, target) in s.iter().zip(&config.targets) {
        let (rc, re) = sinr.rates();
        center.push(rc - target.center);
        edge.push(re - target.edge);
    }
    let element_slack: Vec<f64> = if config.irs_enabled {
        design.phi.iter().map(|&z| config.reflection.element_slack(z)).collect()
    } else {
        Vec::new()
    };
    let feasible = center
        .iter()
        .chain(&edge)
        .chain(&element_slack)
        .all(|&v| v >= -tol);
    Ok(FeasibilityReport {
        center_rate_slack: center,
        edge_rate_slack: edge,
        element_slack,
        tol,
        feasible,
    })
}

/// Final output of a solver.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamformingSolution {
    pub design: Design,
    /// Total transmit power in watts.
    pub total_power: f64,
    /// `(center, edge)` achieved rates per cluster, the edge rate taking the
    /// SIC minimum.
    pub rates: Vec<(f64, f64)>,
}

impl BeamformingSolution {
    pub fn evaluate(config: &SystemConfig, channels: &ChannelRealization, design: Design) -> Result<Self> {
        let rates = sinrs(config, channels, &design)?.iter().map(ClusterSinr::rates).collect();
        Ok(BeamformingSolution {
            total_power: design.beams.power(),
            design,
            rates,
        })
    }
}

/// A copy of a problem rescaled to unit noise power and unit-scale
/// channels.
///
/// The user-side vectors `g` and `h` are multiplied by `c` (so every
/// effective channel scales by `c`) and the noise power is set to 1. SINRs
/// are unchanged when beamformers map as `w = amplitude * w'` with
/// `amplitude = c * sigma`.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub config: SystemConfig,
    pub channels: ChannelRealization,
    pub amplitude: f64,
}

impl Normalized {
    /// Chooses `c` as the reciprocal RMS entry of the effective channels at
    /// `phi = 1` (or of the direct channels without an IRS).
    pub fn new(config: &SystemConfig, channels: &ChannelRealization) -> Result<Self> {
        config.validate()?;
        channels.check_dims(config)?;
        let ones = CVector::from_element(config.elements, C64::new(1.0, 0.0));
        let hh = effective_channels(config, channels, &ones)?;
        let count: usize = hh.iter().map(|h| h.len()).sum();
        let ms = hh.iter().map(|h| h.norm_squared()).sum::<f64>() / count.max(1) as f64;
        let c = if ms > 0.0 && ms.is_finite() { 1.0 / ms.sqrt() } else { 1.0 };
        let scale = |v: &CVector| v.map(|z| z * c);
        let mut cfg = config.clone();
        cfg.noise_power = 1.0;
        Ok(Normalized {
            config: cfg,
            channels: ChannelRealization {
                bs_irs: channels.bs_irs.clone(),
                irs_user: channels.irs_user.iter().map(scale).collect(),
                bs_user: channels.bs_user.iter().map(scale).collect(),
            },
            amplitude: c * config.noise_power.sqrt(),
        })
    }

    /// Beamformers in physical units.
    pub fn restore(&self, beams: &Beamformers) -> Beamformers {
        let mut out = beams.clone();
        out.scale(self.amplitude);
        out
    }

    /// Watts per unit of normalized power.
    pub fn power_scale(&self) -> f64 {
        self.amplitude * self.amplitude
    }
}
