//! Seeded channel generation: distance-based path loss times circularly
//! symmetric complex Gaussian fading, with correlated user pairs inside a
//! cluster.
//!
//! Every channel is `C0 * d^-alpha * (unit-variance fading)`. The prefactor
//! multiplies the *amplitude*, so the average received power of an entry is
//! `(C0 * d^-alpha)^2`.
//!
//! # Random streams
//!
//! All draws come from ChaCha20 seeded with the realization seed; each link
//! reads from its own stream so that changing `K`, `M` or `N` does not
//! perturb unrelated draws:
//!
//! | draw                            | stream id                      |
//! |---------------------------------|--------------------------------|
//! | `H` (row by row, `M x N`)       | `0`                            |
//! | `g_{k,c}` / edge innovation     | `1 << 32 | k << 8 | {0, 1}`   |
//! | `h_{k,c}` / edge innovation     | `2 << 32 | k << 8 | {0, 1}`   |
//!
//! Entries are drawn sequentially, so for a fixed seed a realization with
//! `M` elements is a prefix (in the element index) of one with more
//! elements. The edge-user channel is `rho * center + sqrt(1 - rho^2) * e`
//! with `e` drawn from the innovation stream.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::model::{user_index, SystemConfig, User};
use crate::{CMatrix, CVector, Error, Result, C64};

/// `C0 * d^-alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathLossSpec {
    /// Linear gain at 1 m.
    pub reference_gain: f64,
    /// Meters.
    pub distance: f64,
    pub exponent: f64,
}

impl PathLossSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance > 0.0) {
            return Err(Error::Domain(format!("distance must be positive, got {}", self.distance)));
        }
        if !(self.exponent > 0.0) {
            return Err(Error::Domain(format!("exponent must be positive, got {}", self.exponent)));
        }
        if !(self.reference_gain > 0.0) {
            return Err(Error::Domain(format!(
                "reference gain must be positive, got {}",
                self.reference_gain
            )));
        }
        Ok(())
    }
}

/// Amplitude multiplier `C0 * d^-alpha` applied to unit-variance fading.
pub fn pathloss_gain(spec: &PathLossSpec) -> Result<f64> {
    spec.validate()?;
    Ok(spec.reference_gain * spec.distance.powf(-spec.exponent))
}

/// Correlation between the two users of a cluster. Channels of different
/// clusters are always independent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    /// Between `h_{k,c}` and `h_{k,e}`.
    pub rho_direct: f64,
    /// Between `g_{k,c}` and `g_{k,e}`.
    pub rho_reflect: f64,
}

impl CorrelationSpec {
    pub fn validate(&self) -> Result<()> {
        for rho in [self.rho_direct, self.rho_reflect] {
            check_rho(rho)?;
        }
        Ok(())
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::Domain(format!("correlation coefficient {rho} outside [0, 1]")))
    }
}

/// Large-scale geometry of the deployment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Linear gain at the 1 m reference distance.
    pub reference_gain: f64,
    pub bs_irs_distance: f64,
    pub bs_irs_exponent: f64,
    pub irs_center_distance: f64,
    pub irs_edge_distance: f64,
    pub irs_user_exponent: f64,
    pub bs_center_distance: f64,
    pub bs_edge_distance: f64,
    pub bs_user_exponent: f64,
    pub correlation: CorrelationSpec,
}

impl ChannelParams {
    /// C0 = -30 dB; BS-IRS 30 m; IRS-user 50/70 m; BS-user 50/80 m;
    /// exponents 2.5 (IRS links) and 3.5 (direct); intra-cluster
    /// correlation 0.9.
    pub fn standard() -> Self {
        ChannelParams {
            reference_gain: 1e-3,
            bs_irs_distance: 30.0,
            bs_irs_exponent: 2.5,
            irs_center_distance: 50.0,
            irs_edge_distance: 70.0,
            irs_user_exponent: 2.5,
            bs_center_distance: 50.0,
            bs_edge_distance: 80.0,
            bs_user_exponent: 3.5,
            correlation: CorrelationSpec {
                rho_direct: 0.9,
                rho_reflect: 0.9,
            },
        }
    }

    fn spec(&self, distance: f64, exponent: f64) -> PathLossSpec {
        PathLossSpec {
            reference_gain: self.reference_gain,
            distance,
            exponent,
        }
    }

    pub fn bs_irs(&self) -> PathLossSpec {
        self.spec(self.bs_irs_distance, self.bs_irs_exponent)
    }

    pub fn irs_user(&self, user: User) -> PathLossSpec {
        match user {
            User::Center => self.spec(self.irs_center_distance, self.irs_user_exponent),
            User::Edge => self.spec(self.irs_edge_distance, self.irs_user_exponent),
        }
    }

    pub fn bs_user(&self, user: User) -> PathLossSpec {
        match user {
            User::Center => self.spec(self.bs_center_distance, self.bs_user_exponent),
            User::Edge => self.spec(self.bs_edge_distance, self.bs_user_exponent),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bs_irs().validate()?;
        for u in User::BOTH {
            self.irs_user(u).validate()?;
            self.bs_user(u).validate()?;
        }
        self.correlation.validate()
    }
}

/// One Monte Carlo draw of every channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    /// BS to IRS, `M x N`.
    pub bs_irs: CMatrix,
    /// IRS to user, `M`-vectors in stacked user order.
    pub irs_user: Vec<CVector>,
    /// BS to user, `N`-vectors in stacked user order.
    pub bs_user: Vec<CVector>,
}

impl ChannelRealization {
    pub fn irs_user(&self, k: usize, user: User) -> &CVector {
        &self.irs_user[user_index(k, user)]
    }

    pub fn bs_user(&self, k: usize, user: User) -> &CVector {
        &self.bs_user[user_index(k, user)]
    }

    pub fn antennas(&self) -> usize {
        self.bs_irs.ncols()
    }

    pub fn elements(&self) -> usize {
        self.bs_irs.nrows()
    }

    pub fn clusters(&self) -> usize {
        self.bs_user.len() / 2
    }

    pub fn check_dims(&self, config: &SystemConfig) -> Result<()> {
        let (m, n, k) = (config.elements, config.antennas, config.clusters);
        let ok = self.bs_irs.shape() == (m, n)
            && self.irs_user.len() == 2 * k
            && self.bs_user.len() == 2 * k
            && self.irs_user.iter().all(|g| g.len() == m)
            && self.bs_user.iter().all(|h| h.len() == n);
        if ok {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "realization does not match N={n}, M={m}, K={k}"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        let fin = |z: &C64| z.re.is_finite() && z.im.is_finite();
        self.bs_irs.iter().all(fin)
            && self.irs_user.iter().flat_map(|v| v.iter()).all(fin)
            && self.bs_user.iter().flat_map(|v| v.iter()).all(fin)
    }
}

/// One `CN(0, 1)` sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

fn complex_normal_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVector {
    CVector::from_fn(len, |_, _| complex_normal(rng))
}

/// `rho * a + sqrt(1 - rho^2) * e`, entrywise.
pub fn correlate(a: &CVector, innovation: &CVector, rho: f64) -> Result<CVector> {
    check_rho(rho)?;
    if a.len() != innovation.len() {
        return Err(Error::Dimension("correlated pair lengths differ".into()));
    }
    let s = (1.0 - rho * rho).sqrt();
    Ok(a.zip_map(innovation, |x, e| x * rho + e * s))
}

/// Two `CN(0, I)` vectors with elementwise correlation coefficient `rho`.
/// The first vector is drawn in full before the innovation of the second.
pub fn correlated_gaussian_pair<R: Rng + ?Sized>(length: usize, rho: f64, rng: &mut R) -> Result<(CVector, CVector)> {
    check_rho(rho)?;
    let a = complex_normal_vector(length, rng);
    let e = complex_normal_vector(length, rng);
    let b = correlate(&a, &e, rho)?;
    Ok((a, b))
}

const LINK_BS_IRS: u64 = 0;
const LINK_IRS_USER: u64 = 1;
const LINK_BS_USER: u64 = 2;

fn stream(seed: u64, link: u64, cluster: usize, part: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream((link << 32) | ((cluster as u64) << 8) | part);
    rng
}

fn cluster_pair(seed: u64, link: u64, k: usize, len: usize, rho: f64) -> Result<(CVector, CVector)> {
    let a = complex_normal_vector(len, &mut stream(seed, link, k, 0));
    let e = complex_normal_vector(len, &mut stream(seed, link, k, 1));
    let b = correlate(&a, &e, rho)?;
    Ok((a, b))
}

/// Draws one realization. Pure in `(config, seed)`.
pub fn generate(config: &SystemConfig, seed: u64) -> Result<ChannelRealization> {
    config.validate()?;
    let p = &config.channel;
    let (m, n) = (config.elements, config.antennas);

    let mut rng = stream(seed, LINK_BS_IRS, 0, 0);
    let mut bs_irs = CMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            bs_irs[(i, j)] = complex_normal(&mut rng);
        }
    }
    bs_irs *= C64::from(pathloss_gain(&p.bs_irs())?);

    let scale_c = |spec: PathLossSpec| pathloss_gain(&spec).map(C64::from);
    let mut irs_user = Vec::with_capacity(2 * config.clusters);
    let mut bs_user = Vec::with_capacity(2 * config.clusters);
    for k in 0..config.clusters {
        let (gc, ge) = cluster_pair(seed, LINK_IRS_USER, k, m, p.correlation.rho_reflect)?;
        irs_user.push(gc * scale_c(p.irs_user(User::Center))?);
        irs_user.push(ge * scale_c(p.irs_user(User::Edge))?);
        let (hc, he) = cluster_pair(seed, LINK_BS_USER, k, n, p.correlation.rho_direct)?;
        bs_user.push(hc * scale_c(p.bs_user(User::Center))?);
        bs_user.push(he * scale_c(p.bs_user(User::Edge))?);
    }
    Ok(ChannelRealization {
        bs_irs,
        irs_user,
        bs_user,
    })
}

fn format_cell(z: C64) -> String {
    format!("{:e}{:+e}j", z.re, z.im)
}

fn parse_cell(s: &str) -> Result<C64> {
    let t = s.trim();
    let body = t
        .strip_suffix('j')
        .ok_or_else(|| Error::Parse(format!("complex cell `{t}` must end in `j`")))?;
    // Split at the last sign that does not belong to an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(|| Error::Parse(format!("complex cell `{t}` has no imaginary part")))?;
    let re = body[..split]
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("`{t}`: {e}")))?;
    let im = body[split..]
        .parse::<f64>()
        .map_err(|e| Error::Parse(format!("`{t}`: {e}")))?;
    Ok(C64::new(re, im))
}

fn user_columns(k: usize) -> Vec<String> {
    (0..k)
        .flat_map(|c| User::BOTH.map(|u| format!("{}{}", c + 1, u.tag())))
        .collect()
}

/// Serializes to the columnar text format:
///
/// ```text
/// # channel-realization v1 N=<N> M=<M> K=<K>
/// [H]
/// <M lines, N comma-separated cells>
/// [g] 1c,1e,2c,...
/// <M lines, 2K cells: entry m of every IRS-user vector>
/// [h] 1c,1e,2c,...
/// <N lines, 2K cells: entry n of every BS-user vector>
/// ```
///
/// Each cell is `re+imj` (or `re-imj`) with shortest round-trip decimals.
pub fn to_text(ch: &ChannelRealization) -> String {
    let (m, n, k) = (ch.elements(), ch.antennas(), ch.clusters());
    let mut out = String::new();
    let _ = writeln!(out, "# channel-realization v1 N={n} M={m} K={k}");
    out.push_str("[H]\n");
    for i in 0..m {
        let row: Vec<String> = (0..n).map(|j| format_cell(ch.bs_irs[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let cols = user_columns(k).join(",");
    for (tag, vecs, len) in [("g", &ch.irs_user, m), ("h", &ch.bs_user, n)] {
        let _ = writeln!(out, "[{tag}] {cols}");
        for i in 0..len {
            let row: Vec<String> = vecs.iter().map(|v| format_cell(v[i])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn from_text(text: &str) -> Result<ChannelRealization> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty channel file".into()))?;
    let dim = |key: &str| -> Result<usize> {
        header
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix(key))
            .ok_or_else(|| Error::Parse(format!("header lacks {key}")))?
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("header {key}: {e}")))
    };
    if !header.starts_with("# channel-realization v1") {
        return Err(Error::Parse(format!("unexpected header `{header}`")));
    }
    let (n, m, k) = (dim("N=")?, dim("M=")?, dim("K=")?);

    let mut read_block = |tag: &str, rows: usize, cols: usize| -> Result<Vec<Vec<C64>>> {
        let marker = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing [{tag}] section")))?;
        if !marker.trim_start().starts_with(&format!("[{tag}]")) {
            return Err(Error::Parse(format!("expected [{tag}], found `{marker}`")));
        }
        (0..rows)
            .map(|r| {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Parse(format!("[{tag}] ends after {r} rows")))?;
                let cells = line.split(',').map(parse_cell).collect::<Result<Vec<_>>>()?;
                if cells.len() != cols {
                    return Err(Error::Parse(format!(
                        "[{tag}] row {r} has {} cells, expected {cols}",
                        cells.len()
                    )));
                }
                Ok(cells)
            })
            .collect()
    };

    let h_rows = read_block("H", m, n)?;
    let bs_irs = CMatrix::from_fn(m, n, |i, j| h_rows[i][j]);
    let g_rows = read_block("g", m, 2 * k)?;
    let irs_user = (0..2 * k).map(|u| CVector::from_fn(m, |i, _| g_rows[i][u])).collect();
    let d_rows = read_block("h", n, 2 * k)?;
    let bs_user = (0..2 * k).map(|u| CVector::from_fn(n, |i, _| d_rows[i][u])).collect();
    Ok(ChannelRealization {
        bs_irs,
        irs_user,
        bs_user,
    })
}

pub fn write_text(ch: &ChannelRealization, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(ch)).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<ChannelRealization> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(k: usize, n: usize, m: usize) -> SystemConfig {
        let mut c = SystemConfig::standard();
        c.clusters = k;
        c.antennas = n;
        c.elements = m;
        c.with_uniform_targets(4.0, 4.0)
    }

    #[test]
    fn pathloss_examples() {
        let unit = PathLossSpec {
            reference_gain: 1.0,
            distance: 1.0,
            exponent: 2.5,
        };
        assert_eq!(pathloss_gain(&unit).unwrap(), 1.0);
        // 30^2.5 = 900 * sqrt(30); 80^3.5 = 512000 * sqrt(80)
        let g30 = pathloss_gain(&PathLossSpec {
            reference_gain: 1e-3,
            distance: 30.0,
            exponent: 2.5,
        })
        .unwrap();
        let expect30 = 1e-3 / (900.0 * 30f64.sqrt());
        assert!((g30 - expect30).abs() <= 1e-15 * expect30);
        let g80 = pathloss_gain(&PathLossSpec {
            reference_gain: 1e-3,
            distance: 80.0,
            exponent: 3.5,
        })
        .unwrap();
        let expect80 = 1e-3 / (512_000.0 * 80f64.sqrt());
        assert!((g80 - expect80).abs() <= 1e-15 * expect80);
    }

    #[test]
    fn pathloss_rejects_nonpositive_distance() {
        for d in [0.0, -3.0, f64::NAN] {
            let r = pathloss_gain(&PathLossSpec {
                reference_gain: 1.0,
                distance: d,
                exponent: 2.0,
            });
            assert!(matches!(r, Err(Error::Domain(_))));
        }
    }

    #[test]
    fn correlated_pair_degenerate_cases() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (a, b) = correlated_gaussian_pair(16, 1.0, &mut rng).unwrap();
        assert_eq!(a, b);
        assert!(correlated_gaussian_pair(4, 1.5, &mut rng).is_err());
        assert!(correlated_gaussian_pair(4, -0.1, &mut rng).is_err());
    }

    #[test]
    fn correlated_pair_statistics() {
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let n = 100_000;
        for rho in [0.0, 0.9] {
            let (a, b) = correlated_gaussian_pair(n, rho, &mut rng).unwrap();
            let cross: C64 = a.iter().zip(b.iter()).map(|(x, y)| x * y.conj()).sum::<C64>() / n as f64;
            let pa = a.norm_squared() / n as f64;
            let pb = b.norm_squared() / n as f64;
            let corr = cross.re / (pa * pb).sqrt();
            assert!((corr - rho).abs() < 0.01, "rho={rho} corr={corr}");
            assert!(cross.im.abs() < 0.01);
            assert!((pa - 1.0).abs() < 0.02 && (pb - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn generate_is_deterministic_and_sized() {
        let c = cfg(3, 8, 30);
        let a = generate(&c, 7).unwrap();
        let b = generate(&c, 7).unwrap();
        assert_eq!(a, b);
        a.check_dims(&c).unwrap();
        assert!(a.is_finite());
        assert_ne!(a, generate(&c, 8).unwrap());
    }

    #[test]
    fn generate_prefix_in_elements_and_clusters() {
        let small = generate(&cfg(2, 4, 10), 3).unwrap();
        let big = generate(&cfg(3, 4, 25), 3).unwrap();
        assert_eq!(small.bs_irs, big.bs_irs.rows(0, 10).into_owned());
        for u in 0..4 {
            assert_eq!(small.irs_user[u], big.irs_user[u].rows(0, 10).into_owned());
            assert_eq!(small.bs_user[u], big.bs_user[u]);
        }
    }

    #[test]
    fn text_round_trip() {
        let ch = generate(&cfg(2, 3, 4), 99).unwrap();
        let text = to_text(&ch);
        assert_eq!(from_text(&text).unwrap(), ch);
        assert!(text.lines().nth(2).unwrap().split(',').all(|c| c.ends_with('j')));
    }

    #[test]
    fn cell_parsing() {
        assert_eq!(parse_cell("1e0+2e0j").unwrap(), C64::new(1.0, 2.0));
        assert_eq!(parse_cell("-1.5e-3-2e-4j").unwrap(), C64::new(-1.5e-3, -2e-4));
        assert_eq!(parse_cell("0e0+1e0j").unwrap(), C64::new(0.0, 1.0));
        assert!(parse_cell("1.0").is_err());
        assert!(parse_cell("abc+1j").is_err());
    }

    #[test]
    fn from_text_rejects_truncated() {
        let ch = generate(&cfg(1, 2, 2), 1).unwrap();
        let text = to_text(&ch);
        let cut: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(from_text(&cut).is_err());
    }
}
