//! Closed-form beamformers inside a cluster's interference null space.
//!
//! The central beam only has to meet its own SNR. The edge beam solves
//! `min ||w||^2` subject to `|b_e^H w| >= 1` and `|b_c^H w| >= 1`, where
//! `b_e` and `b_c` fold the edge target and the central-beam interference
//! into the two observers' reduced channels.

use std::f64::consts::PI;
use std::fmt;

use crate::{CVector, Error, Result, C64};

/// Sign pattern of `b_e b_e^H - b_c b_c^H`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Definiteness {
    Psd,
    Nsd,
    Indefinite,
}

/// Which constraints are active at the returned edge beam.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeBranch {
    /// `b_c / ||b_c||^2`.
    CenterActive,
    /// `b_e / ||b_e||^2`.
    EdgeActive,
    /// `(b_e + f(theta) b_c)` scaled so both constraints hold with equality.
    Both { theta: f64 },
    /// Zero target, zero beam.
    Idle,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeBeamCase {
    pub class: Definiteness,
    pub branch: EdgeBranch,
}

impl fmt::Display for EdgeBeamCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let class = match self.class {
            Definiteness::Psd => "psd",
            Definiteness::Nsd => "nsd",
            Definiteness::Indefinite => "indef",
        };
        let branch = match self.branch {
            EdgeBranch::CenterActive => "c",
            EdgeBranch::EdgeActive => "e",
            EdgeBranch::Both { .. } => "both",
            EdgeBranch::Idle => "idle",
        };
        write!(f, "{class}/{branch}")
    }
}

/// `sqrt(tau sigma^2) h / ||h||^2`: meets `|h^H w|^2 >= tau sigma^2` with
/// equality at minimum norm.
pub fn solve_w_center(h_bar: &CVector, tau: f64, noise: f64) -> Result<CVector> {
    if tau == 0.0 {
        return Ok(CVector::zeros(h_bar.len()));
    }
    let g = h_bar.norm_squared();
    if !(g > 0.0) {
        return Err(Error::Infeasible {
            cluster: usize::MAX,
            reason: "central user has no component in the interference null space".into(),
        });
    }
    Ok(h_bar * C64::new((tau * noise).sqrt() / g, 0.0))
}

/// Nonzero eigenvalues (descending) of `b_e b_e^H - b_c b_c^H`, from the
/// 2x2 reduction `diag(1, -1) [b_e b_c]^H [b_e b_c]`.
pub fn difference_eigenvalues(b_e: &CVector, b_c: &CVector) -> (f64, f64) {
    let ne = b_e.norm_squared();
    let nc = b_c.norm_squared();
    let cross = b_e.dotc(b_c).norm_sqr();
    let tr = ne - nc;
    let det = cross - ne * nc;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    ((tr + disc) / 2.0, (tr - disc) / 2.0)
}

pub fn classify(b_e: &CVector, b_c: &CVector) -> Definiteness {
    let (hi, lo) = difference_eigenvalues(b_e, b_c);
    let thr = 1e-10 * (b_e.norm_squared() + b_c.norm_squared());
    if lo >= -thr {
        Definiteness::Psd
    } else if hi <= thr {
        Definiteness::Nsd
    } else {
        Definiteness::Indefinite
    }
}

/// The combining coefficient `f(x)`; makes `b_e^H v = e^{jx} b_c^H v` for
/// `v = b_e + f(x) b_c`.
pub fn combining_coefficient(b_e: &CVector, b_c: &CVector, x: f64) -> C64 {
    let ej = C64::from_polar(1.0, x);
    (C64::new(b_e.norm_squared(), 0.0) - ej * b_c.dotc(b_e)) / (ej * b_c.norm_squared() - b_e.dotc(b_c))
}

/// `||v||^2 / |b_e^H v|^2` for `v = b_e + f(x) b_c`: the power of the
/// both-active beam at phase `x` (infinite where `f` is singular).
fn both_active_power(b_e: &CVector, b_c: &CVector, x: f64) -> f64 {
    let f = combining_coefficient(b_e, b_c, x);
    if !f.is_finite() {
        return f64::INFINITY;
    }
    let v = b_e + b_c * f;
    let s = b_e.dotc(&v).norm_sqr();
    if s > 0.0 {
        v.norm_squared() / s
    } else {
        f64::INFINITY
    }
}

/// Minimum over `[0, 2pi)` of [`both_active_power`]: uniform grid, then
/// golden-section refinement on the bracketing cells.
pub fn search_theta(b_e: &CVector, b_c: &CVector, grid: usize) -> f64 {
    let grid = grid.max(8);
    let step = 2.0 * PI / grid as f64;
    let (best_i, _) = (0..grid)
        .map(|i| (i, both_active_power(b_e, b_c, i as f64 * step)))
        .fold((0, f64::INFINITY), |acc, (i, p)| if p < acc.1 { (i, p) } else { acc });
    let (mut a, mut b) = ((best_i as f64 - 1.0) * step, (best_i as f64 + 1.0) * step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = both_active_power(b_e, b_c, x1);
    let mut f2 = both_active_power(b_e, b_c, x2);
    while b - a > 1e-6 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = both_active_power(b_e, b_c, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = both_active_power(b_e, b_c, x2);
        }
    }
    ((a + b) / 2.0).rem_euclid(2.0 * PI)
}

/// Exact minimum of `||w||^2` with both constraints active:
/// `(||b_e||^2 + ||b_c||^2 - 2|b_e^H b_c|) / (||b_e||^2 ||b_c||^2 - |b_e^H b_c|^2)`.
pub fn both_active_min_power(b_e: &CVector, b_c: &CVector) -> f64 {
    let ne = b_e.norm_squared();
    let nc = b_c.norm_squared();
    let cross = b_e.dotc(b_c).norm();
    (ne + nc - 2.0 * cross) / (ne * nc - cross * cross)
}

/// `b = h_bar / sqrt(tau (sigma^2 + |h_bar^H w_c|^2))`.
pub fn edge_vector(h_bar: &CVector, w_center: &CVector, tau: f64, noise: f64) -> CVector {
    let beta = noise + h_bar.dotc(w_center).norm_sqr();
    h_bar / C64::new((tau * beta).sqrt(), 0.0)
}

/// Minimum-norm edge beam in the reduced space.
///
/// Candidates are the two single-active beams (kept only when they also meet
/// the other constraint) and, when the difference matrix is indefinite, the
/// both-active beam at the searched `theta`. The cheapest candidate wins.
pub fn solve_w_edge(
    h_bar_e: &CVector,
    h_bar_c: &CVector,
    w_center: &CVector,
    tau: f64,
    noise: f64,
    theta_grid: usize,
) -> Result<(CVector, EdgeBeamCase)> {
    if tau == 0.0 {
        let class = Definiteness::Psd;
        return Ok((CVector::zeros(h_bar_e.len()), EdgeBeamCase { class, branch: EdgeBranch::Idle }));
    }
    let b_e = edge_vector(h_bar_e, w_center, tau, noise);
    let b_c = edge_vector(h_bar_c, w_center, tau, noise);
    let ne = b_e.norm_squared();
    let nc = b_c.norm_squared();
    if !(ne > 0.0) || !(nc > 0.0) {
        return Err(Error::Infeasible {
            cluster: usize::MAX,
            reason: "edge symbol unreachable in the interference null space".into(),
        });
    }
    let class = classify(&b_e, &b_c);
    let cross = b_e.dotc(&b_c).norm();
    // (power, beam, branch)
    let mut cands: Vec<(f64, CVector, EdgeBranch)> = Vec::with_capacity(3);
    if class != Definiteness::Nsd && cross >= nc * (1.0 - 1e-12) {
        cands.push((1.0 / nc, &b_c / C64::new(nc, 0.0), EdgeBranch::CenterActive));
    }
    if class != Definiteness::Psd && cross >= ne * (1.0 - 1e-12) {
        cands.push((1.0 / ne, &b_e / C64::new(ne, 0.0), EdgeBranch::EdgeActive));
    }
    match class {
        Definiteness::Psd if cands.is_empty() => {
            cands.push((1.0 / nc, &b_c / C64::new(nc, 0.0), EdgeBranch::CenterActive))
        }
        Definiteness::Nsd if cands.is_empty() => {
            cands.push((1.0 / ne, &b_e / C64::new(ne, 0.0), EdgeBranch::EdgeActive))
        }
        Definiteness::Indefinite => {
            let theta = search_theta(&b_e, &b_c, theta_grid);
            let v = &b_e + &b_c * combining_coefficient(&b_e, &b_c, theta);
            let s = b_e.dotc(&v).norm();
            if s > 0.0 && s.is_finite() {
                let w = v / C64::new(s, 0.0);
                cands.push((w.norm_squared(), w, EdgeBranch::Both { theta }));
            }
        }
        _ => {}
    }
    let (_, mut w, branch) = cands
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or_else(|| Error::Infeasible {
            cluster: usize::MAX,
            reason: "no edge beam candidate".into(),
        })?;
    // Lift both constraints to at least 1 against roundoff.
    let worst = b_e.dotc(&w).norm().min(b_c.dotc(&w).norm());
    if worst < 1.0 && worst > 0.0 {
        w /= C64::new(worst, 0.0);
    }
    Ok((w, EdgeBeamCase { class, branch }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_normal;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cv(v: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(v.len(), v.iter().map(|&(a, b)| C64::new(a, b)))
    }

    fn constraints(h_e: &CVector, h_c: &CVector, w_c: &CVector, tau: f64, noise: f64, w: &CVector) -> (f64, f64) {
        let b_e = edge_vector(h_e, w_c, tau, noise);
        let b_c = edge_vector(h_c, w_c, tau, noise);
        (b_e.dotc(w).norm_sqr(), b_c.dotc(w).norm_sqr())
    }

    #[test]
    fn center_beam_examples() {
        let w = solve_w_center(&cv(&[(1.0, 0.0), (0.0, 0.0)]), 15.0, 1.0).unwrap();
        assert!((w - cv(&[(15f64.sqrt(), 0.0), (0.0, 0.0)])).norm() < 1e-15);
        assert_eq!(solve_w_center(&cv(&[(1.0, 2.0)]), 0.0, 1.0).unwrap().norm(), 0.0);
        let h = cv(&[(0.3, -1.0), (2.0, 0.5), (0.0, 0.1)]);
        let w = solve_w_center(&h, 3.0, 0.5).unwrap();
        assert!((w.norm_squared() - 3.0 * 0.5 / h.norm_squared()).abs() < 1e-14);
        assert!((h.dotc(&w).norm_sqr() - 1.5).abs() < 1e-13);
        assert!(matches!(solve_w_center(&CVector::zeros(2), 1.0, 1.0), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn coincident_constraints() {
        let h = cv(&[(1.0, 0.5), (-0.2, 0.3)]);
        let w_c = CVector::zeros(2);
        let (w, case) = solve_w_edge(&h, &h, &w_c, 3.0, 1.0, 1024).unwrap();
        let b = edge_vector(&h, &w_c, 3.0, 1.0);
        assert!((&w - &b / C64::new(b.norm_squared(), 0.0)).norm() < 1e-12);
        assert_ne!(case.class, Definiteness::Indefinite);
        let (ge, gc) = constraints(&h, &h, &w_c, 3.0, 1.0, &w);
        assert!((ge - 1.0).abs() < 1e-9 && (gc - 1.0).abs() < 1e-9);
    }

    #[test]
    fn parallel_channels_pick_the_weaker_observer() {
        let h_e = cv(&[(1.0, 0.0), (1.0, 0.0)]);
        let h_c = &h_e * C64::new(0.0, 2.0);
        let (w, case) = solve_w_edge(&h_e, &h_c, &CVector::zeros(2), 1.0, 1.0, 1024).unwrap();
        // b_c = 2j b_e dominates, so the edge constraint binds
        assert_eq!(case.class, Definiteness::Nsd);
        assert_eq!(case.branch, EdgeBranch::EdgeActive);
        assert!((h_e.dotc(&w).norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_equal_norms_use_both_constraints() {
        let h_e = cv(&[(1.0, 0.0), (0.0, 0.0)]);
        let h_c = cv(&[(0.0, 0.0), (1.0, 0.0)]);
        let w_c = CVector::zeros(2);
        let (w, case) = solve_w_edge(&h_e, &h_c, &w_c, 1.0, 1.0, 1024).unwrap();
        assert_eq!(case.class, Definiteness::Indefinite);
        assert!(matches!(case.branch, EdgeBranch::Both { .. }));
        let (ge, gc) = constraints(&h_e, &h_c, &w_c, 1.0, 1.0, &w);
        assert!(ge >= 1.0 - 1e-8 && gc >= 1.0 - 1e-8);
        assert!((w.norm_squared() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn search_reaches_closed_form_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let b_e = CVector::from_fn(3, |_, _| complex_normal(&mut rng));
            let b_c = CVector::from_fn(3, |_, _| complex_normal(&mut rng));
            let th = search_theta(&b_e, &b_c, 1024);
            let got = both_active_power(&b_e, &b_c, th);
            let exact = both_active_min_power(&b_e, &b_c);
            assert!((got - exact).abs() <= 1e-9 * exact, "{got} vs {exact}");
        }
    }

    #[test]
    fn difference_eigenvalues_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b_e = CVector::from_fn(4, |_, _| complex_normal(&mut rng));
        let b_c = CVector::from_fn(4, |_, _| complex_normal(&mut rng));
        let d = &b_e * b_e.adjoint() - &b_c * b_c.adjoint();
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(d).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let (hi, lo) = difference_eigenvalues(&b_e, &b_c);
        assert!((ev[3] - hi).abs() < 1e-10 && (ev[0] - lo).abs() < 1e-10);
        assert!(ev[1].abs() < 1e-10 && ev[2].abs() < 1e-10);
    }

    #[test]
    fn edge_beam_beats_random_feasible_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..3 {
            let h_e = CVector::from_fn(3, |_, _| complex_normal(&mut rng));
            let h_c = CVector::from_fn(3, |_, _| complex_normal(&mut rng));
            let w_c = CVector::from_fn(3, |_, _| complex_normal(&mut rng) * 0.3);
            let (tau, noise) = (2.0, 0.7);
            let (w, _) = solve_w_edge(&h_e, &h_c, &w_c, tau, noise, 1024).unwrap();
            let b_e = edge_vector(&h_e, &w_c, tau, noise);
            let b_c = edge_vector(&h_c, &w_c, tau, noise);
            let (ge, gc) = (b_e.dotc(&w).norm_sqr(), b_c.dotc(&w).norm_sqr());
            assert!(ge >= 1.0 - 1e-8 && gc >= 1.0 - 1e-8);
            assert!((ge - 1.0).abs() < 1e-6 || (gc - 1.0).abs() < 1e-6, "no tight constraint");
            let p = w.norm_squared();
            let samples = if trial == 0 { 1_000_000 } else { 100_000 };
            for _ in 0..samples {
                let d = CVector::from_fn(3, |_, _| complex_normal(&mut rng));
                // smallest scaling of d meeting both constraints
                let s = b_e.dotc(&d).norm().min(b_c.dotc(&d).norm());
                if s > 0.0 {
                    assert!(p <= d.norm_squared() / (s * s) * (1.0 + 1e-9));
                }
            }
            let _ = rng.gen::<u8>();
        }
    }

    #[test]
    fn zero_target_and_unreachable_edge() {
        let h = cv(&[(1.0, 0.0)]);
        let (w, case) = solve_w_edge(&h, &h, &CVector::zeros(1), 0.0, 1.0, 64).unwrap();
        assert_eq!(w.norm(), 0.0);
        assert_eq!(case.branch, EdgeBranch::Idle);
        assert!(solve_w_edge(&CVector::zeros(1), &h, &CVector::zeros(1), 1.0, 1.0, 64).is_err());
    }
}
