//! Conic layer edge cases exercised through the public API.

use nalgebra::{DMatrix, DVector};

use irs_noma::conic::{self, text, SocCone, SocpProblem, SocpStatus, SolveOptions};

fn constant(b: &[f64], d: f64, n: usize) -> SocCone {
    SocCone {
        a: DMatrix::zeros(b.len(), n),
        b: DVector::from_column_slice(b),
        c: DVector::zeros(n),
        d,
    }
}

fn ball(center: &[f64], radius: f64) -> SocCone {
    let n = center.len();
    SocCone {
        a: DMatrix::identity(n, n),
        b: -DVector::from_column_slice(center),
        c: DVector::zeros(n),
        d: radius,
    }
}

#[test]
fn satisfied_constant_cone_is_ignored() {
    let with = SocpProblem::min_norm(2, vec![ball(&[2.0, 0.0], 1.0), constant(&[3.0, 4.0], 5.0, 2)]);
    let without = SocpProblem::min_norm(2, vec![ball(&[2.0, 0.0], 1.0)]);
    let a = conic::solve(&with, &SolveOptions::default()).unwrap();
    let b = conic::solve(&without, &SolveOptions::default()).unwrap();
    assert_eq!(a.status, SocpStatus::Optimal);
    assert!((a.x.clone() - b.x).norm() < 1e-7);
    assert!((a.x - DVector::from_column_slice(&[1.0, 0.0])).norm() < 1e-6);
}

#[test]
fn violated_constant_cone_is_infeasible() {
    let p = SocpProblem::min_norm(2, vec![ball(&[2.0, 0.0], 1.0), constant(&[3.0, 4.0], 4.0, 2)]);
    assert_eq!(conic::solve(&p, &SolveOptions::default()).unwrap().status, SocpStatus::Infeasible);
}

#[test]
fn disjoint_balls_are_infeasible() {
    let p = SocpProblem::min_norm(2, vec![ball(&[2.0, 0.0], 1.0), ball(&[-2.0, 0.0], 1.0)]);
    assert_eq!(conic::solve(&p, &SolveOptions::default()).unwrap().status, SocpStatus::Infeasible);
}

#[test]
fn text_round_trip_solves_identically() {
    let mut p = SocpProblem::proximal(
        DVector::from_column_slice(&[0.3, -2.0]),
        vec![ball(&[1.0, 1.0], 1.5), constant(&[0.5], 1.0, 2)],
    );
    p.objective.linear = DVector::from_column_slice(&[0.1, 0.0]);
    let back = text::from_text(&text::to_text(&p)).unwrap();
    assert_eq!(back, p);
    let a = conic::solve(&p, &SolveOptions::default()).unwrap();
    let b = conic::solve(&back, &SolveOptions::default()).unwrap();
    assert_eq!(a.x, b.x);
}
