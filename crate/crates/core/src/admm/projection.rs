//! Projection onto the reflection set and the scaled dual update.

use std::f64::consts::PI;

use crate::model::ReflectionCase;
use crate::{CVector, C64};

/// Nearest point of the reflection set, elementwise.
///
/// A zero entry has no phase; it maps to `1` in the unit-modulus and
/// discrete cases. Discrete phases round the level index half away from
/// zero and wrap modulo `L`.
pub fn project_reflection(z: &CVector, case: ReflectionCase) -> CVector {
    z.map(|v| project_element(v, case))
}

pub fn project_element(v: C64, case: ReflectionCase) -> C64 {
    let r = v.norm();
    match case {
        ReflectionCase::BoxModulus if r <= 1.0 => v,
        ReflectionCase::BoxModulus | ReflectionCase::UnitModulus => {
            if r == 0.0 {
                C64::new(1.0, 0.0)
            } else {
                v / r
            }
        }
        ReflectionCase::DiscretePhase { levels } => {
            let step = 2.0 * PI / levels as f64;
            let idx = (v.arg() / step).round() as i64;
            let idx = idx.rem_euclid(levels as i64);
            C64::from_polar(1.0, step * idx as f64)
        }
    }
}

/// `lambda + phi - varphi`.
pub fn update_lambda(lambda: &CVector, phi: &CVector, varphi: &CVector) -> CVector {
    lambda + phi - varphi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::complex_normal;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one(v: C64) -> CVector {
        CVector::from_element(1, v)
    }

    #[test]
    fn box_keeps_interior_points() {
        let z = C64::from_polar(0.5, PI / 4.0);
        assert_eq!(project_reflection(&one(z), ReflectionCase::BoxModulus)[0], z);
        let out = project_reflection(&one(C64::new(3.0, 4.0)), ReflectionCase::BoxModulus)[0];
        assert!((out - C64::new(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn unit_modulus_keeps_phase() {
        let out = project_reflection(&one(C64::from_polar(3.0, PI / 3.0)), ReflectionCase::UnitModulus)[0];
        assert!((out - C64::from_polar(1.0, PI / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn discrete_rounds_to_nearest_level() {
        let case = ReflectionCase::DiscretePhase { levels: 4 };
        let out = project_reflection(&one(C64::from_polar(1.0, 0.8 * PI / 2.0)), case)[0];
        assert!((out - C64::new(0.0, 1.0)).norm() < 1e-15);
        // negative angles wrap onto the level set
        let out = project_element(C64::from_polar(2.0, -0.9 * PI / 2.0), case);
        assert!((out - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn discrete_tie_rounds_away_from_zero() {
        let case = ReflectionCase::DiscretePhase { levels: 4 };
        let out = project_element(C64::from_polar(1.0, PI / 4.0), case);
        assert!((out - C64::new(0.0, 1.0)).norm() < 1e-12);
        let out = project_element(C64::from_polar(1.0, -PI / 4.0), case);
        assert!((out - C64::new(0.0, -1.0)).norm() < 1e-12);
        // angle pi sits on level L/2; -pi wraps to the same level
        let out = project_element(C64::new(-1.0, -0.0), case);
        assert!((out - C64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_entry_falls_back_to_one() {
        let zero = C64::new(0.0, 0.0);
        assert_eq!(project_element(zero, ReflectionCase::BoxModulus), zero);
        assert_eq!(project_element(zero, ReflectionCase::UnitModulus), C64::new(1.0, 0.0));
        assert_eq!(project_element(zero, ReflectionCase::DiscretePhase { levels: 8 }), C64::new(1.0, 0.0));
    }

    #[test]
    fn projected_points_are_in_the_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z = CVector::from_fn(200, |_, _| complex_normal(&mut rng) * 2.0);
        for case in [
            ReflectionCase::BoxModulus,
            ReflectionCase::UnitModulus,
            ReflectionCase::DiscretePhase { levels: 2 },
            ReflectionCase::DiscretePhase { levels: 8 },
        ] {
            let p = project_reflection(&z, case);
            let tol = if case == ReflectionCase::BoxModulus { 1e-12 } else { 1e-15 };
            assert!(case.contains(&p, tol), "{case}");
        }
    }

    #[test]
    fn projection_beats_random_set_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for case in [ReflectionCase::BoxModulus, ReflectionCase::UnitModulus] {
            for _ in 0..5 {
                let z = complex_normal(&mut rng) * 1.5;
                let d = (project_element(z, case) - z).norm();
                for _ in 0..100_000 {
                    let th = rng.gen_range(0.0..2.0 * PI);
                    let r = if case == ReflectionCase::BoxModulus {
                        rng.gen::<f64>().sqrt()
                    } else {
                        1.0
                    };
                    assert!(d <= (C64::from_polar(r, th) - z).norm() + 1e-12);
                }
            }
        }
        for levels in [2u32, 3, 4, 8] {
            let case = ReflectionCase::DiscretePhase { levels };
            for _ in 0..50 {
                let z = complex_normal(&mut rng);
                let d = (project_element(z, case) - z).norm();
                for l in 0..levels {
                    let q = C64::from_polar(1.0, 2.0 * PI * l as f64 / levels as f64);
                    assert!(d <= (q - z).norm() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn dual_update() {
        let phi = CVector::from_vec(vec![C64::new(1.0, 2.0), C64::new(-1.0, 0.0)]);
        let lambda = CVector::from_vec(vec![C64::new(0.5, 0.0), C64::new(0.0, 0.25)]);
        assert_eq!(update_lambda(&lambda, &phi, &phi), lambda);
        let d = CVector::from_vec(vec![C64::new(0.1, 0.0), C64::new(0.0, -0.3)]);
        let out = update_lambda(&CVector::zeros(2), &(&phi + &d), &phi);
        assert!((out - d).norm() < 1e-15);
        let mut l = lambda.clone();
        for _ in 0..3 {
            l = update_lambda(&l, &phi, &phi);
        }
        assert_eq!(l, lambda);
    }

    proptest! {
        #[test]
        fn projection_is_idempotent(re in -3.0f64..3.0, im in -3.0f64..3.0, levels in 2u32..16) {
            let z = C64::new(re, im);
            for case in [ReflectionCase::BoxModulus, ReflectionCase::UnitModulus, ReflectionCase::DiscretePhase { levels }] {
                let p = project_element(z, case);
                prop_assert!((project_element(p, case) - p).norm() < 1e-12);
            }
        }
    }
}
