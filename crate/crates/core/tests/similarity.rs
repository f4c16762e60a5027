mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use common::{noise, oracle_angles, to_dmatrix};
use scomo::similarity::{gait_deviation, loading_deviation, orthonormal_basis, principal_angles, DeviationMode};

fn dims() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (1usize..=4, 1usize..=4, any::<u64>()).prop_flat_map(|(ka, kb, seed)| ((ka + kb).max(2)..=10).prop_map(move |d| (ka, kb, d, seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn angles_are_symmetric((ka, kb, d, seed) in dims()) {
        let a = orthonormal_basis(&to_dmatrix(&noise(ka, d, seed))).unwrap();
        let b = orthonormal_basis(&to_dmatrix(&noise(kb, d, seed ^ 0xabc))).unwrap();
        let ab = principal_angles(&a, &b).unwrap();
        let ba = principal_angles(&b, &a).unwrap();
        for (x, y) in ab.thetas.iter().zip(&ba.thetas) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!(ab.thetas.iter().all(|t| (0.0..=std::f64::consts::FRAC_PI_2).contains(t)));
        prop_assert!(ab.thetas.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn angles_ignore_the_choice_of_basis((ka, kb, d, seed) in dims()) {
        let wa = to_dmatrix(&noise(ka, d, seed));
        let wb = to_dmatrix(&noise(kb, d, seed.wrapping_add(1)));
        let mix = DMatrix::identity(ka, ka) * 2.0 + to_dmatrix(&noise(ka, ka, seed.wrapping_add(2))) * 0.3;
        let r1 = principal_angles(&orthonormal_basis(&wa).unwrap(), &orthonormal_basis(&wb).unwrap()).unwrap();
        let r2 = principal_angles(&orthonormal_basis(&(mix * &wa)).unwrap(), &orthonormal_basis(&wb).unwrap()).unwrap();
        for (x, y) in r1.thetas.iter().zip(&r2.thetas) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn angles_survive_a_common_rotation((ka, kb, d, seed) in dims()) {
        let wa = noise(ka, d, seed);
        let wb = noise(kb, d, seed.wrapping_add(7));
        let q = orthonormal_basis(&to_dmatrix(&noise(d, d, seed.wrapping_add(9)))).unwrap().basis().clone();
        let rot = |w: &Vec<Vec<f64>>| orthonormal_basis(&(to_dmatrix(w) * &q)).unwrap();
        let r = principal_angles(&rot(&wa), &rot(&wb)).unwrap();
        for (x, y) in r.thetas.iter().zip(oracle_angles(&wa, &wb)) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }
}

#[test]
fn cosine_and_angle_modes_agree_on_loadings() {
    let wa = to_dmatrix(&noise(4, 45, 1));
    let wb = to_dmatrix(&noise(4, 45, 2));
    let (deg, m) = loading_deviation(&wa, &wb, DeviationMode::SumAngles).unwrap();
    let (cos, _) = loading_deviation(&wa, &wb, DeviationMode::SumCosines).unwrap();
    let r = principal_angles(&orthonormal_basis(&wa).unwrap(), &orthonormal_basis(&wb).unwrap()).unwrap();
    assert_eq!(m, 4);
    assert!((deg - gait_deviation(&r, DeviationMode::SumAngles)).abs() < 1e-12);
    let from_angles: f64 = r.thetas.iter().map(|t| t.cos()).sum();
    assert!((cos - from_angles).abs() < 1e-10);
}
