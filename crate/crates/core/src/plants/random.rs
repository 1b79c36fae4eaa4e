//! Seeded random real plants for tests and benchmarks.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::statespace::StateSpace;
use super::PlantModel;
use crate::linalg::CMat;

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn modulus(rng: &mut ChaCha8Rng, stable_only: bool) -> f64 {
    if stable_only || rng.random_bool(0.5) {
        rng.random_range(1.1..3.0)
    } else {
        rng.random_range(0.0..0.9)
    }
}

fn plant(p: usize, m: usize, order: usize, seed: u64, stable_only: bool) -> PlantModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blk = DMatrix::<f64>::zeros(order, order);
    let mut k = 0;
    while k < order {
        let r = modulus(&mut rng, stable_only);
        if k + 1 < order && rng.random_bool(0.5) {
            let (s, c) = rng.random_range(0.2..std::f64::consts::PI - 0.2).sin_cos();
            blk[(k, k)] = r * c;
            blk[(k, k + 1)] = -r * s;
            blk[(k + 1, k)] = r * s;
            blk[(k + 1, k + 1)] = r * c;
            k += 2;
        } else {
            blk[(k, k)] = if rng.random_bool(0.5) { r } else { -r };
            k += 1;
        }
    }
    let q = gaussian(&mut rng, order, order).qr().q();
    let a = &q * blk * q.transpose();
    let b = gaussian(&mut rng, order, m);
    let c = gaussian(&mut rng, p, order);
    let d = gaussian(&mut rng, p, m);
    let cplx = |x: &DMatrix<f64>| -> CMat { x.map(|v| crate::linalg::c(v, 0.0)) };
    let ss = StateSpace::new(cplx(&a), cplx(&b), cplx(&c), cplx(&d)).expect("shapes are consistent");
    PlantModel::state_space(ss).expect("poles are kept off the unit circle")
}

/// Random real `p x m` plant of the given order. Poles lie in `|z| < 0.9` or
/// `1.1 < |z| < 3`; the same seed always gives the same plant.
pub fn random_plant(p: usize, m: usize, order: usize, seed: u64) -> PlantModel {
    plant(p, m, order, seed, false)
}

/// Like [`random_plant`] with every pole in `1.1 < |z| < 3`.
pub fn random_stable_plant(p: usize, m: usize, order: usize, seed: u64) -> PlantModel {
    plant(p, m, order, seed, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plants::PlantBody;

    #[test]
    fn seeded_and_stable() {
        let a = random_stable_plant(2, 3, 5, 7);
        assert_eq!(a, random_stable_plant(2, 3, 5, 7));
        assert_ne!(a, random_stable_plant(2, 3, 5, 8));
        let PlantBody::StateSpace(ss) = &a.body else { panic!() };
        assert_eq!((ss.outputs(), ss.inputs(), ss.order()), (2, 3, 5));
        assert!(ss.poles().iter().all(|z| z.norm() > 1.09 && z.norm() < 3.01));
    }

    #[test]
    fn poles_avoid_the_circle() {
        for seed in 0..20 {
            let PlantBody::StateSpace(ss) = random_plant(1, 1, 4, seed).body else { panic!() };
            assert!(ss.poles().iter().all(|z| (z.norm() - 1.0).abs() > 0.09));
        }
    }
}
