#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::Zero;
use rand::Rng;

pub mod reference;

use dyadic_sparse::dyadic::{Coord, DyadicInterval, DyadicPoint, DyadicRect};
use dyadic_sparse::maximal::MaxValue;
use dyadic_sparse::AtomicMeasure;

pub fn coord(num: u64, level: u32) -> Coord {
    Coord::new(num, level).unwrap()
}

pub fn rational(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

/// `sup μ(R)/|R|` over every unit dyadic rectangle `R ∋ z` with side levels
/// at most `max_level`, summing atom weights directly. Exact once
/// `max_level` exceeds the resolution of all coordinates.
pub fn brute_force_ms(mu: &AtomicMeasure, z: &DyadicPoint, max_level: u32) -> MaxValue {
    for a in mu.atoms() {
        if a.coords().iter().zip(z.coords()).any(|(x, y)| x == y) {
            return MaxValue::Infinite;
        }
    }
    let mut best = BigRational::zero();
    for lx in 0..=max_level {
        for ly in 0..=max_level {
            let r = DyadicRect::xy(
                DyadicInterval::containing(z.coord(0), lx).unwrap(),
                DyadicInterval::containing(z.coord(1), ly).unwrap(),
            );
            let mass: BigRational = mu
                .atoms()
                .iter()
                .zip(mu.weights())
                .filter(|(a, _)| r.contains_point(a))
                .map(|(_, w)| w.clone())
                .sum();
            let avg = mass / r.area().to_rational();
            if avg > best {
                best = avg;
            }
        }
    }
    MaxValue::Finite(best)
}

/// A random measure of up to `max_atoms` atoms and an evaluation point, all
/// with coordinates on the grid `2^{-level}`.
pub fn random_instance(rng: &mut impl Rng, max_atoms: usize, level: u32) -> (AtomicMeasure, DyadicPoint) {
    let n = rng.gen_range(1..=max_atoms);
    let side = 1u64 << level;
    let pt = |rng: &mut dyn rand::RngCore| {
        DyadicPoint::xy(
            coord(rng.gen_range(0..side), level),
            coord(rng.gen_range(0..side), level),
        )
    };
    let atoms = (0..n)
        .map(|_| (pt(rng), rational(rng.gen_range(1..=9), rng.gen_range(1..=9))))
        .collect();
    let mu = AtomicMeasure::new(2, atoms).unwrap();
    let z = pt(rng);
    (mu, z)
}
