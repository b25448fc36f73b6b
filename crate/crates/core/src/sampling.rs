//! Seeded sampling helpers shared by the verification sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{rat, Rational};

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform float vector in the box `[lo_i, hi_i]`.
pub fn uniform_in_box(rng: &mut SampleRng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| if a == b { *a } else { rng.random_range(*a..*b) })
        .collect()
}

/// Uniform float vector in the cube `[-r, r]^n`.
pub fn uniform_cube(rng: &mut SampleRng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

/// Uniform point of the open ball of radius `r` (rejection from the cube).
pub fn uniform_ball(rng: &mut SampleRng, n: usize, r: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    loop {
        let v = uniform_cube(rng, n, r);
        if v.iter().map(|x| x * x).sum::<f64>() < r * r {
            return v;
        }
    }
}

/// Random rational `p/den` with `|p| <= num_bound`.
pub fn small_rational(rng: &mut SampleRng, num_bound: i64, den: i64) -> Rational {
    rat(rng.random_range(-num_bound..=num_bound), den)
}

/// Random rational point with coordinates `p/den`, `|p| <= num_bound`, not all zero.
pub fn nonzero_rational_point(rng: &mut SampleRng, n: usize, num_bound: i64, den: i64) -> Vec<Rational> {
    loop {
        let v: Vec<Rational> = (0..n).map(|_| small_rational(rng, num_bound, den)).collect();
        if v.iter().any(|q| *q != rat(0, 1)) {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_streams_repeat() {
        let a = uniform_cube(&mut rng(7), 4, 1.0);
        let b = uniform_cube(&mut rng(7), 4, 1.0);
        assert_eq!(a, b);
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut r = rng(1);
        for _ in 0..100 {
            let v = uniform_ball(&mut r, 3, 0.5);
            assert!(v.iter().map(|x| x * x).sum::<f64>() < 0.25);
        }
    }
}
