//! Deterministic low-discrepancy point sets.
//!
//! Every sampler is a Halton sequence with a Cranley–Patterson rotation drawn
//! from a ChaCha stream keyed by the caller's seed, so identical seeds give
//! identical point sets on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let base = base as u64;
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * factor;
        index /= base;
        factor *= inv;
    }
    value
}

/// Derive a child seed so that independent draws never share a stream.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Rotated Halton sequence in `[0, 1)^dim`.
#[derive(Debug, Clone)]
pub struct Halton {
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension {dim} too large");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        Halton { shift }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        self.shift
            .iter()
            .zip(PRIMES.iter())
            .map(|(s, &b)| {
                let v = radical_inverse(i as u64 + 1, b) + s;
                v - v.floor()
            })
            .collect()
    }

    pub fn points(&self, count: usize) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..count).map(move |i| self.point(i))
    }
}

/// Rotated one-dimensional lattice `((i + s) / n)_{i<n}` in `(0, 1]`.
pub fn lattice(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: f64 = rng.gen_range(0.0..1.0);
    (0..count)
        .map(|i| {
            let t = (i as f64 + 1.0 - s) / count as f64;
            t.clamp(f64::MIN_POSITIVE, 1.0)
        })
        .collect()
}

/// Euclidean unit directions in `R^dim`, evenly spread.
///
/// One dimension gives `{-1, +1}`; two dimensions use equally spaced angles;
/// higher dimensions normalize Halton points accepted inside the unit ball.
pub fn unit_directions(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match dim {
        0 => Vec::new(),
        1 => vec![vec![-1.0], vec![1.0]],
        2 => {
            let count = count.max(4);
            let offset = ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..1.0);
            (0..count)
                .map(|i| {
                    let a = std::f64::consts::TAU * (i as f64 + offset) / count as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect()
        }
        _ => {
            let halton = Halton::new(dim, seed);
            let mut out = Vec::with_capacity(count);
            let mut i = 0;
            while out.len() < count && i < 64 * count.max(1) {
                let z: Vec<f64> = halton.point(i).iter().map(|u| 2.0 * u - 1.0).collect();
                let n = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > 1e-3 && n <= 1.0 {
                    out.push(z.iter().map(|v| v / n).collect());
                }
                i += 1;
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_is_deterministic_and_in_unit_cube() {
        let a: Vec<_> = Halton::new(3, 7).points(50).collect();
        let b: Vec<_> = Halton::new(3, 7).points(50).collect();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&v| (0.0..1.0).contains(&v)));
        let c: Vec<_> = Halton::new(3, 8).points(50).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn directions_are_unit() {
        for dim in 1..5 {
            for d in unit_directions(dim, 16, 3) {
                let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lattice_covers_unit_interval() {
        let l = lattice(100, 1);
        assert_eq!(l.len(), 100);
        assert!(l.iter().all(|&t| t > 0.0 && t <= 1.0));
        assert!(l.iter().cloned().fold(f64::INFINITY, f64::min) <= 0.01);
    }
}
