//! Seeded i.i.d. sampling from a [`Distribution`].
//!
//! Draws are sequential from one ChaCha stream, so a sample of size `m` is
//! the prefix of the sample of size `m + 1` under the same seed, and
//! [`sample_marginal`] returns exactly the instances of [`sample`].

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::instance::{Distribution, Example, LabeledSample, UnlabeledSample};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// splitmix64 finalizer; used to derive independent child seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn sample(d: &Distribution, m: usize, seed: u64) -> LabeledSample {
    if m == 0 {
        return Vec::new();
    }
    let atoms = d.atoms();
    let index = WeightedIndex::new(atoms.iter().map(|a| a.p))
        .expect("distribution masses are positive and finite");
    let mut rng = rng_from_seed(seed);
    (0..m)
        .map(|_| {
            let a = &atoms[index.sample(&mut rng)];
            Example::new(a.x, a.y)
        })
        .collect()
}

pub fn sample_marginal(d: &Distribution, m: usize, seed: u64) -> UnlabeledSample {
    sample(d, m, seed).into_iter().map(|e| e.x).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Atom;

    fn three_atoms() -> Distribution {
        Distribution::new(vec![
            Atom { x: 0, y: true, p: 0.5 },
            Atom { x: 1, y: false, p: 0.3 },
            Atom { x: 2, y: true, p: 0.2 },
        ])
        .unwrap()
    }

    #[test]
    fn empty_and_point_mass() {
        assert!(sample(&three_atoms(), 0, 3).is_empty());
        let s = sample(&Distribution::point_mass(4, true), 5, 9);
        assert_eq!(s, vec![Example::new(4, true); 5]);
    }

    #[test]
    fn reproducible_prefix_and_marginal_coupling() {
        let d = three_atoms();
        let a = sample(&d, 50, 11);
        assert_eq!(a, sample(&d, 50, 11));
        assert_eq!(&a[..20], &sample(&d, 20, 11)[..]);
        let xs: Vec<usize> = a.iter().map(|e| e.x).collect();
        assert_eq!(xs, sample_marginal(&d, 50, 11));
    }

    #[test]
    fn frequencies_within_three_sigma() {
        let d = three_atoms();
        let n = 100_000usize;
        let s = sample(&d, n, 2024);
        for a in d.atoms() {
            let count = s.iter().filter(|e| e.x == a.x && e.y == a.y).count() as f64;
            let sigma = (n as f64 * a.p * (1.0 - a.p)).sqrt();
            assert!(
                (count - n as f64 * a.p).abs() <= 3.0 * sigma,
                "atom {} count {count} vs expected {}",
                a.x,
                n as f64 * a.p
            );
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
    }
}
