//! Categorical and multinomial draws shared by the scenario models and the
//! bootstrap.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Index drawn from `probs` by inverse-CDF; assumes `probs` sums to one.
#[inline]
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    // Rounding left `u` above the accumulated mass.
    last_positive
}

/// Adds one `Multinomial(n, probs)` draw to `out` using conditional binomials.
pub fn add_multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R, out: &mut [u32]) {
    debug_assert_eq!(probs.len(), out.len());
    let mut remaining_n = n;
    let mut remaining_mass = 1.0f64;
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    for (i, &p) in probs.iter().enumerate() {
        if remaining_n == 0 {
            break;
        }
        if i == last {
            out[i] += remaining_n as u32;
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let conditional = (p / remaining_mass).clamp(0.0, 1.0);
        let draw = if conditional >= 1.0 {
            remaining_n
        } else {
            Binomial::new(remaining_n, conditional)
                .expect("conditional probability lies in [0, 1]")
                .sample(rng)
        };
        out[i] += draw as u32;
        remaining_n -= draw;
        remaining_mass -= p;
    }
}

/// `Multinomial(total, counts / total)` resample of a count vector.
pub fn resample_counts<R: Rng + ?Sized>(counts: &[u64], rng: &mut R) -> Vec<u64> {
    let total: u64 = counts.iter().sum();
    let mut out = vec![0u64; counts.len()];
    let mut remaining_n = total;
    let mut remaining_mass = total;
    for (i, &c) in counts.iter().enumerate() {
        if remaining_n == 0 || remaining_mass == 0 {
            break;
        }
        let draw = if c == remaining_mass {
            remaining_n
        } else if c == 0 {
            0
        } else {
            Binomial::new(remaining_n, c as f64 / remaining_mass as f64)
                .expect("conditional probability lies in [0, 1]")
                .sample(rng)
        };
        out[i] = draw;
        remaining_n -= draw;
        remaining_mass -= c;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;

    #[test]
    fn point_masses_are_deterministic() {
        let mut rng = StreamKey::new(1, 2).rng(0);
        let mut out = [0u32; 3];
        add_multinomial(17, &[0.0, 1.0, 0.0], &mut rng, &mut out);
        assert_eq!(out, [0, 17, 0]);
        assert_eq!(sample_categorical(&[0.0, 0.0, 1.0], &mut rng), 2);
    }

    #[test]
    fn multinomial_preserves_total() {
        let mut rng = StreamKey::new(3, 4).rng(0);
        for _ in 0..100 {
            let mut out = [0u32; 4];
            add_multinomial(250, &[0.1, 0.2, 0.3, 0.4], &mut rng, &mut out);
            assert_eq!(out.iter().sum::<u32>(), 250);
            let r = resample_counts(&[5, 0, 10, 1], &mut rng);
            assert_eq!(r.iter().sum::<u64>(), 16);
            assert_eq!(r[1], 0);
        }
    }
}
