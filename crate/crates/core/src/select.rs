//! Argmax with tolerance-based ties broken uniformly at random.

use rand::Rng;

/// Relative tolerance under which two criterion values count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Gains at or below this are treated as zero.
pub const GAIN_TOLERANCE: f64 = 1e-12;

/// Absolute floor on the tie window, so rounding noise around a zero maximum
/// still produces ties.
const TIE_FLOOR: f64 = 1e-15;

/// Positions whose value is within tolerance of the maximum.
pub fn tied_maxima(values: &[f64]) -> Vec<usize> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return (0..values.len()).filter(|&k| values[k] == best).collect();
    }
    let cutoff = best - (TIE_TOLERANCE * best.abs()).max(TIE_FLOOR);
    (0..values.len()).filter(|&k| values[k] >= cutoff).collect()
}

/// Uniform pick among the tied maxima of `values`.
pub fn argmax_random<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> Option<usize> {
    let ties = tied_maxima(values);
    match ties.len() {
        0 => None,
        1 => Some(ties[0]),
        k => Some(ties[rng.random_range(0..k)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedSpec;

    #[test]
    fn near_equal_values_tie() {
        assert_eq!(tied_maxima(&[0.5, 0.5 * (1.0 - 1e-14), 0.49]), vec![0, 1]);
        assert_eq!(tied_maxima(&[0.0, 1e-17, -1e-17]), vec![0, 1, 2]);
        assert_eq!(tied_maxima(&[]), Vec::<usize>::new());
    }

    #[test]
    fn random_pick_is_uniform_over_ties() {
        let mut rng = SeedSpec::new(5).rng("ties", 0);
        let mut counts = [0u32; 3];
        for _ in 0..30_000 {
            counts[argmax_random(&[1.0, 0.0, 1.0, 1.0][1..], &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[0], 0);
        assert!(counts[1].abs_diff(15_000) < 600);
    }
}
