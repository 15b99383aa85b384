//! Two-way softmax with temperature, and its Gumbel-perturbed variant.

use rand::Rng;

/// Lower clamp for the uniform draw feeding `-ln(-ln u)`.
pub const GUMBEL_EPS: f64 = 1e-12;

/// `(w0, w1)` with `w0 = sigmoid((a0 - a1) / temperature)` and `w0 + w1 == 1`.
///
/// The smaller weight is computed directly so it stays positive under
/// saturation; the larger one is its complement.
pub fn softmax_pair(a0: f64, a1: f64, temperature: f64) -> (f64, f64) {
    debug_assert!(temperature > 0.0);
    let z = (a0 - a1) / temperature;
    let e = (-z.abs()).exp();
    let small = e / (1.0 + e);
    let large = 1.0 - small;
    if z >= 0.0 {
        (large, small)
    } else {
        (small, large)
    }
}

/// `d w0 / d a0` for [`softmax_pair`]; `d w0 / d a1` is its negation.
pub fn pair_sensitivity(w0: f64, w1: f64, temperature: f64) -> f64 {
    w0 * w1 / temperature
}

pub fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>().clamp(GUMBEL_EPS, 1.0 - GUMBEL_EPS);
    -(-u.ln()).ln()
}

/// A soft Gumbel-softmax draw. The noise is kept so the weights can be
/// differentiated w.r.t. the raw scalars with the draw held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelDraw {
    pub g0: f64,
    pub g1: f64,
    pub w0: f64,
    pub w1: f64,
}

impl GumbelDraw {
    pub fn with_noise(a0: f64, a1: f64, temperature: f64, g0: f64, g1: f64) -> Self {
        let (w0, w1) = softmax_pair(a0 + g0, a1 + g1, temperature);
        Self { g0, g1, w0, w1 }
    }
}

pub fn gumbel_softmax_pair<R: Rng + ?Sized>(
    a0: f64,
    a1: f64,
    temperature: f64,
    rng: &mut R,
) -> GumbelDraw {
    let g0 = gumbel(rng);
    let g1 = gumbel(rng);
    GumbelDraw::with_noise(a0, a1, temperature, g0, g1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    #[test]
    fn symmetric_inputs() {
        assert_eq!(softmax_pair(0.0, 0.0, 3.0), (0.5, 0.5));
    }

    #[test]
    fn worked_temperature_example() {
        let (w0, w1) = softmax_pair(2.0, -1.0, 2.0);
        assert!((w0 - 0.82).abs() <= 0.005, "{w0}");
        assert!((w1 - 0.18).abs() <= 0.005, "{w1}");
    }

    #[test]
    fn saturation_stays_finite() {
        let (w0, w1) = softmax_pair(10.0, -10.0, 1.0);
        assert!(w0 > 0.999_999 && w1 > 0.0 && w1 < 1e-6);
        let (w0, w1) = softmax_pair(-1e4, 1e4, 1.0);
        assert!(w0.is_finite() && w1.is_finite());
        assert_eq!(w0 + w1, 1.0);
    }

    #[test]
    fn gumbel_is_replayable() {
        let a = gumbel_softmax_pair(0.3, -0.2, 2.0, &mut stream(11, &[]));
        let b = gumbel_softmax_pair(0.3, -0.2, 2.0, &mut stream(11, &[]));
        assert_eq!(a, b);
    }

    #[test]
    fn gumbel_symmetric_mean() {
        let mut rng = stream(5, &[]);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| gumbel_softmax_pair(0.0, 0.0, 1.0, &mut rng).w0)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn gumbel_saturates() {
        let mut rng = stream(6, &[]);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| gumbel_softmax_pair(100.0, 0.0, 1.0, &mut rng).w0 > 0.999)
            .count();
        assert!(hits as f64 / n as f64 >= 0.999);
    }

    proptest! {
        #[test]
        fn pair_sums_to_one_and_is_shift_invariant(
            a0 in -15.0f64..15.0, a1 in -15.0f64..15.0, c in -100.0f64..100.0, lam in 1.0f64..10.0,
        ) {
            let (w0, w1) = softmax_pair(a0, a1, lam);
            prop_assert_eq!(w0 + w1, 1.0);
            prop_assert!(w0 > 0.0 && w0 < 1.0 && w1 > 0.0 && w1 < 1.0);
            let (s0, s1) = softmax_pair(a0 + c, a1 + c, lam);
            prop_assert!((s0 - w0).abs() < 1e-12 && (s1 - w1).abs() < 1e-12);
        }
    }
}
