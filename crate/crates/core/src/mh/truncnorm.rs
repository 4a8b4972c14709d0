//! Normal distribution truncated below.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use statrs::function::erf::erfc;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln P(Z > z)` for a standard normal `Z`, accurate far into the upper tail.
pub fn log_upper_tail(z: f64) -> f64 {
    if z < 30.0 {
        (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln()
    } else {
        // asymptotic series of the Mills ratio
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
        -0.5 * z2 - z.ln() - LN_SQRT_2PI + series.ln()
    }
}

/// Log density at `x` of `N(mean, sd^2)` conditioned on exceeding `lower`.
pub fn log_density(x: f64, mean: f64, sd: f64, lower: f64) -> f64 {
    if !(x > lower) {
        return f64::NEG_INFINITY;
    }
    let z = (x - mean) / sd;
    -0.5 * z * z - LN_SQRT_2PI - sd.ln() - log_upper_tail((lower - mean) / sd)
}

/// Draws from `N(mean, sd^2)` conditioned on exceeding `lower`.
///
/// Plain rejection when the bound is below the mean plus half a standard
/// deviation, else the exponential proposal of Robert (1995).
pub fn sample<G: Rng + ?Sized>(rng: &mut G, mean: f64, sd: f64, lower: f64) -> f64 {
    let a = (lower - mean) / sd;
    let z = if a < 0.5 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z > a {
                break z;
            }
        }
    } else {
        let lam = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e: f64 = rng.sample(Exp1);
            let z = a + e / lam;
            let u: f64 = rng.random();
            if u.ln() < -0.5 * (z - lam) * (z - lam) {
                break z;
            }
        }
    };
    // guard against the bound itself after rounding
    (mean + sd * z).max(next_up(lower))
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE
    } else {
        x + x.abs() * f64::EPSILON
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::stream_rng;

    #[test]
    fn tail_is_continuous_at_the_switch() {
        let a = (0.5 * erfc(30.0 / std::f64::consts::SQRT_2)).ln();
        let b = log_upper_tail(30.0 + 1e-12);
        assert!((a - b).abs() < 1e-9 * a.abs());
        assert!((log_upper_tail(0.0) - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn density_integrates_to_one() {
        let (m, s, lo) = (0.3, 0.7, 1.1);
        let steps = 200_000;
        let h = 10.0 * s / steps as f64;
        let total: f64 = (0..steps)
            .map(|k| log_density(lo + (k as f64 + 0.5) * h, m, s, lo).exp() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sample_mean_matches_closed_form() {
        let mut rng = stream_rng(1, 0);
        for (m, s, lo) in [(0.0, 1.0, -1.0), (0.0, 1.0, 2.0), (1.0, 0.1, 1.8)] {
            let k = 50_000;
            let mean = (0..k).map(|_| sample(&mut rng, m, s, lo)).sum::<f64>() / k as f64;
            // E[X] = m + s phi(a) / (1 - Phi(a))
            let a: f64 = (lo - m) / s;
            let hazard = (-0.5 * a * a - LN_SQRT_2PI - log_upper_tail(a)).exp();
            let expect = m + s * hazard;
            assert!((mean - expect).abs() < 0.02 * s, "{mean} vs {expect}");
        }
    }
}
