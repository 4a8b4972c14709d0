//! Symmetric two-state mutation kernel.

use crate::real::Real;

/// `Q_hg(t) = 1/2 + (1{h = g} - 1/2) exp(-theta t)`.
#[inline]
pub fn transition<R: Real>(h: u8, g: u8, t: R, theta: R) -> R {
    let half = R::of(0.5);
    let sign = if h == g { half } else { -half };
    half + sign * (-theta * t).exp()
}

/// Partial derivatives `(d/dt, d/dtheta)` of [`transition`].
#[inline]
pub fn transition_derivatives<R: Real>(h: u8, g: u8, t: R, theta: R) -> (R, R) {
    let half = R::of(0.5);
    let sign = if h == g { half } else { -half };
    let e = (-theta * t).exp();
    (-theta * sign * e, -t * sign * e)
}

/// Transition matrix `[[Q_00, Q_01], [Q_10, Q_11]]`.
#[inline]
pub fn matrix<R: Real>(t: R, theta: R) -> [[R; 2]; 2] {
    let half = R::of(0.5);
    let e = half * (-theta * t).exp();
    [[half + e, half - e], [half - e, half + e]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits() {
        assert_eq!(transition(0, 0, 0.0f64, 2.0), 1.0);
        assert_eq!(transition(0, 1, 0.0f64, 2.0), 0.0);
        assert!((transition(1, 0, 1e3f64, 2.0) - 0.5).abs() < 1e-15);
        let m = matrix(0.3f64, 1.7);
        for row in m {
            assert!((row[0] + row[1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let h = 1e-6;
        for (a, b) in [(0u8, 0u8), (0, 1)] {
            let (t, th) = (0.4f64, 1.3);
            let (dt, dth) = transition_derivatives(a, b, t, th);
            let fdt = (transition(a, b, t + h, th) - transition(a, b, t - h, th)) / (2.0 * h);
            let fdth = (transition(a, b, t, th + h) - transition(a, b, t, th - h)) / (2.0 * h);
            assert!((dt - fdt).abs() < 1e-8);
            assert!((dth - fdth).abs() < 1e-8);
        }
    }
}
