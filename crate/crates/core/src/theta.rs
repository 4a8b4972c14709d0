//! Priors for the mutation rate.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::real::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ThetaPrior {
    /// Improper flat density on `(0, inf)`.
    #[default]
    Flat,
    /// Gamma density with the given shape and rate.
    Gamma { shape: f64, rate: f64 },
}

impl ThetaPrior {
    /// Log density up to a constant; `-inf` for `theta < 0`.
    pub fn log_density<R: Real>(&self, theta: R) -> R {
        if theta < R::zero() {
            return R::neg_infinity();
        }
        match *self {
            ThetaPrior::Flat => R::zero(),
            ThetaPrior::Gamma { shape, rate } => {
                let a1 = R::of(shape - 1.0);
                let tail = -R::of(rate) * theta;
                if a1 == R::zero() {
                    tail
                } else {
                    a1 * theta.ln() + tail
                }
            }
        }
    }

    /// Derivative of the log density.
    pub fn grad<R: Real>(&self, theta: R) -> R {
        match *self {
            ThetaPrior::Flat => R::zero(),
            ThetaPrior::Gamma { shape, rate } => R::of(shape - 1.0) / theta - R::of(rate),
        }
    }

    /// Infimum and supremum of the derivative over `[lo, hi]`, `0 < lo <= hi`.
    /// The derivative is monotone, so the extremes sit at the endpoints.
    pub fn grad_range<R: Real>(&self, lo: R, hi: R) -> (R, R) {
        let (a, b) = (self.grad(lo), self.grad(hi));
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

impl fmt::Display for ThetaPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaPrior::Flat => f.write_str("flat"),
            ThetaPrior::Gamma { shape, rate } => write!(f, "gamma:{shape}:{rate}"),
        }
    }
}

/// Parses `flat` or `gamma:<shape>:<rate>`.
impl FromStr for ThetaPrior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::config(format!("unknown theta prior `{s}` (use flat or gamma:<shape>:<rate>)"));
        if s == "flat" {
            return Ok(ThetaPrior::Flat);
        }
        let rest = s.strip_prefix("gamma:").ok_or_else(bad)?;
        let (a, b) = rest.split_once(':').ok_or_else(bad)?;
        let shape: f64 = a.parse().map_err(|_| bad())?;
        let rate: f64 = b.parse().map_err(|_| bad())?;
        if !(shape > 0.0 && rate > 0.0) {
            return Err(bad());
        }
        Ok(ThetaPrior::Gamma { shape, rate })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_gradient_matches_differences() {
        let p = ThetaPrior::Gamma { shape: 2.5, rate: 0.7 };
        for &x in &[0.1f64, 1.0, 4.0] {
            let h = 1e-6;
            let fd = (p.log_density(x + h) - p.log_density(x - h)) / (2.0 * h);
            assert!((fd - p.grad(x)).abs() < 1e-7);
        }
        let (lo, hi) = p.grad_range(0.5f64, 2.0);
        assert!(lo <= p.grad(1.0) && p.grad(1.0) <= hi);
    }

    #[test]
    fn parse_round_trip() {
        for p in [ThetaPrior::Flat, ThetaPrior::Gamma { shape: 2.0, rate: 0.5 }] {
            assert_eq!(p.to_string().parse::<ThetaPrior>().unwrap(), p);
        }
        assert!("gamma:1".parse::<ThetaPrior>().is_err());
        assert!("gamma:-1:2".parse::<ThetaPrior>().is_err());
    }
}
