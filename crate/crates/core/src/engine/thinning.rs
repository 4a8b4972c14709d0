use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::real::Real;

/// Proposes the first event time of an inhomogeneous Poisson process with
/// intensity `rate(s)` on `[0, window)` by thinning a constant-rate process
/// with intensity `bound`.
///
/// A returned value `>= window` means "no event inside the window". `rate` is
/// only evaluated strictly inside the window; every evaluation is checked
/// against `bound` and an excess beyond the relative tolerance is an error.
pub fn next_flip<R, F, G>(coord: usize, bound: R, window: R, mut rate: F, rng: &mut G, evals: &mut u64) -> Result<R>
where
    R: Real,
    F: FnMut(R) -> R,
    G: Rng + ?Sized,
{
    if !bound.is_finite() || bound < R::zero() {
        return Err(Error::Numerical(format!(
            "thinning bound {bound} for coordinate {coord} is not a finite non-negative number"
        )));
    }
    if bound == R::zero() {
        return Ok(R::infinity());
    }
    let tol = R::bound_tolerance();
    let mut rho = R::zero();
    loop {
        let e: f64 = rng.sample(Exp1);
        rho += R::of(e) / bound;
        if rho >= window {
            return Ok(rho);
        }
        let lambda = rate(rho);
        *evals += 1;
        if lambda > bound * (R::one() + tol) || lambda.is_nan() {
            return Err(Error::BoundViolation {
                coord,
                rate: lambda.as_f64(),
                bound: bound.as_f64(),
            });
        }
        let u: f64 = rng.random();
        if R::of(u) * bound < lambda {
            return Ok(rho);
        }
    }
}
