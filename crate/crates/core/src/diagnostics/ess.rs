use crate::error::{Error, Result};

/// Batch-means effective sample size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EssEstimate {
    pub ess: f64,
    pub samples: usize,
    pub batch_size: usize,
    /// Sample variance of the input.
    pub variance: f64,
    /// All samples equal; `ess` is then reported as the sample count.
    pub degenerate: bool,
    /// Long-run variance estimates from batch sizes `sqrt(N)` and `N^(2/3)`
    /// differ by more than a factor of three.
    pub unstable: bool,
}

impl EssEstimate {
    /// Whether the estimate should not be trusted.
    pub fn flagged(&self) -> bool {
        self.degenerate || self.unstable
    }
}

pub const MIN_SAMPLES: usize = 100;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Long-run variance `b * Var(batch means)` using the leading `N / b` full batches.
fn long_run_variance(x: &[f64], b: usize) -> f64 {
    let k = x.len() / b;
    let means: Vec<f64> = x[..k * b].chunks(b).map(mean).collect();
    let m = mean(&means);
    b as f64 * variance(&means, m)
}

/// ESS = N * s^2 / (b * Var(batch means)) with batch size `b = floor(sqrt(N))`.
pub fn ess(samples: &[f64]) -> Result<EssEstimate> {
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::config(format!(
            "ESS needs at least {MIN_SAMPLES} samples, got {n}"
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite sample in ESS input".into()));
    }
    let m = mean(samples);
    let s2 = variance(samples, m);
    let b = (n as f64).sqrt().floor() as usize;
    if !(s2 > 0.0) {
        return Ok(EssEstimate {
            ess: n as f64,
            samples: n,
            batch_size: b,
            variance: 0.0,
            degenerate: true,
            unstable: false,
        });
    }
    let lrv = long_run_variance(samples, b);
    let b2 = ((n as f64).powf(2.0 / 3.0).floor() as usize).min(n / 2);
    let lrv2 = long_run_variance(samples, b2);
    let ratio = lrv2 / lrv;
    let unstable = !(ratio.is_finite() && (1.0 / 3.0..=3.0).contains(&ratio));
    let ess = if lrv > 0.0 { n as f64 * s2 / lrv } else { n as f64 };
    Ok(EssEstimate {
        ess: ess.min(n as f64),
        samples: n,
        batch_size: b,
        variance: s2,
        degenerate: lrv <= 0.0,
        unstable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn iid_normals() {
        let mut rng = stream_rng(1, 0);
        let x: Vec<f64> = (0..100_000).map(|_| rng.sample(StandardNormal)).collect();
        let e = ess(&x).unwrap();
        assert!((0.8..=1.2).contains(&(e.ess / 1e5)), "{}", e.ess);
        assert!(!e.flagged());
    }

    #[test]
    fn constant_and_trending_chains() {
        let e = ess(&[2.0; 500]).unwrap();
        assert!(e.degenerate && e.ess == 500.0);
        let ramp: Vec<f64> = (0..10_000).map(|k| k as f64).collect();
        let e = ess(&ramp).unwrap();
        assert!(e.ess < 100.0);
        assert!(ess(&[1.0; 10]).is_err());
    }
}
