//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key can also be given as a
//! command-line override in the same `key=value` form.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mh::{MhConfig, Preset};
use crate::theta::ThetaPrior;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Ism,
    Fsm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    Zigzag,
    Mh,
    Hybrid,
}

macro_rules! str_enum {
    ($ty:ty, $($var:path => $s:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($var => $s),+ })
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($var),)+
                    _ => Err(Error::config(format!("unknown value `{s}`, expected one of: {}", [$($s),+].join(", ")))),
                }
            }
        }
    };
}

str_enum!(Model, Model::Ism => "ism", Model::Fsm => "fsm");
str_enum!(Sampler, Sampler::Zigzag => "zigzag", Sampler::Mh => "mh", Sampler::Hybrid => "hybrid");

/// Parameters for simulating a dataset instead of reading one.
#[derive(Clone, Debug, PartialEq)]
pub struct SimSpec {
    pub n: usize,
    pub theta: f64,
    /// Number of sites; finite-sites model only.
    pub sites: usize,
    /// Fixed tree in merger notation, with `times`; a coalescent draw if absent.
    pub tree: Option<String>,
    pub times: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: Model,
    pub sampler: Sampler,
    pub data: Option<PathBuf>,
    pub simulate: Option<SimSpec>,
    /// Process time for zig-zag and hybrid runs.
    pub t_end: f64,
    /// Scans for MH runs.
    pub iterations: usize,
    /// Tuning scans before an MH run; 0 keeps the given scales.
    pub warmup: usize,
    pub seed: u64,
    pub chains: usize,
    pub guard: f64,
    pub max_increment: f64,
    pub kappa: f64,
    pub sigma_theta: f64,
    pub sigma_times: f64,
    pub preset: Option<Preset>,
    /// Speed of the theta coordinate; chosen by a pilot run when absent.
    pub theta_speed: Option<f64>,
    pub pilot_time: f64,
    /// Prior on theta; flat for the infinite-sites model and Gamma(2, 0.5)
    /// for the finite-sites model when absent.
    pub prior: Option<ThetaPrior>,
    pub grid: usize,
    pub out: PathBuf,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mh = MhConfig::default();
        Self {
            model: Model::Ism,
            sampler: Sampler::Zigzag,
            data: None,
            simulate: None,
            t_end: 1000.0,
            iterations: 10_000,
            warmup: 1000,
            seed: 1,
            chains: 1,
            guard: 4.0,
            max_increment: 1.0,
            kappa: mh.kappa,
            sigma_theta: mh.sigma_theta,
            sigma_times: mh.sigma_times,
            preset: None,
            theta_speed: None,
            pilot_time: 20.0,
            prior: None,
            grid: crate::diagnostics::DEFAULT_GRID,
            out: PathBuf::from("out"),
            parallel: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("cannot parse `{value}` for `{key}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

impl RunConfig {
    /// Parses a config file on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", k + 1)))?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    fn sim(&mut self) -> &mut SimSpec {
        self.simulate.get_or_insert(SimSpec {
            n: 10,
            theta: 2.0,
            sites: 10,
            tree: None,
            times: None,
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = parse(key, value)?,
            "sampler" => self.sampler = parse(key, value)?,
            "data" => self.data = Some(PathBuf::from(value)),
            "n" => self.sim().n = parse(key, value)?,
            "theta" => self.sim().theta = parse(key, value)?,
            "sites" => self.sim().sites = parse(key, value)?,
            "tree" => self.sim().tree = Some(value.to_string()),
            "times" => self.sim().times = Some(parse_list(key, value)?),
            "t_end" => self.t_end = parse(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "warmup" => self.warmup = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "chains" => self.chains = parse(key, value)?,
            "guard" => self.guard = parse(key, value)?,
            "max_increment" => self.max_increment = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "sigma_theta" => self.sigma_theta = parse(key, value)?,
            "sigma_times" => self.sigma_times = parse(key, value)?,
            "preset" => {
                let p: Preset = value.parse()?;
                let mh = match self.sampler {
                    Sampler::Hybrid => p.hybrid(),
                    _ => p.mh(),
                };
                self.sigma_theta = mh.sigma_theta;
                self.sigma_times = mh.sigma_times;
                if self.sampler == Sampler::Hybrid {
                    self.kappa = mh.kappa;
                }
                self.theta_speed = Some(p.theta_speed());
                self.preset = Some(p);
            }
            "theta_speed" => self.theta_speed = Some(parse(key, value)?),
            "pilot_time" => self.pilot_time = parse(key, value)?,
            "prior" => self.prior = Some(parse(key, value)?),
            "grid" => self.grid = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "parallel" => self.parallel = parse(key, value)?,
            _ => return Err(Error::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn theta_prior(&self) -> ThetaPrior {
        self.prior.unwrap_or(match self.model {
            Model::Ism => ThetaPrior::Flat,
            Model::Fsm => ThetaPrior::Gamma { shape: 2.0, rate: 0.5 },
        })
    }

    pub fn mh_config(&self) -> MhConfig {
        MhConfig {
            sigma_theta: self.sigma_theta,
            sigma_times: self.sigma_times,
            kappa: self.kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data, &self.simulate) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "give either a dataset path or a simulation spec, not both",
                ))
            }
            (None, None) => {
                return Err(Error::config(
                    "give a dataset path (data=) or a simulation spec (n=, theta=)",
                ))
            }
            _ => {}
        }
        if let Some(s) = &self.simulate {
            if s.n < 2 {
                return Err(Error::config("n must be at least 2"));
            }
            if !(s.theta >= 0.0 && s.theta.is_finite()) {
                return Err(Error::config("theta must be non-negative"));
            }
            if self.model == Model::Fsm && s.sites == 0 {
                return Err(Error::config("sites must be positive"));
            }
            if s.tree.is_some() != s.times.is_some() {
                return Err(Error::config("a fixed tree needs both tree= and times="));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("t_end must be positive"));
        }
        if self.iterations == 0 {
            return Err(Error::config("iterations must be positive"));
        }
        if self.chains == 0 {
            return Err(Error::config("chains must be positive"));
        }
        if !(self.guard > 0.0 && self.max_increment > 0.0) {
            return Err(Error::config("guard and max_increment must be positive"));
        }
        if let Some(v) = self.theta_speed {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config("theta_speed must be positive"));
            }
        }
        if !(self.pilot_time > 0.0) {
            return Err(Error::config("pilot_time must be positive"));
        }
        if self.grid < crate::diagnostics::MIN_SAMPLES {
            return Err(Error::config(format!(
                "grid must be at least {}",
                crate::diagnostics::MIN_SAMPLES
            )));
        }
        self.mh_config().validate()
    }

    /// Serializes every field; [`RunConfig::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut lines = vec![format!("model = {}", self.model), format!("sampler = {}", self.sampler)];
        if let Some(d) = &self.data {
            lines.push(format!("data = {}", d.display()));
        }
        if let Some(s) = &self.simulate {
            lines.push(format!("n = {}", s.n));
            lines.push(format!("theta = {}", s.theta));
            lines.push(format!("sites = {}", s.sites));
            if let Some(t) = &s.tree {
                lines.push(format!("tree = {t}"));
            }
            if let Some(t) = &s.times {
                let v: Vec<String> = t.iter().map(|x| x.to_string()).collect();
                lines.push(format!("times = {}", v.join(",")));
            }
        }
        lines.extend([
            format!("t_end = {}", self.t_end),
            format!("iterations = {}", self.iterations),
            format!("warmup = {}", self.warmup),
            format!("seed = {}", self.seed),
            format!("chains = {}", self.chains),
            format!("guard = {}", self.guard),
            format!("max_increment = {}", self.max_increment),
        ]);
        // a preset overwrites scales, so it goes first and explicit values follow
        if let Some(p) = self.preset {
            lines.push(format!("preset = {p}"));
        }
        lines.extend([
            format!("kappa = {}", self.kappa),
            format!("sigma_theta = {}", self.sigma_theta),
            format!("sigma_times = {}", self.sigma_times),
        ]);
        if let Some(v) = self.theta_speed {
            lines.push(format!("theta_speed = {v}"));
        }
        lines.push(format!("pilot_time = {}", self.pilot_time));
        if let Some(p) = self.prior {
            lines.push(format!("prior = {p}"));
        }
        lines.extend([
            format!("grid = {}", self.grid),
            format!("out = {}", self.out.display()),
            format!("parallel = {}", self.parallel),
        ]);
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut c = RunConfig::default();
        for kv in [
            "model=fsm",
            "sampler=hybrid",
            "n=8",
            "sites=10",
            "theta=2.5",
            "tree=({1,2},{{1,2},3})",
            "times=0.1,0.25",
            "preset=fsm-default",
            "sigma_theta=3.3",
            "prior=gamma:2:0.5",
            "chains=3",
            "parallel=true",
        ] {
            c.set_pair(kv).unwrap();
        }
        let back = RunConfig::parse(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.sigma_theta, 3.3);
        assert_eq!(back.kappa, 100.0);
    }

    #[test]
    fn validation() {
        let mut c = RunConfig::default();
        assert!(c.validate().is_err());
        c.set("n", "5").unwrap();
        c.validate().unwrap();
        c.set("data", "x.txt").unwrap();
        assert!(c.validate().is_err());
        assert!(c.set("bogus", "1").is_err());
        assert!(c.set("sampler", "gibbs").is_err());
        assert!(RunConfig::parse("no equals sign").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = RunConfig::parse("# a run\n\nmodel = ism # trailing\nn = 4\n").unwrap();
        assert_eq!(c.simulate.unwrap().n, 4);
    }
}
