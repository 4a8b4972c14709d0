//! Run orchestration behind the command-line tool: datasets, chains, output
//! files and comparison reports.

mod config;

pub use config::{Model, RunConfig, Sampler, SimSpec};

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::diagnostics::{compare_report, tree_height, MethodSummary, SummaryReport};
use crate::engine::csv::{coord_names, read_trace};
use crate::engine::{
    simulate_with, stream_rng, CsvRecorder, Functional, GridRecorder, HybridState, MhMoveKind, Pure, RunStats,
    SimOptions, SimRng,
};
use crate::error::{Error, Result};
use crate::fsm::{simulate_fsm_data, FsmDataset, FsmTarget};
use crate::ism::{simulate_ism_data, IsmDataset, IsmTarget};
use crate::mh::{run_mh, HybridMoves, MhStats};
use crate::tau::{RankedTopology, TreeTarget};

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Ism(IsmDataset),
    Fsm(FsmDataset),
}

impl Dataset {
    /// Reads either format, dispatching on the `model=` header field.
    pub fn parse(text: &str) -> Result<Self> {
        let header = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        if header.split_whitespace().any(|f| f == "model=fsm") {
            FsmDataset::parse(text).map(Dataset::Fsm)
        } else if header.split_whitespace().any(|f| f == "model=ism") {
            IsmDataset::parse(text).map(Dataset::Ism)
        } else {
            Err(Error::data("dataset header must declare model=ism or model=fsm"))
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Dataset::Ism(d) => d.to_text(),
            Dataset::Fsm(d) => d.to_text(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::data(format!("cannot read dataset {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn model(&self) -> Model {
        match self {
            Dataset::Ism(_) => Model::Ism,
            Dataset::Fsm(_) => Model::Fsm,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Dataset::Ism(d) => d.n(),
            Dataset::Fsm(d) => d.n(),
        }
    }
}

/// Simulates a dataset from the config's simulation spec, on a fixed tree or
/// a coalescent draw seeded by `seed`.
pub fn simulate_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let spec = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| Error::config("no simulation spec (n=, theta=) given"))?;
    let mut rng = stream_rng(cfg.seed, u64::MAX);
    let (topo, times) = match (&spec.tree, &spec.times) {
        (Some(tree), Some(times)) => {
            let topo = RankedTopology::parse(spec.n, tree).map_err(|e| Error::config(e.to_string()))?;
            if times.len() != spec.n - 1 || times.iter().any(|&t| !(t > 0.0)) {
                return Err(Error::config(format!("times must be {} positive values", spec.n - 1)));
            }
            (topo, times.clone())
        }
        _ => RankedTopology::simulate_coalescent(spec.n, &mut rng)?,
    };
    Ok(match cfg.model {
        Model::Ism => Dataset::Ism(simulate_ism_data(&topo, &times, spec.theta, &mut rng)?),
        Model::Fsm => Dataset::Fsm(simulate_fsm_data(&topo, &times, spec.theta, spec.sites, &mut rng)?),
    })
}

pub fn cmd_simulate_data(cfg: &RunConfig, out: &Path) -> Result<Dataset> {
    let data = simulate_dataset(cfg)?;
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    data.save(out)?;
    Ok(data)
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let data = match &cfg.data {
        Some(p) => Dataset::load(p)?,
        None => simulate_dataset(cfg)?,
    };
    if data.model() != cfg.model {
        return Err(Error::config(format!(
            "dataset is for model {} but the run asks for {}",
            data.model(),
            cfg.model
        )));
    }
    Ok(data)
}

/// Outcome of one chain.
#[derive(Clone, Debug)]
pub struct ChainResult {
    pub chain: usize,
    pub seed: u64,
    pub theta_speed: f64,
    pub summary: MethodSummary,
    pub trace_path: PathBuf,
    /// Extra counters written next to the trace.
    pub meta: BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub chains: Vec<ChainResult>,
    pub report: SummaryReport,
}

type InitFn<'a, T> =
    dyn Fn(&mut SimRng, f64) -> Result<HybridState<<T as crate::engine::TargetModel<f64>>::Mode, f64>> + Sync + 'a;

fn functionals<'a, M>(n: usize) -> Vec<Functional<'a, M, f64>> {
    vec![
        Box::new(move |_: &M, c: &[f64]| c[n - 1]),
        Box::new(move |_: &M, c: &[f64]| tree_height(c, n)),
    ]
}

fn stats_events(s: &RunStats, mh: Option<&MhStats>) -> BTreeMap<String, u64> {
    let mut m = BTreeMap::new();
    m.insert("flip".into(), s.flips);
    m.insert("boundary_cross".into(), s.boundary_crosses);
    m.insert("reflect".into(), s.reflects);
    m.insert("refresh".into(), s.refreshes);
    if let Some(mh) = mh {
        for (k, kind) in [MhMoveKind::Theta, MhMoveKind::Times, MhMoveKind::Spr]
            .into_iter()
            .enumerate()
        {
            if mh.proposed[k] > 0 {
                m.insert(format!("mh_{}", kind.as_str()), mh.proposed[k]);
            }
        }
    }
    m
}

fn mh_meta(meta: &mut BTreeMap<String, String>, stats: &MhStats) {
    for kind in [MhMoveKind::Theta, MhMoveKind::Times, MhMoveKind::Spr] {
        if let Some(a) = stats.acceptance(kind) {
            meta.insert(format!("acceptance_{}", kind.as_str()), format!("{a}"));
        }
    }
}

/// Pilot rule for the theta speed: a short zig-zag run at unit theta speed,
/// then twice the pilot's posterior mean of theta.
fn pilot_speed<T: TreeTarget<f64>>(target: &T, init: &InitFn<'_, T>, cfg: &RunConfig, seed: u64) -> Result<f64> {
    let mut rng = stream_rng(seed, u64::MAX - 1);
    let start = init(&mut rng, 1.0)?;
    let n = target.leaves();
    let mut grid = GridRecorder::new(cfg.pilot_time, 2, functionals::<T::Mode>(n));
    let opts = SimOptions { parallel: cfg.parallel };
    simulate_with(target, start, cfg.pilot_time, seed ^ 0x5eed, opts, &mut Pure, &mut grid)?;
    let mean = grid.means()[0];
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Numerical(format!("pilot run gave mean theta {mean}")));
    }
    Ok(2.0 * mean)
}

fn run_chain<T: TreeTarget<f64>>(
    target: &T,
    init: &InitFn<'_, T>,
    cfg: &RunConfig,
    chain: usize,
) -> Result<ChainResult> {
    let n = target.leaves();
    let seed = cfg.seed.wrapping_add(chain as u64);
    let theta_speed = match (cfg.theta_speed, cfg.sampler) {
        (Some(v), _) => v,
        (None, Sampler::Mh) => 1.0,
        (None, _) => pilot_speed(target, init, cfg, seed)?,
    };
    let mut rng = stream_rng(seed, u64::MAX - 2);
    let start = init(&mut rng, theta_speed)?;
    let names = coord_names(n - 1, true);
    let trace_path = cfg.out.join(format!("chain{chain}.csv"));
    let file = BufWriter::new(File::create(&trace_path)?);
    let csv = CsvRecorder::new(file, &names)?;
    let opts = SimOptions { parallel: cfg.parallel };
    let mut meta = BTreeMap::new();
    meta.insert("chain".to_string(), chain.to_string());
    meta.insert("seed".to_string(), seed.to_string());
    meta.insert("sampler".to_string(), cfg.sampler.to_string());
    meta.insert("model".to_string(), cfg.model.to_string());
    meta.insert("theta_speed".to_string(), format!("{theta_speed}"));

    let clock = Instant::now();
    let (end, events, csv, grid) = match cfg.sampler {
        Sampler::Zigzag | Sampler::Hybrid => {
            let grid = GridRecorder::new(cfg.t_end, cfg.grid, functionals::<T::Mode>(n));
            let mut rec = (csv, grid);
            let (stats, mh) = if cfg.sampler == Sampler::Hybrid {
                let mut moves = HybridMoves::new(cfg.kappa, cfg.sigma_theta)?;
                let (_, stats) = simulate_with(target, start, cfg.t_end, seed, opts, &mut moves, &mut rec)?;
                (stats, Some(moves.stats))
            } else {
                let (_, stats) = simulate_with(target, start, cfg.t_end, seed, opts, &mut Pure, &mut rec)?;
                (stats, None)
            };
            meta.insert("rate_evals".into(), stats.rate_evals.to_string());
            meta.insert("bound_evals".into(), stats.bound_evals.to_string());
            meta.insert("windows".into(), stats.windows.to_string());
            if let Some(mh) = &mh {
                mh_meta(&mut meta, mh);
            }
            (cfg.t_end, stats_events(&stats, mh.as_ref()), rec.0, rec.1)
        }
        Sampler::Mh => {
            let end = cfg.iterations as f64;
            let grid = GridRecorder::new(end, cfg.grid, functionals::<T::Mode>(n));
            let mut rec = (csv, grid);
            let run = run_mh(
                target,
                start,
                cfg.iterations,
                cfg.warmup,
                cfg.mh_config(),
                seed,
                &mut rec,
            )?;
            mh_meta(&mut meta, &run.stats);
            meta.insert("sigma_theta".into(), format!("{}", run.config.sigma_theta));
            meta.insert("sigma_times".into(), format!("{}", run.config.sigma_times));
            (end, stats_events(&RunStats::default(), Some(&run.stats)), rec.0, rec.1)
        }
    };
    let wall = clock.elapsed().as_secs_f64();
    csv.finish_result()?;
    meta.insert("end_time".into(), format!("{end}"));
    meta.insert("wall_seconds".into(), format!("{wall}"));

    let label = format!("{}#{chain}", cfg.sampler);
    meta.insert("method".into(), label.clone());
    let samples = vec![
        ("theta".to_string(), grid.samples[0].clone()),
        ("H".to_string(), grid.samples[1].clone()),
    ];
    let summary = MethodSummary::from_samples(&label, &samples, wall, events)?;
    write_meta(&trace_path.with_extension("meta"), &meta)?;
    Ok(ChainResult {
        chain,
        seed,
        theta_speed,
        summary,
        trace_path,
        meta,
    })
}

fn write_meta(path: &Path, meta: &BTreeMap<String, String>) -> Result<()> {
    let text: String = meta.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
    fs::write(path, text)?;
    Ok(())
}

fn read_meta(path: &Path) -> BTreeMap<String, String> {
    fs::read_to_string(path)
        .map(|t| {
            t.lines()
                .filter_map(|l| l.split_once('='))
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .collect()
        })
        .unwrap_or_default()
}

fn run_all<T: TreeTarget<f64>>(target: &T, init: &InitFn<'_, T>, cfg: &RunConfig) -> Result<Vec<ChainResult>> {
    (0..cfg.chains)
        .into_par_iter()
        .map(|k| run_chain(target, init, cfg, k))
        .collect()
}

/// Runs all configured chains in parallel; writes `chain<k>.csv`,
/// `chain<k>.meta`, `config.txt`, `report.txt` and `report.csv` under `out`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let data = load_dataset(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.txt"), cfg.to_text())?;
    let prior = cfg.theta_prior();
    let chains = match data {
        Dataset::Ism(d) => {
            let target = IsmTarget::new(d)
                .with_prior(prior)
                .with_guard(cfg.guard)
                .with_max_increment(cfg.max_increment);
            let init = |rng: &mut SimRng, v: f64| target.initial_state(rng, 1000, v);
            run_all(&target, &init, cfg)?
        }
        Dataset::Fsm(d) => {
            let target = FsmTarget::new(d)?
                .with_prior(prior)
                .with_guard(cfg.guard)
                .with_max_increment(cfg.max_increment);
            let init = |rng: &mut SimRng, v: f64| target.initial_state(rng, v);
            run_all(&target, &init, cfg)?
        }
    };
    let report = compare_report(chains.iter().map(|c| c.summary.clone()).collect());
    fs::write(cfg.out.join("report.txt"), report.to_text())?;
    fs::write(cfg.out.join("report.csv"), report.to_csv()?)?;
    Ok(RunOutcome { chains, report })
}

/// Comparison table over trace files. The method label and wall time come
/// from the `.meta` file next to each trace when present.
pub fn cmd_report(paths: &[PathBuf], grid: usize) -> Result<SummaryReport> {
    if paths.is_empty() {
        return Err(Error::config("report needs at least one trace file"));
    }
    let mut rows = Vec::with_capacity(paths.len());
    for p in paths {
        let file = File::open(p).map_err(|e| Error::data(format!("cannot open trace {}: {e}", p.display())))?;
        let (names, trace) = read_trace(std::io::BufReader::new(file))?;
        let meta = read_meta(&p.with_extension("meta"));
        let label = meta.get("method").cloned().unwrap_or_else(|| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string())
        });
        let wall: f64 = meta.get("wall_seconds").and_then(|v| v.parse().ok()).unwrap_or(0.0);
        let holding: Vec<usize> = (0..names.len()).filter(|&j| names[j].starts_with("t_")).collect();
        let theta = names.iter().position(|n| n == "theta");
        let states = trace.discretize(grid);
        let mut samples = Vec::new();
        if let Some(j) = theta {
            samples.push(("theta".to_string(), states.iter().map(|s| s.coords[j]).collect()));
        }
        samples.push((
            "H".to_string(),
            states
                .iter()
                .map(|s| holding.iter().map(|&j| s.coords[j]).sum())
                .collect(),
        ));
        let events = crate::diagnostics::event_counts(&trace);
        rows.push(MethodSummary::from_samples(&label, &samples, wall, events)?);
    }
    Ok(compare_report(rows))
}
