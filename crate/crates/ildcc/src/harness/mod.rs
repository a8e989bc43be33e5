//! Experiment runner: builds the instance, runs the two-phase deployment
//! and the random baseline across network sizes and trials, and derives
//! the distance, energy, and lifetime tables.
//!
//! Orchestration is plain `f64`; the numeric core underneath stays
//! generic.

mod outputs;

pub use outputs::{
    ensure_dir, read_results, write_aggregates, write_convergence, write_plot_series,
    write_results, write_timings, write_traffic, AggregateRow, TimingRow, TrafficRow, TrialResult,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abc::{
    optimize, ColonyConfig, GenerationStat, NeighborStep, PlacementProblem, PlacementVector,
};
use crate::backbone::{build_backbone, Backbone};
use crate::energy::{lifetime_rounds, EnergyParams};
use crate::error::{Error, Result};
use crate::spectral::average_distance;
use crate::topology::{GridInstance, NodePlacement, NodeRole};

/// Which deployment produced a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Two-phase deployment: greedy backbone plus colony placement.
    Ildcc,
    /// Same backbone, second phase sampled uniformly at random and
    /// accepted on the connectivity floor alone.
    Sp3d,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ildcc => "ildcc",
            Method::Sp3d => "sp3d",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Method::Ildcc => 0x11,
            Method::Sp3d => 0x22,
        }
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the per-trial generator seed from the master seed and the
/// trial coordinates.
pub fn trial_seed(master: u64, method: Method, n: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master ^ method.tag()) ^ n as u64) ^ trial as u64)
}

/// Deterministic instance builder: the devices go exactly where listed
/// and the candidate set is the `n_candidates` free vertices nearest to
/// the anchor points, nearest first, vertex order on ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub dims: [usize; 3],
    /// Grid pitch in meters; omitted means the radio range.
    #[serde(default)]
    pub cell_edge: Option<f64>,
    pub range_r: f64,
    pub base_station: [usize; 3],
    pub cluster_heads: Vec<[usize; 3]>,
    pub n_candidates: usize,
    /// Attraction points for the candidate cloud; empty means the
    /// devices themselves.
    #[serde(default)]
    pub anchors: Vec<[usize; 3]>,
}

pub fn generate_instance(p: &GeneratorParams) -> Result<GridInstance<f64>> {
    let cell_edge = p.cell_edge.unwrap_or(p.range_r);
    let mut nodes = vec![NodePlacement { vertex: p.base_station, role: NodeRole::BaseStation }];
    nodes.extend(p.cluster_heads.iter().map(|&vertex| NodePlacement {
        vertex,
        role: NodeRole::ClusterHead,
    }));
    let mut inst = GridInstance {
        dims: p.dims,
        cell_edge,
        range_r: p.range_r,
        nodes,
        candidates: vec![],
    };
    inst.validate()?;

    let spec = inst.spec();
    let anchors: Vec<[usize; 3]> = if p.anchors.is_empty() {
        inst.occupied()
    } else {
        for &a in &p.anchors {
            if !spec.contains(a) {
                return Err(Error::VertexOutOfBounds(a[0], a[1], a[2]));
            }
        }
        p.anchors.clone()
    };
    let taken = inst.occupied();
    let mut scored: Vec<(f64, usize)> = Vec::new();
    for id in 0..spec.vertex_count() {
        let v = spec.vertex(id);
        if taken.contains(&v) {
            continue;
        }
        let score = anchors
            .iter()
            .map(|&a| spec.distance(v, a).expect("both vertices are in bounds"))
            .fold(f64::INFINITY, f64::min);
        scored.push((score, id));
    }
    if scored.len() < p.n_candidates {
        return Err(Error::InvalidInstance(format!(
            "grid has {} free vertices, {} candidates requested",
            scored.len(),
            p.n_candidates
        )));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut candidates: Vec<[usize; 3]> =
        scored[..p.n_candidates].iter().map(|&(_, id)| spec.vertex(id)).collect();
    candidates.sort_unstable();
    inst.candidates = candidates;
    inst.validate()?;
    Ok(inst)
}

/// Where the experiment instance comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    File { path: PathBuf },
    Generator(GeneratorParams),
}

impl InstanceSource {
    pub fn materialize(&self) -> Result<GridInstance<f64>> {
        let inst = match self {
            InstanceSource::File { path } => GridInstance::load(path)?,
            InstanceSource::Generator(p) => generate_instance(p)?,
        };
        inst.validate()?;
        Ok(inst)
    }
}

fn default_true() -> bool {
    true
}

/// Colony knobs shared by every trial; budget, window, and seed are
/// filled in per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColonySettings {
    pub colony_size: usize,
    pub generations: usize,
    #[serde(default)]
    pub abandonment_limit: usize,
    #[serde(default)]
    pub neighbor_step: NeighborStep,
    /// Decode exactly the budget instead of thresholding, so every
    /// trial deploys the full relay allowance.
    #[serde(default = "default_true")]
    pub exact_budget: bool,
}

fn default_delta_mu() -> f64 {
    0.1
}

fn default_mu_norm() -> f64 {
    1.0
}

fn default_baseline_attempts() -> usize {
    400
}

/// Complete experiment description, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    pub energy: EnergyParams<f64>,
    pub colony: ColonySettings,
    pub lambda2_min: f64,
    pub lambda2_max: f64,
    /// Total deployed-device counts to sweep.
    pub network_sizes: Vec<usize>,
    pub trials: usize,
    #[serde(default = "default_delta_mu")]
    pub delta_mu: f64,
    /// Receive-traffic multipliers for the lifetime-versus-load table.
    pub traffic_levels: Vec<f64>,
    pub master_seed: u64,
    #[serde(default)]
    pub baseline: bool,
    #[serde(default = "default_baseline_attempts")]
    pub baseline_attempts: usize,
    /// Meters of widened mean distance per meter of transmit distance.
    pub energy_distance_norm: f64,
    #[serde(default = "default_mu_norm")]
    pub mu_norm: f64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.energy.validate()?;
        self.dummy_colony(0, 0).validate()?;
        if self.network_sizes.is_empty() {
            return Err(Error::Config("network_sizes must not be empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.colony.generations == 0 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        if !(self.delta_mu >= 0.0) {
            return Err(Error::Config("delta_mu must be non-negative".into()));
        }
        if self.traffic_levels.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Config("traffic_levels must be positive".into()));
        }
        if self.baseline && self.baseline_attempts == 0 {
            return Err(Error::Config("baseline_attempts must be at least 1".into()));
        }
        if !(self.energy_distance_norm > 0.0) {
            return Err(Error::Config("energy_distance_norm must be positive".into()));
        }
        if !(self.mu_norm > 0.0) {
            return Err(Error::Config("mu_norm must be positive".into()));
        }
        Ok(())
    }

    fn dummy_colony(&self, budget: usize, seed: u64) -> ColonyConfig<f64> {
        ColonyConfig {
            colony_size: self.colony.colony_size,
            generations: self.colony.generations,
            abandonment_limit: self.colony.abandonment_limit,
            budget,
            lambda2_min: self.lambda2_min,
            lambda2_max: self.lambda2_max,
            neighbor_step: self.colony.neighbor_step,
            exact_budget: self.colony.exact_budget,
            seed,
        }
    }
}

/// Everything a finished run produces, still in memory.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub instance: GridInstance<f64>,
    pub backbone: Backbone,
    pub lambda2_backbone: f64,
    pub results: Vec<TrialResult>,
    pub aggregates: Vec<AggregateRow>,
    pub traffic: Vec<TrafficRow>,
    pub convergence: Vec<(usize, usize, Vec<GenerationStat<f64>>)>,
}

struct Derived {
    mu: f64,
    mu_w: f64,
    mu_w_m: f64,
    e_p: f64,
    i_r: f64,
    t_r: f64,
}

/// Distance, energy, and lifetime columns for one accepted network.
#[allow(clippy::too_many_arguments)]
fn derived_metrics(
    cfg: &ExperimentConfig,
    cell_edge: f64,
    device_count: usize,
    fprn: usize,
    sprn: usize,
    network_size: usize,
    wiener: f64,
    backbone_e_p: f64,
) -> Result<Derived> {
    let dm = average_distance(wiener, network_size, cfg.delta_mu)?;
    let mu_w_m = dm.mu_w * cell_edge;
    let e_p = cfg.energy.node_energy_per_round(mu_w_m / cfg.energy_distance_norm)?;
    let b1 = (fprn + device_count) as f64 * cfg.energy.e_init;
    let b2 = sprn as f64 * cfg.energy.e_init;
    let i_r = lifetime_rounds(b1, &vec![backbone_e_p; fprn])?;
    let t_r = lifetime_rounds(b1 + b2, &vec![e_p; fprn + sprn])?;
    Ok(Derived { mu: dm.mu, mu_w: dm.mu_w, mu_w_m, e_p, i_r, t_r })
}

#[allow(clippy::too_many_arguments)]
fn failure_row(
    method: Method,
    n: usize,
    trial: usize,
    seed: u64,
    status: &str,
    budget: usize,
    fprn: usize,
    lambda2_backbone: f64,
    evaluations: usize,
    wallclock_s: f64,
) -> TrialResult {
    TrialResult {
        method: method.name().into(),
        n,
        trial,
        seed,
        status: status.into(),
        budget,
        fprn_count: fprn,
        sprn_count: 0,
        network_size: 0,
        wiener: f64::NAN,
        mu: f64::NAN,
        mu_w: f64::NAN,
        mu_w_norm: f64::NAN,
        mu_w_m: f64::NAN,
        lambda2: f64::NAN,
        lambda2_backbone,
        e_p: f64::NAN,
        i_r: f64::NAN,
        t_r: f64::NAN,
        e_extra: f64::NAN,
        evaluations,
        wallclock_s,
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-(method, size) summaries over the accepted rows.
pub fn aggregate(results: &[TrialResult]) -> Vec<AggregateRow> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in results {
        let key = (r.method.clone(), r.n);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.iter()
        .map(|(method, n)| {
            let group: Vec<&TrialResult> =
                results.iter().filter(|r| &r.method == method && r.n == *n).collect();
            let ok: Vec<&&TrialResult> = group.iter().filter(|r| r.is_ok()).collect();
            let col = |f: fn(&TrialResult) -> f64| -> Vec<f64> {
                ok.iter().map(|r| f(r)).collect()
            };
            let (mean_wiener, std_wiener) = mean_std(&col(|r| r.wiener));
            let (mean_mu_w, std_mu_w) = mean_std(&col(|r| r.mu_w));
            let (mean_mu_w_norm, std_mu_w_norm) = mean_std(&col(|r| r.mu_w_norm));
            let (mean_lambda2, std_lambda2) = mean_std(&col(|r| r.lambda2));
            let (mean_sprn, _) = mean_std(&col(|r| r.sprn_count as f64));
            let (mean_e_p, _) = mean_std(&col(|r| r.e_p));
            let (mean_i_r, _) = mean_std(&col(|r| r.i_r));
            let (mean_t_r, std_t_r) = mean_std(&col(|r| r.t_r));
            let (mean_e_extra, _) = mean_std(&col(|r| r.e_extra));
            AggregateRow {
                method: method.clone(),
                n: *n,
                trials_ok: ok.len(),
                trials_failed: group.len() - ok.len(),
                mean_wiener,
                std_wiener,
                mean_mu_w,
                std_mu_w,
                mean_mu_w_norm,
                std_mu_w_norm,
                mean_lambda2,
                std_lambda2,
                mean_sprn,
                mean_e_p,
                mean_i_r,
                mean_t_r,
                std_t_r,
                mean_e_extra,
            }
        })
        .collect()
}

/// Lifetime versus receive-traffic table, recomputed from each accepted
/// row's widened mean distance.
pub fn traffic_table(cfg: &ExperimentConfig, results: &[TrialResult]) -> Result<Vec<TrafficRow>> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in results {
        let key = (r.method.clone(), r.n);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut rows = Vec::new();
    for (method, n) in keys {
        let ok: Vec<&TrialResult> = results
            .iter()
            .filter(|r| r.method == method && r.n == n && r.is_ok())
            .collect();
        for &k in &cfg.traffic_levels {
            let mut lifetimes = Vec::with_capacity(ok.len());
            for r in &ok {
                let mut energy = cfg.energy;
                energy.k_traffic = k;
                let e_p = energy.node_energy_per_round(r.mu_w_m / cfg.energy_distance_norm)?;
                let devices = r.network_size - r.fprn_count - r.sprn_count;
                let b1 = (r.fprn_count + devices) as f64 * cfg.energy.e_init;
                let b2 = r.sprn_count as f64 * cfg.energy.e_init;
                lifetimes
                    .push(lifetime_rounds(b1 + b2, &vec![e_p; r.fprn_count + r.sprn_count])?);
            }
            let (mean_t_r, std_t_r) = mean_std(&lifetimes);
            rows.push(TrafficRow {
                method: method.clone(),
                n,
                traffic_k: k,
                trials_ok: ok.len(),
                mean_t_r,
                std_t_r,
            });
        }
    }
    Ok(rows)
}

/// Runs the full sweep: both methods, every size, every trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let inst = cfg.instance.materialize()?;
    let backbone = build_backbone(&inst)?;
    if backbone.fprn_count() == 0 {
        return Err(Error::InvalidInstance(
            "phase 1 placed no relays; lifetime ratios need at least one".into(),
        ));
    }
    let problem = PlacementProblem::new(&inst, &backbone, cfg.lambda2_min, cfg.lambda2_max)?;
    let lambda2_backbone = problem.lambda2_backbone();
    let device_count = inst.nodes.len();
    let base_count = device_count + backbone.fprn_count();
    let fprn = backbone.fprn_count();

    // Backbone burn rate, shared by every initial-lifetime figure.
    let backbone_dm = average_distance(problem.backbone_fitness(), base_count, cfg.delta_mu)?;
    let backbone_e_p = cfg
        .energy
        .node_energy_per_round(backbone_dm.mu_w * inst.cell_edge / cfg.energy_distance_norm)?;

    let mut results = Vec::new();
    let mut convergence = Vec::new();

    for &n in &cfg.network_sizes {
        for trial in 0..cfg.trials {
            let seed = trial_seed(cfg.master_seed, Method::Ildcc, n, trial);
            let started = Instant::now();
            if n < base_count {
                results.push(failure_row(
                    Method::Ildcc,
                    n,
                    trial,
                    seed,
                    "budget_underflow",
                    0,
                    fprn,
                    lambda2_backbone,
                    0,
                    started.elapsed().as_secs_f64(),
                ));
                continue;
            }
            let budget = n - base_count;
            let colony = cfg.dummy_colony(budget, seed);
            let out = optimize(&problem, &colony)?;
            let wallclock_s = started.elapsed().as_secs_f64();
            convergence.push((n, trial, out.history.clone()));
            if !out.feasible {
                results.push(failure_row(
                    Method::Ildcc,
                    n,
                    trial,
                    seed,
                    "no_feasible_placement",
                    budget,
                    fprn,
                    lambda2_backbone,
                    out.evaluations,
                    wallclock_s,
                ));
                continue;
            }
            let d = derived_metrics(
                cfg,
                inst.cell_edge,
                device_count,
                fprn,
                out.sprn_count(),
                out.network_size,
                out.best_fitness,
                backbone_e_p,
            )?;
            results.push(TrialResult {
                method: Method::Ildcc.name().into(),
                n,
                trial,
                seed,
                status: "ok".into(),
                budget,
                fprn_count: fprn,
                sprn_count: out.sprn_count(),
                network_size: out.network_size,
                wiener: out.best_fitness,
                mu: d.mu,
                mu_w: d.mu_w,
                mu_w_norm: d.mu_w / cfg.mu_norm,
                mu_w_m: d.mu_w_m,
                lambda2: out.best_lambda2,
                lambda2_backbone,
                e_p: d.e_p,
                i_r: d.i_r,
                t_r: d.t_r,
                e_extra: d.t_r - d.i_r,
                evaluations: out.evaluations,
                wallclock_s,
            });
        }
    }

    if cfg.baseline {
        for &n in &cfg.network_sizes {
            for trial in 0..cfg.trials {
                let seed = trial_seed(cfg.master_seed, Method::Sp3d, n, trial);
                let started = Instant::now();
                let row = baseline_trial(cfg, &problem, n, trial, seed, base_count, fprn, lambda2_backbone, device_count, inst.cell_edge, backbone_e_p)?;
                let mut row = row;
                row.wallclock_s = started.elapsed().as_secs_f64();
                results.push(row);
            }
        }
    }

    let aggregates = aggregate(&results);
    let traffic = traffic_table(cfg, &results)?;
    Ok(RunOutput {
        instance: inst,
        backbone,
        lambda2_backbone,
        results,
        aggregates,
        traffic,
        convergence,
    })
}

/// One random-deployment trial: sample budget-sized candidate subsets
/// until the network clears the connectivity floor.
#[allow(clippy::too_many_arguments)]
fn baseline_trial(
    cfg: &ExperimentConfig,
    problem: &PlacementProblem<f64>,
    n: usize,
    trial: usize,
    seed: u64,
    base_count: usize,
    fprn: usize,
    lambda2_backbone: f64,
    device_count: usize,
    cell_edge: f64,
    backbone_e_p: f64,
) -> Result<TrialResult> {
    if n < base_count {
        return Ok(failure_row(
            Method::Sp3d,
            n,
            trial,
            seed,
            "budget_underflow",
            0,
            fprn,
            lambda2_backbone,
            0,
            0.0,
        ));
    }
    let budget = n - base_count;
    let dims = problem.dims();
    if budget > dims {
        return Ok(failure_row(
            Method::Sp3d,
            n,
            trial,
            seed,
            "budget_exceeds_candidates",
            budget,
            fprn,
            lambda2_backbone,
            0,
            0.0,
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=cfg.baseline_attempts {
        let mut alpha = PlacementVector::empty(dims);
        for idx in rand::seq::index::sample(&mut rng, dims, budget) {
            alpha.bits[idx] = true;
        }
        let eval = problem.raw_fitness(&alpha)?;
        let l2 = match eval.lambda2 {
            Some(l2) if l2 >= cfg.lambda2_min => l2,
            _ => continue,
        };
        let d = derived_metrics(
            cfg,
            cell_edge,
            device_count,
            fprn,
            budget,
            eval.network_size,
            eval.fitness,
            backbone_e_p,
        )?;
        return Ok(TrialResult {
            method: Method::Sp3d.name().into(),
            n,
            trial,
            seed,
            status: "ok".into(),
            budget,
            fprn_count: fprn,
            sprn_count: budget,
            network_size: eval.network_size,
            wiener: eval.fitness,
            mu: d.mu,
            mu_w: d.mu_w,
            mu_w_norm: d.mu_w / cfg.mu_norm,
            mu_w_m: d.mu_w_m,
            lambda2: l2,
            lambda2_backbone,
            e_p: d.e_p,
            i_r: d.i_r,
            t_r: d.t_r,
            e_extra: d.t_r - d.i_r,
            evaluations: attempt,
            wallclock_s: 0.0,
        });
    }
    Ok(failure_row(
        Method::Sp3d,
        n,
        trial,
        seed,
        "no_feasible_placement",
        budget,
        fprn,
        lambda2_backbone,
        cfg.baseline_attempts,
        0.0,
    ))
}

/// Writes every run artifact into `dir` and returns the paths.
pub fn write_run(out: &RunOutput, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut files = Vec::new();

    let inst_path = dir.join("instance.json");
    out.instance.save(&inst_path)?;
    files.push(inst_path);

    files.push(write_results(dir, &out.results)?);
    files.push(write_aggregates(dir, &out.aggregates)?);
    files.push(write_traffic(dir, &out.traffic)?);
    files.extend(write_plot_series(dir, &out.aggregates)?);
    for (n, trial, history) in &out.convergence {
        files.push(write_convergence(dir, *n, *trial, history)?);
    }
    let timings: Vec<TimingRow> = out
        .results
        .iter()
        .map(|r| TimingRow {
            method: r.method.clone(),
            n: r.n,
            trial: r.trial,
            wallclock_s: r.wallclock_s,
        })
        .collect();
    files.push(write_timings(dir, &timings)?);
    let cfg_path = dir.join("config.json");
    std::fs::write(&cfg_path, serde_json::to_string_pretty(cfg)?)?;
    files.push(cfg_path);
    Ok(files)
}
