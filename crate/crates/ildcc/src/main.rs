use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

// stdout may be a closed pipe (`ildcc validate | head`); dropping the output
// beats panicking.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

use ildcc::backbone::build_backbone;
use ildcc::harness::{run_experiment, write_run, write_traffic, ExperimentConfig};
use ildcc::spectral::fiedler_value;
use ildcc::Result;

#[derive(Parser)]
#[command(
    name = "ildcc",
    version,
    about = "Two-phase relay-node deployment for 3-D grid sensor networks"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full experiment sweep and write every artifact.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Forces the random baseline on.
        #[arg(long)]
        baseline: bool,
        /// Overrides the trial count per network size.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run the sweep and report lifetime versus receive traffic.
    SweepTraffic {
        #[arg(long)]
        config: PathBuf,
        /// Directory for the traffic table; omit to only print it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a configuration and its instance without optimizing.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(config: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn cmd_run(
    config: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    baseline: bool,
    trials: Option<usize>,
) -> Result<()> {
    let mut cfg = load(&config, seed)?;
    if baseline {
        cfg.baseline = true;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    let dir = out.or(cfg.out_dir.clone()).ok_or_else(|| {
        ildcc::Error::Config("pass --out or set out_dir in the config".into())
    })?;

    let run = run_experiment(&cfg)?;
    let files = write_run(&run, &cfg, &dir)?;

    out!(
        "instance: {}x{}x{} grid, {} devices, {} candidates",
        run.instance.dims[0],
        run.instance.dims[1],
        run.instance.dims[2],
        run.instance.nodes.len(),
        run.instance.candidates.len()
    );
    out!(
        "backbone: {} first-phase relay(s), lambda2 {:.4}",
        run.backbone.fprn_count(),
        run.lambda2_backbone
    );
    for a in &run.aggregates {
        out!(
            "{:>6} n={:<3} ok {}/{}  mu_w {:>8.4}  lambda2 {:>7.4}  T_R {:>10.2}",
            a.method,
            a.n,
            a.trials_ok,
            a.trials_ok + a.trials_failed,
            a.mean_mu_w,
            a.mean_lambda2,
            a.mean_t_r
        );
    }
    out!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}

fn cmd_sweep_traffic(config: PathBuf, out: Option<PathBuf>, seed: Option<u64>) -> Result<()> {
    let cfg = load(&config, seed)?;
    cfg.validate()?;
    let run = run_experiment(&cfg)?;
    out!("{:>6} {:>4} {:>9} {:>12} {:>10}", "method", "n", "traffic_k", "mean_T_R", "std_T_R");
    for t in &run.traffic {
        out!(
            "{:>6} {:>4} {:>9.2} {:>12.2} {:>10.2}",
            t.method, t.n, t.traffic_k, t.mean_t_r, t.std_t_r
        );
    }
    if let Some(dir) = out {
        ildcc::harness::ensure_dir(&dir)?;
        let path = write_traffic(&dir, &run.traffic)?;
        out!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_validate(config: PathBuf) -> Result<()> {
    let cfg = ExperimentConfig::load(&config)?;
    cfg.validate()?;
    let inst = cfg.instance.materialize()?;
    let backbone = build_backbone(&inst)?;
    let lambda2 = fiedler_value::<f64>(&backbone.graph)?;
    let base_count = inst.nodes.len() + backbone.fprn_count();

    out!(
        "instance: {}x{}x{} grid, cell {} m, range {} m",
        inst.dims[0], inst.dims[1], inst.dims[2], inst.cell_edge, inst.range_r
    );
    out!(
        "devices: {} ({} cluster heads), candidates: {}",
        inst.nodes.len(),
        inst.cluster_heads().len(),
        inst.candidates.len()
    );
    out!(
        "backbone: {} first-phase relay(s) at {:?}",
        backbone.fprn_count(),
        backbone.fprn_positions
    );
    out!(
        "backbone lambda2 {:.4}, window [{}, {}]",
        lambda2, cfg.lambda2_min, cfg.lambda2_max
    );
    for &n in &cfg.network_sizes {
        if n < base_count {
            out!("n={n}: budget underflow ({base_count} devices already deployed)");
        } else {
            out!("n={n}: second-phase budget {}", n - base_count);
        }
    }
    out!("ok");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { config, out, seed, baseline, trials } => {
            cmd_run(config, out, seed, baseline, trials)
        }
        Cmd::SweepTraffic { config, out, seed } => cmd_sweep_traffic(config, out, seed),
        Cmd::Validate { config } => cmd_validate(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
