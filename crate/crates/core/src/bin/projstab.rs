use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use projstab::anchors::select_anchors_among;
use projstab::data::{load_network, save_network, split_dataset, write_matrix, MatrixFormat};
use projstab::pipeline::{evaluate, fit, fragment, render_all, run_all, Dataset, PipelineConfig, SeedPlan};
use projstab::render::Mode;
use projstab::report::{aggregate, read_json, to_canonical_json, write_json, Fragment, SeedOutcome};
use projstab::{Error, Result};

#[derive(Parser)]
#[command(name = "projstab", version, about = "Stability diagnostics for parametric 2D projections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a projector and save its network file.
    Fit(Common),
    /// Select anchors from the test split.
    Anchors(Common),
    /// Generate perturbation clouds around the anchors.
    Perturb(Common),
    /// Compute metrics for a saved network.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Network file; defaults to `<out>/seed-<seed>/network.pstn`.
        #[arg(long)]
        network: Option<PathBuf>,
    },
    /// Render diagnostics for a saved network.
    Render {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        network: Option<PathBuf>,
        /// Render mode; repeatable. Defaults to the configured modes, or all.
        #[arg(long = "mode")]
        modes: Vec<Mode>,
    },
    /// Run every stage for every configured seed and write the report.
    Pipeline(Common),
    /// Aggregate fragment files into a report.
    Report {
        #[arg(required = true)]
        fragments: Vec<PathBuf>,
        /// Output directory for `report.json`.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Seed to run; defaults to the first configured seed (all seeds for `pipeline`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-coordinate noise standard deviation; overrides the percentile radius.
    #[arg(long)]
    sigma: Option<f64>,
    /// Matrix format for written clouds.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => MatrixFormat::Csv,
            FormatArg::Binary => MatrixFormat::Binary,
        }
    }
}

struct Session {
    cfg: PipelineConfig,
    ds: Dataset,
    seed: u64,
    format: MatrixFormat,
}

impl Session {
    fn open(c: &Common) -> Result<Self> {
        let mut cfg = PipelineConfig::load(&c.config)?;
        if let Some(out) = &c.out {
            cfg.output_dir = std::path::absolute(out).map_err(|e| Error::io(out, e))?;
        }
        if let Some(s) = c.sigma {
            cfg.noise.sigma = Some(s);
        }
        if let Some(s) = c.seed {
            cfg.seeds = vec![s];
        }
        cfg.validate()?;
        let ds = Dataset::load(&cfg)?;
        let seed = cfg.seeds[0];
        Ok(Session {
            cfg,
            ds,
            seed,
            format: c.format.into(),
        })
    }

    fn dir(&self) -> Result<PathBuf> {
        let d = self.cfg.seed_dir(self.seed);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        Ok(d)
    }

    fn network_path(&self, given: &Option<PathBuf>) -> PathBuf {
        given
            .clone()
            .unwrap_or_else(|| self.cfg.seed_dir(self.seed).join("network.pstn"))
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_fit(c: &Common) -> Result<()> {
    let s = Session::open(c)?;
    let split = split_dataset(s.ds.data.rows(), &s.cfg.split, s.seed)?;
    let (file, history) = fit(&s.cfg, &s.ds, &split, s.seed)?;
    let dir = s.dir()?;
    save_network(&file, dir.join("network.pstn"))?;
    write_json(&history, dir.join("training.json"))?;
    println!(
        "seed {}: {} epochs, best epoch {}, validation mse {}",
        s.seed, history.stopped_epoch, history.best_epoch, history.best_val_loss
    );
    Ok(())
}

fn cmd_anchors(c: &Common) -> Result<()> {
    let s = Session::open(c)?;
    let split = split_dataset(s.ds.data.rows(), &s.cfg.split, s.seed)?;
    let anchors = select_anchors_among(
        &s.ds.data,
        &s.ds.embedding,
        &s.ds.labels,
        &split.test,
        s.cfg.anchors_per_class,
    )?;
    let csv = anchors.to_csv();
    write_text(&s.dir()?.join("anchors.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_perturb(c: &Common) -> Result<()> {
    let s = Session::open(c)?;
    let plan = SeedPlan::new(&s.cfg, &s.ds, s.seed)?;
    let clouds = plan.perturb()?;
    let dir = s.dir()?.join("clouds");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (a, cloud) in clouds.iter().enumerate() {
        let p = dir.join(format!("anchor-{a}.{}", s.format.extension()));
        write_matrix(&cloud.samples, p, s.format)?;
    }
    let summary = serde_json::json!({
        "seed": s.seed,
        "r": plan.noise.radius(),
        "sigma": plan.noise.sigma(),
        "samples": plan.noise.samples,
        "r_eff": clouds.iter().map(|c| c.r_eff).collect::<Vec<_>>(),
    });
    write_text(&dir.join("noise.json"), &to_canonical_json(&summary)?)?;
    println!(
        "seed {}: {} clouds of {} samples, r {}, sigma {}",
        s.seed,
        clouds.len(),
        plan.noise.samples,
        plan.noise.radius(),
        plan.noise.sigma()
    );
    Ok(())
}

fn cmd_eval(c: &Common, network: &Option<PathBuf>) -> Result<()> {
    let s = Session::open(c)?;
    let file = load_network(s.network_path(network))?;
    let plan = SeedPlan::new(&s.cfg, &s.ds, s.seed)?;
    let mut clouds = plan.perturb()?;
    let (result, _) = evaluate(&s.ds, &plan, &file, &mut clouds)?;
    let m = result.metrics;
    let frag = fragment(&s.cfg, s.seed, SeedOutcome::Ok(result))?;
    write_text(&s.dir()?.join("fragment.json"), &to_canonical_json(&frag)?)?;
    println!(
        "seed {}: mse {} t_avg {} c_avg {} d_dev {} d_bias {} e_na {}",
        s.seed, m.mse, m.t_avg, m.c_avg, m.d_dev, m.d_bias, m.e_na
    );
    Ok(())
}

fn cmd_render(c: &Common, network: &Option<PathBuf>, modes: &[Mode]) -> Result<()> {
    let s = Session::open(c)?;
    let file = load_network(s.network_path(network))?;
    let plan = SeedPlan::new(&s.cfg, &s.ds, s.seed)?;
    let mut clouds = plan.perturb()?;
    let (result, summary) = evaluate(&s.ds, &plan, &file, &mut clouds)?;
    let modes: Vec<Mode> = if !modes.is_empty() {
        modes.to_vec()
    } else if !s.cfg.render.is_empty() {
        s.cfg.render.clone()
    } else {
        Mode::ALL.to_vec()
    };
    let z0: Vec<[f64; 2]> = result.anchors.iter().map(|a| a.z0).collect();
    let dir = s.dir()?;
    for (mode, svg) in render_all(&s.cfg, &s.ds, &plan, &z0, &clouds, &summary, &modes)? {
        let p = dir.join(format!("{}.svg", mode.name()));
        write_text(&p, &svg)?;
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_pipeline(c: &Common) -> Result<()> {
    let s = Session::open(c)?;
    let report = run_all(&s.cfg, &s.ds)?;
    let a = report.aggregate;
    println!(
        "{} of {} seeds succeeded",
        report.successful_seeds.len(),
        report.seeds.len()
    );
    for (name, st) in [
        ("mse", a.mse),
        ("t_avg", a.t_avg),
        ("c_avg", a.c_avg),
        ("d_dev", a.d_dev),
        ("d_bias", a.d_bias),
        ("e_na", a.e_na),
    ] {
        println!("{name} {} +- {}", st.mean, st.std);
    }
    println!("{}", s.cfg.output_dir().join("report.json").display());
    Ok(())
}

fn cmd_report(fragments: &[PathBuf], out: &Path) -> Result<()> {
    let frags = fragments
        .iter()
        .map(read_json::<Fragment>)
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(&frags)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let p = out.join("report.json");
    write_json(&report, &p)?;
    println!("{}", p.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Fit(c) => cmd_fit(c),
        Command::Anchors(c) => cmd_anchors(c),
        Command::Perturb(c) => cmd_perturb(c),
        Command::Eval { common, network } => cmd_eval(common, network),
        Command::Render {
            common,
            network,
            modes,
        } => cmd_render(common, network, modes),
        Command::Pipeline(c) => cmd_pipeline(c),
        Command::Report { fragments, out } => cmd_report(fragments, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
