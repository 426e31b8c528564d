//! End-to-end runs: configuration, per-seed stages and artifact layout.
//!
//! A seed's artifacts live in `<output_dir>/seed-<seed>/`:
//! `network.pstn`, `anchors.csv`, `fragment.json` and one
//! `<mode>.svg` per configured render mode. The multi-seed report is
//! written to `<output_dir>/report.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::anchors::{select_anchors_among, AnchorSet};
use crate::data::{
    check_inputs, load_labels, load_matrix, save_network, split_dataset, Labels, MatrixFormat,
    NetworkFile, NetworkMeta, Split, SplitSpec,
};
use crate::error::{Error, Result, StageExt};
use crate::matrix::Matrix;
use crate::mlp::{forward, init_network, project, widths_for, Preset};
use crate::perturb::{
    pairwise_distance_percentile, perturb_samples, Clip, NoiseSpec, PerturbationCloud,
    DEFAULT_PAIR_BUDGET, DEFAULT_PERCENTILE, DEFAULT_SAMPLES,
};
use crate::quality::averaged_tc;
use crate::render::{render_diagnostic, Mode, Scene, SceneAnchor, Style};
use crate::report::{
    aggregate, to_canonical_json, AnchorRow, Fragment, MetricSet, NoiseProvenance, SeedFailure,
    SeedOutcome, SeedResult, SigmaSource, StabilityReport, TrainingSummary, SCHEMA_VERSION,
    TOOL_VERSION,
};
use crate::stability::{assess, StabilitySummary};
use crate::train::{evaluate_mse, train, TrainConfig, TrainData, TrainHistory};

/// A named preset (`"mlp-small"`, `"mlp-large"`) or explicit hidden widths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Architecture {
    Preset(Preset),
    Hidden(Vec<usize>),
}

impl Default for Architecture {
    fn default() -> Self {
        Architecture::Preset(Preset::MlpSmall)
    }
}

impl Architecture {
    pub fn widths(&self, input_dim: usize) -> Vec<usize> {
        match self {
            Architecture::Preset(p) => p.widths(input_dim),
            Architecture::Hidden(h) => widths_for(input_dim, h),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipMode {
    /// `[0, 1]` when every input value lies in `[0, 1]`, otherwise none.
    Auto,
    None,
}

/// `"auto"`, `"none"` or an explicit `[low, high]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClipSetting {
    Mode(ClipMode),
    Range([f64; 2]),
}

impl Default for ClipSetting {
    fn default() -> Self {
        ClipSetting::Mode(ClipMode::Auto)
    }
}

impl ClipSetting {
    pub fn resolve(&self, data: &Matrix) -> Result<Option<Clip>> {
        match *self {
            ClipSetting::Mode(ClipMode::None) => Ok(None),
            ClipSetting::Mode(ClipMode::Auto) => Ok(data
                .values()
                .iter()
                .all(|v| (0.0..=1.0).contains(v))
                .then_some(Clip::UNIT)),
            ClipSetting::Range([lo, hi]) => Clip::new(lo, hi).map(Some),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub percentile: f64,
    pub samples: usize,
    pub pair_budget: usize,
    /// Per-coordinate standard deviation; bypasses the percentile radius.
    pub sigma: Option<f64>,
    pub clip: ClipSetting,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            percentile: DEFAULT_PERCENTILE,
            samples: DEFAULT_SAMPLES,
            pair_budget: DEFAULT_PAIR_BUDGET,
            sigma: None,
            clip: ClipSetting::default(),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_anchors_per_class() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_ellipse_scale() -> f64 {
    2.0
}

/// Run configuration, read from JSON. Relative paths are resolved against
/// the directory of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub data: PathBuf,
    pub labels: PathBuf,
    pub embedding: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Overrides the format inferred from the file extension.
    #[serde(default)]
    pub data_format: Option<MatrixFormat>,
    #[serde(default)]
    pub embedding_format: Option<MatrixFormat>,
    #[serde(default)]
    pub architecture: Architecture,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default = "default_anchors_per_class")]
    pub anchors_per_class: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub render: Vec<Mode>,
    #[serde(default = "default_ellipse_scale")]
    pub ellipse_scale: f64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    /// Minimal configuration with every optional field at its default.
    pub fn new(data: impl Into<PathBuf>, labels: impl Into<PathBuf>, embedding: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            data: data.into(),
            labels: labels.into(),
            embedding: embedding.into(),
            output_dir: default_output_dir(),
            data_format: None,
            embedding_format: None,
            architecture: Architecture::default(),
            train: TrainConfig::default(),
            split: SplitSpec::default(),
            noise: NoiseConfig::default(),
            anchors_per_class: default_anchors_per_class(),
            seeds: default_seeds(),
            render: Vec::new(),
            ellipse_scale: default_ellipse_scale(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: PipelineConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn seed_dir(&self, seed: u64) -> PathBuf {
        self.output_dir().join(format!("seed-{seed}"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seed list is empty".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if let Some(w) = seeds.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("seed {} is listed twice", w[0])));
        }
        if let Architecture::Hidden(h) = &self.architecture {
            if h.contains(&0) {
                return Err(Error::Config("hidden widths must be positive".into()));
            }
        }
        if self.anchors_per_class == 0 {
            return Err(Error::Config("anchors_per_class must be at least 1".into()));
        }
        if !(self.ellipse_scale > 0.0 && self.ellipse_scale.is_finite()) {
            return Err(Error::Config("ellipse_scale must be positive".into()));
        }
        if let Some(s) = self.noise.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma must be >= 0, got {s}")));
            }
        }
        if !(self.noise.percentile > 0.0 && self.noise.percentile < 100.0) {
            return Err(Error::Config("percentile must lie in (0, 100)".into()));
        }
        if self.noise.samples == 0 || self.noise.pair_budget == 0 {
            return Err(Error::Config("samples and pair_budget must be at least 1".into()));
        }
        self.train.validate()?;
        self.split.validate()?;
        for (name, p) in [("data", &self.data), ("labels", &self.labels), ("embedding", &self.embedding)] {
            let full = self.resolve(p);
            if !full.is_file() {
                return Err(Error::Config(format!("{name} file {} does not exist", full.display())));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of every setting that affects results,
    /// that is everything except `seeds` and `output_dir`.
    pub fn hash(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if let Some(map) = v.as_object_mut() {
            map.remove("seeds");
            map.remove("output_dir");
        }
        let digest = Sha256::digest(to_canonical_json(&v)?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// The loaded inputs shared by every seed.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub data: Matrix,
    pub labels: Labels,
    pub embedding: Matrix,
}

impl Dataset {
    pub fn new(data: Matrix, labels: Labels, embedding: Matrix) -> Result<Self> {
        check_inputs(&data, &labels, &embedding)?;
        Ok(Dataset {
            data,
            labels,
            embedding,
        })
    }

    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        let open = |p: &Path, fmt: Option<MatrixFormat>| {
            let full = cfg.resolve(p);
            let fmt = fmt.unwrap_or_else(|| MatrixFormat::infer(&full));
            load_matrix(&full, fmt)
        };
        let data = open(&cfg.data, cfg.data_format)?;
        let embedding = open(&cfg.embedding, cfg.embedding_format)?;
        let labels = load_labels(cfg.resolve(&cfg.labels))?;
        Self::new(data, labels, embedding)
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }
}

/// Everything about a seed that does not depend on the trained network.
#[derive(Debug, Clone)]
pub struct SeedPlan {
    pub seed: u64,
    pub split: Split,
    pub anchors: AnchorSet,
    pub noise: NoiseSpec,
    pub source: SigmaSource,
    /// Percentile behind the radius, absent when sigma was given directly.
    pub percentile: Option<f64>,
}

impl SeedPlan {
    pub fn new(cfg: &PipelineConfig, ds: &Dataset, seed: u64) -> Result<Self> {
        let split = split_dataset(ds.data.rows(), &cfg.split, seed).stage("split")?;
        let anchors = select_anchors_among(
            &ds.data,
            &ds.embedding,
            &ds.labels,
            &split.test,
            cfg.anchors_per_class,
        )
        .stage("anchors")?;
        let (noise, source) = noise_spec(cfg, ds, seed).stage("noise")?;
        Ok(SeedPlan {
            seed,
            split,
            anchors,
            noise,
            source,
            percentile: (source == SigmaSource::Percentile).then_some(cfg.noise.percentile),
        })
    }

    pub fn perturb(&self) -> Result<Vec<PerturbationCloud>> {
        self.anchors
            .entries
            .iter()
            .enumerate()
            .map(|(a, anchor)| perturb_samples(&anchor.input, a, &self.noise))
            .collect::<Result<Vec<_>>>()
            .stage("perturb")
    }
}

fn noise_spec(cfg: &PipelineConfig, ds: &Dataset, seed: u64) -> Result<(NoiseSpec, SigmaSource)> {
    let n = &cfg.noise;
    let clip = n.clip.resolve(&ds.data)?;
    match n.sigma {
        Some(sigma) => Ok((
            NoiseSpec::from_sigma(sigma, ds.dim(), n.samples, clip, seed)?,
            SigmaSource::Override,
        )),
        None => {
            let r = pairwise_distance_percentile(&ds.data, n.percentile, n.pair_budget, seed)?;
            Ok((
                NoiseSpec::from_radius(r, ds.dim(), n.samples, clip, seed)?,
                SigmaSource::Percentile,
            ))
        }
    }
}

/// Trains the seed's network on its train/validation rows.
pub fn fit(cfg: &PipelineConfig, ds: &Dataset, split: &Split, seed: u64) -> Result<(NetworkFile, TrainHistory)> {
    let widths = cfg.architecture.widths(ds.dim());
    let net = init_network(&widths, seed).stage("init")?;
    let train_x = ds.data.select_rows(&split.train).stage("split")?;
    let train_y = ds.embedding.select_rows(&split.train).stage("split")?;
    let val_x = ds.data.select_rows(&split.val).stage("split")?;
    let val_y = ds.embedding.select_rows(&split.val).stage("split")?;
    let tc = TrainConfig {
        seed,
        ..cfg.train.clone()
    };
    let data = TrainData {
        train_x: &train_x,
        train_y: &train_y,
        val_x: &val_x,
        val_y: &val_y,
    };
    let (network, history) = train(net, data, &tc).stage("train")?;
    let meta = NetworkMeta {
        lambda: tc.lambda,
        seed,
        epochs_run: history.stopped_epoch,
        best_epoch: history.best_epoch,
        best_val_mse: history.best_val_loss,
    };
    Ok((NetworkFile { network, meta }, history))
}

/// Metrics for one trained network; fills in the cloud projections.
pub fn evaluate(
    ds: &Dataset,
    plan: &SeedPlan,
    file: &NetworkFile,
    clouds: &mut [PerturbationCloud],
) -> Result<(SeedResult, StabilitySummary)> {
    let net = &file.network;
    let z0 = plan
        .anchors
        .entries
        .iter()
        .map(|a| project(net, &a.input))
        .collect::<Result<Vec<_>>>()
        .stage("project")?;
    for c in clouds.iter_mut() {
        c.projections = Some(forward(net, &c.samples).stage("project")?);
    }
    let projected: Vec<&Matrix> = clouds.iter().filter_map(|c| c.projections.as_ref()).collect();
    let summary = assess(&z0, &projected).stage("stability")?;

    let test_x = ds.data.select_rows(&plan.split.test).stage("quality")?;
    let test_y = ds.embedding.select_rows(&plan.split.test).stage("quality")?;
    let mse = evaluate_mse(net, &test_x, &test_y).stage("quality")?;
    let low = forward(net, &test_x).stage("quality")?;
    let quality = averaged_tc(&test_x, &low).stage("quality")?;

    let anchors = plan
        .anchors
        .entries
        .iter()
        .zip(&summary.per_anchor)
        .zip(clouds.iter())
        .zip(&z0)
        .map(|(((a, s), c), z)| AnchorRow {
            index: a.index,
            class: a.class,
            label: ds.labels.original_ids()[a.class],
            z0: *z,
            d_dev: s.d_dev,
            d_bias: s.d_bias,
            misassignment_rate: s.misassignment_rate,
            r_eff: c.r_eff,
        })
        .collect();
    let pooled = (clouds.iter().map(|c| c.r_eff * c.r_eff).sum::<f64>() / clouds.len() as f64).sqrt();
    let r = plan.noise.radius();
    let noise = NoiseProvenance {
        source: plan.source,
        percentile: plan.percentile,
        r,
        r_eff: pooled,
        r_eff_ratio: (r > 0.0).then(|| pooled / r),
        sigma: plan.noise.sigma(),
        samples: plan.noise.samples,
        clip: plan.noise.clip.map(|c| [c.low, c.high]),
    };
    let training = TrainingSummary {
        widths: net.widths(),
        lambda: file.meta.lambda,
        epochs_run: file.meta.epochs_run,
        best_epoch: file.meta.best_epoch,
        best_val_mse: file.meta.best_val_mse,
        train_rows: plan.split.train.len(),
        val_rows: plan.split.val.len(),
        test_rows: plan.split.test.len(),
    };
    let metrics = MetricSet {
        mse,
        t_avg: quality.t_avg,
        c_avg: quality.c_avg,
        d_dev: summary.mean_d_dev,
        d_bias: summary.mean_d_bias,
        e_na: summary.e_na,
    };
    Ok((
        SeedResult {
            metrics,
            anchors,
            noise,
            training,
            quality,
        },
        summary,
    ))
}

/// Renders every requested mode; the background is the reference embedding.
pub fn render_all(
    cfg: &PipelineConfig,
    ds: &Dataset,
    plan: &SeedPlan,
    z0: &[[f64; 2]],
    clouds: &[PerturbationCloud],
    summary: &StabilitySummary,
    modes: &[Mode],
) -> Result<Vec<(Mode, String)>> {
    let anchors = plan
        .anchors
        .entries
        .iter()
        .zip(z0)
        .map(|(a, z)| SceneAnchor {
            class: a.class,
            position: *z,
        })
        .collect();
    let projected = clouds
        .iter()
        .map(|c| {
            c.projections
                .clone()
                .ok_or_else(|| Error::Diagnostics("cloud has not been projected".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let scene = Scene::new(&ds.embedding, ds.labels.values(), anchors, projected, plan.seed)
        .stage("render")?;
    let style = Style {
        ellipse_scale: cfg.ellipse_scale,
        ..Style::default()
    };
    modes
        .iter()
        .map(|&m| Ok((m, render_diagnostic(&scene, m, &summary.per_anchor, &style).stage("render")?)))
        .collect()
}

/// In-memory result of one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub fragment: Fragment,
    pub network: Option<NetworkFile>,
    pub anchors_csv: Option<String>,
    pub renders: Vec<(Mode, String)>,
}

impl SeedRun {
    /// Writes the seed's artifacts into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if let Some(net) = &self.network {
            save_network(net, dir.join("network.pstn"))?;
        }
        if let Some(csv) = &self.anchors_csv {
            let p = dir.join("anchors.csv");
            fs::write(&p, csv).map_err(|e| Error::io(&p, e))?;
        }
        for (mode, svg) in &self.renders {
            let p = dir.join(format!("{}.svg", mode.name()));
            fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
        }
        let p = dir.join("fragment.json");
        fs::write(&p, to_canonical_json(&self.fragment)?).map_err(|e| Error::io(&p, e))
    }
}

pub fn fragment(cfg: &PipelineConfig, seed: u64, outcome: SeedOutcome) -> Result<Fragment> {
    Ok(Fragment {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        config_hash: cfg.hash()?,
        seed,
        outcome,
    })
}

/// Runs every stage for one seed. Training divergence produces a failed
/// fragment; any other error is returned with its stage name.
pub fn run_pipeline(cfg: &PipelineConfig, ds: &Dataset, seed: u64) -> Result<SeedRun> {
    let plan = SeedPlan::new(cfg, ds, seed)?;
    let (file, _history) = match fit(cfg, ds, &plan.split, seed) {
        Ok(v) => v,
        Err(e) if matches!(e.root(), Error::Training { .. }) => {
            let failure = SeedFailure {
                stage: "train".into(),
                message: e.root().to_string(),
            };
            return Ok(SeedRun {
                fragment: fragment(cfg, seed, SeedOutcome::Failed(failure))?,
                network: None,
                anchors_csv: Some(plan.anchors.to_csv()),
                renders: Vec::new(),
            });
        }
        Err(e) => return Err(e),
    };
    let mut clouds = plan.perturb()?;
    let (result, summary) = evaluate(ds, &plan, &file, &mut clouds)?;
    let z0: Vec<[f64; 2]> = result.anchors.iter().map(|a| a.z0).collect();
    let renders = render_all(cfg, ds, &plan, &z0, &clouds, &summary, &cfg.render)?;
    Ok(SeedRun {
        fragment: fragment(cfg, seed, SeedOutcome::Ok(result))?,
        network: Some(file),
        anchors_csv: Some(plan.anchors.to_csv()),
        renders,
    })
}

/// Runs every configured seed in order, writes all artifacts and the
/// aggregate report, and returns the report.
pub fn run_all(cfg: &PipelineConfig, ds: &Dataset) -> Result<StabilityReport> {
    cfg.validate()?;
    let mut fragments = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let run = run_pipeline(cfg, ds, seed)?;
        run.write(&cfg.seed_dir(seed)).stage("write")?;
        fragments.push(run.fragment);
    }
    let report = aggregate(&fragments).stage("report")?;
    let out = cfg.output_dir();
    let p = out.join("report.json");
    fs::write(&p, to_canonical_json(&report)?).map_err(|e| Error::io(&p, e))?;
    Ok(report)
}
