//! End-to-end runs: edge list in, centralities, dissimilarity summary,
//! layout, trace and SVG out, plus a manifest that pins the inputs.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::centrality::{
    compute, radius_map_with_floor, BetweennessNorm, CentralityMeasure, CentralityVector, RadiusMap,
    RadiusTransform,
};
use crate::dissimilarity::{
    commute_kernel, compute_delta, double_centered_kernel, ectd_from_kernel, DissimilarityMatrix,
    DissimilarityMetric, KernelMatrix,
};
use crate::embedding::{Solution, Tolerance, RNG_NAME};
use crate::error::{Error, Result};
use crate::graph::{parse_edge_list, Graph, ParseOptions};
use crate::lle::{build_weight_matrix, sweep_embedding, LleConfig, WeightDiagnostics, WeightMatrix};
use crate::mds::{solve_ccmds, MdsConfig};
use crate::report::{edge_length_report, EdgeLengthReport};
use crate::svg::{render_svg, SvgLayout};

/// Above this many nodes the SVG leaves out edges unless asked otherwise.
pub const AUTO_EDGE_LIMIT: usize = 1000;

pub const MANIFEST_FILE: &str = "manifest.json";

macro_rules! str_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($name), " `{}`; expected one of: ", $($text, " "),+),
                        other
                    ))),
                }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    #[default]
    Ccmds,
    Cclle,
}
str_enum!(Algorithm { Ccmds => "ccmds", Cclle => "cclle" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    #[default]
    DiameterLinear,
    Exponential,
}
str_enum!(TransformKind { DiameterLinear => "diameter_linear", Exponential => "exponential" });

/// Which inner-product kernel feeds the LLE weight stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LleKernel {
    /// Double-centered squared dissimilarities.
    #[default]
    Delta,
    /// `Ω L†` straight from the Laplacian pseudo-inverse.
    Commute,
}
str_enum!(LleKernel { Delta => "delta", Commute => "commute" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeMode {
    /// Draw edges only for graphs with at most [`AUTO_EDGE_LIMIT`] nodes.
    #[default]
    Auto,
    On,
    Off,
}
str_enum!(EdgeMode { Auto => "auto", On => "on", Off => "off" });

impl EdgeMode {
    pub fn draw(self, nodes: usize) -> bool {
        match self {
            EdgeMode::Auto => nodes <= AUTO_EDGE_LIMIT,
            EdgeMode::On => true,
            EdgeMode::Off => false,
        }
    }
}

/// Module-level settings for one embedding run, independent of any files.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedSettings {
    pub algorithm: Algorithm,
    pub centrality: CentralityMeasure,
    pub betweenness_norm: BetweennessNorm,
    pub transform: RadiusTransform,
    pub floor: f64,
    pub metric: DissimilarityMetric,
    pub lle_kernel: LleKernel,
    pub mds: MdsConfig,
    pub lle: LleConfig,
}

impl Default for EmbedSettings {
    fn default() -> Self {
        EmbedSettings {
            algorithm: Algorithm::Ccmds,
            centrality: CentralityMeasure::Closeness,
            betweenness_norm: BetweennessNorm::Global,
            transform: RadiusTransform::DiameterLinear,
            floor: 0.0,
            metric: DissimilarityMetric::Ectd,
            lle_kernel: LleKernel::Delta,
            mds: MdsConfig::default(),
            lle: LleConfig::default(),
        }
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub centrality: f64,
    pub radii: f64,
    pub dissimilarity: f64,
    pub kernel: f64,
    pub weights: f64,
    pub sweeps: Vec<f64>,
    /// Solver time, weights and sweeps included.
    pub solve: f64,
    pub total: f64,
}

impl StageTimings {
    pub fn mean_sweep(&self) -> f64 {
        if self.sweeps.is_empty() {
            0.0
        } else {
            self.sweeps.iter().sum::<f64>() / self.sweeps.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaMeta {
    pub metric: DissimilarityMetric,
    pub nodes: usize,
    pub max: f64,
    pub mean: f64,
    /// Set for CC-LLE runs: `delta` or `commute`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<LleKernel>,
    /// Graph volume `Ω = 2|E|`, for commute-time dissimilarities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
}

impl DeltaMeta {
    fn new(delta: &DissimilarityMatrix, kernel: Option<LleKernel>, volume: Option<f64>) -> Self {
        let n = delta.node_count();
        let mean = if n > 1 {
            delta.matrix().sum() / (n * (n - 1)) as f64
        } else {
            0.0
        };
        DeltaMeta {
            metric: delta.metric,
            nodes: n,
            max: delta.max(),
            mean,
            kernel,
            volume,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbedOutcome {
    pub centrality: CentralityVector,
    pub radii: RadiusMap,
    pub delta: DissimilarityMatrix,
    pub delta_meta: DeltaMeta,
    pub solution: Solution,
    /// Weight matrix and diagnostics for CC-LLE runs.
    pub lle: Option<(WeightMatrix, WeightDiagnostics)>,
    pub timings: StageTimings,
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let started = Instant::now();
    let out = f();
    *slot = started.elapsed().as_secs_f64();
    out
}

/// Centrality, radii, dissimilarities and the selected solver. Errors carry
/// the name of the stage that raised them.
pub fn embed_graph(g: &Graph, s: &EmbedSettings) -> Result<EmbedOutcome> {
    let started = Instant::now();
    let mut t = StageTimings::default();

    let centrality =
        timed(&mut t.centrality, || compute(g, s.centrality, s.betweenness_norm)).map_err(|e| e.in_stage("centrality"))?;
    let radii = timed(&mut t.radii, || radius_map_with_floor(&centrality, g, s.transform, s.floor))
        .map_err(|e| e.in_stage("radius map"))?;

    let wants_commute = s.algorithm == Algorithm::Cclle && s.lle_kernel == LleKernel::Commute;
    let (delta, commute) = timed(&mut t.dissimilarity, || -> Result<_> {
        if s.metric == DissimilarityMetric::Ectd {
            let k = commute_kernel(g)?;
            Ok((ectd_from_kernel(&k), Some(k)))
        } else {
            Ok((compute_delta(g, s.metric)?, None))
        }
    })
    .map_err(|e| e.in_stage("dissimilarity"))?;
    let volume = commute.as_ref().map(|k| k.volume);

    let (solution, lle, kernel_kind) = match s.algorithm {
        Algorithm::Ccmds => {
            let solution = timed(&mut t.solve, || solve_ccmds(g, &delta, &radii.radii, &s.mds))
                .map_err(|e| e.in_stage("cc-mds"))?;
            (solution, None, None)
        }
        Algorithm::Cclle => {
            let kernel: KernelMatrix = timed(&mut t.kernel, || -> Result<_> {
                if wants_commute {
                    let k = match &commute {
                        Some(k) => KernelMatrix::from_commute(k),
                        None => KernelMatrix::from_commute(&commute_kernel(g)?),
                    };
                    Ok(k)
                } else {
                    Ok(double_centered_kernel(&delta))
                }
            })
            .map_err(|e| e.in_stage("kernel"))?;
            let solve_started = Instant::now();
            let (weights, diagnostics) = timed(&mut t.weights, || build_weight_matrix(g, &kernel, &radii.radii, &s.lle))
                .map_err(|e| e.in_stage("cc-lle weights"))?;
            drop(kernel);
            let mut none = |_: usize, _: &crate::embedding::Embedding| {};
            let solution = sweep_embedding(g, &weights, &radii.radii, &s.lle, Some(&delta), &mut none)
                .map_err(|e| e.in_stage("cc-lle embedding"))?;
            t.solve = solve_started.elapsed().as_secs_f64();
            (solution, Some((weights, diagnostics)), Some(s.lle_kernel))
        }
    };
    t.sweeps = solution.trace.sweep_seconds.clone();
    t.total = started.elapsed().as_secs_f64();

    let delta_meta = DeltaMeta::new(&delta, kernel_kind, volume);
    Ok(EmbedOutcome {
        centrality,
        radii,
        delta,
        delta_meta,
        solution,
        lle,
        timings: t,
    })
}

fn default_alpha() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    1.0
}
fn default_epsilon() -> f64 {
    1e-4
}
fn default_hops() -> usize {
    1
}
fn default_dim() -> usize {
    2
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_svg_size() -> f64 {
    800.0
}
fn default_node_radius() -> f64 {
    3.0
}

/// Flat run configuration. Every key is optional except `input`; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub input: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub algorithm: Algorithm,
    #[serde(default = "default_centrality")]
    pub centrality: CentralityMeasure,
    #[serde(default)]
    pub betweenness_norm: BetweennessNorm,
    #[serde(default)]
    pub transform: TransformKind,
    /// Scale of the exponential transform.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Decay rate of the exponential transform.
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default)]
    pub floor: f64,
    #[serde(default = "default_metric")]
    pub dissimilarity: DissimilarityMetric,
    #[serde(default)]
    pub lle_kernel: LleKernel,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Use `epsilon` as-is instead of scaling it by `sqrt(N·p)`.
    #[serde(default)]
    pub epsilon_absolute: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "default_hops")]
    pub hops: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to 500 for CC-MDS and 100 for CC-LLE.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub edges: EdgeMode,
    #[serde(default = "default_svg_size")]
    pub svg_size: f64,
    #[serde(default = "default_node_radius")]
    pub node_radius: f64,
    #[serde(default)]
    pub strict_directed: bool,
    /// Also write the CC-LLE weight matrix as `weights.csv`.
    #[serde(default)]
    pub write_weights: bool,
}

fn default_centrality() -> CentralityMeasure {
    CentralityMeasure::Closeness
}
fn default_metric() -> DissimilarityMetric {
    DissimilarityMetric::Ectd
}

impl Default for PipelineConfig {
    fn default() -> Self {
        toml::from_str("").expect("all keys have defaults")
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters.unwrap_or(match self.algorithm {
            Algorithm::Ccmds => MdsConfig::default().max_outer_iters,
            Algorithm::Cclle => LleConfig::default().max_outer_iters,
        })
    }

    /// The same config with every default spelled out.
    pub fn resolved(&self) -> Self {
        PipelineConfig {
            max_iters: Some(self.max_iters()),
            ..self.clone()
        }
    }

    pub fn settings(&self) -> Result<EmbedSettings> {
        if !(self.svg_size > 0.0 && self.svg_size.is_finite()) {
            return Err(Error::Config(format!("svg_size must be positive, got {}", self.svg_size)));
        }
        if !(self.node_radius > 0.0 && self.node_radius.is_finite()) {
            return Err(Error::Config(format!("node_radius must be positive, got {}", self.node_radius)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.max_iters() == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        let transform = match self.transform {
            TransformKind::DiameterLinear => RadiusTransform::DiameterLinear,
            TransformKind::Exponential => RadiusTransform::Exponential {
                alpha: self.alpha,
                beta: self.beta,
            },
        };
        let tolerance = if self.epsilon_absolute {
            Tolerance::Absolute(self.epsilon)
        } else {
            Tolerance::ScaleAware(self.epsilon)
        };
        let mds = MdsConfig {
            dim: self.dim,
            lambda: self.lambda,
            tolerance,
            max_outer_iters: self.max_iters(),
            seed: self.seed,
            ..MdsConfig::default()
        };
        let lle = LleConfig {
            hops: self.hops,
            ridge: self.sigma,
            tolerance,
            max_outer_iters: self.max_iters(),
            seed: self.seed,
            dim: self.dim,
            track_stress: true,
            ..LleConfig::default()
        };
        Ok(EmbedSettings {
            algorithm: self.algorithm,
            centrality: self.centrality,
            betweenness_norm: self.betweenness_norm,
            transform,
            floor: self.floor,
            metric: self.dissimilarity,
            lle_kernel: self.lle_kernel,
            mds,
            lle,
        })
    }

    pub fn svg_layout(&self, nodes: usize) -> SvgLayout {
        SvgLayout {
            width: self.svg_size,
            height: self.svg_size,
            node_radius: self.node_radius,
            draw_edges: self.edges.draw(nodes),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    fn of(path: String, data: &[u8]) -> Self {
        FileEntry {
            path,
            sha256: sha256_hex(data),
            bytes: data.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub nodes: usize,
    pub edges: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: Option<f64>,
    pub mean_edge_length: f64,
    pub max_edge_length: f64,
    pub smoothness: f64,
    /// CC-LLE rows that fell back to minimum-norm weights.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fallback_rows: Vec<usize>,
}

/// Everything needed to repeat a run: tool version, generator, input hash,
/// fully resolved config and the hashes of the files written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub input: FileEntry,
    pub config: PipelineConfig,
    pub files: Vec<FileEntry>,
    pub summary: RunSummary,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn file(&self, name: &str) -> Option<&FileEntry> {
        self.files.iter().find(|f| f.path == name)
    }
}

pub fn sha256_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

/// Reads an edge list and reports its raw bytes alongside the graph.
pub fn load_graph(path: &Path, strict_directed: bool) -> Result<(Graph, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let (g, report) = parse_edge_list(bytes.as_slice(), &ParseOptions { strict_directed })?;
    if report.self_loops_dropped > 0 || report.duplicates_collapsed > 0 {
        log::info!(
            "{}: dropped {} self-loops, collapsed {} duplicate edges",
            path.display(),
            report.self_loops_dropped,
            report.duplicates_collapsed
        );
    }
    Ok((g, bytes))
}

fn write_file(dir: &Path, name: &str, data: &[u8], files: &mut Vec<FileEntry>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, data).map_err(|e| Error::io(path.display().to_string(), e).in_stage("write"))?;
    files.push(FileEntry::of(name.to_string(), data));
    Ok(())
}

/// Runs the configured pipeline and writes its artifacts into
/// `cfg.output_dir`: `centralities.csv`, `delta_meta.json`, `embedding.csv`,
/// `trace.csv`, `layout.svg` (2-D only) and `manifest.json`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest> {
    if cfg.input.as_os_str().is_empty() {
        return Err(Error::Config("no input edge list given".into()));
    }
    let settings = cfg.settings()?;
    let (g, input_bytes) = load_graph(&cfg.input, cfg.strict_directed).map_err(|e| e.in_stage("parse"))?;
    let out = embed_graph(&g, &settings)?;
    log::info!(
        "{} nodes: centrality {:.3}s, dissimilarity {:.3}s, kernel {:.3}s, weights {:.3}s, {} sweeps at {:.4}s, total {:.3}s",
        g.node_count(),
        out.timings.centrality,
        out.timings.dissimilarity,
        out.timings.kernel,
        out.timings.weights,
        out.timings.sweeps.len(),
        out.timings.mean_sweep(),
        out.timings.total
    );

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e).in_stage("write"))?;
    let mut files = Vec::new();
    write_file(dir, "centralities.csv", out.centrality.to_csv(&g).as_bytes(), &mut files)?;
    let meta = serde_json::to_string_pretty(&out.delta_meta).expect("metadata serializes") + "\n";
    write_file(dir, "delta_meta.json", meta.as_bytes(), &mut files)?;
    let emb = &out.solution.embedding;
    write_file(dir, "embedding.csv", emb.to_csv(&g).as_bytes(), &mut files)?;
    write_file(dir, "trace.csv", out.solution.trace.to_csv().as_bytes(), &mut files)?;
    if emb.dim() == 2 {
        let svg = render_svg(emb, &g, &out.centrality, &cfg.svg_layout(g.node_count()))
            .map_err(|e| e.in_stage("render"))?;
        write_file(dir, "layout.svg", svg.as_bytes(), &mut files)?;
    } else {
        log::info!("{}-D layout: SVG skipped, see embedding.csv", emb.dim());
    }

    if let (true, Some((w, _))) = (cfg.write_weights, out.lle.as_ref()) {
        write_file(dir, "weights.csv", w.to_csv(&g).as_bytes(), &mut files)?;
    }

    let lengths: EdgeLengthReport = edge_length_report(emb, &g);
    let trace = &out.solution.trace;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        rng: RNG_NAME.to_string(),
        input: FileEntry::of(cfg.input.display().to_string(), &input_bytes),
        config: cfg.resolved(),
        files,
        summary: RunSummary {
            nodes: g.node_count(),
            edges: g.edge_count(),
            iterations: trace.len(),
            converged: trace.converged,
            final_objective: trace.last().map(|r| r.objective),
            mean_edge_length: lengths.mean,
            max_edge_length: lengths.max,
            smoothness: lengths.smoothness,
            fallback_rows: out.lle.map(|(_, d)| d.fallback_rows).unwrap_or_default(),
        },
    };
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()).map_err(|e| Error::io(path.display().to_string(), e).in_stage("write"))?;
    Ok(manifest)
}

/// Repeats the run recorded in a manifest, optionally into another directory.
/// The input file must still hash to the recorded value.
pub fn rerun_from_manifest(manifest: &Manifest, output_dir: Option<&Path>) -> Result<Manifest> {
    let mut cfg = manifest.config.clone();
    if let Some(dir) = output_dir {
        cfg.output_dir = dir.to_path_buf();
    }
    let bytes = fs::read(&cfg.input).map_err(|e| Error::io(cfg.input.display().to_string(), e))?;
    let actual = sha256_hex(&bytes);
    if actual != manifest.input.sha256 {
        return Err(Error::Parse {
            line: 0,
            message: format!(
                "{} has changed since the manifest was written (sha256 {actual}, expected {})",
                cfg.input.display(),
                manifest.input.sha256
            ),
        }
        .in_stage("parse"));
    }
    run_pipeline(&cfg)
}
