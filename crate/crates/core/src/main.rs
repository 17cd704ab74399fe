use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use centrality_embed::centrality::{centrality_histogram, compute, BetweennessNorm, CentralityMeasure};
use centrality_embed::dissimilarity::{compute_delta, DissimilarityMetric};
use centrality_embed::embedding::Embedding;
use centrality_embed::generate::sparse_ring;
use centrality_embed::graph::Graph;
use centrality_embed::pipeline::{
    load_graph, rerun_from_manifest, run_pipeline, Algorithm, EdgeMode, LleKernel, Manifest, PipelineConfig,
    TransformKind,
};
use centrality_embed::report::runtime_report;
use centrality_embed::svg::{render_svg, SvgLayout};
use centrality_embed::Error;

#[derive(Parser)]
#[command(name = "centrality-embed", version, about = "Centrality-constrained graph layouts")]
struct Cli {
    /// Worker threads for parallel stages; results do not depend on it.
    #[arg(long, global = true, env = "CEMBED_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a centrality vector and optionally its histogram.
    Centrality {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "closeness")]
        measure: CentralityMeasure,
        /// Betweenness scaling: global or conventional.
        #[arg(long, default_value = "global", value_parser = parse_norm)]
        betweenness_norm: BetweennessNorm,
        /// Output CSV; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, requires = "histogram_out")]
        histogram: Option<usize>,
        #[arg(long)]
        histogram_out: Option<PathBuf>,
        #[arg(long)]
        strict_directed: bool,
    },
    /// Write a dense dissimilarity matrix as CSV.
    Delta {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "ectd")]
        metric: DissimilarityMetric,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        strict_directed: bool,
    },
    /// Constrained stress layout (CC-MDS).
    EmbedMds(EmbedArgs),
    /// Constrained locally linear layout (CC-LLE).
    EmbedLle(EmbedArgs),
    /// Run from a config file, or repeat a run from its manifest.
    Run {
        #[arg(long, conflicts_with = "manifest")]
        config: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the fully resolved config for a set of options.
    Config(EmbedArgs),
    /// Draw an existing 2-D embedding as SVG.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
        #[arg(long, default_value = "closeness")]
        centrality: CentralityMeasure,
        #[arg(long, default_value = "auto")]
        edges: EdgeMode,
        #[arg(long, default_value_t = 800.0)]
        size: f64,
        #[arg(long, default_value_t = 3.0)]
        node_radius: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the pipeline on sparse ring graphs of growing size.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1000,2000")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 6.0)]
        avg_degree: f64,
        /// Edge lists to time instead of generated graphs.
        #[arg(long, value_delimiter = ',')]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        embed: EmbedArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Options shared by the embedding commands. Each one overrides the
/// matching key of `--config`.
#[derive(Args, Clone, Default)]
struct EmbedArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    centrality: Option<CentralityMeasure>,
    #[arg(long, value_parser = parse_norm)]
    betweenness_norm: Option<BetweennessNorm>,
    #[arg(long)]
    transform: Option<TransformKind>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    floor: Option<f64>,
    #[arg(long)]
    dissimilarity: Option<DissimilarityMetric>,
    #[arg(long)]
    lle_kernel: Option<LleKernel>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    epsilon_absolute: bool,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    hops: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    edges: Option<EdgeMode>,
    #[arg(long)]
    strict_directed: bool,
    #[arg(long)]
    write_weights: bool,
}

fn parse_norm(s: &str) -> Result<BetweennessNorm, String> {
    match s {
        "global" => Ok(BetweennessNorm::Global),
        "conventional" => Ok(BetweennessNorm::Conventional),
        other => Err(format!("unknown betweenness norm `{other}`; expected global or conventional")),
    }
}

impl EmbedArgs {
    fn build(&self, algorithm: Option<Algorithm>) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),+) => {
                $(if let Some(v) = self.$field.clone() { cfg.$field = v; })+
            };
        }
        set!(input, output_dir, algorithm, centrality, betweenness_norm, transform, alpha, beta, floor);
        set!(dissimilarity, lle_kernel, lambda, epsilon, hops, dim, seed, edges);
        if self.sigma.is_some() {
            cfg.sigma = self.sigma;
        }
        if self.max_iters.is_some() {
            cfg.max_iters = self.max_iters;
        }
        cfg.epsilon_absolute |= self.epsilon_absolute;
        cfg.strict_directed |= self.strict_directed;
        cfg.write_weights |= self.write_weights;
        if let Some(a) = algorithm {
            cfg.algorithm = a;
        }
        Ok(cfg)
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.display().to_string(),
            source: e,
        }),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        }),
    }
}

fn load(path: &Path, strict_directed: bool) -> Result<Graph, Error> {
    load_graph(path, strict_directed).map(|(g, _)| g)
}

fn report_manifest(m: &Manifest) {
    println!(
        "{} nodes, {} edges: {} iterations, converged={}, outputs in {}",
        m.summary.nodes,
        m.summary.edges,
        m.summary.iterations,
        m.summary.converged,
        m.config.output_dir.display()
    );
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Centrality {
            input,
            measure,
            betweenness_norm,
            out,
            histogram,
            histogram_out,
            strict_directed,
        } => {
            let g = load(&input, strict_directed)?;
            let c = compute(&g, measure, betweenness_norm)?;
            write_output(out.as_deref(), &c.to_csv(&g))?;
            if let Some(bins) = histogram {
                write_output(histogram_out.as_deref(), &centrality_histogram(&c, bins)?.to_csv())?;
            }
        }
        Command::Delta {
            input,
            metric,
            out,
            strict_directed,
        } => {
            let g = load(&input, strict_directed)?;
            let delta = compute_delta(&g, metric)?;
            write_output(out.as_deref(), &delta.to_csv(g.labels())?)?;
        }
        Command::EmbedMds(args) => report_manifest(&run_pipeline(&args.build(Some(Algorithm::Ccmds))?)?),
        Command::EmbedLle(args) => report_manifest(&run_pipeline(&args.build(Some(Algorithm::Cclle))?)?),
        Command::Run {
            config,
            manifest,
            output_dir,
        } => {
            let m = match (config, manifest) {
                (_, Some(path)) => rerun_from_manifest(&Manifest::from_file(&path)?, output_dir.as_deref())?,
                (Some(path), None) => {
                    let mut cfg = PipelineConfig::from_file(&path)?;
                    if let Some(dir) = output_dir {
                        cfg.output_dir = dir;
                    }
                    run_pipeline(&cfg)?
                }
                (None, None) => return Err(Error::Config("run needs --config or --manifest".into())),
            };
            report_manifest(&m);
        }
        Command::Config(args) => print!("{}", args.build(None)?.resolved().to_toml_string()),
        Command::Render {
            input,
            embedding,
            centrality,
            edges,
            size,
            node_radius,
            out,
        } => {
            let g = load(&input, false)?;
            let text = fs::read_to_string(&embedding).map_err(|e| Error::Io {
                path: embedding.display().to_string(),
                source: e,
            })?;
            let emb = Embedding::from_csv(&text, &g)?;
            let c = compute(&g, centrality, BetweennessNorm::Global)?;
            let layout = SvgLayout {
                width: size,
                height: size,
                node_radius,
                draw_edges: edges.draw(g.node_count()),
            };
            write_output(Some(&out), &render_svg(&emb, &g, &c, &layout)?)?;
        }
        Command::Bench {
            sizes,
            avg_degree,
            inputs,
            embed,
            out,
        } => {
            let cfg = embed.build(None)?;
            let settings = cfg.settings()?;
            let graphs = if inputs.is_empty() {
                sizes
                    .iter()
                    .map(|&n| Ok((format!("ring{n}"), sparse_ring(n, avg_degree, cfg.seed)?)))
                    .collect::<Result<Vec<_>, Error>>()?
            } else {
                inputs
                    .iter()
                    .map(|p| Ok((p.display().to_string(), load(p, cfg.strict_directed)?)))
                    .collect::<Result<Vec<_>, Error>>()?
            };
            write_output(out.as_deref(), &runtime_report(&graphs, &settings)?.to_csv())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                // Stage wrappers already print their source inline.
                if !msg.contains(&s.to_string()) {
                    msg.push_str(&format!(": {s}"));
                }
                source = s.source();
            }
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
