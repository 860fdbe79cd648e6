//! `bpeel`: run Border-Peeling clustering and its experiments from the
//! command line.
//!
//! Exit codes: 0 success, 2 validation error, 3 degenerate input, 4 I/O
//! error, 1 internal error.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use border_peel::experiments::{sweep, validate_lemma, OffsetScale};
use border_peel::export::trace_to_json;
use border_peel::metrics::score_against;
use border_peel::{
    cluster, confidence_ranking, generate, load_csv, ClusterLabels, Error, GeneratorSpec,
    PeelParams, PointSet, ResultDocument,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bpeel", version, about = "Border-Peeling clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a dataset and write labels, result and trace files.
    Cluster {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        peel: PeelArgs,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write a cluster scatter plot and one snapshot per peeling iteration.
        #[arg(long)]
        plot: bool,
    },
    /// Compare the Monte-Carlo mean of the initial density influence of
    /// uniform points with its closed form.
    ValidateLemma {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 21)]
        bins: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        plot: bool,
    },
    /// Grid of threshold offsets and peel fractions, scored against ground truth.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        peel: PeelArgs,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "-2,0,2"
        )]
        offsets: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.06,0.1,0.14")]
        fractions: Vec<f64>,
        /// Runs per cell. Generated data is redrawn with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        /// Multiply offsets by this fraction of the estimated threshold
        /// instead of adding them as given.
        #[arg(long)]
        offset_unit: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        plot: bool,
    },
    /// Print the most and least confident members of a cluster.
    Rank {
        /// result.json written by `cluster`.
        #[arg(long)]
        result: PathBuf,
        #[arg(long)]
        cluster: i64,
        #[arg(long, default_value_t = 10)]
        m: usize,
    },
    /// Write a synthetic dataset as CSV (ground truth in the last column).
    Generate {
        #[arg(long, default_value = "gaussian2")]
        generate: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV, one point per row.
    #[arg(
        long,
        conflicts_with = "generate",
        required_unless_present = "generate"
    )]
    input: Option<PathBuf>,
    /// `gaussian2`, `gaussian2-adjacent`, `uniform`, or a JSON generator spec file.
    #[arg(long)]
    generate: Option<String>,
    /// Generator seed (default 0, or the seed stored in a JSON spec).
    #[arg(long)]
    seed: Option<u64>,
    /// Points per component for the built-in generators.
    #[arg(long, default_value_t = 200)]
    count: usize,
    #[arg(long)]
    has_header: bool,
    /// Zero-based column holding ground-truth labels.
    #[arg(long)]
    label_column: Option<usize>,
}

#[derive(Args)]
struct PeelArgs {
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 3.0)]
    c: f64,
    #[arg(long, default_value_t = 0.10)]
    peel_fraction: f64,
    /// Fixed maximal threshold; estimated from the data when absent.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda_offset: f64,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long)]
    min_cluster_size: Option<usize>,
    #[arg(long, default_value_t = PeelParams::default().termination_sensitivity)]
    termination_sensitivity: f64,
}

impl PeelArgs {
    fn params(&self) -> PeelParams {
        PeelParams {
            k: self.k,
            c: self.c,
            peel_fraction: self.peel_fraction,
            lambda: self.lambda,
            lambda_offset: self.lambda_offset,
            max_iterations: self.max_iters,
            termination_sensitivity: self.termination_sensitivity,
            ..PeelParams::default()
        }
    }
}

/// Built-in presets, or a JSON spec file whose own seed is kept unless
/// `seed` is given. `offset` is added to the seed either way.
fn generator(
    name: &str,
    count: usize,
    seed: Option<u64>,
    offset: u64,
) -> Result<GeneratorSpec, Error> {
    let base = seed.unwrap_or(0);
    Ok(match name {
        "gaussian2" => GeneratorSpec::two_gaussians(5.0, count, base + offset),
        "gaussian2-adjacent" => GeneratorSpec::two_gaussians(2.0, count, base + offset),
        "uniform" => GeneratorSpec::UniformInterval {
            low: -1.0,
            high: 1.0,
            count,
            seed: base + offset,
        },
        path => {
            let spec: GeneratorSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
            let s = seed.unwrap_or(spec.seed());
            spec.with_seed(s + offset)
        }
    })
}

impl DataArgs {
    fn load(&self, offset: u64) -> Result<PointSet, Error> {
        match (&self.input, &self.generate) {
            (Some(path), _) => {
                load_csv(path, self.has_header, self.label_column).map_err(|e| match e {
                    Error::Io(io) => Error::Io(std::io::Error::new(
                        io.kind(),
                        format!("{}: {io}", path.display()),
                    )),
                    e => e,
                })
            }
            (None, Some(name)) => generate(&generator(name, self.count, self.seed, offset)?),
            (None, None) => Err(Error::Validation(
                "either --input or --generate is required".into(),
            )),
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn warn_projection(points: &PointSet) {
    if points.dim() > 2 {
        eprintln!(
            "warning: {}-dimensional data plotted on its first two coordinates",
            points.dim()
        );
    }
}

fn run_cluster(data: &DataArgs, peel: &PeelArgs, out: &Path, plot: bool) -> Result<(), Error> {
    let points = data.load(0)?;
    let result = cluster(&points, &peel.params(), peel.min_cluster_size)?;
    let score = points
        .ground_truth()
        .map(|_| score_against(&result, &points))
        .transpose()?;
    fs::create_dir_all(out)?;

    let mut labels = Vec::new();
    result.labels.write_csv(&mut labels)?;
    write(&out.join("labels.csv"), labels)?;
    write(
        &out.join("result.json"),
        ResultDocument::new(&result, score.clone()).to_json()?,
    )?;
    write(&out.join("trace.json"), trace_to_json(&result.trace)?)?;

    if plot {
        warn_projection(&points);
        let title = format!(
            "{} clusters, {} noise points",
            result.labels.n_clusters(),
            result.labels.n_noise()
        );
        write(
            &out.join("clusters.svg"),
            svg::clusters(&points, result.labels.labels(), &title),
        )?;
        let dir = out.join("peel");
        fs::create_dir_all(&dir)?;
        for t in 1..=result.trace.n_iterations() {
            write(
                &dir.join(format!("iter_{t:03}.svg")),
                svg::peel_snapshot(&points, &result.trace, t),
            )?;
        }
    }

    println!(
        "{} points, {} clusters, {} noise, {} iterations ({:?}), lambda {:.6}",
        points.len(),
        result.labels.n_clusters(),
        result.labels.n_noise(),
        result.trace.n_iterations(),
        result.trace.termination,
        result.trace.lambda
    );
    if let Some(s) = score {
        println!("ARI {:.6}  AMI {:.6}", s.ari, s.ami);
    }
    Ok(())
}

fn run_lemma(
    n: usize,
    trials: usize,
    bins: usize,
    seed: u64,
    out: &Path,
    plot: bool,
) -> Result<(), Error> {
    let report = validate_lemma(n, trials, bins, seed)?;
    fs::create_dir_all(out)?;
    let csv = report.to_csv();
    write(&out.join("lemma.csv"), &csv)?;
    if plot {
        write(&out.join("lemma.svg"), svg::lemma(&report))?;
    }
    print!("{csv}");
    println!("max abs error {:.6}", report.max_abs_error());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    data: &DataArgs,
    peel: &PeelArgs,
    offsets: &[f64],
    fractions: &[f64],
    repeats: usize,
    offset_unit: Option<f64>,
    out: &Path,
    plot: bool,
) -> Result<(), Error> {
    let scale = offset_unit.map_or(OffsetScale::Absolute, OffsetScale::FractionOfLambda);
    let report = sweep(
        |r| data.load(r as u64),
        &peel.params(),
        peel.min_cluster_size,
        offsets,
        fractions,
        scale,
        repeats,
    )?;
    fs::create_dir_all(out)?;
    let csv = report.to_csv();
    write(&out.join("sweep.csv"), &csv)?;
    if plot {
        write(&out.join("sweep.svg"), svg::sweep(&report))?;
    }
    print!("{csv}");
    println!(
        "ARI spread {:.6}  AMI spread {:.6}",
        report.ari_spread(),
        report.ami_spread()
    );
    Ok(())
}

fn run_rank(result: &Path, cluster_id: i64, m: usize) -> Result<(), Error> {
    let doc = ResultDocument::from_json(&fs::read_to_string(result)?)?;
    let labels = ClusterLabels::from_assignments(&doc.labels);
    let ranking = confidence_ranking(&labels, &doc.confidence, cluster_id, m)?;
    let join = |ids: &[usize]| {
        ids.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    println!("top: {}", join(&ranking.top));
    println!("bottom: {}", join(&ranking.bottom));
    Ok(())
}

fn run_generate(name: &str, seed: Option<u64>, count: usize, out: &Path) -> Result<(), Error> {
    let points = generate(&generator(name, count, seed, 0)?)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    points.save_csv(out, true)?;
    println!("{} points written to {}", points.len(), out.display());
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse { .. }
        | Error::EmptyInput
        | Error::Validation(_)
        | Error::Domain(_)
        | Error::Query(_) => 2,
        Error::Json(_) => 2,
        Error::Degenerate(_) => 3,
        Error::Io(_) => 4,
        Error::Invariant(_) => 1,
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("BP_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| {
            Error::Validation(format!(
                "BP_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Validation(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads().and_then(|()| match &cli.command {
        Command::Cluster {
            data,
            peel,
            out,
            plot,
        } => run_cluster(data, peel, out, *plot),
        Command::ValidateLemma {
            n,
            trials,
            bins,
            seed,
            out,
            plot,
        } => run_lemma(*n, *trials, *bins, *seed, out, *plot),
        Command::Sweep {
            data,
            peel,
            offsets,
            fractions,
            repeats,
            offset_unit,
            out,
            plot,
        } => run_sweep(
            data,
            peel,
            offsets,
            fractions,
            *repeats,
            *offset_unit,
            out,
            *plot,
        ),
        Command::Rank { result, cluster, m } => run_rank(result, *cluster, *m),
        Command::Generate {
            generate,
            seed,
            count,
            out,
        } => run_generate(generate, *seed, *count, out),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
