//! `pcnn` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 malformed input, 3 inconsistent input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcnn::analytics::render_table;
use pcnn::distill::prune_model;
use pcnn::memory::MemoryImage;
use pcnn::presets::{generate, parse_model_shape};
use pcnn::pruned_io::{read_pcp1, write_pcp1};
use pcnn::sim::{parse_shape, simulate_model, ConvParams, FeatureMap};
use pcnn::tensor_io::{read_pct1, write_pct1};
use pcnn::{distill_model, encode, pack, unpack, DistillReport, Error, LayerWeights, PrunedModel, SparsityConfig};

#[derive(Parser)]
#[command(
    name = "pcnn",
    version,
    about = "Pattern-based kernel pruning and PE-array simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dense model (Gaussian weights) as PCT1.
    Gen {
        /// `vgg16[:side]`, `resnet18`, or `in:out:h:w[:stride[:pad]],...`
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Select per-layer patterns and write a distillation report.
    Distill {
        #[arg(long)]
        model: PathBuf,
        /// Text records `layer <i> n <n> v <v>`.
        #[arg(long, required_unless_present = "uniform", conflicts_with = "uniform")]
        config: Option<PathBuf>,
        /// Same `N:V` for every layer instead of a config file.
        #[arg(long)]
        uniform: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Project a dense model onto the reported patterns and encode as PCP1.
    Prune {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write Weight/Pattern SRAM images, PaC and hex dumps.
    Pack {
        #[arg(long)]
        pruned: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Cycle-simulate a pruned model and write a per-layer CSV.
    Simulate(SimulateArgs),
    /// Compression and FLOPs table against the dense baseline.
    Report {
        #[arg(long)]
        pruned: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Bits per dense weight (8 for int8, 32 for float).
        #[arg(long, default_value_t = 8)]
        baseline_bits: u32,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, required_unless_present = "from_images", conflicts_with = "from_images")]
    pruned: Option<PathBuf>,
    /// Directory written by `pack`.
    #[arg(long)]
    from_images: Option<PathBuf>,
    /// `HxWxC`
    #[arg(long)]
    input_shape: String,
    #[arg(long, default_value_t = 1.0)]
    act_density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    stride: u32,
    #[arg(long, default_value_t = 1)]
    padding: u32,
    #[arg(long)]
    out: PathBuf,
    /// Optional structured-text report.
    #[arg(long)]
    report: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

fn classify(err: &Error) -> u8 {
    match err {
        Error::Domain(_) => 1,
        Error::Format { .. } | Error::Io(_) => 2,
        Error::Config(_) | Error::Consistency(_) => 3,
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure {
            code: classify(&err),
            message: err.to_string(),
        }
    }
}

/// Attaches the file name to any error raised while handling it.
fn in_file<T>(path: &Path, r: pcnn::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure {
        code: classify(&e),
        message: format!("{}: {e}", path.display()),
    })
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    in_file(path, fs::read(path).map_err(Error::from))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    in_file(path, fs::read_to_string(path).map_err(Error::from))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
    in_file(path, fs::write(path, bytes).map_err(Error::from))
}

fn load_model(path: &Path) -> Result<Vec<LayerWeights>, Failure> {
    let bytes = read(path)?;
    in_file(path, read_pct1(&bytes))
}

fn load_pruned(path: &Path) -> Result<PrunedModel, Failure> {
    let bytes = read(path)?;
    in_file(path, read_pcp1(&bytes))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen { shape, seed, out } => {
            let shapes = parse_model_shape(&shape)?;
            let model = generate(&shapes, seed)?;
            write(&out, write_pct1(&model))?;
            println!("wrote {} layers to {}", model.len(), out.display());
        }
        Command::Distill {
            model,
            config,
            uniform,
            out,
        } => {
            let layers = load_model(&model)?;
            let cfg = match (config, uniform) {
                (Some(path), None) => {
                    let text = read_text(&path)?;
                    in_file(&path, SparsityConfig::parse(&text))?
                }
                (None, Some(spec)) => {
                    let (n, v) = spec
                        .split_once(':')
                        .and_then(|(n, v)| Some((n.parse::<u8>().ok()?, v.parse::<u32>().ok()?)))
                        .ok_or_else(|| Failure::usage(format!("--uniform expects N:V, got {spec:?}")))?;
                    SparsityConfig::uniform(layers.len(), n, v)?
                }
                _ => return Err(Failure::usage("give exactly one of --config or --uniform")),
            };
            let report = distill_model(&layers, &cfg)?;
            write(&out, report.to_text())?;
            for (i, l) in report.layers.iter().enumerate() {
                println!("layer {i}: n {} v {} residual {:.6}", l.n, l.v, l.residual);
            }
        }
        Command::Prune { model, report, out } => {
            let layers = load_model(&model)?;
            let text = read_text(&report)?;
            let report = in_file(&report, DistillReport::parse(&text))?;
            let projected = prune_model(&layers, &report)?;
            let pruned = encode(&projected, &report)?;
            write(&out, write_pcp1(&pruned))?;
            println!("wrote {} pruned layers to {}", pruned.layers.len(), out.display());
        }
        Command::Pack { pruned, out_dir } => {
            let model = load_pruned(&pruned)?;
            let image = pack(&model);
            in_file(&out_dir, image.write_dir(&out_dir))?;
            println!(
                "weight image {} bytes in {} segment(s), pattern image {} bytes in {} segment(s)",
                image.weight_image.len(),
                image.weight_segments().len(),
                image.pattern_image.len(),
                image.pattern_segments().len()
            );
        }
        Command::Simulate(args) => simulate(args)?,
        Command::Report {
            pruned,
            baseline,
            out,
            baseline_bits,
        } => {
            if baseline_bits == 0 {
                return Err(Failure::usage("--baseline-bits must be positive"));
            }
            let model = load_pruned(&pruned)?;
            let dense = load_model(&baseline)?;
            let shapes: Vec<_> = dense.iter().map(|l| l.shape()).collect();
            let table = render_table(&model, &shapes, baseline_bits)?;
            write(&out, &table)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let model = match (&args.pruned, &args.from_images) {
        (Some(path), None) => load_pruned(path)?,
        (None, Some(dir)) => {
            let image = in_file(dir, MemoryImage::read_dir(dir))?;
            in_file(dir, unpack(&image))?
        }
        _ => return Err(Failure::usage("give exactly one of --pruned or --from-images")),
    };
    let (h, w, c) = parse_shape(&args.input_shape)?;
    let input = FeatureMap::synthesize(c, h, w, args.act_density, args.seed)?;
    let params = vec![
        ConvParams {
            stride: args.stride,
            padding: args.padding,
        };
        model.layers.len()
    ];
    let report = simulate_model(&model, &input, &params)?;
    write(&args.out, report.to_csv())?;
    if let Some(path) = &args.report {
        write(path, report.to_text())?;
    }
    let t = &report.total;
    println!(
        "cycles {} dense {} speedup {:.4} weight-only speedup {:.4} utilization {:.4}",
        t.total_cycles, t.dense_cycles, t.speedup, t.weight_speedup, t.utilization
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
