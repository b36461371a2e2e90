use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use icnnm::analysis::diagnose;
use icnnm::conv::DEFAULT_EXPLICIT_CAP;
use icnnm::io::{self, BitDepth};
use icnnm::metrics::evaluate;
use icnnm::spectral::{learn_ensemble_basis_with, LearnOptions, DEFAULT_RANK_TOL};
use icnnm::synth::synth_low_conv_rank;
use icnnm::{
    cnnm_solve, generate_mask, icnnm_solve, DenseTensor, Error, KernelShape, MaskSpec, Result,
    SamplingMask, SolveReport, SolverConfig,
};
use serde_json::json;

#[derive(Parser)]
#[command(name = "icnnm", version, about = "Tensor completion with pre-learned convolution eigenbases")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn an eigenbasis from reference tensors or images
    Learn {
        #[arg(long, num_args = 1.., required = true)]
        refs: Vec<PathBuf>,
        #[arg(long, value_parser = parse_list)]
        kernel: ::std::vec::Vec<usize>,
        /// Scale each reference to unit Frobenius norm first
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Complete a tensor with a pre-learned eigenbasis
    Complete {
        #[command(flatten)]
        io: SolveIo,
        #[arg(long)]
        basis: PathBuf,
    },
    /// Complete a tensor with the convolution nuclear norm baseline
    Cnnm {
        #[command(flatten)]
        io: SolveIo,
        #[arg(long, value_parser = parse_list)]
        kernel: ::std::vec::Vec<usize>,
    },
    /// Recovery diagnostics for a target, basis and mask
    Analyze {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        /// Largest convolution matrix materialized for the coherences
        #[arg(long, default_value_t = DEFAULT_EXPLICIT_CAP)]
        explicit_cap: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a sampling mask
    Mask(MaskArgs),
    /// Generate a tensor of low convolution rank
    Synth {
        #[arg(long, value_parser = parse_list)]
        dims: ::std::vec::Vec<usize>,
        #[arg(long, value_parser = parse_list)]
        kernel: ::std::vec::Vec<usize>,
        #[arg(long)]
        rank: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// PSNR, MSE and SSIM of an estimate against a reference
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        peak: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert between PGM/PPM images and TNSR tensors
    Convert {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        /// Bit depth when writing PGM
        #[arg(long, default_value = "8")]
        depth: Depth,
    },
}

#[derive(Args)]
struct SolveIo {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mask: PathBuf,
    /// Solver configuration as a flat JSON object; missing fields take defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long, value_parser = parse_list)]
    dims: ::std::vec::Vec<usize>,
    #[arg(long)]
    kind: MaskKind,
    /// Observed fraction
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    block: usize,
    /// Missing frame indices for `frame-missing`
    #[arg(long, value_parser = parse_list)]
    frames: Option<::std::vec::Vec<usize>>,
    /// Number of trailing frames to predict for `tail-prediction`
    #[arg(long)]
    predict: Option<usize>,
    #[arg(long, default_value_t = 0)]
    axis: usize,
    /// Source file for `explicit-file`
    #[arg(long)]
    path: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskKind {
    Bernoulli,
    BlockGrid,
    FrameMissing,
    TailPrediction,
    ExplicitFile,
}

#[derive(Clone, Copy, ValueEnum)]
enum Depth {
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

/// Comma or `x` separated sizes. Fields using it are spelled `::std::vec::Vec` so clap
/// takes the whole list as one value.
fn parse_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split([',', 'x'])
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pgm" | "ppm" | "pnm")
    )
}

fn load_any(path: &Path) -> Result<DenseTensor> {
    if is_image(path) {
        io::load_image(path)
    } else {
        io::load_tensor(path)
    }
}

fn missing(what: &str) -> Error {
    Error::InvalidArgument(format!("--{what} is required for this mask kind"))
}

impl MaskArgs {
    fn spec(&self) -> Result<MaskSpec> {
        let rate = || self.rate.ok_or_else(|| missing("rate"));
        Ok(match self.kind {
            MaskKind::Bernoulli => MaskSpec::Bernoulli {
                rate: rate()?,
                seed: self.seed,
            },
            MaskKind::BlockGrid => MaskSpec::BlockGrid {
                rate: rate()?,
                block: self.block,
                seed: self.seed,
            },
            MaskKind::FrameMissing => {
                if self.rate.is_none() && self.frames.is_none() {
                    return Err(missing("rate or --frames"));
                }
                MaskSpec::FrameMissing {
                    rate: self.rate,
                    frames: self.frames.clone(),
                    axis: self.axis,
                    seed: self.seed,
                }
            }
            MaskKind::TailPrediction => MaskSpec::TailPrediction {
                predict: self.predict.ok_or_else(|| missing("predict"))?,
                axis: self.axis,
            },
            MaskKind::ExplicitFile => MaskSpec::ExplicitFile {
                path: self.path.clone().ok_or_else(|| missing("path"))?,
            },
        })
    }
}

struct Problem {
    observed: DenseTensor,
    mask: SamplingMask,
    cfg: SolverConfig,
}

impl SolveIo {
    fn load(&self) -> Result<Problem> {
        let observed = load_any(&self.input)?;
        let mask = SamplingMask::new(load_any(&self.mask)?)?;
        let cfg = match &self.config {
            Some(p) => io::load_json(p)?,
            None => SolverConfig::default(),
        };
        Ok(Problem { observed, mask, cfg })
    }

    fn finish(&self, rec: &DenseTensor, report: &SolveReport) -> Result<()> {
        io::save_tensor(&self.out, rec)?;
        if let Some(p) = &self.report {
            io::save_json(p, report)?;
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Learn {
            refs,
            kernel,
            normalize,
            out,
        } => {
            let tensors = refs.iter().map(|p| load_any(p)).collect::<Result<Vec<_>>>()?;
            let ks = KernelShape::new(kernel)?;
            let basis = learn_ensemble_basis_with(&tensors, &ks, &LearnOptions { normalize })?;
            io::save_basis(out, &basis)
        }
        Command::Complete { io: files, basis } => {
            let p = files.load()?;
            let basis = io::load_basis(&basis)?;
            let (rec, report) = icnnm_solve(&p.observed, &p.mask, &basis, &p.cfg)?;
            files.finish(&rec, &report)
        }
        Command::Cnnm { io: files, kernel } => {
            let p = files.load()?;
            let ks = KernelShape::new(kernel)?;
            let (rec, report) = cnnm_solve(&p.observed, &p.mask, &ks, &p.cfg)?;
            files.finish(&rec, &report)
        }
        Command::Analyze {
            target,
            basis,
            mask,
            rank_tol,
            explicit_cap,
            out,
        } => {
            let target = load_any(&target)?;
            let basis = io::load_basis(&basis)?;
            let mask = SamplingMask::new(load_any(&mask)?)?;
            let diag = diagnose(&target, &basis, &mask, rank_tol, explicit_cap)?;
            io::save_json(out, &diag)
        }
        Command::Mask(args) => {
            let mask = generate_mask(&args.dims, &args.spec()?)?;
            io::save_tensor(&args.out, mask.tensor())
        }
        Command::Synth {
            dims,
            kernel,
            rank,
            seed,
            out,
        } => {
            let ks = KernelShape::new(kernel)?;
            io::save_tensor(out, &synth_low_conv_rank(&dims, &ks, rank, seed)?)
        }
        Command::Metrics {
            reference,
            est,
            peak,
            out,
        } => {
            let report = evaluate(&load_any(&reference)?, &load_any(&est)?, peak)?;
            match out {
                Some(p) => io::save_json(p, &report),
                None => {
                    println!("{}", serde_json::to_string_pretty(&report)?);
                    Ok(())
                }
            }
        }
        Command::Convert { from, to, depth } => {
            let t = load_any(&from)?;
            if is_image(&to) {
                let depth = match depth {
                    Depth::Eight => BitDepth::Eight,
                    Depth::Sixteen => BitDepth::Sixteen,
                };
                io::save_image(to, &t, depth)
            } else {
                io::save_tensor(to, &t)
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let doc = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{doc}");
            ExitCode::FAILURE
        }
    }
}
