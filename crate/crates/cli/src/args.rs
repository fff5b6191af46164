use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kernel_tv::{ChannelUpdate, CoupleRule, Error, KernelFamily, Method, NlConfig, SolverConfig};

pub const NOISE_NOTE: &str = "\
Noise convention: intensities are scaled to [0, 1] and corrupted as
I' = clamp(I * (1 + n), 0, 1) with n ~ N(0, (sigma/255)^2), one independent
draw per sample. --sigma is given on the 0-255 scale, so --sigma 20 means a
relative deviation of 20/255 (about 7.8%).";

#[derive(Parser, Debug)]
#[command(
    name = "ktv",
    version,
    about = "Kernel-space total-variation denoising and enhancement",
    after_help = NOISE_NOTE
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Denoise an image.
    #[command(after_help = NOISE_NOTE)]
    Denoise(DenoiseArgs),
    /// Export the kernel-space image for display.
    #[command(after_help = NOISE_NOTE)]
    Enhance(EnhanceArgs),
    /// Add multiplicative Gaussian noise.
    #[command(after_help = NOISE_NOTE)]
    Noise(NoiseArgs),
    /// Tabulate area ratio and PSNR over a kernel-parameter grid.
    #[command(after_help = NOISE_NOTE)]
    Sweep(SweepArgs),
    /// PSNR table over a directory of clean images.
    #[command(after_help = NOISE_NOTE)]
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct KernelArgs {
    /// Denoising method.
    #[arg(long, value_parser = parse_method, default_value = "gtv")]
    pub method: Method,
    /// Gaussian kernel width (required by gk-* methods).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Polynomial kernel degree (required by pk-* methods).
    #[arg(long)]
    pub degree: Option<f64>,
    /// Constant couple level for gray images. Gaussian accepts 0 or 1,
    /// polynomial a level in (0, 1]. Defaults to 0 (Gaussian) or 1 (polynomial).
    #[arg(long)]
    pub couple_level: Option<f64>,
}

impl KernelArgs {
    /// The kernel parameter matching the method's family.
    pub fn param(&self) -> Result<Option<f64>, Error> {
        let (g, p) = (self.delta, self.degree);
        match self.method.family() {
            Some(KernelFamily::Gaussian) if p.is_some() => Err(Error::Config(
                "--degree does not apply to a Gaussian method".into(),
            )),
            Some(KernelFamily::Polynomial) if g.is_some() => Err(Error::Config(
                "--delta does not apply to a polynomial method".into(),
            )),
            Some(KernelFamily::Gaussian) => Ok(g),
            Some(KernelFamily::Polynomial) => Ok(p),
            None if g.is_some() || p.is_some() => Err(Error::Config(format!(
                "{} takes no kernel parameter",
                self.method
            ))),
            None => Ok(None),
        }
    }

    pub fn rule(&self, channels: usize) -> Result<Option<CoupleRule>, Error> {
        match self.couple_level {
            None => Ok(None),
            Some(_) if channels != 1 => Err(Error::Config(
                "--couple-level applies to gray images only".into(),
            )),
            Some(level) => Ok(Some(CoupleRule::GrayConstant { level })),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// Fidelity weight.
    #[arg(long, default_value_t = 10.0)]
    pub lambda: f64,
    /// Gradient exponent.
    #[arg(long, default_value_t = 1.2)]
    pub p: f64,
    /// Number of fixed-point iterations.
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Regularizer added to the squared gradient before the power.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Stop early when the relative field change falls below this (0 = never).
    #[arg(long, default_value_t = 0.0)]
    pub stop_tol: f64,
    /// Channel order inside one iteration for color images.
    #[arg(long, value_enum, default_value_t = ChannelOrder::Sequential)]
    pub channel_update: ChannelOrder,
}

impl SolverArgs {
    pub fn config(&self) -> SolverConfig {
        SolverConfig {
            p: self.p,
            lambda: self.lambda,
            max_iters: self.iters,
            eps: self.eps,
            stop_tol: self.stop_tol,
            channel_update: self.channel_update.into(),
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum ChannelOrder {
    /// R, G, B in turn; later channels see earlier updates.
    Sequential,
    /// All channels from the previous iterate.
    Simultaneous,
}

impl From<ChannelOrder> for ChannelUpdate {
    fn from(c: ChannelOrder) -> Self {
        match c {
            ChannelOrder::Sequential => ChannelUpdate::Sequential,
            ChannelOrder::Simultaneous => ChannelUpdate::Simultaneous,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct NonlocalArgs {
    /// Patch-similarity scale of the nonlocal weights.
    #[arg(long, default_value_t = 0.1)]
    pub h_sim: f64,
    /// Half-size of the nonlocal search window (2 gives 5x5).
    #[arg(long, default_value_t = 2)]
    pub search_radius: usize,
    /// Most similar pixels kept per window before symmetrization.
    #[arg(long, default_value_t = 10)]
    pub k_best: usize,
}

impl NonlocalArgs {
    pub fn config(&self) -> NlConfig {
        NlConfig {
            search_radius: self.search_radius,
            k_best: self.k_best,
            h_sim: self.h_sim,
        }
    }
}

#[derive(Args, Debug)]
pub struct DenoiseArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub nonlocal: NonlocalArgs,
    /// Clean reference; prints the PSNR of the result against it.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Write per-iteration diagnostics CSV here.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// Write nonlocal graph statistics CSV here (nonlocal methods only).
    #[arg(long)]
    pub graph_stats: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EnhanceArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Solver settings; --iters 0 exports the lifted input without smoothing.
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub nonlocal: NonlocalArgs,
    /// CSV of `param,score` rows from an external no-reference quality tool;
    /// the parameter with the lowest score is used.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Write one enhanced image per grid parameter into this directory, for
    /// scoring by an external tool.
    #[arg(long)]
    pub candidates_dir: Option<PathBuf>,
    /// Parameter grid for --candidates-dir: `a,b,c` or `start:step:end`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    /// Noise standard deviation on the 0-255 scale.
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Clean image.
    pub clean: PathBuf,
    /// Noisy observation of `clean`; if absent it is generated with --sigma/--seed.
    #[arg(long)]
    pub noisy: Option<PathBuf>,
    /// Noise standard deviation on the 0-255 scale, used without --noisy.
    #[arg(long, default_value_t = 20.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Kernel family to sweep.
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    pub family: FamilyArg,
    /// Use the nonlocal solver instead of the four-neighbor one.
    #[arg(long)]
    pub nonlocal_solver: bool,
    /// Parameter grid: `a,b,c` or `start:step:end`. Defaults to 0.1:0.1:1.0
    /// (Gaussian) or 1.1:0.1:2.0 (polynomial).
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub nonlocal: NonlocalArgs,
    /// Output CSV (`param,ratio,psnr_db`); stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum FamilyArg {
    Gaussian,
    Polynomial,
}

impl From<FamilyArg> for KernelFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gaussian => KernelFamily::Gaussian,
            FamilyArg::Polynomial => KernelFamily::Polynomial,
        }
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Directory of clean .pgm/.ppm/.png images.
    pub dir: PathBuf,
    /// Output CSV; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Noise levels on the 0-255 scale.
    #[arg(long, value_delimiter = ',', default_value = "20,80")]
    pub sigma: Vec<f64>,
    /// Methods to run.
    #[arg(long, value_delimiter = ',', value_parser = parse_method,
          default_value = "gtv,gk-gtv,pk-gtv,nltv,gk-nltv,pk-nltv")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fidelity weight for every run; by default 10 for sigma <= 50, else 1.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 1.2)]
    pub p: f64,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[command(flatten)]
    pub nonlocal: NonlocalArgs,
    /// Fill the wall_ms column (otherwise 0, keeping the CSV reproducible).
    #[arg(long)]
    pub timing: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// A kernel-parameter grid given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// `a,b,c` or `start:step:end` (inclusive, tolerant to rounding).
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number {t:?}"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [start, step, end] => {
            let (start, step, end) = (num(start)?, num(step)?, num(end)?);
            if !(step > 0.0) || end < start {
                return Err("range needs step > 0 and end >= start".into());
            }
            let n = ((end - start) / step + 1e-9).floor() as usize;
            (0..=n)
                .map(|i| {
                    // round to kill accumulated binary noise (0.30000000000000004)
                    let v = start + i as f64 * step;
                    (v * 1e9).round() / 1e9
                })
                .collect()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(format!("cannot parse grid {s:?}")),
    };
    if grid.is_empty() {
        return Err("empty grid".into());
    }
    Ok(Grid(grid))
}
