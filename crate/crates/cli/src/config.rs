//! Command-line configuration and validation.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use amo_core::frequency::{DEFAULT_BIT_CAP, GUARD};
use amo_core::localization::MAX_EIGEN_BOX;
use amo_core::{FrequencySpec, LiouvilleRule};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Depth materialized for named frequencies when a command does not ask for more.
pub const DEFAULT_DEPTH: usize = 40;

#[derive(Parser, Clone, Debug)]
#[command(name = "amo-lab", version, about = "Numerical experiments on the almost Mathieu operator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct Common {
    /// golden | silver | liouville:<beta>[,gap=<g>][,seed=<s>] | explicit:[a1,a2,...]
    #[arg(long, default_value = "golden")]
    pub alpha: FrequencyArg,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.31, allow_negative_numbers = true)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub energy: f64,
    /// Output file; `-` writes to stdout.
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Seed for every sampled quantity.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "AMO_LAB_WORKERS", default_value_t = 1)]
    pub workers: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Continued-fraction convergents, Δ_n enclosures and ln q_{n+1}/q_n.
    Cf(CfArgs),
    /// Box determinants P_k over a grid of k and θ.
    Det(DetArgs),
    /// Boundary Green entries of one box, with optional regularity scan.
    Green(GreenArgs),
    /// Resonance classification of sites.
    Resonance(ResonanceArgs),
    /// ε-uniformity of the phase set at one scale.
    Uniformity(UniformityArgs),
    /// Decay-rate fits of localized eigenvectors of one box.
    Decay(DecayArgs),
    /// Transfer-matrix Lyapunov exponents over a grid.
    Lyapunov(LyapunovArgs),
    /// Decay rate and Lyapunov exponent over a parameter grid.
    Sweep(SweepArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Cf(_) => "cf",
            Command::Det(_) => "det",
            Command::Green(_) => "green",
            Command::Resonance(_) => "resonance",
            Command::Uniformity(_) => "uniformity",
            Command::Decay(_) => "decay",
            Command::Lyapunov(_) => "lyapunov",
            Command::Sweep(_) => "sweep",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Cf(a) => &a.common,
            Command::Det(a) => &a.common,
            Command::Green(a) => &a.common,
            Command::Resonance(a) => &a.common,
            Command::Uniformity(a) => &a.common,
            Command::Decay(a) => &a.common,
            Command::Lyapunov(a) => &a.common,
            Command::Sweep(a) => &a.common,
        }
    }

    /// Materialized depth the command needs from its frequency.
    pub fn required_depth(&self) -> usize {
        match self {
            Command::Cf(a) => a.depth + GUARD,
            Command::Uniformity(a) => a.n + 2,
            _ => 4,
        }
    }

    /// Grid axes accepted by the command.
    fn axes(&self) -> &'static [&'static str] {
        match self {
            Command::Det(_) => &["k", "theta"],
            Command::Green(_) => &["y"],
            Command::Resonance(_) => &["y"],
            Command::Uniformity(_) => &["ell", "theta"],
            Command::Lyapunov(_) => &["lambda", "energy"],
            Command::Sweep(_) => &["lambda", "theta", "energy"],
            Command::Cf(_) | Command::Decay(_) => &[],
        }
    }

    pub fn grids(&self) -> &[Grid] {
        match self {
            Command::Det(a) => &a.grid,
            Command::Green(a) => &a.grid,
            Command::Resonance(a) => &a.grid,
            Command::Uniformity(a) => &a.grid,
            Command::Lyapunov(a) => &a.grid,
            Command::Sweep(a) => &a.grid,
            Command::Cf(_) | Command::Decay(_) => &[],
        }
    }
}

#[derive(Args, Clone, Debug)]
pub struct CfArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 20)]
    pub depth: usize,
}

#[derive(Args, Clone, Debug)]
pub struct DetArgs {
    #[command(flatten)]
    pub common: Common,
    /// Axes: k, theta. Default k = 100.
    #[arg(long)]
    pub grid: Vec<Grid>,
    /// Phase samples for growth_rate; 0 skips it.
    #[arg(long, default_value_t = 0)]
    pub samples: usize,
}

#[derive(Args, Clone, Debug)]
pub struct GreenArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub x1: i64,
    #[arg(long = "box", default_value_t = 50)]
    pub len: usize,
    /// Axis: y. Default: every site of the box.
    #[arg(long)]
    pub grid: Vec<Grid>,
    /// Decay rate for a regularity scan at each y.
    #[arg(long, allow_negative_numbers = true)]
    pub t: Option<f64>,
    /// Window size of the regularity scan (default: the box size).
    #[arg(long)]
    pub window: Option<usize>,
}

#[derive(Args, Clone, Debug)]
pub struct ResonanceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Axis: y. Default y = 1:1000:1000.
    #[arg(long)]
    pub grid: Vec<Grid>,
}

#[derive(Args, Clone, Debug)]
pub struct UniformityArgs {
    #[command(flatten)]
    pub common: Common,
    /// Scale index n.
    #[arg(long)]
    pub n: usize,
    /// Axes: ell, theta. Default ell = 1.
    #[arg(long)]
    pub grid: Vec<Grid>,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Points of the x grid (default 16 q_n).
    #[arg(long)]
    pub grid_size: Option<usize>,
}

#[derive(Args, Clone, Debug)]
pub struct DecayArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "box", default_value_t = 2000)]
    pub len: usize,
    #[arg(long, default_value_t = 5)]
    pub count: usize,
}

#[derive(Args, Clone, Debug)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub common: Common,
    /// Axes: lambda, energy.
    #[arg(long)]
    pub grid: Vec<Grid>,
    #[arg(long, default_value_t = 20_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
}

#[derive(Args, Clone, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Axes: lambda, theta, energy (energy picks the nearest eigenvalue).
    #[arg(long)]
    pub grid: Vec<Grid>,
    #[arg(long = "box", default_value_t = 2000)]
    pub len: usize,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Each point's θ is shifted by a seeded uniform draw in [−jitter, jitter].
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    #[arg(long, default_value_t = 10_000)]
    pub steps: usize,
}

/// Frequency shorthand.
#[derive(Clone, Debug, PartialEq)]
pub enum FrequencyArg {
    Golden,
    Silver,
    Liouville { beta: f64, gap: usize, seed: u64 },
    Explicit(Vec<u64>),
}

impl FromStr for FrequencyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "golden" => return Ok(FrequencyArg::Golden),
            "silver" => return Ok(FrequencyArg::Silver),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("liouville:") {
            let mut parts = rest.split(',');
            let beta: f64 = parts
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|_| format!("bad beta in `{s}`"))?;
            let (mut gap, mut seed) = (0, 1);
            for kv in parts {
                match kv.split_once('=') {
                    Some(("gap", v)) => gap = v.parse().map_err(|_| format!("bad gap `{v}`"))?,
                    Some(("seed", v)) => seed = v.parse().map_err(|_| format!("bad seed `{v}`"))?,
                    _ => return Err(format!("unknown liouville option `{kv}`")),
                }
            }
            return Ok(FrequencyArg::Liouville { beta, gap, seed });
        }
        if let Some(rest) = s.strip_prefix("explicit:") {
            let inner = rest
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(|| format!("expected explicit:[a1,a2,...], got `{s}`"))?;
            let a = inner
                .split(',')
                .map(|v| v.trim().parse::<u64>().map_err(|_| format!("bad coefficient `{v}`")))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(FrequencyArg::Explicit(a));
        }
        Err(format!(
            "unknown frequency `{s}` (golden, silver, liouville:<beta>, explicit:[...])"
        ))
    }
}

impl fmt::Display for FrequencyArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrequencyArg::Golden => write!(f, "golden"),
            FrequencyArg::Silver => write!(f, "silver"),
            FrequencyArg::Liouville { beta, gap, seed } => {
                write!(f, "liouville:{beta}")?;
                if *gap != 0 {
                    write!(f, ",gap={gap}")?;
                }
                if *seed != 1 {
                    write!(f, ",seed={seed}")?;
                }
                Ok(())
            }
            FrequencyArg::Explicit(a) => {
                let s: Vec<String> = a.iter().map(|v| v.to_string()).collect();
                write!(f, "explicit:[{}]", s.join(","))
            }
        }
    }
}

impl FrequencyArg {
    fn rule(&self) -> Option<LiouvilleRule> {
        match self {
            FrequencyArg::Liouville { beta, gap, seed } => {
                Some(LiouvilleRule::new(*beta).with_gap(*gap).with_seed(*seed))
            }
            _ => None,
        }
    }

    /// Builds the frequency with as many coefficients as `want` allows.
    /// Liouville frequencies stop at the bit cap.
    pub fn build(&self, want: usize) -> amo_core::Result<FrequencySpec> {
        let mut spec = match self {
            FrequencyArg::Golden => FrequencySpec::golden(),
            FrequencyArg::Silver => FrequencySpec::silver(),
            FrequencyArg::Explicit(a) => FrequencySpec::explicit(a.clone())?,
            FrequencyArg::Liouville { .. } => FrequencySpec::liouville(self.rule().expect("liouville"))?,
        };
        if spec.is_generative() {
            let depth = spec.achievable_depth(want.max(DEFAULT_DEPTH));
            spec.materialize(depth)?;
        }
        Ok(spec)
    }
}

/// One grid axis: `name=lo:hi:count` (inclusive, evenly spaced) or
/// `name=v1,v2,...`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub name: String,
    pub values: Vec<f64>,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, spec) = s
            .split_once('=')
            .ok_or_else(|| format!("expected name=lo:hi:count or name=v1,v2, got `{s}`"))?;
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("bad number `{v}` in `{s}`"));
        let values = if spec.contains(':') {
            let parts: Vec<&str> = spec.split(':').collect();
            let [lo, hi, count] = parts[..] else {
                return Err(format!("expected lo:hi:count in `{s}`"));
            };
            let (lo, hi) = (num(lo)?, num(hi)?);
            let count: usize = count.parse().map_err(|_| format!("bad count in `{s}`"))?;
            (0..count)
                .map(|i| {
                    if count == 1 {
                        lo
                    } else {
                        lo + (hi - lo) * i as f64 / (count - 1) as f64
                    }
                })
                .collect()
        } else if spec.is_empty() {
            Vec::new()
        } else {
            spec.split(',').map(num).collect::<Result<_, _>>()?
        };
        Ok(Grid {
            name: name.to_string(),
            values,
        })
    }
}

/// Parsed command plus its shared settings.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: Command,
}

impl ExperimentConfig {
    pub fn from_cli(cli: Cli) -> Self {
        ExperimentConfig { command: cli.command }
    }

    pub fn common(&self) -> &Common {
        self.command.common()
    }

    /// Values of one axis, or `default` when the axis is not given.
    pub fn axis(&self, name: &str, default: &[f64]) -> Vec<f64> {
        self.command
            .grids()
            .iter()
            .find(|g| g.name == name)
            .map(|g| g.values.clone())
            .unwrap_or_else(|| default.to_vec())
    }
}

/// Problems that would make [`crate::run`] fail before doing any work.
/// Empty means the configuration is runnable.
pub fn validate(config: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    let cmd = &config.command;
    let c = config.common();
    if !(c.lambda > 0.0 && c.lambda.is_finite()) {
        out.push(format!(
            "lambda = {} must be positive: a negative coupling is the same operator as \
             (-lambda, theta + 1/2), so pass that instead",
            c.lambda
        ));
    }
    if !c.theta.is_finite() || !c.energy.is_finite() {
        out.push("theta and energy must be finite".into());
    }
    if c.workers == 0 {
        out.push("workers must be at least 1".into());
    }
    if c.output.as_os_str() != "-" {
        let dir = c.output.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(d) = dir {
            if !d.is_dir() {
                out.push(format!("output directory {} does not exist", d.display()));
            }
        }
    }
    for g in cmd.grids() {
        if !cmd.axes().contains(&g.name.as_str()) {
            out.push(format!(
                "grid axis `{}` not accepted by {} (axes: {})",
                g.name,
                cmd.name(),
                cmd.axes().join(", ")
            ));
        }
        if g.values.is_empty() {
            out.push(format!("grid `{}` is empty", g.name));
        }
        if g.values.iter().any(|v| !v.is_finite()) {
            out.push(format!("grid `{}` has a non-finite value", g.name));
        }
        if matches!(g.name.as_str(), "k" | "y" | "ell") && g.values.iter().any(|v| v.fract() != 0.0) {
            out.push(format!("grid `{}` takes integers", g.name));
        }
        if matches!(g.name.as_str(), "k" | "ell") && g.values.iter().any(|&v| v < 1.0) {
            out.push(format!("grid `{}` must be >= 1", g.name));
        }
        if g.name == "lambda" && g.values.iter().any(|&v| v <= 0.0) {
            out.push("grid `lambda` must be positive: fold negative couplings into theta + 1/2".into());
        }
    }
    match &c.alpha {
        FrequencyArg::Explicit(a) if a.contains(&0) => {
            out.push("explicit coefficients must be >= 1".into());
        }
        FrequencyArg::Liouville { beta, .. } if !(*beta > 0.0 && beta.is_finite()) => {
            out.push(format!("liouville beta = {beta} must be positive"));
        }
        FrequencyArg::Liouville { .. } => {
            let need = cmd.required_depth();
            if let Ok(spec) = FrequencySpec::liouville(c.alpha.rule().expect("liouville")) {
                let reach = spec.achievable_depth(need);
                if reach < need {
                    out.push(format!(
                        "{} reaches depth {reach} under the {DEFAULT_BIT_CAP}-bit coefficient cap; \
                         {} needs {need}",
                        c.alpha,
                        cmd.name()
                    ));
                }
            }
        }
        FrequencyArg::Explicit(a) if a.len() < cmd.required_depth() => {
            out.push(format!(
                "explicit frequency has {} coefficients; {} needs {}",
                a.len(),
                cmd.name(),
                cmd.required_depth()
            ));
        }
        _ => {}
    }
    match cmd {
        Command::Cf(a) if a.depth == 0 => out.push("depth must be >= 1".into()),
        Command::Green(a) => {
            if a.len == 0 {
                out.push("box must be nonempty".into());
            }
            if a.window.is_some_and(|k| k < 5) {
                out.push("window must be >= 5".into());
            }
        }
        Command::Uniformity(a) if a.n == 0 => out.push("scale n must be >= 1".into()),
        Command::Decay(DecayArgs { len, count, .. }) | Command::Sweep(SweepArgs { len, count, .. }) => {
            if *len > MAX_EIGEN_BOX || *len < 40 {
                out.push(format!("box {len} outside 40..={MAX_EIGEN_BOX}"));
            }
            if *count == 0 || count > len {
                out.push(format!("count {count} must be in 1..={len}"));
            }
        }
        Command::Lyapunov(a) if a.steps == 0 || a.samples == 0 => {
            out.push("steps and samples must be positive".into());
        }
        _ => {}
    }
    out
}
