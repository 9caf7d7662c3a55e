use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(
    name = "aglab",
    version,
    about = "Exact checks and searches for forbidden-agreement families of codes"
)]
pub struct Cli {
    /// Run seed; trial `i` draws from stream `i` of this seed.
    #[arg(long, global = true, env = "AGLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for searches. Changes wall time only.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Branch-and-bound node cap.
    #[arg(long, global = true, default_value_t = 500_000_000)]
    pub budget_nodes: u64,
    /// Wall-clock cap in seconds.
    #[arg(long, global = true)]
    pub budget_seconds: Option<f64>,
    /// Write reports here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Print every report, not only violations and the summary.
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Maximum (t-1)-avoiding families by branch and bound.
    Search(SearchArgs),
    /// Compare the optimum with m^(n-t) and test star uniqueness.
    VerifyTheorem(BoxT),
    /// Spread approximation of families, re-verified.
    Spread(SpreadArgs),
    /// Lemma and inequality checkers.
    #[command(subcommand)]
    Check(Check),
    /// The t-star fixing `values` on `coords`.
    Star(StarArgs),
    /// The family S_{t,r}: at least t + r ones among the first t + 2r coordinates.
    Srt(SrtArgs),
    /// Convert between family, cube and set-system JSON.
    Convert(ConvertArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct BoxT {
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub t: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SearchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub space: BoxT,
    /// Enumerate every optimum and classify them up to symmetry.
    #[arg(long)]
    pub all: bool,
    /// Also write the complement graph in DIMACS format.
    #[arg(long)]
    #[serde(skip)]
    pub dimacs: Option<PathBuf>,
}

/// Where families come from: files, every subfamily of a box, or seeded draws.
#[derive(Args, Debug, Serialize, Clone)]
pub struct Source {
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Family JSON files; repeat for pairs.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Every subfamily (or pair) of the box.
    #[arg(long)]
    pub exhaustive: bool,
    /// Number of seeded random instances.
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct SpreadArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: Source,
    #[arg(long, default_value = "2")]
    pub tau: String,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    /// |shadow_l F| >= delta^(l/n) |shadow_l [m]^n|.
    Kk {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        #[arg(long)]
        l: usize,
    },
    /// Noise-operator hypercontractivity for global indicators.
    Hyper {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        #[arg(long, default_value_t = 4.0)]
        q: f64,
    },
    /// Stab_rho <= ||f||^(2(1-1/t)) Stab_{rho^t}^(1/t).
    StabInterp {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        #[arg(long, default_value = "1/2")]
        rho: String,
        #[arg(long, default_value_t = 2)]
        t: u32,
    },
    /// Hoffman bound for cross-intersecting pairs.
    Hoffman {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
    },
    /// Exhaustive single gluing step onto [m/s].
    GluingBoost {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        #[arg(long, default_value_t = 4)]
        s: u32,
    },
    /// Traced iterative measure boosting.
    BoostTrace {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        #[arg(long, default_value_t = 2)]
        b: u32,
        #[arg(long, default_value = "2")]
        tau: String,
    },
    /// Remove forbidden values from coordinates, e.g. `--forbid "1:2,3;2:1"`.
    Avoid {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        #[arg(long)]
        forbid: String,
    },
    /// Probability that a random restriction keeps half the measure.
    RestrictionProb {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        /// 1-based coordinates, comma separated.
        #[arg(long)]
        h: String,
        #[arg(long)]
        p: String,
    },
    /// Size bound for unions of t-agreeing stars; input `{"m","n","stars":[{"Z","x"}]}`.
    Simplification {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        eps: String,
    },
    /// Refined stars of distinct t-shadow elements share fewer than t - 1 elements.
    ShadowsDisjoint {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        #[arg(long)]
        t: usize,
        /// Cap on shadow pairs examined per family.
        #[arg(long, default_value_t = 200)]
        max_pairs: usize,
    },
    /// Full compression and monotonization.
    Compress {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
    },
    /// Unbalanced cross-matching lemma with the cube pipeline cross-checks.
    Unbalanced {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
    },
    /// mu_p(A) >= p^alpha implies mu_q(A) >= q^alpha for monotone A.
    MonotoneShift {
        /// Cube family JSON files.
        #[arg(long)]
        input: Vec<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value = "1/3")]
        p: String,
        #[arg(long = "p-high", default_value = "1/2")]
        p_high: String,
        /// Fixed exponent; by default alpha = log_p mu_p(A).
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Sunflowers in the embedded set system.
    Sunflower {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        #[arg(long, default_value_t = 2)]
        s: usize,
        #[arg(long)]
        core: Option<usize>,
        /// Also assert: (t-1)-avoiding iff no 2-petal sunflower with core t - 1.
        #[arg(long)]
        t: Option<usize>,
    },
    /// (S, s, t)-system properties; input `{"m","n","parts":[{"Z","x","codes"}]}`.
    Sst {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        t: usize,
    },
    /// Covering number of the embedded family; `--full` asserts tau([m]^n) = m.
    Covering {
        #[command(flatten)]
        #[serde(flatten)]
        source: Source,
        #[arg(long)]
        full: bool,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct StarArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub n: usize,
    /// 1-based coordinates, comma separated.
    #[arg(long)]
    pub coords: String,
    /// Symbols for those coordinates, comma separated.
    #[arg(long)]
    pub values: String,
}

#[derive(Args, Debug, Serialize)]
pub struct SrtArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub r: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Family,
    Cube,
    Sets,
}

#[derive(Args, Debug, Serialize)]
pub struct ConvertArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub to: Format,
}
