use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "remlab", version, about = "Free energies of random energy models: closed forms and simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Limiting free energy on a temperature grid.
    Analytic(Flags),
    /// Finite-size free energies by enumeration or sampling.
    Simulate(Flags),
    /// Simulation error against the limit over several system sizes.
    Converge(Flags),
    /// Freezing temperatures of a GREM or BK model.
    Ladder(Flags),
    /// Level parameters read back from a reduced-form curve.
    Recover(Flags),
    /// Checks a model and run description without running it.
    Validate(Flags),
}

impl Command {
    pub fn flags(&self) -> &Flags {
        match self {
            Command::Analytic(f)
            | Command::Simulate(f)
            | Command::Converge(f)
            | Command::Ladder(f)
            | Command::Recover(f)
            | Command::Validate(f) => f,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
pub struct Flags {
    /// Model name, e.g. rem-gaussian, rem-exp, rem-weibull, rem-poisson,
    /// rem-binomial, rem-compact, rem-truncated-exp, rem-truncated-gauss,
    /// rem-field, grem, bk, block-tree, word.
    #[arg(long)]
    pub model: Option<String>,
    /// Model as a JSON file; takes precedence over the model flags.
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    /// Level or symbol proportions.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Option<Vec<f64>>,
    /// Level weights (one value for rem-field).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub a: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Success probability of the binomial family.
    #[arg(long, allow_hyphen_values = true)]
    pub prob: Option<f64>,
    /// Orientation of the Hamiltonian: +1 or -1.
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Per-level families of a mixed GREM, e.g. exp,gauss.
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<String>>,
    /// Recovery family: exp or gamma.
    #[arg(long)]
    pub kind: Option<String>,
    /// Temperatures as lo:hi:step or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long = "N-list", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// fixed, regular-poisson, poisson, multinomial1 or multinomial2.
    #[arg(long)]
    pub tree: Option<String>,
    /// Sample this many configurations per replica instead of enumerating.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Histogram of the driving variable, bins lo:hi:width.
    #[arg(long, allow_hyphen_values = true)]
    pub hist: Option<String>,
    /// Subset weights of a BK model as JSON, e.g. {"1": 0.5, "1,2": 0.3}.
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    /// Words as JSON, e.g. [{"sym": [1, 2], "a": 0.5}].
    #[arg(long, value_name = "FILE")]
    pub words: Option<PathBuf>,
    /// Energy curve as JSON for `recover`.
    #[arg(long, value_name = "FILE")]
    pub curve: Option<PathBuf>,
    /// Run description (for instance an emitted manifest); flags other
    /// than --out and --manifest are ignored.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to <out>.manifest.json when --out is set.
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}
