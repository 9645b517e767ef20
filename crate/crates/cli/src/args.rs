use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oscswap_core::protocol::DEFAULT_SAMPLES;
use oscswap_core::quantum::DEFAULT_SPLIT_STEPS;
use oscswap_core::FockLabel;
use serde::Serialize;

/// Design, tune and verify rotating 2D oscillator protocols that swap the
/// quantum numbers of the two modes.
#[derive(Debug, Parser)]
#[command(name = "oscswap", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate M(t), θ(t), ω²(t) and equipotential ellipses for one protocol.
    Design(DesignArgs),
    /// Scan b(λ) and locate the smallest λ giving perfect transfer.
    Tune(TuneArgs),
    /// Final excess energy per Fock label by prediction, split-operator and Wigner methods.
    Table(TableArgs),
    /// Fidelities, phases and the transient energy curve for chosen labels.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Design(_) => "design",
            Command::Tune(_) => "tune",
            Command::Table(_) => "table",
            Command::Verify(_) => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value_t = Format::Both)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DesignArgs {
    #[arg(long, default_value_t = 1.0)]
    pub w1: f64,
    #[arg(long, default_value_t = 5.0)]
    pub w2: f64,
    /// Protocol duration t_f.
    #[arg(long, default_value_t = 1.0)]
    pub tf: f64,
    #[arg(long, default_value_t = 20.0)]
    pub lambda: f64,
    /// Final trap rotation angle.
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub gamma: f64,
    /// Uniform time samples including both ends.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// Equipotential ellipse snapshots, evenly spaced including both ends.
    #[arg(long, default_value_t = 9)]
    pub snapshots: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TuneArgs {
    #[arg(long, default_value_t = 1.0)]
    pub w1: f64,
    #[arg(long, default_value_t = 5.0)]
    pub w2: f64,
    #[arg(long, default_value_t = 5.0)]
    pub tf: f64,
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub gamma: f64,
    /// λ range scanned for zeros of b.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, 100.0], allow_negative_numbers = true)]
    pub lambda_window: Vec<f64>,
    /// λ spacing of the scan.
    #[arg(long, default_value_t = 0.25)]
    pub scan_step: f64,
    /// RK4 steps per scan point.
    #[arg(long, default_value_t = 10_000)]
    pub scan_steps: usize,
    /// RK4 steps during refinement.
    #[arg(long, default_value_t = 40_000)]
    pub steps: usize,
    /// Also tabulate the smallest perfect λ for these durations (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub tf_values: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PropagationArgs {
    /// Spatial grid points per axis.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    /// Split-operator steps over the protocol.
    #[arg(long, conflicts_with = "dt")]
    pub steps: Option<usize>,
    /// Split-operator time step (alternative to --steps).
    #[arg(long)]
    pub dt: Option<f64>,
    /// RK4 steps for trajectories and the phase-space flow map.
    #[arg(long, default_value_t = 10_000)]
    pub rk4_steps: usize,
    /// Gauss–Hermite nodes per phase-space axis.
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    /// Highest total quanta in the final projection.
    #[arg(long)]
    pub cutoff: Option<u32>,
    /// Skip the Wigner phase-space method.
    #[arg(long)]
    pub no_wigner: bool,
}

impl PropagationArgs {
    pub fn split_steps(&self, tf: f64) -> Result<usize, String> {
        match (self.steps, self.dt) {
            (Some(0), _) => Err("--steps must be positive".into()),
            (Some(n), _) => Ok(n),
            (None, Some(dt)) if dt > 0.0 && dt.is_finite() => Ok((tf / dt).ceil().max(1.0) as usize),
            (None, Some(dt)) => Err(format!("--dt must be positive, got {dt}")),
            (None, None) => Ok(DEFAULT_SPLIT_STEPS),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TableArgs {
    #[arg(long, default_value_t = 1.0)]
    pub w1: f64,
    #[arg(long, default_value_t = 5.0)]
    pub w2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tf: f64,
    #[arg(long, default_value_t = 20.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub gamma: f64,
    /// Initial labels `n,k`; defaults to the twelve standard ones.
    #[arg(long, num_args = 1..)]
    #[serde(serialize_with = "labels_as_strings")]
    pub labels: Vec<FockLabel>,
    #[command(flatten)]
    pub propagation: PropagationArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1.0)]
    pub w1: f64,
    #[arg(long, default_value_t = 5.0)]
    pub w2: f64,
    #[arg(long, default_value_t = 5.0)]
    pub tf: f64,
    /// Coupling amplitude; tuned to the smallest perfect value when omitted.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = FRAC_PI_2)]
    pub gamma: f64,
    /// Initial label `n,k` (repeatable).
    #[arg(long = "state", default_value = "1,0")]
    #[serde(serialize_with = "labels_as_strings")]
    pub states: Vec<FockLabel>,
    /// Intervals of the transient energy curve (0 disables it). The recording
    /// stride is `steps / snapshots` rounded down.
    #[arg(long, default_value_t = 256)]
    pub snapshots: usize,
    /// λ range used when tuning.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.0, 100.0], allow_negative_numbers = true)]
    pub lambda_window: Vec<f64>,
    #[command(flatten)]
    pub propagation: PropagationArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn labels_as_strings<S: serde::Serializer>(labels: &[FockLabel], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(labels.iter().map(ToString::to_string))
}

pub fn window(values: &[f64]) -> (f64, f64) {
    (values[0], values[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn dt_sets_steps() {
        let cli = Cli::try_parse_from(["oscswap", "verify", "--tf", "2", "--dt", "0.001"]).unwrap();
        let Command::Verify(v) = cli.command else { panic!() };
        assert_eq!(v.propagation.split_steps(v.tf).unwrap(), 2000);
        assert_eq!(v.states, vec![FockLabel::new(1, 0)]);
    }

    #[test]
    fn steps_and_dt_conflict() {
        assert!(Cli::try_parse_from(["oscswap", "table", "--steps", "10", "--dt", "0.1"]).is_err());
    }

    #[test]
    fn labels_parse() {
        let cli = Cli::try_parse_from(["oscswap", "table", "--labels", "0,0", "2,1"]).unwrap();
        let Command::Table(t) = cli.command else { panic!() };
        assert_eq!(t.labels, vec![FockLabel::new(0, 0), FockLabel::new(2, 1)]);
    }
}
