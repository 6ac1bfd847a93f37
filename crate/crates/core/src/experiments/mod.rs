//! Sweeps, rate fits, configuration and CSV output.

pub mod config;
pub mod fit;
pub mod output;
pub mod selftest;
pub mod sweep;
pub mod verify;

pub use config::{ExperimentConfig, ProbeConfig, RunConfig, SequenceSpec, SweepConfig};
pub use fit::{fit_rate, RateFit, RateModel};
pub use output::{
    read_sweep_csv, write_epsilon_csv, write_plot_data, write_probe_csv, write_sweep_csv,
};
pub use selftest::{run_selftest, SelfTestResult};
pub use sweep::{epsilon_table, run_probe, run_sweep, run_sweeps, EpsilonRow, SweepRow};
pub use verify::{verify_dominance, VerifyReport};
