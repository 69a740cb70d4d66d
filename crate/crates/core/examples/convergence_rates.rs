// Fits per-step contraction factors on two coarse meshes and reports their ratio.
use wgeig::expcli::{run_rates, CliError, ExperimentConfig, RateReport};

pub fn run(fine_n: usize, coarse: Vec<usize>, degree: usize, iters: usize) -> Result<RateReport, CliError> {
    let cfg = ExperimentConfig { fine_n, coarse_n: coarse, degree, iters, ..ExperimentConfig::default() };
    run_rates(&cfg)
}

fn main() -> Result<(), CliError> {
    let report = run(64, vec![8, 16], 0, 10)?;
    print!("{}", report.to_csv());
    Ok(())
}
