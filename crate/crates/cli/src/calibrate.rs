//! Coupling calibration report.

use morse_decoherence::bath::{build_dissipator, calibrate_lambda, EnvironmentSpec};
use morse_decoherence::MorseModel;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Calibration {
    pub s: f64,
    pub ratio: f64,
    pub lambda: f64,
    pub omega01: f64,
    /// `1 → 0` rate at zero temperature.
    pub gamma01: f64,
    pub t0: f64,
    pub temperature: f64,
    pub largest_rates: Vec<Transition>,
}

pub fn calibrate(s: f64, ratio: f64, temperature: f64) -> Result<Calibration, CliError> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(CliError::usage(format!("--ratio must be positive, got {ratio}")));
    }
    let model = MorseModel::new(s)?;
    let lambda = calibrate_lambda(&model, ratio)?;
    let cold = build_dissipator(&model, &EnvironmentSpec::for_spectrum(&model, 0.0, lambda)?);
    let warm = build_dissipator(&model, &EnvironmentSpec::for_spectrum(&model, temperature, lambda)?);
    Ok(Calibration {
        s,
        ratio,
        lambda,
        omega01: model.omega01(),
        gamma01: cold.rates[(0, 1)],
        t0: model.t0(),
        temperature,
        largest_rates: warm
            .largest_rates(10)
            .into_iter()
            .map(|(to, from, rate)| Transition { from, to, rate })
            .collect(),
    })
}

impl std::fmt::Display for Calibration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "s                {}", self.s)?;
        writeln!(f, "lambda           {:e}", self.lambda)?;
        writeln!(f, "omega01          {}", self.omega01)?;
        writeln!(f, "gamma01 (T=0)    {:e}", self.gamma01)?;
        writeln!(f, "omega01/gamma01  {:e}", self.omega01 / self.gamma01)?;
        writeln!(f, "t0               {}", self.t0)?;
        writeln!(f)?;
        writeln!(f, "largest rates at T = {}", self.temperature)?;
        writeln!(f, "{:>6} {:>6} {:>14}", "from", "to", "rate")?;
        for t in &self.largest_rates {
            writeln!(f, "{:>6} {:>6} {:>14.6e}", t.from, t.to, t.rate)?;
        }
        Ok(())
    }
}
