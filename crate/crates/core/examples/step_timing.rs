//! Wall-clock cost of the full master-equation integrator at s = 54.54,
//! with the positivity monitor relaxed so the raw minimum eigenvalue of the
//! evolving state can be inspected.

use std::time::Instant;

use morse_decoherence::bath::{build_dissipator, calibrate_lambda, EnvironmentSpec};
use morse_decoherence::dynamics::{Evolution, InitialState, Monitor, TrajectoryConfig};
use morse_decoherence::MorseModel;

fn main() -> morse_decoherence::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("number")).collect();
    let (ratio, temperature, x0, periods, stride) = match args[..] {
        [r, t, x, p] => (r, t, x, p, 200.0),
        [r, t, x, p, k] => (r, t, x, p, k),
        _ => (1e5, 10.0, 0.5, 5.0, 200.0),
    };
    let t = Instant::now();
    let model = MorseModel::new(54.54)?;
    println!("model: {:?}", t.elapsed());
    let lambda = calibrate_lambda(&model, ratio)?;
    let env = EnvironmentSpec::for_spectrum(&model, temperature, lambda)?;
    let diss = build_dissipator(&model, &env);
    let psi = model.coherent_state(x0, 0.0)?;
    let t0 = model.t0();
    let cfg = TrajectoryConfig::for_spectrum(&model, periods * t0, stride as usize);
    let t = Instant::now();
    let rec = Evolution::new(&model, &diss, cfg)
        .monitor(Monitor {
            positivity: f64::INFINITY,
            unstable_trace: 1e-6,
        })
        .run(&InitialState::Pure(psi))?;
    let el = t.elapsed();
    println!(
        "{} steps in {:?} ({:.1} us/step), {} samples",
        cfg.n_steps(),
        el,
        el.as_secs_f64() * 1e6 / cfg.n_steps() as f64,
        rec.len()
    );
    let stride = (rec.len() / 25).max(1);
    for k in (0..rec.len()).step_by(stride) {
        println!(
            "t/t0 {:8.2}  S {:.5}  purity {:.5}  min_eig {:+.3e}  <X> {:+.4}",
            rec.times[k] / t0,
            rec.entropy[k],
            rec.purity[k],
            rec.min_eig[k],
            rec.x_exp[k]
        );
    }
    println!(
        "max trace err {:e}, max herm drift {:e}, min eigenvalue {:e}",
        rec.max_trace_err(),
        rec.max_herm_drift(),
        rec.min_eigenvalue()
    );
    Ok(())
}
