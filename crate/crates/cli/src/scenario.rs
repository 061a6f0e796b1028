//! Single-trajectory execution and artifact writing.

use std::path::{Path, PathBuf};

use morse_decoherence::analysis::{detect_decoherence_time, DecoherenceEstimate, FitOptions, FitReport};
use morse_decoherence::bath::{build_dissipator, calibrate_lambda, DissipatorOperators, EnvironmentSpec};
use morse_decoherence::dynamics::{thermal_state, Evolution, InitialState, Monitor, TrajectoryConfig};
use morse_decoherence::record::{write_snapshots, SnapshotMeta};
use morse_decoherence::wigner::WignerTransform;
use morse_decoherence::{Error, MorseModel, StateVector, TrajectoryRecord};
use serde::Serialize;

use crate::config::{sha256_hex, Coupling, Initial, ScenarioConfig};
use crate::error::CliError;

/// Everything derived from a config before integration starts.
pub struct Setup {
    pub lambda: f64,
    pub env: EnvironmentSpec,
    pub diss: DissipatorOperators,
    pub trajectory: TrajectoryConfig,
    pub initial: InitialState,
    pub t0: f64,
}

impl Setup {
    pub fn new(model: &MorseModel, cfg: &ScenarioConfig) -> Result<Self, CliError> {
        let lambda = match cfg.coupling {
            Coupling::Ratio(r) => calibrate_lambda(model, r)?,
            Coupling::Lambda(l) => l,
        };
        let env = EnvironmentSpec::for_spectrum(model, cfg.temperature, lambda)?;
        let diss = build_dissipator(model, &env);
        let t0 = model.t0();
        let mut trajectory = TrajectoryConfig::for_spectrum(model, cfg.t_max * t0, cfg.sample_stride);
        if let Some(dt) = cfg.dt {
            trajectory.dt = dt;
        }
        trajectory.level = cfg.level;
        trajectory
            .validate(model, &diss)
            .map_err(|e| CliError::usage(format!("at `dt`: {e}")))?;
        let initial = match cfg.initial {
            Initial::Coherent { x0, p0 } => InitialState::Pure(model.coherent_state(x0, p0)?),
            Initial::Eigenstate(n) => InitialState::Pure(StateVector::eigenstate(model.n_bound(), n)?),
            Initial::Thermal => InitialState::Mixed(thermal_state(model, &env)),
        };
        Ok(Self {
            lambda,
            env,
            diss,
            trajectory,
            initial,
            t0,
        })
    }

    pub fn run(
        &self,
        model: &MorseModel,
        cfg: &ScenarioConfig,
        snapshot_times: &[f64],
    ) -> Result<TrajectoryRecord, CliError> {
        let times: Vec<f64> = snapshot_times.iter().map(|t| t * self.t0).collect();
        Evolution::new(model, &self.diss, self.trajectory)
            .snapshots_at(&times)
            .monitor(Monitor {
                positivity: cfg.monitor.positivity,
                unstable_trace: cfg.monitor.unstable_trace,
            })
            .run(&self.initial)
            .map_err(|e| {
                let at = match &e {
                    Error::Aborted { last_good_time, .. } => format!(" (t/t0 = {:.4})", last_good_time / self.t0),
                    _ => String::new(),
                };
                let mut err = CliError::from(e);
                err.message.push_str(&at);
                err
            })
    }
}

/// Decoherence time in t0 units from a finished record.
pub fn fit_record(
    record: &TrajectoryRecord,
    t0: f64,
    options: &FitOptions,
) -> morse_decoherence::Result<DecoherenceEstimate> {
    let t: Vec<f64> = record.times.iter().map(|t| t / t0).collect();
    detect_decoherence_time(&t, &record.entropy, &record.purity, options)
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub lambda: f64,
    pub omega01: f64,
    pub t0: f64,
    pub t0_definition: &'static str,
    pub n_bound: usize,
    pub dt: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub samples: usize,
    pub max_trace_err: f64,
    pub max_herm_drift: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameEntry {
    pub t_over_t0: f64,
    pub pgm: String,
    pub sidecar: String,
    pub negativity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub config: ScenarioConfig,
    pub derived: Derived,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub frames: Vec<FrameEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoherence: Option<serde_json::Value>,
    pub artifacts: Vec<Artifact>,
}

pub const T0_DEFINITION: &str = "2*pi/omega_cl, omega_cl = 2(s + 1/2)";

pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(&format!("creating {}", dir.display()), e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
        self.written.push(Artifact {
            path: name.to_owned(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn finish(self) -> Vec<Artifact> {
        self.written
    }
}

fn buffer<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> morse_decoherence::Result<()>,
{
    let mut out = Vec::new();
    f(&mut out)?;
    Ok(out)
}

/// Runs one scenario and writes its artifacts and `manifest.json` into `dir`.
pub fn run_scenario(cfg: &ScenarioConfig, dir: &Path) -> Result<Manifest, CliError> {
    let model = MorseModel::new(cfg.s)?;
    let setup = Setup::new(&model, cfg)?;
    let t0 = setup.t0;
    let wigner = match &cfg.outputs.wigner {
        Some(w) => Some((WignerTransform::new(&model, w.window)?, w.frame_times.clone())),
        None => None,
    };
    let mut snapshot_times = cfg.outputs.snapshots.clone();
    if let Some((_, frames)) = &wigner {
        snapshot_times.extend(frames);
    }
    let record = setup.run(&model, cfg, &snapshot_times)?;

    let mut out = ArtifactWriter::new(dir)?;
    if cfg.outputs.csv {
        out.write("trajectory.csv", &buffer(|b| record.write_csv(b, t0))?)?;
    }
    if !cfg.outputs.snapshots.is_empty() {
        let picked: Vec<_> = cfg
            .outputs
            .snapshots
            .iter()
            .map(|&t| (t * t0, record.snapshot_near(t * t0).expect("snapshot recorded").clone()))
            .collect();
        out.write("snapshots.bin", &buffer(|b| write_snapshots(b, &picked))?)?;
        let meta = SnapshotMeta {
            n: model.n_bound(),
            s: cfg.s,
            lambda: setup.lambda,
            temperature: cfg.temperature,
            level: cfg.level,
            dt: setup.trajectory.dt,
            count: picked.len(),
            record_bytes: 8 * (1 + 2 * model.n_bound() * model.n_bound()),
        };
        out.write_json("snapshots.json", &meta)?;
    }

    let mut frames = Vec::new();
    if let Some((transform, times)) = &wigner {
        let grids = times
            .iter()
            .map(|&t| {
                let rho = record.snapshot_near(t * t0).expect("snapshot recorded");
                transform.transform(rho).map(|g| (t, g))
            })
            .collect::<morse_decoherence::Result<Vec<_>>>()?;
        // one grey scale for the whole run
        let w_min = grids.iter().map(|(_, g)| g.min()).fold(f64::INFINITY, f64::min);
        let w_max = grids.iter().map(|(_, g)| g.max()).fold(f64::NEG_INFINITY, f64::max);
        for (k, (t, grid)) in grids.iter().enumerate() {
            let pgm = format!("wigner_{k:03}.pgm");
            let sidecar = format!("wigner_{k:03}.json");
            out.write(&pgm, &buffer(|b| grid.write_pgm(b, w_min, w_max))?)?;
            out.write_json(&sidecar, &grid.frame_meta(w_min, w_max, t * t0))?;
            frames.push(FrameEntry {
                t_over_t0: *t,
                pgm,
                sidecar,
                negativity: grid.negativity(),
            });
        }
    }

    let config_hash = cfg.hash();
    let decoherence = match &cfg.decoherence_fit {
        Some(options) => Some(match fit_record(&record, t0, options) {
            Ok(est) => {
                let report = FitReport::new(&est.entropy, options, &config_hash);
                out.write_json("fit_report.json", &report)?;
                serde_json::json!({ "entropy": est.entropy, "purity": est.purity, "disagreement": est.disagreement() })
            }
            Err(e) => {
                eprintln!("warning: decoherence fit: {e}");
                serde_json::json!({ "inconclusive": e.to_string() })
            }
        }),
        None => None,
    };

    let manifest = Manifest {
        tool: "morsedec",
        version: env!("CARGO_PKG_VERSION"),
        config_hash,
        config: cfg.clone(),
        derived: Derived {
            lambda: setup.lambda,
            omega01: model.omega01(),
            t0,
            t0_definition: T0_DEFINITION,
            n_bound: model.n_bound(),
            dt: setup.trajectory.dt,
            n_steps: setup.trajectory.n_steps(),
        },
        diagnostics: Diagnostics {
            samples: record.len(),
            max_trace_err: record.max_trace_err(),
            max_herm_drift: record.max_herm_drift(),
            min_eigenvalue: record.min_eigenvalue(),
        },
        frames,
        decoherence,
        artifacts: out.finish(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
    bytes.push(b'\n');
    std::fs::write(dir.join("manifest.json"), bytes).map_err(|e| CliError::io("writing manifest.json", e))?;
    Ok(manifest)
}
