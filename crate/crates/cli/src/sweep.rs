//! Parameter sweeps with a decoherence-time fit per point.

use std::path::Path;

use morse_decoherence::analysis::{fit_exponential, ExponentialLaw, FitReport};
use morse_decoherence::MorseModel;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{SweepConfig, SweepParameter};
use crate::error::{CliError, ErrorKind};
use crate::scenario::{fit_record, Artifact, ArtifactWriter, Setup};

#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub value: f64,
    pub t_d: Option<f64>,
    pub residual: Option<f64>,
    pub purity_t_d: Option<f64>,
    /// `ok`, or why the point was excluded from the law fit.
    pub status: String,
    #[serde(skip)]
    pub aborted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub config: SweepConfig,
    pub points: Vec<PointResult>,
    pub law: Option<ExponentialLaw>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law_refused: Option<String>,
    pub artifacts: Vec<Artifact>,
}

fn run_point(model: &MorseModel, cfg: &SweepConfig, value: f64) -> (PointResult, Option<(Vec<u8>, FitReport)>) {
    let point = cfg.point(value);
    let outcome = Setup::new(model, &point).and_then(|setup| {
        let record = setup.run(model, &point, &[])?;
        let mut csv = Vec::new();
        record.write_csv(&mut csv, setup.t0).map_err(CliError::from)?;
        Ok((fit_record(&record, setup.t0, &cfg.fit), csv))
    });
    let blank = |status: String, aborted: bool| PointResult {
        value,
        t_d: None,
        residual: None,
        purity_t_d: None,
        status,
        aborted,
    };
    match outcome {
        Ok((Ok(est), csv)) => {
            let report = FitReport::new(&est.entropy, &cfg.fit, &point.hash());
            (
                PointResult {
                    value,
                    t_d: Some(est.entropy.t_d),
                    residual: Some(est.entropy.residual),
                    purity_t_d: Some(est.purity.t_d),
                    status: "ok".into(),
                    aborted: false,
                },
                Some((csv, report)),
            )
        }
        Ok((Err(e), _)) => (blank(e.to_string(), false), None),
        Err(e) => (blank(e.message.clone(), e.kind == ErrorKind::Numerical), None),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Runs every grid point on a pool of `threads` workers and writes the
/// summary, the per-point fit reports and, for `x0` sweeps, the law.
pub fn run_sweep(cfg: &SweepConfig, dir: &Path, threads: usize) -> Result<SweepManifest, CliError> {
    let model = MorseModel::new(cfg.scenario.s)?;
    let mut values = cfg.values.clone();
    values.sort_by(f64::total_cmp);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| values.par_iter().map(|&v| run_point(&model, cfg, v)).collect());

    let mut out = ArtifactWriter::new(dir)?;
    let name = cfg.parameter.name();
    let mut summary = format!("{name},t_d,residual,purity_t_d,status\n");
    for (k, (p, extra)) in results.iter().enumerate() {
        summary.push_str(&format!(
            "{:e},{},{},{},{}\n",
            p.value,
            opt(p.t_d),
            opt(p.residual),
            opt(p.purity_t_d),
            p.status.replace(',', ";")
        ));
        if let Some((csv, report)) = extra {
            out.write(&format!("point_{k:03}.csv"), csv)?;
            out.write_json(&format!("fit_{k:03}.json"), report)?;
        }
        if p.status != "ok" {
            eprintln!("warning: {name} = {}: {}", p.value, p.status);
        }
    }
    out.write("summary.csv", summary.as_bytes())?;

    let points: Vec<PointResult> = results.into_iter().map(|(p, _)| p).collect();
    let conclusive: Vec<(f64, f64)> = points.iter().filter_map(|p| p.t_d.map(|t| (p.value, t))).collect();
    let (law, law_refused) = if cfg.parameter != SweepParameter::X0 {
        (None, None)
    } else if points.len() == 1 {
        (None, Some("single-point grid".to_owned()))
    } else {
        match fit_exponential(&conclusive) {
            Ok(law) => (Some(law), None),
            Err(e) => {
                eprintln!("warning: exponential law not fitted: {e}");
                (None, Some(e.to_string()))
            }
        }
    };
    let config_hash = cfg.hash();
    if let Some(law) = &law {
        out.write_json(
            "law.json",
            &serde_json::json!({ "law": law, "config_hash": config_hash }),
        )?;
    }
    let aborted = points.iter().filter(|p| p.aborted).count();
    let manifest = SweepManifest {
        tool: "morsedec",
        version: env!("CARGO_PKG_VERSION"),
        config_hash,
        config: cfg.clone(),
        points,
        law,
        law_refused,
        artifacts: out.finish(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
    bytes.push(b'\n');
    std::fs::write(dir.join("manifest.json"), bytes).map_err(|e| CliError::io("writing manifest.json", e))?;
    if aborted > 0 {
        return Err(CliError {
            kind: ErrorKind::Numerical,
            message: format!("{aborted} sweep point(s) aborted; see manifest.json"),
        });
    }
    Ok(manifest)
}
