use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tuneout_core::imaging::{Frame, FrameRole, ImagingError, ReferenceBasis, MAX_BASIS_FRAMES};
use tuneout_core::pipeline::{analyze_shot, synthesize_scan, ScanConfig, ShotAnalysis};
use tuneout_core::stark::recoil_energy;

use super::{stamp, Report, RunArgs};
use crate::config::{load_config, load_data};
use crate::error::CliError;
use crate::output::{num, opt, RecordWriter, Table};

pub const FRAMES_DIR: &str = "frames";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub data: Option<PathBuf>,
    pub scan: ScanConfig,
}

#[derive(Debug, Serialize)]
struct ScanSummary {
    tuneout_nm: f64,
    shots: usize,
    reference_frames: usize,
    frames_dir: String,
}

pub fn synth_data(args: &RunArgs, seed: u64) -> Result<Report, CliError> {
    let cfg: SynthConfig = load_config(args.config.as_deref(), &args.set)?;
    let loaded = load_data(cfg.data.as_ref())?;
    let stamp = stamp("synth-data", &cfg, Some(seed), &loaded)?;
    let scan = synthesize_scan(&cfg.scan, &loaded.data, seed)?;
    let frames = args.out.join(FRAMES_DIR);
    std::fs::create_dir_all(&frames)?;
    for r in &scan.references {
        r.save(&frames.join(format!("{}.pgm", r.meta.shot_id)))?;
    }
    let mut records = RecordWriter::create(&args.out, "synth", stamp.clone())?;
    let mut table = Table::new(&["shot_id", "wavelength_nm", "m_f", "depth_er", "recoil_hz"]);
    for s in &scan.shots {
        s.signal.save(&frames.join(format!("{}_signal.pgm", s.record.shot_id)))?;
        s.reference.save(&frames.join(format!("{}_reference.pgm", s.record.shot_id)))?;
        for (m, v) in &s.record.depth_er {
            table.push(vec![
                s.record.shot_id.clone(),
                num(s.record.wavelength_nm),
                m.to_string(),
                num(*v),
                num(s.record.recoil_hz),
            ]);
        }
        records.write("shot", &s.record)?;
    }
    records.write(
        "scan",
        &ScanSummary {
            tuneout_nm: scan.tuneout_nm,
            shots: scan.shots.len(),
            reference_frames: scan.references.len(),
            frames_dir: FRAMES_DIR.into(),
        },
    )?;
    Ok(Report {
        outputs: vec![records.finish()?, table.write(&args.out, "synth", &stamp)?, frames],
        records: scan.shots.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    pub data: Option<PathBuf>,
    pub scan: ScanConfig,
    /// Compose an optimal reference from the atom-free frames; otherwise use each shot's own reference.
    pub compose: bool,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            data: None,
            scan: ScanConfig::default(),
            compose: true,
        }
    }
}

/// PGM frames with sidecars in `dir`, sorted by file name.
pub fn load_frames(dir: &Path) -> Result<Vec<Frame>, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(ImagingError::EmptyInput(format!("no .pgm frames in {}", dir.display())).into());
    }
    Ok(paths.iter().map(|p| Frame::load(p)).collect::<Result<_, _>>()?)
}

#[derive(Debug, Serialize)]
struct ShotFailure {
    shot_id: String,
    error: String,
}

pub fn analyze_images(args: &RunArgs, input: &Path) -> Result<Report, CliError> {
    let cfg: AnalyzeConfig = load_config(args.config.as_deref(), &args.set)?;
    cfg.scan.validate()?;
    let loaded = load_data(cfg.data.as_ref())?;
    let stamp = stamp("analyze-images", &cfg, None, &loaded)?;
    let stamp = crate::output::Stamp {
        provenance: format!("{}; frames {}", stamp.provenance, input.display()),
        ..stamp
    };
    let frames = load_frames(input)?;
    let (signals, references): (Vec<&Frame>, Vec<&Frame>) =
        frames.iter().partition(|f| f.meta.role == FrameRole::Signal);
    if signals.is_empty() {
        return Err(ImagingError::EmptyInput(format!("no signal frames in {}", input.display())).into());
    }
    let own: BTreeMap<&str, &Frame> = references
        .iter()
        .filter(|r| r.meta.control.is_some())
        .map(|r| (r.meta.shot_id.as_str(), *r))
        .collect();
    let basis = if cfg.compose {
        let mut pool: Vec<Frame> = references
            .iter()
            .filter(|r| r.meta.control.is_none())
            .map(|r| (*r).clone())
            .collect();
        if pool.is_empty() {
            pool = references.iter().map(|r| (*r).clone()).collect();
        }
        pool.truncate(MAX_BASIS_FRAMES);
        Some(ReferenceBasis::build(&pool, cfg.scan.mask)?)
    } else {
        None
    };
    let mass = loaded.data.species.mass_kg.value;
    let results: Vec<Result<ShotAnalysis, String>> = signals
        .par_iter()
        .map(|s| {
            let recoil = recoil_energy(s.meta.control.unwrap_or(cfg.scan.center_nm), mass);
            let raw = own.get(s.meta.shot_id.as_str()).copied();
            analyze_shot(s, raw, basis.as_ref(), &cfg.scan, recoil).map_err(|e| e.to_string())
        })
        .collect();

    let mut records = RecordWriter::create(&args.out, "analysis", stamp.clone())?;
    let mut shots = Table::new(&[
        "shot_id",
        "wavelength_nm",
        "m_f",
        "depth_er",
        "sigma_er",
        "p0",
        "p_plus1",
        "p_minus1",
        "snr",
        "clamped_pixels",
    ]);
    let mut points = Table::new(&["control", "value_er", "sigma_er", "m_f", "shots"]);
    let mut analysed = 0;
    for (signal, result) in signals.iter().zip(results) {
        match result {
            Ok(a) => {
                analysed += 1;
                for b in &a.bands {
                    let d = b.depth.as_ref();
                    let p = &b.extraction.populations;
                    shots.push(vec![
                        a.shot_id.clone(),
                        num(a.wavelength_nm),
                        b.m_f.to_string(),
                        opt(d.map(|d| d.depth_er)),
                        opt(d.map(|d| d.sigma_er)),
                        num(p.get(0)),
                        num(p.get(1)),
                        num(p.get(-1)),
                        opt(a.snr),
                        a.clamped_pixels.to_string(),
                    ]);
                    if let Some(d) = d.filter(|d| d.sigma_er.is_finite() && d.sigma_er > 0.0) {
                        points.push(vec![
                            num(a.wavelength_nm),
                            num(d.depth_er),
                            num(d.sigma_er),
                            b.m_f.to_string(),
                            "1".into(),
                        ]);
                    }
                }
                records.write("shot", &a)?;
            }
            Err(error) => records.write(
                "shot_error",
                &ShotFailure {
                    shot_id: signal.meta.shot_id.clone(),
                    error,
                },
            )?,
        }
    }
    if analysed == 0 {
        return Err(CliError::Computation("no shot could be analysed".into()));
    }
    Ok(Report {
        outputs: vec![
            records.finish()?,
            shots.write(&args.out, "shots", &stamp)?,
            points.write(&args.out, "points", &stamp)?,
        ],
        records: analysed,
    })
}
