//! Trial CSV and model JSON file handling.
//!
//! Trial files carry one sample per row under the header
//! `t,x,y,z,phi,theta,psi`, with `t` counting 1, 2, 3, ... and Euler angles
//! in radians. A directory holds one motion type, one file per trial.

use std::path::Path;

use nalgebra::DMatrix;

use super::{MotionError, MotionModel, TrialSet, DEFAULT_DEGREE_NAMES};

const TRIAL_HEADER: &str = "t,x,y,z,phi,theta,psi";

fn trial_err(file: &str, line: usize, message: String) -> MotionError {
    MotionError::BadTrialFile {
        file: file.to_string(),
        line,
        message,
    }
}

/// Parses one trial file into a 6 x T matrix (angles still in radians).
pub fn parse_trial_csv(text: &str, file_name: &str) -> Result<DMatrix<f64>, MotionError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| trial_err(file_name, 1, "empty file".into()))?;
    if header.trim() != TRIAL_HEADER {
        return Err(trial_err(
            file_name,
            1,
            format!("header must be `{TRIAL_HEADER}`, got `{}`", header.trim()),
        ));
    }
    let mut columns: Vec<[f64; 6]> = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(trial_err(
                file_name,
                idx + 1,
                format!("expected 7 fields, got {}", fields.len()),
            ));
        }
        let t: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| trial_err(file_name, idx + 1, format!("bad time `{}`", fields[0])))?;
        if t != columns.len() + 1 {
            return Err(trial_err(
                file_name,
                idx + 1,
                format!("time column must count 1, 2, 3, ...; got {t}"),
            ));
        }
        let mut sample = [0.0; 6];
        for (d, field) in fields[1..].iter().enumerate() {
            sample[d] = field.trim().parse().map_err(|_| {
                trial_err(file_name, idx + 1, format!("bad value `{field}`"))
            })?;
        }
        columns.push(sample);
    }
    if columns.is_empty() {
        return Err(trial_err(file_name, 1, "trial has no samples".into()));
    }
    Ok(DMatrix::from_fn(6, columns.len(), |d, t| columns[t][d]))
}

/// Loads every `*.csv` in a directory (sorted by file name) as one trial
/// set. Angles stay in radians; callers normalize before learning.
pub fn load_trials_dir(dir: &Path) -> Result<TrialSet, MotionError> {
    let mut files: Vec<std::path::PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
        .collect();
    files.sort();
    let mut trials = Vec::new();
    for path in &files {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        trials.push(parse_trial_csv(&text, &name)?);
    }
    TrialSet::with_default_degrees(trials)
}

/// Writes a D x T trajectory in the trial CSV format. Degree order follows
/// the model's degree names, which must match the standard six-column
/// layout for the file to round-trip.
pub fn trajectory_to_csv(trajectory: &DMatrix<f64>) -> String {
    let mut out = String::from(TRIAL_HEADER);
    out.push('\n');
    debug_assert_eq!(trajectory.nrows(), DEFAULT_DEGREE_NAMES.len());
    for t in 0..trajectory.ncols() {
        out.push_str(&format!("{}", t + 1));
        for d in 0..trajectory.nrows() {
            out.push(',');
            out.push_str(&format!("{}", trajectory[(d, t)]));
        }
        out.push('\n');
    }
    out
}

/// Serializes a model to its JSON container.
pub fn model_to_json(model: &MotionModel) -> String {
    serde_json::to_string_pretty(model).expect("model serializes")
}

/// Loads and shape-checks a model from JSON.
pub fn model_from_json(text: &str) -> Result<MotionModel, MotionError> {
    let model: MotionModel =
        serde_json::from_str(text).map_err(|e| MotionError::BadModelFile(e.to_string()))?;
    model.validate()?;
    Ok(model)
}
