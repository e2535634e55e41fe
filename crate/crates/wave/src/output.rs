//! Plot-ready artifacts: the path table, profile files, run summary and the
//! error record.
//!
//! Floats are written with 17 significant digits so that identical runs give
//! byte-identical files.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wave_core::continuation::{ContinuationRecord, Stage};
use wave_core::{Grid, WaveState};

use crate::error::{CliError, CliResult};

pub const PATH_FILE: &str = "path.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const ERROR_FILE: &str = "error.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";

pub const PATH_HEADER: &str = "stage,family_param,c,residual_norm,speed_identity_gap,cmax_margin,\
min_psi,max_psi,min_dx_psi,gamma_fit,gamma_pred,bounds_ok,monotone_ok,sandwich_ok,left_decay_ok";

pub const SLICE_HEADER: &str = "x,psi_top,psi_mid,psi_bottom,phi";

/// 17 significant digits; non-finite values become an empty field.
pub fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn parse_float(s: &str) -> Result<f64, String> {
    if s.is_empty() {
        return Ok(f64::NAN);
    }
    s.parse().map_err(|e| format!("`{s}`: {e}"))
}

fn parse_bool(s: &str) -> Result<Option<bool>, String> {
    match s {
        "true" => Ok(Some(true)),
        "false" => Ok(Some(false)),
        "" => Ok(None),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

pub fn path_row(r: &ContinuationRecord) -> String {
    let d = &r.diagnostics;
    let floats = [
        r.family.parameter(),
        r.c,
        r.residual_norm,
        d.speed_identity_gap,
        d.cmax_margin,
        d.min_psi,
        d.max_psi,
        d.min_dx_psi,
        d.gamma_fit,
        d.gamma_pred,
    ];
    let mut fields = vec![r.stage.as_str().to_owned()];
    fields.extend(floats.into_iter().map(fmt_float));
    fields.push(d.bounds_ok.to_string());
    fields.push(d.monotone_ok.to_string());
    fields.push(d.sandwich_ok.map(|b| b.to_string()).unwrap_or_default());
    fields.push(d.left_decay_ok.to_string());
    fields.join(",")
}

/// One parsed line of `path.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub stage: Stage,
    pub family_param: f64,
    pub c: f64,
    pub residual_norm: f64,
    pub speed_identity_gap: f64,
    pub cmax_margin: f64,
    pub min_psi: f64,
    pub max_psi: f64,
    pub min_dx_psi: f64,
    pub gamma_fit: f64,
    pub gamma_pred: f64,
    pub bounds_ok: bool,
    pub monotone_ok: bool,
    pub sandwich_ok: Option<bool>,
    pub left_decay_ok: bool,
}

impl PathRow {
    pub fn parse(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 15 {
            return Err(format!("expected 15 fields, found {}", f.len()));
        }
        let stage = Stage::parse(f[0]).ok_or_else(|| format!("unknown stage `{}`", f[0]))?;
        let num = |k: usize| parse_float(f[k]);
        let flag = |k: usize| parse_bool(f[k])?.ok_or_else(|| format!("column {k} is empty"));
        Ok(Self {
            stage,
            family_param: num(1)?,
            c: num(2)?,
            residual_norm: num(3)?,
            speed_identity_gap: num(4)?,
            cmax_margin: num(5)?,
            min_psi: num(6)?,
            max_psi: num(7)?,
            min_dx_psi: num(8)?,
            gamma_fit: num(9)?,
            gamma_pred: num(10)?,
            bounds_ok: flag(11)?,
            monotone_ok: flag(12)?,
            sandwich_ok: parse_bool(f[13])?,
            left_decay_ok: flag(14)?,
        })
    }

    pub fn invariants_ok(&self) -> bool {
        self.bounds_ok && self.monotone_ok && self.sandwich_ok.unwrap_or(true) && self.left_decay_ok
    }
}

pub fn read_path_table(path: &Path) -> CliResult<Vec<PathRow>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(PATH_HEADER) {
        return Err(CliError::Parse {
            path: path.to_owned(),
            message: "unexpected header".into(),
        });
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            PathRow::parse(line).map_err(|message| CliError::Parse {
                path: path.to_owned(),
                message: format!("row {k}: {message}"),
            })
        })
        .collect()
}

/// Append-only writer for `path.csv`; each row is written through at once so
/// that a failed run keeps every accepted record.
#[derive(Debug)]
pub struct PathTable {
    path: PathBuf,
    file: File,
    rows: usize,
}

impl PathTable {
    pub fn create(path: &Path) -> CliResult<Self> {
        let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
        writeln!(file, "{PATH_HEADER}").map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            path: path.to_owned(),
            file,
            rows: 0,
        })
    }

    /// Reopens an existing table keeping the header and the first `keep` rows.
    pub fn truncate_to(path: &Path, keep: usize) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let lines: Vec<&str> = text.lines().collect();
        if lines.first() != Some(&PATH_HEADER) || lines.len() < keep + 1 {
            return Err(CliError::Parse {
                path: path.to_owned(),
                message: format!("needs a header and at least {keep} rows to resume"),
            });
        }
        let mut kept = lines[..=keep].join("\n");
        kept.push('\n');
        fs::write(path, kept).map_err(|e| CliError::io(path, e))?;
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| CliError::io(path, e))?;
        Ok(Self {
            path: path.to_owned(),
            file,
            rows: keep,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn append(&mut self, record: &ContinuationRecord) -> CliResult<()> {
        writeln!(self.file, "{}", path_row(record)).map_err(|e| CliError::io(&self.path, e))?;
        self.rows += 1;
        Ok(())
    }
}

/// `<stage>_<parameter>` with six decimals, used in artifact names.
pub fn record_tag(stage: Stage, parameter: f64) -> String {
    format!("{}_{parameter:.6}", stage.as_str())
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes `profile_<tag>.csv` (`x,y,psi`) and, for the exchange family,
/// `profile_<tag>_phi.csv` (`x,phi`).
pub fn write_profile(dir: &Path, stage: Stage, state: &WaveState, grid: &Grid) -> CliResult<()> {
    let tag = record_tag(stage, state.family.parameter());
    let mut text = String::from("x,y,psi\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let v = state.psi[grid.node(i, j)];
            text.push_str(&format!("{},{},{}\n", fmt_float(grid.x(i)), fmt_float(grid.y(j)), fmt_float(v)));
        }
    }
    write_file(&dir.join(format!("profile_{tag}.csv")), &text)?;
    if let Some(phi) = &state.phi {
        let mut text = String::from("x,phi\n");
        for (i, v) in phi.iter().enumerate() {
            text.push_str(&format!("{},{}\n", fmt_float(grid.x(i)), fmt_float(*v)));
        }
        write_file(&dir.join(format!("profile_{tag}_phi.csv")), &text)?;
    }
    Ok(())
}

/// Slices `ψ(x, 0)`, `ψ(x, -L/2)`, `ψ(x, -L)` and `φ(x)`; the last column
/// is empty without a line field.
pub fn profile_slices(state: &WaveState, grid: &Grid) -> String {
    let mut text = format!("{SLICE_HEADER}\n");
    let (top, mid) = (grid.ny - 1, grid.anchor_j);
    for i in 0..grid.nx {
        let at = |j: usize| fmt_float(state.psi[grid.node(i, j)]);
        let phi = state.phi.as_ref().map(|p| fmt_float(p[i])).unwrap_or_default();
        text.push_str(&format!("{},{},{},{},{phi}\n", fmt_float(grid.x(i)), at(top), at(mid), at(0)));
    }
    text
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub records: usize,
    pub final_parameter: f64,
    pub final_c: f64,
    pub bounds_ok: bool,
    pub monotone_ok: bool,
    /// Absent for the Wentzell stage.
    pub sandwich_ok: Option<bool>,
    pub left_decay_ok: bool,
    pub max_speed_identity_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub records: usize,
    pub stages: BTreeMap<String, StageSummary>,
    /// Wall-clock seconds of this process, by phase.
    pub timings_s: BTreeMap<String, f64>,
}

impl Summary {
    pub fn from_rows(rows: &[PathRow], config_hash: &str, timings_s: BTreeMap<String, f64>) -> Self {
        let mut stages = BTreeMap::new();
        for stage in [Stage::A, Stage::B, Stage::C] {
            let sel: Vec<&PathRow> = rows.iter().filter(|r| r.stage == stage).collect();
            let Some(last) = sel.last() else { continue };
            let sandwich: Vec<bool> = sel.iter().filter_map(|r| r.sandwich_ok).collect();
            stages.insert(
                stage.as_str().to_owned(),
                StageSummary {
                    records: sel.len(),
                    final_parameter: last.family_param,
                    final_c: last.c,
                    bounds_ok: sel.iter().all(|r| r.bounds_ok),
                    monotone_ok: sel.iter().all(|r| r.monotone_ok),
                    sandwich_ok: (!sandwich.is_empty()).then(|| sandwich.iter().all(|&b| b)),
                    left_decay_ok: sel.iter().all(|r| r.left_decay_ok),
                    max_speed_identity_gap: sel.iter().map(|r| r.speed_identity_gap).fold(0.0, f64::max),
                },
            );
        }
        Self {
            config_hash: config_hash.to_owned(),
            records: rows.len(),
            stages,
            timings_s,
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("summary serialises");
        write_file(path, &text)
    }
}

/// Machine-readable failure record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&CliError> for ErrorRecord {
    fn from(e: &CliError) -> Self {
        Self {
            kind: e.kind().to_owned(),
            message: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

impl ErrorRecord {
    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("error record serialises");
        write_file(path, &text)
    }
}
