//! JSON checkpoints: one accepted record plus the continuation cursor.
//!
//! Files are compact JSON. Floats are written in shortest round-trip form
//! and parsed with `float_roundtrip`, so write → read → write is
//! byte-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use wave_core::continuation::{Cursor, Stage};
use wave_core::{Grid, HomotopyFamily, WaveState};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Wentzell,
    Exchange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyTag {
    pub kind: FamilyKind,
    pub parameter: f64,
}

impl From<HomotopyFamily> for FamilyTag {
    fn from(f: HomotopyFamily) -> Self {
        let kind = if f.is_exchange() {
            FamilyKind::Exchange
        } else {
            FamilyKind::Wentzell
        };
        Self {
            kind,
            parameter: f.parameter(),
        }
    }
}

impl From<FamilyTag> for HomotopyFamily {
    fn from(t: FamilyTag) -> Self {
        match t.kind {
            FamilyKind::Wentzell => HomotopyFamily::Wentzell { s: t.parameter },
            FamilyKind::Exchange => HomotopyFamily::Exchange { epsilon: t.parameter },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridMeta {
    pub x_left: f64,
    pub x_right: f64,
    pub depth: f64,
    pub nx: usize,
    pub ny: usize,
}

impl From<&Grid> for GridMeta {
    fn from(g: &Grid) -> Self {
        Self {
            x_left: g.x_left,
            x_right: g.x_right,
            depth: g.depth,
            nx: g.nx,
            ny: g.ny,
        }
    }
}

impl GridMeta {
    pub fn grid(&self) -> CliResult<Grid> {
        Ok(Grid::new(self.x_left, self.x_right, self.depth, self.nx, self.ny)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub family: FamilyTag,
    pub c: f64,
    pub psi: Vec<f64>,
    pub phi: Option<Vec<f64>>,
}

impl From<&WaveState> for Snapshot {
    fn from(s: &WaveState) -> Self {
        Self {
            family: s.family.into(),
            c: s.c,
            psi: s.psi.clone(),
            phi: s.phi.clone(),
        }
    }
}

impl Snapshot {
    pub fn state(&self) -> WaveState {
        WaveState {
            c: self.c,
            psi: self.psi.clone(),
            phi: self.phi.clone(),
            family: self.family.into(),
        }
    }
}

/// What the path needs beyond the record itself to continue identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationMeta {
    pub step: f64,
    pub previous: Option<Snapshot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub schema_version: u32,
    /// Zero-based row of the record in `path.csv`.
    pub record_index: usize,
    pub stage: String,
    pub family: FamilyTag,
    pub c: f64,
    pub grid: GridMeta,
    /// Row-major, `x` fastest, bottom row first.
    pub psi: Vec<f64>,
    pub phi: Option<Vec<f64>>,
    pub continuation: ContinuationMeta,
    pub config_hash: String,
}

impl Checkpoint {
    pub fn new(record_index: usize, stage: Stage, cursor: &Cursor, grid: &Grid, config_hash: &str) -> Self {
        let s = &cursor.current;
        Self {
            schema_version: SCHEMA_VERSION,
            record_index,
            stage: stage.as_str().to_owned(),
            family: s.family.into(),
            c: s.c,
            grid: grid.into(),
            psi: s.psi.clone(),
            phi: s.phi.clone(),
            continuation: ContinuationMeta {
                step: cursor.step,
                previous: cursor.previous.as_ref().map(Snapshot::from),
            },
            config_hash: config_hash.to_owned(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    /// Parses a checkpoint, checking the schema version before the layout.
    pub fn from_json(text: &str, path: &Path) -> CliResult<Self> {
        let parse_err = |e: serde_json::Error| CliError::Parse {
            path: path.to_owned(),
            message: e.to_string(),
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
        let found = value.get("schema_version").and_then(|v| v.as_u64());
        match found {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => {
                return Err(CliError::SchemaMismatch {
                    found: v,
                    expected: SCHEMA_VERSION,
                })
            }
            None => {
                return Err(CliError::Parse {
                    path: path.to_owned(),
                    message: "missing integer `schema_version`".into(),
                })
            }
        }
        // from the text rather than the Value, which would round floats
        let ckpt: Self = serde_json::from_str(text).map_err(parse_err)?;
        ckpt.check(path)?;
        Ok(ckpt)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn stage(&self) -> Option<Stage> {
        Stage::parse(&self.stage)
    }

    pub fn state(&self) -> WaveState {
        WaveState {
            c: self.c,
            psi: self.psi.clone(),
            phi: self.phi.clone(),
            family: self.family.into(),
        }
    }

    pub fn cursor(&self) -> Cursor {
        Cursor {
            current: self.state(),
            previous: self.continuation.previous.as_ref().map(Snapshot::state),
            step: self.continuation.step,
        }
    }

    fn check(&self, path: &Path) -> CliResult<()> {
        let bad = |message: String| CliError::Parse {
            path: path.to_owned(),
            message,
        };
        if self.stage().is_none() {
            return Err(bad(format!("unknown stage `{}`", self.stage)));
        }
        let grid = self.grid.grid().map_err(|e| bad(e.to_string()))?;
        let snapshots = core::iter::once(self.state())
            .chain(self.continuation.previous.as_ref().map(Snapshot::state));
        for s in snapshots {
            s.check_shape(&grid).map_err(|e| bad(e.to_string()))?;
        }
        Ok(())
    }
}
