//! Orchestration of runs, resumes, sweeps and the single analyses.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use wave_core::analysis::{scan_symbol_zero_free, symbol_samples};
use wave_core::continuation::{
    resume_homotopy, run_homotopy, ContinuationPath, ContinuationRecord, Cursor, HomotopyPlan, Problem, RecordSink,
    Stage,
};
use wave_core::{newton_solve, solve_1d_ignition_shooting, Grid, OneDimWave};

use crate::checkpoint::{Checkpoint, GridMeta};
use crate::config::{ProfileMode, RunConfig, Setup};
use crate::error::{CliError, CliResult};
use crate::output::{
    fmt_float, profile_slices, read_path_table, write_profile, ErrorRecord, PathTable, Summary, CHECKPOINT_DIR,
    ERROR_FILE, PATH_FILE, SUMMARY_FILE,
};

/// Result of a completed run or resume.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub path: ContinuationPath,
    pub summary: Summary,
}

/// Writes every accepted record to `path.csv` and, by cadence, checkpoints
/// and profiles.
struct ArtifactSink<'a> {
    dir: &'a Path,
    table: PathTable,
    setup: &'a Setup,
    hash: &'a str,
    checkpoint_every: usize,
    profiles: ProfileMode,
}

impl ArtifactSink<'_> {
    /// First record, the handoff record and records at a stage target.
    fn is_endpoint(&self, index: usize, record: &ContinuationRecord) -> bool {
        let p = record.family.parameter();
        index == 0
            || match record.stage {
                Stage::A => p == self.setup.plan.target_s,
                Stage::B => true,
                Stage::C => p == self.setup.plan.target_eps,
            }
    }

    fn write(&mut self, record: &ContinuationRecord, cursor: &Cursor) -> CliResult<Option<String>> {
        let index = self.table.rows();
        self.table.append(record)?;
        let endpoint = self.is_endpoint(index, record);
        let profile = match self.profiles {
            ProfileMode::All => true,
            ProfileMode::Endpoints => endpoint,
            ProfileMode::None => false,
        };
        if profile {
            write_profile(self.dir, record.stage, &cursor.current, &self.setup.grid)?;
        }
        if endpoint || index.is_multiple_of(self.checkpoint_every) {
            let name = format!("{CHECKPOINT_DIR}/ckpt_{index:05}.json");
            Checkpoint::new(index, record.stage, cursor, &self.setup.grid, self.hash).write(&self.dir.join(&name))?;
            return Ok(Some(name));
        }
        Ok(None)
    }
}

impl RecordSink for ArtifactSink<'_> {
    fn accept(&mut self, record: &ContinuationRecord, cursor: &Cursor) -> Result<Option<String>, String> {
        self.write(record, cursor).map_err(|e| e.to_string())
    }
}

fn problem(setup: &Setup) -> Problem<'_> {
    Problem {
        params: &setup.params,
        spec: &setup.spec,
        grid: &setup.grid,
        newton: &setup.newton,
        opts: &setup.opts,
    }
}

fn plan_with(setup: &Setup, stop_after: Option<Stage>) -> HomotopyPlan {
    let mut plan = setup.plan;
    if let Some(stage) = stop_after {
        plan.stop_after = stage;
    }
    plan
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir.join(CHECKPOINT_DIR)).map_err(|e| CliError::io(dir, e))?;
    let stale = dir.join(ERROR_FILE);
    if stale.exists() {
        fs::remove_file(&stale).map_err(|e| CliError::io(&stale, e))?;
    }
    Ok(())
}

/// Leaves `error.json` next to the partial artifacts; a failure to write it
/// is only logged, the original error is what the caller reports.
fn record_failure<T>(dir: &Path, result: CliResult<T>) -> CliResult<T> {
    if let Err(e) = &result {
        if dir.is_dir() {
            if let Err(w) = ErrorRecord::from(e).write(&dir.join(ERROR_FILE)) {
                log::error!("could not write the error record: {w}");
            }
        }
    }
    result
}

fn finish(
    dir: &Path,
    setup: &Setup,
    hash: &str,
    path: ContinuationPath,
    mut timings: BTreeMap<String, f64>,
    started: Instant,
) -> CliResult<RunOutcome> {
    let rows = read_path_table(&dir.join(PATH_FILE))?;
    timings.insert("total".into(), started.elapsed().as_secs_f64());
    let summary = Summary::from_rows(&rows, hash, timings);
    summary.write(&dir.join(SUMMARY_FILE))?;
    if let Some(last) = path.last() {
        log::info!(
            "done: {} records, final stage {} parameter {} c = {:.12} on {}x{}",
            rows.len(),
            last.stage.as_str(),
            last.family.parameter(),
            last.c,
            setup.grid.nx,
            setup.grid.ny
        );
    }
    Ok(RunOutcome {
        dir: dir.to_owned(),
        path,
        summary,
    })
}

/// Shooting, strip solve at `s = 0`, then the homotopy up to the last stage
/// of the plan (or `stop_after` when given).
pub fn run(cfg: &RunConfig, stop_after: Option<Stage>) -> CliResult<RunOutcome> {
    let dir = cfg.output.dir.clone();
    let result = cfg.setup().and_then(|setup| {
        prepare_dir(&dir)?;
        run_in(&dir, cfg, &setup, stop_after)
    });
    record_failure(&dir, result)
}

fn run_in(dir: &Path, cfg: &RunConfig, setup: &Setup, stop_after: Option<Stage>) -> CliResult<RunOutcome> {
    let started = Instant::now();
    let hash = cfg.hash();
    let mut timings = BTreeMap::new();

    let t = Instant::now();
    let wave = solve_1d_ignition_shooting(setup.params.d, &setup.spec, cfg.shooting_tol)?;
    timings.insert("oned".into(), t.elapsed().as_secs_f64());
    log::info!("one-dimensional speed c = {:.12}", wave.c);

    let t = Instant::now();
    let init = wave.embed(&setup.grid, 0.0);
    let start = newton_solve(&init, &setup.params, &setup.spec, &setup.grid, &setup.newton)?.state;
    timings.insert("strip_start".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let mut sink = ArtifactSink {
        dir,
        table: PathTable::create(&dir.join(PATH_FILE))?,
        setup,
        hash: &hash,
        checkpoint_every: cfg.output.checkpoint_every,
        profiles: cfg.output.profiles,
    };
    let plan = plan_with(setup, stop_after);
    let path = run_homotopy(start, problem(setup), &plan, &mut sink)?;
    timings.insert("homotopy".into(), t.elapsed().as_secs_f64());
    finish(dir, setup, &hash, path, timings, started)
}

/// Continues the run that wrote `checkpoint` into the configured output
/// directory. Rows after the checkpoint's record are replaced.
pub fn resume(checkpoint: &Path, cfg: &RunConfig, force: bool, stop_after: Option<Stage>) -> CliResult<RunOutcome> {
    let dir = cfg.output.dir.clone();
    let result = Checkpoint::read(checkpoint).and_then(|ckpt| {
        let hash = cfg.hash();
        if ckpt.config_hash != hash {
            if !force {
                return Err(CliError::ConfigHashMismatch {
                    found: hash,
                    expected: ckpt.config_hash,
                });
            }
            log::warn!("config hash differs from the checkpoint; resuming because of --force");
        }
        let setup = cfg.setup()?;
        if GridMeta::from(&setup.grid) != ckpt.grid {
            return Err(CliError::Validation(format!(
                "checkpoint grid {:?} differs from the configured grid",
                ckpt.grid
            )));
        }
        prepare_dir(&dir)?;
        resume_in(&dir, &ckpt, &hash, &setup, stop_after, cfg)
    });
    record_failure(&dir, result)
}

fn resume_in(
    dir: &Path,
    ckpt: &Checkpoint,
    hash: &str,
    setup: &Setup,
    stop_after: Option<Stage>,
    cfg: &RunConfig,
) -> CliResult<RunOutcome> {
    let started = Instant::now();
    let stage = ckpt.stage().expect("stage checked on read");
    let mut sink = ArtifactSink {
        dir,
        table: PathTable::truncate_to(&dir.join(PATH_FILE), ckpt.record_index + 1)?,
        setup,
        hash,
        checkpoint_every: cfg.output.checkpoint_every,
        profiles: cfg.output.profiles,
    };
    let plan = plan_with(setup, stop_after);
    let path = resume_homotopy(ckpt.cursor(), stage, problem(setup), &plan, &mut sink)?;
    let mut timings = BTreeMap::new();
    timings.insert("homotopy".into(), started.elapsed().as_secs_f64());
    finish(dir, setup, hash, path, timings, started)
}

/// Parses `NAME=v1,v2,...`.
pub fn parse_sweep(spec: &str) -> CliResult<(String, Vec<f64>)> {
    let bad = || CliError::Validation(format!("sweep `{spec}` must look like D=1,2,4"));
    let (name, values) = spec.split_once('=').ok_or_else(bad)?;
    let values: Vec<f64> = values
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    if name.is_empty() || values.is_empty() {
        return Err(bad());
    }
    Ok((name.trim().to_owned(), values))
}

/// Runs one configuration per value concurrently, each in
/// `<output.dir>/<name>_<value>`.
pub fn sweep(
    cfg: &RunConfig,
    name: &str,
    values: &[f64],
    stop_after: Option<Stage>,
) -> CliResult<Vec<(PathBuf, CliResult<RunOutcome>)>> {
    let mut configs = Vec::with_capacity(values.len());
    for &v in values {
        let mut c = cfg.clone();
        c.set_parameter(name, v)?;
        c.output.dir = cfg.output.dir.join(format!("{name}_{v}"));
        configs.push(c);
    }
    Ok(std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || (c.output.dir.clone(), run(c, stop_after))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    }))
}

/// Writes the slice CSV of a checkpoint.
pub fn emit_profile(checkpoint: &Path, out: &Path) -> CliResult<()> {
    let ckpt = Checkpoint::read(checkpoint)?;
    let grid = ckpt.grid.grid()?;
    let text = profile_slices(&ckpt.state(), &grid);
    fs::write(out, text).map_err(|e| CliError::io(out, e))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanResult {
    pub epsilon: f64,
    pub min_abs: f64,
    pub argmin: f64,
    pub zero_free: bool,
}

/// One `symbol_scan_eps_<ε>.csv` per configured `ε` plus `symbol_scan.json`.
pub fn symbol_scan(cfg: &RunConfig) -> CliResult<Vec<ScanResult>> {
    let setup = cfg.setup()?;
    let s = &cfg.symbol_scan;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut results = Vec::new();
    for &eps in &s.epsilons {
        let scan = scan_symbol_zero_free(&setup.params, eps, s.c0, s.c1, s.xi_max, s.n)?;
        let mut text = String::from("xi,re_F,im_F,abs_F\n");
        for (xi, f) in symbol_samples(&setup.params, eps, s.c0, s.c1, s.xi_max, s.n) {
            text.push_str(&format!(
                "{},{},{},{}\n",
                fmt_float(xi),
                fmt_float(f.re),
                fmt_float(f.im),
                fmt_float(f.norm())
            ));
        }
        let path = dir.join(format!("symbol_scan_eps_{eps:.6}.csv"));
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        results.push(ScanResult {
            epsilon: eps,
            min_abs: scan.min_abs,
            argmin: scan.argmin,
            zero_free: scan.zero_free(),
        });
    }
    let path = dir.join("symbol_scan.json");
    let text = serde_json::to_string_pretty(&results).expect("scan serialises");
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(results)
}

/// Shooting only; writes `oned.csv` sampled on the configured `x` nodes with
/// the phase point at `x = 0`.
pub fn oned(cfg: &RunConfig) -> CliResult<OneDimWave> {
    let setup = cfg.setup()?;
    let wave = solve_1d_ignition_shooting(setup.params.d, &setup.spec, cfg.shooting_tol)?;
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("oned.csv");
    fs::write(&path, oned_table(&wave, &setup.grid)).map_err(|e| CliError::io(&path, e))?;
    Ok(wave)
}

fn oned_table(wave: &OneDimWave, grid: &Grid) -> String {
    let mid = wave.position_of(0.5 * (1.0 + wave.theta));
    let mut text = String::from("x,psi\n");
    for i in 0..grid.nx {
        let x = grid.x(i);
        text.push_str(&format!("{},{}\n", fmt_float(x), fmt_float(wave.eval(x + mid))));
    }
    text
}
