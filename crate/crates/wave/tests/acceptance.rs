//! Acceptance criteria, one line each, at the default parameters
//! (d = 1, D = 4, μ = 1, L = 1, smooth cubic with θ = 0.3) unless stated.
//!
//! Runs as a plain binary so that every criterion is attempted and reported
//! even when an earlier one fails; the exit status is nonzero on any failure.

use std::process::ExitCode;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use wave::config::{RunConfig, Setup, StageConfig};
use wave::driver;
use wave::output::{read_path_table, PATH_FILE};
use wave_core::analysis::{bessel_k0_integral, scan_symbol_zero_free};
use wave_core::continuation::{
    continue_wentzell, handoff_to_system, run_homotopy, ContinuationRecord, Cursor, Problem, Stage,
};
use wave_core::diagnostics::{dispersion_root, translation_collapse, DispersionQuery};
use wave_core::{
    c_max, jacobian_fd_error, newton_solve, solve_1d_ignition_shooting, Grid, HomotopyFamily,
    ModelParams, NonlinearitySpec, WaveState,
};

type Outcome = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn problem(s: &Setup) -> Problem<'_> {
    Problem {
        params: &s.params,
        spec: &s.spec,
        grid: &s.grid,
        newton: &s.newton,
        opts: &s.opts,
    }
}

fn setup_on(x_left: f64, x_right: f64, nx: usize, ny: usize) -> Setup {
    let mut cfg = RunConfig::default();
    cfg.grid.x_left = x_left;
    cfg.grid.x_right = x_right;
    cfg.grid.nx = nx;
    cfg.grid.ny = ny;
    cfg.setup().expect("valid setup")
}

/// Converged `Wentzell(0)` state from the one-dimensional front shifted by
/// `shift`.
fn strip_start(s: &Setup, shift: f64) -> Result<WaveState, String> {
    let wave = solve_1d_ignition_shooting(s.params.d, &s.spec, 1e-12).map_err(err)?;
    let init = wave.embed(&s.grid, shift);
    Ok(newton_solve(&init, &s.params, &s.spec, &s.grid, &s.newton).map_err(err)?.state)
}

/// Records of the full path together with their states.
struct FullPath {
    records: Vec<(ContinuationRecord, WaveState)>,
}

impl FullPath {
    fn run(s: &Setup, shift: f64) -> Result<Self, String> {
        let start = strip_start(s, shift)?;
        let mut records = Vec::new();
        let mut sink = |r: &ContinuationRecord, c: &Cursor| {
            records.push((r.clone(), c.current.clone()));
            Ok(None)
        };
        run_homotopy(start, problem(s), &s.plan, &mut sink).map_err(err)?;
        Ok(Self { records })
    }

    fn last_of(&self, stage: Stage) -> &(ContinuationRecord, WaveState) {
        self.records.iter().rev().find(|(r, _)| r.stage == stage).expect("stage present")
    }
}

/// Prolongs `state` to the refined grid and corrects it there.
fn refine(state: &WaveState, s: &Setup, to: &Setup) -> Result<WaveState, String> {
    let init = state.resample(&s.grid, &to.grid).map_err(err)?;
    Ok(newton_solve(&init, &to.params, &to.spec, &to.grid, &to.newton).map_err(err)?.state)
}

fn c1_oned_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (theta, expected) in [(0.25, 1.5), (0.04, 4.8)] {
        let spec = NonlinearitySpec::piecewise_linear(theta).map_err(err)?;
        let c = solve_1d_ignition_shooting(1.0, &spec, 1e-10).map_err(err)?.c;
        worst = worst.max((c - expected).abs());
        detail.push(format!("theta={theta}: c={c:.9}"));
    }
    Ok((worst < 1e-6, format!("{}; max error {worst:.2e} (tol 1e-6)", detail.join(", "))))
}

fn c2_strip_at_zero(s: &Setup) -> Outcome {
    let c1d = solve_1d_ignition_shooting(s.params.d, &s.spec, 1e-12).map_err(err)?.c;
    let state = strip_start(s, 0.0)?;
    let rel = (state.c - c1d).abs() / c1d;
    let g = &s.grid;
    let spread = (0..g.ny)
        .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
        .map(|(i, j)| (state.psi[g.node(i, j)] - state.psi[g.node(i, 0)]).abs())
        .fold(0.0, f64::max);
    Ok((
        rel < 1e-3 && spread < 1e-8,
        format!("c={:.9} c_1d={c1d:.9} rel {rel:.2e} (tol 1e-3); y-spread {spread:.2e} (tol 1e-8)", state.c),
    ))
}

fn c3_speed_identity(s: &Setup, path: &FullPath) -> Outcome {
    let worst = path
        .records
        .iter()
        .map(|(r, _)| r.diagnostics.speed_identity_gap)
        .fold(0.0, f64::max);
    let (_, at_one) = path.last_of(Stage::A);
    let fine = setup_on(s.grid.x_left, s.grid.x_right, 2 * s.grid.nx - 1, 2 * s.grid.ny - 1);
    let refined = refine(at_one, s, &fine)?;
    let g_h = path.last_of(Stage::A).0.diagnostics.speed_identity_gap;
    let g_h2 = wave_core::diagnostics::run_all(&refined, &fine.params, &fine.spec, &fine.grid).speed_identity_gap;
    let order = (g_h / g_h2).log2();
    Ok((
        worst < 1e-2 && order >= 1.5,
        format!("max gap over {} records {worst:.2e} (tol 1e-2); s=1 gap {g_h:.3e} -> {g_h2:.3e}, order {order:.2} (>= 1.5)", path.records.len()),
    ))
}

fn c4_invariants(s: &Setup, path: &FullPath) -> Outcome {
    let cmax = c_max(&s.params, &s.spec);
    let bad: Vec<String> = path
        .records
        .iter()
        .filter(|(r, _)| !(r.diagnostics.invariants_ok(r.c) && r.c < cmax))
        .map(|(r, _)| format!("{}@{}", r.stage.as_str(), r.family.parameter()))
        .collect();
    let stages_seen = [Stage::A, Stage::B, Stage::C]
        .iter()
        .all(|st| path.records.iter().any(|(r, _)| r.stage == *st));
    Ok((
        bad.is_empty() && stages_seen,
        format!(
            "{} records A->B->C, c_max={cmax:.4}, failing records: {}",
            path.records.len(),
            if bad.is_empty() { "none".into() } else { bad.join(" ") }
        ),
    ))
}

fn c5_uniqueness(s: &Setup, path: &FullPath) -> Outcome {
    // same spacing hx = 0.1, different extents and initial translate
    let other = setup_on(-140.0, 110.0, 2501, s.grid.ny);
    let second = FullPath::run(&other, 3.0)?;
    let (ra, a) = path.last_of(Stage::C);
    let (rb, b) = second.last_of(Stage::C);
    let rel = (ra.c - rb.c).abs() / ra.c;
    let b_here = b.resample(&other.grid, &s.grid).map_err(err)?;
    let (shift, dist) = translation_collapse(a, &b_here, &s.grid).map_err(err)?;
    Ok((
        rel < 1e-6 && dist <= 1e-4,
        format!("c {:.10} vs {:.10}, rel {rel:.2e} (tol 1e-6); sup distance {dist:.2e} at shift {shift:.3} (tol 1e-4)", ra.c, rb.c),
    ))
}

fn c6_handoff(s: &Setup, path: &FullPath) -> Outcome {
    let (rw, w) = path.last_of(Stage::A);
    let top = s.grid.ny - 1;
    let mut gaps = Vec::new();
    let mut dcs = Vec::new();
    for eps in [0.05, 0.025] {
        let pred = handoff_to_system(w, &s.params, &s.grid, eps).map_err(err)?;
        let sol = newton_solve(&pred, &s.params, &s.spec, &s.grid, &s.newton).map_err(err)?.state;
        let phi = sol.phi.as_ref().expect("exchange state");
        let g = (0..s.grid.nx)
            .map(|i| (s.params.mu * phi[i] - sol.psi[s.grid.node(i, top)]).abs())
            .fold(0.0, f64::max);
        gaps.push(g);
        dcs.push(sol.c - rw.c);
    }
    let ratio = gaps[1] / gaps[0];
    let dc_ratio = dcs[1] / dcs[0];
    let inside = |r: f64| (0.35..=0.65).contains(&r);
    Ok((
        inside(ratio) && inside(dc_ratio),
        format!(
            "g(0.05)={:.3e} g(0.025)={:.3e} ratio {ratio:.3}; dc {:.3e} -> {:.3e} ratio {dc_ratio:.3} (both in [0.35, 0.65])",
            gaps[0], gaps[1], dcs[0], dcs[1]
        ),
    ))
}

fn c7_decay(s: &Setup, path: &FullPath) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for stage in [Stage::A, Stage::C] {
        let (r, _) = path.last_of(stage);
        let d = &r.diagnostics;
        let pass = d.right_decay_ok(0.1) == Some(true);
        ok &= pass;
        detail.push(format!(
            "{}@{}: fit {:.4} pred {:.4}",
            stage.as_str(),
            r.family.parameter(),
            d.gamma_fit,
            d.gamma_pred
        ));
    }
    let left = path.records.iter().all(|(r, _)| r.diagnostics.left_decay_ok);
    let c = path.last_of(Stage::A).0.c;
    let fprime1 = s.spec.slope_at_one();
    let root = |family| {
        dispersion_root(&DispersionQuery {
            c,
            params: s.params,
            family,
            fprime1,
        })
        .map(|r| r.gamma)
    };
    let w = root(HomotopyFamily::Wentzell { s: 1.0 }).map_err(err)?;
    let e = root(HomotopyFamily::Exchange { epsilon: 1e-15 }).map_err(err)?;
    let identity = (w - e).abs();
    ok &= left && identity <= 1e-12;
    Ok((
        ok,
        format!(
            "{} (10%); left decay at all records: {left}; |root(eps->0) - root(s=1)| = {identity:.1e} (tol 1e-12)",
            detail.join(", ")
        ),
    ))
}

fn c8_grid_convergence() -> Outcome {
    let coarse = setup_on(-130.0, 100.0, 1151, 11);
    let start = strip_start(&coarse, 0.0)?;
    let mut last = None;
    let mut sink = |_: &ContinuationRecord, c: &Cursor| {
        last = Some(c.current.clone());
        Ok(None)
    };
    continue_wentzell(Cursor::start(start, &coarse.opts), problem(&coarse), 1.0, &mut sink).map_err(err)?;
    let mut state = last.expect("records emitted");
    let mut speeds = vec![state.c];
    let mut prev = coarse;
    for _ in 0..2 {
        let g = &prev.grid;
        let next = setup_on(g.x_left, g.x_right, 2 * g.nx - 1, 2 * g.ny - 1);
        state = refine(&state, &prev, &next)?;
        speeds.push(state.c);
        prev = next;
    }
    let order = ((speeds[1] - speeds[0]) / (speeds[2] - speeds[1])).log2();
    Ok((
        (1.5..=2.5).contains(&order),
        format!("c(h, h/2, h/4) = {:.9}, {:.9}, {:.9}; order {order:.2} (in [1.5, 2.5])", speeds[0], speeds[1], speeds[2]),
    ))
}

fn c9_jacobian() -> Outcome {
    let mut rng = StdRng::seed_from_u64(2024);
    let grid = Grid::new(-1.0, 1.0, 1.0, 21, 9).map_err(err)?;
    let params = ModelParams::new(1.0, 4.0, 0.7, 1.0).map_err(err)?;
    let spec = NonlinearitySpec::smooth_cubic(0.3).map_err(err)?;
    let mut worst: f64 = 0.0;
    for k in 0..40 {
        let family = if k < 20 {
            HomotopyFamily::Wentzell { s: rng.gen_range(0.0..=1.0) }
        } else {
            HomotopyFamily::Exchange { epsilon: rng.gen_range(0.02..=1.0) }
        };
        let psi = (0..grid.n_nodes()).map(|_| rng.gen_range(-0.1..1.1)).collect();
        let phi = family
            .is_exchange()
            .then(|| (0..grid.nx).map(|_| rng.gen_range(-0.1..1.1)).collect::<Vec<f64>>());
        let n = grid.n_nodes() + phi.as_ref().map_or(0, Vec::len) + 1;
        let state = WaveState {
            c: rng.gen_range(0.05..2.0),
            psi,
            phi,
            family,
        };
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (e, norm) = jacobian_fd_error(&state, &v, 1e-6, &params, &spec, &grid).map_err(err)?;
        worst = worst.max(e / (1.0 + norm));
    }
    Ok((worst <= 1e-6, format!("20 states per family; worst |FD - Jv|/(1+|Jv|) = {worst:.2e} (tol 1e-6)")))
}

fn c10_analysis(s: &Setup) -> Outcome {
    let integral = bessel_k0_integral();
    let ie = (integral - std::f64::consts::PI).abs();
    let scan = scan_symbol_zero_free(&s.params, 0.0, 1.0, 0.0, 50.0, 10_000).map_err(err)?;
    Ok((
        ie < 1e-6 && scan.zero_free(),
        format!(
            "|int K0 - pi| = {ie:.1e} (tol 1e-6); min |F| over |xi| <= 50 = {:.4e} at xi = {:.3}",
            scan.min_abs, scan.argmin
        ),
    ))
}

fn c11_resume() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut cfg = RunConfig::default();
    cfg.output.dir = tmp.path().join("full");
    driver::run(&cfg, None).map_err(err)?;
    let full = read_path_table(&cfg.output.dir.join(PATH_FILE)).map_err(err)?;

    let mut cut = cfg.clone();
    cut.output.dir = tmp.path().join("cut");
    cut.continuation.stop_after = StageConfig::A;
    let first = driver::run(&cut, None).map_err(err)?;
    let ckpt = first
        .path
        .last()
        .and_then(|r| r.checkpoint_ref.clone())
        .ok_or("no checkpoint at the end of stage A")?;
    cut.continuation.stop_after = StageConfig::C;
    driver::resume(&cut.output.dir.join(ckpt), &cut, false, None).map_err(err)?;
    let resumed = read_path_table(&cut.output.dir.join(PATH_FILE)).map_err(err)?;

    let same_len = full.len() == resumed.len();
    let worst = full
        .iter()
        .zip(&resumed)
        .map(|(a, b)| if a.stage == b.stage { (a.c - b.c).abs() } else { f64::INFINITY })
        .fold(0.0, f64::max);
    Ok((
        same_len && worst <= 1e-12,
        format!("{} vs {} rows; max |dc| = {worst:.1e} (tol 1e-12)", full.len(), resumed.len()),
    ))
}

fn main() -> ExitCode {
    let s = RunConfig::default().setup().expect("default setup");
    let t = Instant::now();
    let path = FullPath::run(&s, 0.0);
    let with_path = |f: &dyn Fn(&FullPath) -> Outcome| match &path {
        Ok(p) => f(p),
        Err(e) => Err(format!("default path failed: {e}")),
    };
    println!("default path: {:.1}s", t.elapsed().as_secs_f64());

    let criteria: Vec<(u32, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, Box::new(c1_oned_closed_form)),
        (2, Box::new(|| c2_strip_at_zero(&s))),
        (3, Box::new(|| with_path(&|p| c3_speed_identity(&s, p)))),
        (4, Box::new(|| with_path(&|p| c4_invariants(&s, p)))),
        (5, Box::new(|| with_path(&|p| c5_uniqueness(&s, p)))),
        (6, Box::new(|| with_path(&|p| c6_handoff(&s, p)))),
        (7, Box::new(|| with_path(&|p| c7_decay(&s, p)))),
        (8, Box::new(c8_grid_convergence)),
        (9, Box::new(c9_jacobian)),
        (10, Box::new(|| c10_analysis(&s))),
        (11, Box::new(c11_resume)),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        let t = Instant::now();
        let (pass, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {n}: {} {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
