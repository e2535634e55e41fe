//! Centred finite-difference check of the analytic Jacobian.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use wave_core::{jacobian_fd_error, Grid, HomotopyFamily, ModelParams, NonlinearitySpec, WaveState};

const STATES_PER_FAMILY: usize = 20;
const H: f64 = 1e-6;
const TOL: f64 = 1e-6;

fn random_state(rng: &mut StdRng, grid: &Grid, family: HomotopyFamily) -> WaveState {
    let psi = (0..grid.n_nodes()).map(|_| rng.gen_range(-0.1..1.1)).collect();
    let phi = family
        .is_exchange()
        .then(|| (0..grid.nx).map(|_| rng.gen_range(-0.1..1.1)).collect());
    WaveState {
        c: rng.gen_range(0.05..2.0),
        psi,
        phi,
        family,
    }
}

fn check_family(make: impl Fn(&mut StdRng) -> HomotopyFamily, seed: u64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let grid = Grid::new(-1.0, 1.0, 1.0, 21, 9).unwrap();
    let params = ModelParams::new(1.0, 4.0, 0.7, 1.0).unwrap();
    let spec = NonlinearitySpec::smooth_cubic(0.3).unwrap();
    for k in 0..STATES_PER_FAMILY {
        let family = make(&mut rng);
        let state = random_state(&mut rng, &grid, family);
        let n = grid.n_nodes() + state.phi.as_ref().map_or(0, Vec::len) + 1;
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (err, norm) = jacobian_fd_error(&state, &v, H, &params, &spec, &grid).unwrap();
        assert!(err <= TOL * (1.0 + norm), "state {k} ({family:?}): err {err:e}, |Jv| {norm:e}");
    }
}

#[test]
fn wentzell_jacobian_matches_finite_differences() {
    check_family(|rng| HomotopyFamily::Wentzell { s: rng.gen_range(0.0..=1.0) }, 11);
}

#[test]
fn exchange_jacobian_matches_finite_differences() {
    check_family(|rng| HomotopyFamily::Exchange { epsilon: rng.gen_range(0.02..=1.0) }, 12);
}
