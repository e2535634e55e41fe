//! Direct solver for bordered sparse systems.
//!
//! The sparse block is reordered by reverse Cuthill–McKee and factored as a
//! banded LU with partial pivoting. Trailing border rows/columns (see
//! [`SparseMatrix::border`]) are eliminated through a small dense Schur
//! complement. Because that block elimination can lose accuracy when the
//! sparse block is nearly singular (the translation mode of a travelling
//! front), every solve is finished with iterative refinement against the full
//! matrix.

// band arithmetic reads clearer with explicit row/column indices
#![allow(clippy::needless_range_loop)]

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::sparse::SparseMatrix;
use crate::{Error, Result};

/// Relative backward error accepted for a solve.
pub const SOLVE_TOLERANCE: f64 = 1e-12;
const MAX_REFINEMENTS: usize = 6;

/// Solves `J x = rhs` with a direct factorization.
pub fn linear_solve(j: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    DirectSolver::factor(j)?.solve(j, rhs)
}

/// `‖J x - b‖∞ / (‖J‖∞ ‖x‖∞ + ‖b‖∞)`.
pub fn backward_error(j: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let jx = j.mul_vec(x);
    let r = jx
        .iter()
        .zip(b)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = j.norm_inf() * max_abs(x) + max_abs(b);
    if scale == 0.0 {
        r
    } else {
        r / scale
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Factored bordered system, reusable for several right-hand sides.
pub struct DirectSolver {
    core: usize,
    border: usize,
    /// `perm[new] = old` for the sparse block.
    perm: Vec<usize>,
    lu: BandLu,
    /// `A⁻¹ B`, one column per border unknown, in original ordering.
    a_inv_b: Vec<Vec<f64>>,
    /// Border rows restricted to the sparse block.
    c_rows: Vec<Vec<(usize, f64)>>,
    schur: DenseLu,
}

impl DirectSolver {
    pub fn factor(j: &SparseMatrix) -> Result<Self> {
        if j.n_rows != j.n_cols {
            return Err(Error::LinearSolveFailed(format!(
                "matrix is {}x{}, not square",
                j.n_rows, j.n_cols
            )));
        }
        let n = j.n_rows;
        let border = j.border.min(n);
        let core = n - border;
        structural_check(j)?;

        let adjacency = core_adjacency(j, core);
        let perm = reverse_cuthill_mckee(&adjacency);
        let mut inv = vec![0usize; core];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }

        let (mut kl, mut ku) = (0usize, 0usize);
        for r in 0..core {
            for (c, _) in j.row(r).filter(|&(c, _)| c < core) {
                let (ri, ci) = (inv[r], inv[c]);
                if ri > ci {
                    kl = kl.max(ri - ci);
                } else {
                    ku = ku.max(ci - ri);
                }
            }
        }
        let mut lu = BandLu::zeros(core, kl, ku);
        for r in 0..core {
            for (c, v) in j.row(r).filter(|&(c, _)| c < core) {
                lu.add(inv[r], inv[c], v);
            }
        }
        lu.factor()?;

        let mut solver = Self {
            core,
            border,
            perm,
            lu,
            a_inv_b: Vec::with_capacity(border),
            c_rows: Vec::with_capacity(border),
            schur: DenseLu::empty(),
        };
        let mut b_cols = vec![vec![0.0; core]; border];
        for r in 0..core {
            for (c, v) in j.row(r).filter(|&(c, _)| c >= core) {
                b_cols[c - core][r] = v;
            }
        }
        for col in b_cols {
            let z = solver.solve_core(&col);
            solver.a_inv_b.push(z);
        }
        let mut d = vec![vec![0.0; border]; border];
        for t in 0..border {
            let row: Vec<(usize, f64)> = j.row(core + t).collect();
            for &(c, v) in &row {
                if c >= core {
                    d[t][c - core] = v;
                }
            }
            solver
                .c_rows
                .push(row.into_iter().filter(|&(c, _)| c < core).collect());
        }
        // S = D - C A⁻¹ B
        let mut s = d.clone();
        let mut scale = 0.0f64;
        for t in 0..border {
            for u in 0..border {
                let cz: f64 = solver.c_rows[t]
                    .iter()
                    .map(|&(c, v)| v * solver.a_inv_b[u][c])
                    .sum();
                let mag: f64 = solver.c_rows[t]
                    .iter()
                    .map(|&(c, v)| (v * solver.a_inv_b[u][c]).abs())
                    .sum();
                s[t][u] -= cz;
                scale = scale.max(mag + d[t][u].abs());
            }
        }
        solver.schur = DenseLu::factor(s, scale)?;
        Ok(solver)
    }

    fn solve_core(&self, f: &[f64]) -> Vec<f64> {
        let mut b: Vec<f64> = self.perm.iter().map(|&old| f[old]).collect();
        self.lu.solve(&mut b);
        let mut x = vec![0.0; self.core];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = b[new];
        }
        x
    }

    fn solve_once(&self, rhs: &[f64]) -> Vec<f64> {
        let x0 = self.solve_core(&rhs[..self.core]);
        let mut g: Vec<f64> = rhs[self.core..].to_vec();
        for (t, gt) in g.iter_mut().enumerate() {
            *gt -= self.c_rows[t].iter().map(|&(c, v)| v * x0[c]).sum::<f64>();
        }
        let y = self.schur.solve(&g);
        let mut x = x0;
        for (u, yu) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&self.a_inv_b[u]) {
                *xi -= zi * yu;
            }
        }
        x.extend_from_slice(&y);
        x
    }

    /// Solves with iterative refinement against `j`, which must be the
    /// matrix this solver was built from.
    pub fn solve(&self, j: &SparseMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.core + self.border);
        let mut x = self.solve_once(rhs);
        let mut err = backward_error(j, &x, rhs);
        for _ in 0..MAX_REFINEMENTS {
            if err <= 1e-3 * SOLVE_TOLERANCE || !err.is_finite() {
                break;
            }
            let jx = j.mul_vec(&x);
            let r: Vec<f64> = rhs.iter().zip(&jx).map(|(b, a)| b - a).collect();
            let dx = self.solve_once(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let cand_err = backward_error(j, &candidate, rhs);
            if !(cand_err < err) {
                break;
            }
            x = candidate;
            err = cand_err;
        }
        if !(err <= SOLVE_TOLERANCE) {
            return Err(Error::LinearSolveFailed(format!(
                "backward error {err:e} after refinement (numerically singular)"
            )));
        }
        Ok(x)
    }
}

fn structural_check(j: &SparseMatrix) -> Result<()> {
    let mut col_seen = vec![false; j.n_cols];
    for r in 0..j.n_rows {
        let mut any = false;
        for (c, v) in j.row(r) {
            if v != 0.0 {
                any = true;
                col_seen[c] = true;
            }
        }
        if !any {
            return Err(Error::LinearSolveFailed(format!(
                "row {r} is empty (structurally singular)"
            )));
        }
    }
    if let Some(c) = col_seen.iter().position(|s| !s) {
        return Err(Error::LinearSolveFailed(format!(
            "column {c} is empty (structurally singular)"
        )));
    }
    Ok(())
}

fn core_adjacency(j: &SparseMatrix, core: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); core];
    for r in 0..core {
        for (c, _) in j.row(r) {
            if c < core && c != r {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Reverse Cuthill–McKee ordering; returns `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree = |v: usize| adj[v].len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut level = vec![usize::MAX; n];

    while order.len() < n {
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| degree(v))
            .unwrap();
        let start = pseudo_peripheral(adj, seed, &mut level);

        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        let mut nbrs = Vec::new();
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (degree(w), w));
            for &w in &nbrs {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// George–Liu search for a node of (nearly) maximal eccentricity.
fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize, level: &mut [usize]) -> usize {
    let mut start = seed;
    let mut ecc = bfs_levels(adj, start, level).0;
    loop {
        let (_, last) = bfs_levels(adj, start, level);
        let candidate = last
            .into_iter()
            .min_by_key(|&v| (adj[v].len(), v))
            .unwrap_or(start);
        let (cand_ecc, _) = bfs_levels(adj, candidate, level);
        if cand_ecc > ecc {
            ecc = cand_ecc;
            start = candidate;
        } else {
            return start;
        }
    }
}

/// Returns the eccentricity of `root` and the nodes in its last level.
fn bfs_levels(adj: &[Vec<usize>], root: usize, level: &mut [usize]) -> (usize, Vec<usize>) {
    let mut touched = vec![root];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut depth = 0;
    while let Some(v) = queue.pop_front() {
        depth = depth.max(level[v]);
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                touched.push(w);
                queue.push_back(w);
            }
        }
    }
    let last = touched
        .iter()
        .copied()
        .filter(|&v| level[v] == depth)
        .collect();
    for v in touched {
        level[v] = usize::MAX;
    }
    (depth, last)
}

/// Banded LU with partial pivoting, LAPACK `gbtrf` storage: column `j` holds
/// rows `j - kl - ku ..= j + kl` (the extra `kl` super-diagonals take the
/// fill produced by row interchanges).
struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
            ipiv: vec![0; n],
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        self.kl + self.ku + i - j + j * self.ldab
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    fn factor(&mut self) -> Result<()> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let diag = self.idx(j, j);
            let mut p = 0;
            let mut best = self.ab[diag].abs();
            for r in 1..=km {
                let v = self.ab[diag + r].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::LinearSolveFailed(format!(
                    "zero pivot in column {j} (singular matrix)"
                )));
            }
            self.ipiv[j] = j + p;
            ju = ju.max((j + ku + p).min(n - 1));
            if p != 0 {
                for c in j..=ju {
                    let (a, b) = (self.idx(j, c), self.idx(j + p, c));
                    self.ab.swap(a, b);
                }
            }
            if km == 0 {
                continue;
            }
            let piv = self.ab[diag];
            for v in &mut self.ab[diag + 1..=diag + km] {
                *v /= piv;
            }
            let (head, tail) = self.ab.split_at_mut((j + 1) * ldab);
            let l = &head[diag + 1..=diag + km];
            for c in j + 1..=ju {
                let base = kl + ku + j - c + (c - j - 1) * ldab;
                let a = tail[base];
                if a != 0.0 {
                    for (dst, lv) in tail[base + 1..=base + km].iter_mut().zip(l) {
                        *dst -= lv * a;
                    }
                }
            }
        }
        Ok(())
    }

    fn solve(&self, b: &mut [f64]) {
        let (n, kl, kv) = (self.n, self.kl, self.kl + self.ku);
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let d = self.idx(j, j);
                for r in 1..=km {
                    b[j + r] -= self.ab[d + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let d = self.idx(j, j);
            b[j] /= self.ab[d];
            let bj = b[j];
            if bj != 0.0 {
                let i0 = j.saturating_sub(kv);
                for i in i0..j {
                    b[i] -= self.ab[self.idx(i, j)] * bj;
                }
            }
        }
    }
}

/// Dense LU with partial pivoting for the small Schur complement.
struct DenseLu {
    a: Vec<Vec<f64>>,
    piv: Vec<usize>,
}

impl DenseLu {
    fn empty() -> Self {
        Self {
            a: Vec::new(),
            piv: Vec::new(),
        }
    }

    fn factor(mut a: Vec<Vec<f64>>, scale: f64) -> Result<Self> {
        let n = a.len();
        let mut piv: Vec<usize> = (0..n).collect();
        let tiny = 1e-14 * scale;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| a[x][k].abs().total_cmp(&a[y][k].abs()))
                .unwrap();
            if !(a[p][k].abs() > tiny) {
                return Err(Error::LinearSolveFailed(format!(
                    "bordered Schur complement is singular (pivot {:e})",
                    a[p][k]
                )));
            }
            a.swap(k, p);
            piv.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                a[i][k] = f;
                for c in k + 1..n {
                    a[i][c] -= f * a[k][c];
                }
            }
        }
        Ok(Self { a, piv })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.a.len();
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.a[i][k] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                x[i] -= self.a[i][k] * x[k];
            }
            x[i] /= self.a[i][i];
        }
        x
    }
}
