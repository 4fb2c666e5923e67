//! Sparse matrices, an envelope LDLᵀ factorization and symmetric pencil
//! eigensolvers.
//!
//! Everything here is deterministic: triplets are merged in sorted order,
//! the fill-reducing ordering breaks ties by index, and parallel column
//! solves collect in input order.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < n_rows && c < n_cols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                if a[(i, j)] != 0.0 {
                    t.push((i, j, a[(i, j)]));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), t)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_rows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// `a * self + b * other`.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        let t = self
            .triplets()
            .map(|(i, j, v)| (i, j, a * v))
            .chain(other.triplets().map(|(i, j, v)| (i, j, b * v)))
            .collect();
        CsrMatrix::from_triplets(self.n_rows, self.n_cols, t)
    }

    pub fn scaled(&self, a: f64) -> CsrMatrix {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let t = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        CsrMatrix::from_triplets(self.n_cols, self.n_rows, t)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n_rows, self.n_cols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] += v;
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Reverse Cuthill-McKee ordering of the symmetric pattern of `a`.
/// Indices in `last` (dense rows) are excluded from the graph search and
/// appended at the end in the given order. Returns `perm` with
/// `perm[new] = old`.
pub fn rcm_ordering(a: &CsrMatrix, last: &[usize]) -> Vec<usize> {
    let n = a.n_rows();
    let mut skip = vec![false; n];
    for &d in last {
        skip[d] = true;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in a.triplets() {
        if i != j && !skip[i] && !skip[j] {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let bfs_levels = |start: usize, mark: &[bool]| -> Vec<Vec<usize>> {
        let mut seen = mark.to_vec();
        seen[start] = true;
        let mut levels = vec![vec![start]];
        loop {
            let mut next = Vec::new();
            for &v in levels.last().unwrap() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            levels.push(next);
        }
        levels
    };

    let mut placed = skip.clone();
    let mut order = Vec::with_capacity(n);
    loop {
        // lowest-degree unplaced node seeds the next component
        let seed = (0..n).filter(|&i| !placed[i]).min_by_key(|&i| (degree[i], i));
        let Some(mut start) = seed else { break };
        // pseudo-peripheral search
        let mut depth = bfs_levels(start, &placed).len();
        for _ in 0..8 {
            let levels = bfs_levels(start, &placed);
            let cand = *levels.last().unwrap().iter().min_by_key(|&&v| (degree[v], v)).unwrap();
            let cand_depth = bfs_levels(cand, &placed).len();
            if cand_depth > depth {
                depth = cand_depth;
                start = cand;
            } else {
                break;
            }
        }
        placed[start] = true;
        let mut head = order.len();
        order.push(start);
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !placed[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                placed[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order.extend_from_slice(last);
    order
}

/// A zero or tiny pivot met during factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotFailure {
    /// Row in the original numbering.
    pub row: usize,
    pub pivot: f64,
    pub scale: f64,
}

/// Relative pivot threshold below which a matrix is reported singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// `P A Pᵀ = L D Lᵀ` stored by rows over the envelope of the permuted
/// matrix. Works for symmetric indefinite matrices whose leading minors do
/// not vanish; a vanishing pivot is reported as [`PivotFailure`].
#[derive(Debug, Clone)]
pub struct SkylineLdl {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl SkylineLdl {
    /// Factors the symmetric matrix `a`; only its lower triangle is read
    /// (after permutation).
    pub fn factor(a: &CsrMatrix, dense_last: &[usize]) -> std::result::Result<Self, PivotFailure> {
        let n = a.n_rows();
        assert_eq!(n, a.n_cols());
        let perm = rcm_ordering(a, dense_last);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in a.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            let (r, c) = if pi >= pj { (pi, pj) } else { (pj, pi) };
            first[r] = first[r].min(c);
        }
        let mut row_start = vec![0usize; n + 1];
        for i in 0..n {
            row_start[i + 1] = row_start[i] + (i - first[i]);
        }
        let mut lower = vec![0.0; row_start[n]];
        let mut diag = vec![0.0; n];
        for (i, j, v) in a.triplets() {
            let (pi, pj) = (inv[i], inv[j]);
            if pi == pj {
                diag[pi] += v;
            } else if pi > pj {
                lower[row_start[pi] + pj - first[pi]] += v;
            }
        }
        let scale = diag.iter().fold(0.0f64, |m, d| m.max(d.abs())).max(f64::MIN_POSITIVE);

        for i in 0..n {
            let fi = first[i];
            let (done, rest) = lower.split_at_mut(row_start[i]);
            let row_i = &mut rest[..i - fi];
            // row_i holds w_j = L_ij D_j while it is being formed
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let row_j = &done[row_start[j]..row_start[j] + (j - fj)];
                let mut s = row_i[j - fi];
                for k in k0..j {
                    s -= row_i[k - fi] * row_j[k - fj];
                }
                row_i[j - fi] = s;
            }
            let mut d = diag[i];
            for j in fi..i {
                let w = row_i[j - fi];
                let l = w / diag[j];
                d -= w * l;
                row_i[j - fi] = l;
            }
            if !(d.abs() > PIVOT_TOLERANCE * scale) {
                return Err(PivotFailure {
                    row: perm[i],
                    pivot: d,
                    scale,
                });
            }
            diag[i] = d;
        }
        Ok(SkylineLdl {
            n,
            perm,
            first,
            row_start,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of the envelope.
    pub fn profile(&self) -> usize {
        self.lower.len()
    }

    /// Number of negative pivots, i.e. of negative eigenvalues of `A`.
    pub fn negative_pivots(&self) -> usize {
        self.diag.iter().filter(|d| **d < 0.0).count()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.lower[self.row_start[i]..self.row_start[i + 1]];
            let s: f64 = row.iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        y.iter_mut().zip(&self.diag).for_each(|(v, d)| *v /= d);
        for i in (0..n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            let row = &self.lower[self.row_start[i]..self.row_start[i + 1]];
            for (l, v) in row.iter().zip(&mut y[fi..i]) {
                *v -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Solve followed by one step of iterative refinement against `a`.
    pub fn solve_refined(&self, a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve(b);
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = self.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        x
    }
}

/// Conjugate gradients for a small SPD system; used for boundary mass
/// matrices.
pub fn conjugate_gradient(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = tol * tol * rr.max(f64::MIN_POSITIVE);
    for _ in 0..max_iter {
        if rr <= target {
            return Ok(x);
        }
        let ap = a.mul_vec(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    if rr <= target * 1e4 {
        return Ok(x);
    }
    Err(Error::Solver(format!(
        "conjugate gradients stalled at residual {:.3e}",
        rr.sqrt()
    )))
}

/// Eigenpairs of the pencil `K v = λ M v`.
#[derive(Debug, Clone)]
pub struct PencilEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Backward errors `|Kv - λMv| / ((|K| + |λ||M|) |v|)`.
    pub residuals: Vec<f64>,
}

/// Options for [`smallest_eigenpairs`].
#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Normalize vectors in the `M` inner product (else Euclidean).
    pub mass_normalize: bool,
    /// Problems up to this size use a dense decomposition.
    pub dense_limit: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            mass_normalize: true,
            dense_limit: 700,
            tolerance: 1e-10,
            max_iterations: 400,
        }
    }
}

/// Backward error of an approximate eigenpair.
pub fn backward_error(k: &CsrMatrix, m: &CsrMatrix, lambda: f64, v: &[f64]) -> f64 {
    let kv = k.mul_vec(v);
    let mv = m.mul_vec(v);
    let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - lambda * b).collect();
    let denom = (k.norm_inf() + lambda.abs() * m.norm_inf()) * norm(v);
    if denom == 0.0 {
        return 0.0;
    }
    norm(&r) / denom
}

/// A negative shift below the spectrum of `K v = λ M v` for `K` positive
/// semidefinite, `M` positive semidefinite, such that `K - σM` is definite
/// whenever `ker K ∩ ker M = {0}`.
pub fn default_shift(k: &CsrMatrix, m: &CsrMatrix) -> f64 {
    let kd = k.diagonal().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let md = m.diagonal().iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if md == 0.0 || kd == 0.0 {
        return -1.0;
    }
    -(1e-3 * kd / md).clamp(1e-6, 1e6)
}

/// The `count` smallest eigenpairs of the symmetric pencil `(K, M)` with
/// `K`, `M` positive semidefinite and `K - σM` positive definite for the
/// chosen shift `σ < 0`. Directions in the kernel of `M` (infinite
/// eigenvalues) are never returned.
///
/// Small problems are decomposed densely; larger ones use block inverse
/// iteration on `(K - σM)⁻¹ M` with Rayleigh-Ritz on the pencil. `dense`
/// lists rows with dense coupling (tied DOFs) which the ordering places last.
pub fn smallest_eigenpairs(
    k: &CsrMatrix,
    m: &CsrMatrix,
    count: usize,
    dense: &[usize],
    opts: EigenOptions,
) -> Result<PencilEigen> {
    let n = k.n_rows();
    if count == 0 {
        return Ok(PencilEigen {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
        });
    }
    if count > n {
        return Err(Error::Parameter(format!(
            "requested {count} eigenpairs of a {n}-dimensional problem"
        )));
    }
    let sigma = default_shift(k, m);
    let (values, mut vectors) = if n <= opts.dense_limit {
        dense_pencil(k, m, count, sigma)?
    } else {
        subspace_iteration(k, m, count, sigma, dense, opts)?
    };
    for v in vectors.iter_mut() {
        let scale = if opts.mass_normalize {
            dot(v, &m.mul_vec(v)).sqrt()
        } else {
            norm(v)
        };
        let pivot = v.iter().fold(0.0f64, |a, &b| if b.abs() > a.abs() { b } else { a });
        let s = if pivot < 0.0 { -1.0 / scale } else { 1.0 / scale };
        v.iter_mut().for_each(|x| *x *= s);
    }
    let residuals = values
        .iter()
        .zip(&vectors)
        .map(|(&l, v)| backward_error(k, m, l, v))
        .collect();
    Ok(PencilEigen {
        values,
        vectors,
        residuals,
    })
}

/// Eigenpairs from the symmetric problem `M x = μ (K - σM) x`, `λ = σ + 1/μ`.
fn ritz_from_dense(a: &DMatrix<f64>, b: &DMatrix<f64>, sigma: f64) -> Result<Vec<(f64, DVector<f64>)>> {
    let b = (b + b.transpose()) * 0.5;
    let a = (a + a.transpose()) * 0.5;
    let chol = b
        .cholesky()
        .ok_or_else(|| Error::Solver("shifted pencil is not positive definite".into()))?;
    let l = chol.l();
    let linv_a = l
        .solve_lower_triangular(&a)
        .ok_or_else(|| Error::Solver("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&linv_a.transpose())
        .ok_or_else(|| Error::Solver("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mu_max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::new();
    for (idx, &mu) in eig.eigenvalues.iter().enumerate() {
        if mu > 1e-13 * mu_max {
            let y = eig.eigenvectors.column(idx).into_owned();
            let x = l
                .transpose()
                .solve_upper_triangular(&y)
                .ok_or_else(|| Error::Solver("singular Cholesky factor".into()))?;
            pairs.push((sigma + 1.0 / mu, x));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs)
}

/// Rayleigh-Ritz on a possibly rank-deficient block: directions where the
/// projected `B` is numerically zero are dropped.
fn ritz_from_projection(a: &DMatrix<f64>, b: &DMatrix<f64>, sigma: f64) -> Result<Vec<(f64, DVector<f64>)>> {
    let n = b.nrows();
    let eig_b = ((b + b.transpose()) * 0.5).symmetric_eigen();
    let theta_max = eig_b.eigenvalues.iter().fold(0.0f64, |m, v| m.max(*v));
    if !(theta_max > 0.0) {
        return Err(Error::Solver("shifted pencil is not positive definite".into()));
    }
    let keep: Vec<usize> = (0..n).filter(|&i| eig_b.eigenvalues[i] > 1e-12 * theta_max).collect();
    let mut t = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let col = eig_b.eigenvectors.column(i) / eig_b.eigenvalues[i].sqrt();
        t.set_column(c, &col);
    }
    let c = t.transpose() * a * &t;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mu_max = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut pairs: Vec<(f64, DVector<f64>)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, mu)| **mu > 1e-13 * mu_max)
        .map(|(idx, &mu)| (sigma + 1.0 / mu, &t * eig.eigenvectors.column(idx)))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    Ok(pairs)
}

fn dense_pencil(k: &CsrMatrix, m: &CsrMatrix, count: usize, sigma: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let kd = k.to_dense();
    let md = m.to_dense();
    let b = &kd - &md * sigma;
    let pairs = ritz_from_dense(&md, &b, sigma)?;
    if pairs.len() < count {
        return Err(Error::Solver(format!(
            "only {} finite eigenvalues exist, {count} requested",
            pairs.len()
        )));
    }
    Ok(pairs
        .into_iter()
        .take(count)
        .map(|(l, v)| (l, v.iter().copied().collect()))
        .unzip())
}

fn subspace_iteration(
    k: &CsrMatrix,
    m: &CsrMatrix,
    count: usize,
    sigma: f64,
    dense: &[usize],
    opts: EigenOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = k.n_rows();
    let shifted = k.linear_combination(1.0, m, -sigma);
    let ldl = SkylineLdl::factor(&shifted, dense)
        .map_err(|f| Error::Solver(format!("shifted pencil factorization failed at row {}", f.row)))?;
    if ldl.negative_pivots() > 0 {
        return Err(Error::Solver("shifted pencil is not positive definite".into()));
    }
    let block = (2 * count).max(count + 12).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut basis: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let k_norm = k.norm_inf();
    let m_norm = m.norm_inf();
    let mut last_values = vec![f64::NAN; count];
    for _ in 0..opts.max_iterations {
        let m_basis: Vec<Vec<f64>> = basis.par_iter().map(|v| m.mul_vec(v)).collect();
        let next: Vec<Vec<f64>> = m_basis.par_iter().map(|mv| ldl.solve(mv)).collect();
        let p = next.len();
        let mut a_r = DMatrix::zeros(p, p);
        let mut b_r = DMatrix::zeros(p, p);
        let m_next: Vec<Vec<f64>> = next.par_iter().map(|w| m.mul_vec(w)).collect();
        for i in 0..p {
            for j in 0..=i {
                let a = dot(&next[i], &m_next[j]);
                // (K - σM) W = M V up to solve error
                let b = 0.5 * (dot(&next[i], &m_basis[j]) + dot(&next[j], &m_basis[i]));
                a_r[(i, j)] = a;
                a_r[(j, i)] = a;
                b_r[(i, j)] = b;
                b_r[(j, i)] = b;
            }
        }
        let pairs = ritz_from_projection(&a_r, &b_r, sigma)?;
        if pairs.len() < count {
            return Err(Error::Solver(format!(
                "only {} finite eigenvalues found, {count} requested",
                pairs.len()
            )));
        }
        basis = pairs
            .iter()
            .map(|(_, c)| {
                let mut v = vec![0.0; n];
                for (w, &ci) in next.iter().zip(c.iter()) {
                    v.iter_mut().zip(w).for_each(|(vi, wi)| *vi += ci * wi);
                }
                v
            })
            .collect();
        // refill directions lost to the M-kernel with fresh random vectors
        while basis.len() < block {
            basis.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        }
        let values: Vec<f64> = pairs.iter().take(count).map(|p| p.0).collect();
        let worst = values
            .par_iter()
            .zip(basis.par_iter())
            .map(|(&l, v)| {
                let kv = k.mul_vec(v);
                let mv = m.mul_vec(v);
                let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - l * b).collect();
                norm(&r) / ((k_norm + l.abs() * m_norm) * norm(v))
            })
            .reduce(|| 0.0, f64::max);
        if worst <= opts.tolerance {
            return Ok((values, basis.into_iter().take(count).collect()));
        }
        last_values = values;
    }
    Err(Error::Solver(format!(
        "eigensolver did not converge in {} iterations (last values {:?})",
        opts.max_iterations, last_values
    )))
}
