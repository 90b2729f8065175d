//! Symmetric sparse matrices and a direct envelope Cholesky solver.
//!
//! Matrices store the upper triangle (diagonal included) in CSR form. The
//! factorization reorders with reverse Cuthill–McKee and factors the
//! resulting variable-band profile row by row.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Upper-triangular CSR storage of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricCsr {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SymmetricCsr {
    /// Sum entries `(i, j, v)`; `(j, i)` and `(i, j)` address the same entry.
    /// Duplicates are added in input order, so the result is reproducible.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut t: Vec<(usize, usize, f64)> = triplets
            .into_iter()
            .map(|(i, j, v)| {
                assert!(i < n && j < n, "entry ({i}, {j}) outside {n}x{n}");
                (i.min(j), i.max(j), v)
            })
            .collect();
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last = None;
        for (i, j, v) in t {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Upper-triangle entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = (i.min(j), i.max(j));
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                y[i] += v * x[j];
                if j != i {
                    y[j] += v * x[i];
                }
            }
        }
        y
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Infinity norm of the full symmetric matrix.
    pub fn norm_inf(&self) -> f64 {
        let mut s = vec![0.0; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                s[i] += v.abs();
                if j != i {
                    s[j] += v.abs();
                }
            }
        }
        s.into_iter().fold(0.0, f64::max)
    }

    /// Symmetric adjacency lists without the diagonal.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j != i {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        adj
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, mark: &mut [usize], stamp: usize) -> (usize, usize) {
    // Returns (eccentricity, a node of minimum degree in the last level).
    let mut queue = VecDeque::from([(start, 0)]);
    mark[start] = stamp;
    let mut depth = 0;
    let mut last = vec![start];
    while let Some((v, d)) = queue.pop_front() {
        if d > depth {
            depth = d;
            last.clear();
        }
        last.push(v);
        for &w in &adj[v] {
            if mark[w] != stamp {
                mark[w] = stamp;
                queue.push_back((w, d + 1));
            }
        }
    }
    let far = *last.iter().min_by_key(|&&v| (adj[v].len(), v)).unwrap();
    (depth, far)
}

/// Reverse Cuthill–McKee ordering: `perm[new] = old`.
pub fn rcm_ordering(a: &SymmetricCsr) -> Vec<usize> {
    let adj = a.adjacency();
    let n = a.dim();
    let mut placed = vec![false; n];
    let mut mark = vec![usize::MAX; n];
    let mut stamp = 0;
    let mut order = Vec::with_capacity(n);
    for seed in 0..n {
        if placed[seed] {
            continue;
        }
        // Pseudo-peripheral start node.
        let mut root = seed;
        let (mut ecc, mut far) = bfs_levels(&adj, root, &mut mark, stamp);
        stamp += 1;
        loop {
            let (e2, f2) = bfs_levels(&adj, far, &mut mark, stamp);
            stamp += 1;
            if e2 <= ecc {
                break;
            }
            root = far;
            ecc = e2;
            far = f2;
        }
        let begin = order.len();
        order.push(root);
        placed[root] = true;
        let mut head = begin;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !placed[w]).collect();
            next.sort_by_key(|&w| (adj[w].len(), w));
            next.dedup();
            for w in next {
                placed[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

/// Pivots below this fraction of the original diagonal entry are rejected.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// `A = L Lᵀ` in a permuted envelope layout.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    /// First stored column of each permuted row.
    first: Vec<usize>,
    /// Offset of row `i`'s slice `L[i, first[i]..=i]` in `values`.
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factor with RCM ordering. A pivot that is non-positive or below
    /// [`PIVOT_TOLERANCE`] relative to its diagonal fails with the row's
    /// original index.
    pub fn factor(a: &SymmetricCsr) -> Result<Self> {
        Self::factor_with(a, rcm_ordering(a))
    }

    pub fn factor_with(a: &SymmetricCsr, perm: Vec<usize>) -> Result<Self> {
        let n = a.dim();
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for (j, _) in a.row(i) {
                let (r, c) = (inv[i].max(inv[j]), inv[i].min(inv[j]));
                first[r] = first[r].min(c);
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i - first[i] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (r, c) = (inv[i].max(inv[j]), inv[i].min(inv[j]));
                values[start[r] + c - first[r]] = v;
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = values.split_at_mut(start[i]);
            let row = &mut rest[..i - fi + 1];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let lj = &done[start[j]..start[j] + j - fj + 1];
                let dot: f64 = row[lo - fi..j - fi].iter().zip(&lj[lo - fj..j - fj]).map(|(x, y)| x * y).sum();
                row[j - fi] = (row[j - fi] - dot) / lj[j - fj];
            }
            let diag = row[i - fi];
            let pivot = diag - row[..i - fi].iter().map(|x| x * x).sum::<f64>();
            if pivot.is_nan() || pivot <= PIVOT_TOLERANCE * diag.abs() || pivot <= 0.0 {
                return Err(Error::NonPositivePivot { dof: perm[i], pivot });
            }
            row[i - fi] = pivot.sqrt();
        }
        Ok(Self { perm, first, start, values })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let dot: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(l, v)| l * v).sum();
            y[i] = (y[i] - dot) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (l, v) in row[..i - fi].iter().zip(&mut y[fi..i]) {
                *v -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveInfo {
    /// `‖A x − b‖₂ / ‖b‖₂` (zero when `b = 0`).
    pub relative_residual: f64,
    pub envelope_size: usize,
    pub refinement_steps: usize,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn residual(a: &SymmetricCsr, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

/// Direct solve with up to two steps of iterative refinement.
pub fn solve_spd(a: &SymmetricCsr, b: &[f64]) -> Result<(Vec<f64>, SolveInfo)> {
    let chol = EnvelopeCholesky::factor(a)?;
    let mut x = chol.solve(b);
    let bn = norm2(b);
    let rel = |x: &[f64]| if bn == 0.0 { 0.0 } else { norm2(&residual(a, x, b)) / bn };
    let mut r = rel(&x);
    let mut steps = 0;
    while steps < 2 && r > 1e-14 {
        let d = chol.solve(&residual(a, &x, b));
        let cand: Vec<f64> = x.iter().zip(&d).map(|(u, v)| u + v).collect();
        let rc = rel(&cand);
        steps += 1;
        if rc >= r {
            break;
        }
        x = cand;
        r = rc;
    }
    Ok((x, SolveInfo { relative_residual: r, envelope_size: chol.envelope_size(), refinement_steps: steps }))
}
