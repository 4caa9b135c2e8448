//! Sparse storage for assembled Jacobians and a banded LU factorization with
//! partial pivoting.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular at column {0}")]
    Singular(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from unsorted triplets; duplicates are summed in insertion order.
    pub fn from_triplets(n: usize, triplets: Vec<(usize, usize, f64)>) -> Self {
        // Bucket by row, then stable-sort each short row by column, so that
        // duplicates are summed in insertion order.
        let mut start = vec![0usize; n + 1];
        for &(r, _, _) in &triplets {
            start[r + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut bucket = vec![(0usize, 0.0f64); triplets.len()];
        for (r, c, v) in triplets {
            bucket[fill[r]] = (c, v);
            fill[r] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(bucket.len());
        let mut vals: Vec<f64> = Vec::with_capacity(bucket.len());
        for r in 0..n {
            let row = &mut bucket[start[r]..start[r + 1]];
            row.sort_by_key(|e| e.0);
            let mut last = None;
            for &(c, v) in row.iter() {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr[r + 1] = cols.len();
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b]
            .iter()
            .copied()
            .zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        let (mut kl, mut ku) = (0, 0);
        for i in 0..self.n {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Principal submatrix on `keep` (sorted indices).
    pub fn submatrix(&self, keep: &[usize]) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut trip = Vec::new();
        for (k, &i) in keep.iter().enumerate() {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    trip.push((k, map[j], v));
                }
            }
        }
        CsrMatrix::from_triplets(keep.len(), trip)
    }
}

/// Banded LU factors. Row `i` stores columns `i - kl ..= i + kl + ku`, which
/// leaves room for the fill produced by row interchanges.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinalgError> {
        let (kl, ku) = a.bandwidths();
        let n = a.n;
        let width = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
        };
        for i in 0..n {
            for (j, v) in a.row(i) {
                *lu.at_mut(i, j) = v;
            }
        }
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let k = self.idx(i, j);
        &mut self.data[k]
    }

    fn eliminate(&mut self) -> Result<(), LinalgError> {
        let n = self.n;
        for j in 0..n {
            let last_row = (j + self.kl).min(n - 1);
            let last_col = (j + self.kl + self.ku).min(n - 1);
            let mut p = j;
            let mut best = self.at(j, j).abs();
            for r in j + 1..=last_row {
                let v = self.at(r, j).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::Singular(j));
            }
            self.pivots[j] = p;
            if p != j {
                for c in j..=last_col {
                    let (a, b) = (self.idx(j, c), self.idx(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.at(j, j);
            for r in j + 1..=last_row {
                let f = self.at(r, j) / pivot;
                if f == 0.0 {
                    continue;
                }
                *self.at_mut(r, j) = f;
                let (rj, rr) = (self.idx(j, j), self.idx(r, j));
                for off in 1..=(last_col - j) {
                    self.data[rr + off] -= f * self.data[rj + off];
                }
            }
        }
        Ok(())
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), LinalgError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::Dimension {
                expected: n,
                got: b.len(),
            });
        }
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                for r in j + 1..=(j + self.kl).min(n - 1) {
                    b[r] -= self.at(r, j) * bj;
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for c in i + 1..=(i + self.kl + self.ku).min(n - 1) {
                s -= self.at(i, c) * b[c];
            }
            b[i] = s / self.at(i, i);
        }
        Ok(())
    }
}

/// Solves `A x = b` with a fresh factorization.
pub fn solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let lu = BandedLu::factor(a)?;
    let mut x = b.to_vec();
    lu.solve_in_place(&mut x)?;
    Ok(x)
}

/// Solves `A x = b` where the rows `dense_rows` may couple arbitrarily distant
/// unknowns. Those rows are split off as a low-rank correction so the banded
/// factorization only sees the narrow part:
/// `A = A₀ + Σ_c e_c w_cᵀ`, solved by the Woodbury identity.
pub fn solve_with_dense_rows(
    a: &CsrMatrix,
    b: &[f64],
    dense_rows: &[usize],
) -> Result<Vec<f64>, LinalgError> {
    if dense_rows.is_empty() {
        return solve(a, b);
    }
    let n = a.n;
    if b.len() != n {
        return Err(LinalgError::Dimension {
            expected: n,
            got: b.len(),
        });
    }
    let mut is_dense = vec![false; n];
    for &c in dense_rows {
        is_dense[c] = true;
    }
    let mut trip = Vec::with_capacity(a.nnz());
    let mut corrections: Vec<Vec<(usize, f64)>> = Vec::with_capacity(dense_rows.len());
    for i in 0..n {
        if is_dense[i] {
            continue;
        }
        trip.extend(a.row(i).map(|(j, v)| (i, j, v)));
    }
    for &c in dense_rows {
        let diag = a.get(c, c);
        let d = if diag != 0.0 { diag } else { 1.0 };
        trip.push((c, c, d));
        corrections.push(
            a.row(c)
                .map(|(j, v)| (j, if j == c { v - d } else { v }))
                .collect(),
        );
    }
    let a0 = CsrMatrix::from_triplets(n, trip);
    let lu = BandedLu::factor(&a0)?;
    let mut y = b.to_vec();
    lu.solve_in_place(&mut y)?;
    let m = dense_rows.len();
    let mut z = Vec::with_capacity(m);
    for &c in dense_rows {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        lu.solve_in_place(&mut e)?;
        z.push(e);
    }
    let dot = |w: &[(usize, f64)], v: &[f64]| w.iter().map(|&(j, x)| x * v[j]).sum::<f64>();
    // Capacitance matrix I + Vᵀ Z and right side Vᵀ y.
    let mut cap = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for r in 0..m {
        for c in 0..m {
            cap[r * m + c] = dot(&corrections[r], &z[c]) + if r == c { 1.0 } else { 0.0 };
        }
        rhs[r] = dot(&corrections[r], &y);
    }
    let coef = dense_solve(m, &mut cap, &mut rhs)?;
    for (c, zc) in z.iter().enumerate() {
        for (yi, zi) in y.iter_mut().zip(zc) {
            *yi -= coef[c] * zi;
        }
    }
    Ok(y)
}

/// Gaussian elimination with partial pivoting on a small dense row-major matrix.
fn dense_solve(m: usize, a: &mut [f64], b: &mut [f64]) -> Result<Vec<f64>, LinalgError> {
    for j in 0..m {
        let p = (j..m)
            .max_by(|&r, &s| a[r * m + j].abs().total_cmp(&a[s * m + j].abs()))
            .unwrap();
        if a[p * m + j] == 0.0 {
            return Err(LinalgError::Singular(j));
        }
        if p != j {
            for c in 0..m {
                a.swap(j * m + c, p * m + c);
            }
            b.swap(j, p);
        }
        for r in j + 1..m {
            let f = a[r * m + j] / a[j * m + j];
            for c in j..m {
                a[r * m + c] -= f * a[j * m + c];
            }
            b[r] -= f * b[j];
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|c| a[i * m + c] * x[c]).sum();
        x[i] = (b[i] - s) / a[i * m + i];
    }
    Ok(x)
}
