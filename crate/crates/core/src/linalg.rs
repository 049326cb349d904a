//! Dense and iterative symmetric eigen-solvers and the action of `exp(-tS)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Ascending eigenvalues with orthonormal eigenvectors in the columns.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sym_eigen(s: &DMatrix<f64>) -> SymEigen {
    let n = s.nrows();
    if n == 0 {
        return SymEigen { values: Vec::new(), vectors: DMatrix::zeros(0, 0) };
    }
    let e = SymmetricEigen::new(s.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]);
    SymEigen { values, vectors }
}

pub fn sym_eigenvalues(s: &DMatrix<f64>) -> Vec<f64> {
    if s.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

impl SymEigen {
    /// `V diag(f(lambda)) V^T`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let fl = f(l);
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        &scaled * self.vectors.transpose()
    }
}

/// Sparse symmetric matrix in row-adjacency form.
#[derive(Clone, Debug)]
pub struct SparseSym {
    pub diag: Vec<f64>,
    /// `(column, value)` off-diagonal entries per row.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.diag.len() {
            let mut s = self.diag[i] * x[i];
            for &(j, v) in &self.rows[i] {
                s += v * x[j];
            }
            y[i] = s;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, v) in &self.rows[i] {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Gershgorin bound on the spectral radius.
    pub fn gershgorin(&self) -> f64 {
        (0..self.len())
            .map(|i| self.diag[i].abs() + self.rows[i].iter().map(|t| t.1.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Bottom eigenpair of `a` by Lanczos with full reorthogonalization, restarted
/// from the current Ritz vector every `max_basis` steps. Stops when the residual
/// `|A v - theta v|` drops below `tol`.
pub fn lanczos_bottom(a: &SparseSym, start: &[f64], tol: f64, max_basis: usize, max_restarts: usize) -> LanczosResult {
    let n = a.len();
    let mut v0: Vec<f64> = start.to_vec();
    let mut best = LanczosResult { value: f64::NAN, vector: v0.clone(), residual: f64::INFINITY, iterations: 0 };
    let mut total = 0;
    for _ in 0..=max_restarts {
        let nv = norm(&v0);
        v0.iter_mut().for_each(|x| *x /= nv);
        let mut basis: Vec<Vec<f64>> = vec![v0.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![0.0; n];
        let mut converged = false;
        for k in 0..max_basis.min(n) {
            a.mul(&basis[k], &mut w);
            total += 1;
            let ak = dot(&w, &basis[k]);
            alpha.push(ak);
            // full reorthogonalization, twice for stability
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(&w, b);
                    w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let bk = norm(&w);
            let check = k + 1 == max_basis.min(n) || bk < 1e-14 || (k + 1) % 10 == 0;
            if check {
                let (theta, y) = tridiag_bottom(&alpha, &beta);
                let res = bk * y[k].abs();
                let mut vec = vec![0.0; n];
                for (i, b) in basis.iter().enumerate() {
                    vec.iter_mut().zip(b).for_each(|(x, z)| *x += y[i] * z);
                }
                best = LanczosResult { value: theta, vector: vec, residual: res, iterations: total };
                if res < tol || bk < 1e-14 {
                    converged = true;
                    break;
                }
            }
            beta.push(bk);
            basis.push(w.iter().map(|x| x / bk).collect());
        }
        if converged {
            break;
        }
        v0 = best.vector.clone();
    }
    // true residual of the returned pair
    let mut av = vec![0.0; n];
    let nv = norm(&best.vector);
    best.vector.iter_mut().for_each(|x| *x /= nv);
    a.mul(&best.vector, &mut av);
    best.value = dot(&av, &best.vector);
    best.residual = av.iter().zip(&best.vector).map(|(x, v)| (x - best.value * v).powi(2)).sum::<f64>().sqrt();
    best
}

fn tridiag_bottom(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let e = SymmetricEigen::new(t);
    let i = (0..k).min_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b])).unwrap();
    (e.eigenvalues[i], e.eigenvectors.column(i).iter().copied().collect())
}

/// `e^{-a} I_k(a)` for `k = 0..=kmax`, by backward recurrence normalized with
/// `e^{-a}(I_0 + 2 sum_k I_k) = 1`.
pub fn scaled_bessel_i(a: f64, kmax: usize) -> Vec<f64> {
    if a == 0.0 {
        let mut v = vec![0.0; kmax + 1];
        v[0] = 1.0;
        return v;
    }
    let start = kmax + 40 + (2.0 * a.sqrt()) as usize;
    let mut vals = vec![0.0; start + 2];
    vals[start] = 1e-280;
    for k in (1..=start).rev() {
        vals[k - 1] = 2.0 * k as f64 / a * vals[k] + vals[k + 1];
        if vals[k - 1] > 1e250 {
            vals.iter_mut().for_each(|x| *x *= 1e-250);
        }
    }
    let total = vals[0] + 2.0 * vals[1..].iter().sum::<f64>();
    vals.truncate(kmax + 1);
    vals.iter_mut().for_each(|x| *x /= total);
    vals
}

/// `exp(-t A) v` for symmetric `A` with spectrum in `[0, bound]`, via a Chebyshev
/// expansion truncated when the coefficients fall below `1e-16`.
pub fn expm_times(a: &SparseSym, t: f64, bound: f64, v: &[f64]) -> Vec<f64> {
    let n = a.len();
    if t == 0.0 || bound == 0.0 {
        return v.to_vec();
    }
    let half = bound / 2.0;
    let z = t * half;
    let kmax = (z + 12.0 * z.sqrt() + 40.0).ceil() as usize;
    let c = scaled_bessel_i(z, kmax);
    let last = c.iter().rposition(|&x| x.abs() > 1e-17).unwrap_or(0).max(1);
    // X = A / half - I has spectrum in [-1, 1]; exp(-tA) = e^{-z} exp(-z X)
    let apply_x = |x: &[f64], out: &mut Vec<f64>| {
        a.mul(x, out);
        for i in 0..n {
            out[i] = out[i] / half - x[i];
        }
    };
    let mut t0 = v.to_vec();
    let mut t1 = vec![0.0; n];
    apply_x(&t0, &mut t1);
    let mut acc: Vec<f64> = t0.iter().map(|x| c[0] * x).collect();
    for i in 0..n {
        acc[i] -= 2.0 * c[1] * t1[i];
    }
    let mut tmp = vec![0.0; n];
    for (k, &ck) in c.iter().enumerate().take(last + 1).skip(2) {
        apply_x(&t1, &mut tmp);
        for i in 0..n {
            let t2 = 2.0 * tmp[i] - t0[i];
            t0[i] = t1[i];
            t1[i] = t2;
        }
        let sign = if k % 2 == 0 { 2.0 } else { -2.0 };
        for i in 0..n {
            acc[i] += sign * ck * t1[i];
        }
    }
    acc
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
