//! Dense reference implementations used only as test oracles: LU solves,
//! a Jacobi symmetric eigensolver backing pseudo-inverse applications, the
//! KKT system of equality-constrained least squares, golden-section and
//! grid minimization, and finite differences. Everything here is
//! independent of the library's matrix-free solution paths.

#![allow(dead_code)]

use proxal::linalg::{DenseMatrix, OperatorHandle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * scale).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    DenseMatrix::new(rows, cols, random_vec(rng, rows * cols, scale)).unwrap()
}

/// Materialize a matrix-free operator column by column.
pub fn dense_from_operator(op: &OperatorHandle) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(op.out_dim(), op.in_dim());
    for j in 0..op.in_dim() {
        let mut e = vec![0.0; op.in_dim()];
        e[j] = 1.0;
        let col = op.apply(&e);
        for (i, &val) in col.iter().enumerate() {
            m.set(i, j, val);
        }
    }
    m
}

/// Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j)).collect())
        .collect();
    let mut x = b.to_vec();
    for col in 0..n {
        let (pivot, _) = m
            .iter()
            .enumerate()
            .skip(col)
            .map(|(i, row)| (i, row[col].abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        m.swap(col, pivot);
        x.swap(col, pivot);
        let piv = m[col][col];
        assert!(piv.abs() > 1e-14, "singular system in lu_solve");
        for row in col + 1..n {
            let factor = m[row][col] / piv;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row][k] -= factor * m[col][k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        x[col] /= m[col][col];
        for row in 0..col {
            x[row] -= m[row][col] * x[col];
        }
    }
    x
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix: returns
/// (eigenvalues, eigenvector columns) with `a = V diag(l) V^T`.
pub fn sym_eig(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.rows();
    assert_eq!(a.cols(), n);
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a.get(i, j)).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .max(1e-300);
    for _sweep in 0..200 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off <= 1e-28 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            vectors.set(i, j, v[i][j]);
        }
    }
    (eigenvalues, vectors)
}

/// Singular values of a dense matrix via the eigenvalues of `A^T A`.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let gram = gram_matrix(a);
    let (mut eig, _) = sym_eig(&gram);
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

fn gram_matrix(a: &DenseMatrix) -> DenseMatrix {
    let (rows, cols) = (a.rows(), a.cols());
    let mut g = DenseMatrix::zeros(cols, cols);
    for i in 0..cols {
        for j in 0..cols {
            let mut s = 0.0;
            for k in 0..rows {
                s += a.get(k, i) * a.get(k, j);
            }
            g.set(i, j, s);
        }
    }
    g
}

/// Dense Moore-Penrose application `A^+ v = V diag(1/s^2) V^T A^T v`,
/// truncating singular values below `rcond * s_max`.
pub fn pseudo_inverse_apply(a: &DenseMatrix, v: &[f64], rcond: f64) -> Vec<f64> {
    let gram = gram_matrix(a);
    let (eig, vecs) = sym_eig(&gram);
    let smax2 = eig.iter().cloned().fold(0.0, f64::max);
    let atv = a.matvec_t(v);
    let n = a.cols();
    let mut out = vec![0.0; n];
    for k in 0..n {
        let lk = eig[k];
        if lk <= rcond * rcond * smax2 {
            continue;
        }
        let mut coeff = 0.0;
        for i in 0..n {
            coeff += vecs.get(i, k) * atv[i];
        }
        coeff /= lk;
        for i in 0..n {
            out[i] += coeff * vecs.get(i, k);
        }
    }
    out
}

/// Transpose of the pseudo-inverse applied to `u`:
/// `(A^+)^T u = A (A^T A)^+ u`.
pub fn pseudo_inverse_transpose_apply(a: &DenseMatrix, u: &[f64], rcond: f64) -> Vec<f64> {
    let gram = gram_matrix(a);
    let (eig, vecs) = sym_eig(&gram);
    let smax2 = eig.iter().cloned().fold(0.0, f64::max);
    let n = a.cols();
    let mut w = vec![0.0; n];
    for k in 0..n {
        let lk = eig[k];
        if lk <= rcond * rcond * smax2 {
            continue;
        }
        let mut coeff = 0.0;
        for i in 0..n {
            coeff += vecs.get(i, k) * u[i];
        }
        coeff /= lk;
        for i in 0..n {
            w[i] += coeff * vecs.get(i, k);
        }
    }
    a.matvec(&w)
}

/// Dense KKT solution of
/// `min ||T v - g||^2 + gamma ||v||^2  s.t.  A v = f`;
/// returns the primal `v` and the multiplier `w` with
/// `2 T^T (T v - g) + 2 gamma v = A^T w`.
pub fn kkt_equality_least_squares(
    t: &DenseMatrix,
    g: &[f64],
    a: &DenseMatrix,
    f: &[f64],
    gamma: f64,
) -> (Vec<f64>, Vec<f64>) {
    let m = t.cols();
    let p = a.rows();
    let dim = m + p;
    let mut kkt = DenseMatrix::zeros(dim, dim);
    // block 2 T^T T + 2 gamma I
    for i in 0..m {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..t.rows() {
                s += t.get(k, i) * t.get(k, j);
            }
            kkt.set(i, j, 2.0 * s + if i == j { 2.0 * gamma } else { 0.0 });
        }
    }
    // A^T and A blocks; the multiplier convention is grad J = A^T w
    for i in 0..p {
        for j in 0..m {
            kkt.set(j, m + i, -a.get(i, j));
            kkt.set(m + i, j, a.get(i, j));
        }
    }
    let mut rhs = vec![0.0; dim];
    let ttg = t.matvec_t(g);
    for i in 0..m {
        rhs[i] = 2.0 * ttg[i];
    }
    rhs[m..m + p].copy_from_slice(&f[..p]);
    let sol = lu_solve(&kkt, &rhs);
    (sol[..m].to_vec(), sol[m..].to_vec())
}

/// Golden-section minimization of a unimodal function to bracket width
/// `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let fp = f(&probe);
        probe[k] = x[k] - h;
        let fm = f(&probe);
        probe[k] = x[k];
        grad.push((fp - fm) / (2.0 * h));
    }
    grad
}

/// Exhaustive 2-D grid minimization over a square box.
pub fn grid_search_2d(
    f: impl Fn(f64, f64) -> f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> (f64, f64, f64) {
    let n = ((hi - lo) / step).round() as usize;
    let mut best = (lo, lo, f(lo, lo));
    for i in 0..=n {
        let x = lo + step * i as f64;
        for j in 0..=n {
            let y = lo + step * j as f64;
            let v = f(x, y);
            if v < best.2 {
                best = (x, y, v);
            }
        }
    }
    best
}

/// 1-D minimization of `t -> f(v(t))` along the line `a1 v1 + a2 v2 = c`
/// parameterized by `v1 = t`, for two-component constrained problems.
pub fn grid_search_on_line(
    f: impl Fn(f64, f64) -> f64,
    a1: f64,
    a2: f64,
    c: f64,
    lo: f64,
    hi: f64,
    step: f64,
) -> (f64, f64, f64) {
    assert!(a2.abs() > 1e-12);
    let n = ((hi - lo) / step).round() as usize;
    let mut best = (f64::NAN, f64::NAN, f64::INFINITY);
    for i in 0..=n {
        let v1 = lo + step * i as f64;
        let v2 = (c - a1 * v1) / a2;
        let val = f(v1, v2);
        if val < best.2 {
            best = (v1, v2, val);
        }
    }
    best
}

/// Numerical rank: count of singular values above `tol * s_max`.
pub fn numerical_rank(a: &DenseMatrix, tol: f64) -> usize {
    let sv = singular_values(a);
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|&&s| s > tol * smax.max(1e-300)).count()
}
