//! Dense and matrix-free symmetric eigensolvers plus small linear-algebra
//! helpers shared across the workbench.
//!
//! The dense path is cyclic Jacobi rotations; the matrix-free path is Lanczos
//! with full reorthogonalization. Smallest eigenvalues are obtained without
//! shift-invert by running Lanczos on `c I - A` where `c` is a computed upper
//! bound for the largest eigenvalue.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("vector dimension {0} outside supported range 2..=16")]
    BadDimension(usize),
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("matrix not positive definite (pivot {0:.3e})")]
    NotPositiveDefinite(f64),
    #[error("eigensolver did not converge within {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("rank-deficient input (pivot norm {0:.3e})")]
    RankDeficient(f64),
}

/// Ambient vector with validated dimension and finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() < 2 || data.len() > 16 {
            return Err(LinalgError::BadDimension(data.len()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Vector(data))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector::new(vec![0.0; dim]).expect("dimension checked by caller")
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn scale(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|x| c * x).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

impl std::ops::Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += c * x
pub fn axpy(c: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Dense symmetric matrix, full row-major storage.
#[derive(Clone, Debug)]
pub struct SymMatrix {
    n: usize,
    a: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            a: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// Sets both (i, j) and (j, i).
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
        self.a[j * self.n + i] = v;
    }

    pub fn frobenius(&self) -> f64 {
        norm(&self.a)
    }
}

/// Eigendecomposition of a symmetric matrix; eigenvalues ascending,
/// eigenvector k stored as column k of `vectors` (row-major `n x n`).
pub struct EigDecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl EigDecomposition {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.n + k]).collect()
    }
}

/// Cyclic Jacobi rotations. Converges to working tolerance for the dense
/// sizes used here (a few hundred); reconstruction residual is checked in
/// tests against 1e-9 relative.
pub fn sym_eig(m: &SymMatrix) -> EigDecomposition {
    let n = m.n;
    let mut a = m.a.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n == 0 {
        return EigDecomposition {
            values: vec![],
            vectors: v,
            n,
        };
    }

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..i {
                s += a[i * n + j] * a[i * n + j];
            }
        }
        (2.0 * s).sqrt()
    };

    let scale = m.frobenius().max(f64::MIN_POSITIVE);
    for _sweep in 0..60 {
        if off(&a) <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].partial_cmp(&a[j * n + j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = v[i * n + old_k];
        }
    }
    EigDecomposition { values, vectors, n }
}

/// Eigenvalues (and eigenvectors of the tridiagonal) by QL with implicit
/// shifts. `d` is the diagonal, `e` the subdiagonal (`e.len() == d.len()-1`).
/// Returns eigenvalues ascending and the eigenvector matrix (row-major,
/// column k = eigenvector k).
pub fn tridiag_eig(d: &[f64], e: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e_work = vec![0.0; n];
    e_work[..n - 1].copy_from_slice(e);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e_work[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 60, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e_work[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e_work[l] / (g + sign_r);
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            for i in (l..m).rev() {
                let mut f = s * e_work[i];
                let b = c * e_work[i];
                r = f.hypot(g);
                e_work[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e_work[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e_work[l] = g;
            e_work[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_k, &old_k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + new_k] = z[i * n + old_k];
        }
    }
    (values, vectors)
}

pub struct LanczosOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            max_iter: 500,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

pub struct LanczosResult {
    pub eigenvalues: Vec<f64>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// Smallest `count` eigenvalues of a symmetric operator given only its
/// action. When `weights` is provided the generalized problem
/// `A x = lambda diag(w) x` is solved by symmetrizing with `diag(w)^{-1/2}`.
///
/// Stage 1 estimates an upper bound `c >= lambda_max`; stage 2 runs Lanczos
/// with full reorthogonalization on `c I - A`, whose largest eigenvalues are
/// `c - lambda_min(A)`.
pub fn sparse_smallest_eigs(
    dim: usize,
    apply: &dyn Fn(&[f64], &mut [f64]),
    count: usize,
    weights: Option<&[f64]>,
    opts: &LanczosOptions,
) -> Result<LanczosResult, LinalgError> {
    let inv_sqrt_w: Option<Vec<f64>> = weights.map(|w| w.iter().map(|x| 1.0 / x.sqrt()).collect());
    let sym_apply = |x: &[f64], y: &mut [f64]| match &inv_sqrt_w {
        None => apply(x, y),
        Some(s) => {
            let xs: Vec<f64> = x.iter().zip(s).map(|(a, b)| a * b).collect();
            apply(&xs, y);
            for (yi, si) in y.iter_mut().zip(s) {
                *yi *= si;
            }
        }
    };

    // Stage 1: bound lambda_max with a short unshifted Lanczos run.
    let probe = lanczos_run(dim, &sym_apply, 40.min(dim), opts.seed, None);
    let (tvals, _) = tridiag_eig(&probe.alpha, &probe.beta);
    let bound = tvals.last().copied().unwrap_or(0.0) + probe.final_beta.abs() + 1.0;

    // Stage 2: Lanczos on the shifted operator.
    let shifted = |x: &[f64], y: &mut [f64]| {
        sym_apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = bound * xi - *yi;
        }
    };

    let max_iter = opts.max_iter.min(dim);
    let run = lanczos_run(dim, &shifted, max_iter, opts.seed, Some((count, opts.tol, bound)));
    let k = run.alpha.len();
    let (tvals, tvecs) = tridiag_eig(&run.alpha, &run.beta);

    // Largest Ritz values of the shifted operator map to the smallest of the
    // original one, so walking columns from the top yields ascending order.
    let mut eigenvalues = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for j in 0..count.min(k) {
        let col = k - 1 - j;
        let ritz = tvals[col];
        let last = tvecs[(k - 1) * k + col];
        let resid = (run.final_beta * last).abs();
        eigenvalues.push(bound - ritz);
        residuals.push(resid);
    }

    let worst = residuals.iter().cloned().fold(0.0f64, f64::max);
    if worst > opts.tol * bound.abs().max(1.0) && k < dim {
        return Err(LinalgError::NoConvergence {
            iterations: k,
            residual: worst,
        });
    }
    Ok(LanczosResult {
        eigenvalues,
        iterations: k,
        residuals,
    })
}

struct LanczosRun {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    final_beta: f64,
}

fn lanczos_run(
    dim: usize,
    apply: &impl Fn(&[f64], &mut [f64]),
    max_iter: usize,
    seed: u64,
    convergence: Option<(usize, f64, f64)>,
) -> LanczosRun {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    let nq = norm(&q);
    for x in q.iter_mut() {
        *x /= nq;
    }

    let mut basis: Vec<Vec<f64>> = vec![q.clone()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; dim];
    let mut final_beta = 0.0;

    for k in 0..max_iter {
        apply(&basis[k], &mut w);
        let a = dot(&basis[k], &w);
        alpha.push(a);
        axpy(-a, &basis[k], &mut w);
        if k > 0 {
            let b = beta[k - 1];
            axpy(-b, &basis[k - 1], &mut w);
        }
        // Full reorthogonalization, done twice for robustness.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        let b = norm(&w);
        final_beta = b;
        let scale_est = alpha.iter().fold(1.0f64, |m, &x| m.max(x.abs()));
        if b <= 1e-13 * scale_est {
            // Hit an invariant subspace: the Ritz values found so far are
            // exact there. Restart in the orthogonal complement with zero
            // coupling so the tridiagonal matrix stays honest.
            final_beta = 0.0;
            if basis.len() >= dim || k + 1 == max_iter {
                break;
            }
            let mut fresh: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &fresh);
                    axpy(-c, v, &mut fresh);
                }
            }
            let nf = norm(&fresh);
            if nf <= 1e-8 {
                break;
            }
            for x in fresh.iter_mut() {
                *x /= nf;
            }
            beta.push(0.0);
            basis.push(fresh);
            continue;
        }

        if let Some((count, tol, scale)) = convergence {
            if k >= count + 2 && k % 8 == 0 {
                let (tv, tz) = tridiag_eig(&alpha, &beta);
                let m = alpha.len();
                let mut ok = true;
                for j in 0..count.min(m) {
                    let col = m - 1 - j;
                    let last = tz[(m - 1) * m + col];
                    if (b * last).abs() > tol * scale.abs().max(1.0) {
                        ok = false;
                        break;
                    }
                }
                let _ = tv;
                if ok {
                    break;
                }
            }
        }

        if k + 1 == max_iter {
            break;
        }
        beta.push(b);
        let next: Vec<f64> = w.iter().map(|x| x / b).collect();
        basis.push(next);
    }

    LanczosRun {
        alpha,
        beta,
        final_beta,
    }
}

/// Cholesky factorization and solve for small SPD systems (metric sharps,
/// least squares). Returns x with `A x = b`.
pub fn spd_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.n;
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(LinalgError::NotPositiveDefinite(s));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Ok(y)
}

/// Modified Gram-Schmidt. Orthonormalizes `vecs` in place order, returning
/// the orthonormal set; vectors whose residual drops below `tol` times their
/// original norm are rejected as dependent.
pub fn gram_schmidt(vecs: &[Vec<f64>], tol: f64) -> Result<Vec<Vec<f64>>, LinalgError> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vecs.len());
    for v in vecs {
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &out {
                let c = dot(u, &w);
                axpy(-c, u, &mut w);
            }
        }
        let nw = norm(&w);
        if nw <= tol * norm(v).max(1e-300) {
            return Err(LinalgError::RankDeficient(nw));
        }
        for x in w.iter_mut() {
            *x /= nw;
        }
        out.push(w);
    }
    Ok(out)
}

/// Composite Simpson rule over uniformly spaced samples (odd count).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd sample count >= 3");
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 2);
    let inner: f64 = values[1..n - 1].iter().sum();
    (0.5 * (values[0] + values[n - 1]) + inner) * h
}

/// Observed convergence order from errors at h and h/2.
pub fn observed_order(err_h: f64, err_h2: f64) -> f64 {
    (err_h.abs() / err_h2.abs()).log2()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; nodes come out ascending.
/// Exact for polynomials of degree `2n - 1`, and effectively spectral for the
/// smooth angular volume elements it is used on.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi-style initial guess for the i-th root (descending).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and its derivative by the three-term recurrence.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}
