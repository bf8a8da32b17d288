//! Spectral stability of minimal cones under scaling-weighted variations.
//!
//! Normal variations of a cone are measured against the quadratic form with
//! weight `r^{-2}` times the cone measure. On a truncated cone `eps < r < 1`
//! the radial part of the problem has eigenvalues [`gamma`], the link
//! contributes Jacobi eigenvalues `mu_j`, and the two add. Everything here
//! revolves around the resulting index
//! `d0 = ((n - 2) / 2)^2 + mu_1`: the cone is strictly stable exactly when it
//! is positive.

use crate::linalg::{self, LanczosOptions, LinalgError};
use crate::links::LinkSpec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("link is not supported by this analysis: {0}")]
    UnsupportedLink(String),
    #[error("parameter out of range: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Radial eigenvalues of the scaling-weighted problem on `eps < r < 1`.
///
/// With respect to the pairing `int phi psi r^{n-3} dr`, the Dirichlet
/// eigenvalues of `-(r^{n-1} phi')' / r^{n-3}` are
/// `((n - 2) / 2)^2 + (i pi / log eps)^2`.
pub fn gamma(n: usize, i: usize, eps: f64) -> f64 {
    assert!(n >= 2 && i >= 1);
    assert!(eps > 0.0 && eps < 1.0, "eps must sit in (0, 1)");
    let c = (n as f64 - 2.0) / 2.0;
    let k = i as f64 * std::f64::consts::PI / eps.ln();
    c * c + k * k
}

/// First radial eigenvalue plus first link eigenvalue.
pub fn lambda1(n: usize, mu1: f64, eps: f64) -> f64 {
    gamma(n, 1, eps) + mu1
}

/// Infimum of [`lambda1`] over all truncation windows.
pub fn d0(n: usize, mu1: f64) -> f64 {
    let c = (n as f64 - 2.0) / 2.0;
    c * c + mu1
}

/// Discretization of the radial operator on a truncation window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialEigenProblem {
    pub n: usize,
    pub eps: f64,
    /// Number of subintervals of the uniform grid in `t = log r`.
    pub grid: usize,
    /// Computed eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// The closed-form values [`gamma`] they approximate.
    pub analytic: Vec<f64>,
    /// Grid nodes `r_i` (interior only).
    #[serde(skip)]
    pub nodes: Vec<f64>,
    /// Eigenvectors in the symmetrized variable `w = r^{(n-2)/2} psi`,
    /// orthonormal in `h`-weighted Euclidean product; columns match
    /// `eigenvalues`.
    #[serde(skip)]
    pub modes: Vec<Vec<f64>>,
}

/// Smallest radial eigenvalues on `eps < r < 1` with Dirichlet walls.
///
/// The substitution `t = log r`, `w = r^{(n-2)/2} psi` turns the weighted
/// problem into `-w'' + ((n-2)/2)^2 w` on `[log eps, 0]`, discretized by
/// second-order central differences on a uniform grid. The discrete spectrum
/// is known exactly, so [`gamma`] doubles as a sharp oracle.
pub fn radial_eigs(
    n: usize,
    eps: f64,
    grid: usize,
    count: usize,
) -> Result<RadialEigenProblem, SpectralError> {
    if n < 2 {
        return Err(SpectralError::BadParameter(format!("cone dimension {n} below 2")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SpectralError::BadParameter(format!("eps {eps} outside (0, 1)")));
    }
    if grid < 16 {
        return Err(SpectralError::BadParameter(format!("grid {grid} below 16")));
    }
    if count == 0 || count > grid - 1 {
        return Err(SpectralError::BadParameter(format!(
            "cannot resolve {count} modes on {grid} cells"
        )));
    }
    let c = (n as f64 - 2.0) / 2.0;
    let t0 = eps.ln();
    let h = -t0 / grid as f64;
    let dim = grid - 1;
    let diag = vec![2.0 / (h * h) + c * c; dim];
    let off = vec![-1.0 / (h * h); dim - 1];
    let (vals, vecs) = linalg::tridiag_eig(&diag, &off);
    let scale = 1.0 / h.sqrt();
    let modes: Vec<Vec<f64>> = (0..count)
        .map(|j| (0..dim).map(|i| vecs[i * dim + j] * scale).collect())
        .collect();
    Ok(RadialEigenProblem {
        n,
        eps,
        grid,
        eigenvalues: vals.into_iter().take(count).collect(),
        analytic: (1..=count).map(|i| gamma(n, i, eps)).collect(),
        nodes: (1..dim + 1).map(|i| (t0 + i as f64 * h).exp()).collect(),
        modes,
    })
}

/// Smallest radial eigenvalues computed directly in `r`, with no logarithmic
/// substitution: P1 finite elements on a geometric mesh for the stiffness
/// form `int phi' psi' r^{n-1} dr` against the lumped weighted mass
/// `int phi psi r^{n-3} dr`. Second-order accurate; used as the independent
/// check of [`radial_eigs`].
pub fn radial_eigs_fem(n: usize, eps: f64, count: usize, cells: usize) -> Result<Vec<f64>, SpectralError> {
    if n < 3 {
        return Err(SpectralError::BadParameter(format!(
            "radial finite elements need n >= 3, got {n}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SpectralError::BadParameter(format!("eps {eps} outside (0, 1)")));
    }
    if cells < count + 2 {
        return Err(SpectralError::BadParameter("mesh too coarse".into()));
    }
    // int_a^b r^p dr for integer p >= 0.
    let ipow = |a: f64, b: f64, p: i32| (b.powi(p + 1) - a.powi(p + 1)) / (p as f64 + 1.0);
    let nn = n as i32;
    let r: Vec<f64> = (0..=cells)
        .map(|i| (eps.ln() * (1.0 - i as f64 / cells as f64)).exp())
        .collect();

    let dim = cells - 1;
    let mut diag = vec![0.0; dim];
    let mut off = vec![0.0; dim - 1];
    let mut mass = vec![0.0; dim];
    for e in 0..cells {
        let (a, b) = (r[e], r[e + 1]);
        let h = b - a;
        let k_el = ipow(a, b, nn - 1) / (h * h);
        // Hat-function pieces of the weighted mass, integrated exactly.
        let m_right = (ipow(a, b, nn - 2) - a * ipow(a, b, nn - 3)) / h;
        let m_left = (b * ipow(a, b, nn - 3) - ipow(a, b, nn - 2)) / h;
        let (il, ir) = (e as isize - 1, e as isize);
        if il >= 0 {
            diag[il as usize] += k_el;
            mass[il as usize] += m_left;
        }
        if (ir as usize) < dim {
            diag[ir as usize] += k_el;
            mass[ir as usize] += m_right;
        }
        if il >= 0 && (ir as usize) < dim {
            off[il as usize] -= k_el;
        }
    }
    // Symmetric reduction of K x = gamma M x with lumped (diagonal) mass.
    let sd: Vec<f64> = mass.iter().map(|m| m.sqrt()).collect();
    let d: Vec<f64> = (0..dim).map(|i| diag[i] / (sd[i] * sd[i])).collect();
    let e: Vec<f64> = (0..dim - 1).map(|i| off[i] / (sd[i] * sd[i + 1])).collect();
    let (vals, _) = linalg::tridiag_eig(&d, &e);
    Ok(vals.into_iter().take(count).collect())
}

/// Spectrum of the link Jacobi operator `-Laplace - |A|^2` on functions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkSpectrum {
    /// Eigenvalues `mu_j`, ascending with multiplicity.
    pub mu: Vec<f64>,
    pub mu1: f64,
    /// Factor harmonic degrees behind each eigenvalue; `(j, 0)` on a single
    /// sphere.
    pub modes: Vec<(usize, usize)>,
}

/// Jacobi eigenvalues of the link, ascending with multiplicity.
///
/// Closed-form spectra exist for round spheres and products of spheres,
/// where `mu_j` is a Laplace eigenvalue minus the constant `|A|^2`; the
/// other links are handled by the variation machinery instead.
pub fn scalar_link_spectrum(spec: &LinkSpec, count: usize) -> Result<LinkSpectrum, SpectralError> {
    let a2 = sff_norm_sq_closed(spec)?;
    let mut vals: Vec<(f64, (usize, usize))> = Vec::new();
    match *spec {
        LinkSpec::RoundSphere { dim, .. } => {
            let mut j = 0usize;
            while vals.len() < count {
                let lam = (j * (j + dim - 1)) as f64;
                for _ in 0..sphere_multiplicity(dim, j) {
                    vals.push((lam, (j, 0)));
                }
                j += 1;
            }
        }
        LinkSpec::ProductOfSpheres { k, l, r1, r2 } => {
            // Sums of factor eigenvalues; enumerate enough levels of each
            // factor to cover the requested prefix.
            let mut j = 0usize;
            loop {
                let base = (j * (j + k - 1)) as f64 / (r1 * r1);
                if vals.len() >= count && base > vals.last().unwrap().0 {
                    break;
                }
                let mut h = 0usize;
                loop {
                    let lam = base + (h * (h + l - 1)) as f64 / (r2 * r2);
                    if h > 0 && vals.len() >= count && lam > vals.last().unwrap().0 {
                        break;
                    }
                    let mult = sphere_multiplicity(k, j) * sphere_multiplicity(l, h);
                    for _ in 0..mult {
                        vals.push((lam, (j, h)));
                    }
                    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                    vals.truncate(count.max(1) * 4);
                    h += 1;
                }
                j += 1;
            }
        }
        _ => {
            return Err(SpectralError::UnsupportedLink(format!(
                "no closed-form scalar spectrum for {spec:?}"
            )))
        }
    }
    vals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    vals.truncate(count);
    let mu: Vec<f64> = vals.iter().map(|(lam, _)| lam - a2).collect();
    let mu1 = mu.first().copied().unwrap_or(-a2);
    Ok(LinkSpectrum {
        mu1,
        modes: vals.into_iter().map(|(_, m)| m).collect(),
        mu,
    })
}

fn sphere_multiplicity(d: usize, j: usize) -> usize {
    // dim of degree-j spherical harmonics on S^d.
    if j == 0 {
        return 1;
    }
    if d == 1 {
        return 2;
    }
    let binom = |n: usize, k: usize| -> usize {
        if k > n {
            return 0;
        }
        let mut out = 1usize;
        for i in 0..k {
            out = out * (n - i) / (i + 1);
        }
        out
    };
    let lower = if j >= 2 { binom(d + j - 2, j - 2) } else { 0 };
    binom(d + j, j) - lower
}

/// Squared norm of the link's second fundamental form for links where it is
/// constant in closed form.
pub fn sff_norm_sq_closed(spec: &LinkSpec) -> Result<f64, SpectralError> {
    match *spec {
        LinkSpec::RoundSphere { .. } => Ok(0.0),
        LinkSpec::ProductOfSpheres { k, l, r1, r2 } => {
            let kf = k as f64;
            let lf = l as f64;
            let tot = kf + lf;
            // Minimal radii give |A|^2 = k + l identically; take the
            // algebraic value instead of pushing it through square roots.
            let slack = 8.0 * f64::EPSILON;
            if (r1 * r1 * tot - kf).abs() <= slack * kf && (r2 * r2 * tot - lf).abs() <= slack * lf
            {
                return Ok(tot);
            }
            let q1 = r2 / r1;
            let q2 = r1 / r2;
            Ok(kf * q1 * q1 + lf * q2 * q2)
        }
        _ => Err(SpectralError::UnsupportedLink(format!(
            "no closed-form curvature norm for {spec:?}"
        ))),
    }
}

/// First eigenvalue of the link Jacobi operator `-Laplace - |A|^2` for the
/// hypersurface links. The curvature norm is constant there, so it is just
/// `-|A|^2`.
pub fn mu1(spec: &LinkSpec) -> Result<f64, SpectralError> {
    Ok(-sff_norm_sq_closed(spec)?)
}

/// Stability verdict derived from the sign of `d0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    StrictlyStable,
    /// The boundary case `d0 = 0`: stable, with a scale-critical Jacobi field
    /// blocking strictness.
    StableNotStrictlyStable,
    NotStableByCriterion,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stability::StrictlyStable => "StrictlyStable",
            Stability::StableNotStrictlyStable => "StableNotStrictlyStable",
            Stability::NotStableByCriterion => "NotStableByCriterion",
        })
    }
}

pub fn verdict_from_d0(d0: f64, tol: f64) -> Stability {
    if d0 > tol {
        Stability::StrictlyStable
    } else if d0 < -tol {
        Stability::NotStableByCriterion
    } else {
        Stability::StableNotStrictlyStable
    }
}

/// Full classification of a hypersurface cone.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Classification {
    pub link: LinkSpec,
    pub cone_dim: usize,
    pub sff_norm_sq: f64,
    pub mu1: f64,
    pub d0: f64,
    pub verdict: Stability,
}

pub fn classify(spec: &LinkSpec, tol: f64) -> Result<Classification, SpectralError> {
    spec.validate()
        .map_err(|e| SpectralError::BadParameter(e.to_string()))?;
    let n = spec.cone_dim();
    let a2 = sff_norm_sq_closed(spec)?;
    let mu = -a2;
    let idx = d0(n, mu);
    Ok(Classification {
        link: spec.clone(),
        cone_dim: n,
        sff_norm_sq: a2,
        mu1: mu,
        d0: idx,
        verdict: verdict_from_d0(idx, tol),
    })
}

/// One row of the truncation cross-check table: the analytic bottom
/// eigenvalue against its discrete counterpart.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lambda1Row {
    pub eps: f64,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Classification plus the per-window eigenvalue table, as emitted by the
/// command-line front end.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n: usize,
    pub mu1: f64,
    pub d0: f64,
    pub verdict: Stability,
    pub lambda1_table: Vec<Lambda1Row>,
    pub grid: usize,
    pub seed: u64,
}

pub fn spectral_report(
    spec: &LinkSpec,
    eps_list: &[f64],
    grid: usize,
    seed: u64,
    tol: f64,
) -> Result<SpectralReport, SpectralError> {
    let c = classify(spec, tol)?;
    let mut table = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let analytic = lambda1(c.cone_dim, c.mu1, eps);
        let numeric = radial_eigs(c.cone_dim, eps, grid, 1)?.eigenvalues[0] + c.mu1;
        let rel_err = (numeric - analytic).abs() / analytic.abs().max(1e-12);
        table.push(Lambda1Row { eps, analytic, numeric, rel_err });
    }
    Ok(SpectralReport {
        n: c.cone_dim,
        mu1: c.mu1,
        d0: c.d0,
        verdict: c.verdict,
        lambda1_table: table,
        grid,
        seed,
    })
}

/// One row of the minimal product-cone survey.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub mu1: f64,
    pub d0: f64,
    pub verdict: Stability,
}

/// Survey of the balanced `S^k x S^l` cones with cone dimension in
/// `n_lo..=n_hi`, one row per unordered factor split `k <= l`, sorted by
/// `(n, k)`. An empty range yields an empty table.
pub fn lawson_sweep(n_lo: usize, n_hi: usize, tol: f64) -> Result<Vec<SweepRow>, SpectralError> {
    if n_hi > 12 {
        return Err(SpectralError::BadParameter(format!(
            "survey capped at cone dimension 12, got {n_hi}"
        )));
    }
    let mut rows = Vec::new();
    for n in n_lo.max(2)..=n_hi.min(12) {
        for k in 1..=n.saturating_sub(1) / 2 {
            let l = n - 1 - k;
            let spec = LinkSpec::lawson(k, l);
            let c = classify(&spec, tol)?;
            rows.push(SweepRow {
                n,
                k,
                l,
                mu1: c.mu1,
                d0: c.d0,
                verdict: c.verdict,
            });
        }
    }
    Ok(rows)
}

/// Scaling-weighted Rayleigh quotient of the separated normal section
/// `psi(r) Y_j nu`, where `Y_j` is the link eigenfunction behind entry
/// `mode` of [`scalar_link_spectrum`].
///
/// `psi` holds samples at the interior nodes of a uniform grid in
/// `t = log r` over `[log eps, 0]`; the section vanishes at both walls. The
/// quotient returned is the exact continuum value of the section whose
/// symmetrization `w = r^{(n-2)/2} psi` is piecewise linear through those
/// samples, so it always dominates `d0`.
pub fn stability_quotient(
    spec: &LinkSpec,
    psi: &[f64],
    mode: usize,
    eps: f64,
) -> Result<f64, SpectralError> {
    let parts = [(psi.to_vec(), mode)];
    stability_quotient_mixed(spec, &parts, eps)
}

/// Quotient of a sum of separated sections over distinct link modes; link
/// eigenfunctions are orthogonal, so numerators and denominators add.
pub fn stability_quotient_mixed(
    spec: &LinkSpec,
    parts: &[(Vec<f64>, usize)],
    eps: f64,
) -> Result<f64, SpectralError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SpectralError::BadParameter(format!("eps {eps} outside (0, 1)")));
    }
    let n = spec.cone_dim();
    let c = (n as f64 - 2.0) / 2.0;
    let max_mode = parts.iter().map(|&(_, m)| m).max().unwrap_or(0);
    let spectrum = scalar_link_spectrum(spec, max_mode + 1)?;
    let t0 = eps.ln();

    // Collapse duplicate modes so orthogonality applies across terms.
    let mut by_mode: std::collections::BTreeMap<usize, Vec<f64>> = std::collections::BTreeMap::new();
    for (psi, mode) in parts {
        if psi.is_empty() {
            return Err(SpectralError::BadParameter("empty radial profile".into()));
        }
        let acc = by_mode.entry(*mode).or_insert_with(|| vec![0.0; psi.len()]);
        if acc.len() != psi.len() {
            return Err(SpectralError::BadParameter(
                "mismatched radial grids for a shared mode".into(),
            ));
        }
        for (a, p) in acc.iter_mut().zip(psi) {
            *a += p;
        }
    }

    let mut num = 0.0;
    let mut den = 0.0;
    for (mode, psi) in &by_mode {
        let h = -t0 / (psi.len() + 1) as f64;
        // Symmetrize pointwise, then integrate the hat interpolant exactly.
        let w: Vec<f64> = psi
            .iter()
            .enumerate()
            .map(|(i, p)| ((t0 + (i + 1) as f64 * h) * c).exp() * p)
            .collect();
        let mut stiff = 0.0;
        let mut mass = 0.0;
        let mut prev = 0.0;
        for i in 0..=w.len() {
            let cur = if i < w.len() { w[i] } else { 0.0 };
            stiff += (cur - prev) * (cur - prev) / h;
            mass += h * (prev * prev + prev * cur + cur * cur) / 3.0;
            prev = cur;
        }
        num += stiff + (c * c + spectrum.mu[*mode]) * mass;
        den += mass;
    }
    if den <= 0.0 {
        return Err(SpectralError::BadParameter("zero test section".into()));
    }
    Ok(num / den)
}

/// Minimum of [`stability_quotient`] over the whole piecewise-linear space
/// at each resolution in `grids`, for a fixed link mode. Inverse iteration
/// on the generalized tridiagonal pencil; the returned values are genuine
/// section quotients, hence upper bounds on `gamma_1(eps) + mu_j` that
/// tighten as the grid refines.
pub fn min_quotient_sweep(
    spec: &LinkSpec,
    eps: f64,
    mode: usize,
    grids: &[usize],
) -> Result<Vec<f64>, SpectralError> {
    let n = spec.cone_dim();
    let c = (n as f64 - 2.0) / 2.0;
    let spectrum = scalar_link_spectrum(spec, mode + 1)?;
    let muj = spectrum.mu[mode];
    let shift = d0(n, spectrum.mu1) - 1.0;
    let t0 = eps.ln();
    let mut out = Vec::with_capacity(grids.len());
    for &grid in grids {
        if grid < 4 {
            return Err(SpectralError::BadParameter(format!("grid {grid} below 4")));
        }
        let dim = grid - 1;
        let h = -t0 / grid as f64;
        // K = stiffness + (c^2 + mu_j) mass, M = consistent P1 mass.
        let m_d = 2.0 * h / 3.0;
        let m_o = h / 6.0;
        let k_d = 2.0 / h + (c * c + muj) * m_d;
        let k_o = -1.0 / h + (c * c + muj) * m_o;
        let a_d = k_d - shift * m_d;
        let a_o = k_o - shift * m_o;

        let solve = |rhs: &[f64]| -> Vec<f64> {
            // Thomas elimination for the constant-coefficient tridiagonal.
            let mut cp = vec![0.0; dim];
            let mut dp = vec![0.0; dim];
            cp[0] = a_o / a_d;
            dp[0] = rhs[0] / a_d;
            for i in 1..dim {
                let m = a_d - a_o * cp[i - 1];
                cp[i] = a_o / m;
                dp[i] = (rhs[i] - a_o * dp[i - 1]) / m;
            }
            let mut x = vec![0.0; dim];
            x[dim - 1] = dp[dim - 1];
            for i in (0..dim - 1).rev() {
                x[i] = dp[i] - cp[i] * x[i + 1];
            }
            x
        };
        let mass_apply = |x: &[f64]| -> Vec<f64> {
            (0..dim)
                .map(|i| {
                    let lo = if i > 0 { x[i - 1] } else { 0.0 };
                    let hi = if i + 1 < dim { x[i + 1] } else { 0.0 };
                    m_d * x[i] + m_o * (lo + hi)
                })
                .collect()
        };

        let mut x: Vec<f64> = (0..dim)
            .map(|i| {
                let t = (i + 1) as f64 / grid as f64;
                (std::f64::consts::PI * t).sin()
            })
            .collect();
        let mut quot = f64::INFINITY;
        for _ in 0..200 {
            let y = solve(&mass_apply(&x));
            let ny = linalg::norm(&y);
            x = y.into_iter().map(|v| v / ny).collect();
            let kx: Vec<f64> = (0..dim)
                .map(|i| {
                    let lo = if i > 0 { x[i - 1] } else { 0.0 };
                    let hi = if i + 1 < dim { x[i + 1] } else { 0.0 };
                    k_d * x[i] + k_o * (lo + hi)
                })
                .collect();
            let next = linalg::dot(&x, &kx) / linalg::dot(&x, &mass_apply(&x));
            if (next - quot).abs() <= 1e-14 * next.abs().max(1.0) {
                quot = next;
                break;
            }
            quot = next;
        }
        out.push(quot);
    }
    Ok(out)
}

/// Smallest eigenvalue of the scaling-weighted stability operator on the
/// truncated cone `eps < r < 1`, computed as a genuine PDE eigenvalue on the
/// cylinder: `-d^2/dt^2 - Laplace_link + ((n-2)/2)^2 - |A|^2` with Dirichlet
/// walls in `t = log r`, discretized by second-order differences and solved
/// with the shifted Lanczos routine.
///
/// Supported cross-sections are the flat ones, where the link Laplacian is a
/// constant-coefficient operator on a torus or circle.
pub fn truncated_cone_lambda1(
    spec: &LinkSpec,
    eps: f64,
    grid: usize,
) -> Result<f64, SpectralError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SpectralError::BadParameter(format!("eps {eps} outside (0, 1)")));
    }
    let grid = grid.max(8);
    let n = spec.cone_dim();
    let c = (n as f64 - 2.0) / 2.0;
    let t0 = eps.ln();

    // Angular structure: inverse squared radii of the flat directions.
    let (angular, a2): (Vec<f64>, f64) = match *spec {
        LinkSpec::ProductOfSpheres { k: 1, l: 1, r1, r2 } => (
            vec![1.0 / (r1 * r1), 1.0 / (r2 * r2)],
            sff_norm_sq_closed(spec)?,
        ),
        LinkSpec::RoundSphere { dim: 1, .. } => (vec![1.0], 0.0),
        _ => {
            return Err(SpectralError::UnsupportedLink(format!(
                "truncated-cone eigensolve needs a flat link, got {spec:?}"
            )))
        }
    };

    let nt = grid;
    let na = grid;
    let ht = -t0 / (nt as f64 + 1.0);
    let ha = 2.0 * std::f64::consts::PI / na as f64;
    let shift = c * c - a2;
    let dims: Vec<usize> = std::iter::once(nt)
        .chain(angular.iter().map(|_| na))
        .collect();
    let total: usize = dims.iter().product();

    let strides: Vec<usize> = {
        let mut s = vec![1; dims.len()];
        for i in (0..dims.len() - 1).rev() {
            s[i] = s[i + 1] * dims[i + 1];
        }
        s
    };

    let apply = |x: &[f64], y: &mut [f64]| {
        for (idx, out) in y.iter_mut().enumerate() {
            let mut acc = shift * x[idx];
            // Dirichlet second difference in t.
            let it = idx / strides[0] % dims[0];
            let up = if it + 1 < nt { x[idx + strides[0]] } else { 0.0 };
            let dn = if it > 0 { x[idx - strides[0]] } else { 0.0 };
            acc += (2.0 * x[idx] - up - dn) / (ht * ht);
            // Periodic second differences in each angular direction.
            for (a, coeff) in angular.iter().enumerate() {
                let s = strides[a + 1];
                let ia = idx / s % na;
                let up = if ia + 1 < na { x[idx + s] } else { x[idx + s - na * s] };
                let dn = if ia > 0 { x[idx - s] } else { x[idx + (na - 1) * s] };
                acc += coeff * (2.0 * x[idx] - up - dn) / (ha * ha);
            }
            *out = acc;
        }
    };

    let opts = LanczosOptions::default();
    let res = linalg::sparse_smallest_eigs(total, &apply, 1, None, &opts)?;
    Ok(res.eigenvalues[0])
}
