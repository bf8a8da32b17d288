//! Homogeneous differential forms on cones over flat tori.
//!
//! The validation geometry is the torus family `T^d` (`d <= 3`) because its
//! exterior calculus is Fourier-exact: every operator acts mode by mode, so
//! `d`, the Hodge star, and both codifferential conventions are computed at
//! coefficient level with closed-form spectra as oracles. On top of that
//! calculus sit the cone-level identities: the normal form of a closed and
//! co-closed homogeneous 1-form, the eigenvalue obstruction that rules such
//! forms out below the critical homogeneity, and the radial decomposition of
//! homogeneity `-1` two-forms on four-dimensional cones together with the
//! anti-self-duality reduction. Sign conventions for the codifferential on
//! odd-dimensional links differ between sources; the module computes under
//! both and reports which one is the true L2 adjoint rather than silently
//! picking a side.

use crate::linalg::{self, SymMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormError {
    #[error("torus dimension must be 1, 2, or 3, got {0}")]
    BadDimension(usize),
    #[error("mode cutoff must be at least {min}, got {got}")]
    CutoffTooSmall { min: i64, got: i64 },
    #[error("degree {degree} out of range for dimension {dim}")]
    BadDegree { degree: usize, dim: usize },
    #[error("component {0} is not a strictly increasing tuple of axes")]
    BadComponent(String),
    #[error("mode {0} exceeds the cutoff {1}")]
    ModeOutOfRange(String, i64),
    #[error("forms live on different links")]
    LinkMismatch,
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

/// A link carrying a Fourier-exact de Rham complex.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscreteLink {
    /// Flat torus `T^dim` with modes `|k_i| <= cutoff` on every axis.
    FourierTorus { dim: usize, cutoff: i64 },
    /// Unit circle; the one-dimensional torus under another name.
    Circle { cutoff: i64 },
}

impl DiscreteLink {
    pub fn dim(&self) -> usize {
        match *self {
            DiscreteLink::FourierTorus { dim, .. } => dim,
            DiscreteLink::Circle { .. } => 1,
        }
    }

    pub fn cutoff(&self) -> i64 {
        match *self {
            DiscreteLink::FourierTorus { cutoff, .. } | DiscreteLink::Circle { cutoff } => cutoff,
        }
    }

    pub fn validate(&self) -> Result<(), FormError> {
        let d = self.dim();
        if d == 0 || d > 3 {
            return Err(FormError::BadDimension(d));
        }
        if self.cutoff() < 1 {
            return Err(FormError::CutoffTooSmall {
                min: 1,
                got: self.cutoff(),
            });
        }
        Ok(())
    }
}

/// Sign convention for the codifferential `delta = sign * (star d star)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaConvention {
    /// `delta = -star d star` on every degree.
    Uniform,
    /// Degree-dependent sign `(-1)^{dim(p+1)+1}` on p-forms, the L2 adjoint
    /// of `d`. On odd-dimensional links this flips the sign on even degrees.
    Adjoint,
}

fn delta_sign(convention: DeltaConvention, dim: usize, degree: usize) -> f64 {
    match convention {
        DeltaConvention::Uniform => -1.0,
        DeltaConvention::Adjoint => {
            if (dim * (degree + 1) + 1) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        }
    }
}

/// Strictly increasing `degree`-tuples of axes, in lexicographic order. The
/// component layout of every [`TorusForm`] follows this order.
fn component_tuples(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, dim: usize, degree: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == degree {
            out.push(cur.clone());
            return;
        }
        let need = degree - cur.len();
        for i in start..=(dim - need) {
            cur.push(i);
            rec(i + 1, dim, degree, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if degree <= dim {
        rec(0, dim, degree, &mut Vec::with_capacity(degree), &mut out);
    }
    out
}

/// Position of a sorted tuple in the lexicographic component order.
fn comp_position(sorted: &[usize], degree: usize) -> usize {
    match degree {
        1 => sorted[0],
        2 => sorted[0] + sorted[1] - 1,
        _ => 0,
    }
}

/// Sorts `idx` in place, returning the permutation sign, or `None` on a
/// repeated axis.
fn permutation_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in idx.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    Some(sign)
}

/// Differential form on a flat torus, stored as complex Fourier coefficients
/// per coordinate component. All constructors preserve the reality condition
/// `a_{-k} = conj(a_k)`, and the arithmetic keeps coefficients exact: modes
/// never couple, so identities like `d(d alpha) = 0` hold at the level of
/// floating-point bits, not just tolerances.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusForm {
    dim: usize,
    cutoff: i64,
    degree: usize,
    /// `comps[c]` holds the coefficients of the component on the c-th tuple
    /// of `component_tuples`, keyed by wavevector (unused axes stay zero).
    comps: Vec<BTreeMap<[i64; 3], Complex64>>,
}

const ZERO_C: Complex64 = Complex64::new(0.0, 0.0);

impl TorusForm {
    pub fn zero(link: &DiscreteLink, degree: usize) -> Result<TorusForm, FormError> {
        link.validate()?;
        let dim = link.dim();
        if degree > dim {
            return Err(FormError::BadDegree { degree, dim });
        }
        Ok(TorusForm {
            dim,
            cutoff: link.cutoff(),
            degree,
            comps: vec![BTreeMap::new(); component_tuples(dim, degree).len()],
        })
    }

    fn zero_like(&self, degree: usize) -> TorusForm {
        TorusForm {
            dim: self.dim,
            cutoff: self.cutoff,
            degree,
            comps: vec![BTreeMap::new(); component_tuples(self.dim, degree).len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn same_link(&self, other: &TorusForm) -> bool {
        self.dim == other.dim && self.cutoff == other.cutoff
    }

    /// Adds `cos_amp cos(k . theta) + sin_amp sin(k . theta)` to the
    /// component `dtheta^comp`.
    pub fn add_wave(
        &mut self,
        comp: &[usize],
        k: &[i64],
        cos_amp: f64,
        sin_amp: f64,
    ) -> Result<(), FormError> {
        if comp.len() != self.degree {
            return Err(FormError::BadDegree {
                degree: comp.len(),
                dim: self.dim,
            });
        }
        let mut idx = comp.to_vec();
        let sign = match permutation_sign(&mut idx) {
            Some(s) => s,
            None => return Err(FormError::BadComponent(format!("{comp:?}"))),
        };
        if idx.iter().any(|&i| i >= self.dim) {
            return Err(FormError::BadComponent(format!("{comp:?}")));
        }
        if k.len() != self.dim {
            return Err(FormError::BadParameter(format!(
                "wavevector {k:?} needs {} entries",
                self.dim
            )));
        }
        if k.iter().any(|&ki| ki.abs() > self.cutoff) {
            return Err(FormError::ModeOutOfRange(format!("{k:?}"), self.cutoff));
        }
        let mut key = [0i64; 3];
        key[..self.dim].copy_from_slice(k);
        let neg = [-key[0], -key[1], -key[2]];
        let half = Complex64::new(0.5 * cos_amp, -0.5 * sin_amp);
        let c = comp_position(&idx, self.degree);
        add_entry(&mut self.comps[c], key, sign * half);
        add_entry(&mut self.comps[c], neg, sign * half.conj());
        Ok(())
    }

    /// Cosine and sine amplitudes of the wave `k` on `dtheta^comp`.
    pub fn wave(&self, comp: &[usize], k: &[i64]) -> (f64, f64) {
        let mut idx = comp.to_vec();
        let Some(sign) = permutation_sign(&mut idx) else {
            return (0.0, 0.0);
        };
        let mut key = [0i64; 3];
        key[..self.dim.min(k.len())].copy_from_slice(&k[..self.dim.min(k.len())]);
        let c = comp_position(&idx, self.degree);
        let a = self.comps[c].get(&key).copied().unwrap_or(ZERO_C);
        if key == [0, 0, 0] {
            (sign * a.re, 0.0)
        } else {
            (sign * 2.0 * a.re, -sign * 2.0 * a.im)
        }
    }

    fn accumulate(&mut self, comp: &[usize], key: [i64; 3], value: Complex64) {
        if value == ZERO_C {
            return;
        }
        let mut idx = comp.to_vec();
        let Some(sign) = permutation_sign(&mut idx) else {
            return;
        };
        let c = comp_position(&idx, self.degree);
        add_entry(&mut self.comps[c], key, sign * value);
    }

    /// Component values at a point, in lexicographic component order.
    pub fn eval(&self, theta: &[f64]) -> Vec<f64> {
        assert_eq!(theta.len(), self.dim, "point dimension");
        self.comps
            .iter()
            .map(|map| {
                map.iter()
                    .map(|(k, a)| {
                        let phase: f64 = (0..self.dim).map(|i| k[i] as f64 * theta[i]).sum();
                        a.re * phase.cos() - a.im * phase.sin()
                    })
                    .sum()
            })
            .collect()
    }

    pub fn scale(&self, c: f64) -> TorusForm {
        let mut out = self.clone();
        if c == 0.0 {
            for map in &mut out.comps {
                map.clear();
            }
            return out;
        }
        for map in &mut out.comps {
            for v in map.values_mut() {
                *v *= c;
            }
        }
        out
    }

    pub fn add(&self, other: &TorusForm) -> Result<TorusForm, FormError> {
        if !self.same_link(other) || self.degree != other.degree {
            return Err(FormError::LinkMismatch);
        }
        let mut out = self.clone();
        for (c, map) in other.comps.iter().enumerate() {
            for (&k, &v) in map {
                add_entry(&mut out.comps[c], k, v);
            }
        }
        Ok(out)
    }

    /// Volume-normalized L2 pairing; by Parseval a plain coefficient sum.
    pub fn inner(&self, other: &TorusForm) -> Result<f64, FormError> {
        if !self.same_link(other) || self.degree != other.degree {
            return Err(FormError::LinkMismatch);
        }
        let mut total = 0.0;
        for (c, map) in self.comps.iter().enumerate() {
            for (k, a) in map {
                if let Some(b) = other.comps[c].get(k) {
                    total += (a * b.conj()).re;
                }
            }
        }
        Ok(total)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same form").sqrt()
    }

    pub fn max_coeff(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|m| m.values())
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|m| m.is_empty())
    }

    /// Exterior derivative, exact in the coefficients: each mode picks up a
    /// factor `i k_x` on the new axis. Panics on top-degree input, where the
    /// result has no valid representation (it is identically zero anyway).
    pub fn d(&self) -> TorusForm {
        assert!(self.degree < self.dim, "d of a top-degree form");
        let mut out = self.zero_like(self.degree + 1);
        let tuples = component_tuples(self.dim, self.degree);
        for (c, map) in self.comps.iter().enumerate() {
            for (&key, &a) in map {
                for x in 0..self.dim {
                    if tuples[c].contains(&x) || key[x] == 0 {
                        continue;
                    }
                    let mut comp = Vec::with_capacity(self.degree + 1);
                    comp.push(x);
                    comp.extend(&tuples[c]);
                    out.accumulate(&comp, key, Complex64::new(0.0, key[x] as f64) * a);
                }
            }
        }
        out
    }

    /// Hodge star for the flat metric with `dtheta^1 ^ ... ^ dtheta^dim`
    /// positive; a pure permutation-parity coefficient shuffle.
    pub fn star(&self) -> TorusForm {
        let mut out = self.zero_like(self.dim - self.degree);
        let tuples = component_tuples(self.dim, self.degree);
        for (c, map) in self.comps.iter().enumerate() {
            let complement: Vec<usize> =
                (0..self.dim).filter(|i| !tuples[c].contains(i)).collect();
            let mut joined: Vec<usize> = tuples[c].iter().chain(&complement).copied().collect();
            let sign = permutation_sign(&mut joined).expect("disjoint by construction");
            for (&key, &a) in map {
                out.accumulate(&complement, key, sign * a);
            }
        }
        out
    }

    /// Codifferential under the chosen sign convention. Panics on 0-forms.
    pub fn delta(&self, convention: DeltaConvention) -> TorusForm {
        assert!(self.degree > 0, "delta of a 0-form");
        let sign = delta_sign(convention, self.dim, self.degree);
        self.star().d().star().scale(sign)
    }

    /// The composite `d delta + delta d` under the given convention; with
    /// [`DeltaConvention::Adjoint`] this is the Hodge Laplacian.
    pub fn laplacian_with(&self, convention: DeltaConvention) -> TorusForm {
        let mut out = self.zero_like(self.degree);
        if self.degree > 0 {
            out = out
                .add(&self.delta(convention).d())
                .expect("degrees match");
        }
        if self.degree < self.dim {
            out = out
                .add(&self.d().delta(convention))
                .expect("degrees match");
        }
        out
    }

    pub fn laplacian(&self) -> TorusForm {
        self.laplacian_with(DeltaConvention::Adjoint)
    }

    /// Random real form with `waves` Gaussian wave insertions on modes with
    /// entries up to `max_mode`.
    pub fn random(
        link: &DiscreteLink,
        degree: usize,
        waves: usize,
        max_mode: i64,
        seed: u64,
    ) -> Result<TorusForm, FormError> {
        if max_mode < 0 || max_mode > link.cutoff() {
            return Err(FormError::ModeOutOfRange(
                format!("[{max_mode}]"),
                link.cutoff(),
            ));
        }
        if waves == 0 {
            return Err(FormError::BadParameter("need at least one wave".into()));
        }
        let mut out = TorusForm::zero(link, degree)?;
        let tuples = component_tuples(out.dim, degree);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = || {
            let a: f64 = rng.gen::<f64>().max(1e-12);
            let b: f64 = rng.gen();
            (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
        };
        for _ in 0..waves {
            let mut amps = Vec::with_capacity(2 + out.dim);
            for _ in 0..2 + out.dim {
                amps.push(gauss());
            }
            let mut rng2 = ChaCha8Rng::seed_from_u64(
                seed ^ (amps[0].to_bits().rotate_left(17)) ^ amps[1].to_bits(),
            );
            let c = rng2.gen_range(0..tuples.len());
            let k: Vec<i64> = (0..out.dim)
                .map(|_| rng2.gen_range(-max_mode..=max_mode))
                .collect();
            out.add_wave(&tuples[c], &k, amps[0], amps[1])?;
        }
        Ok(out)
    }
}

fn add_entry(map: &mut BTreeMap<[i64; 3], Complex64>, key: [i64; 3], value: Complex64) {
    if value == ZERO_C {
        return;
    }
    let entry = map.entry(key).or_insert(ZERO_C);
    *entry += value;
    if *entry == ZERO_C {
        map.remove(&key);
    }
}

/// Homogeneous 1-form `alpha = r^lambda eta dr + r^{lambda+1} omega` on the
/// cone over a flat torus; `eta` is a function on the link, `omega` a link
/// 1-form.
#[derive(Clone, Debug)]
pub struct HomogeneousOneForm {
    lambda: f64,
    eta: TorusForm,
    omega: TorusForm,
}

impl HomogeneousOneForm {
    pub fn new(lambda: f64, eta: TorusForm, omega: TorusForm) -> Result<Self, FormError> {
        if !lambda.is_finite() {
            return Err(FormError::BadParameter(format!(
                "homogeneity must be finite, got {lambda}"
            )));
        }
        if !eta.same_link(&omega) {
            return Err(FormError::LinkMismatch);
        }
        if eta.degree() != 0 {
            return Err(FormError::BadDegree {
                degree: eta.degree(),
                dim: eta.dim(),
            });
        }
        if omega.degree() != 1 {
            return Err(FormError::BadDegree {
                degree: omega.degree(),
                dim: omega.dim(),
            });
        }
        Ok(HomogeneousOneForm { lambda, eta, omega })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eta(&self) -> &TorusForm {
        &self.eta
    }

    pub fn omega(&self) -> &TorusForm {
        &self.omega
    }
}

/// Link-level residuals equivalent to the cone form being closed and
/// co-closed on an `n`-dimensional cone:
///
/// `d eta = (lambda+1) omega`, `d omega = 0`, `delta omega = (lambda+n-1) eta`.
///
/// The dimension enters only through the radial volume weight, so `n` may be
/// treated as a formal parameter on any validation link.
pub fn fhn_residuals(alpha: &HomogeneousOneForm, n: usize) -> (f64, f64, f64) {
    let lp1 = alpha.lambda + 1.0;
    let res1 = alpha
        .eta
        .d()
        .add(&alpha.omega.scale(-lp1))
        .expect("same link")
        .norm();
    let res2 = if alpha.omega.degree() < alpha.omega.dim() {
        alpha.omega.d().norm()
    } else {
        0.0
    };
    let res3 = alpha
        .omega
        .delta(DeltaConvention::Adjoint)
        .add(&alpha.eta.scale(-(alpha.lambda + n as f64 - 1.0)))
        .expect("same link")
        .norm();
    (res1, res2, res3)
}

/// The eigenvalue `(lambda+1)(lambda+n-1)` that the link Laplacian must
/// produce on `eta` for a closed and co-closed 1-form of homogeneity
/// `lambda` to exist on an `n`-dimensional cone.
pub fn hodge_eigenvalue_of_homogeneity(lambda: f64, n: usize) -> f64 {
    (lambda + 1.0) * (lambda + n as f64 - 1.0)
}

/// Closed-and-co-closed 1-form built from a single Fourier mode: with
/// `eta = cos(k.theta)` the homogeneity is pinned by
/// `(lambda+1)(lambda+n-1) = |k|^2`, and `omega = d eta / (lambda+1)`.
pub fn fhn_mode_solution(
    link: &DiscreteLink,
    k: &[i64],
    n: usize,
) -> Result<HomogeneousOneForm, FormError> {
    let k2: i64 = k.iter().map(|x| x * x).sum();
    if k2 == 0 {
        return Err(FormError::BadParameter(
            "mode solution needs a nonzero wavevector".into(),
        ));
    }
    let nf = n as f64;
    // Larger root of lambda^2 + n lambda + (n-1) - |k|^2 = 0.
    let lambda = 0.5 * (-nf + ((nf - 2.0) * (nf - 2.0) + 4.0 * k2 as f64).sqrt());
    let mut eta = TorusForm::zero(link, 0)?;
    eta.add_wave(&[], k, 1.0, 0.0)?;
    let omega = eta.d().scale(1.0 / (lambda + 1.0));
    HomogeneousOneForm::new(lambda, eta, omega)
}

/// Fourth-order central difference.
fn fd4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Offset grid over `[0, 2pi)^dim`, avoiding symmetry planes.
fn theta_grid(dim: usize, grid: usize) -> Vec<Vec<f64>> {
    let step = 2.0 * std::f64::consts::PI / grid as f64;
    let axis: Vec<f64> = (0..grid).map(|p| (p as f64 + 0.31) * step).collect();
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(out.len() * grid);
        for base in &out {
            for &x in &axis {
                let mut p = base.clone();
                p.push(x);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Cone-level closedness and co-closedness residuals of the assembled
/// 1-form, measured by finite differences of its coordinate components on a
/// product grid. Independent of the Fourier-side derivative path: only
/// pointwise evaluation is shared. The radial volume weight uses the formal
/// dimension `n`.
pub fn cone_grid_residuals(
    alpha: &HomogeneousOneForm,
    n: usize,
    grid: usize,
) -> Result<(f64, f64), FormError> {
    if grid < 2 {
        return Err(FormError::BadParameter(format!(
            "grid must have at least 2 points per axis, got {grid}"
        )));
    }
    let dim = alpha.eta.dim();
    let lambda = alpha.lambda;
    let h = 1e-3;
    let a_r = |r: f64, th: &[f64]| r.powf(lambda) * alpha.eta.eval(th)[0];
    let a_t = |r: f64, th: &[f64], i: usize| r.powf(lambda + 1.0) * alpha.omega.eval(th)[i];
    let fd_theta = |f: &dyn Fn(&[f64]) -> f64, th: &[f64], i: usize| {
        fd4(
            |x| {
                let mut t = th.to_vec();
                t[i] = x;
                f(&t)
            },
            th[i],
            h,
        )
    };
    let mut d_res = 0.0f64;
    let mut delta_res = 0.0f64;
    for th in theta_grid(dim, grid) {
        for r in [0.85, 1.3] {
            for i in 0..dim {
                let dri = fd4(|x| a_t(x, &th, i), r, h) - fd_theta(&|t| a_r(r, t), &th, i);
                d_res = d_res.max(dri.abs());
                for j in i + 1..dim {
                    let dij =
                        fd_theta(&|t| a_t(r, t, j), &th, i) - fd_theta(&|t| a_t(r, t, i), &th, j);
                    d_res = d_res.max(dij.abs());
                }
            }
            let mut div = fd4(|x| a_r(x, &th), r, h) + (n as f64 - 1.0) * a_r(r, &th) / r;
            for i in 0..dim {
                div += fd_theta(&|t| a_t(r, t, i), &th, i) / (r * r);
            }
            delta_res = delta_res.max(div.abs());
        }
    }
    Ok((d_res, delta_res))
}

/// Spectrum summary of the Hodge Laplacian on 1-forms.
#[derive(Clone, Debug, Serialize)]
pub struct HodgeSpectrumReport {
    pub link: DiscreteLink,
    pub min_eigenvalue: f64,
    /// Eigenvalues below 1e-8: the harmonic forms.
    pub kernel_dim: usize,
    /// Smallest eigenvalue above the kernel threshold.
    pub spectral_gap: f64,
}

/// Matrix of `op` in an orthogonal wave basis, via L2 projections. Errors if
/// the image of any basis form leaves the span, so a returned matrix is a
/// faithful restriction of the operator.
fn operator_block(
    basis: &[TorusForm],
    op: &dyn Fn(&TorusForm) -> TorusForm,
) -> Result<SymMatrix, FormError> {
    let n = basis.len();
    let mut norms = Vec::with_capacity(n);
    for b in basis {
        norms.push(b.inner(b).expect("same form"));
    }
    let mut raw = vec![0.0; n * n];
    for p in 0..n {
        let image = op(&basis[p]);
        let mut reconstructed = 0.0;
        for q in 0..n {
            let c = image.inner(&basis[q]).expect("same link") / norms[q];
            raw[q * n + p] = c;
            reconstructed += c * c * norms[q];
        }
        let total = image.inner(&image).expect("same form");
        if (total - reconstructed).abs() > 1e-9 * (1.0 + total) {
            return Err(FormError::BadParameter(
                "operator leaves the wave block".into(),
            ));
        }
    }
    for p in 0..n {
        for q in 0..p {
            if (raw[p * n + q] - raw[q * n + p]).abs() > 1e-9 {
                return Err(FormError::BadParameter(
                    "operator block is not symmetric".into(),
                ));
            }
        }
    }
    Ok(SymMatrix::from_fn(n, |i, j| {
        0.5 * (raw[i * n + j] + raw[j * n + i])
    }))
}

fn lex_positive(k: &[i64; 3]) -> bool {
    for &x in k {
        if x != 0 {
            return x > 0;
        }
    }
    false
}

/// One representative per `{k, -k}` pair of nonzero modes.
fn half_space_modes(dim: usize, cutoff: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let range = |active: bool| if active { -cutoff..=cutoff } else { 0..=0 };
    for k0 in range(dim >= 1) {
        for k1 in range(dim >= 2) {
            for k2 in range(dim >= 3) {
                let k = [k0, k1, k2];
                if lex_positive(&k) {
                    out.push(k);
                }
            }
        }
    }
    out
}

/// Wave basis of 1-forms for one mode block: every coordinate component
/// times the cosine and (for nonzero modes) sine of `k . theta`.
fn one_form_block(link: &DiscreteLink, k: &[i64; 3]) -> Result<Vec<TorusForm>, FormError> {
    let dim = link.dim();
    let phases: &[(f64, f64)] = if k == &[0, 0, 0] {
        &[(1.0, 0.0)]
    } else {
        &[(1.0, 0.0), (0.0, 1.0)]
    };
    let mut basis = Vec::new();
    for &(c, s) in phases {
        for j in 0..dim {
            let mut f = TorusForm::zero(link, 1)?;
            f.add_wave(&[j], &k[..dim], c, s)?;
            basis.push(f);
        }
    }
    Ok(basis)
}

/// Assembles the Hodge Laplacian on 1-forms block by block (the flat-torus
/// blocks are the `{k, -k}` mode pairs) and reports its spectrum edge.
pub fn hodge_psd_check(link: &DiscreteLink) -> Result<HodgeSpectrumReport, FormError> {
    link.validate()?;
    let mut eigenvalues: Vec<f64> = Vec::new();
    let mut modes = vec![[0i64; 3]];
    modes.extend(half_space_modes(link.dim(), link.cutoff()));
    for k in modes {
        let basis = one_form_block(link, &k)?;
        let block = operator_block(&basis, &|f| f.laplacian())?;
        eigenvalues.extend(linalg::sym_eig(&block).values);
    }
    eigenvalues.sort_by(f64::total_cmp);
    let kernel_dim = eigenvalues.iter().filter(|&&v| v.abs() < 1e-8).count();
    let spectral_gap = eigenvalues
        .iter()
        .copied()
        .find(|v| v.abs() >= 1e-8)
        .unwrap_or(f64::INFINITY);
    Ok(HodgeSpectrumReport {
        link: *link,
        min_eigenvalue: eigenvalues[0],
        kernel_dim,
        spectral_gap,
    })
}

/// Unit vectors `u, v` with `(u, v, k/|k|)` a right-handed orthonormal triple.
fn transverse_pair(k: &[i64; 3]) -> ([f64; 3], [f64; 3]) {
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let klen = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
    let khat = [kf[0] / klen, kf[1] / klen, kf[2] / klen];
    let m = (0..3)
        .min_by(|&a, &b| khat[a].abs().total_cmp(&khat[b].abs()))
        .expect("three axes");
    let mut u = [0.0; 3];
    u[m] = 1.0;
    let dot = u[0] * khat[0] + u[1] * khat[1] + u[2] * khat[2];
    for i in 0..3 {
        u[i] -= dot * khat[i];
    }
    let ulen = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    for x in &mut u {
        *x /= ulen;
    }
    let v = [
        khat[1] * u[2] - khat[2] * u[1],
        khat[2] * u[0] - khat[0] * u[2],
        khat[0] * u[1] - khat[1] * u[0],
    ];
    (u, v)
}

/// Eigenvalues of `eta -> star d eta` on co-closed 1-forms of a
/// three-dimensional torus link, sorted by absolute value (ties negative
/// first) and truncated to `count`. Harmonic forms are excluded: the curl
/// operator is diagonalized on the transverse two-plane of each nonzero mode.
pub fn curl_spectrum(link: &DiscreteLink, count: usize) -> Result<Vec<f64>, FormError> {
    link.validate()?;
    if link.dim() != 3 {
        return Err(FormError::BadDimension(link.dim()));
    }
    if link.cutoff() < 2 {
        return Err(FormError::CutoffTooSmall {
            min: 2,
            got: link.cutoff(),
        });
    }
    let mut eigs: Vec<f64> = Vec::new();
    for k in half_space_modes(3, link.cutoff()) {
        let (u, v) = transverse_pair(&k);
        let mut basis = Vec::with_capacity(4);
        for &(c, s) in &[(1.0, 0.0), (0.0, 1.0)] {
            for w in [&u, &v] {
                let mut f = TorusForm::zero(link, 1)?;
                for j in 0..3 {
                    if w[j] != 0.0 {
                        f.add_wave(&[j], &k, c * w[j], s * w[j])?;
                    }
                }
                basis.push(f);
            }
        }
        let block = operator_block(&basis, &|f| f.d().star())?;
        eigs.extend(linalg::sym_eig(&block).values);
    }
    eigs.sort_by(|a, b| (a.abs(), *a).partial_cmp(&(b.abs(), *b)).expect("finite"));
    eigs.truncate(count);
    Ok(eigs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstructionVerdict {
    NoneExists,
    WitnessFound,
}

/// Outcome of the critical-homogeneity 1-form search.
#[derive(Clone, Debug, Serialize)]
pub struct ObstructionReport {
    pub link: DiscreteLink,
    pub n: usize,
    pub lambda: f64,
    pub verdict: ObstructionVerdict,
    pub witness_modes: Vec<String>,
    /// Link eigenvalue `(lambda+1)(lambda+n-1)` a solution would require.
    pub required_eigenvalue: f64,
    pub min_hodge_eigenvalue: f64,
    #[serde(skip_serializing)]
    pub witnesses: Vec<HomogeneousOneForm>,
}

/// Searches for a closed and co-closed 1-form of the critical homogeneity
/// `lambda = (2-n)/2` on the cone over `link`.
///
/// For `n > 4` the required link eigenvalue is negative while the Hodge
/// Laplacian is positive semidefinite, so no candidate exists. For `n = 4`
/// the critical homogeneity is `-1`, where solutions are exactly the
/// harmonic link 1-forms; each reported witness is re-verified through its
/// residuals before it is returned.
///
/// Scope: every torus in the Fourier family carries harmonic 1-forms, so
/// the `n = 4` branch always finds witnesses here. A simply connected link
/// would come back `NoneExists` through the same harmonic test, but no such
/// link exists in this family, and the circle sits below the dimension
/// threshold.
pub fn critical_oneform_obstruction(
    link: &DiscreteLink,
    n: usize,
) -> Result<ObstructionReport, FormError> {
    link.validate()?;
    if n < 4 {
        return Err(FormError::BadParameter(format!(
            "the obstruction argument needs n >= 4, got {n}"
        )));
    }
    let lambda = (2.0 - n as f64) / 2.0;
    let required = hodge_eigenvalue_of_homogeneity(lambda, n);
    let hodge = hodge_psd_check(link)?;
    let mut witness_modes = Vec::new();
    let mut witnesses = Vec::new();
    if n == 4 {
        // lambda = -1 forces eta = 0, leaving omega harmonic; the flat torus
        // carries one constant 1-form per axis.
        for j in 0..link.dim() {
            let mut omega = TorusForm::zero(link, 1)?;
            omega.add_wave(&[j], &vec![0; link.dim()], 1.0, 0.0)?;
            let eta = TorusForm::zero(link, 0)?;
            let candidate = HomogeneousOneForm::new(lambda, eta, omega)?;
            let (r1, r2, r3) = fhn_residuals(&candidate, n);
            if r1.max(r2).max(r3) <= 1e-10 {
                witness_modes.push(format!("dtheta_{}", j + 1));
                witnesses.push(candidate);
            }
        }
    }
    let verdict = if witnesses.is_empty() {
        ObstructionVerdict::NoneExists
    } else {
        ObstructionVerdict::WitnessFound
    };
    Ok(ObstructionReport {
        link: *link,
        n,
        lambda,
        verdict,
        witness_modes,
        required_eigenvalue: required,
        min_hodge_eigenvalue: hodge.min_eigenvalue,
        witnesses,
    })
}

/// Homogeneity `-1` two-form `alpha = dr ^ eta + r omega` on the
/// four-dimensional cone over a three-torus; `eta` is a link 1-form, `omega`
/// a link 2-form.
#[derive(Clone, Debug)]
pub struct HomogeneousTwoForm {
    eta: TorusForm,
    omega: TorusForm,
}

impl HomogeneousTwoForm {
    pub fn new(eta: TorusForm, omega: TorusForm) -> Result<Self, FormError> {
        if eta.dim() != 3 {
            return Err(FormError::BadDimension(eta.dim()));
        }
        if !eta.same_link(&omega) {
            return Err(FormError::LinkMismatch);
        }
        if eta.degree() != 1 {
            return Err(FormError::BadDegree {
                degree: eta.degree(),
                dim: 3,
            });
        }
        if omega.degree() != 2 {
            return Err(FormError::BadDegree {
                degree: omega.degree(),
                dim: 3,
            });
        }
        Ok(HomogeneousTwoForm { eta, omega })
    }

    pub fn eta(&self) -> &TorusForm {
        &self.eta
    }

    pub fn omega(&self) -> &TorusForm {
        &self.omega
    }
}

/// Pieces of `d(dr ^ eta + r omega) = dr ^ (omega - d eta) + r d omega`.
#[derive(Clone, Debug)]
pub struct ConeDerivativePieces {
    pub d_eta: TorusForm,
    pub omega: TorusForm,
    pub d_omega: TorusForm,
}

impl ConeDerivativePieces {
    /// Coefficient of `dr ^ (.)` in `d alpha`.
    pub fn radial_part(&self) -> TorusForm {
        self.omega
            .add(&self.d_eta.scale(-1.0))
            .expect("same link")
    }

    /// Zero exactly when the cone form is closed.
    pub fn closedness_residual(&self) -> f64 {
        self.radial_part().norm().max(self.d_omega.norm())
    }
}

pub fn cone_d_2form(alpha: &HomogeneousTwoForm) -> ConeDerivativePieces {
    ConeDerivativePieces {
        d_eta: alpha.eta.d(),
        omega: alpha.omega.clone(),
        d_omega: alpha.omega.d(),
    }
}

/// Pieces of `star alpha = dr ^ star omega + r star eta` for the cone metric
/// `dr^2 + r^2 g`, oriented by `dr` first.
#[derive(Clone, Debug)]
pub struct ConeStarPieces {
    pub star_omega: TorusForm,
    pub star_eta: TorusForm,
}

impl ConeStarPieces {
    /// Residual of `star alpha = -alpha`, which reduces to
    /// `star eta = -omega` (equivalently `star omega = -eta`).
    pub fn asd_residual(&self, alpha: &HomogeneousTwoForm) -> f64 {
        let a = self
            .star_eta
            .add(&alpha.omega)
            .expect("same link")
            .norm();
        let b = self.star_omega.add(&alpha.eta).expect("same link").norm();
        a.max(b)
    }
}

pub fn cone_star_2form(alpha: &HomogeneousTwoForm) -> ConeStarPieces {
    ConeStarPieces {
        star_omega: alpha.omega.star(),
        star_eta: alpha.eta.star(),
    }
}

/// Residuals of the constraint system a closed anti-self-dual homogeneity
/// `-1` two-form must satisfy: `omega = d eta`, `star eta = -omega`, hence
/// `d eta = -star eta`. The self-dual branch residual is reported alongside
/// so a sign flip in the star convention is visible rather than silent.
#[derive(Clone, Debug, Serialize)]
pub struct AsdReductionReport {
    pub omega_minus_d_eta: f64,
    pub star_eta_plus_omega: f64,
    pub d_eta_plus_star_eta: f64,
    /// Diagnostic: residual of the opposite (self-dual) pairing.
    pub star_eta_minus_omega: f64,
    pub valid: bool,
}

pub fn asd_closed_reduction(alpha: &HomogeneousTwoForm) -> AsdReductionReport {
    let d_eta = alpha.eta.d();
    let star_eta = alpha.eta.star();
    let omega_minus_d_eta = alpha
        .omega
        .add(&d_eta.scale(-1.0))
        .expect("same link")
        .norm();
    let star_eta_plus_omega = star_eta.add(&alpha.omega).expect("same link").norm();
    let star_eta_minus_omega = star_eta
        .add(&alpha.omega.scale(-1.0))
        .expect("same link")
        .norm();
    let d_eta_plus_star_eta = d_eta.add(&star_eta).expect("same link").norm();
    let valid = omega_minus_d_eta <= 1e-8
        && star_eta_plus_omega <= 1e-8
        && d_eta_plus_star_eta <= 1e-8;
    AsdReductionReport {
        omega_minus_d_eta,
        star_eta_plus_omega,
        d_eta_plus_star_eta,
        star_eta_minus_omega,
        valid,
    }
}

/// The unit-curl eigenfield `cos(t3) dt1 + sin(t3) dt2`, satisfying
/// `star d eta = -eta` exactly.
pub fn beltrami_field(link: &DiscreteLink) -> Result<TorusForm, FormError> {
    if link.dim() != 3 {
        return Err(FormError::BadDimension(link.dim()));
    }
    let mut eta = TorusForm::zero(link, 1)?;
    eta.add_wave(&[0], &[0, 0, 1], 1.0, 0.0)?;
    eta.add_wave(&[1], &[0, 0, 1], 0.0, 1.0)?;
    Ok(eta)
}

fn eps3(a: usize, b: usize, c: usize) -> f64 {
    let mut idx = [a, b, c];
    permutation_sign(&mut idx).unwrap_or(0.0)
}

/// Largest difference between [`cone_d_2form`] and centered finite
/// differences of the raw cone components on an `(r, theta)` grid.
pub fn cone_d_grid_residual(
    alpha: &HomogeneousTwoForm,
    grid: usize,
) -> Result<f64, FormError> {
    if grid < 2 {
        return Err(FormError::BadParameter(format!(
            "grid must have at least 2 points per axis, got {grid}"
        )));
    }
    let pieces = cone_d_2form(alpha);
    let radial = pieces.radial_part();
    let h = 1e-3;
    // Raw components: alpha_{r a} = eta_a(theta), alpha_{ab} = r omega_{ab}.
    let comp_ra = |_r: f64, th: &[f64], a: usize| alpha.eta.eval(th)[a];
    let comp_ab = |r: f64, th: &[f64], a: usize, b: usize| {
        if a == b {
            return 0.0;
        }
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        sign * r * alpha.omega.eval(th)[comp_position(&[lo, hi], 2)]
    };
    let fd_theta = |f: &dyn Fn(&[f64]) -> f64, th: &[f64], i: usize| {
        fd4(
            |x| {
                let mut t = th.to_vec();
                t[i] = x;
                f(&t)
            },
            th[i],
            h,
        )
    };
    let mut worst = 0.0f64;
    for th in theta_grid(3, grid) {
        for r in [0.85, 1.3] {
            // (d alpha)_{r a b} = d_r alpha_{ab} - d_a alpha_{rb} + d_b alpha_{ra}
            for a in 0..3 {
                for b in a + 1..3 {
                    let fd = fd4(|x| comp_ab(x, &th, a, b), r, h)
                        - fd_theta(&|t| comp_ra(r, t, b), &th, a)
                        + fd_theta(&|t| comp_ra(r, t, a), &th, b);
                    let formula = radial.eval(&th)[comp_position(&[a, b], 2)];
                    worst = worst.max((fd - formula).abs());
                }
            }
            // (d alpha)_{123} = sum of cyclic theta-derivatives
            let fd = fd_theta(&|t| comp_ab(r, t, 1, 2), &th, 0)
                - fd_theta(&|t| comp_ab(r, t, 0, 2), &th, 1)
                + fd_theta(&|t| comp_ab(r, t, 0, 1), &th, 2);
            let formula = r * pieces.d_omega.eval(&th)[0];
            worst = worst.max((fd - formula).abs());
        }
    }
    Ok(worst)
}

/// Largest difference between [`cone_star_2form`] and the coordinate Hodge
/// star computed from the metric determinant and the permutation symbol.
pub fn cone_star_grid_residual(
    alpha: &HomogeneousTwoForm,
    grid: usize,
) -> Result<f64, FormError> {
    if grid < 2 {
        return Err(FormError::BadParameter(format!(
            "grid must have at least 2 points per axis, got {grid}"
        )));
    }
    let pieces = cone_star_2form(alpha);
    let mut worst = 0.0f64;
    for th in theta_grid(3, grid) {
        for r in [0.85, 1.3] {
            let eta_v = alpha.eta.eval(&th);
            let omega_v = alpha.omega.eval(&th);
            let alpha_ab = |a: usize, b: usize| {
                if a == b {
                    return 0.0;
                }
                let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
                sign * r * omega_v[comp_position(&[lo, hi], 2)]
            };
            // (star alpha)_{r a} = (1/2) eps_{abc} alpha_{bc} / r
            let star_omega_v = pieces.star_omega.eval(&th);
            for a in 0..3 {
                let mut direct = 0.0;
                for b in 0..3 {
                    for c in 0..3 {
                        direct += 0.5 * eps3(a, b, c) * alpha_ab(b, c) / r;
                    }
                }
                worst = worst.max((direct - star_omega_v[a]).abs());
            }
            // (star alpha)_{a b} = r eps_{abc} eta_c
            let star_eta_v = pieces.star_eta.eval(&th);
            for a in 0..3 {
                for b in a + 1..3 {
                    let mut direct = 0.0;
                    for c in 0..3 {
                        direct += r * eps3(a, b, c) * eta_v[c];
                    }
                    let formula = r * star_eta_v[comp_position(&[a, b], 2)];
                    worst = worst.max((direct - formula).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Codifferential signs per degree under both conventions.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeltaSignRow {
    pub degree: usize,
    pub uniform: f64,
    pub adjoint: f64,
}

/// Chain and direct outputs on a unit-curl eigenfield.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerWitness {
    /// `|star d eta + eta| / |eta|` of the field used.
    pub beltrami_residual: f64,
    /// Rayleigh coefficient of `(d delta + delta d) eta` against `eta` under
    /// the uniform convention.
    pub uniform_chain: f64,
    /// Same under the adjoint convention.
    pub adjoint_chain: f64,
    /// Rayleigh coefficient of the Hodge Laplacian itself.
    pub direct_laplacian: f64,
}

/// Side-by-side record of the codifferential sign conventions and their
/// consequences for the eigenvalue chain on a curl eigenfield.
#[derive(Clone, Debug, Serialize)]
pub struct ConventionLedger {
    pub link: DiscreteLink,
    pub delta_sign_table: Vec<DeltaSignRow>,
    /// Largest adjointness defect of each convention over random form pairs.
    pub uniform_adjointness_defect: f64,
    pub adjoint_adjointness_defect: f64,
    pub adjointness_consistent: DeltaConvention,
    /// Absent when the link carries no curl eigenfield (dimension below 3).
    pub witness: Option<LedgerWitness>,
}

/// Evaluates the composite `d delta + delta d` on a curl eigenfield under
/// both codifferential conventions and checks each convention's adjointness
/// on random pairs. On a three-torus the uniform convention returns `-eta`
/// on a field with `star d eta = -eta` while the adjoint convention and the
/// direct Hodge Laplacian return `+eta`; the ledger records all three.
pub fn neg1_ledger(link: &DiscreteLink) -> Result<ConventionLedger, FormError> {
    link.validate()?;
    let dim = link.dim();
    let delta_sign_table: Vec<DeltaSignRow> = (1..=dim)
        .map(|p| DeltaSignRow {
            degree: p,
            uniform: delta_sign(DeltaConvention::Uniform, dim, p),
            adjoint: delta_sign(DeltaConvention::Adjoint, dim, p),
        })
        .collect();
    let max_mode = link.cutoff().min(2);
    let defect = |convention: DeltaConvention| -> Result<f64, FormError> {
        let mut worst = 0.0f64;
        for p in 1..=dim {
            for trial in 0..24 {
                let seed = 1000 * p as u64 + trial;
                let a = TorusForm::random(link, p - 1, 5, max_mode, 2 * seed)?;
                let b = TorusForm::random(link, p, 5, max_mode, 2 * seed + 1)?;
                let lhs = if p - 1 < dim {
                    a.d().inner(&b)?
                } else {
                    0.0
                };
                let rhs = a.inner(&b.delta(convention))?;
                worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
            }
        }
        Ok(worst)
    };
    let uniform_defect = defect(DeltaConvention::Uniform)?;
    let adjoint_defect = defect(DeltaConvention::Adjoint)?;
    let consistent = if adjoint_defect <= uniform_defect {
        DeltaConvention::Adjoint
    } else {
        DeltaConvention::Uniform
    };
    let witness = if dim == 3 {
        let eta = beltrami_field(link)?;
        let norm2 = eta.inner(&eta)?;
        let beltrami_residual = eta.d().star().add(&eta)?.norm() / norm2.sqrt();
        let coefficient = |f: &TorusForm| -> Result<f64, FormError> { Ok(f.inner(&eta)? / norm2) };
        Some(LedgerWitness {
            beltrami_residual,
            uniform_chain: coefficient(&eta.laplacian_with(DeltaConvention::Uniform))?,
            adjoint_chain: coefficient(&eta.laplacian_with(DeltaConvention::Adjoint))?,
            direct_laplacian: coefficient(&eta.laplacian())?,
        })
    } else {
        None
    };
    Ok(ConventionLedger {
        link: *link,
        delta_sign_table,
        uniform_adjointness_defect: uniform_defect,
        adjoint_adjointness_defect: adjoint_defect,
        adjointness_consistent: consistent,
        witness,
    })
}
