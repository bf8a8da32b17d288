//! Homogeneous holomorphic polynomials and their zero cones.
//!
//! A homogeneous `f` in `m` complex variables cuts out a cone
//! `f^{-1}(0)` in `R^{2m}`. The real and imaginary parts `u, v` of `f`
//! and their gradients drive the Jacobi-field construction in
//! [`crate::variations`]; this module owns the polynomial arithmetic, the
//! identification of `C^m` with interleaved real coordinates
//! `(x_1, y_1, ..., x_m, y_m)`, Newton retraction onto the link
//! `f^{-1}(0) /\ S^{2m-1}`, and the sampling probe for the isolated
//! singularity hypothesis.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HoloError {
    #[error("polynomial has no terms")]
    Empty,
    #[error("monomial of degree {got} in a polynomial of degree {want}: not homogeneous")]
    NotHomogeneous { got: usize, want: usize },
    #[error("exponent list of length {got} for {want} variables")]
    BadMonomial { got: usize, want: usize },
    #[error("need at least {want} trials, got {got}")]
    TooFewTrials { got: usize, want: usize },
    #[error("gradient norm {0:.3e} vanishes on the zero set: the singularity is not isolated")]
    HypothesisViolated(f64),
    #[error("point is too close to the singular set: |grad f| = {0:.3e}")]
    NearSingular(f64),
    #[error("all retraction seeds failed to converge")]
    RetractionFailed,
}

/// Homogeneous polynomial in `m` complex variables, stored as a map from
/// exponent vectors to coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct HolomorphicPolynomial {
    vars: usize,
    degree: usize,
    terms: BTreeMap<Vec<u32>, Complex64>,
}

impl HolomorphicPolynomial {
    pub fn new(
        vars: usize,
        terms: &[(Vec<u32>, Complex64)],
    ) -> Result<HolomorphicPolynomial, HoloError> {
        let mut map: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (expo, coeff) in terms {
            if expo.len() != vars {
                return Err(HoloError::BadMonomial { got: expo.len(), want: vars });
            }
            if coeff.norm_sqr() == 0.0 {
                continue;
            }
            *map.entry(expo.clone()).or_insert(Complex64::new(0.0, 0.0)) += coeff;
        }
        map.retain(|_, c| c.norm_sqr() != 0.0);
        let mut degrees = map.keys().map(|e| e.iter().sum::<u32>() as usize);
        let degree = degrees.next().ok_or(HoloError::Empty)?;
        for d in degrees {
            if d != degree {
                return Err(HoloError::NotHomogeneous { got: d, want: degree });
            }
        }
        Ok(HolomorphicPolynomial { vars, degree, terms: map })
    }

    /// `z_1^2 + z_2^2 + z_3^2`, the default complex cone.
    pub fn quadric() -> HolomorphicPolynomial {
        HolomorphicPolynomial::fermat(3, 2)
    }

    /// `z_1^d + ... + z_m^d`.
    pub fn fermat(vars: usize, d: u32) -> HolomorphicPolynomial {
        let one = Complex64::new(1.0, 0.0);
        let terms: Vec<(Vec<u32>, Complex64)> = (0..vars)
            .map(|j| {
                let mut e = vec![0u32; vars];
                e[j] = d;
                (e, one)
            })
            .collect();
        HolomorphicPolynomial::new(vars, &terms).expect("a diagonal form is homogeneous")
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Complex dimension of the cone `f^{-1}(0)`.
    pub fn cone_complex_dim(&self) -> usize {
        self.vars - 1
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.vars);
        let mut acc = Complex64::new(0.0, 0.0);
        for (expo, coeff) in &self.terms {
            let mut term = *coeff;
            for (zj, &e) in z.iter().zip(expo) {
                term *= zj.powu(e);
            }
            acc += term;
        }
        acc
    }

    /// Complex gradient `(df/dz_1, ..., df/dz_m)`.
    pub fn gradient(&self, z: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(z.len(), self.vars);
        let mut out = vec![Complex64::new(0.0, 0.0); self.vars];
        for (expo, coeff) in &self.terms {
            for j in 0..self.vars {
                if expo[j] == 0 {
                    continue;
                }
                let mut term = *coeff * expo[j] as f64;
                for (i, (zi, &e)) in z.iter().zip(expo).enumerate() {
                    let e = if i == j { e - 1 } else { e };
                    term *= zi.powu(e);
                }
                out[j] += term;
            }
        }
        out
    }

    /// `(u, v) = (Re f, Im f)` at a point of `R^{2m}`.
    pub fn eval_real(&self, p: &[f64]) -> (f64, f64) {
        let f = self.eval(&to_complex(p));
        (f.re, f.im)
    }

    /// Gradient of `u = Re f` in the interleaved real coordinates.
    pub fn grad_u(&self, p: &[f64]) -> Vec<f64> {
        let g = self.gradient(&to_complex(p));
        let mut out = Vec::with_capacity(2 * self.vars);
        for gj in &g {
            out.push(gj.re);
            out.push(-gj.im);
        }
        out
    }

    /// Gradient of `v = Im f` in the interleaved real coordinates.
    pub fn grad_v(&self, p: &[f64]) -> Vec<f64> {
        let g = self.gradient(&to_complex(p));
        let mut out = Vec::with_capacity(2 * self.vars);
        for gj in &g {
            out.push(gj.im);
            out.push(gj.re);
        }
        out
    }

    /// Pull a point onto `f^{-1}(0) /\ S^{2m-1}` by alternating complex
    /// Newton steps with renormalization. Fails if the gradient degenerates
    /// along the way or the budget runs out.
    pub fn retract_to_link(&self, start: &[f64], tol: f64) -> Result<Vec<f64>, HoloError> {
        let mut z = to_complex(start);
        let norm = |w: &[Complex64]| w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let nz = norm(&z);
        if nz == 0.0 {
            return Err(HoloError::RetractionFailed);
        }
        for zj in z.iter_mut() {
            *zj /= nz;
        }
        for _ in 0..200 {
            let f = self.eval(&z);
            if f.norm() <= tol {
                return Ok(to_real(&z));
            }
            let g = self.gradient(&z);
            let g2: f64 = g.iter().map(|c| c.norm_sqr()).sum();
            if g2 < 1e-100 {
                return Err(HoloError::NearSingular(g2.sqrt()));
            }
            for (zj, gj) in z.iter_mut().zip(&g) {
                *zj -= f * gj.conj() / g2;
            }
            let nz = norm(&z);
            for zj in z.iter_mut() {
                *zj /= nz;
            }
        }
        Err(HoloError::RetractionFailed)
    }
}

/// Residual of the gradient rotation identity `grad v = J grad u`, with both
/// sides from the analytic complex gradient.
pub fn cauchy_riemann_check(f: &HolomorphicPolynomial, p: &[f64]) -> f64 {
    let j = crate::exterior::ComplexStructure::new(2 * f.vars());
    let ju = j.apply(&f.grad_u(p));
    f.grad_v(p)
        .iter()
        .zip(&ju)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Outcome of sampling the link for gradient degeneracies.
#[derive(Clone, Debug)]
pub struct SingularityProbe {
    /// Smallest gradient norm seen over the converged samples.
    pub min_grad: f64,
    /// Number of samples that converged onto the link.
    pub samples: usize,
    /// Seeds whose retraction failed, skipped and counted.
    pub skipped: usize,
    /// Link point realizing the minimum.
    pub argmin: Vec<f64>,
}

/// Samples the link `f^{-1}(0) /\ S^{2m-1}` from random seeds and reports
/// the smallest gradient norm found, as a heuristic certificate that the
/// cone's singularity is isolated at the origin. A vanishing gradient on the
/// zero set refutes the hypothesis and errors out.
pub fn isolated_singularity_probe(
    f: &HolomorphicPolynomial,
    trials: usize,
    seed: u64,
) -> Result<SingularityProbe, HoloError> {
    if trials < 100 {
        return Err(HoloError::TooFewTrials { got: trials, want: 100 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_grad = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut samples = 0usize;
    let mut skipped = 0usize;
    for _ in 0..trials {
        // Gaussian seed by Box-Muller, coordinate-wise.
        let start: Vec<f64> = (0..2 * f.vars())
            .map(|_| {
                let a: f64 = rng.gen::<f64>().max(1e-12);
                let b: f64 = rng.gen();
                (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
            })
            .collect();
        let p = match f.retract_to_link(&start, 1e-12) {
            Ok(p) => p,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        samples += 1;
        let g = f.gradient(&to_complex(&p));
        let gn = g.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if gn < min_grad {
            min_grad = gn;
            argmin = p;
        }
    }
    if samples == 0 {
        return Err(HoloError::RetractionFailed);
    }
    if min_grad < 1e-4 {
        return Err(HoloError::HypothesisViolated(min_grad));
    }
    Ok(SingularityProbe { min_grad, samples, skipped, argmin })
}

/// Interleaved real coordinates of a complex vector.
pub fn to_real(z: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * z.len());
    for c in z {
        out.push(c.re);
        out.push(c.im);
    }
    out
}

/// Complex vector from interleaved real coordinates.
pub fn to_complex(p: &[f64]) -> Vec<Complex64> {
    assert!(p.len() % 2 == 0, "odd real dimension cannot hold complex coordinates");
    p.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}
