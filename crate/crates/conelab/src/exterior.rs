//! Sparse exterior algebra on low-dimensional model spaces.
//!
//! A [`KForm`] stores its nonzero coefficients keyed by strictly increasing
//! index tuples; insertion canonicalizes arbitrary tuples by sorting with the
//! permutation sign. Indices are 0-based throughout.

use crate::linalg::{spd_solve, LinalgError, SymMatrix};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExteriorError {
    #[error("ambient dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("degree {degree} exceeds ambient dimension {dim}")]
    BadDegree { degree: usize, dim: usize },
    #[error("index {0} out of range for ambient dimension {1}")]
    IndexOutOfRange(usize, usize),
    #[error("expected {expected} vectors, got {got}")]
    FrameSize { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Alternating k-form with sparse coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct KForm {
    ambient_dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<u8>, f64>,
}

/// Sorts `idx`, returning the permutation sign, or `None` on a repeated index.
fn canonicalize(idx: &mut Vec<u8>) -> Option<f64> {
    let mut sign = 1.0;
    // Insertion sort, counting swaps; fine for k <= 8.
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

impl KForm {
    pub fn zero(ambient_dim: usize, degree: usize) -> Result<Self, ExteriorError> {
        if degree > ambient_dim {
            return Err(ExteriorError::BadDegree {
                degree,
                dim: ambient_dim,
            });
        }
        Ok(KForm {
            ambient_dim,
            degree,
            coeffs: BTreeMap::new(),
        })
    }

    /// Single basis monomial `c dx^{i1} ^ ... ^ dx^{ik}` (indices in any order).
    pub fn monomial(ambient_dim: usize, indices: &[usize], c: f64) -> Result<Self, ExteriorError> {
        let mut f = KForm::zero(ambient_dim, indices.len())?;
        f.add_term(indices, c)?;
        Ok(f)
    }

    /// Adds `c dx^I`, canonicalizing the (possibly unsorted) tuple.
    pub fn add_term(&mut self, indices: &[usize], c: f64) -> Result<(), ExteriorError> {
        if indices.len() != self.degree {
            return Err(ExteriorError::BadDegree {
                degree: indices.len(),
                dim: self.ambient_dim,
            });
        }
        for &i in indices {
            if i >= self.ambient_dim {
                return Err(ExteriorError::IndexOutOfRange(i, self.ambient_dim));
            }
        }
        let mut idx: Vec<u8> = indices.iter().map(|&i| i as u8).collect();
        let Some(sign) = canonicalize(&mut idx) else {
            return Ok(()); // repeated index: term vanishes
        };
        let entry = self.coeffs.entry(idx).or_insert(0.0);
        *entry += sign * c;
        if *entry == 0.0 {
            let key: Vec<u8> = indices.iter().map(|&i| i as u8).collect();
            let mut key = key;
            canonicalize(&mut key);
            self.coeffs.remove(&key);
        }
        Ok(())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Coefficient of the canonical (strictly increasing) tuple.
    pub fn coeff(&self, indices: &[usize]) -> f64 {
        let mut idx: Vec<u8> = indices.iter().map(|&i| i as u8).collect();
        match canonicalize(&mut idx) {
            None => 0.0,
            Some(sign) => sign * self.coeffs.get(&idx).copied().unwrap_or(0.0),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.coeffs
            .iter()
            .map(|(k, &v)| (k.iter().map(|&i| i as usize).collect(), v))
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn scale(&self, c: f64) -> KForm {
        let mut out = self.clone();
        if c == 0.0 {
            out.coeffs.clear();
            return out;
        }
        for v in out.coeffs.values_mut() {
            *v *= c;
        }
        out
    }

    pub fn add(&self, other: &KForm) -> Result<KForm, ExteriorError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(ExteriorError::DimensionMismatch(
                self.ambient_dim,
                other.ambient_dim,
            ));
        }
        let mut out = self.clone();
        for (k, &v) in &other.coeffs {
            let e = out.coeffs.entry(k.clone()).or_insert(0.0);
            *e += v;
            if *e == 0.0 {
                out.coeffs.remove(k);
            }
        }
        Ok(out)
    }

    /// Pointwise coefficient l2 norm (coefficients in the canonical basis).
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn wedge(&self, other: &KForm) -> Result<KForm, ExteriorError> {
        if self.ambient_dim != other.ambient_dim {
            return Err(ExteriorError::DimensionMismatch(
                self.ambient_dim,
                other.ambient_dim,
            ));
        }
        let degree = self.degree + other.degree;
        let mut out = KForm {
            ambient_dim: self.ambient_dim,
            degree,
            coeffs: BTreeMap::new(),
        };
        if degree > self.ambient_dim {
            return Ok(out); // zero form of too-high degree
        }
        for (i1, c1) in &self.coeffs {
            for (i2, c2) in &other.coeffs {
                let mut idx: Vec<u8> = i1.iter().chain(i2.iter()).copied().collect();
                if let Some(sign) = canonicalize(&mut idx) {
                    let e = out.coeffs.entry(idx).or_insert(0.0);
                    *e += sign * c1 * c2;
                }
            }
        }
        out.coeffs.retain(|_, v| *v != 0.0);
        Ok(out)
    }

    /// Hodge star for the Euclidean metric; `orientation` (+1/-1) flips the
    /// volume form.
    pub fn hodge_star(&self, orientation: i32) -> KForm {
        let m = self.ambient_dim;
        let mut out = KForm {
            ambient_dim: m,
            degree: m - self.degree,
            coeffs: BTreeMap::new(),
        };
        let o = orientation.signum() as f64;
        for (idx, &c) in &self.coeffs {
            let mut complement: Vec<u8> = (0..m as u8).filter(|i| !idx.contains(i)).collect();
            // parity of the permutation (idx, complement) of (0..m)
            let mut joined: Vec<u8> = idx.iter().chain(complement.iter()).copied().collect();
            let sign = canonicalize(&mut joined).expect("disjoint by construction");
            let _ = canonicalize(&mut complement);
            let e = out.coeffs.entry(complement).or_insert(0.0);
            *e += o * sign * c;
        }
        out.coeffs.retain(|_, v| *v != 0.0);
        out
    }

    /// Interior product (contraction) with an ambient vector in slot one.
    pub fn interior_product(&self, v: &[f64]) -> Result<KForm, ExteriorError> {
        if v.len() != self.ambient_dim {
            return Err(ExteriorError::DimensionMismatch(v.len(), self.ambient_dim));
        }
        if self.degree == 0 {
            return KForm::zero(self.ambient_dim, 0);
        }
        let mut out = KForm {
            ambient_dim: self.ambient_dim,
            degree: self.degree - 1,
            coeffs: BTreeMap::new(),
        };
        for (idx, &c) in &self.coeffs {
            for (pos, &i) in idx.iter().enumerate() {
                let vi = v[i as usize];
                if vi == 0.0 {
                    continue;
                }
                let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
                let rest: Vec<u8> = idx
                    .iter()
                    .enumerate()
                    .filter(|(p, _)| *p != pos)
                    .map(|(_, &x)| x)
                    .collect();
                let e = out.coeffs.entry(rest).or_insert(0.0);
                *e += sign * vi * c;
            }
        }
        out.coeffs.retain(|_, v| *v != 0.0);
        Ok(out)
    }

    /// Evaluates the form on `k` ambient vectors.
    pub fn evaluate(&self, vectors: &[Vec<f64>]) -> Result<f64, ExteriorError> {
        if vectors.len() != self.degree {
            return Err(ExteriorError::FrameSize {
                expected: self.degree,
                got: vectors.len(),
            });
        }
        for v in vectors {
            if v.len() != self.ambient_dim {
                return Err(ExteriorError::DimensionMismatch(v.len(), self.ambient_dim));
            }
        }
        let k = self.degree;
        let mut total = 0.0;
        let mut minor = vec![0.0; k * k];
        for (idx, &c) in &self.coeffs {
            for (a, &i) in idx.iter().enumerate() {
                for (j, v) in vectors.iter().enumerate() {
                    minor[a * k + j] = v[i as usize];
                }
            }
            total += c * det_in_place(&mut minor, k);
        }
        Ok(total)
    }

    /// Musical flat: lowers an ambient vector with the given metric
    /// (Euclidean when `None`).
    pub fn flat(v: &[f64], metric: Option<&SymMatrix>) -> Result<KForm, ExteriorError> {
        let m = v.len();
        let mut out = KForm::zero(m, 1)?;
        match metric {
            None => {
                for (i, &c) in v.iter().enumerate() {
                    if c != 0.0 {
                        out.add_term(&[i], c)?;
                    }
                }
            }
            Some(g) => {
                if g.n() != m {
                    return Err(ExteriorError::DimensionMismatch(g.n(), m));
                }
                for i in 0..m {
                    let c: f64 = (0..m).map(|j| g.get(i, j) * v[j]).sum();
                    if c != 0.0 {
                        out.add_term(&[i], c)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Musical sharp: inverse of [`KForm::flat`] on 1-forms.
    pub fn sharp(&self, metric: Option<&SymMatrix>) -> Result<Vec<f64>, ExteriorError> {
        assert_eq!(self.degree, 1, "sharp applies to 1-forms");
        let m = self.ambient_dim;
        let mut b = vec![0.0; m];
        for (idx, &c) in &self.coeffs {
            b[idx[0] as usize] = c;
        }
        match metric {
            None => Ok(b),
            Some(g) => {
                if g.n() != m {
                    return Err(ExteriorError::DimensionMismatch(g.n(), m));
                }
                Ok(spd_solve(g, &b)?)
            }
        }
    }
}

/// Determinant by partial-pivot LU; `a` is row-major k x k scratch.
fn det_in_place(a: &mut [f64], k: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in (col + 1)..k {
            if a[r * k + col].abs() > a[piv * k + col].abs() {
                piv = r;
            }
        }
        if a[piv * k + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            det = -det;
        }
        let d = a[col * k + col];
        det *= d;
        for r in (col + 1)..k {
            let f = a[r * k + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..k {
                a[r * k + c] -= f * a[col * k + c];
            }
        }
    }
    det
}

/// Standard complex structure on an even-dimensional space with interleaved
/// coordinates: `z_j = (x_{2j}, x_{2j+1})`, `J e_{2j} = e_{2j+1}`,
/// `J e_{2j+1} = -e_{2j}`. All applications are exact (swap and negate).
#[derive(Clone, Copy, Debug)]
pub struct ComplexStructure {
    pub dim: usize,
}

impl ComplexStructure {
    pub fn new(dim: usize) -> Self {
        assert!(dim % 2 == 0, "complex structure needs even dimension");
        ComplexStructure { dim }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for j in 0..self.dim / 2 {
            out[2 * j] = -v[2 * j + 1];
            out[2 * j + 1] = v[2 * j];
        }
        out
    }

    /// The Kahler 2-form `sum_j dx_{2j} ^ dx_{2j+1}` compatible with `apply`.
    pub fn kahler_form(&self) -> KForm {
        let mut f = KForm::zero(self.dim, 2).unwrap();
        for j in 0..self.dim / 2 {
            f.add_term(&[2 * j, 2 * j + 1], 1.0).unwrap();
        }
        f
    }
}
