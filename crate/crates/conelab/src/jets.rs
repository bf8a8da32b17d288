//! Forward-mode jets carrying value, gradient and Hessian.
//!
//! Chart maps in [`crate::links`] are written generically over [`Scalar`], so
//! evaluating them on [`Jet`] inputs yields machine-precision first and second
//! derivatives. Finite differences are kept out of the main paths and used
//! only as independent oracles in tests.

use arrayvec::ArrayVec;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Maximum number of chart variables a jet can carry.
///
/// Cone charts prepend a radial variable to the link chart, so this must be at
/// least one more than the largest link dimension handled numerically.
pub const MAX_VARS: usize = 12;

const MAX_HESS: usize = MAX_VARS * (MAX_VARS + 1) / 2;

/// Minimal scalar interface shared by `f64` and [`Jet`].
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn recip(&self) -> Self;
    fn value(&self) -> f64;
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn recip(&self) -> Self {
        1.0 / self
    }
    fn value(&self) -> f64 {
        *self
    }
}

/// Second-order jet in `n <= MAX_VARS` variables.
///
/// The Hessian is stored packed, lower triangle row-major: entry `(i, j)` with
/// `i >= j` sits at `i * (i + 1) / 2 + j`.
#[derive(Clone, Debug)]
pub struct Jet {
    pub v: f64,
    pub g: ArrayVec<f64, MAX_VARS>,
    pub h: ArrayVec<f64, MAX_HESS>,
}

impl Jet {
    /// Constant jet (zero derivatives) in `n` variables.
    pub fn constant(v: f64, n: usize) -> Self {
        assert!(n <= MAX_VARS);
        let mut g = ArrayVec::new();
        let mut h = ArrayVec::new();
        for _ in 0..n {
            g.push(0.0);
        }
        for _ in 0..n * (n + 1) / 2 {
            h.push(0.0);
        }
        Jet { v, g, h }
    }

    /// The `i`-th coordinate variable at base value `v`.
    pub fn variable(v: f64, i: usize, n: usize) -> Self {
        let mut j = Jet::constant(v, n);
        j.g[i] = 1.0;
        j
    }

    pub fn nvars(&self) -> usize {
        self.g.len()
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        self.h[a * (a + 1) / 2 + b]
    }

    /// Chain rule for a scalar function: maps value v to f(v), given f', f''.
    fn map(&self, fv: f64, d1: f64, d2: f64) -> Jet {
        let mut out = self.clone();
        out.v = fv;
        for x in out.g.iter_mut() {
            *x *= d1;
        }
        let n = self.nvars();
        for i in 0..n {
            for j in 0..=i {
                let idx = i * (i + 1) / 2 + j;
                out.h[idx] = d1 * self.h[idx] + d2 * self.g[i] * self.g[j];
            }
        }
        out
    }

    /// Extend with zero derivatives up to `n` variables. Constants are
    /// created with no variables at all and broadcast on demand, so mixed
    /// expressions like `c * x` behave as expected.
    fn promote(&mut self, n: usize) {
        assert!(n <= MAX_VARS && n >= self.nvars());
        while self.g.len() < n {
            self.g.push(0.0);
        }
        while self.h.len() < n * (n + 1) / 2 {
            self.h.push(0.0);
        }
    }
}

fn broadcast(a: Jet, b: Jet) -> (Jet, Jet) {
    let n = a.nvars().max(b.nvars());
    let (mut a, mut b) = (a, b);
    a.promote(n);
    b.promote(n);
    (a, b)
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let (mut out, rhs) = broadcast(self, rhs);
        out.v += rhs.v;
        for (a, b) in out.g.iter_mut().zip(rhs.g.iter()) {
            *a += b;
        }
        for (a, b) in out.h.iter_mut().zip(rhs.h.iter()) {
            *a += b;
        }
        out
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let (mut out, rhs) = broadcast(self, rhs);
        out.v -= rhs.v;
        for (a, b) in out.g.iter_mut().zip(rhs.g.iter()) {
            *a -= b;
        }
        for (a, b) in out.h.iter_mut().zip(rhs.h.iter()) {
            *a -= b;
        }
        out
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let (lhs, rhs) = broadcast(self, rhs);
        let n = lhs.nvars();
        let mut out = Jet::constant(lhs.v * rhs.v, n);
        for i in 0..n {
            out.g[i] = lhs.g[i] * rhs.v + lhs.v * rhs.g[i];
        }
        for i in 0..n {
            for j in 0..=i {
                let idx = i * (i + 1) / 2 + j;
                out.h[idx] = lhs.h[idx] * rhs.v
                    + lhs.v * rhs.h[idx]
                    + lhs.g[i] * rhs.g[j]
                    + lhs.g[j] * rhs.g[i];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut out = self;
        out.v = -out.v;
        for x in out.g.iter_mut() {
            *x = -*x;
        }
        for x in out.h.iter_mut() {
            *x = -*x;
        }
        out
    }
}

impl Scalar for Jet {
    fn from_f64(c: f64) -> Self {
        // Number of variables is fixed by context; a bare constant cannot know
        // it, so constants are injected via `Jet::constant` in chart code and
        // this path is only used through `scale`-style helpers below.
        Jet::constant(c, 0)
    }
    fn sin(&self) -> Self {
        self.map(self.v.sin(), self.v.cos(), -self.v.sin())
    }
    fn cos(&self) -> Self {
        self.map(self.v.cos(), -self.v.sin(), -self.v.cos())
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.map(s, 0.5 / s, -0.25 / (s * s * s))
    }
    fn recip(&self) -> Self {
        let r = 1.0 / self.v;
        self.map(r, -r * r, 2.0 * r * r * r)
    }
    fn value(&self) -> f64 {
        self.v
    }
}

/// Multiply a jet by a plain constant.
pub fn scale(j: &Jet, c: f64) -> Jet {
    let mut out = j.clone();
    out.v *= c;
    for x in out.g.iter_mut() {
        *x *= c;
    }
    for x in out.h.iter_mut() {
        *x *= c;
    }
    out
}

/// Add a plain constant to a jet.
pub fn offset(j: &Jet, c: f64) -> Jet {
    let mut out = j.clone();
    out.v += c;
    out
}

/// Evaluate a chart map `f: R^n -> R^m` on jets seeded at `w`, returning one
/// jet per output coordinate.
pub fn eval_map<F>(f: F, w: &[f64]) -> Vec<Jet>
where
    F: Fn(&[Jet]) -> Vec<Jet>,
{
    let n = w.len();
    let vars: Vec<Jet> = w
        .iter()
        .enumerate()
        .map(|(i, &x)| Jet::variable(x, i, n))
        .collect();
    f(&vars)
}
