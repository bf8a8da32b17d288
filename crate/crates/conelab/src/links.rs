//! Cross-section geometry for cones with an isolated singularity.
//!
//! Every link here is a closed submanifold of a unit sphere, described by one
//! or more coordinate charts written generically over [`Scalar`]. Evaluating a
//! chart on [`Jet`] inputs gives exact first and second derivatives, which is
//! what the frame and second-fundamental-form routines build on. Chart 0 of
//! each link covers it up to a measure-zero set and carries the quadrature
//! grid; any further charts exist for well-conditioned pointwise sampling and
//! for chart-independence tests.

use crate::jets::{Jet, Scalar};
use crate::linalg::{self, SymMatrix};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("sphere factors need positive dimension")]
    EmptyFactor,
    #[error("ambient dimension {ambient} too small for a {dim}-dimensional link")]
    AmbientTooSmall { ambient: usize, dim: usize },
    #[error("product radii must sit on the unit sphere, got r1^2 + r2^2 = {sum}")]
    RadiiOffSphere { sum: f64 },
    #[error("chart index {chart} out of range, link has {count} charts")]
    BadChart { chart: usize, count: usize },
}

/// A link: the unit cross-section of a cone through the origin.
///
/// Serializes as a tagged JSON object, `{"type": "...", ...fields}`, and
/// round-trips bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LinkSpec {
    /// Great sphere `S^dim` inside `S^{ambient-1}`; its cone is a plane.
    RoundSphere { dim: usize, ambient: usize },
    /// `S^k(r1) x S^l(r2)` inside `S^{k+l+1}`, with `r1^2 + r2^2 = 1`.
    ProductOfSpheres { k: usize, l: usize, r1: f64, r2: f64 },
    /// Graph link in `S^6`: the Hopf map scaled so the cone over it is
    /// calibrated by a degree-four form on `R^7`.
    HopfGraphLink,
    /// `{z in C^3 : z1^2 + z2^2 + z3^2 = 0} ∩ S^5`, a copy of SO(3).
    ComplexQuadricLink,
    /// Flat torus `(e^{i t1}, e^{i t2}, e^{-i(t1+t2)})/sqrt(3)` in `S^5`.
    HarveyLawsonT2Link,
}

impl LinkSpec {
    /// Minimal product-of-spheres link: radii balanced so the cone over it
    /// has zero mean curvature.
    pub fn lawson(k: usize, l: usize) -> LinkSpec {
        assert!(k >= 1 && l >= 1);
        let n = (k + l) as f64;
        LinkSpec::ProductOfSpheres {
            k,
            l,
            r1: (k as f64 / n).sqrt(),
            r2: (l as f64 / n).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        match *self {
            LinkSpec::RoundSphere { dim, ambient } => {
                if dim == 0 {
                    return Err(LinkError::EmptyFactor);
                }
                if ambient < dim + 1 {
                    return Err(LinkError::AmbientTooSmall { ambient, dim });
                }
            }
            LinkSpec::ProductOfSpheres { k, l, r1, r2 } => {
                if k == 0 || l == 0 {
                    return Err(LinkError::EmptyFactor);
                }
                let sum = r1 * r1 + r2 * r2;
                if r1 <= 0.0 || r2 <= 0.0 || (sum - 1.0).abs() > 1e-9 {
                    return Err(LinkError::RadiiOffSphere { sum });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Intrinsic dimension of the link.
    pub fn dim(&self) -> usize {
        match *self {
            LinkSpec::RoundSphere { dim, .. } => dim,
            LinkSpec::ProductOfSpheres { k, l, .. } => k + l,
            LinkSpec::HopfGraphLink => 3,
            LinkSpec::ComplexQuadricLink => 3,
            LinkSpec::HarveyLawsonT2Link => 2,
        }
    }

    /// Dimension of the cone over the link.
    pub fn cone_dim(&self) -> usize {
        self.dim() + 1
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            LinkSpec::RoundSphere { ambient, .. } => ambient,
            LinkSpec::ProductOfSpheres { k, l, .. } => k + l + 2,
            LinkSpec::HopfGraphLink => 7,
            LinkSpec::ComplexQuadricLink => 6,
            LinkSpec::HarveyLawsonT2Link => 6,
        }
    }

    pub fn chart_count(&self) -> usize {
        match *self {
            LinkSpec::HopfGraphLink => 3,
            LinkSpec::ComplexQuadricLink => 2,
            _ => 1,
        }
    }

    /// Coordinate box of a chart. Chart 0 covers the link up to measure zero.
    pub fn chart_domain(&self, chart: usize) -> Vec<(f64, f64)> {
        self.chart_axes(chart)
            .iter()
            .map(|ax| (ax.lo, ax.hi))
            .collect()
    }

    fn chart_axes(&self, chart: usize) -> Vec<Axis> {
        let count = self.chart_count();
        assert!(chart < count, "chart {chart} out of range ({count})");
        match *self {
            LinkSpec::RoundSphere { dim, .. } => sphere_axes(dim),
            LinkSpec::ProductOfSpheres { k, l, .. } => {
                let mut axes = sphere_axes(k);
                axes.extend(sphere_axes(l));
                axes
            }
            LinkSpec::HopfGraphLink => {
                if chart == 0 {
                    sphere_axes(3)
                } else {
                    // Stereographic sampling boxes; never used for quadrature.
                    vec![Axis::open(-1.5, 1.5); 3]
                }
            }
            LinkSpec::ComplexQuadricLink => vec![
                Axis::periodic(),
                Axis::polar(),
                Axis::periodic(),
            ],
            LinkSpec::HarveyLawsonT2Link => vec![Axis::periodic(), Axis::periodic()],
        }
    }

    /// Evaluate a chart map. The output lies on the unit sphere of the
    /// ambient space whenever the input is inside the chart domain.
    pub fn chart_point<S: Scalar>(&self, chart: usize, u: &[S]) -> Vec<S> {
        assert!(chart < self.chart_count());
        assert_eq!(u.len(), self.dim());
        match *self {
            LinkSpec::RoundSphere { dim, ambient } => {
                let mut out = sphere_chart(u);
                debug_assert_eq!(out.len(), dim + 1);
                out.resize(ambient, S::from_f64(0.0));
                out
            }
            LinkSpec::ProductOfSpheres { k, r1, r2, .. } => {
                let mut out: Vec<S> = sphere_chart(&u[..k])
                    .into_iter()
                    .map(|x| x * S::from_f64(r1))
                    .collect();
                out.extend(
                    sphere_chart(&u[k..])
                        .into_iter()
                        .map(|x| x * S::from_f64(r2)),
                );
                out
            }
            LinkSpec::HopfGraphLink => {
                let x = match chart {
                    0 => sphere_chart(u),
                    1 => stereographic_s3(u, false),
                    _ => stereographic_s3(u, true),
                };
                hopf_graph_point(&x)
            }
            LinkSpec::ComplexQuadricLink => quadric_point(u, chart == 1),
            LinkSpec::HarveyLawsonT2Link => {
                let s = S::from_f64(1.0 / 3f64.sqrt());
                let sum = u[0].clone() + u[1].clone();
                vec![
                    u[0].cos() * s.clone(),
                    u[0].sin() * s.clone(),
                    u[1].cos() * s.clone(),
                    u[1].sin() * s.clone(),
                    sum.cos() * s.clone(),
                    -(sum.sin() * s),
                ]
            }
        }
    }

    /// Point, derivatives and orthonormal frames at a chart point.
    pub fn frame_data(&self, chart: usize, u: &[f64]) -> FrameData {
        let d = self.dim();
        let m = self.ambient_dim();
        assert_eq!(u.len(), d);
        let jets: Vec<Jet> = u
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet::variable(x, i, d))
            .collect();
        let img = self.chart_point(chart, &jets);
        debug_assert_eq!(img.len(), m);

        let point: Vec<f64> = img.iter().map(|j| j.v).collect();
        // Components untouched by any variable stay constant jets; their
        // missing derivative slots read as zero.
        let jacobian: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                img.iter()
                    .map(|j| j.g.get(i).copied().unwrap_or(0.0))
                    .collect()
            })
            .collect();
        let npairs = d * (d + 1) / 2;
        let hessian: Vec<Vec<f64>> = (0..npairs)
            .map(|p| {
                img.iter()
                    .map(|j| j.h.get(p).copied().unwrap_or(0.0))
                    .collect()
            })
            .collect();

        let metric = SymMatrix::from_fn(d, |i, j| linalg::dot(&jacobian[i], &jacobian[j]));
        let tangent = linalg::gram_schmidt(&jacobian, 1e-10)
            .expect("chart point is an immersion point");
        // E_a = sum_i coeff[a][i] * d(sigma)/du_i, recovered through the metric.
        let tangent_coeff: Vec<Vec<f64>> = tangent
            .iter()
            .map(|e| {
                let rhs: Vec<f64> = (0..d).map(|i| linalg::dot(e, &jacobian[i])).collect();
                linalg::spd_solve(&metric, &rhs).expect("immersion metric is positive definite")
            })
            .collect();

        // The link sits on the unit sphere, so the position vector is itself a
        // unit normal of the cone's cross-section; complete the rest by
        // pivoted Gram-Schmidt over coordinate directions.
        let mut base: Vec<Vec<f64>> = Vec::with_capacity(m);
        base.push(point.clone());
        base.extend(tangent.iter().cloned());
        let mut normal: Vec<Vec<f64>> = Vec::with_capacity(m - d - 1);
        while base.len() < m {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for j in 0..m {
                let mut v = vec![0.0; m];
                v[j] = 1.0;
                for _ in 0..2 {
                    for b in &base {
                        let c = linalg::dot(&v, b);
                        linalg::axpy(-c, b, &mut v);
                    }
                }
                let n = linalg::norm(&v);
                if best.as_ref().map_or(true, |(bn, _)| n > *bn + 1e-12) {
                    best = Some((n, v));
                }
            }
            let (n, mut v) = best.expect("ambient basis spans the complement");
            assert!(n > 1e-6, "normal completion degenerated");
            for x in v.iter_mut() {
                *x /= n;
            }
            base.push(v.clone());
            normal.push(v);
        }

        FrameData {
            point,
            jacobian,
            hessian,
            metric,
            tangent,
            tangent_coeff,
            normal,
        }
    }

    /// Quadrature nodes on chart 0 whose weights include the volume element:
    /// `integral of f` is approximated by `sum w_i f(node_i)`.
    ///
    /// Periodic axes get midpoint rules (spectrally accurate there), polar
    /// axes Gauss-Legendre. `level` scales the node count per axis.
    pub fn quadrature(&self, level: usize) -> Vec<QuadNode> {
        let level = level.max(1);
        let axes = self.chart_axes(0);
        let rules: Vec<Vec<(f64, f64)>> = axes.iter().map(|ax| ax.rule(level)).collect();
        let total: usize = rules.iter().map(|r| r.len()).product();
        let d = axes.len();

        let mut nodes = Vec::with_capacity(total);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            let mut u = Vec::with_capacity(d);
            let mut w = 1.0;
            for (i, rule) in rules.iter().enumerate() {
                let (x, wx) = rule[idx[i]];
                u.push(x);
                w *= wx;
            }
            let fd = self.frame_data(0, &u);
            let det = fd.metric_determinant();
            nodes.push(QuadNode {
                chart: 0,
                u,
                weight: w * det.sqrt(),
            });
            // Advance the multi-index.
            for i in (0..d).rev() {
                idx[i] += 1;
                if idx[i] < rules[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
        nodes
    }

    /// Riemannian volume of the link by quadrature.
    pub fn link_volume(&self, level: usize) -> f64 {
        self.quadrature(level).iter().map(|n| n.weight).sum()
    }
}

/// One quadrature node; `weight` already contains `sqrt(det g)`.
#[derive(Clone, Debug)]
pub struct QuadNode {
    pub chart: usize,
    pub u: Vec<f64>,
    pub weight: f64,
}

/// Pointwise geometry of a link at one chart point.
pub struct FrameData {
    /// Position on the unit sphere.
    pub point: Vec<f64>,
    /// Chart partials `d sigma / du_i`, one ambient vector per chart variable.
    pub jacobian: Vec<Vec<f64>>,
    /// Second partials, packed like the jet Hessian: pair `(i >= j)` at
    /// `i (i + 1) / 2 + j`.
    pub hessian: Vec<Vec<f64>>,
    /// Induced metric `g_ij` in chart coordinates.
    pub metric: SymMatrix,
    /// Orthonormal tangent frame, oriented like the chart.
    pub tangent: Vec<Vec<f64>>,
    /// Row `a` expresses `tangent[a]` in terms of the chart partials.
    pub tangent_coeff: Vec<Vec<f64>>,
    /// Orthonormal normals of the link inside the sphere (orthogonal to both
    /// the tangent space and the position vector).
    pub normal: Vec<Vec<f64>>,
}

impl FrameData {
    pub fn hess_pair(&self, i: usize, j: usize) -> &[f64] {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        &self.hessian[hi * (hi + 1) / 2 + lo]
    }

    pub fn metric_determinant(&self) -> f64 {
        let d = self.metric.n();
        // Cholesky determinant; the metric of an immersion is SPD.
        let mut l = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.metric.get(i, j);
                for k in 0..j {
                    s -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    assert!(s > 0.0, "degenerate metric");
                    l[i * d + i] = s.sqrt();
                } else {
                    l[i * d + j] = s / l[j * d + j];
                }
            }
        }
        let mut det = 1.0;
        for i in 0..d {
            det *= l[i * d + i] * l[i * d + i];
        }
        det
    }

    /// Second fundamental form of the link inside the sphere, one symmetric
    /// matrix per normal direction, expressed in the orthonormal tangent
    /// frame.
    pub fn sff(&self) -> Vec<SymMatrix> {
        let d = self.tangent.len();
        self.normal
            .iter()
            .map(|nu| {
                // <Hess sigma, nu> in chart indices, then change basis.
                let hch = SymMatrix::from_fn(d, |i, j| linalg::dot(self.hess_pair(i, j), nu));
                SymMatrix::from_fn(d, |a, b| {
                    let mut s = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            s += self.tangent_coeff[a][i]
                                * self.tangent_coeff[b][j]
                                * hch.get(i, j);
                        }
                    }
                    s
                })
            })
            .collect()
    }

    /// Squared Frobenius norm of the full second fundamental form.
    pub fn sff_norm_sq(&self) -> f64 {
        self.sff().iter().map(|a| a.frobenius().powi(2)).sum()
    }

    /// Mean curvature components, one per normal direction.
    pub fn mean_curvature(&self) -> Vec<f64> {
        self.sff()
            .iter()
            .map(|a| (0..a.n()).map(|i| a.get(i, i)).sum())
            .collect()
    }

    /// Largest mean curvature component in absolute value; zero exactly when
    /// the cone over the link is minimal.
    pub fn mean_curvature_residual(&self) -> f64 {
        self.mean_curvature()
            .iter()
            .fold(0.0f64, |m, h| m.max(h.abs()))
    }

    /// Second fundamental form of the cone at radius `r`, in the frame
    /// `(radial, tangent frame)`: the radial row and column vanish and the
    /// link block scales like `1/r`.
    pub fn cone_sff(&self, r: f64) -> Vec<SymMatrix> {
        assert!(r > 0.0);
        self.sff()
            .iter()
            .map(|a| {
                SymMatrix::from_fn(a.n() + 1, |i, j| {
                    if i == 0 || j == 0 {
                        0.0
                    } else {
                        a.get(i - 1, j - 1) / r
                    }
                })
            })
            .collect()
    }
}

/// Surface volume of the unit `d`-sphere.
pub fn sphere_volume(d: usize) -> f64 {
    match d {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (d as f64 - 1.0) * sphere_volume(d - 2),
    }
}

#[derive(Clone, Debug)]
struct Axis {
    lo: f64,
    hi: f64,
    periodic: bool,
}

impl Axis {
    fn periodic() -> Axis {
        Axis {
            lo: 0.0,
            hi: 2.0 * std::f64::consts::PI,
            periodic: true,
        }
    }
    fn polar() -> Axis {
        Axis {
            lo: 0.0,
            hi: std::f64::consts::PI,
            periodic: false,
        }
    }
    fn open(lo: f64, hi: f64) -> Axis {
        Axis {
            lo,
            hi,
            periodic: false,
        }
    }

    fn rule(&self, level: usize) -> Vec<(f64, f64)> {
        let span = self.hi - self.lo;
        if self.periodic {
            let n = (4 * level).max(8);
            let h = span / n as f64;
            (0..n)
                .map(|i| (self.lo + (i as f64 + 0.5) * h, h))
                .collect()
        } else {
            let n = (2 * level).max(6);
            let (x, w) = linalg::gauss_legendre(n);
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| (self.lo + span * (xi + 1.0) / 2.0, wi * span / 2.0))
                .collect()
        }
    }
}

fn sphere_axes(d: usize) -> Vec<Axis> {
    let mut axes = vec![Axis::polar(); d.saturating_sub(1)];
    axes.push(Axis::periodic());
    axes
}

/// Hyperspherical chart of `S^d`: `d` angles to `d + 1` coordinates, with
/// `x_1 = cos u_1`, `x_2 = sin u_1 cos u_2`, ..., `x_{d+1} = prod sin u_i`.
fn sphere_chart<S: Scalar>(u: &[S]) -> Vec<S> {
    let mut out = Vec::with_capacity(u.len() + 1);
    let mut prod = S::from_f64(1.0);
    for ui in u {
        out.push(prod.clone() * ui.cos());
        prod = prod * ui.sin();
    }
    out.push(prod);
    out
}

/// Stereographic chart of `S^3` from the pole `-+ e_4`.
fn stereographic_s3<S: Scalar>(w: &[S], south: bool) -> Vec<S> {
    let one = S::from_f64(1.0);
    let nsq = w[0].clone() * w[0].clone()
        + w[1].clone() * w[1].clone()
        + w[2].clone() * w[2].clone();
    let inv = (one.clone() + nsq.clone()).recip();
    let two = S::from_f64(2.0);
    let mut out: Vec<S> = w
        .iter()
        .map(|wi| two.clone() * wi.clone() * inv.clone())
        .collect();
    let last = (one - nsq) * inv;
    out.push(if south { -last } else { last });
    out
}

/// The scaled Hopf graph: `x in S^3` to `((2/3) x, (sqrt 5 / 3) eta(x))` where
/// `eta` is the Hopf map of `S^3` onto `S^2`.
fn hopf_graph_point<S: Scalar>(x: &[S]) -> Vec<S> {
    let two = S::from_f64(2.0);
    let eta1 = two.clone() * (x[0].clone() * x[2].clone() + x[1].clone() * x[3].clone());
    let eta2 = two * (x[0].clone() * x[3].clone() - x[1].clone() * x[2].clone());
    let eta3 = x[0].clone() * x[0].clone() + x[1].clone() * x[1].clone()
        - x[2].clone() * x[2].clone()
        - x[3].clone() * x[3].clone();
    let cb = S::from_f64(2.0 / 3.0);
    let cf = S::from_f64(5f64.sqrt() / 3.0);
    vec![
        cb.clone() * x[0].clone(),
        cb.clone() * x[1].clone(),
        cb.clone() * x[2].clone(),
        cb * x[3].clone(),
        cf.clone() * eta1,
        cf.clone() * eta2,
        cf * eta3,
    ]
}

type Mat3<S> = [[S; 3]; 3];

fn mat3_mul<S: Scalar>(a: &Mat3<S>, b: &Mat3<S>) -> Mat3<S> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            a[i][0].clone() * b[0][j].clone()
                + a[i][1].clone() * b[1][j].clone()
                + a[i][2].clone() * b[2][j].clone()
        })
    })
}

fn rot_z<S: Scalar>(t: &S) -> Mat3<S> {
    let (c, s) = (t.cos(), t.sin());
    let (o, z) = (S::from_f64(1.0), S::from_f64(0.0));
    [
        [c.clone(), -s.clone(), z.clone()],
        [s, c, z.clone()],
        [z.clone(), z, o],
    ]
}

fn rot_y<S: Scalar>(t: &S) -> Mat3<S> {
    let (c, s) = (t.cos(), t.sin());
    let (o, z) = (S::from_f64(1.0), S::from_f64(0.0));
    [
        [c.clone(), z.clone(), s.clone()],
        [z.clone(), o, z.clone()],
        [-s, z, c],
    ]
}

fn rot_x<S: Scalar>(t: &S) -> Mat3<S> {
    let (c, s) = (t.cos(), t.sin());
    let (o, z) = (S::from_f64(1.0), S::from_f64(0.0));
    [
        [o, z.clone(), z.clone()],
        [z.clone(), c.clone(), -s.clone()],
        [z, s, c],
    ]
}

/// The quadric link as an orbit of rotation matrices: the point is
/// `(a + i b) / sqrt 2` with `a`, `b` the first two columns of an Euler-angle
/// rotation (ZYZ for chart 0, ZXZ for chart 1), stored as
/// `(Re z1, Im z1, Re z2, Im z2, Re z3, Im z3)`.
fn quadric_point<S: Scalar>(u: &[S], zxz: bool) -> Vec<S> {
    let middle = if zxz { rot_x(&u[1]) } else { rot_y(&u[1]) };
    let r = mat3_mul(&rot_z(&u[0]), &mat3_mul(&middle, &rot_z(&u[2])));
    let s = S::from_f64(std::f64::consts::FRAC_1_SQRT_2);
    let mut out = Vec::with_capacity(6);
    for row in &r {
        out.push(row[0].clone() * s.clone());
        out.push(row[1].clone() * s.clone());
    }
    out
}
