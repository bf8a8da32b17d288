//! Constant-coefficient calibrations and residual checks for calibrated cones.
//!
//! Builds the classical calibrations of Euclidean space with exact integer
//! coefficients: powers of the Kahler form, the real part of the holomorphic
//! volume form at a fixed phase, and the associative/coassociative pair on
//! `R^7`. Around them sit the tools that make a calibration testable: comass
//! estimation over random orthonormal frames, pointwise restriction and value
//! residuals, and whole-cone sample reports for the model links of
//! [`crate::links`].

use crate::exterior::{ComplexStructure, ExteriorError, KForm};
use crate::linalg;
use crate::links::LinkSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest ambient dimension the builders accept.
const MAX_AMBIENT: usize = 24;

/// How far a frame may sit from orthonormal before it is rejected.
const FRAME_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("frame is not orthonormal, defect {0:.3e}")]
    NotAFrame(f64),
    #[error("form of degree {degree} against {got} frame vectors")]
    DegreeMismatch { degree: usize, got: usize },
    #[error("form lives on R^{form} but the vectors sit in R^{cone}")]
    AmbientMismatch { form: usize, cone: usize },
    #[error(transparent)]
    Exterior(#[from] ExteriorError),
}

/// A constant-coefficient calibration on Euclidean space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationSpec {
    /// `omega^k / k!` on `R^{2n}`, calibrating the complex `k`-planes.
    KahlerPower { n: usize, k: usize },
    /// `Re(e^{-i theta} dz^1 ^ ... ^ dz^n)` on `R^{2n}`.
    SpecialLagrangian { n: usize, theta: f64 },
    /// Three-form on `R^7` pairing the axes `e^4, e^5, e^6` with the
    /// anti-self-dual two-forms of the first four coordinates.
    Associative,
    /// Hodge dual of [`CalibrationSpec::Associative`]; calibrates the
    /// four-planes on which the associative form vanishes identically.
    Coassociative,
}

impl CalibrationSpec {
    pub fn ambient_dim(&self) -> usize {
        match *self {
            CalibrationSpec::KahlerPower { n, .. } => 2 * n,
            CalibrationSpec::SpecialLagrangian { n, .. } => 2 * n,
            CalibrationSpec::Associative | CalibrationSpec::Coassociative => 7,
        }
    }

    pub fn degree(&self) -> usize {
        match *self {
            CalibrationSpec::KahlerPower { k, .. } => 2 * k,
            CalibrationSpec::SpecialLagrangian { n, .. } => n,
            CalibrationSpec::Associative => 3,
            CalibrationSpec::Coassociative => 4,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            CalibrationSpec::KahlerPower { n, k } => format!("kahler_power(n={n},k={k})"),
            CalibrationSpec::SpecialLagrangian { n, theta } => {
                format!("special_lagrangian(n={n},theta={theta:.12})")
            }
            CalibrationSpec::Associative => "associative".to_string(),
            CalibrationSpec::Coassociative => "coassociative".to_string(),
        }
    }
}

// e^{456} + e^4 ^ (e^{03} - e^{12}) - e^5 ^ (e^{02} + e^{13}) + e^6 ^ (e^{01} - e^{23}).
// The pairing between the last three axes and the anti-self-dual basis of the
// first four is normalized so that the cone over [`LinkSpec::HopfGraphLink`]
// is calibrated by the Hodge dual of this form.
const ASSOCIATIVE_TERMS: [([usize; 3], f64); 7] = [
    ([4, 5, 6], 1.0),
    ([4, 0, 3], 1.0),
    ([4, 1, 2], -1.0),
    ([5, 0, 2], -1.0),
    ([5, 1, 3], -1.0),
    ([6, 0, 1], 1.0),
    ([6, 2, 3], -1.0),
];

/// Builds the form described by `spec` with exact coefficients.
pub fn build_calibration(spec: &CalibrationSpec) -> Result<KForm, CalibrationError> {
    match *spec {
        CalibrationSpec::KahlerPower { n, k } => {
            if n == 0 || k == 0 || k > n || 2 * n > MAX_AMBIENT {
                return Err(CalibrationError::BadParameter(format!(
                    "kahler power needs 1 <= k <= n and 2n <= {MAX_AMBIENT}, got n={n} k={k}"
                )));
            }
            let mut form = KForm::zero(2 * n, 2 * k)?;
            // The pair blocks e^{2j} ^ e^{2j+1} commute and are disjoint, so
            // omega^k / k! is the sum over k-subsets with coefficient one.
            for s in subsets(n, k) {
                let idx: Vec<usize> = s.iter().flat_map(|&j| [2 * j, 2 * j + 1]).collect();
                form.add_term(&idx, 1.0)?;
            }
            Ok(form)
        }
        CalibrationSpec::SpecialLagrangian { n, theta } => {
            if n == 0 || 2 * n > MAX_AMBIENT {
                return Err(CalibrationError::BadParameter(format!(
                    "special lagrangian needs 1 <= n <= {}, got n={n}",
                    MAX_AMBIENT / 2
                )));
            }
            if !theta.is_finite() {
                return Err(CalibrationError::BadParameter(format!(
                    "phase must be finite, got {theta}"
                )));
            }
            let (re, im) = holomorphic_volume(n)?;
            Ok(re.scale(theta.cos()).add(&im.scale(theta.sin()))?)
        }
        CalibrationSpec::Associative => {
            let mut form = KForm::zero(7, 3)?;
            for (idx, c) in ASSOCIATIVE_TERMS {
                form.add_term(&idx, c)?;
            }
            Ok(form)
        }
        CalibrationSpec::Coassociative => {
            Ok(build_calibration(&CalibrationSpec::Associative)?.hodge_star(1))
        }
    }
}

/// Real and imaginary parts of `dz^1 ^ ... ^ dz^n` in the interleaved layout
/// `(x1, y1, ..., xn, yn)`. Coefficients are exactly `+-1`.
fn holomorphic_volume(n: usize) -> Result<(KForm, KForm), ExteriorError> {
    let m = 2 * n;
    let mut re = KForm::monomial(m, &[0], 1.0)?;
    let mut im = KForm::monomial(m, &[1], 1.0)?;
    for j in 1..n {
        let dx = KForm::monomial(m, &[2 * j], 1.0)?;
        let dy = KForm::monomial(m, &[2 * j + 1], 1.0)?;
        let next_re = re.wedge(&dx)?.add(&im.wedge(&dy)?.scale(-1.0))?;
        let next_im = re.wedge(&dy)?.add(&im.wedge(&dx)?)?;
        re = next_re;
        im = next_im;
    }
    Ok((re, im))
}

/// All strictly increasing k-subsets of `0..n` in lexicographic order.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let need = k - cur.len();
        for i in start..=(n - need) {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Re-orthonormalizes `frame` and rejects inputs that move more than
/// [`FRAME_TOL`] in the process.
fn checked_frame(frame: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CalibrationError> {
    let q = linalg::gram_schmidt(frame, 1e-6)
        .map_err(|_| CalibrationError::NotAFrame(f64::INFINITY))?;
    let mut defect = 0.0f64;
    for (v, w) in frame.iter().zip(&q) {
        let d = v
            .iter()
            .zip(w)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        defect = defect.max(d);
    }
    if defect > FRAME_TOL {
        return Err(CalibrationError::NotAFrame(defect));
    }
    Ok(q)
}

fn check_ambient(form: &KForm, frame: &[Vec<f64>]) -> Result<(), CalibrationError> {
    for v in frame {
        if v.len() != form.ambient_dim() {
            return Err(CalibrationError::AmbientMismatch {
                form: form.ambient_dim(),
                cone: v.len(),
            });
        }
    }
    Ok(())
}

/// Value of a calibration on an orthonormal frame.
///
/// The frame is re-orthonormalized once so the result is a certified pairing
/// with a unit simple vector; inputs further than `1e-8` from orthonormal are
/// rejected rather than silently repaired.
pub fn calibration_value(form: &KForm, frame: &[Vec<f64>]) -> Result<f64, CalibrationError> {
    if frame.len() != form.degree() {
        return Err(CalibrationError::DegreeMismatch {
            degree: form.degree(),
            got: frame.len(),
        });
    }
    check_ambient(form, frame)?;
    let q = checked_frame(frame)?;
    Ok(form.evaluate(&q)?)
}

/// Whether the oriented plane spanned by `frame` is calibrated by `form`.
pub fn is_calibrated_at(
    form: &KForm,
    frame: &[Vec<f64>],
    tol: f64,
) -> Result<bool, CalibrationError> {
    Ok((calibration_value(form, frame)? - 1.0).abs() <= tol)
}

/// Largest absolute value of `form` on coordinate subframes of `frame`.
///
/// For the associative three-form on a four-frame this vanishes exactly when
/// the frame spans a coassociative plane.
pub fn restriction_residual(form: &KForm, frame: &[Vec<f64>]) -> Result<f64, CalibrationError> {
    let k = form.degree();
    if frame.len() < k {
        return Err(CalibrationError::DegreeMismatch {
            degree: k,
            got: frame.len(),
        });
    }
    check_ambient(form, frame)?;
    let q = checked_frame(frame)?;
    let mut worst = 0.0f64;
    for s in subsets(q.len(), k) {
        let sub: Vec<Vec<f64>> = s.iter().map(|&i| q[i].clone()).collect();
        worst = worst.max(form.evaluate(&sub)?.abs());
    }
    Ok(worst)
}

/// Largest value of the associative form on coordinate triples of an
/// orthonormal four-frame in `R^7`. Zero exactly on coassociative planes.
pub fn coassociative_residual(frame: &[Vec<f64>]) -> Result<f64, CalibrationError> {
    if frame.len() != 4 {
        return Err(CalibrationError::DegreeMismatch {
            degree: 4,
            got: frame.len(),
        });
    }
    let phi = build_calibration(&CalibrationSpec::Associative)?;
    restriction_residual(&phi, frame)
}

/// Residuals of an n-frame in `R^{2n}` against the special Lagrangian
/// condition at phase `theta`: the largest Kahler pairing of two frame
/// vectors, and the value of `Im(e^{-i theta} Omega)` on the frame.
pub fn special_lagrangian_residual(
    frame: &[Vec<f64>],
    theta: f64,
) -> Result<(f64, f64), CalibrationError> {
    let n = frame.len();
    if n == 0 {
        return Err(CalibrationError::BadParameter("empty frame".into()));
    }
    let m = frame[0].len();
    if m != 2 * n {
        return Err(CalibrationError::AmbientMismatch {
            form: 2 * n,
            cone: m,
        });
    }
    let omega = ComplexStructure::new(m).kahler_form();
    check_ambient(&omega, frame)?;
    let q = checked_frame(frame)?;
    let mut lag = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            lag = lag.max(omega.evaluate(&[q[i].clone(), q[j].clone()])?.abs());
        }
    }
    // Im(e^{-i theta} Omega) = Re(e^{-i (theta + pi/2)} Omega).
    let im_part = build_calibration(&CalibrationSpec::SpecialLagrangian {
        n,
        theta: theta + std::f64::consts::FRAC_PI_2,
    })?;
    let phase = im_part.evaluate(&q)?.abs();
    Ok((lag, phase))
}

/// Phase of the holomorphic volume form on an n-frame in `R^{2n}`, from
/// `Omega(frame) = |Omega(frame)| e^{i angle}`.
pub fn detect_sl_angle(frame: &[Vec<f64>]) -> Result<f64, CalibrationError> {
    let n = frame.len();
    if n == 0 || frame[0].len() != 2 * n {
        return Err(CalibrationError::AmbientMismatch {
            form: 2 * n,
            cone: frame.first().map_or(0, Vec::len),
        });
    }
    let (re, im) = holomorphic_volume(n)?;
    check_ambient(&re, frame)?;
    let q = checked_frame(frame)?;
    Ok(im.evaluate(&q)?.atan2(re.evaluate(&q)?))
}

/// Contracts an ambient vector into the associative form and restricts the
/// result to an oriented coassociative four-plane.
///
/// The frame is reoriented (by swapping its last two vectors when needed) so
/// the coassociative form is positive on it; with that orientation the
/// returned two-form, written in frame coordinates on `R^4`, is anti-self-dual
/// whenever the plane is coassociative. The map is linear in `v`, and over the
/// normal space of a fixed coassociative plane it scales squared lengths by
/// exactly two.
pub fn asd_form_of_normal(frame: &[Vec<f64>], v: &[f64]) -> Result<KForm, CalibrationError> {
    if frame.len() != 4 {
        return Err(CalibrationError::DegreeMismatch {
            degree: 4,
            got: frame.len(),
        });
    }
    if v.len() != 7 {
        return Err(CalibrationError::AmbientMismatch {
            form: 7,
            cone: v.len(),
        });
    }
    let phi = build_calibration(&CalibrationSpec::Associative)?;
    check_ambient(&phi, frame)?;
    let mut q = checked_frame(frame)?;
    if phi.hodge_star(1).evaluate(&q)? < 0.0 {
        q.swap(2, 3);
    }
    // The contraction identifies the normal space with anti-self-dual forms;
    // vectors with a tangential part are outside its domain.
    let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for w in &q {
        let dot: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
        if dot.abs() > FRAME_TOL * (vn + 1.0) {
            return Err(CalibrationError::BadParameter(format!(
                "vector has tangential component {dot:.3e}"
            )));
        }
    }
    let mut out = KForm::zero(4, 2)?;
    for a in 0..4 {
        for b in a + 1..4 {
            let c = phi.evaluate(&[v.to_vec(), q[a].clone(), q[b].clone()])?;
            if c != 0.0 {
                out.add_term(&[a, b], c)?;
            }
        }
    }
    Ok(out)
}

/// Comass estimate: the certified value of the form on the best orthonormal
/// frame found by random sampling plus projected gradient ascent.
#[derive(Clone, Debug, Serialize)]
pub struct ComassEstimate {
    /// Lower bound for the comass: the form evaluated on an orthonormal frame.
    pub value: f64,
    /// Frame achieving `value`.
    pub frame: Vec<Vec<f64>>,
    /// Random frames that survived orthonormalization.
    pub frames_sampled: usize,
    /// Ascent iterations spent across restarts.
    pub ascent_steps: usize,
}

/// Samples `frames` random orthonormal frames, then runs projected gradient
/// ascent from the best few. The result never overstates the comass: every
/// reported value is attained on an explicit orthonormal frame.
pub fn comass_sample(
    form: &KForm,
    frames: usize,
    seed: u64,
) -> Result<ComassEstimate, CalibrationError> {
    let k = form.degree();
    let m = form.ambient_dim();
    if k == 0 || k > m {
        return Err(CalibrationError::BadParameter(format!(
            "comass needs 1 <= degree <= ambient, got degree {k} on R^{m}"
        )));
    }
    if frames == 0 {
        return Err(CalibrationError::BadParameter(
            "need at least one random frame".into(),
        ));
    }
    const RESTARTS: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut top: Vec<(f64, Vec<Vec<f64>>)> = Vec::new();
    let mut sampled = 0usize;
    for _ in 0..frames {
        let raw: Vec<Vec<f64>> = (0..k).map(|_| gaussian_vector(m, &mut rng)).collect();
        let Ok(q) = linalg::gram_schmidt(&raw, 1e-6) else {
            continue;
        };
        sampled += 1;
        let v = form.evaluate(&q)?.abs();
        if top.len() < RESTARTS {
            top.push((v, q));
            top.sort_by(|a, b| a.0.total_cmp(&b.0));
        } else if v > top[0].0 {
            top[0] = (v, q);
            top.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
    }
    if top.is_empty() {
        return Err(CalibrationError::BadParameter(
            "every sampled frame was degenerate".into(),
        ));
    }
    let mut best_val = f64::NEG_INFINITY;
    let mut best_frame = Vec::new();
    let mut steps = 0usize;
    for (_, start) in top.into_iter().rev() {
        let (v, q, used) = ascend(form, start)?;
        steps += used;
        if v > best_val {
            best_val = v;
            best_frame = q;
        }
    }
    Ok(ComassEstimate {
        value: best_val,
        frame: best_frame,
        frames_sampled: sampled,
        ascent_steps: steps,
    })
}

/// Projected gradient ascent of `form` over orthonormal k-frames, retracting
/// by Gram-Schmidt after every ambient step.
fn ascend(form: &KForm, start: Vec<Vec<f64>>) -> Result<(f64, Vec<Vec<f64>>, usize), CalibrationError> {
    let k = form.degree();
    let m = form.ambient_dim();
    let mut frame = start;
    let mut val = form.evaluate(&frame)?;
    if val < 0.0 {
        for x in frame[0].iter_mut() {
            *x = -*x;
        }
        val = -val;
    }
    let mut step = 0.25;
    let mut steps = 0usize;
    while step > 1e-13 && steps < 600 {
        steps += 1;
        // Multilinearity: the slot-i gradient entry j is the form with
        // frame[i] replaced by the basis vector e_j.
        let mut cand = frame.clone();
        let mut probe = frame.clone();
        for i in 0..k {
            for j in 0..m {
                for (t, x) in probe[i].iter_mut().enumerate() {
                    *x = if t == j { 1.0 } else { 0.0 };
                }
                cand[i][j] += step * form.evaluate(&probe)?;
            }
            probe[i].copy_from_slice(&frame[i]);
        }
        if let Ok(q) = linalg::gram_schmidt(&cand, 1e-8) {
            let v = form.evaluate(&q)?;
            if v > val {
                frame = q;
                val = v;
                step *= 1.3;
                continue;
            }
        }
        step *= 0.5;
    }
    Ok((val, frame, steps))
}

fn gaussian_vector(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..m)
        .map(|_| {
            let a: f64 = rng.gen::<f64>().max(1e-12);
            let b: f64 = rng.gen();
            (-2.0 * a.ln()).sqrt() * (2.0 * std::f64::consts::PI * b).cos()
        })
        .collect()
}

/// Sampled residuals of one cone against one calibration.
#[derive(Clone, Debug, Serialize)]
pub struct CalibratedTestReport {
    pub cone: String,
    pub form: String,
    pub samples: usize,
    /// Largest pointwise restriction residual: associative values on triples
    /// for the coassociative form, Kahler pairings for special Lagrangians,
    /// the J-invariance defect for Kahler powers.
    pub max_restriction_residual: f64,
    /// Largest deviation of the sign-locked calibration value from one.
    pub max_value_residual: f64,
    /// Sign locking the chart orientation against the form, from the first
    /// sample.
    pub orientation_sign: f64,
    /// Phase of the holomorphic volume form at the first sample, reported on
    /// special Lagrangian runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detected_angle: Option<f64>,
    pub seed: u64,
}

/// Evaluates a calibration on sampled tangent planes of the cone over `link`.
///
/// Frames are `{sigma, E_1, ..., E_d}` at random interior chart points: the
/// radial direction followed by the oriented orthonormal tangent frame of the
/// link. The value residual is measured after locking the orientation sign on
/// the first sample, so a calibrated cone reports residuals at roundoff level
/// regardless of how the chart orients its frames.
pub fn cone_calibration_report(
    link: &LinkSpec,
    spec: &CalibrationSpec,
    samples: usize,
    seed: u64,
) -> Result<CalibratedTestReport, CalibrationError> {
    if samples == 0 {
        return Err(CalibrationError::BadParameter(
            "need at least one sample".into(),
        ));
    }
    let m = link.ambient_dim();
    if spec.ambient_dim() != m {
        return Err(CalibrationError::AmbientMismatch {
            form: spec.ambient_dim(),
            cone: m,
        });
    }
    if spec.degree() != link.cone_dim() {
        return Err(CalibrationError::DegreeMismatch {
            degree: spec.degree(),
            got: link.cone_dim(),
        });
    }
    let form = build_calibration(spec)?;
    let assoc = match spec {
        CalibrationSpec::Coassociative => Some(build_calibration(&CalibrationSpec::Associative)?),
        _ => None,
    };
    let omega = match spec {
        CalibrationSpec::SpecialLagrangian { .. } => Some(ComplexStructure::new(m).kahler_form()),
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = link.chart_domain(0);
    let mut orientation = 1.0f64;
    let mut detected = None;
    let mut max_restriction = 0.0f64;
    let mut max_value = 0.0f64;
    for s in 0..samples {
        let u: Vec<f64> = domain
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * (0.02 + 0.96 * rng.gen::<f64>()))
            .collect();
        let fd = link.frame_data(0, &u);
        let mut frame = Vec::with_capacity(link.cone_dim());
        frame.push(fd.point.clone());
        frame.extend(fd.tangent.iter().cloned());
        let val = form.evaluate(&frame)?;
        if s == 0 {
            orientation = if val < 0.0 { -1.0 } else { 1.0 };
            if let CalibrationSpec::SpecialLagrangian { .. } = spec {
                detected = Some(detect_sl_angle(&frame)?);
            }
        }
        max_value = max_value.max((orientation * val - 1.0).abs());
        let restriction = match spec {
            CalibrationSpec::Coassociative => {
                restriction_residual(assoc.as_ref().expect("built above"), &frame)?
            }
            CalibrationSpec::SpecialLagrangian { .. } => {
                let w = omega.as_ref().expect("built above");
                let mut worst = 0.0f64;
                for i in 0..frame.len() {
                    for j in i + 1..frame.len() {
                        worst = worst
                            .max(w.evaluate(&[frame[i].clone(), frame[j].clone()])?.abs());
                    }
                }
                worst
            }
            CalibrationSpec::KahlerPower { .. } => {
                j_invariance_defect(&frame, ComplexStructure::new(m))
            }
            CalibrationSpec::Associative => 0.0,
        };
        max_restriction = max_restriction.max(restriction);
    }
    Ok(CalibratedTestReport {
        cone: link_label(link),
        form: spec.label(),
        samples,
        max_restriction_residual: max_restriction,
        max_value_residual: max_value,
        orientation_sign: orientation,
        detected_angle: detected,
        seed,
    })
}

/// Phase of the holomorphic volume form on the cone over `link`, detected
/// from the tangent frame at the middle of chart zero.
pub fn detected_cone_angle(link: &LinkSpec) -> Result<f64, CalibrationError> {
    if link.ambient_dim() != 2 * link.cone_dim() {
        return Err(CalibrationError::BadParameter(format!(
            "phase detection needs a half-dimensional cone, got dimension {} in R^{}",
            link.cone_dim(),
            link.ambient_dim()
        )));
    }
    let u: Vec<f64> = link
        .chart_domain(0)
        .iter()
        .map(|&(lo, hi)| 0.5 * (lo + hi))
        .collect();
    let fd = link.frame_data(0, &u);
    let mut frame = vec![fd.point.clone()];
    frame.extend(fd.tangent.iter().cloned());
    detect_sl_angle(&frame)
}

/// How far the span of `frame` is from being J-invariant: the largest
/// distance from `J q_i` to the span.
fn j_invariance_defect(frame: &[Vec<f64>], j: ComplexStructure) -> f64 {
    let mut worst = 0.0f64;
    for v in frame {
        let jv = j.apply(v);
        let mut resid = jv.clone();
        for w in frame {
            let dot: f64 = jv.iter().zip(w).map(|(a, b)| a * b).sum();
            for (r, x) in resid.iter_mut().zip(w) {
                *r -= dot * x;
            }
        }
        worst = worst.max(resid.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    worst
}

fn link_label(link: &LinkSpec) -> String {
    match link {
        LinkSpec::RoundSphere { dim, ambient } => {
            format!("round_sphere(dim={dim},ambient={ambient})")
        }
        LinkSpec::ProductOfSpheres { k, l, .. } => format!("product_of_spheres(k={k},l={l})"),
        LinkSpec::HopfGraphLink => "hopf_graph".to_string(),
        LinkSpec::ComplexQuadricLink => "complex_quadric".to_string(),
        LinkSpec::HarveyLawsonT2Link => "harvey_lawson_t2".to_string(),
    }
}
