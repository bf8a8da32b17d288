//! Acceptance gate for the workbench: twelve end-to-end criteria, one test
//! each, covering the classification sweep, curvature and spectral
//! identities, calibration residuals, second-variation decay, and the
//! homogeneous-form machinery. Each test prints a `PASS` line with its
//! runtime and enforces the runtime budget it was designed under.

use conelab::calibrations::{self, CalibrationSpec};
use conelab::cone_forms::{self, DeltaConvention, DiscreteLink, ObstructionVerdict, TorusForm};
use conelab::holo::HolomorphicPolynomial;
use conelab::links::LinkSpec;
use conelab::spectral::{self, Stability};
use conelab::variations::{self, ConePatch};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

fn finish(name: &str, start: Instant, budget: f64) {
    let dt = start.elapsed().as_secs_f64();
    println!("acceptance {name}: PASS in {dt:.2}s (budget {budget:.0}s)");
    assert!(
        dt < budget,
        "{name} exceeded its {budget:.0}s budget: {dt:.2}s"
    );
}

#[test]
fn criterion_01_product_cone_threshold() {
    let start = Instant::now();
    let rows = spectral::lawson_sweep(2, 10, 1e-9).unwrap();
    assert_eq!(rows.len(), 20, "partitions of 2..=10");
    for row in &rows {
        let n = row.n;
        let expect = ((n * n) as f64 - 8.0 * n as f64 + 8.0) / 4.0;
        assert_eq!(row.d0, expect, "index at n={n}");
        assert_eq!(
            row.verdict == Stability::StrictlyStable,
            n >= 7,
            "threshold at n={n}"
        );
    }
    finish("01 product-cone threshold", start, 1.0);
}

#[test]
fn criterion_02_curvature_identity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 1..=4usize {
        for l in k..=(9 - k) {
            let spec = LinkSpec::lawson(k, l);
            let n = spec.cone_dim() as f64;
            let domain = spec.chart_domain(0);
            for _ in 0..1000 {
                let u: Vec<f64> = domain
                    .iter()
                    .map(|&(lo, hi)| lo + (hi - lo) * (0.05 + 0.9 * rng.gen::<f64>()))
                    .collect();
                let a2 = spec.frame_data(0, &u).sff_norm_sq();
                assert!(
                    (a2 - (n - 1.0)).abs() <= 1e-6,
                    "S^{k} x S^{l}: |A|^2 = {a2} at {u:?}"
                );
            }
        }
    }
    finish("02 curvature identity", start, 10.0);
}

#[test]
fn criterion_03_radial_spectrum() {
    let start = Instant::now();
    for n in [3usize, 4, 7] {
        for eps in [(-PI).exp(), (-2.0f64).exp()] {
            let want = spectral::gamma(n, 1, eps);
            let err = |grid: usize| -> f64 {
                let got = spectral::radial_eigs(n, eps, grid, 1).unwrap().eigenvalues[0];
                (got - want).abs()
            };
            let e256 = err(256);
            assert!(
                e256 <= 0.01 * want.abs(),
                "n={n} eps={eps:.4}: error {e256:.3e} above 1%"
            );
            // Second-order convergence: halving the step cuts the error by
            // about four, and Richardson extrapolation beats the fine grid.
            let e128 = err(128);
            let ratio = e128 / e256;
            assert!(
                (3.0..5.0).contains(&ratio),
                "n={n} eps={eps:.4}: refinement ratio {ratio:.2}"
            );
            let fine = spectral::radial_eigs(n, eps, 256, 1).unwrap().eigenvalues[0];
            let coarse = spectral::radial_eigs(n, eps, 128, 1).unwrap().eigenvalues[0];
            let extrapolated = fine + (fine - coarse) / 3.0;
            assert!(
                (extrapolated - want).abs() < e256,
                "n={n} eps={eps:.4}: extrapolation does not improve on the fine grid"
            );
        }
    }
    finish("03 radial spectrum", start, 10.0);
}

#[test]
fn criterion_04_separation_identity() {
    let start = Instant::now();
    // Balanced S^1 x S^1 link, window e^{-pi}: the bottom eigenvalue of the
    // scaling-weighted operator separates into gamma_1 + mu_1 = -3/4.
    let spec = LinkSpec::lawson(1, 1);
    let eps = (-PI).exp();
    let got = spectral::truncated_cone_lambda1(&spec, eps, 32).unwrap();
    let want = spectral::lambda1(3, -2.0, eps);
    assert!((want - (-0.75)).abs() < 1e-12);
    assert!(
        (got - want).abs() <= 0.02 * want.abs(),
        "3-d eigenvalue {got} vs separated {want}"
    );
    finish("04 separation identity", start, 60.0);
}

#[test]
fn criterion_05_strict_stability_quotient() {
    let start = Instant::now();
    let spec = LinkSpec::lawson(3, 3);
    let d0 = spectral::classify(&spec, 1e-9).unwrap().d0;
    assert_eq!(d0, 0.25);

    // Random admissible sections: arbitrary support window, radial profile,
    // and link mode. Every quotient must clear the strict-stability bound.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut least = f64::INFINITY;
    for _ in 0..1000 {
        let eps = (-(1.0 + 7.0 * rng.gen::<f64>())).exp();
        let mode = rng.gen_range(0..4);
        let m = rng.gen_range(8..32);
        let psi: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() - 0.3).collect();
        let q = spectral::stability_quotient(&spec, &psi, mode, eps).unwrap();
        least = least.min(q);
        assert!(q >= 0.25 - 0.01, "quotient {q} below the stability bound");
    }
    assert!(least < 100.0, "sampler only produced huge quotients: {least}");

    // Minimizing over whole piecewise-linear spaces at a fixed window
    // approaches gamma_1 + mu_1 = 1.25 from above as the grid refines.
    let eps = (-PI).exp();
    let floor = spectral::lambda1(7, -6.0, eps);
    assert_eq!(floor, 1.25);
    let sweep = spectral::min_quotient_sweep(&spec, eps, 0, &[8, 16, 32, 64]).unwrap();
    for pair in sweep.windows(2) {
        assert!(pair[1] < pair[0], "sweep must tighten: {sweep:?}");
    }
    for q in &sweep {
        assert!(*q > floor, "sweep value {q} dips below the window floor");
    }
    assert!(
        sweep.last().unwrap() - floor <= 0.01 * floor,
        "sweep stalls at {:?}",
        sweep.last()
    );
    finish("05 strict-stability quotient", start, 60.0);
}

#[test]
fn criterion_06_calibration_residuals() {
    let start = Instant::now();
    let cases = [
        (
            LinkSpec::HopfGraphLink,
            CalibrationSpec::Coassociative,
            11u64,
        ),
        (
            LinkSpec::HarveyLawsonT2Link,
            CalibrationSpec::SpecialLagrangian { n: 3, theta: PI },
            12,
        ),
        (
            LinkSpec::ComplexQuadricLink,
            CalibrationSpec::KahlerPower { n: 3, k: 2 },
            13,
        ),
    ];
    for (link, form, seed) in cases {
        let report = calibrations::cone_calibration_report(&link, &form, 1000, seed).unwrap();
        assert!(
            report.max_restriction_residual <= 1e-8,
            "{}: restriction residual {:.3e}",
            report.cone,
            report.max_restriction_residual
        );
        assert!(
            report.max_value_residual <= 1e-8,
            "{}: value residual {:.3e}",
            report.cone,
            report.max_value_residual
        );
    }
    // Comass of the whole catalog: no orthonormal frame pushes any of the
    // four forms above one.
    let forms = [
        CalibrationSpec::Associative,
        CalibrationSpec::Coassociative,
        CalibrationSpec::SpecialLagrangian { n: 3, theta: 0.7 },
        CalibrationSpec::KahlerPower { n: 3, k: 2 },
    ];
    for (i, spec) in forms.iter().enumerate() {
        let form = calibrations::build_calibration(spec).unwrap();
        let estimate = calibrations::comass_sample(&form, 100_000, 60 + i as u64).unwrap();
        assert!(
            estimate.value <= 1.0 + 1e-9,
            "{}: comass sample {}",
            spec.label(),
            estimate.value
        );
        assert!(estimate.value > 0.99, "{}: sampler too weak", spec.label());
    }
    finish("06 calibration residuals", start, 60.0);
}

#[test]
fn criterion_07_jacobi_flow() {
    let start = Instant::now();
    let f = HolomorphicPolynomial::quadric();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let link_point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        for _ in 0..64 {
            let raw: Vec<f64> = (0..6).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
            if let Ok(p) = f.retract_to_link(&raw, 1e-12) {
                return p;
            }
        }
        panic!("link sampling kept failing to retract");
    };
    for _ in 0..100 {
        let p = link_point(&mut rng);
        let samples = variations::flow_level_sets(&f, &p, 0.1, 20).unwrap();
        for s in &samples {
            assert!(
                (s.u - s.t).abs() <= 1e-6,
                "level drifts: u={} at t={}",
                s.u,
                s.t
            );
            assert!(s.v.abs() <= 1e-6, "conjugate level moves: v={}", s.v);
        }
    }
    // Homogeneity of the variation field: |W(s p)| s^{deg - 1} is scale
    // invariant.
    let exponent = f.degree() as i32 - 1;
    for trial in 0..20 {
        let p = link_point(&mut rng);
        let reference = {
            let w = variations::jacobi_field(&f, &p).unwrap();
            w.iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        for s in [0.25f64, 1.0, 4.0] {
            let sp: Vec<f64> = p.iter().map(|x| s * x).collect();
            let w = variations::jacobi_field(&f, &sp).unwrap();
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let invariant = norm * s.powi(exponent);
            assert!(
                (invariant - reference).abs() <= 1e-10 * reference,
                "trial {trial}: homogeneity breaks at s={s}"
            );
        }
    }
    finish("07 jacobi-field flow", start, 10.0);
}

#[test]
fn criterion_08_cutoff_estimate_chain() {
    let start = Instant::now();
    let f = HolomorphicPolynomial::quadric();
    let link = LinkSpec::ComplexQuadricLink;
    // The factored cutoff value against direct quadrature of the same
    // section over the support slab.
    for scale in [4.0f64, 8.0] {
        let closed = variations::second_variation_cutoff(&f, scale, 2).unwrap();
        let profile = variations::CutoffProfile::new(scale).unwrap();
        let f_inner = f.clone();
        let link = link.clone();
        // The quadric field is homogeneous of degree -1, so evaluating at
        // the link point and dividing by r avoids the gradient floor deep
        // inside the support slab.
        let section = move |r: f64, u: &[f64]| -> Vec<f64> {
            let (phi, _) = profile.eval(r);
            if phi == 0.0 {
                return vec![0.0; 6];
            }
            let sigma = link.chart_point(0, u);
            let w = variations::jacobi_field(&f_inner, &sigma).expect("link point");
            w.iter().map(|x| phi * x / r).collect()
        };
        let patch = ConePatch::new(
            LinkSpec::ComplexQuadricLink,
            vec![-2.0 * scale, -scale, scale, 2.0 * scale],
            2,
        )
        .unwrap();
        let direct = variations::second_variation_direct(&patch, &section)
            .unwrap()
            .value;
        assert!(
            (closed - direct).abs() <= 0.02 * direct,
            "N={scale}: direct {direct} vs factored {closed}"
        );
    }
    // The gradient-of-cutoff bound holds along the whole table.
    let report = variations::rayleigh_decay(&f, &[4.0, 8.0, 16.0, 32.0], 3, 8).unwrap();
    for row in &report.rows {
        assert!(
            row.q <= row.bound * 1.01,
            "N={}: Q {} above bound {}",
            row.scale,
            row.q,
            row.bound
        );
    }
    finish("08 cutoff estimate chain", start, 120.0);
}

#[test]
fn criterion_09_decay_of_the_rayleigh_quotient() {
    let start = Instant::now();
    let f = HolomorphicPolynomial::quadric();
    let report = variations::rayleigh_decay(&f, &[4.0, 8.0, 16.0, 32.0], 3, 9).unwrap();
    let rayleigh: Vec<f64> = report.rows.iter().map(|r| r.rayleigh).collect();
    for pair in rayleigh.windows(2) {
        assert!(pair[1] < pair[0], "quotients must decay: {rayleigh:?}");
    }
    assert!(
        rayleigh[3] < 1e-2,
        "widest cutoff still carries {:.3e}",
        rayleigh[3]
    );
    for i in [1usize, 2] {
        let ratio = rayleigh[i + 1] / rayleigh[i];
        assert!(
            (0.2..=0.3).contains(&ratio),
            "doubling ratio {ratio} outside the quadratic window"
        );
    }
    finish("09 rayleigh decay", start, 120.0);
}

#[test]
fn criterion_10_homogeneous_form_identities() {
    let start = Instant::now();
    let link = DiscreteLink::FourierTorus { dim: 3, cutoff: 4 };
    // Random coefficient data never satisfies the identities, and the link
    // residuals agree with the cone-level grid residuals about that.
    for n in [4usize, 5, 6, 8] {
        let lambda = (2.0 - n as f64) / 2.0;
        for trial in 0..100 {
            let seed = 100 * n as u64 + trial;
            let eta = TorusForm::random(&link, 0, 3, 2, seed).unwrap();
            let omega = TorusForm::random(&link, 1, 3, 2, seed + 50_000).unwrap();
            let alpha = cone_forms::HomogeneousOneForm::new(lambda, eta, omega).unwrap();
            let (r1, r2, r3) = cone_forms::fhn_residuals(&alpha, n);
            let link_res = r1.max(r2).max(r3);
            let (dr, deltar) = cone_forms::cone_grid_residuals(&alpha, n, 2).unwrap();
            let grid_res = dr.max(deltar);
            assert!(
                link_res > 1e-8 && grid_res > 1e-8,
                "n={n} trial {trial}: random form slipped through ({link_res:.3e}, {grid_res:.3e})"
            );
        }
    }
    // Eigen-mode solutions vanish on both sides and reproduce the
    // eigenvalue relation exactly.
    for k in [[1i64, 0, 0], [1, 1, 0], [2, 1, 0], [1, 1, 1]] {
        for n in [4usize, 6, 8] {
            let alpha = cone_forms::fhn_mode_solution(&link, &k, n).unwrap();
            let (r1, r2, r3) = cone_forms::fhn_residuals(&alpha, n);
            assert!(r1.max(r2).max(r3) <= 1e-12, "mode {k:?} n={n}");
            let (dr, deltar) = cone_forms::cone_grid_residuals(&alpha, n, 3).unwrap();
            assert!(dr.max(deltar) <= 1e-8, "mode {k:?} n={n} on the grid");
            let eig = cone_forms::hodge_eigenvalue_of_homogeneity(alpha.lambda(), n);
            let k2: i64 = k.iter().map(|x| x * x).sum();
            assert!((eig - k2 as f64).abs() <= 1e-10);
            let lap = alpha.eta().laplacian();
            let diff = lap.add(&alpha.eta().scale(-eig)).unwrap();
            assert!(diff.max_coeff() <= 1e-10, "Laplacian misses {k:?}");
        }
    }
    // The harmonic witness at the critical homogeneity of a 4-dimensional
    // cone passes both sides.
    let eta = TorusForm::zero(&link, 0).unwrap();
    let mut omega = TorusForm::zero(&link, 1).unwrap();
    omega.add_wave(&[0], &[0, 0, 0], 1.0, 0.0).unwrap();
    let alpha = cone_forms::HomogeneousOneForm::new(-1.0, eta, omega).unwrap();
    let (r1, r2, r3) = cone_forms::fhn_residuals(&alpha, 4);
    assert_eq!(r1.max(r2).max(r3), 0.0);
    let (dr, deltar) = cone_forms::cone_grid_residuals(&alpha, 4, 3).unwrap();
    assert!(dr.max(deltar) <= 1e-10);
    finish("10 homogeneous-form identities", start, 30.0);
}

#[test]
fn criterion_11_critical_obstruction() {
    let start = Instant::now();
    let link = DiscreteLink::FourierTorus { dim: 3, cutoff: 8 };
    for n in [5usize, 6, 8] {
        let report = cone_forms::critical_oneform_obstruction(&link, n).unwrap();
        assert_eq!(report.verdict, ObstructionVerdict::NoneExists, "n={n}");
        assert!(report.required_eigenvalue < 0.0);
        assert!(report.min_hodge_eigenvalue >= -1e-10);
        assert!(report.witness_modes.is_empty());
    }
    let report = cone_forms::critical_oneform_obstruction(&link, 4).unwrap();
    assert_eq!(report.verdict, ObstructionVerdict::WitnessFound);
    assert_eq!(
        report.witness_modes,
        vec!["dtheta_1", "dtheta_2", "dtheta_3"],
        "the flat torus carries one harmonic direction per axis"
    );
    finish("11 critical obstruction", start, 10.0);
}

#[test]
fn criterion_12_radial_two_form_machinery() {
    let start = Instant::now();
    let link = DiscreteLink::FourierTorus { dim: 3, cutoff: 4 };
    // Radial decompositions of derivative and star against grid oracles.
    for trial in 0..20u64 {
        let eta = TorusForm::random(&link, 1, 4, 2, 1200 + trial).unwrap();
        let omega = TorusForm::random(&link, 2, 4, 2, 3400 + trial).unwrap();
        let alpha = cone_forms::HomogeneousTwoForm::new(eta, omega).unwrap();
        let d_res = cone_forms::cone_d_grid_residual(&alpha, 3).unwrap();
        let s_res = cone_forms::cone_star_grid_residual(&alpha, 3).unwrap();
        assert!(d_res <= 1e-8, "trial {trial}: derivative oracle {d_res:.3e}");
        assert!(s_res <= 1e-8, "trial {trial}: star oracle {s_res:.3e}");
    }
    // Nonnegative Hodge spectrum across the whole Fourier family.
    for link in [
        DiscreteLink::Circle { cutoff: 8 },
        DiscreteLink::FourierTorus { dim: 1, cutoff: 8 },
        DiscreteLink::FourierTorus { dim: 2, cutoff: 8 },
        DiscreteLink::FourierTorus { dim: 3, cutoff: 8 },
    ] {
        let report = cone_forms::hodge_psd_check(&link).unwrap();
        assert!(
            report.min_eigenvalue >= -1e-10,
            "{link:?}: min {:.3e}",
            report.min_eigenvalue
        );
    }
    // Curl spectrum: plus and minus each wavevector length, in order.
    let small = DiscreteLink::FourierTorus { dim: 3, cutoff: 3 };
    let got = cone_forms::curl_spectrum(&small, 80).unwrap();
    let mut expect: Vec<f64> = Vec::new();
    for k0 in -3i64..=3 {
        for k1 in -3i64..=3 {
            for k2 in -3i64..=3 {
                let first = [k0, k1, k2].into_iter().find(|&x| x != 0);
                if first.map_or(true, |x| x < 0) {
                    continue;
                }
                let len = ((k0 * k0 + k1 * k1 + k2 * k2) as f64).sqrt();
                expect.extend([len, len, -len, -len]);
            }
        }
    }
    expect.sort_by(|a, b| (a.abs(), *a).partial_cmp(&(b.abs(), *b)).unwrap());
    expect.truncate(80);
    for (g, e) in got.iter().zip(&expect) {
        assert!((g - e).abs() <= 1e-10, "curl eigenvalue {g} vs {e}");
    }
    // Convention ledger: the direct Hodge Laplacian gives +1 on the
    // unit-curl field, shown beside both codifferential chains.
    let ledger = cone_forms::neg1_ledger(&link).unwrap();
    let witness = ledger.witness.as_ref().expect("curl eigenfield exists");
    assert!((witness.direct_laplacian - 1.0).abs() <= 1e-12);
    assert!((witness.adjoint_chain - 1.0).abs() <= 1e-12);
    assert!((witness.uniform_chain + 1.0).abs() <= 1e-12);
    assert_eq!(ledger.adjointness_consistent, DeltaConvention::Adjoint);
    assert_eq!(ledger.delta_sign_table.len(), 3);
    // The anti-self-duality reduction certifies the same field.
    let eta = cone_forms::beltrami_field(&link).unwrap();
    let alpha = cone_forms::HomogeneousTwoForm::new(eta.clone(), eta.d()).unwrap();
    assert!(cone_forms::asd_closed_reduction(&alpha).valid);
    finish("12 radial two-form machinery", start, 60.0);
}
