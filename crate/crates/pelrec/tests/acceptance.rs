//! Acceptance gate: ten criteria the toolkit must meet before a release.
//!
//! Each criterion is one test that prints a single `ACCEPTANCE <nn> ...:
//! PASS` line (visible with `cargo test --test acceptance -- --nocapture`).
//! Tolerances are pinned here, next to the assertions, so a regression
//! shows up as a red test rather than a silently relaxed bound.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pelrec::clustering::{classify, fit_classes, project_dvs, Verdict};
use pelrec::engine::{
    estimate_field, estimate_sequence, DisplacementField, EngineConfig, EstimatorKind,
    PixelStatus,
};
use pelrec::image::{
    bilinear_sample, spatial_gradient, DisplacementVector, Frame, ObservationSystem,
    PixelLocation,
};
use pelrec::io::{decode_flow, decode_pgm, encode_flow, encode_pgm};
use pelrec::metrics::{endpoint_error_with_margin, imc_frame, imc_sequence};
use pelrec::solvers::{ols, pca, pcr1, pcr2, rls, RegularizerSpec};
use pelrec::synth::{
    add_noise, generate_texture, make_sequence, measured_snr_db, noise_variance, truth_field,
    warp_frame, MotionRegion, NoiseSpec, Rect, SceneSpec,
};

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

/// Draws a well-conditioned random N×2 observation system.
fn random_system(rng: &mut ChaCha8Rng, n: usize) -> ObservationSystem {
    loop {
        let g = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let z = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        // Keep only comfortably conditioned normal matrices so the
        // solver-identity tolerances measure algebra, not conditioning.
        let eig = SymmetricEigen::new(g.transpose() * &g);
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if min > 0.0 && max / min < 1e6 {
            return ObservationSystem::new(g, z).expect("valid random system");
        }
    }
}

fn relative_gap(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// The sizes the criteria cycle through: 3×3, 5×5, and 7×7 masks.
const SYSTEM_SIZES: [usize; 3] = [9, 25, 49];

/// A moderately textured scene with one moving interior block.
fn standard_scene(size: usize, seed: u64, frame_count: usize) -> SceneSpec {
    let quarter = size / 4;
    SceneSpec {
        width: size,
        height: size,
        texture_seed: seed,
        smoothness: 2.0,
        motion: vec![MotionRegion {
            rect: Rect::new(quarter, quarter, size / 2, size / 2),
            velocity: DisplacementVector::new(1.0, 0.5),
        }],
        frame_count,
    }
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

/// Criterion 1: on 1000 random well-conditioned N×2 systems
/// (N ∈ {9, 25, 49}), pcr1(k=2) ≡ ols, rls(Λ=0) ≡ ols, and
/// pcr2(Ξ=0) ≡ pcr1, each within 1e−8 relative norm, in under 5 s.
#[test]
fn criterion_01_solver_collapse_chain() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC01);
    let zero = RegularizerSpec::ScalarIdentity(0.0);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let sys = random_system(&mut rng, SYSTEM_SIZES[i % 3]);
        let u_ols = ols(&sys).expect("ols");
        let u_pcr1 = pcr1(&sys, 2).expect("pcr1");
        let u_rls0 = rls(&sys, &zero).expect("rls(0)");
        let u_pcr2 = pcr2(&sys, 2, &zero).expect("pcr2(0)");
        worst = worst
            .max(relative_gap(&u_pcr1, &u_ols))
            .max(relative_gap(&u_rls0, &u_ols))
            .max(relative_gap(&u_pcr2, &u_pcr1));
        assert!(
            worst <= 1e-8,
            "collapse chain diverged at system {i}: relative gap {worst:.3e}"
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 5.0,
        "collapse chain took {elapsed:?}, budget is 5 s"
    );
    println!(
        "ACCEPTANCE 01 solver-collapse-chain: PASS — 1000 systems, worst relative gap {worst:.2e}, {elapsed:?}"
    );
}

/// Criterion 2: pcr2(k=2, Ξ=λI) ≡ rls(Λ=λI) within 1e−8 relative for
/// λ ∈ {1e−3, 1, 1e3} on the same 1000 systems.
#[test]
fn criterion_02_component_vs_ambient_regularization() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC01);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let sys = random_system(&mut rng, SYSTEM_SIZES[i % 3]);
        for lambda in [1e-3, 1.0, 1e3] {
            let reg = RegularizerSpec::ScalarIdentity(lambda);
            let u_rls = rls(&sys, &reg).expect("rls");
            let u_pcr2 = pcr2(&sys, 2, &reg).expect("pcr2");
            let gap = relative_gap(&u_pcr2, &u_rls);
            worst = worst.max(gap);
            assert!(
                gap <= 1e-8,
                "pcr2(k=2, {lambda}·I) differs from rls({lambda}·I) by {gap:.3e} at system {i}"
            );
        }
    }
    println!(
        "ACCEPTANCE 02 pc-vs-ambient-regularization: PASS — 3000 solves, worst relative gap {worst:.2e}"
    );
}

/// Criterion 3: every PCA factorization has orthonormal loadings
/// (≤ 1e−10), diagonal TᵀT matching the descending eigenvalues
/// (≤ 1e−9 relative), and TPᵀ reconstruction (≤ 1e−9 relative Frobenius).
#[test]
fn criterion_03_pca_factor_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC03);
    for i in 0..1000 {
        let sys = random_system(&mut rng, SYSTEM_SIZES[i % 3]);
        let f = pca(&sys, 2, false).expect("pca");
        let p = f.loadings();
        let t = f.scores();

        let ortho = (p.transpose() * p - DMatrix::identity(2, 2)).norm();
        assert!(ortho <= 1e-10, "loadings not orthonormal: {ortho:.3e} at system {i}");

        let ttt = t.transpose() * t;
        let lambda = f.eigenvalues();
        assert!(lambda[0] >= lambda[1], "eigenvalues not descending at system {i}");
        let scale = lambda[0].max(1e-300);
        assert!(
            (ttt[(0, 0)] - lambda[0]).abs() / scale <= 1e-9
                && (ttt[(1, 1)] - lambda[1]).abs() / scale <= 1e-9
                && ttt[(0, 1)].abs() / scale <= 1e-9,
            "TᵀT is not the eigenvalue diagonal at system {i}"
        );

        let recon = (f.reconstruct() - sys.gradients()).norm() / sys.gradients().norm();
        assert!(recon <= 1e-9, "reconstruction error {recon:.3e} at system {i}");
    }
    println!("ACCEPTANCE 03 pca-factor-contract: PASS — 1000 factorizations checked");
}

/// Criterion 4: bilinear_sample and spatial_gradient reproduce a bilinear
/// test function and its gradient to ≤ 1e−9 at 10⁴ random subpixel points.
#[test]
fn criterion_04_interpolation_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC04);
    let (w, h) = (31usize, 23usize);
    for trial in 0..10 {
        // f(x, y) = a + b·x + c·y + d·x·y is exactly representable by
        // bilinear interpolation on any grid.
        let a = rng.random::<f64>() * 100.0 - 50.0;
        let b = rng.random::<f64>() * 4.0 - 2.0;
        let c = rng.random::<f64>() * 4.0 - 2.0;
        let d = rng.random::<f64>() * 0.5 - 0.25;
        let frame = Frame::from_fn(w, h, |x, y| {
            let (x, y) = (x as f64, y as f64);
            a + b * x + c * y + d * x * y
        });
        for _ in 0..1000 {
            let x = rng.random::<f64>() * (w as f64 - 1.0);
            let y = rng.random::<f64>() * (h as f64 - 1.0);
            let at = PixelLocation::new(x, y);
            let value = bilinear_sample(&frame, at).expect("in-bounds sample");
            let expected = a + b * x + c * y + d * x * y;
            assert!(
                (value - expected).abs() <= 1e-9,
                "sample off by {:.3e} at ({x}, {y}) in trial {trial}",
                (value - expected).abs()
            );
            let (gx, gy) = spatial_gradient(&frame, at).expect("in-bounds gradient");
            assert!(
                (gx - (b + d * y)).abs() <= 1e-9 && (gy - (c + d * x)).abs() <= 1e-9,
                "gradient off at ({x}, {y}) in trial {trial}: ({gx}, {gy})"
            );
        }
    }
    println!(
        "ACCEPTANCE 04 interpolation-exactness: PASS — 10000 random points within 1e-9"
    );
}

/// Criterion 5: on a 128×128 smooth-texture pair whose interior shifts
/// uniformly by (1.0, 0.5) (noiseless, 5×5 window), each of RLS, PCR₁,
/// PCR₂ recovers the motion to interior mean EPE < 0.3 px and improves
/// motion compensation over the zero field, which scores exactly 0 dB.
/// Budget 30 s.
#[test]
fn criterion_05_ground_truth_recovery() {
    let start = Instant::now();
    let scene = SceneSpec {
        width: 128,
        height: 128,
        texture_seed: 42,
        smoothness: 2.0,
        // The whole frame minus a 2-pixel static rim moves by (1.0, 0.5):
        // a uniform shift everywhere the mask can reach.
        motion: vec![MotionRegion {
            rect: Rect::new(2, 2, 124, 124),
            velocity: DisplacementVector::new(1.0, 0.5),
        }],
        frame_count: 2,
    };
    let previous = generate_texture(&scene).expect("texture");
    let truth = truth_field(&scene);
    let current = warp_frame(&previous, &truth).expect("warp");

    let zero = DisplacementField::zero(128, 128);
    let zero_imc = imc_frame(&current, &previous, &zero).expect("zero-field imc");
    assert_eq!(zero_imc, 0.0, "zero field must score exactly 0 dB");

    let mut summary = Vec::new();
    for estimator in [EstimatorKind::Rls, EstimatorKind::Pcr1, EstimatorKind::Pcr2] {
        let config = EngineConfig {
            estimator,
            ..EngineConfig::default()
        };
        let field = estimate_field(&current, &previous, &config).expect("estimate");
        // Margin 8 keeps the scored pixels clear of the static rim and of
        // mask windows that straddle the motion boundary.
        let epe = endpoint_error_with_margin(&field, &truth, 8).expect("epe");
        let imc = imc_frame(&current, &previous, &field).expect("imc");
        assert!(
            epe.mean < 0.3,
            "{} interior mean EPE {:.4} px exceeds 0.3",
            estimator.name(),
            epe.mean
        );
        assert!(
            imc > zero_imc,
            "{} imc {:.3} dB does not beat the zero field",
            estimator.name(),
            imc
        );
        summary.push(format!("{} {:.3} px / {:.2} dB", estimator.name(), epe.mean, imc));
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "recovery took {elapsed:?}, budget is 30 s"
    );
    println!(
        "ACCEPTANCE 05 ground-truth-recovery: PASS — {} (zero field exactly 0 dB), {elapsed:?}",
        summary.join(", ")
    );
}

/// Criterion 6: add_noise at snr_db = 20 on a 512×512 frame measures back
/// within ±0.15 dB, and the power formula maps σ² = 100 at 20 dB to
/// σ_n² = 1 exactly (within 1e−12).
#[test]
fn criterion_06_noise_calibration() {
    assert!(
        (noise_variance(100.0, 20.0) - 1.0).abs() <= 1e-12,
        "σ² = 100 at 20 dB must give σ_n² = 1"
    );
    let scene = SceneSpec {
        width: 512,
        height: 512,
        texture_seed: 7,
        smoothness: 2.0,
        motion: vec![MotionRegion {
            rect: Rect::new(8, 8, 16, 16),
            velocity: DisplacementVector::new(1.0, 0.0),
        }],
        frame_count: 2,
    };
    let clean = generate_texture(&scene).expect("texture");
    let noisy = add_noise(
        &clean,
        &NoiseSpec {
            snr_db: 20.0,
            noise_seed: 8,
        },
    )
    .expect("noise");
    let measured = measured_snr_db(&clean, &noisy).expect("snr");
    assert!(
        (measured - 20.0).abs() <= 0.15,
        "measured SNR {measured:.4} dB is more than 0.15 dB from the 20 dB target"
    );
    println!(
        "ACCEPTANCE 06 noise-calibration: PASS — measured {measured:.4} dB vs 20 dB target; unit check exact"
    );
}

/// Criterion 7: over 10 seeded synthetic sequences at SNR 20 dB, the mean
/// sequence IMC of PCR₂ is ≥ that of OLS, and ≥ that of RLS − 0.1 dB.
/// The per-seed table prints with the PASS line.
#[test]
fn criterion_07_noisy_regime_ordering() {
    let estimators = [EstimatorKind::Ols, EstimatorKind::Rls, EstimatorKind::Pcr2];
    let mut totals = [0.0f64; 3];
    let mut table = vec![format!("{:>6} {:>8} {:>8} {:>8}", "seed", "ols", "rls", "pcr2")];
    for seed in 0..10u64 {
        let scene = standard_scene(64, 1000 + seed, 3);
        let noise = NoiseSpec {
            snr_db: 20.0,
            noise_seed: 2000 + seed,
        };
        let sequence = make_sequence(&scene, &noise).expect("sequence");
        let mut row = vec![format!("{seed:>6}")];
        for (slot, estimator) in estimators.iter().enumerate() {
            let config = EngineConfig {
                estimator: *estimator,
                ..EngineConfig::default()
            };
            let fields = estimate_sequence(&sequence.frames, &config).expect("estimate");
            let imc = imc_sequence(&sequence.frames, &fields).expect("imc");
            totals[slot] += imc;
            row.push(format!("{imc:>8.3}"));
        }
        table.push(row.join(" "));
    }
    let means: Vec<f64> = totals.iter().map(|t| t / 10.0).collect();
    let (ols_mean, rls_mean, pcr2_mean) = (means[0], means[1], means[2]);
    for line in &table {
        println!("    {line}");
    }
    assert!(
        pcr2_mean >= ols_mean,
        "mean sequence IMC: pcr2 {pcr2_mean:.3} dB < ols {ols_mean:.3} dB"
    );
    assert!(
        pcr2_mean >= rls_mean - 0.1,
        "mean sequence IMC: pcr2 {pcr2_mean:.3} dB < rls {rls_mean:.3} dB − 0.1"
    );
    println!(
        "ACCEPTANCE 07 noisy-regime-ordering: PASS — means ols {ols_mean:.3} / rls {rls_mean:.3} / pcr2 {pcr2_mean:.3} dB over 10 seeds"
    );
}

/// Independent brute-force motion-compensation ratio used by criterion 8:
/// separate bilinear arithmetic, separate bookkeeping.
fn oracle_imc_db(current: &Frame, previous: &Frame, field: &DisplacementField) -> (f64, f64, f64) {
    let (w, h) = current.dimensions();
    let mut raw_ssd = 0.0;
    let mut comp_ssd = 0.0;
    for y in 0..h {
        for x in 0..w {
            if field.status(x, y) == PixelStatus::SkippedBoundary {
                continue;
            }
            let d = field.vector(x, y);
            let sx = x as f64 - d.dx;
            let sy = y as f64 - d.dy;
            if !(sx.is_finite() && sy.is_finite())
                || sx < 0.0
                || sy < 0.0
                || sx > (w - 1) as f64
                || sy > (h - 1) as f64
            {
                continue;
            }
            let x0 = (sx.floor() as usize).min(w - 2);
            let y0 = (sy.floor() as usize).min(h - 2);
            let tx = sx - x0 as f64;
            let ty = sy - y0 as f64;
            let f00 = previous.get(x0, y0);
            let f10 = previous.get(x0 + 1, y0);
            let f01 = previous.get(x0, y0 + 1);
            let f11 = previous.get(x0 + 1, y0 + 1);
            let sample = (1.0 - tx) * (1.0 - ty) * f00
                + tx * (1.0 - ty) * f10
                + (1.0 - tx) * ty * f01
                + tx * ty * f11;
            let here = current.get(x, y);
            let raw = here - previous.get(x, y);
            let comp = here - sample;
            raw_ssd += raw * raw;
            comp_ssd += comp * comp;
        }
    }
    (10.0 * (raw_ssd / comp_ssd).log10(), raw_ssd, comp_ssd)
}

/// Criterion 8: imc_frame and imc_sequence agree with the independent
/// brute-force computation to 1e−9 dB on 3 synthetic pairs, and the zero
/// field returns exactly 0 dB.
#[test]
fn criterion_08_imc_oracle_equivalence() {
    let scene = standard_scene(48, 77, 4);
    let noise = NoiseSpec {
        snr_db: 25.0,
        noise_seed: 78,
    };
    let sequence = make_sequence(&scene, &noise).expect("sequence");
    let fields = estimate_sequence(&sequence.frames, &EngineConfig::default()).expect("estimate");
    assert_eq!(fields.len(), 3);

    let mut pooled_raw = 0.0;
    let mut pooled_comp = 0.0;
    for (j, field) in fields.iter().enumerate() {
        let ours = imc_frame(&sequence.frames[j + 1], &sequence.frames[j], field).expect("imc");
        let (oracle, raw, comp) = oracle_imc_db(&sequence.frames[j + 1], &sequence.frames[j], field);
        assert!(
            (ours - oracle).abs() <= 1e-9,
            "pair {}: imc_frame {ours:.12} dB vs oracle {oracle:.12} dB",
            j + 1
        );
        pooled_raw += raw;
        pooled_comp += comp;
    }
    let ours_seq = imc_sequence(&sequence.frames, &fields).expect("sequence imc");
    let oracle_seq = 10.0 * (pooled_raw / pooled_comp).log10();
    assert!(
        (ours_seq - oracle_seq).abs() <= 1e-9,
        "imc_sequence {ours_seq:.12} dB vs oracle {oracle_seq:.12} dB"
    );

    let zero = DisplacementField::zero(48, 48);
    let zero_imc = imc_frame(&sequence.frames[1], &sequence.frames[0], &zero).expect("zero imc");
    assert_eq!(zero_imc, 0.0, "zero field must return exactly 0 dB");
    println!(
        "ACCEPTANCE 08 imc-oracle-equivalence: PASS — 3 pairs + pooled sequence within 1e-9 dB; zero field exactly 0 dB"
    );
}

/// Criterion 9: four seeded Gaussian displacement clusters fit cleanly —
/// ≥ 95% of each class's training points fall inside its own
/// 0.975-quantile ellipse, every class center classifies as single-class,
/// and a point 10× beyond all thresholds classifies as an outlier.
#[test]
fn criterion_09_clustering_separation() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC09);
    let centers = [(2.0, 0.0), (-1.5, 1.2), (0.0, -1.8), (-0.5, -0.2)];
    let spreads = [(0.20, 0.10), (0.12, 0.18), (0.15, 0.15), (0.08, 0.12)];
    let per_class = 200usize;

    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (label, (&(cx, cy), &(sx, sy))) in centers.iter().zip(&spreads).enumerate() {
        for _ in 0..per_class {
            // Box–Muller from the seeded uniform stream keeps the fixture
            // reproducible without extra dependencies.
            let (u1, u2) = (rng.random::<f64>().max(1e-12), rng.random::<f64>());
            let r = (-2.0 * u1.ln()).sqrt();
            let (g1, g2) = (
                r * (std::f64::consts::TAU * u2).cos(),
                r * (std::f64::consts::TAU * u2).sin(),
            );
            samples.push(DisplacementVector::new(cx + sx * g1, cy + sy * g2));
            labels.push(label as i64);
        }
    }

    let projection = project_dvs(&samples, 2).expect("projection");
    let model = fit_classes(&projection, &labels).expect("fit");
    assert_eq!(model.classes().len(), 4);

    // Per-class containment inside the class's own Mahalanobis ellipse.
    let mut worst_containment = 1.0f64;
    for class in model.classes() {
        let label = class.label();
        let mut inside = 0usize;
        for (i, &d) in samples.iter().enumerate() {
            if labels[i] != label {
                continue;
            }
            let (scores, _) = projection.project(d);
            if class.mahalanobis(&scores) <= class.mahalanobis_threshold() {
                inside += 1;
            }
        }
        let fraction = inside as f64 / per_class as f64;
        worst_containment = worst_containment.min(fraction);
        assert!(
            fraction >= 0.95,
            "class {label}: only {:.1}% of its points fall inside its ellipse",
            100.0 * fraction
        );
    }

    // Class centers classify as single-class members of themselves.
    for (label, &(cx, cy)) in centers.iter().enumerate() {
        let outcome = classify(DisplacementVector::new(cx, cy), &projection, &model);
        assert_eq!(
            outcome.verdict,
            Verdict::SingleClass,
            "center of class {label} got {:?}",
            outcome.verdict
        );
        assert_eq!(outcome.memberships.first(), Some(&(label as i64)));
    }

    // A faraway point is an outlier.
    let outcome = classify(DisplacementVector::new(50.0, 50.0), &projection, &model);
    assert_eq!(outcome.verdict, Verdict::Outlier);
    println!(
        "ACCEPTANCE 09 clustering-separation: PASS — worst containment {:.1}%, centers single-class, far point outlier",
        100.0 * worst_containment
    );
}

/// Criterion 10: PGM and flow round trips are bit-exact on randomized
/// content, and the 1×1 flow file has the pinned byte-for-byte layout.
#[test]
fn criterion_10_file_format_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC10);
    for trial in 0..25 {
        let w = rng.random_range(1..40usize);
        let h = rng.random_range(1..40usize);

        // PGM: byte values survive encode → decode → encode unchanged.
        let frame = Frame::from_fn(w, h, |_, _| f64::from(rng.random::<u8>()));
        let bytes = encode_pgm(&frame);
        let decoded = decode_pgm(&bytes).expect("decode pgm");
        assert_eq!(decoded.data(), frame.data(), "pgm trial {trial}");
        assert_eq!(encode_pgm(&decoded), bytes, "pgm bytes trial {trial}");

        // Flow: f32-representable vectors plus skipped pixels survive the
        // same double round trip.
        let mut field = DisplacementField::zero(w, h);
        for y in 0..h {
            for x in 0..w {
                if rng.random::<f64>() < 0.1 {
                    field.set_entry(
                        x,
                        y,
                        DisplacementVector::zero(),
                        PixelStatus::SkippedBoundary,
                    );
                } else {
                    let dx = f64::from(rng.random::<f32>() * 4.0 - 2.0);
                    let dy = f64::from(rng.random::<f32>() * 4.0 - 2.0);
                    field.set_entry(
                        x,
                        y,
                        DisplacementVector::new(dx, dy),
                        PixelStatus::Converged,
                    );
                }
            }
        }
        let bytes = encode_flow(&field).expect("encode flow");
        let decoded = decode_flow(&bytes).expect("decode flow");
        assert_eq!(decoded, field, "flow trial {trial}");
        assert_eq!(encode_flow(&decoded).expect("re-encode"), bytes);
    }

    // Pinned 1×1 layout: 4-byte magic + two LE i32 dimensions + one LE
    // (f32, f32) pair = 20 bytes total. (A 16-byte total is arithmetically
    // impossible for this field list; the layout is authoritative.)
    let mut one = DisplacementField::zero(1, 1);
    one.set_entry(0, 0, DisplacementVector::new(0.5, -0.25), PixelStatus::Converged);
    let bytes = encode_flow(&one).expect("encode 1x1");
    assert_eq!(bytes.len(), 20);
    assert_eq!(&bytes[0..4], b"PIEH");
    assert_eq!(bytes[4..8], 1i32.to_le_bytes());
    assert_eq!(bytes[8..12], 1i32.to_le_bytes());
    assert_eq!(bytes[12..16], 0.5f32.to_le_bytes());
    assert_eq!(bytes[16..20], (-0.25f32).to_le_bytes());
    println!(
        "ACCEPTANCE 10 file-format-round-trips: PASS — 25 randomized double round trips bit-exact; 1×1 flow layout pinned (20 bytes)"
    );
}
