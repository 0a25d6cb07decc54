//! Segment a two-object scene by clustering its displacement vectors:
//! estimate dense motion, project the vectors onto principal components,
//! fit one Gaussian class per object, then classify every pixel (and a
//! few hand-picked probes) as single-class, multiple-loci, or outlier.
//!
//! ```sh
//! cargo run --release --example cluster_motions
//! ```

use pelrec::clustering::{classify, ellipse_parameters, fit_classes, project_dvs, Verdict};
use pelrec::engine::{estimate_field, EngineConfig, PixelStatus};
use pelrec::image::DisplacementVector;
use pelrec::synth::{make_sequence, MotionRegion, NoiseSpec, Rect, SceneSpec};

fn main() -> pelrec::Result<()> {
    // Two objects drifting apart over a static background.
    let regions = [
        MotionRegion {
            rect: Rect::new(6, 10, 20, 20),
            velocity: DisplacementVector::new(1.2, 0.0),
        },
        MotionRegion {
            rect: Rect::new(38, 34, 20, 20),
            velocity: DisplacementVector::new(-0.8, 0.9),
        },
    ];
    let scene = SceneSpec {
        width: 64,
        height: 64,
        texture_seed: 31,
        smoothness: 2.0,
        motion: regions.to_vec(),
        frame_count: 2,
    };
    // Mild measurement noise scatters the estimates so each class grows a
    // real covariance (a noiseless run collapses every ellipse to a dot).
    let sequence = make_sequence(
        &scene,
        &NoiseSpec {
            snr_db: 25.0,
            noise_seed: 8,
        },
    )?;
    let field = estimate_field(
        &sequence.frames[1],
        &sequence.frames[0],
        &EngineConfig::default(),
    )?;

    // Training set: estimated vectors from pixels whose ground-truth
    // region is unambiguous (eroded cores, so mask windows never straddle
    // an object edge). Label 0 = background, 1 and 2 = the two objects.
    let erosion = 4usize;
    let mut samples = Vec::new();
    let mut labels = Vec::new();
    for (x, y, d, status) in field.pixels() {
        if status == PixelStatus::SkippedBoundary {
            continue;
        }
        let core = |r: &Rect| {
            x >= r.x + erosion
                && y >= r.y + erosion
                && x < r.x + r.width - erosion
                && y < r.y + r.height - erosion
        };
        let near = |r: &Rect| {
            x + erosion >= r.x
                && y + erosion >= r.y
                && x < r.x + r.width + erosion
                && y < r.y + r.height + erosion
        };
        let label = if core(&regions[0].rect) {
            1
        } else if core(&regions[1].rect) {
            2
        } else if !near(&regions[0].rect) && !near(&regions[1].rect) {
            0
        } else {
            continue; // boundary band: left out of training on purpose
        };
        samples.push(d);
        labels.push(label);
    }

    let projection = project_dvs(&samples, 2)?;
    let model = fit_classes(&projection, &labels)?;

    println!("principal directions of the displacement cloud:");
    for c in 0..2 {
        println!(
            "  pc{}: ({:+.4}, {:+.4})   explained variance {:.4}",
            c + 1,
            projection.basis()[(0, c)],
            projection.basis()[(1, c)],
            projection.explained_variance()[c],
        );
    }

    println!("\nfitted classes (97.5% acceptance ellipses in component space):");
    println!(
        "{:>5} {:>7} {:>18} {:>11} {:>11} {:>12}",
        "label", "members", "center (pc1,pc2)", "semi-major", "semi-minor", "orientation"
    );
    for class in model.classes() {
        let e = ellipse_parameters(class)?;
        println!(
            "{:>5} {:>7} ({:>+8.4},{:>+8.4}) {:>11.4} {:>11.4} {:>9.3} rad",
            class.label(),
            class.members(),
            e.center[0],
            e.center[1],
            e.semi_major,
            e.semi_minor,
            e.orientation,
        );
    }

    // Sweep every trained sample back through the classifier.
    let mut single = 0usize;
    let mut multiple = 0usize;
    let mut outlier = 0usize;
    let mut agree = 0usize;
    for (&label, &d) in labels.iter().zip(&samples) {
        let c = classify(d, &projection, &model);
        match c.verdict {
            Verdict::SingleClass => single += 1,
            Verdict::MultipleLoci => multiple += 1,
            Verdict::Outlier => outlier += 1,
        }
        if c.memberships.first() == Some(&label) {
            agree += 1;
        }
    }
    println!(
        "\nre-classifying the {} training vectors:\n  single-class {:>5}\n  multiple-loci{:>5}\n  outlier      {:>5}\n  nearest class matches the ground-truth label for {} ({:.1}%)",
        samples.len(),
        single,
        multiple,
        outlier,
        agree,
        100.0 * agree as f64 / samples.len() as f64
    );

    println!("\nhand-picked probes:");
    let probes = [
        ("object 1 velocity", DisplacementVector::new(1.2, 0.0)),
        ("object 2 velocity", DisplacementVector::new(-0.8, 0.9)),
        ("background rest", DisplacementVector::zero()),
        ("wild vector", DisplacementVector::new(6.0, -5.0)),
    ];
    for (what, d) in probes {
        let c = classify(d, &projection, &model);
        let members = if c.memberships.is_empty() {
            "-".to_string()
        } else {
            c.memberships
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        println!(
            "  {:<18} ({:+.2},{:+.2})  verdict {:<13} accepted by [{}]  residual {:.2e}",
            what,
            d.dx,
            d.dy,
            c.verdict.name(),
            members,
            c.residual
        );
    }
    Ok(())
}
