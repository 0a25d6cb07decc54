//! The four regression back-ends side by side on one real observation
//! system, plus the algebraic identities that tie them together:
//!
//! * `pcr1(k = 2)` collapses to plain least squares,
//! * `rls(Λ = 0)` collapses to plain least squares,
//! * `pcr2(Ξ = 0)` collapses to `pcr1`,
//! * `pcr2(k = 2, Ξ = λI)` equals `rls(Λ = λI)` — regularizing every
//!   principal component equally is ridge regression in disguise.
//!
//! ```sh
//! cargo run --example solver_identities
//! ```

use pelrec::image::{build_system, DisplacementVector, MaskSpec, PixelLocation};
use pelrec::solvers::{ols, pca, pcr1, pcr2, rls, RegularizerSpec};
use pelrec::synth::{generate_texture, truth_field, warp_frame, MotionRegion, Rect, SceneSpec};

fn main() -> pelrec::Result<()> {
    // Build one genuine observation system: a textured pair with a known
    // (0.6, 0.3) shift, probed at the frame center with a 5×5 window and
    // the zero displacement as the starting guess.
    let scene = SceneSpec {
        width: 64,
        height: 64,
        texture_seed: 4,
        smoothness: 2.0,
        motion: vec![MotionRegion {
            rect: Rect::new(4, 4, 56, 56),
            velocity: DisplacementVector::new(0.6, 0.3),
        }],
        frame_count: 2,
    };
    let previous = generate_texture(&scene)?;
    let current = warp_frame(&previous, &truth_field(&scene))?;
    let sys = build_system(
        &current,
        &previous,
        PixelLocation::new(32.0, 32.0),
        DisplacementVector::zero(),
        &MaskSpec::square(2)?,
    )?;
    println!(
        "observation system: {} rows (5×5 window), true update is (0.6, 0.3)\n",
        sys.len()
    );

    let show = |name: &str, u: &nalgebra::DVector<f64>| {
        println!("{name:>22}: ({:+.6}, {:+.6})", u[0], u[1]);
    };

    let u_ols = ols(&sys)?;
    show("ols", &u_ols);
    let u_rls = rls(&sys, &RegularizerSpec::ScalarIdentity(1.0))?;
    show("rls(λ = 1)", &u_rls);
    let u_pcr1 = pcr1(&sys, 2)?;
    show("pcr1(k = 2)", &u_pcr1);
    let u_pcr1_lead = pcr1(&sys, 1)?;
    show("pcr1(k = 1)", &u_pcr1_lead);
    let u_pcr2 = pcr2(&sys, 2, &RegularizerSpec::ScalarIdentity(1.0))?;
    show("pcr2(k = 2, ξ = 1)", &u_pcr2);

    // The spectrum behind the component back-ends.
    let factors = pca(&sys, 2, false)?;
    let ev = factors.eigenvalues();
    println!(
        "\nprincipal spectrum: λ₁ = {:.2}, λ₂ = {:.2} (ratio {:.1})",
        ev[0],
        ev[1],
        ev[0] / ev[1]
    );

    // Now the identities, as measured gaps.
    println!("\ncollapse identities (relative gaps):");
    let gap = |a: &nalgebra::DVector<f64>, b: &nalgebra::DVector<f64>| {
        (a - b).norm() / b.norm()
    };
    println!("  pcr1(k=2)      vs ols       : {:.2e}", gap(&u_pcr1, &u_ols));
    let u_rls0 = rls(&sys, &RegularizerSpec::ScalarIdentity(0.0))?;
    println!("  rls(λ=0)       vs ols       : {:.2e}", gap(&u_rls0, &u_ols));
    let u_pcr2_0 = pcr2(&sys, 2, &RegularizerSpec::ScalarIdentity(0.0))?;
    println!("  pcr2(Ξ=0)      vs pcr1(k=2) : {:.2e}", gap(&u_pcr2_0, &u_pcr1));
    for lambda in [1e-3, 1.0, 1e3] {
        let reg = RegularizerSpec::ScalarIdentity(lambda);
        let gap = gap(&pcr2(&sys, 2, &reg)?, &rls(&sys, &reg)?);
        println!("  pcr2(Ξ={lambda:>5}I) vs rls       : {gap:.2e}");
    }

    // Per-component regularization is the one thing pcr2 can do that rls
    // cannot: damp only the weak direction.
    let xi = RegularizerSpec::Diagonal(vec![0.0, 25.0]);
    let u_aniso = pcr2(&sys, 2, &xi)?;
    println!("\npcr2 with Ξ = diag(0, 25) — only the weak component shrinks:");
    show("pcr2(Ξ = diag(0,25))", &u_aniso);
    Ok(())
}
