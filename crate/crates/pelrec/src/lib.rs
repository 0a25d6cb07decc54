//! Dense pel-recursive motion estimation between image frame pairs.
//!
//! The estimator refines a per-pixel displacement `d` through a
//! predictor–corrector recursion `d_{i+1} = d_i + u_i`, where each update
//! `u_i` solves a small linear system built from displaced frame differences
//! and spatial gradients collected over a neighborhood mask. Four regression
//! back-ends are provided:
//!
//! * ordinary least squares ([`solvers::ols`]),
//! * regularized (ridge) least squares ([`solvers::rls`]),
//! * principal-component regression on the leading components
//!   ([`solvers::pcr1`]),
//! * principal-component regression with a regularizer applied in the
//!   component domain ([`solvers::pcr2`]).
//!
//! Around the core recursion the crate offers synthetic ground-truth
//! sequence generation ([`synth`]), motion-compensation quality metrics
//! ([`metrics`]), PCA-based clustering of displacement vectors
//! ([`clustering`]), and PGM / flow-field file I/O ([`io`]).
//!
//! # Example
//!
//! ```
//! use pelrec::engine::{estimate_field, EngineConfig};
//! use pelrec::image::Frame;
//! use pelrec::synth::warp_frame;
//! use pelrec::engine::DisplacementField;
//! use pelrec::image::DisplacementVector;
//!
//! // A smooth frame whose interior slides right by a quarter pixel
//! // (the border stays put so every warp source lies inside the frame).
//! let previous = Frame::from_fn(32, 32, |x, y| {
//!     128.0 + 40.0 * ((x as f64) * 0.2).sin() + 30.0 * ((y as f64) * 0.3).cos()
//! });
//! let truth = DisplacementField::from_fn(32, 32, |x, y| {
//!     if x >= 1 && y >= 1 && x <= 30 && y <= 30 {
//!         DisplacementVector::new(0.25, 0.0)
//!     } else {
//!         DisplacementVector::zero()
//!     }
//! });
//! let current = warp_frame(&previous, &truth).unwrap();
//!
//! let field = estimate_field(&current, &previous, &EngineConfig::default()).unwrap();
//! let d = field.vector(16, 16);
//! assert!((d.dx - 0.25).abs() < 0.05 && d.dy.abs() < 0.05);
//! ```

pub mod clustering;
pub mod engine;
mod error;
pub mod harness;
pub mod image;
pub mod io;
pub mod metrics;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
