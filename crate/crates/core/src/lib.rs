//! Confidence sets centered at the componentwise-tuned Lasso estimator.
//!
//! The crate computes the minimal coverage probability of sets of the form
//! `beta_hat_L - n^{-1/2} M` over all true parameters, calibrates ellipse
//! and hull-of-ellipses shapes to a target level, builds the parallelogram
//! sets used under consistent tuning, and checks all of it by simulation.

pub mod calibrate;
pub mod coverage;
pub mod error;
pub mod io;
pub mod lasso;
pub mod model;
pub mod rng;
pub mod shapes;
pub mod simulate;
pub mod special;

pub use error::{Error, Result};
pub use model::{
    gram_from_design, shifted_mean, ExtendedReal, ExtendedVector, GramData, LambdaRate,
    LinearModel, Regime, SignVector, TuningVector,
};

#[cfg(test)]
#[macro_export]
macro_rules! assert_close {
    ($a:expr, $b:expr, $tol:expr) => {{
        let (a, b, tol): (f64, f64, f64) = ($a, $b, $tol);
        assert!((a - b).abs() <= tol, "{} vs {} (tol {})", a, b, tol);
    }};
}
