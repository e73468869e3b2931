//! Mittag-Leffler functions on the real line: evaluation, sign-change structure,
//! crossing points, random variables whose transforms they are, fractional
//! integral equations solved through them, and the inequalities they satisfy.

pub mod abel;
pub mod bounds;
pub mod crossings;
mod dd;
pub mod error;
pub mod ml_eval;
pub mod quad;
pub mod random;
pub mod roots;
pub mod special;

pub use error::{Error, Result};
pub use ml_eval::{
    count_sign_changes, eval_ml, eval_ml_ln, eval_ml_power, eval_ml_power_ab, eval_ml_report, eval_ml_scaled, kernel_value,
    residual_g, KernelDensity, MLParams, Method, MlEval, SignChangeReport,
};
pub use special::EvalConfig;
