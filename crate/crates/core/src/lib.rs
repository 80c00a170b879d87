pub mod classify;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod eval;
pub mod exemplar;
pub mod numeric;
pub mod pca;
pub mod pipeline;
pub mod svr;
pub mod synth;
pub mod zsl_cv;

pub use error::{ExemError, Result};
