pub mod attack;
pub mod cipher;
pub mod circuit;
pub mod error;
pub mod experiment;
pub mod fault;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SeiRanking64 = attack::SeiRanking<f64>;
pub type SeiRanking32 = attack::SeiRanking<f32>;
pub type SweepResult64 = experiment::SweepResult<f64>;
pub type SweepResult32 = experiment::SweepResult<f32>;
