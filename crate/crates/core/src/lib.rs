//! Identification and control of linear time-varying systems from trajectory data.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which the command-line tool and benchmarks use.

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod control;
pub mod datagen;
pub mod dynamics;
pub mod error;
pub mod ident;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type LtvModelF64 = ident::LtvModel<f64>;
pub type LtvModelF32 = ident::LtvModel<f32>;
pub type TrajectoryF64 = datagen::Trajectory<f64>;
pub type DatasetF64 = datagen::Dataset<f64>;
pub type MatrixPairF64 = dynamics::MatrixPair<f64>;
pub type GainScheduleF64 = control::GainSchedule<f64>;
