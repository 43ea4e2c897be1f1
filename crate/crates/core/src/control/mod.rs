//! Finite-horizon LQR tracking controllers and closed-loop evaluation.

mod closed_loop;
mod lqr;
mod reference;
mod weights;

pub use closed_loop::{closed_loop, tracking_errors, DIVERGENCE_NORM};
pub use lqr::{feedforward, lqr_ltv, tracking_controller, GainSchedule};
pub use reference::{ReferenceSpec, Segment};
pub use weights::CostWeights;
