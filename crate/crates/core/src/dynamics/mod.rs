//! Ground-truth spring-mass-damper plants.
//!
//! Five scenarios share one second-order structure `m z'' = -c_d(t, z') - C_s(t) z + ext(u)`
//! and differ in how parameters evolve, whether damping and actuation are
//! nonlinear, and which stochastic disturbances act on the velocity.

mod discretize;
mod plant;
mod scenario;

pub use discretize::{discretize, ground_truth_ltv, MatrixPair};
pub use plant::{sat, PlantParams, PlantStepper, StateVec};
pub use scenario::{Disturbance, FrameParams, ParamHold, ScenarioKind, ScenarioSpec, FRAME_SEED};
