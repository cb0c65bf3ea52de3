//! Multirate nonlinearly partitioned Runge-Kutta (MR-NPRK) time integration.
//!
//! The crate is organised bottom-up:
//!
//! * [`tableau`] holds classical and NPRK coefficients and their structural
//!   analysis (underlying methods, reduction, stage sets, coupling classes).
//! * [`methods`] builds the concrete first, second and third order methods.
//! * [`verify`] checks order conditions up to order three.
//! * [`stability`] evaluates the joint linear stability function.
//! * [`integrate`] contains the time steppers.
//! * [`problems`] provides test problems, including a Burgers equation with
//!   nonlinear diffusion.
//! * [`harness`] drives studies from the command line.

pub mod error;
pub mod harness;
pub mod integrate;
pub mod linalg;
pub mod methods;
pub mod problems;
pub mod stability;
pub mod tableau;
pub mod verify;

pub use error::{Error, Result};
pub use integrate::{integrate, PartitionedSystem, SolverConfig, StepStats, Stepper};
pub use methods::{Mr2Branch, Mr2Coefficients, Mr3Coefficients, Mr3Variant};
pub use stability::StabilityEvaluator;
pub use tableau::{ButcherTableau, Coupling, NprkTensor, StageSets};
