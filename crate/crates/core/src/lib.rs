//! Simulation of observer-based, event-triggered boundary control of the
//! one-phase Stefan problem.
//!
//! Units throughout are cm, s, °C, J, kg and W.

pub mod control;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod harness;
pub mod numerics;
pub mod observer;
pub mod params;
pub mod plant;
pub mod trigger;

pub use error::{BreachKind, Error, Result};
pub use exec::Execution;
