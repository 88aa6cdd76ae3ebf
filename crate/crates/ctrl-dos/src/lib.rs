//! Synthesis and analysis of jamming-resilient state-feedback controllers
//! for single-input controllable LTI plants facing a periodic (PWM)
//! denial-of-service jammer.
//!
//! The pipeline: bring the plant to controllable canonical form, place all
//! closed-loop poles at -lambda, build the defective Jordan basis for the
//! repeated pole, derive the event-trigger threshold F(lambda) and the
//! certified minimal inter-event time tau_lambda, then evaluate the
//! per-period contraction coefficient C(lambda) whose sub-unity values
//! certify decay of |x(nT)| despite the jammer. A sweep over lambda locates
//! the resilience threshold lambda_bar, and the simulator replays the closed
//! loop under the jammer-aware trigger schedule or under pure event
//! triggering.

pub mod analysis;
pub mod cli;
pub mod controller;
pub mod error;
pub mod numerics;
pub mod plant;
pub mod simulator;
pub mod trigger;

pub use error::{Error, Result};
