//! Simulation and analysis of the coherent-state quantum coupon collector.
//!
//! A hidden set `S ⊂ [n]` is phase-encoded on a train of weak coherent
//! pulses and interfered against an unmodulated reference. Bins outside S
//! light up the detector, so the m missing elements are read off directly.
//! This crate evaluates the protocol's click statistics and sample cost under
//! loss, dark counts and imperfect visibility, checks them by Monte Carlo,
//! processes time-tagged detection events, and runs the blind-box game.

pub mod analytic;
pub mod blindbox;
pub mod error;
pub mod experiment;
pub mod ideal;
pub mod model;
pub mod montecarlo;
pub mod optimize;

pub use error::{Error, Result};
pub use model::{ChannelParams, CouponInstance, PeriodOutcome, PulseSign, PulseTrain, Verdict};
