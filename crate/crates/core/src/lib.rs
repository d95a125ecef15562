//! Quality-of-transmission estimation for WDM links.
//!
//! The crate covers the whole pipeline: a Gaussian-noise physics oracle
//! ([`physics`]), reproducible synthetic data ([`datagen`]), the fixed-length
//! feature encoding ([`features`]), a dense feed-forward network trained with
//! adamax ([`neural`]) and SNR-deviation reporting against the oracle or
//! field measurements ([`evalharness`]).

pub mod datagen;
pub mod evalharness;
pub mod features;
pub mod linkmodel;
pub mod neural;
pub mod physics;

pub use linkmodel::{Channel, ChannelPlan, LabeledRecord, Link, Payload, Scenario, Span};
