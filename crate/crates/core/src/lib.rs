//! Antenna-inspection pipeline: IMU-compensated tracking, keyframe
//! selection, an edge/cloud latency model, a multi-UAV coverage planner and a
//! convolution cost calculator.

pub mod antsort;
pub mod assignment;
pub mod cli;
pub mod commsim;
pub mod error;
pub mod io;
pub mod ksa;
pub mod netcost;
pub mod pipeline;
pub mod swarmplan;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
