//! Online cognitive-ergonomics engine: attention tracking from head pose,
//! upper-body kinematics, assistant interaction, and the cognitive-load
//! factors and scores computed from them, plus a deterministic session
//! simulator.

pub mod attention;
pub mod config;
pub mod engine;
pub mod factors;
pub mod interaction;
pub mod kalman;
pub mod kinematics;
pub mod session;
pub mod simulator;
pub mod transitions;
