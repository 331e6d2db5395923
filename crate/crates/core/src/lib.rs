pub mod avoidance;
pub mod control;
pub mod error;
pub mod experiments;
pub mod formation;
pub mod geom;
pub mod lti;
pub mod ni;
pub mod rng;
pub mod roles;
pub mod sim;
pub mod vehicle;

pub use error::{Error, Result};
