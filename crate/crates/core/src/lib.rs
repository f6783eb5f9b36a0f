pub mod boundary;
pub mod curvature;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod io;
pub mod measures;
pub mod nn;
pub mod oracles;
pub mod polygon;
pub mod rng;
pub mod sampler;
pub mod transport;

pub use error::{Error, Result};
