//! Geometric mean curvature lines on surfaces.

pub mod bde;
pub mod config;
pub mod error;
pub mod export;
pub mod flow;
pub mod models;
pub mod monge;
pub mod ode;
pub mod parabolic;
pub mod poly;
pub mod quadrature;
pub mod surface;
pub mod umbilic;

pub use config::{QuadConfig, ToleranceConfig, TraceConfig};
pub use error::{GmcError, Result};
