//! Newton maps on the Riemann sphere: Böttcher charts, internal rays,
//! Newton graphs, cut-angle curves, degenerating families and hyperbolic
//! component classification.

pub mod angle;
pub mod bottcher;
pub mod classify;
pub mod curves;
pub mod degeneration;
pub mod error;
pub mod graph;
pub mod newton;
pub mod poly;
pub mod render;
pub mod rays;
pub mod sphere;

pub use error::{Error, Result};
pub use poly::{roots_of, Poly};
pub use sphere::{sphere_dist, AffineMap, SpherePoint};
