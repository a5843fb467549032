//! Numerical laboratory for inner-product functions on the sphere: the
//! d-dimensional Legendre apparatus, Gaussian quadrature for the
//! coordinate-projection measure, polynomial residuals with an independent
//! least-squares oracle, explicit depth-2 lower-bound evaluation in log
//! space, and certified depth-3 ReLU constructions.
//!
//! The numeric kernels are generic over the scalar type (see
//! [`scalar::Real`]); the aliases below pin the `f64` instantiations that
//! the command-line tool and the Monte Carlo layer work with.

pub mod bounds;
pub mod constructor;
pub mod error;
#[cfg(feature = "gap_demo")]
pub mod gap_demo;
pub mod legendre;
pub mod measure;
pub mod projection;
pub mod quadrature;
pub mod relu_net;
pub mod scalar;
pub mod special;
pub mod sphere_mc;

pub use error::{Error, Result};
pub use scalar::Real;

pub type LogNumber64 = special::LogNumber<f64>;
pub type MuD64 = measure::MuD<f64>;
pub type LegendreFamily64 = legendre::LegendreFamily<f64>;
pub type QuadratureRule64 = quadrature::QuadratureRule<f64>;
pub type Expansion64 = projection::Expansion<f64>;
pub type BoundReport64 = bounds::BoundReport<f64>;
pub type ReluNetwork64 = relu_net::ReluNetwork<f64>;
pub type AffineLayer64 = relu_net::AffineLayer<f64>;
pub type Ridge1D64 = constructor::Ridge1D<f64>;
