//! Quadrature, special functions and contour integration.

pub(crate) mod airy;
mod contour;
mod laguerre;
pub(crate) mod quadrature;

pub use airy::{airy_ai, airy_ai_prime, airy_pair, airy_identity_check, airy_laplace_tail};
pub use contour::{contour_integral, pole_integrand, ContourPath};
pub use laguerre::{laguerre_poly, ln_gamma, LaguerreFunctions};
pub use quadrature::{composite, gauss_legendre, Domain, QuadratureRule};
