//! Spherical-radial Fourier features for the Gaussian kernel
//! `κ_σ(x, y) = exp(-‖x − y‖² / (2σ²))`.
//!
//! Frequencies are the tensor product of a generalized Gauss-Laguerre rule
//! on the radius and a quadrature rule on the unit sphere (Monte Carlo,
//! orthogonal Monte Carlo, its antipodal variant, optionally reweighted by
//! kernel quadrature). Plain random Fourier features, orthogonal random
//! features and a Halton quasi-Monte Carlo map are included as baselines,
//! together with error metrics, bound evaluators and an experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod features;
pub mod integrate;
pub mod io;
pub mod orthopoly;
pub mod radial;
pub mod spherical;
pub mod verify;

pub use error::{Error, Result};
