//! Travelling wavefronts for `g(u)u_τ + f(u)u_x = (D(u)u_x)_x + ρ(u)` with a
//! monostable reaction and a diffusivity that may change sign.
//!
//! The crate reduces the wave equation to the singular first-order problem
//! `ż = f − c·g − D·ρ/z` on each sign interval of `D·ρ`, finds the threshold
//! speed by shooting and bisection, glues the interval solutions, decides
//! whether `z/D` extends continuously across the zeros of `D`, classifies the
//! resulting front and reconstructs its profile.

pub mod error;
pub mod expr;
pub mod model;
pub mod quad;

pub use error::{Result, WaveError};
pub mod bounds;
pub mod cli;
pub mod shoot;
pub mod wave;
