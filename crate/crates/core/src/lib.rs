//! Euler–Poisson toolkit for self-gravitating barotropic gas.
//!
//! Modules follow the structure of the problem: the pressure law ([`eos`]),
//! coordinate charts ([`coords`]), Newton potential kernels ([`gravity`]),
//! Lane–Emden equilibria ([`polytrope`]), rotating frames ([`frames`]),
//! angular-momentum transport along characteristics ([`transport`]),
//! conserved integrals ([`diagnostics`]) and the Lagrangian perturbation
//! operators ([`perturb`]).

pub mod coords;
pub mod diagnostics;
pub mod eos;
pub mod error;
pub mod field;
pub mod frames;
pub mod gravity;
pub mod numerics;
pub mod perturb;
pub mod polytrope;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
