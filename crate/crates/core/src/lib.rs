//! Numerical laboratory for critical continuous-time Markov branching processes
//! whose generating function has a regularly varying mechanism.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod branching;
pub mod error;
pub mod exec;
pub mod harness;
pub mod kolmogorov;
pub mod laplace;
pub mod numerics;
pub mod ode;
pub mod series;
pub mod simulator;
pub mod special;
pub mod sv;

pub use error::{CritError, Result};
