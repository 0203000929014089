//! Shintani zeta values, Deligne-Ribet measures, p-adic L-functions and
//! Gross-Stark units for real quadratic fields with an inert prime.

pub mod padic;
pub mod cli;
pub mod gsunit;
pub mod lfun;
pub mod measure;
pub mod quadfield;
pub mod sweep;
pub mod zeta;
