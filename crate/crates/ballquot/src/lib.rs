//! Bergman kernels of two-dimensional ball quotients by finite unitary
//! reflection groups.
//!
//! The library builds finite subgroups of `U(2)` generated by reflections
//! ([`groups`]), evaluates the weighted ball kernels attached to a quotient
//! ([`kernels`]), factors the group-averaged kernel numerator exactly over a
//! cyclotomic field ([`symbolic`]), and probes the geometric regions and
//! operator bounds behind the kernel estimates with deterministic Monte Carlo
//! audits ([`regions`], [`verify`]).
//!
//! All randomized routines are seeded and reproducible: reports serialize to
//! byte-identical JSON across runs and across rayon worker counts.

pub mod error;
pub mod groups;
pub mod kernels;
pub mod regions;
pub mod report;
pub mod sampling;
pub mod spec;
pub mod symbolic;
pub mod verify;

pub use error::{Error, Result};
pub use groups::ReflectionGroup;
pub use kernels::{BallPoint, KernelConfig};
