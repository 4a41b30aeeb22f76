//! Numerics for the mobility edge of Lévy random matrices.
//!
//! The crate computes and cross-validates the localization transition of
//! heavy-tailed symmetric random matrices: stable-law machinery, population
//! dynamics for the resolvent recursion on the Poisson weighted infinite
//! tree, the deterministic fixed-point system for the boundary pair
//! `(a(E), b(E))`, the transfer-operator eigenvalue `lambda(E, s, alpha)`,
//! the mobility-edge root scan, and finite-matrix diagnostics.

pub mod edge;
pub mod kappa;
pub mod linalg;
pub mod matrix;
pub mod pwit;
pub mod quad;
pub mod rde;
pub mod rng;
pub mod special;
pub mod stable;
pub mod transfer;
