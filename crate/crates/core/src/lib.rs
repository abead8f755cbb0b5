//! Semiclassical analysis of one-dimensional Schrödinger operators
//! `-h^2 ψ'' + v ψ = λ ψ` with multi-well potentials.

pub mod airy;
pub mod jet;
pub mod potential;
pub mod geometry;
pub mod quadrature;
pub mod actions;
pub mod ivp;
pub mod langer;
pub mod oracle;
pub mod par;
pub mod semiclassics;
pub mod tunneling;
pub mod cli;
