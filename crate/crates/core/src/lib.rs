//! Circuit engine for generalized probabilistic theories.
//!
//! Circuits are typed acyclic graphs of operations. They are foliated into
//! layers of hypersurfaces and evaluated by composing per-operation transfer
//! matrices over a fiducial index space supplied by a [`theory::Theory`].

pub mod circuit;
pub mod engine;
pub mod linalg;
pub mod random;
pub mod theory;
pub mod oracle;
pub mod dsl;
pub mod gen;
pub mod checks;
pub mod report;
pub mod cli;
