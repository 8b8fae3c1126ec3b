//! Numerics for regular Denjoy-Carleman classes at desk scale (one or two
//! complex variables): weight-sequence calculus, almost-analytic extension of
//! ultra-differentiable functions along commuting frames, FBI transforms on
//! maximally real submanifolds with decay classification and inversion, and
//! characteristic-set experiments for first-order nonlinear systems.
//!
//! Start with the runnable programs in `examples/`; each one exercises a
//! capability end to end. The `carleman` binary runs config-driven batch
//! experiments (`carleman run cfg.toml`, `carleman list`).

pub mod error;
pub mod numeric;
pub mod series;

pub mod sequence;
pub mod jets;
pub mod corpus;
pub mod mollifier;
pub mod manifold;
pub mod extension;
pub mod nonlinear;
pub mod experiment;
pub mod fbi;

pub use error::{Error, Result};
