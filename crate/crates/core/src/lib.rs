//! Numerical toolkit for graphs of constant special Lagrangian curvature in
//! hyperbolic space.

pub mod ad;
pub mod convexops;
pub mod diag;
pub mod error;
pub mod grid;
pub mod hgeom;
pub mod par;
pub mod radial;
pub mod shape;
pub mod slcalc;
pub mod solver;
pub mod suites;

pub use error::{Error, Result};
pub use grid::{GraphFn, GraphMeta, Grid};
pub use hgeom::{DomainKind, DomainSpec, UmbilicCap};
pub use slcalc::{CurvatureQuery, SymMat};
