//! Quasi-periodic response solutions of the strongly damped forced oscillator
//!
//! ```text
//! ε ẍ + ẋ + ε g(x) = ε f(ωt)
//! ```
//!
//! The solution is written as x(t) = c + X(ωt) with zero-average X. The
//! nonzero Fourier modes give the *range equation*, solved for X at fixed c
//! ([`solver`]); the zero mode gives the scalar *bifurcation equation*
//! Γ(ε, c) = 0, solved for c by bisection ([`bifurcation`]). Around these sit
//! the frequency arithmetic ([`freq`]), sparse Fourier algebra ([`fourier`]),
//! an order-by-order ε expansion ([`series`]), the tree expansion with its
//! scale and counting machinery ([`trees`]) and a stiff time integrator for
//! cross-checking against trajectories ([`dynamics`]).

pub mod bifurcation;
pub mod dynamics;
pub mod error;
pub mod fmt;
pub mod fourier;
pub mod freq;
pub mod index;
pub mod model;
pub mod poly;
pub mod series;
pub mod solver;
pub mod trees;

pub use bifurcation::{BifurcationCurve, NonexistenceReport, ProbeGrid};
pub use dynamics::{AttractionReport, Trajectory};
pub use error::{Error, Result};
pub use fourier::{FourierSeries, TaylorPolynomial};
pub use freq::{DivisorTable, FrequencyVector};
pub use index::MultiIndex;
pub use model::{Problem, SolverSettings};
pub use num_complex::Complex64;
pub use poly::Polynomial;
pub use series::SeriesExpansion;
pub use solver::{ContinuationReport, ResponseSolution};
