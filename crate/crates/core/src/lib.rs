//! Flowpipes and STL parameter synthesis for discrete-time polynomial
//! systems `x_{k+1} = f(x_k, p)` with `f` affine in the parameters.
//!
//! The pipeline maps each parallelotope of a bundle to the unit box, bounds
//! the composed dynamics with Bernstein coefficients, and either tightens the
//! bundle offsets ([`reachability`]) or turns the coefficients into linear
//! constraints on the parameters ([`synthesis`]).

pub mod bernstein;
pub mod error;
pub mod geometry;
pub mod linprog;
pub mod model_io;
pub mod polynomial;
pub mod reachability;
pub mod sampling;
pub mod stl;
pub mod synthesis;
mod syntax;

pub use error::{Error, Location, ParseError, Result};
pub use geometry::{AxisBox, Bundle, LinearSystem, LinearSystemSet, Parallelotope};
pub use polynomial::{AffineForm, AffineMap, MultiIndex, SparsePolynomial};
pub use reachability::{compute_flowpipe, Flowpipe, Model};
pub use stl::{parse_formula, Formula};
pub use synthesis::synthesize;
