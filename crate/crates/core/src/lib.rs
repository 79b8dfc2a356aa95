//! Higher-order connections on fibered manifolds in coordinates.
//!
//! A first-order connection on `Y -> M` is stored as its coefficient grid
//! `F_i^p(x, y)`; a second-order nonholonomic connection as three grids
//! `(F, G, H)`. The crate composes connections with the Ehresmann product,
//! classifies the result as holonomic, semiholonomic or nonholonomic, builds
//! adapted frames for single and two-fold fibered manifolds, and integrates
//! the parallel-transport equations along curves.
//!
//! Modules:
//!
//! * [`expr`]: symbolic coefficient functions (parse, print, evaluate,
//!   differentiate, simplify, compare);
//! * [`jet`]: index sequences of nonholonomic jets and iterated tangent
//!   coordinates, pointwise semiholonomy tests;
//! * [`connection`]: connection algebra (product, curvature, exchange,
//!   the one-parameter family, classification);
//! * [`frames`]: adapted frames/coframes and the two-fold Jacobian check;
//! * [`transport`]: RK4 transport along curves and loop holonomy;
//! * [`cli`] and [`io`]: the `jetconn` command line and its JSON formats.

pub mod cli;
pub mod connection;
pub mod expr;
pub mod frames;
pub mod io;
pub mod jet;
pub mod par;
pub mod transport;

pub use connection::{Classification, Connection1, Connection2, Verdict};
pub use expr::{Expr, Sampler, SymbolUniverse};
pub use par::Execution;
