//! Numerical verification of topological conjugacy between a uniformly
//! asymptotically stable linear system `x' = A(t)x` and its bounded,
//! Lipschitz perturbation `y' = A(t)y + f(t,y)`.
//!
//! [`nonlinear::ConjugacyProblem`] holds a certified problem (`Kγ/α < 1` is
//! checked on construction). The maps `H` and `G` live in [`conjugacy`],
//! their moduli of continuity and Jacobians in [`regularity`], equilibria and
//! Lyapunov functions in [`stability`]. [`scenario`] reads `.scn` files and
//! [`suite`] turns a scenario into a [`report::CertificateReport`].
//!
//! ```
//! use conjlab::conjugacy::MapPath;
//! use conjlab::scenario::load_scenario;
//!
//! let sc = load_scenario("
//! [linear]
//! A = -1
//! [perturbation]
//! f = scaled_sin(0.2)
//! [constants]
//! K = 1
//! alpha = 1
//! M = 1
//! gamma = 0.2
//! mu = 0.2
//! ").unwrap();
//! let p = &sc.problem;
//! let h = p.h_map(2.0, &[0.5], MapPath::FlowComposition).unwrap();
//! let back = p.g_map(2.0, &h, MapPath::FlowComposition).unwrap();
//! assert!((back[0] - 0.5).abs() < 1e-6);
//! assert!((h[0] - 0.5).abs() <= p.proximity_bound());
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conjugacy;
pub mod error;
pub mod linalg;
pub mod linear;
pub mod nonlinear;
pub mod ode;
pub mod plot;
pub mod regularity;
pub mod report;
pub mod scenario;
pub mod stability;
pub mod suite;
pub mod tolerances;

pub use error::{Error, Result};
