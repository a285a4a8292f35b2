//! Detection of floating-point errors caused by ill-conditioned atomic
//! operations.
//!
//! A program is evaluated twice: once in plain binary64 and once with a few
//! ULPs injected after every atomic operation. Operations with large
//! condition numbers amplify the injected offsets, so a large divergence
//! between the two runs flags an input as error-prone. A double-double oracle
//! backend provides an independent reference.

pub mod backend;
pub mod corpus;
pub mod dd;
pub mod expr;
pub mod linalg;
pub mod perturb;
pub mod rng;
pub mod stats;
pub mod sweep;
pub mod ulp;

pub use backend::{Arithmetic, Oracle, Plain};
pub use dd::DoubleDouble;
pub use expr::{parse, Bindings, EvalBackend, Program};
pub use perturb::{AtomicOp, PerturbationContext, PerturbationPolicy, PerturbationStrategy, TraceRecord};
pub use ulp::Divergence;
