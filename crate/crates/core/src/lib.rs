//! Subdominance-minimizing imitation learning.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every numeric piece of the
//! pipeline: margin-based Pareto-dominance losses over trajectory cost features,
//! hinge-slope optimization, two small physics environments with scripted
//! demonstrators, a softmax MLP policy with hand-written backpropagation, the
//! online / snippet / offline policy-gradient learners, preference-based
//! cost-feature learning, and satisficing evaluation.
//!
//! File formats, the CLI and anything touching the clock live in the `minsubfi`
//! companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_debug_implementations)]

extern crate alloc;

mod error;
mod math;

pub mod alpha;
pub mod decompose;
pub mod demos;
pub mod env;
pub mod eval;
pub mod features;
pub mod learners;
pub mod nn;
pub mod policy;
pub mod repr;
pub mod seed;
pub mod snippet;
pub mod subdom;
pub mod trajectory;

pub use error::{Error, Result};
pub use features::CostFeatures;
pub use subdom::{Aggregation, HingeSlopes, SubdomConfig, SubdomMode, SupportSet};
pub use trajectory::Trajectory;
