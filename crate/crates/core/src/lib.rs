//! Tree substitutions for the free-group inverse of the substitution family
//! `1 -> 12, k -> k+1 (2 <= k <= d-1), d -> 1`, their realization as real
//! trees, and the coding of the shift by the limit tree.

pub mod core_map;
pub mod error;
pub mod free_group;
pub mod par;
pub mod prefix_suffix;
pub mod symbolic;
pub mod rauzy_viz;
pub mod realization;
pub mod tree_subst;
pub mod verify;

pub use error::{Error, Result};
