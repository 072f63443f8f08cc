//! Grid-BP: cooperative localization in wireless networks by loopy belief
//! propagation with sparse multinomial beliefs over grid-cell ids.
//!
//! Nodes never exchange coordinates, only cell ids of a shared grid system
//! (a planar lattice or an MGRS subset), so no common coordinate origin has
//! to be negotiated. Marginalization messages are approximated by Gibbs
//! sampling and converted back to parametric form with a
//! Dirichlet-multinomial MAP estimate, which keeps the product step linear
//! in the number of ids per message.
//!
//! Crate layout:
//! - [`grid`]: cell ids, metric mapping, and displacement arithmetic.
//! - [`belief`]: the sparse pmf type and its algebra.
//! - [`bp`]: per-node message passing.
//! - [`sim`]: scenario generation and the time-slot loop.
//! - [`wire`]: line-oriented message and snapshot persistence.

pub mod belief;
pub mod bp;
pub mod error;
pub mod grid;
pub mod rng;
pub mod sim;
pub mod wire;

pub use belief::{Belief, OpCounters};
pub use error::{Error, Result};
pub use grid::{CellCenter, GridId, GridSpec};
