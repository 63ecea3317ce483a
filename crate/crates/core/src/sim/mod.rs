// SPDX-License-Identifier: Apache-2.0

//! Deterministic single-domain simulation.
//!
//! The topology manager computes a shortest path and ORs its link
//! identifiers; the NAP turns that into a credential; the publisher sends;
//! the NAP verifies once and rewrites the header; every later hop runs the
//! forwarding check alone. Each copy carries a hop budget of twice the
//! topology diameter and is never sent back over its arrival link.

mod forward;
mod topology;

pub use forward::*;
pub use topology::*;
