// SPDX-License-Identifier: Apache-2.0

//! Bloom-filter source-route forwarding with stateless ingress verification.
//!
//! * [`bloom`]: link and forwarding identifiers, membership, fill, `rho^(k l)`
//! * [`attachment`]: credentials `{eFId, h}` issued and checked by the NAP
//! * [`sim`]: deterministic single-domain simulator
//! * [`attack`]: brute-force, replay and correlation adversaries plus the
//!   analytic model
//! * [`cli`]: the `secure-lipsin` command

pub mod attachment;
pub mod attack;
pub mod bloom;
pub mod cli;
pub mod seed;
pub mod sim;
