//! Core algorithms for bond percolation on the box `B(n) = [-n, n]^d`.
//!
//! Everything here is `no_std` with `alloc`: the box geometry and its
//! canonical bond order ([`lattice`]), union-find cluster counting
//! ([`clusters`]), detectors for the no-bypass, pivotality and two-arm bond
//! events ([`events`]), and exact enumeration of small boxes with
//! polynomial-in-`p` bookkeeping ([`exact`]).
//!
//! Threading, statistics and file formats live in the `bondperc-lab` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod clusters;
pub mod error;
pub mod events;
pub mod exact;
pub mod lattice;

pub use clusters::{connected_in_subgraph, count_clusters, ClusterCounter, ClusterLabeling, PathSearch};
pub use error::{EventError, ExactError, LatticeError};
pub use events::{
    event_gn, event_pivotal_en, event_two_arm_d, no_bypass_profile, EventKind, EventProbe,
    TwoArmDetector,
};
pub use exact::PolyP;
pub use lattice::{
    enumerate_configs, sample_config, Bond, BondConfig, BondSampler, BoxSpec, Probability,
    RngContract, Window,
};
