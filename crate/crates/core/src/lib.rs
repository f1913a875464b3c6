//! Shared vocabulary of the bin stretching lower-bound toolkit.
//!
//! The game `(m, t, g)`: an adversary presents positive integer items one at a
//! time, an algorithm places each into one of `m` bins. The adversary wins once
//! some bin reaches load `t` while the items presented so far still fit into `m`
//! bins of capacity `g`.
//!
//! This crate holds the game state types ([`game`]), the recorded adversary
//! strategy ([`tree`]), its deduplicated and compressed DAG form ([`dag`]) and the
//! DOT interchange format ([`dot`]).

pub mod dag;
pub mod dot;
pub mod error;
pub mod game;
pub mod tree;

pub use dag::{DagNode, DagStats, StrategyDag};
pub use error::CoreError;
pub use game::{
    add_item, canonicalize, max_load, validate_packing, BinConfiguration, GameParams,
    ItemMultiset, PackingCertificate,
};
pub use tree::StrategyTree;
