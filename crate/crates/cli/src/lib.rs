//! Configuration, orchestration and persistence for sideband-asymmetry
//! thermometry campaigns.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod ledger;
pub mod pipeline;
pub mod presets;
pub mod report;
