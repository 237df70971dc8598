//! Core of the retirement funding planner.
//!
//! Everything here is deterministic and allocation-only (`alloc`), so the crate
//! builds without `std`. Timing of LP solves is the only thing the `std`
//! feature adds.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod collar;
pub mod error;
pub mod lifetable;
pub mod lp;
pub mod market;
pub mod math;
pub mod planner;
pub mod policy;
pub mod profile;
pub mod sim;
pub mod tax;

pub use error::{Error, Result};
