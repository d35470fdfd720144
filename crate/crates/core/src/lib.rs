//! Pricing games between a principal seller offering a menu of bundles and
//! single-item competitors who respond with (mixed) prices.
//!
//! Values and item prices live on a uniform grid and are handled internally
//! as integer tick counts, which keeps every sale/no-sale comparison exact.

pub mod bench;
pub mod berry_esseen;
pub mod buyer;
pub mod counterexample;
pub mod dist;
pub mod error;
pub mod game;
pub mod grid;
pub mod instance;
pub mod lemmas;
pub mod menu;
pub mod normal_form;
pub mod pmf;
pub mod sensitivity;
pub mod solver;
pub mod strategy;
pub mod suites;

pub use error::{Error, Result};
