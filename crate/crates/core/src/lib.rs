//! Co-occurrence rate (CR) factorization of discrete probabilistic
//! graphical models.

pub mod cli;
pub mod cr;
pub mod dot;
pub mod expr;
pub mod factorize;
pub mod error;
pub mod model;
pub mod random;
pub mod separation;
pub mod verify;

pub use error::{Error, Result};
