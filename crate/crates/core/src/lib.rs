#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod math;
pub mod quadrature;
mod quadrature_nodes;
pub mod statistics;

pub use statistics::{ShiftedStatistics, StatisticsError, StatisticsKind};
pub mod assembly;
pub mod device;
pub mod diagnostics;
pub mod linalg;
pub mod solver;
#[cfg(test)]
mod testing;
