//! Spin branching graphs of symmetric groups, transition measures of shifted
//! Young diagrams, free cumulants, and the limit shapes of a continuous-time
//! restriction-induction walk.

pub mod branching;
pub mod curves;
pub mod dynamics;
pub mod error;
pub mod freeprob;
pub mod measures;
pub mod series;
pub mod spcore;
pub mod twisted;

pub use error::{Error, Result};
