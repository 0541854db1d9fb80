pub mod analyze;
pub mod condense;
pub mod convert;
pub mod error;
pub mod models;
pub mod numkernel;
pub mod oracle;
pub mod structures;

pub use error::{Error, Result};
pub use numkernel::{Mat, TolerancePolicy};
