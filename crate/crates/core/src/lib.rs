pub mod aging;
pub mod cbup;
pub mod cli;
pub mod dataprep;
pub mod error;
pub mod mds;
pub mod milp;
pub mod nnbd;
pub mod nnodh;
pub mod pipeline;
pub mod scenario;

pub use error::{Error, Result};
