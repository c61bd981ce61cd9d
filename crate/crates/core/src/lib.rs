pub mod error;
pub mod features;
pub mod io;
pub mod optimality;
pub mod pipeline;
pub mod qcore;
pub mod reference;
pub mod states;
pub mod svm;
pub mod witness;

pub use error::{Error, Result};
