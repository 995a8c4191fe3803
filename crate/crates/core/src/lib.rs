//! Dynamic monetary, concave and coherent utility functionals on finite
//! filtered probability trees, with exact time-consistency checks.

pub mod composition;
pub mod consistency;
pub mod demo;
pub mod error;
pub mod filtration;
pub mod functionals;
pub mod io;
pub mod optim;
pub mod processes;
pub mod random;
pub mod scalar;

pub use error::{Error, Result};
pub use filtration::{
    build_tree, conditional_expectation, enumerate_stopping_times, ConditionalValue, FiltrationTree, NodeId,
    StoppingTime, Tree,
};
pub use processes::{classify_density, pairing, sup_norm, AdaptedProcess, DensityClass, DensityProcess};
pub use scalar::{Ext, Rational, Scalar};
