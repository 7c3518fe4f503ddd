//! Numerical verification of error-disturbance uncertainty relations on
//! finite-dimensional measurement models, a detuned qubit spin experiment,
//! and a particle on a periodic box.

// negated comparisons reject NaN together with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod measurement;
pub mod model_file;
pub mod operator;
pub mod periodic_box;
pub mod random;
pub mod relations;
pub mod spin;
pub mod witness;
