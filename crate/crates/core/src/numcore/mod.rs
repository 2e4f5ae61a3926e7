//! Small dense numeric core with reverse-mode differentiation, enough to
//! train the recurrent encoder.

mod adam;
mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use gradcheck::{grad_check, grad_check_with, GradCheck, Stencil, REL_ERROR_FLOOR};
pub use params::{format_f64, parse_f64, ParameterSet, SerializedTensor};
pub use tape::{bce, sigmoid, Axis, NodeId, Tape, BCE_CLAMP};
pub use tensor::Tensor;
