//! Neural-network machinery: periodic convolutions with exact adjoints, the
//! closure CNN, Adam, and reverse-mode differentiation through the unrolled
//! coarse solver.

pub mod adam;
pub mod cnn;
pub mod conv;
pub mod train;
pub mod unroll;

pub use adam::ParamStore;
pub use cnn::{Activation, CnnSpec, CnnTrace, LayerSpec};
pub use conv::ConvDims;
