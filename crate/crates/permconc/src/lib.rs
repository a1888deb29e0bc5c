//! Weak optimal-transport costs, infimum-convolution operators and
//! concentration-inequality checks on finite permutation groups, slices of
//! the discrete cube, and multinomial label sets.

pub mod dualops;
pub mod flow;
pub mod measures;
pub mod permcore;
pub mod sampling;
pub mod slice;
pub mod transport;
pub mod verify;
