//! Small numerical building blocks shared by the engines.

pub mod fit;
pub mod gk;
pub mod sum;

pub use fit::{least_squares, linear_fit, LinearFit};
pub use gk::{integrate_1d, GkResult, GkSettings};
pub use sum::NeumaierSum;
