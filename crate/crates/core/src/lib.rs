pub mod cascade;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod littlewood_paley;
pub mod norms;
pub mod pipeline;
pub mod random;
pub mod solver;
pub mod spectral;
pub mod tower;
pub mod trajectory;

pub use error::{Error, Result};
pub use field::Field;
pub use grid::Grid;
pub use littlewood_paley::DyadicPartition;
pub use norms::BesovParams;
pub use trajectory::Trajectory;
