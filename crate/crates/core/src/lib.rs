pub mod analyzer;
pub mod decomposition;
pub mod designer;
pub mod matrixkit;
pub mod netgraph;
pub mod sampling;
pub mod scalar;
pub mod simulator;
pub mod switching;

pub use decomposition::{AgentDecomposition, Plant, StackedDecomposition};
pub use matrixkit::{LinalgError, Matrix, Spectrum, TimeKind};
pub use netgraph::{NeighborGraph, NetworkSnapshot};
pub use scalar::Real;

pub type Mat = Matrix<f64>;
pub type Mat32 = Matrix<f32>;
