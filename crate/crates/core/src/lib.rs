//! Latent edge alignment for training semantic boundary detectors on noisy
//! annotations.

pub mod align;
pub mod assign;
pub mod bench;
pub mod cli;
pub mod grid;
pub mod io;
pub mod loss;
pub mod oracle;
pub mod train;

pub use align::{
    align, align_detailed, align_labels, realize_labels, AlignConfig, AlignError, AlignMode,
};
pub use assign::{solve_assignment, AssignError, CostArc, Matching, SparseCostGraph};
pub use grid::{EdgeLabelMap, GridError, Mapping, MultiLabelMap, PixelCoord, ProbMap};
