//! Linear optimization over products of free, nonnegative and PSD cones.

mod program;
mod solver;
mod sparse;

pub use program::{
    entry_coefficient, smat, svec, svec_index, svec_len, Cone, ConicProgram, ProgramBuilder, PsdBlock, ResidualReport,
};
pub use solver::{solve, SolveReport, SolveStatus, SolverConfig};
pub use sparse::SparseMatrix;
