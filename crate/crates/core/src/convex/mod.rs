pub mod ipm;
pub mod program;
pub mod subproblem;

pub use ipm::{IpmOptions, IpmResult, IpmStatus};
pub use program::{ConvexProgram, Power, Row, RowKind, Tag};
pub use subproblem::{
    kkt_residual, solve_subproblem, FeasibilityCut, KktResiduals, Sensitivities, SubStatus,
    SubproblemSolution,
};
