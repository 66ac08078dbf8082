//! Equation systems over a relatively hyperbolic group: triangulation,
//! lifting into the free product, a bounded solver for the lifted family,
//! and a complete decision procedure for virtually abelian groups.

mod lift;
mod solve;
mod system;
mod va;

pub use lift::{
    build_lifted_family, central_triples_bounded, enumerate_central_triples,
    enumerate_param_reps, path_is_quasi_geodesic, FpSystem, LiftMode, LiftedFamily,
    LiftedMember, VarConstraint,
};
pub use solve::{
    bounded_solve, decide_existential, verify_assignment, DecideBudget, ExistentialContext,
    ExistentialOutcome, SolveBudget, SolveOutcome,
};
pub use system::{parse_system, ConstraintRef, EqSystem, EqTerm, EqWord};
pub use va::{
    diagonalize, parse_va, solve_linear, va_box_search, va_decide, LinearSolution, Matrix,
    VaElem, VaOutcome, VAStructure,
};
