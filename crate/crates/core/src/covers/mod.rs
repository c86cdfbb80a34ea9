//! Open-cover calculus on cubical grid models.

pub mod admissible;
pub mod complex;
pub mod cover;
pub mod nerve;
pub mod solver;

pub use admissible::{Admissibility, DiameterAdmissibility, MemberAdmissibility};
pub use complex::{CellComplex, Factor};
pub use cover::{is_face, CellMap, Cover, FiberModel, JoinCover};
pub use nerve::{bridge_for, fiberwise_refines, verify_bridge, NerveMap};
pub use solver::{
    check_witness, d_conditional, d_conditional_at, d_unconditional, d_unconditional_at, minimize,
    wdim, DReport, Layout, SolveOptions, Witness,
};
