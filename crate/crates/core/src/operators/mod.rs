//! Structured matrices: Fourier, shift and phase operators, circulant
//! structure, commuting classes and the rotation operators `R_θ`.

mod circulant;
mod classes;
mod matrix;
mod pauli;
mod rotation;

pub use circulant::{build_circulant, build_fp, build_x, build_z, circulant_spectrum};
pub use matrix::{ExactMatrix, Structure, MAX_MATRIX_WORDS};
pub use pauli::{
    build_f, build_x_theta, build_z_theta, commutation_phase, fourier_conjugate_x, OperatorLabel, PauliOp,
};
pub use classes::{commuting_classes, commuting_classes_with, ClassPartition, CommutingClass, EXHAUSTIVE_CLASS_LIMIT, SAMPLED_PAIRS_PER_CLASS};
pub use rotation::{
    build_mu, build_r, build_r_unphased, check_modified_group_law, verify_modified_group_law, ClosureCheck, ModifiedGroupLaw,
    MuTable, RelationCheck, Rotations, CLOSURE_PHASE_ORDER, EXHAUSTIVE_EIGEN_LIMIT,
};
