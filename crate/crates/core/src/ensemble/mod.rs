//! Projected ensembles of a small subsystem A, their k-th moments and the
//! comparison with Haar-random ensembles.

mod leakage;
mod moments;
mod projected;

pub use leakage::{avg_entropy, fit_leakage, LeakageFit};
pub use moments::{
    haar_moment, kth_moment, moment_entropy, permutation_operator, trace_distance, von_neumann_entropy,
    MomentMatrix, MAX_MOMENT_DIMENSION,
};
pub use projected::{
    bloch_vector, exact_ensemble, shot_ensemble, trajectory_ensemble, EnsembleAccumulator, EnsembleEntry,
    PostSelection, ProjectedEnsemble, SourceTag, DEFAULT_P_FLOOR,
};
