//! Low-rank completion by a relaxed conditional-gradient outer loop with
//! alternating ridge refinement.

mod flops;
mod rsvd;
mod sampled;
mod solver;

pub use flops::{
    altmin_flops_closed, altmin_flops_sum, altmin_u_flops, altmin_v_flops, flop_count, gcg_block,
    gcg_flops, omp_flops, FlopReport,
};
pub use rsvd::{top_singular_pair, top_singular_pair_op, BlockOperator, SingularPair};
pub use sampled::{factor_entry, SampledMatrix};
pub use solver::{
    altmin_refine, descent_atom, estimate, estimate_sampled, factor_energy, line_search_theta,
    objective, update_u, update_v, upper_bound_h, AltMinOutcome, FactorEstimate, IterationRecord,
    SolverConfig, StopReason, NOISELESS_SURROGATE,
};
