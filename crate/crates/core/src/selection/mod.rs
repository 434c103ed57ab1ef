//! Antenna selection algorithms: the self-organising local procedure and the
//! greedy and random baselines.

mod greedy;
mod local;
mod neighborhood;
mod random;

pub use greedy::{greedy_backward, greedy_backward_order, greedy_forward, greedy_forward_order};
pub use local::{
    local_capacities, local_proposals, local_select, local_step, local_step_traced, IterationRecord, LocalParams,
    LocalRunTrace, SubcarrierPolicy,
};
pub use neighborhood::{build_neighborhoods, NeighborhoodTable};
pub use random::random_select;
