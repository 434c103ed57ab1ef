use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::capacity::SelectionMask;
use crate::error::{Error, Result};

/// Uniformly random `n_target`-subset of `n_total` antennas.
pub fn random_select(n_target: usize, n_total: usize, seed: u64) -> Result<SelectionMask> {
    if n_target > n_total {
        return Err(Error::Parameter(format!("cannot select {n_target} of {n_total} antennas")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = index::sample(&mut rng, n_total, n_target).into_vec();
    Ok(SelectionMask::from_indices(n_total, &picked))
}
