use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;

/// The `k` nearest other antennas of every antenna, nearest first.
///
/// Optionally carries, per antenna, the users it takes into account when
/// evaluating its local capacity; `None` means all users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodTable {
    k: usize,
    neighbors: Vec<Vec<usize>>,
    local_users: Option<Vec<Vec<usize>>>,
}

/// Exact k-nearest-neighbour table by full distance sort. Ties in distance go
/// to the lower index.
pub fn build_neighborhoods(tx_positions: &[Point3], k: usize) -> Result<NeighborhoodTable> {
    let n = tx_positions.len();
    if k == 0 || k >= n {
        return Err(Error::Parameter(format!("neighbourhood size {k} not in [1, {}]", n.saturating_sub(1))));
    }
    let neighbors = tx_positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut others: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (p.distance_squared(&tx_positions[j]), j)).collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.truncate(k);
            others.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(NeighborhoodTable { k, neighbors, local_users: None })
}

impl NeighborhoodTable {
    /// Builds a table from explicit lists. Each list must have length `k`,
    /// exclude its own antenna and reference valid indices.
    pub fn from_lists(neighbors: Vec<Vec<usize>>) -> Result<Self> {
        let n = neighbors.len();
        let k = neighbors.first().map_or(0, Vec::len);
        if k == 0 || k >= n {
            return Err(Error::Parameter(format!("neighbourhood size {k} not in [1, {}]", n.saturating_sub(1))));
        }
        for (i, d) in neighbors.iter().enumerate() {
            if d.len() != k || d.contains(&i) || d.iter().any(|&j| j >= n) {
                return Err(Error::Parameter(format!("invalid neighbour list for antenna {i}")));
            }
        }
        Ok(NeighborhoodTable { k, neighbors, local_users: None })
    }

    /// Restricts every antenna's local capacity to users within `radius` metres.
    pub fn with_user_radius(mut self, tx_positions: &[Point3], user_positions: &[Point3], radius: f64) -> Result<Self> {
        if tx_positions.len() != self.neighbors.len() {
            return Err(Error::Dimension("position list does not match table".into()));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Parameter(format!("user radius {radius} must be positive")));
        }
        let r2 = radius * radius;
        self.local_users = Some(
            tx_positions
                .iter()
                .map(|a| (0..user_positions.len()).filter(|&u| a.distance_squared(&user_positions[u]) <= r2).collect())
                .collect(),
        );
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_tx(&self) -> usize {
        self.neighbors.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Users considered by antenna `i`, or `None` for all users.
    pub fn local_users(&self, i: usize) -> Option<&[usize]> {
        self.local_users.as_ref().map(|u| u[i].as_slice())
    }
}
