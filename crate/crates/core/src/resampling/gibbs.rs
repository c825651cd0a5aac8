use rand::Rng;

use super::fenwick::Fenwick;
use super::{all_distinct, check, IndexSample, Stage};
use crate::error::{invalid, Result};

/// Systematic-scan Gibbs sampler whose stationary law is DRPL.
///
/// Position `ℓ` is redrawn from `w_j / Σ_{v ∉ i_{-ℓ}} w_v`: the tree holds
/// every weight except those of the other current members.
#[derive(Debug, Clone)]
pub struct GibbsState {
    weights: Vec<f64>,
    tree: Fenwick,
    indices: Vec<usize>,
}

impl GibbsState {
    pub fn new(current: &[usize], weights: &[f64]) -> Result<Self> {
        check(weights)?;
        if !all_distinct(current) {
            return Err(invalid("Gibbs start must be distinct"));
        }
        if current.iter().any(|&i| i >= weights.len() || weights[i] <= 0.0) {
            return Err(invalid("Gibbs start must index positive weights"));
        }
        let mut state = Self {
            weights: weights.to_vec(),
            tree: Fenwick::new(weights),
            indices: current.to_vec(),
        };
        state.rebuild();
        Ok(state)
    }

    // Fresh tree, discarding accumulated rounding from point updates.
    fn rebuild(&mut self) {
        self.tree = Fenwick::new(&self.weights);
        for &i in &self.indices {
            self.tree.set(i, 0.0);
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Probability that position `pos` moves to `j` in one update.
    pub fn conditional(&self, pos: usize, j: usize) -> f64 {
        let current = self.indices[pos];
        if j != current && self.tree.get(j) == 0.0 {
            return 0.0;
        }
        self.weights[j] / (self.tree.total() + self.weights[current])
    }

    pub fn update<R: Rng + ?Sized>(&mut self, pos: usize, rng: &mut R) {
        let old = self.indices[pos];
        self.tree.set(old, self.weights[old]);
        let j = self.tree.find(rng.random::<f64>() * self.tree.total());
        self.tree.set(j, 0.0);
        self.indices[pos] = j;
        debug_assert!(all_distinct(&self.indices), "Gibbs update broke distinctness");
    }

    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for pos in 0..self.indices.len() {
            self.update(pos, rng);
        }
        self.rebuild();
    }
}

/// Runs `sweeps` full Gibbs sweeps from `current`.
pub fn gibbs_refine<R: Rng + ?Sized>(
    current: &[usize],
    weights: &[f64],
    sweeps: usize,
    rng: &mut R,
) -> Result<IndexSample> {
    let mut state = GibbsState::new(current, weights)?;
    for _ in 0..sweeps {
        state.sweep(rng);
    }
    let mut s = IndexSample::new(state.indices, Stage::DrplGibbs);
    s.approximate = true;
    Ok(s)
}
