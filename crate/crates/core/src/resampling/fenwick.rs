/// Binary indexed tree over nonnegative weights supporting point updates and
/// inverse-cdf lookup in `O(log n)`.
#[derive(Debug, Clone)]
pub(crate) struct Fenwick {
    tree: Vec<f64>,
    leaves: Vec<f64>,
}

impl Fenwick {
    pub fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        tree[1..].copy_from_slice(weights);
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Self {
            tree,
            leaves: weights.to_vec(),
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.leaves[i]
    }

    pub fn set(&mut self, i: usize, value: f64) {
        let delta = value - self.leaves[i];
        self.leaves[i] = value;
        let n = self.leaves.len();
        let mut k = i + 1;
        while k <= n {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    pub fn total(&self) -> f64 {
        let mut k = self.leaves.len();
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s.max(0.0)
    }

    /// Smallest index whose cumulative weight exceeds `u`, restricted to
    /// positive leaves so that rounding never selects a removed entry.
    pub fn find(&self, mut u: f64) -> usize {
        let n = self.leaves.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= u {
                pos = next;
                u -= self.tree[next];
            }
            step >>= 1;
        }
        let idx = pos.min(n - 1);
        if self.leaves[idx] > 0.0 {
            return idx;
        }
        // rounding put us on an empty slot: take the nearest positive one
        (idx..n)
            .chain((0..idx).rev())
            .find(|&j| self.leaves[j] > 0.0)
            .unwrap_or(idx)
    }
}
