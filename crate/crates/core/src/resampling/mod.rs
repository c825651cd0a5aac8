//! Weighted resampling schemes.
//!
//! `REPL` draws i.i.d. categorical indices, `NO-REPL` draws sequentially
//! without replacement, and `DRPL` draws distinct index sequences with
//! probability proportional to the product of their weights. DRPL is produced
//! by a fallback chain: acceptance-rejection from `REPL`, then from `NO-REPL`,
//! then (approximately) by Gibbs sweeps started from a `NO-REPL` draw.

mod exact;
mod fenwick;
mod gibbs;
mod rejection;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
pub use exact::drpl_exact_distribution;
use fenwick::Fenwick;
pub use gibbs::{gibbs_refine, GibbsState};
pub use rejection::rejection_sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Drpl,
    NoRepl,
    Repl,
    Rejection,
}

/// Which sampler produced an [`IndexSample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Repl,
    NoRepl,
    DrplFromRepl,
    DrplFromNoRepl,
    DrplGibbs,
    Rejection,
}

impl Stage {
    /// Numeric code used in result diagnostics.
    pub fn code(self) -> f64 {
        match self {
            Stage::Repl => 0.0,
            Stage::NoRepl => 1.0,
            Stage::DrplFromRepl => 2.0,
            Stage::DrplFromNoRepl => 3.0,
            Stage::DrplGibbs => 4.0,
            Stage::Rejection => 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Attempts {
    pub repl: usize,
    pub norepl: usize,
}

/// Zero-based row indices of a resample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSample {
    pub indices: Vec<usize>,
    pub distinct: bool,
    pub stage: Stage,
    pub attempts: Attempts,
    /// True when the draw only approximately follows the intended law.
    pub approximate: bool,
}

impl IndexSample {
    fn new(indices: Vec<usize>, stage: Stage) -> Self {
        let distinct = all_distinct(&indices);
        Self {
            indices,
            distinct,
            stage,
            attempts: Attempts::default(),
            approximate: false,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

fn default_attempts() -> usize {
    1000
}

fn default_sweeps() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResamplePlan {
    #[serde(default)]
    pub scheme: Scheme,
    /// Resample size; unused by the rejection scheme.
    #[serde(default)]
    pub m: Option<usize>,
    /// Upper bound `M` on the weights, required by the rejection scheme.
    #[serde(default)]
    pub bound: Option<f64>,
    #[serde(default = "default_attempts")]
    pub max_repl_attempts: usize,
    #[serde(default = "default_attempts")]
    pub max_norepl_attempts: usize,
    #[serde(default = "default_sweeps")]
    pub gibbs_sweeps: usize,
}

impl Default for ResamplePlan {
    fn default() -> Self {
        Self {
            scheme: Scheme::Drpl,
            m: None,
            bound: None,
            max_repl_attempts: default_attempts(),
            max_norepl_attempts: default_attempts(),
            gibbs_sweeps: default_sweeps(),
        }
    }
}

impl ResamplePlan {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Draws `m` indices (the plan's own `m` is ignored) with the plan's scheme.
    pub fn draw<R: Rng + ?Sized>(&self, weights: &[f64], m: usize, rng: &mut R) -> Result<IndexSample> {
        match self.scheme {
            Scheme::Drpl => sample_drpl(weights, m, self, rng),
            Scheme::NoRepl => sample_norepl(weights, m, rng),
            Scheme::Repl => sample_repl(weights, m, rng),
            Scheme::Rejection => {
                let bound = self
                    .bound
                    .ok_or_else(|| invalid("the rejection scheme needs a weight bound"))?;
                rejection_sample(weights, bound, rng)
            }
        }
    }
}

fn all_distinct(indices: &[usize]) -> bool {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).all(|w| w[0] != w[1])
}

/// Validates weights and returns their sum and the number of positive entries.
fn check(weights: &[f64]) -> Result<(f64, usize)> {
    let mut total = 0.0;
    let mut positive = 0;
    for (index, &w) in weights.iter().enumerate() {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::NegativeWeight { index, value: w });
        }
        if w > 0.0 {
            positive += 1;
        }
        total += w;
    }
    if positive == 0 {
        return Err(Error::DegenerateWeights);
    }
    Ok((total, positive))
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(invalid(format!("resample size must lie in [1, {n}], got {m}")));
    }
    Ok(())
}

fn check_distinct(weights: &[f64], m: usize) -> Result<f64> {
    let (total, positive) = check(weights)?;
    check_m(m, weights.len())?;
    if positive < m {
        return Err(Error::TooFewPositiveWeights {
            needed: m,
            available: positive,
        });
    }
    Ok(total)
}

/// Inverse-cdf categorical draws from cumulative sums.
struct Categorical {
    cumulative: Vec<f64>,
}

impl Categorical {
    fn new(weights: &[f64]) -> Self {
        let mut acc = 0.0;
        Self {
            cumulative: weights
                .iter()
                .map(|w| {
                    acc += w;
                    acc
                })
                .collect(),
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = rng.random::<f64>() * total;
        let k = self.cumulative.partition_point(|&c| c <= u);
        let k = k.min(self.cumulative.len() - 1);
        // skip zero-width cells that rounding could land on
        if k > 0 && self.cumulative[k] == self.cumulative[k - 1] {
            return self.cumulative.partition_point(|&c| c < self.cumulative[k]);
        }
        k
    }
}

/// `m` i.i.d. draws with `P(i) ∝ w_i`.
pub fn sample_repl<R: Rng + ?Sized>(weights: &[f64], m: usize, rng: &mut R) -> Result<IndexSample> {
    check(weights)?;
    if m == 0 {
        return Err(invalid("resample size must be positive"));
    }
    let cat = Categorical::new(weights);
    let indices = (0..m).map(|_| cat.draw(rng)).collect();
    Ok(IndexSample::new(indices, Stage::Repl))
}

/// Sequential weighted draws without replacement.
pub fn sample_norepl<R: Rng + ?Sized>(weights: &[f64], m: usize, rng: &mut R) -> Result<IndexSample> {
    check_distinct(weights, m)?;
    let mut tree = Fenwick::new(weights);
    let indices = norepl_draw(&mut tree, m, rng, |_, _| {});
    let mut s = IndexSample::new(indices, Stage::NoRepl);
    s.distinct = true;
    Ok(s)
}

/// Draws `m` indices without replacement, zeroing them in `tree`. `visit` sees
/// each chosen index together with the mass that remained after removing it.
fn norepl_draw<R: Rng + ?Sized>(
    tree: &mut Fenwick,
    m: usize,
    rng: &mut R,
    mut visit: impl FnMut(usize, f64),
) -> Vec<usize> {
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        let u = rng.random::<f64>() * tree.total();
        let i = tree.find(u);
        tree.set(i, 0.0);
        visit(i, tree.total());
        out.push(i);
    }
    out
}

/// DRPL by rejection from `REPL`: returns the first distinct draw within
/// `max_attempts` tries, with the number of tries used.
pub fn drpl_via_repl<R: Rng + ?Sized>(
    weights: &[f64],
    m: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<(Option<Vec<usize>>, usize)> {
    check_distinct(weights, m)?;
    let cat = Categorical::new(weights);
    let mut stamp = vec![0usize; weights.len()];
    let mut out = Vec::with_capacity(m);
    for attempt in 1..=max_attempts {
        out.clear();
        let mut ok = true;
        for _ in 0..m {
            let i = cat.draw(rng);
            if stamp[i] == attempt {
                ok = false;
                break;
            }
            stamp[i] = attempt;
            out.push(i);
        }
        if ok {
            return Ok((Some(out), attempt));
        }
    }
    Ok((None, max_attempts))
}

/// Log of `∏_{ℓ=1}^{m-1} (remaining mass after removing the ℓ smallest
/// positive weights)`, the largest value the proposal's product can reach.
fn log_norepl_envelope(weights: &[f64], m: usize) -> f64 {
    let mut pos: Vec<f64> = weights.iter().copied().filter(|&w| w > 0.0).collect();
    pos.sort_unstable_by(|a, b| a.total_cmp(b));
    // suffix sums, accumulated from the largest weight down for accuracy
    let mut suffix = vec![0.0; pos.len() + 1];
    for k in (0..pos.len()).rev() {
        suffix[k] = suffix[k + 1] + pos[k];
    }
    (1..m).map(|l| suffix[l].ln()).sum()
}

/// DRPL by acceptance-rejection with a `NO-REPL` proposal.
pub fn drpl_via_norepl<R: Rng + ?Sized>(
    weights: &[f64],
    m: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<(Option<Vec<usize>>, usize)> {
    check_distinct(weights, m)?;
    let envelope = log_norepl_envelope(weights, m);
    let base = Fenwick::new(weights);
    for attempt in 1..=max_attempts {
        let mut tree = base.clone();
        let mut log_num = 0.0;
        let mut step = 0;
        let draw = norepl_draw(&mut tree, m, rng, |_, remaining| {
            step += 1;
            if step < m {
                log_num += remaining.ln();
            }
        });
        let accept = (log_num - envelope).exp().clamp(0.0, 1.0);
        if rng.random::<f64>() < accept {
            return Ok((Some(draw), attempt));
        }
    }
    Ok((None, max_attempts))
}

/// Distinct-index resampling with the REPL → NO-REPL → Gibbs fallback chain.
pub fn sample_drpl<R: Rng + ?Sized>(
    weights: &[f64],
    m: usize,
    plan: &ResamplePlan,
    rng: &mut R,
) -> Result<IndexSample> {
    check_distinct(weights, m)?;
    let mut attempts = Attempts::default();
    if plan.max_repl_attempts > 0 {
        let (draw, used) = drpl_via_repl(weights, m, plan.max_repl_attempts, rng)?;
        attempts.repl = used;
        if let Some(indices) = draw {
            let mut s = IndexSample::new(indices, Stage::DrplFromRepl);
            s.attempts = attempts;
            return Ok(s);
        }
    }
    if plan.max_norepl_attempts > 0 {
        let (draw, used) = drpl_via_norepl(weights, m, plan.max_norepl_attempts, rng)?;
        attempts.norepl = used;
        if let Some(indices) = draw {
            let mut s = IndexSample::new(indices, Stage::DrplFromNoRepl);
            s.attempts = attempts;
            return Ok(s);
        }
    }
    let start = sample_norepl(weights, m, rng)?;
    let mut s = gibbs_refine(&start.indices, weights, plan.gibbs_sweeps, rng)?;
    s.attempts = attempts;
    s.approximate = true;
    Ok(s)
}
