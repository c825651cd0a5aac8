//! Structural causal model simulator.
//!
//! Each assignment sets one column from a formula over earlier columns and a
//! fresh noise draw, referenced in the formula as `noise`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::discrete::DiscreteDistribution;
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::expr::Expr;
use crate::rng::RandomStream;

/// Identifier bound to the assignment's noise draw.
pub const NOISE: &str = "noise";

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    Gaussian {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        sd: f64,
    },
    /// Mixture of Gaussians; equal weights and unit scales unless given.
    GaussianMixture {
        means: Vec<f64>,
        #[serde(default)]
        sds: Option<Vec<f64>>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    Gamma {
        shape: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Discrete {
        values: Vec<f64>,
        probs: Vec<f64>,
    },
    Uniform {
        #[serde(default)]
        low: f64,
        #[serde(default = "one")]
        high: f64,
    },
    #[default]
    None,
}

impl Noise {
    pub fn normal(sd: f64) -> Self {
        Noise::Gaussian { mean: 0.0, sd }
    }
}

enum NoiseSampler {
    Normal(Normal<f64>),
    Mixture(DiscreteDistribution, Vec<Normal<f64>>),
    Gamma(Gamma<f64>),
    Discrete(DiscreteDistribution),
    Uniform(Uniform<f64>),
    None,
}

impl NoiseSampler {
    fn build(noise: &Noise) -> Result<Self> {
        let bad = |e: &dyn std::fmt::Display| invalid(format!("noise parameters: {e}"));
        Ok(match noise {
            Noise::Gaussian { mean, sd } => {
                NoiseSampler::Normal(Normal::new(*mean, *sd).map_err(|e| bad(&e))?)
            }
            Noise::GaussianMixture { means, sds, weights } => {
                let k = means.len();
                if k == 0 {
                    return Err(invalid("gaussian mixture needs at least one component"));
                }
                let sds = sds.clone().unwrap_or_else(|| vec![1.0; k]);
                let weights = weights.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
                if sds.len() != k || weights.len() != k {
                    return Err(invalid("gaussian mixture parameter lengths differ"));
                }
                let comps = means
                    .iter()
                    .zip(&sds)
                    .map(|(m, s)| Normal::new(*m, *s).map_err(|e| bad(&e)))
                    .collect::<Result<Vec<_>>>()?;
                let pick = DiscreteDistribution::new((0..k).map(|i| i as f64).collect(), weights)?;
                NoiseSampler::Mixture(pick, comps)
            }
            Noise::Gamma { shape, scale } => {
                NoiseSampler::Gamma(Gamma::new(*shape, *scale).map_err(|e| bad(&e))?)
            }
            Noise::Discrete { values, probs } => {
                NoiseSampler::Discrete(DiscreteDistribution::new(values.clone(), probs.clone())?)
            }
            Noise::Uniform { low, high } => {
                NoiseSampler::Uniform(Uniform::new(*low, *high).map_err(|e| bad(&e))?)
            }
            Noise::None => NoiseSampler::None,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseSampler::Normal(d) => d.sample(rng),
            NoiseSampler::Mixture(pick, comps) => comps[pick.sample(rng) as usize].sample(rng),
            NoiseSampler::Gamma(d) => d.sample(rng),
            NoiseSampler::Discrete(d) => d.sample(rng),
            NoiseSampler::Uniform(d) => d.sample(rng),
            NoiseSampler::None => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub target: String,
    pub formula: String,
    #[serde(default)]
    pub noise: Noise,
    /// Latent columns are simulated but left out of the output.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub latent: bool,
}

impl Assignment {
    pub fn new(target: &str, formula: &str, noise: Noise) -> Self {
        Self {
            target: target.to_string(),
            formula: formula.to_string(),
            noise,
            latent: false,
        }
    }

    pub fn latent(mut self) -> Self {
        self.latent = true;
        self
    }
}

enum Slot {
    Column(usize),
    Noise,
}

struct Compiled {
    expr: Expr,
    slots: Vec<Slot>,
    noise: NoiseSampler,
}

/// Ordered structural assignments; every formula may only read earlier targets.
#[derive(Serialize, Deserialize)]
#[serde(try_from = "Vec<Assignment>", into = "Vec<Assignment>")]
pub struct ScmSpec {
    assignments: Vec<Assignment>,
    #[serde(skip)]
    compiled: Vec<Compiled>,
}

impl Clone for ScmSpec {
    fn clone(&self) -> Self {
        Self::new(self.assignments.clone()).expect("validated on construction")
    }
}

impl std::fmt::Debug for ScmSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(&self.assignments).finish()
    }
}

impl TryFrom<Vec<Assignment>> for ScmSpec {
    type Error = Error;

    fn try_from(a: Vec<Assignment>) -> Result<Self> {
        Self::new(a)
    }
}

impl From<ScmSpec> for Vec<Assignment> {
    fn from(s: ScmSpec) -> Self {
        s.assignments
    }
}

impl ScmSpec {
    pub fn new(assignments: Vec<Assignment>) -> Result<Self> {
        if assignments.is_empty() {
            return Err(invalid("an SCM needs at least one assignment"));
        }
        let mut compiled = Vec::with_capacity(assignments.len());
        for (k, a) in assignments.iter().enumerate() {
            if a.target == NOISE {
                return Err(invalid(format!("`{NOISE}` is reserved")));
            }
            if assignments[..k].iter().any(|b| b.target == a.target) {
                return Err(invalid(format!("column `{}` assigned twice", a.target)));
            }
            let expr = Expr::parse(&a.formula)?;
            let slots = expr
                .variables()
                .iter()
                .map(|v| {
                    if v == NOISE {
                        Ok(Slot::Noise)
                    } else {
                        assignments[..k]
                            .iter()
                            .position(|b| b.target == *v)
                            .map(Slot::Column)
                            .ok_or_else(|| {
                                Error::Expression(format!(
                                    "`{v}` in the formula for `{}` is not an earlier column",
                                    a.target
                                ))
                            })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            compiled.push(Compiled {
                expr,
                slots,
                noise: NoiseSampler::build(&a.noise)?,
            });
        }
        Ok(Self {
            assignments,
            compiled,
        })
    }

    pub fn assignments(&self) -> &[Assignment] {
        &self.assignments
    }

    /// Names of the observed (non-latent) columns, in assignment order.
    pub fn observed_columns(&self) -> Vec<String> {
        self.assignments
            .iter()
            .filter(|a| !a.latent)
            .map(|a| a.target.clone())
            .collect()
    }

    fn draw_row<R: Rng + ?Sized>(&self, rng: &mut R, row: &mut [f64], args: &mut Vec<f64>) {
        for (k, c) in self.compiled.iter().enumerate() {
            let noise = c.noise.draw(rng);
            args.clear();
            args.extend(c.slots.iter().map(|s| match s {
                Slot::Column(j) => row[*j],
                Slot::Noise => noise,
            }));
            row[k] = c.expr.eval(args);
        }
    }

    /// `n` i.i.d. rows; a pure function of `(self, n, stream)`.
    pub fn simulate(&self, n: usize, stream: RandomStream) -> Result<Dataset> {
        self.simulate_with(n, &mut stream.rng())
    }

    pub fn simulate_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Dataset> {
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        let d = self.assignments.len();
        let keep: Vec<usize> = (0..d).filter(|&k| !self.assignments[k].latent).collect();
        let mut row = vec![0.0; d];
        let mut args = Vec::new();
        let mut values = Vec::with_capacity(n * keep.len());
        for _ in 0..n {
            self.draw_row(rng, &mut row, &mut args);
            values.extend(keep.iter().map(|&k| row[k]));
        }
        Dataset::from_row_major(self.observed_columns(), values)
    }
}

/// Convenience alias for [`ScmSpec::simulate`].
pub fn scm_simulate(spec: &ScmSpec, n: usize, stream: RandomStream) -> Result<Dataset> {
    spec.simulate(n, stream)
}

/// Models used by the bundled experiments.
pub mod presets {
    use super::*;

    fn build(a: Vec<Assignment>) -> ScmSpec {
        ScmSpec::new(a).expect("preset models are valid")
    }

    /// `X = e`, `Z = X + 2e`, `Y = θX + Z + e` with standard normal noise.
    pub fn linear_ci(theta: f64) -> ScmSpec {
        build(vec![
            Assignment::new("x", "noise", Noise::normal(1.0)),
            Assignment::new("z", "x + 2*noise", Noise::normal(1.0)),
            Assignment::new("y", &format!("{theta}*x + z + noise"), Noise::normal(1.0)),
        ])
    }

    /// Bimodal `X`, `Z = -X² + e`, `Y = sin(Z) + θX^τ + e` with noise sd 2.
    pub fn mixture_ci(theta: f64, tau: u32) -> ScmSpec {
        build(vec![
            Assignment::new(
                "x",
                "noise",
                Noise::GaussianMixture {
                    means: vec![-2.0, 2.0],
                    sds: None,
                    weights: None,
                },
            ),
            Assignment::new("z", "-x^2 + noise", Noise::normal(2.0)),
            Assignment::new(
                "y",
                &format!("sin(z) + {theta}*x^{tau} + noise"),
                Noise::normal(2.0),
            ),
        ])
    }

    /// Linear Gaussian model with a latent confounder of `x2` and `x4`;
    /// `θ` is the strength of the edge `x1 → x4`.
    pub fn verma_gaussian(theta: f64) -> ScmSpec {
        let n = || Noise::normal(1.0);
        build(vec![
            Assignment::new("h", "noise", n()).latent(),
            Assignment::new("x1", "noise", n()),
            Assignment::new("x2", "x1 + h + noise", n()),
            Assignment::new("x3", "x2 + 2*noise", n()),
            Assignment::new("x4", &format!("{theta}*x1 + x3 + h + noise"), n()),
        ])
    }

    /// Nonlinear, non-Gaussian variant of [`verma_gaussian`].
    pub fn verma_nonlinear(theta: f64) -> ScmSpec {
        let n = || Noise::normal(1.0);
        build(vec![
            Assignment::new("h", "0.5*noise*noise", n()).latent(),
            Assignment::new("x1", "noise", Noise::Gamma { shape: 2.0, scale: 1.0 }),
            Assignment::new("x2", "x1*h + noise", n()),
            Assignment::new("x3", "x2*x2 + 1.5*noise", n()),
            Assignment::new("x4", &format!("{theta}*x1 + x3 + h + noise"), n()),
        ])
    }

    /// `X1 = 1 + e(var 3)`, `X2 = X1 + e(var 4)`, `X3 = X2 - X1 + e`.
    pub fn ipw_chain() -> ScmSpec {
        build(vec![
            Assignment::new("x1", "1 + noise", Noise::normal(3f64.sqrt())),
            Assignment::new("x2", "x1 + noise", Noise::normal(2.0)),
            Assignment::new("x3", "x2 - x1 + noise", Noise::normal(1.0)),
        ])
    }
}
