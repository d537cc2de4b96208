//! Covariance matrix adaptation evolution strategy.
//!
//! Standard (mu/mu_w, lambda) CMA-ES with cumulative step-size adaptation,
//! rank-one and rank-mu covariance updates, and positive recombination
//! weights. The objective is maximized.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// `4 + floor(3 ln n)`.
pub fn default_population(n: usize) -> usize {
    4 + (3.0 * (n as f64).ln()).floor() as usize
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmaesConfig {
    pub initial_sigma: f64,
    /// `None` uses [`default_population`].
    pub population_size: Option<usize>,
    pub generations: usize,
}

impl Default for CmaesConfig {
    fn default() -> Self {
        Self {
            initial_sigma: 1.0,
            population_size: None,
            generations: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub generation: usize,
    pub best: f64,
    pub median: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug)]
pub struct CmaesResult {
    /// Distribution mean after the last generation.
    pub mean: Vec<f64>,
    /// Best candidate evaluated along the way.
    pub best: Vec<f64>,
    pub best_value: f64,
    pub history: Vec<Generation>,
}

/// Optimizer state. Drive it with [`Cmaes::ask`] and [`Cmaes::tell`], or use
/// [`cmaes_optimize`].
#[derive(Clone, Debug)]
pub struct Cmaes {
    n: usize,
    lambda: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
    mean: DVector<f64>,
    sigma: f64,
    cov: DMatrix<f64>,
    basis: DMatrix<f64>,
    scales: DVector<f64>,
    pc: DVector<f64>,
    ps: DVector<f64>,
    generation: usize,
    rng: seeding::Rng,
    pending: Vec<DVector<f64>>,
}

impl Cmaes {
    pub fn new(
        mean: Vec<f64>,
        initial_sigma: f64,
        population_size: Option<usize>,
        seed: u64,
    ) -> Result<Self> {
        let n = mean.len();
        if n == 0 {
            return Err(Error::invalid("CMA-ES needs at least one dimension"));
        }
        if !(initial_sigma.is_finite() && initial_sigma > 0.0) {
            return Err(Error::invalid(format!(
                "initial_sigma must be positive, got {initial_sigma}"
            )));
        }
        let lambda = population_size.unwrap_or_else(|| default_population(n));
        if lambda < 4 {
            return Err(Error::invalid("population_size must be at least 4"));
        }
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let nf = n as f64;
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Ok(Self {
            n,
            lambda,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
            mean: DVector::from_vec(mean),
            sigma: initial_sigma,
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            pc: DVector::zeros(n),
            ps: DVector::zeros(n),
            generation: 0,
            rng: seeding::rng(seed),
            pending: Vec::new(),
        })
    }

    pub fn population(&self) -> usize {
        self.lambda
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Sample the next population.
    pub fn ask(&mut self) -> Vec<Vec<f64>> {
        self.pending = (0..self.lambda)
            .map(|_| {
                let z = DVector::from_fn(self.n, |_, _| StandardNormal.sample(&mut self.rng));
                &self.basis * self.scales.component_mul(&z)
            })
            .collect();
        self.pending
            .iter()
            .map(|y| (&self.mean + self.sigma * y).as_slice().to_vec())
            .collect()
    }

    /// Update the distribution from the values of the last population.
    /// Non-finite values rank below everything else.
    pub fn tell(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.pending.len() || self.pending.is_empty() {
            return Err(Error::Dimension {
                expected: self.pending.len(),
                actual: values.len(),
            });
        }
        let key = |v: f64| if v.is_finite() { v } else { f64::NEG_INFINITY };
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| key(values[b]).total_cmp(&key(values[a])));
        let n = self.n as f64;

        let mut yw = DVector::zeros(self.n);
        for (w, &i) in self.weights.iter().zip(&order) {
            yw += *w * &self.pending[i];
        }
        self.mean += self.sigma * &yw;

        let inv_sqrt = &self.basis
            * DMatrix::from_diagonal(&self.scales.map(|d| 1.0 / d))
            * self.basis.transpose();
        self.ps = (1.0 - self.cs) * &self.ps
            + (self.cs * (2.0 - self.cs) * self.mueff).sqrt() * (inv_sqrt * &yw);
        self.generation += 1;
        let ps_norm = self.ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - self.cs).powi(2 * self.generation as i32)).sqrt()
            < (1.4 + 2.0 / (n + 1.0)) * self.chi_n;
        let h = if hsig { 1.0 } else { 0.0 };
        self.pc =
            (1.0 - self.cc) * &self.pc + h * (self.cc * (2.0 - self.cc) * self.mueff).sqrt() * &yw;

        let mut rank_mu = DMatrix::zeros(self.n, self.n);
        for (w, &i) in self.weights.iter().zip(&order) {
            let y = &self.pending[i];
            rank_mu += *w * y * y.transpose();
        }
        let old = self.cov.clone();
        self.cov = (1.0 - self.c1 - self.cmu) * old.clone()
            + self.c1
                * (&self.pc * self.pc.transpose() + (1.0 - h) * self.cc * (2.0 - self.cc) * old)
            + self.cmu * rank_mu;
        self.sigma *= ((self.cs / self.damps) * (ps_norm / self.chi_n - 1.0)).exp();

        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym.clone());
        self.cov = sym;
        self.basis = eig.eigenvectors;
        self.scales = eig.eigenvalues.map(|e| e.max(1e-300).sqrt());
        self.pending.clear();
        if !self.mean.iter().all(|x| x.is_finite()) || !self.sigma.is_finite() {
            return Err(Error::Diverged("CMA-ES state became non-finite".into()));
        }
        Ok(())
    }
}

/// Maximize `objective` from `initial_mean`. Candidates of a generation are
/// evaluated in parallel; results do not depend on the thread count.
pub fn cmaes_optimize<F>(
    objective: F,
    initial_mean: Vec<f64>,
    config: &CmaesConfig,
    seed: u64,
) -> Result<CmaesResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut es = Cmaes::new(
        initial_mean,
        config.initial_sigma,
        config.population_size,
        seed,
    )?;
    let mut history = Vec::with_capacity(config.generations);
    let mut best = (es.mean().to_vec(), f64::NEG_INFINITY);
    for g in 0..config.generations {
        let xs = es.ask();
        let values: Vec<f64> = xs.par_iter().map(|x| objective(x)).collect();
        let mut finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        finite.sort_by(|a, b| b.total_cmp(a));
        for (x, v) in xs.iter().zip(&values) {
            if v.is_finite() && *v > best.1 {
                best = (x.clone(), *v);
            }
        }
        history.push(Generation {
            generation: g,
            best: finite.first().copied().unwrap_or(f64::NEG_INFINITY),
            median: if finite.is_empty() {
                f64::NEG_INFINITY
            } else {
                finite[finite.len() / 2]
            },
            sigma: es.sigma(),
        });
        es.tell(&values)?;
    }
    Ok(CmaesResult {
        mean: es.mean().to_vec(),
        best: best.0,
        best_value: best.1,
        history,
    })
}
