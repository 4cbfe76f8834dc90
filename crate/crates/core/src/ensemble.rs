//! Particle containers: a single generation and the persistent history.

use crate::error::{Error, Result};

/// One iteration's particles (row-major `N x D`) with cached log-likelihoods.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    dim: usize,
    particles: Vec<f64>,
    log_like: Vec<f64>,
    beta: f64,
}

impl Generation {
    pub fn new(dim: usize, particles: Vec<f64>, log_like: Vec<f64>, beta: f64) -> Result<Self> {
        if dim == 0 || log_like.is_empty() {
            return Err(Error::Shape {
                expected: "N >= 1, D >= 1".into(),
                found: format!("N = {}, D = {dim}", log_like.len()),
            });
        }
        if particles.len() != dim * log_like.len() {
            return Err(Error::Shape {
                expected: format!("{} x {dim} particle matrix", log_like.len()),
                found: format!("{} values", particles.len()),
            });
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidConfig(format!("beta {beta} outside [0, 1]")));
        }
        Ok(Self {
            dim,
            particles,
            log_like,
            beta,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.log_like.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_like.is_empty()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.particles[i * self.dim..(i + 1) * self.dim]
    }

    pub fn particles(&self) -> &[f64] {
        &self.particles
    }

    pub fn log_like(&self) -> &[f64] {
        &self.log_like
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.particles
            .chunks_exact(self.dim)
            .zip(self.log_like.iter().copied())
    }

    /// Rows at `indices`, keeping the cached likelihoods and temperature.
    pub fn select(&self, indices: &[usize]) -> Generation {
        let mut particles = Vec::with_capacity(indices.len() * self.dim);
        let mut log_like = Vec::with_capacity(indices.len());
        for &i in indices {
            particles.extend_from_slice(self.particle(i));
            log_like.push(self.log_like[i]);
        }
        Generation {
            dim: self.dim,
            particles,
            log_like,
            beta: self.beta,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Generation {
        self.beta = beta;
        self
    }
}

/// All generations of a run with their temperatures and evidence estimates.
///
/// Index `s` holds `p_s` in the mixture of annealed targets; `log_z[0] = 0`
/// because the first generation is drawn from the normalized prior.
#[derive(Debug, Clone, Default)]
pub struct PersistentStore {
    generations: Vec<Generation>,
    betas: Vec<f64>,
    log_z: Vec<f64>,
}

impl PersistentStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a generation. Its temperature is taken from the generation.
    pub fn push(&mut self, generation: Generation, log_z: f64) -> Result<()> {
        let beta = generation.beta();
        match self.betas.last() {
            None => {
                if beta != 0.0 || log_z != 0.0 {
                    return Err(Error::InvalidConfig(
                        "first generation must be the prior (beta = 0, log Z = 0)".into(),
                    ));
                }
            }
            Some(&prev) => {
                if beta < prev {
                    return Err(Error::InvalidConfig(format!(
                        "beta sequence must be nondecreasing ({prev} -> {beta})"
                    )));
                }
                if let Some(first) = self.generations.first() {
                    if first.dim() != generation.dim() {
                        return Err(Error::Shape {
                            expected: format!("dimension {}", first.dim()),
                            found: format!("dimension {}", generation.dim()),
                        });
                    }
                }
            }
        }
        self.generations.push(generation);
        self.betas.push(beta);
        self.log_z.push(log_z);
        Ok(())
    }

    /// Builds a store directly from parts, bypassing the prior-first check.
    /// Used for synthetic histories and for waste-free pools.
    pub fn from_parts(generations: Vec<Generation>, log_z: Vec<f64>) -> Result<Self> {
        if generations.len() != log_z.len() {
            return Err(Error::Shape {
                expected: format!("{} evidence values", generations.len()),
                found: format!("{}", log_z.len()),
            });
        }
        let betas: Vec<f64> = generations.iter().map(Generation::beta).collect();
        if betas.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidConfig("beta sequence must be nondecreasing".into()));
        }
        Ok(Self {
            generations,
            betas,
            log_z,
        })
    }

    pub fn len(&self) -> usize {
        self.generations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generations.is_empty()
    }

    pub fn generations(&self) -> &[Generation] {
        &self.generations
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn log_z(&self) -> &[f64] {
        &self.log_z
    }

    pub fn last(&self) -> Option<&Generation> {
        self.generations.last()
    }

    /// Total number of stored particles.
    pub fn total_particles(&self) -> usize {
        self.generations.iter().map(Generation::len).sum()
    }

    pub fn dim(&self) -> usize {
        self.generations.first().map_or(0, Generation::dim)
    }

    /// Flattened view of every particle in `(generation, index)` order.
    pub fn flat_particles(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_particles() * self.dim());
        for g in &self.generations {
            out.extend_from_slice(g.particles());
        }
        out
    }

    /// Returns the particle at a flattened index.
    pub fn particle(&self, mut flat: usize) -> &[f64] {
        for g in &self.generations {
            if flat < g.len() {
                return g.particle(flat);
            }
            flat -= g.len();
        }
        panic!("flat index out of range");
    }

    /// Drops everything but the first `t` generations.
    pub fn truncate(&mut self, t: usize) {
        self.generations.truncate(t);
        self.betas.truncate(t);
        self.log_z.truncate(t);
    }
}
