use crate::error::Result;
use crate::numeric::{ess_of_log_weights, LogWeights};

const BISECTION_TOLERANCE: f64 = 1e-10;
const BISECTION_MAX_ITER: usize = 60;

/// Next temperature: the largest `β ∈ [beta_prev, 1]` whose weights keep
/// `ESS(β) ≥ alpha · n_particles`, assuming ESS is nonincreasing in β.
///
/// Returns exactly `1.0` when the final step already satisfies the threshold
/// and `beta_prev` when even no step fails it (persistent sampling early on).
pub fn solve_next_beta<F>(mut weight_fn: F, beta_prev: f64, alpha: f64, n_particles: usize) -> Result<f64>
where
    F: FnMut(f64) -> LogWeights,
{
    let threshold = alpha * n_particles as f64;
    let ess_at = |w: &mut F, b: f64| ess_of_log_weights(&w(b));
    if ess_at(&mut weight_fn, 1.0)? >= threshold {
        return Ok(1.0);
    }
    if ess_at(&mut weight_fn, beta_prev)? < threshold {
        return Ok(beta_prev);
    }
    let (mut lo, mut hi) = (beta_prev, 1.0);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if ess_at(&mut weight_fn, mid)? >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Generation;
    use crate::samplers::weights::smc_log_weights;

    fn gen(ll: Vec<f64>) -> Generation {
        let n = ll.len();
        Generation::new(1, vec![0.0; n], ll, 0.0).unwrap()
    }

    #[test]
    fn flat_likelihood_jumps_to_one() {
        let g = gen(vec![-2.0; 10]);
        assert_eq!(solve_next_beta(|b| smc_log_weights(&g, b), 0.0, 0.9, 10).unwrap(), 1.0);
    }

    #[test]
    fn persistent_threshold_above_pool_stalls() {
        let g = gen(vec![-2.0, -1.0, 0.5, -0.3]);
        // α = 3 with only N particles available
        assert_eq!(solve_next_beta(|b| smc_log_weights(&g, b), 0.0, 3.0, 4).unwrap(), 0.0);
    }

    #[test]
    fn two_particle_crossing_matches_grid_scan() {
        let g = gen(vec![0.0, -10.0]);
        let beta = solve_next_beta(|b| smc_log_weights(&g, b), 0.0, 0.75, 2).unwrap();
        // grid oracle: ESS = (1 + e^{-10b})² / (1 + e^{-20b})
        let ess = |b: f64| (1.0 + (-10.0 * b).exp()).powi(2) / (1.0 + (-20.0 * b).exp());
        let n = 1_000_000;
        let grid_beta = (0..=n)
            .map(|i| i as f64 / n as f64)
            .take_while(|&b| ess(b) >= 1.5)
            .last()
            .unwrap();
        assert!((beta - grid_beta).abs() < 1e-6, "{beta} vs {grid_beta}");
        assert!(ess(beta) >= 1.5 - 1e-9);
    }
}
