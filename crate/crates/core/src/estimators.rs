//! Posterior moment estimators and the evaluation metrics used to compare
//! samplers.

use crate::ensemble::{Generation, PersistentStore};
use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, normalize_log_weights, LogWeights};
use crate::samplers::{ps_log_weights, Method};

/// Which weighting produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// Plain average over the final generation.
    FinalUniform,
    /// Mixture recycling over all SMC generations.
    Recycled,
    /// Persistent weights at `β = 1` over all generations.
    Persistent,
}

/// Coordinatewise `E[θ]` and `E[θ²]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub method: Method,
    pub weights_used: WeightScheme,
}

impl MomentEstimate {
    pub fn dim(&self) -> usize {
        self.first.len()
    }
}

fn weighted_moments<'a>(points: impl Iterator<Item = (&'a [f64], f64)>, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut first = vec![0.0; dim];
    let mut second = vec![0.0; dim];
    for (x, w) in points {
        if w == 0.0 {
            continue;
        }
        for d in 0..dim {
            first[d] += w * x[d];
            second[d] += w * x[d] * x[d];
        }
    }
    (first, second)
}

/// Unweighted averages over a final generation.
pub fn moments_standard(final_gen: &Generation, method: Method) -> MomentEstimate {
    let w = 1.0 / final_gen.len() as f64;
    let (first, second) = weighted_moments(final_gen.iter().map(|(x, _)| (x, w)), final_gen.dim());
    MomentEstimate {
        first,
        second,
        method,
        weights_used: WeightScheme::FinalUniform,
    }
}

/// Recycling weights over every particle of a completed SMC run, flattened
/// generation by generation:
/// `log L − log[(1/T) Σ_{t'} exp(β_{t'} log L − log Ẑ_{t'})]`.
pub fn recycle_weights(store: &PersistentStore) -> Result<LogWeights> {
    if store.is_empty() {
        return Err(Error::MissingEvidence);
    }
    let log_z = store.log_z();
    if log_z.iter().any(|z| !z.is_finite()) {
        return Err(Error::CorruptEvidenceHistory);
    }
    let betas = store.betas();
    let log_t = (betas.len() as f64).ln();
    let mut terms = vec![0.0; betas.len()];
    let mut out = Vec::with_capacity(store.total_particles());
    for g in store.generations() {
        for &ll in g.log_like() {
            if ll == f64::NEG_INFINITY {
                out.push(f64::NEG_INFINITY);
                continue;
            }
            for (slot, (&b, &z)) in terms.iter_mut().zip(betas.iter().zip(log_z)) {
                *slot = if b == 0.0 { -z } else { b * ll - z };
            }
            out.push(ll - (log_sum_exp(&terms)? - log_t));
        }
    }
    LogWeights::new(out).map_err(|_| Error::CorruptEvidenceHistory)
}

fn moments_from_log_weights(store: &PersistentStore, logw: &LogWeights) -> Result<(Vec<f64>, Vec<f64>)> {
    let w = normalize_log_weights(logw)?.weights;
    let points = store.generations().iter().flat_map(|g| g.iter().map(|(x, _)| x));
    Ok(weighted_moments(points.zip(w.iter().copied()), store.dim()))
}

/// Moments under the recycling weights of every generation.
pub fn moments_recycled(store: &PersistentStore) -> Result<MomentEstimate> {
    let (first, second) = moments_from_log_weights(store, &recycle_weights(store)?)?;
    Ok(MomentEstimate {
        first,
        second,
        method: Method::Rsmc,
        weights_used: WeightScheme::Recycled,
    })
}

/// Moments under the persistent weights recomputed at `β = 1` over all
/// stored generations.
pub fn moments_persistent(store: &PersistentStore) -> Result<MomentEstimate> {
    let (first, second) = moments_from_log_weights(store, &ps_log_weights(store, 1.0)?)?;
    Ok(MomentEstimate {
        first,
        second,
        method: Method::Ps,
        weights_used: WeightScheme::Persistent,
    })
}

/// Mean squared error of evidence estimates against a reference value.
pub fn mse_log_z(estimates: &[f64], reference: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidConfig("no estimates".into()));
    }
    Ok(estimates.iter().map(|e| (e - reference).powi(2)).sum::<f64>() / estimates.len() as f64)
}

/// Largest squared standardized bias over coordinates, where the bias is
/// taken on the across-run mean of the per-run estimates.
pub fn max_squared_bias(per_run: &[Vec<f64>], ref_mean: &[f64], ref_sd: &[f64]) -> Result<f64> {
    let dim = ref_mean.len();
    if ref_sd.len() != dim {
        return Err(Error::Shape {
            expected: format!("{dim} reference sds"),
            found: ref_sd.len().to_string(),
        });
    }
    if let Some(d) = ref_sd.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::NonPositiveSd(d));
    }
    if per_run.is_empty() {
        return Err(Error::InvalidConfig("no estimates".into()));
    }
    if let Some(row) = per_run.iter().find(|r| r.len() != dim) {
        return Err(Error::Shape {
            expected: format!("rows of length {dim}"),
            found: row.len().to_string(),
        });
    }
    let l = per_run.len() as f64;
    let mut worst: f64 = 0.0;
    for d in 0..dim {
        let mean = per_run.iter().map(|r| r[d]).sum::<f64>() / l;
        worst = worst.max(((mean - ref_mean[d]) / ref_sd[d]).powi(2));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;

    fn generation(points: &[f64], dim: usize, log_like: &[f64], beta: f64) -> Generation {
        Generation::new(dim, points.to_vec(), log_like.to_vec(), beta).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn standard_constant_and_pair() {
        let g = generation(&[3.0, 3.0, 3.0], 1, &[0.0; 3], 1.0);
        let m = moments_standard(&g, Method::Smc);
        assert_eq!(m.first, vec![3.0]);
        assert_eq!(m.second, vec![9.0]);

        let g = generation(&[0.0, 2.0], 1, &[0.0; 2], 1.0);
        let m = moments_standard(&g, Method::Smc);
        assert_eq!(m.first, vec![1.0]);
        assert_eq!(m.second, vec![2.0]);
    }

    #[test]
    fn standard_is_permutation_invariant() {
        let a = generation(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2, &[0.0; 3], 1.0);
        let b = generation(&[5.0, 6.0, 1.0, 2.0, 3.0, 4.0], 2, &[0.0; 3], 1.0);
        let ma = moments_standard(&a, Method::Smc);
        let mb = moments_standard(&b, Method::Smc);
        for d in 0..2 {
            assert!((ma.first[d] - mb.first[d]).abs() < 1e-14 * ma.first[d].abs());
            assert!((ma.second[d] - mb.second[d]).abs() < 1e-14 * ma.second[d].abs());
        }
    }

    #[test]
    fn recycle_single_generation_is_uniform() {
        let store = PersistentStore::from_parts(vec![generation(&[0.1, 0.2, 0.3], 1, &[-1.0, -2.0, -5.0], 1.0)], vec![0.0])
            .unwrap();
        let w = normalize_log_weights(&recycle_weights(&store).unwrap()).unwrap().weights;
        for wi in w {
            assert!((wi - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn recycle_identical_components_is_uniform() {
        let g = |x: f64| generation(&[x], 1, &[-0.7 * x], 1.0);
        let store = PersistentStore::from_parts(vec![g(1.0), g(2.0), g(3.0)], vec![-0.4, -0.4, -0.4]).unwrap();
        let w = normalize_log_weights(&recycle_weights(&store).unwrap()).unwrap().weights;
        for wi in w {
            assert!((wi - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn recycle_matches_exact_arithmetic() {
        // L1 = 2, L2 = 3 at β = (0, 1) with Ẑ = (1, 3/2)
        let store = PersistentStore::from_parts(
            vec![
                generation(&[1.0], 1, &[2f64.ln()], 0.0),
                generation(&[4.0], 1, &[3f64.ln()], 1.0),
            ],
            vec![0.0, 1.5f64.ln()],
        )
        .unwrap();
        let logw = recycle_weights(&store).unwrap();

        let z2 = rat(3, 2);
        let exact = |l: BigRational| {
            let denom = (rat(1, 1) + &l / &z2) / rat(2, 1);
            l / denom
        };
        let w1 = exact(rat(2, 1));
        let w2 = exact(rat(3, 1));
        for (got, want) in logw.values().iter().zip([&w1, &w2]) {
            assert!((got - want.to_f64().unwrap().ln()).abs() < 1e-14);
        }

        let m = moments_recycled(&store).unwrap();
        let total = &w1 + &w2;
        let first = (&w1 * rat(1, 1) + &w2 * rat(4, 1)) / &total;
        let second = (&w1 * rat(1, 1) + &w2 * rat(16, 1)) / &total;
        assert!((m.first[0] - first.to_f64().unwrap()).abs() < 1e-14);
        assert!((m.second[0] - second.to_f64().unwrap()).abs() < 1e-13);
    }

    #[test]
    fn recycled_one_hot_weight_picks_particle() {
        let store = PersistentStore::from_parts(
            vec![generation(&[2.0, 7.0], 1, &[0.0, f64::NEG_INFINITY], 1.0)],
            vec![0.0],
        )
        .unwrap();
        let m = moments_recycled(&store).unwrap();
        assert_eq!(m.first, vec![2.0]);
        assert_eq!(m.second, vec![4.0]);
    }

    #[test]
    fn recycle_rejects_missing_or_corrupt_evidence() {
        assert!(matches!(recycle_weights(&PersistentStore::new()), Err(Error::MissingEvidence)));
        let store = PersistentStore::from_parts(vec![generation(&[0.0], 1, &[0.0], 1.0)], vec![f64::NAN]).unwrap();
        assert!(matches!(recycle_weights(&store), Err(Error::CorruptEvidenceHistory)));
    }

    #[test]
    fn recycle_agrees_with_persistent_weights() {
        let mut store = PersistentStore::new();
        let betas = [0.0, 0.05, 0.3, 1.0];
        let log_z = [0.0, -0.9, -2.4, -3.1];
        for (t, (&b, &z)) in betas.iter().zip(&log_z).enumerate() {
            let x: Vec<f64> = (0..6).map(|i| (i + t) as f64 * 0.3 - 1.0).collect();
            let ll: Vec<f64> = x.iter().map(|v| -3.0 * v * v - t as f64).collect();
            store.push(generation(&x, 1, &ll, b), z).unwrap();
        }
        let a = recycle_weights(&store).unwrap();
        let b = ps_log_weights(&store, 1.0).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn persistent_single_generation_is_weighted_mean() {
        let store = PersistentStore::from_parts(vec![generation(&[0.0, 2.0], 1, &[0.0, 1.0], 0.0)], vec![0.0]).unwrap();
        let m = moments_persistent(&store).unwrap();
        let (w0, w1) = (1.0 / (1.0 + 1f64.exp()), 1f64.exp() / (1.0 + 1f64.exp()));
        assert!((m.first[0] - 2.0 * w1).abs() < 1e-14);
        assert!((m.second[0] - 4.0 * w1).abs() < 1e-14);
        assert!((w0 + w1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn persistent_uniform_weights_give_grand_mean() {
        let store = PersistentStore::from_parts(
            vec![
                generation(&[1.0, 3.0], 1, &[0.0, 0.0], 0.0),
                generation(&[5.0, 7.0], 1, &[0.0, 0.0], 1.0),
            ],
            vec![0.0, 0.0],
        )
        .unwrap();
        let m = moments_persistent(&store).unwrap();
        assert!((m.first[0] - 4.0).abs() < 1e-14);
        assert!((m.second[0] - 21.0).abs() < 1e-13);
    }

    #[test]
    fn persistent_two_by_one_matches_exact_arithmetic() {
        // L = 2 and 4 at β = (0, 1), Ẑ = (1, 2)
        let store = PersistentStore::from_parts(
            vec![
                generation(&[-1.0], 1, &[2f64.ln()], 0.0),
                generation(&[3.0], 1, &[4f64.ln()], 1.0),
            ],
            vec![0.0, 2f64.ln()],
        )
        .unwrap();
        let w = |l: i64| rat(l, 1) / ((rat(1, 1) + rat(l, 2)) / rat(2, 1));
        let (w1, w2) = (w(2), w(4));
        let total = &w1 + &w2;
        let first = (&w1 * rat(-1, 1) + &w2 * rat(3, 1)) / &total;
        let second = (&w1 + &w2 * rat(9, 1)) / &total;
        let m = moments_persistent(&store).unwrap();
        assert!((m.first[0] - first.to_f64().unwrap()).abs() < 1e-14);
        assert!((m.second[0] - second.to_f64().unwrap()).abs() < 1e-13);
    }

    #[test]
    fn persistent_is_invariant_to_particle_order() {
        let g1 = [0.1, -0.4, 0.9];
        let g2 = [1.2, 0.3, -0.2];
        let ll = |x: &[f64]| x.iter().map(|v| -v * v).collect::<Vec<_>>();
        let build = |a: &[f64], b: &[f64]| {
            PersistentStore::from_parts(
                vec![generation(a, 1, &ll(a), 0.0), generation(b, 1, &ll(b), 1.0)],
                vec![0.0, -0.5],
            )
            .unwrap()
        };
        let m1 = moments_persistent(&build(&g1, &g2)).unwrap();
        let m2 = moments_persistent(&build(&[0.9, 0.1, -0.4], &[-0.2, 1.2, 0.3])).unwrap();
        assert!((m1.first[0] - m2.first[0]).abs() < 1e-14);
        assert!((m1.second[0] - m2.second[0]).abs() < 1e-14);
    }

    #[test]
    fn variance_is_nonnegative() {
        let store = PersistentStore::from_parts(
            vec![generation(&[0.5, -2.0, 3.0, 1.0, 0.0, 7.0], 2, &[-1.0, -0.2, -3.0], 0.0)],
            vec![0.0],
        )
        .unwrap();
        let m = moments_persistent(&store).unwrap();
        for d in 0..2 {
            assert!(m.second[d] >= m.first[d] * m.first[d] - 1e-9);
        }
    }

    #[test]
    fn mse_examples() {
        let r = -3.5;
        assert_eq!(mse_log_z(&[r, r, r], r).unwrap(), 0.0);
        assert!((mse_log_z(&[r + 1.0, r - 1.0], r).unwrap() - 1.0).abs() < 1e-14);
        let m = mse_log_z(&[r + 0.3, r + 0.1, r - 0.2], r).unwrap();
        assert!((m - 0.14 / 3.0).abs() < 1e-12);
        assert!(mse_log_z(&[], r).is_err());
    }

    #[test]
    fn bias_examples() {
        let mean = [1.0, -2.0];
        let sd = [2.0, 0.5];
        assert_eq!(max_squared_bias(&[mean.to_vec(), mean.to_vec()], &mean, &sd).unwrap(), 0.0);

        let runs = vec![vec![1.0 + 0.5 * 2.0, -2.0 - 0.5], vec![1.0 + 0.5 * 2.0, -2.0 - 0.5]];
        assert!((max_squared_bias(&runs, &mean, &sd).unwrap() - 1.0).abs() < 1e-14);

        let doubled = [4.0, 1.0];
        let b1 = max_squared_bias(&runs, &mean, &sd).unwrap();
        let b2 = max_squared_bias(&runs, &mean, &doubled).unwrap();
        assert!((b2 - b1 / 4.0).abs() < 1e-14);

        assert!(matches!(max_squared_bias(&runs, &mean, &[1.0, 0.0]), Err(Error::NonPositiveSd(1))));
    }
}
