//! External-classifier priors: the noise model that simulates them, the two
//! confidence scores, and accuracy against ground truth.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::{argmax, DistributionMatrix, Matrix};
use crate::rng::substream;

/// Bounds of the true-class probability drawn per node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub p_min: f64,
    pub p_max: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(p_min: f64, p_max: f64, seed: u64) -> Result<Self> {
        let s = Self { p_min, p_max, seed };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        // equal bounds are accepted so that noise-free priors can be produced
        if !(0.0 <= self.p_min && self.p_min <= self.p_max && self.p_max <= 1.0) {
            return Err(Error::InvalidParameter(
                "noise bounds must satisfy 0 <= p_min <= p_max <= 1",
            ));
        }
        Ok(())
    }
}

/// Simulated inaccurate priors.
///
/// Node `i` draws its true-class mass uniformly from `[p_min, p_max]`, then
/// `K − 1` uniforms on `[0, 1]` that share the remaining mass proportionally.
/// Node `i` uses random stream `i` of `spec.seed`.
pub fn generate_noisy_priors(
    true_labels: &[usize],
    k: usize,
    spec: &NoiseSpec,
) -> Result<DistributionMatrix> {
    spec.validate()?;
    if k < 2 {
        return Err(Error::InvalidParameter("need at least two classes"));
    }
    let mut m = Matrix::zeros(true_labels.len(), k);
    let mut others = alloc::vec![0.0; k - 1];
    for (i, &c) in true_labels.iter().enumerate() {
        if c >= k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: c + 1,
            });
        }
        let mut rng = substream(spec.seed, i as u64);
        let u: f64 = rng.gen();
        let p_label = (spec.p_min + (spec.p_max - spec.p_min) * u).clamp(spec.p_min, spec.p_max);
        for o in others.iter_mut() {
            *o = rng.gen();
        }
        let psi: f64 = others.iter().sum();
        let rest = 1.0 - p_label;
        let row = m.row_mut(i);
        row[c] = p_label;
        let mut idx = 0;
        for (kk, v) in row.iter_mut().enumerate() {
            if kk == c {
                continue;
            }
            *v = if psi > 0.0 {
                others[idx] * rest / psi
            } else {
                rest / (k - 1) as f64
            };
            idx += 1;
        }
    }
    Ok(DistributionMatrix::from_matrix_unchecked(m))
}

/// Maximum probability score `max_k p_ik`, in `[1/K, 1]`.
pub fn mps_score(p: &DistributionMatrix) -> Vec<f64> {
    (0..p.n())
        .map(|i| p.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

/// Shannon entropy in nats with `0 ln 0 = 0`.
pub fn entropy(row: &[f64]) -> f64 {
    -row.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * libm::log(v))
        .sum::<f64>()
}

/// Entropy score `1 − H(p_i)/ln K`, in `[0, 1]`.
pub fn ebs_score(p: &DistributionMatrix) -> Vec<f64> {
    let e_max = libm::log(p.k() as f64);
    (0..p.n())
        .map(|i| (1.0 - entropy(p.row(i)) / e_max).clamp(0.0, 1.0))
        .collect()
}

/// Fraction of `eval_set` whose argmax (lowest index on ties) equals the truth.
pub fn accuracy(scores: &Matrix, truth: &[usize], eval_set: &[usize]) -> Result<f64> {
    if eval_set.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    if truth.len() != scores.rows() {
        return Err(Error::DimensionMismatch {
            expected: scores.rows(),
            got: truth.len(),
        });
    }
    let mut hits = 0usize;
    for &i in eval_set {
        if i >= scores.rows() {
            return Err(Error::NodeOutOfRange {
                index: i,
                n: scores.rows(),
            });
        }
        if argmax(scores.row(i)) == truth[i] {
            hits += 1;
        }
    }
    Ok(hits as f64 / eval_set.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn dm(rows: &[&[f64]]) -> DistributionMatrix {
        DistributionMatrix::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn noise_free_priors_are_one_hot() {
        let labels = [0, 2, 1, 1];
        let p = generate_noisy_priors(&labels, 3, &NoiseSpec::new(1.0, 1.0, 9).unwrap()).unwrap();
        assert_eq!(p, DistributionMatrix::one_hot(&labels, 3).unwrap());
    }

    #[test]
    fn binary_priors_in_bounds() {
        let labels: Vec<usize> = (0..500).map(|i| i % 2).collect();
        let p = generate_noisy_priors(&labels, 2, &NoiseSpec::new(0.4, 0.99, 1).unwrap()).unwrap();
        for (i, &c) in labels.iter().enumerate() {
            let t = p.row(i)[c];
            assert!((0.4..=0.99).contains(&t));
            assert!((p.row(i)[1 - c] - (1.0 - t)).abs() < 1e-15);
        }
    }

    #[test]
    fn true_class_mean_matches_midpoint() {
        let n = 100_000;
        let labels: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let p = generate_noisy_priors(&labels, 4, &NoiseSpec::new(0.2, 0.99, 5).unwrap()).unwrap();
        let mean = labels
            .iter()
            .enumerate()
            .map(|(i, &c)| p.row(i)[c])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.595).abs() < 0.01, "{mean}");
    }

    #[test]
    fn rows_do_not_depend_on_other_nodes() {
        let spec = NoiseSpec::new(0.3, 0.9, 77).unwrap();
        let a = generate_noisy_priors(&[0, 1, 2, 0], 3, &spec).unwrap();
        let b = generate_noisy_priors(&[1, 1, 2], 3, &spec).unwrap();
        assert_eq!(a.row(1), b.row(1));
        assert_eq!(a.row(2), b.row(2));
    }

    #[test]
    fn invalid_noise_spec() {
        assert!(NoiseSpec::new(0.9, 0.5, 0).is_err());
        assert!(NoiseSpec::new(-0.1, 0.5, 0).is_err());
        let spec = NoiseSpec {
            p_min: 0.2,
            p_max: 0.5,
            seed: 0,
        };
        assert!(generate_noisy_priors(&[0], 1, &spec).is_err());
    }

    #[test]
    fn scores_on_reference_rows() {
        let p = dm(&[&[1.0 / 3.0; 3], &[0.0, 1.0, 0.0], &[0.7, 0.2, 0.1]]);
        let mps = mps_score(&p);
        assert!((mps[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mps[1], 1.0);
        assert_eq!(mps[2], 0.7);
        let ebs = ebs_score(&p);
        assert!(ebs[0].abs() < 1e-15);
        assert_eq!(ebs[1], 1.0);
    }

    #[test]
    fn ebs_binary_reference() {
        // H(0.75, 0.25) = 0.562335 nats, ln 2 = 0.693147
        let p = dm(&[&[0.75, 0.25]]);
        let e = ebs_score(&p)[0];
        assert!((e - 0.188722).abs() < 1e-6, "{e}");
    }

    #[test]
    fn accuracy_cases() {
        let truth = [0, 1, 1, 0];
        let all: Vec<usize> = (0..4).collect();
        let hard = Matrix::one_hot(&truth, 2).unwrap();
        assert_eq!(accuracy(&hard, &truth, &all).unwrap(), 1.0);
        let uniform = DistributionMatrix::uniform(4, 2);
        assert_eq!(accuracy(uniform.matrix(), &truth, &all).unwrap(), 0.5);
        assert_eq!(accuracy(uniform.matrix(), &truth, &[1, 2]).unwrap(), 0.0);
        assert_eq!(accuracy(&hard, &truth, &[]), Err(Error::EmptyEvalSet));
    }

    fn row_strategy() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, 2..6).prop_filter_map("nonzero", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn scores_permutation_invariant(row in row_strategy(), rot in 0usize..6) {
            let mut perm = row.clone();
            let r = rot % perm.len();
            perm.rotate_left(r);
            perm.reverse();
            let a = dm(&[&row]);
            let b = dm(&[&perm]);
            prop_assert!((ebs_score(&a)[0] - ebs_score(&b)[0]).abs() < 1e-12);
            prop_assert_eq!(mps_score(&a)[0], mps_score(&b)[0]);
            prop_assert!((0.0..=1.0).contains(&ebs_score(&a)[0]));
        }

        #[test]
        fn binary_scores_rank_alike(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let p = dm(&[&[a, 1.0 - a], &[b, 1.0 - b]]);
            let m = mps_score(&p);
            let e = ebs_score(&p);
            if (m[0] - m[1]).abs() > 1e-9 {
                prop_assert_eq!(m[0] > m[1], e[0] > e[1]);
            }
        }

        #[test]
        fn generated_rows_on_simplex(seed in any::<u64>(), lo in 0.0f64..0.5, width in 0.0f64..0.5, k in 2usize..6) {
            let labels: Vec<usize> = (0..50).map(|i| i % k).collect();
            let spec = NoiseSpec::new(lo, lo + width, seed).unwrap();
            let p = generate_noisy_priors(&labels, k, &spec).unwrap();
            for (i, &c) in labels.iter().enumerate() {
                let row = p.row(i);
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
                prop_assert!(row[c] >= spec.p_min && row[c] <= spec.p_max);
            }
        }
    }

    #[test]
    fn accuracy_rises_with_p_min() {
        let labels: Vec<usize> = (0..2000).map(|i| i % 3).collect();
        let all: Vec<usize> = (0..labels.len()).collect();
        let mean_acc = |p_min: f64| {
            (0..10u64)
                .map(|s| {
                    let p =
                        generate_noisy_priors(&labels, 3, &NoiseSpec::new(p_min, 0.99, s).unwrap())
                            .unwrap();
                    accuracy(p.matrix(), &labels, &all).unwrap()
                })
                .sum::<f64>()
                / 10.0
        };
        let accs: Vec<f64> = vec![0.1, 0.2, 0.3, 0.4].into_iter().map(mean_acc).collect();
        for w in accs.windows(2) {
            assert!(w[1] > w[0], "{accs:?}");
        }
    }
}
