use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::linalg::cholesky_solve;

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Weighted coefficient of determination on the fitted samples.
    pub r2: f64,
}

impl RidgeFit {
    pub fn predict(&self, z: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>()
    }
}

/// Weighted ridge regression of `targets` on the `n × k` design `z`.
/// The intercept is fitted by weighted centering and is not penalized.
pub fn fit_weighted_ridge(z: &[f64], n: usize, k: usize, targets: &[f64], weights: &[f64], lambda: f64) -> Result<RidgeFit> {
    if z.len() != n * k {
        return Err(CoreError::Shape { expected: n * k, got: z.len() });
    }
    if targets.len() != n || weights.len() != n {
        return Err(CoreError::Shape { expected: n, got: targets.len().min(weights.len()) });
    }
    let total: f64 = weights.iter().sum();
    if n == 0 || total <= 0.0 {
        return Err(CoreError::Empty("weighted samples"));
    }
    let mut zbar = vec![0.0; k];
    let mut ybar = 0.0;
    for i in 0..n {
        let w = weights[i];
        ybar += w * targets[i];
        for (m, v) in zbar.iter_mut().zip(&z[i * k..(i + 1) * k]) {
            *m += w * v;
        }
    }
    ybar /= total;
    zbar.iter_mut().for_each(|m| *m /= total);

    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    let mut centered = vec![0.0; k];
    for i in 0..n {
        let w = weights[i];
        if w == 0.0 {
            continue;
        }
        for (c, (v, m)) in centered.iter_mut().zip(z[i * k..(i + 1) * k].iter().zip(&zbar)) {
            *c = v - m;
        }
        let dy = targets[i] - ybar;
        for a in 0..k {
            let wa = w * centered[a];
            rhs[a] += wa * dy;
            for b in a..k {
                gram[a * k + b] += wa * centered[b];
            }
        }
    }
    for a in 0..k {
        gram[a * k + a] += lambda;
        for b in 0..a {
            gram[a * k + b] = gram[b * k + a];
        }
    }
    let coef = if k == 0 { Vec::new() } else { cholesky_solve(&gram, &rhs, k)? };
    let intercept = ybar - coef.iter().zip(&zbar).map(|(c, m)| c * m).sum::<f64>();
    let fit = RidgeFit { weights: coef, intercept, r2: 0.0 };

    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for i in 0..n {
        let r = targets[i] - fit.predict(&z[i * k..(i + 1) * k]);
        let d = targets[i] - ybar;
        ss_res += weights[i] * r * r;
        ss_tot += weights[i] * d * d;
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-24 {
        1.0
    } else {
        0.0
    };
    Ok(RidgeFit { r2, ..fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Solve the augmented normal equations with an explicit intercept
    /// column (unpenalized) by Gaussian elimination with partial pivoting.
    fn oracle(z: &[f64], n: usize, k: usize, y: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
        let d = k + 1;
        let mut a = vec![vec![0.0; d + 1]; d];
        for i in 0..n {
            let mut row = vec![1.0];
            row.extend_from_slice(&z[i * k..(i + 1) * k]);
            for r in 0..d {
                for c in 0..d {
                    a[r][c] += w[i] * row[r] * row[c];
                }
                a[r][d] += w[i] * row[r] * y[i];
            }
        }
        for r in 1..d {
            a[r][r] += lambda;
        }
        for col in 0..d {
            let piv = (col..d).max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap()).unwrap();
            a.swap(col, piv);
            for r in 0..d {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=d {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..d).map(|r| a[r][d] / a[r][r]).collect()
    }

    #[test]
    fn matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (n, k) = (20, 5);
            let z: Vec<f64> = (0..n * k).map(|_| f64::from(rng.random_bool(0.6) as u8)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
            let fit = fit_weighted_ridge(&z, n, k, &y, &w, 1.0).unwrap();
            let want = oracle(&z, n, k, &y, &w, 1.0);
            assert!((fit.intercept - want[0]).abs() < 1e-8);
            for j in 0..k {
                assert!((fit.weights[j] - want[j + 1]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn exact_linear_target_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (n, k) = (200, 3);
        let truth = [0.4, -0.25, 0.1];
        let z: Vec<f64> = (0..n * k).map(|_| f64::from(rng.random_bool(0.5) as u8)).collect();
        let y: Vec<f64> = (0..n).map(|i| 0.2 + (0..k).map(|j| truth[j] * z[i * k + j]).sum::<f64>()).collect();
        let w = vec![1.0; n];
        let fit = fit_weighted_ridge(&z, n, k, &y, &w, 0.0).unwrap();
        for j in 0..k {
            assert!((fit.weights[j] - truth[j]).abs() < 1e-6);
        }
        assert!((fit.intercept - 0.2).abs() < 1e-6);
        assert!(fit.r2 > 1.0 - 1e-9);
    }

    #[test]
    fn heavy_penalty_shrinks_to_the_weighted_mean() {
        let z = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let y = [1.0, 0.0, 0.5];
        let w = [1.0, 2.0, 1.0];
        let fit = fit_weighted_ridge(&z, 3, 2, &y, &w, 1e9).unwrap();
        assert!(fit.weights.iter().all(|v| v.abs() < 1e-8));
        assert!((fit.intercept - 1.5 / 4.0).abs() < 1e-8);
    }

    #[test]
    fn unpenalized_collinear_design_is_singular() {
        let z = [1.0, 1.0, 0.0, 0.0, 1.0, 1.0];
        let y = [1.0, 0.0, 1.0];
        let w = [1.0; 3];
        assert_eq!(fit_weighted_ridge(&z, 3, 2, &y, &w, 0.0), Err(CoreError::Singular));
    }
}
