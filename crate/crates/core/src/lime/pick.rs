use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Pick {
    /// Selected rows in the order they were picked.
    pub selected: Vec<usize>,
    pub importance: Vec<f64>,
    pub coverage: f64,
}

/// `I_j = √(Σ_i |W_ij|)` over an `n × m` row-major weight matrix.
pub fn feature_importance(w: &[f64], n: usize, m: usize) -> Vec<f64> {
    let mut imp = vec![0.0; m];
    for row in w.chunks_exact(m).take(n) {
        for (i, v) in imp.iter_mut().zip(row) {
            *i += v.abs();
        }
    }
    imp.into_iter().map(math::sqrt).collect()
}

/// Importance mass of the features touched by any row in `rows`.
pub fn coverage(w: &[f64], m: usize, importance: &[f64], rows: &[usize]) -> f64 {
    (0..m).filter(|&j| rows.iter().any(|&i| w[i * m + j] != 0.0)).map(|j| importance[j]).sum()
}

/// Greedy maximization of coverage with at most `budget` rows. A budget
/// beyond `n` picks every row.
pub fn submodular_pick(w: &[f64], n: usize, m: usize, budget: usize) -> Pick {
    let importance = feature_importance(w, n, m);
    let mut covered = vec![false; m];
    let mut used = vec![false; n];
    let mut selected = Vec::new();
    let mut total = 0.0;
    for _ in 0..budget.min(n) {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..n).filter(|&i| !used[i]) {
            let gain: f64 = (0..m).filter(|&j| !covered[j] && w[i * m + j] != 0.0).map(|j| importance[j]).sum();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let Some((i, gain)) = best else { break };
        used[i] = true;
        selected.push(i);
        total += gain;
        for j in 0..m {
            if w[i * m + j] != 0.0 {
                covered[j] = true;
            }
        }
    }
    Pick { selected, importance, coverage: total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exhaustive(w: &[f64], n: usize, m: usize, budget: usize, imp: &[f64]) -> f64 {
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize > budget {
                continue;
            }
            let rows: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            best = best.max(coverage(w, m, imp, &rows));
        }
        best
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<f64>, usize, usize, usize) {
        let n = rng.random_range(1..=8);
        let m = rng.random_range(1..=6);
        let w = (0..n * m).map(|_| if rng.random_bool(0.4) { rng.random_range(-1.0..1.0) } else { 0.0 }).collect();
        (w, n, m, rng.random_range(1..=n))
    }

    #[test]
    fn greedy_within_bound_of_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let bound = 1.0 - (-1.0f64).exp();
        for _ in 0..50 {
            let (w, n, m, b) = random_instance(&mut rng);
            let p = submodular_pick(&w, n, m, b);
            let opt = exhaustive(&w, n, m, b, &p.importance);
            assert!(p.coverage >= bound * opt - 1e-12);
            assert!((p.coverage - coverage(&w, m, &p.importance, &p.selected)).abs() < 1e-12);
        }
    }

    #[test]
    fn full_budget_covers_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let (w, n, m, _) = random_instance(&mut rng);
            let p = submodular_pick(&w, n, m, n + 3);
            assert_eq!(p.selected.len(), n);
            assert!((p.coverage - p.importance.iter().sum::<f64>()).abs() < 1e-12);
        }
    }

    #[test]
    fn disjoint_rows_both_picked() {
        let w = [0.5, 0.0, 0.0, 0.0, -0.2, 0.3];
        let p = submodular_pick(&w, 2, 3, 2);
        let mut s = p.selected.clone();
        s.sort();
        assert_eq!(s, vec![0, 1]);
    }

    #[test]
    fn coverage_is_monotone_submodular() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let (w, n, m, _) = random_instance(&mut rng);
            let imp = feature_importance(&w, n, m);
            let a: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.3)).collect();
            let mut b = a.clone();
            b.extend((0..n).filter(|i| !a.contains(i) && rng.random_bool(0.5)));
            let x = rng.random_range(0..n);
            let gain = |s: &[usize]| {
                let mut t = s.to_vec();
                t.push(x);
                coverage(&w, m, &imp, &t) - coverage(&w, m, &imp, s)
            };
            assert!(coverage(&w, m, &imp, &b) + 1e-12 >= coverage(&w, m, &imp, &a));
            assert!(gain(&a) + 1e-12 >= gain(&b));
        }
    }
}
