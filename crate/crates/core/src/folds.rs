//! Rolling-origin splits over time-indexed examples.
//!
//! Fold `k` (1-based) discards the `k - 1` most recent time steps, takes the
//! latest remaining `test_steps` steps as the test set, the `val_steps`
//! before them as validation, and everything earlier as training.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FoldSpec {
    pub val_steps: usize,
    pub test_steps: usize,
}

impl Default for FoldSpec {
    fn default() -> Self {
        Self { val_steps: 1, test_steps: 1 }
    }
}

/// Example indices for one fold.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Split example indices by their time-step key for fold `fold` (1-based).
///
/// Returned index lists preserve the input order.
pub fn rolling_origin_split<K: Ord + Copy>(keys: &[K], fold: usize, spec: FoldSpec) -> Result<Split> {
    if fold == 0 {
        return Err(CoreError::Invalid("fold index is 1-based".into()));
    }
    if spec.val_steps == 0 || spec.test_steps == 0 {
        return Err(CoreError::Invalid("validation and test need at least one step each".into()));
    }
    let steps: Vec<K> = keys.iter().copied().collect::<BTreeSet<K>>().into_iter().collect();
    let needed = fold - 1 + spec.val_steps + spec.test_steps + 1;
    if steps.len() < needed {
        return Err(CoreError::TooFewSteps { fold, needed, found: steps.len() });
    }
    let kept = steps.len() - (fold - 1);
    let test_from = steps[kept - spec.test_steps];
    let val_from = steps[kept - spec.test_steps - spec.val_steps];
    let cutoff = steps[kept - 1];

    let mut split = Split::default();
    for (i, k) in keys.iter().enumerate() {
        if *k > cutoff {
            continue;
        }
        if *k >= test_from {
            split.test.push(i);
        } else if *k >= val_from {
            split.val.push(i);
        } else {
            split.train.push(i);
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn keys(steps: i64, per_step: usize) -> Vec<i64> {
        (0..steps).flat_map(|s| core::iter::repeat(s).take(per_step)).collect()
    }

    #[test]
    fn first_fold_uses_whole_range() {
        let k = keys(10, 3);
        let s = rolling_origin_split(&k, 1, FoldSpec::default()).unwrap();
        assert!(s.test.iter().all(|&i| k[i] == 9));
        assert!(s.val.iter().all(|&i| k[i] == 8));
        assert_eq!(s.train.len(), 8 * 3);
    }

    #[test]
    fn third_fold_of_ten_steps() {
        // steps numbered 1..=10
        let k: Vec<i64> = keys(10, 2).into_iter().map(|s| s + 1).collect();
        let s = rolling_origin_split(&k, 3, FoldSpec::default()).unwrap();
        assert!(s.test.iter().all(|&i| k[i] == 8));
        assert!(s.val.iter().all(|&i| k[i] == 7));
        assert!(s.train.iter().all(|&i| k[i] <= 6));
        assert_eq!(s.train.len(), 12);
    }

    #[test]
    fn too_few_steps() {
        let k = keys(4, 1);
        assert!(rolling_origin_split(&k, 2, FoldSpec::default()).is_ok());
        assert_eq!(
            rolling_origin_split(&k, 3, FoldSpec::default()),
            Err(CoreError::TooFewSteps { fold: 3, needed: 5, found: 4 })
        );
    }

    #[test]
    fn unsorted_keys() {
        let k = vec![3, 1, 2, 3, 0, 1];
        let s = rolling_origin_split(&k, 1, FoldSpec::default()).unwrap();
        assert_eq!(s.test, vec![0, 3]);
        assert_eq!(s.val, vec![2]);
        assert_eq!(s.train, vec![1, 4, 5]);
    }

    #[test]
    fn wider_validation_window() {
        let k = keys(8, 1);
        let s = rolling_origin_split(&k, 1, FoldSpec { val_steps: 2, test_steps: 1 }).unwrap();
        assert_eq!(s.val, vec![5, 6]);
        assert_eq!(s.test, vec![7]);
    }

    proptest::proptest! {
        #[test]
        fn splits_are_ordered_and_disjoint(
            raw in proptest::collection::vec(0i64..20, 1..200),
            fold in 1usize..6,
        ) {
            if let Ok(s) = rolling_origin_split(&raw, fold, FoldSpec::default()) {
                let max_train = s.train.iter().map(|&i| raw[i]).max().unwrap();
                let vals: BTreeSet<i64> = s.val.iter().map(|&i| raw[i]).collect();
                let tests: BTreeSet<i64> = s.test.iter().map(|&i| raw[i]).collect();
                proptest::prop_assert_eq!(vals.len(), 1);
                proptest::prop_assert_eq!(tests.len(), 1);
                let v = *vals.iter().next().unwrap();
                let t = *tests.iter().next().unwrap();
                proptest::prop_assert!(max_train < v && v < t);
                let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
                let n = all.len();
                all.sort_unstable();
                all.dedup();
                proptest::prop_assert_eq!(all.len(), n);
            }
        }
    }
}
