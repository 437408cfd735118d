use alloc::vec::Vec;
use serde::{Deserialize, Serialize};


/// Percentile of sorted data with linear interpolation between order
/// statistics (`q` in `[0, 100]`).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Up to three ascending cut points at the training quartiles. Bin `b`
/// covers `(cuts[b-1], cuts[b]]`; the first bin is open below and the last
/// open above. Repeated quartiles collapse, and a constant column has no
/// cuts at all (one bin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileBins {
    pub cuts: Vec<f64>,
}

impl QuartileBins {
    pub fn fit(values: &[f64]) -> Self {
        let mut sorted: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        sorted.sort_by(f64::total_cmp);
        if sorted.is_empty() || sorted[0] == sorted[sorted.len() - 1] {
            return Self { cuts: Vec::new() };
        }
        let mut cuts: Vec<f64> = [25.0, 50.0, 75.0].iter().map(|&q| percentile(&sorted, q)).collect();
        cuts.dedup();
        Self { cuts }
    }

    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn is_constant(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn bin(&self, value: f64) -> usize {
        self.cuts.partition_point(|&c| c < value)
    }

    /// Human-readable claim that `name` falls in bin `b`.
    pub fn statement(&self, name: &str, b: usize) -> alloc::string::String {
        let n = self.cuts.len();
        if n == 0 {
            return alloc::format!("{name} = constant");
        }
        if b == 0 {
            alloc::format!("{name} <= {:.2}", round2(self.cuts[0]))
        } else if b >= n {
            alloc::format!("{name} > {:.2}", round2(self.cuts[n - 1]))
        } else {
            alloc::format!("{:.2} < {name} <= {:.2}", round2(self.cuts[b - 1]), round2(self.cuts[b]))
        }
    }
}

fn round2(v: f64) -> f64 {
    let r = libm::round(v * 100.0) / 100.0;
    // avoid "-0.00"
    if r == 0.0 { 0.0 } else { r }
}
