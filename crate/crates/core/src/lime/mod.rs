//! Local surrogate explanations (LIME) for tabular rows and the greedy
//! submodular pick that turns a pool of them into a global summary.
//!
//! Rows are mapped to an interpretable binary representation: a numeric
//! column is replaced by its quartile bin, a one-hot group by its category,
//! a single flag column by its bit, and `z_j = 1` means "same as the
//! instance being explained". Perturbed samples draw every interpretable
//! feature independently from its training frequencies; a kernel on the
//! number of differing features weights them; a weighted ridge fit on `z`
//! gives the explanation.

mod discretize;
mod explain;
mod pick;
mod ridge;
mod sampler;

pub use discretize::{percentile, QuartileBins};
pub use explain::{explain_instance, Contribution, LimeConfig, LocalExplanation};
pub use pick::{coverage, feature_importance, submodular_pick, Pick};
pub use ridge::{fit_weighted_ridge, RidgeFit};
pub use sampler::{kernel_weight, FeatureKind, InterpretableFeature, Perturbation, TabularStats};
