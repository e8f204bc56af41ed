//! Tree expansion of the range equation: inequivalent labeled trees, their
//! values and ε-jets, sharp scale labels from the α table, clusters and
//! self-energy detection, the smooth cutoff family, and the counting checks
//! on enumerated trees.

mod clusters;
mod enumerate;
mod scales;
mod tree;
mod value;

pub use clusters::{
    clusters, counting_check, counting_sweep, counting_sweep_with, detect_self_energy, Cluster,
    CountingReport, ScaleCount, SelfEnergy, SelfEnergyCheck, SweepReport, SweepTree,
};
pub use enumerate::{enumerate_trees, EnumerationOptions, TreeCatalogue, MAX_ORDER};
pub use scales::{
    assign_scales, assign_scales_factor, assign_scales_with, chi, cutoff_eval, psi,
    scale_with_factor, sharp_scale, smooth_step, CutoffFamily, CutoffKind, DEFAULT_SCALE_DEPTH,
    QUARTER_FACTOR, SUPPORT_FACTOR,
};
pub use tree::{Shape, Tree, TreeNode};
pub use value::{series_from_trees, tree_jet, tree_value};
