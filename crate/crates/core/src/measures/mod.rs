//! Uniform, equal-slices and non-degenerate equal-slices measures on `[k]^n`,
//! their samplers, and exact laws of composed restrictions.

mod distribution;
mod equal_slices;
mod sampling;
mod slices;
mod special;
mod transfer;

pub use distribution::{Distribution, DistributionFile};
pub use equal_slices::{
    degenerate_prob, equal_slices_measure, equal_slices_prob, equal_slices_prob_counts, few_k_prob_bound,
    imbalance_prob_bound, measure, missing_value_prob, nondegenerate_equal_slices_measure, nondegenerate_prob,
    nondegenerate_prob_counts, uniform_measure, uniform_prob, BoundCheck, Law,
};
pub use sampling::{
    sample_equal_slices, sample_in_slice, sample_nondegenerate, sample_nondegenerate_pegs, sample_special_subspace,
    seeded_rng,
};
pub use slices::{nondegenerate_slice_count, slice_count, SliceVector};
pub use special::{special_composition, special_composition_with};
pub use transfer::{
    class_total, class_tv, composed_restriction_classes, composed_restriction_distribution, equal_slices_classes,
    transfer_ratio, transfer_ratio_upper, uniform_classes, ClassLaw, RestrictionMode,
};

pub(crate) use slices::compositions;
