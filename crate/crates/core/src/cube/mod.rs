//! Points, lines, subspaces and sets of `[k]^n`.

mod line;
mod point;
mod search;
mod set;
mod shape;
mod subspace;

pub use line::{LinePattern, Symbol};
pub use point::Point;
pub(crate) use point::value_counts;
pub use search::{
    all_lines, count_lines_in_set, find_line_in_set, find_subspace_in_set, is_ij_insensitive, is_line_free,
    line_progressions, SearchOptions, DEFAULT_WORK_BUDGET,
};
pub use set::{CubeSet, CubeSetFile};
pub use shape::{CubeShape, MAX_ALPHABET};
pub use subspace::{Slot, Subspace};

