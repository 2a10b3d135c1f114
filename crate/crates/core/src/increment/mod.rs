//! The density-increment argument as runnable procedures: dense diagonals,
//! forbidden insensitive sets, correlation with an intersection of
//! insensitive sets, restriction to a uniform subspace, partitioning into
//! subspaces, and the driver that chains them.
//!
//! Every procedure evaluates its hypotheses exactly and reports whether they
//! hold. At desk-scale `n` they rarely do; conclusions are asserted only
//! when they are met.

mod bounds;
mod correlate;
mod diagonal;
mod driver;
mod forbidden;
mod partition;
mod restrict;

use rand::Rng;

use crate::cube::{CubeSet, CubeShape};
use crate::error::{Error, Result};

pub use bounds::{bounds_calculator, iterated_log2, BoundsReport, IncrementParams};
pub use correlate::{correlating_d, Correlation, CorrelationParams};
pub use diagonal::{dense_diagonal, local_densities, DiagonalCandidate, DiagonalCase, DiagonalOutcome, DiagonalSearch, EmbeddingSpec};
pub use driver::{dhj_driver, DriverConfig, DriverOutcome, IncrementTrace, IterationRecord, Mechanism};
pub use forbidden::{forbidden_sets, ForbiddenSets};
pub use partition::{
    fibers_insensitive, partition_insensitive, partition_insensitive_with, partition_intersection, PartitionLevel, PartitionResult,
};
pub use restrict::{restrict_to_uniform, RestrictParams, Restriction};

/// `{x : x^{from -> to} in base}`, which is `from,to`-insensitive.
pub fn insensitive_closure(base: &CubeSet, from: u8, to: u8) -> Result<CubeSet> {
    let shape = base.shape();
    check_symbol(shape, from)?;
    check_symbol(shape, to)?;
    let mut digits = vec![0u8; shape.n()];
    Ok(CubeSet::from_predicate(shape, |d| {
        for (o, &v) in digits.iter_mut().zip(d) {
            *o = if v == from { to } else { v };
        }
        base.contains_index(shape.index_of(&digits))
    }))
}

/// A random `ij`-insensitive set: each class of points agreeing after
/// rewriting `j` as `i` is kept with probability `p`.
pub fn random_insensitive_set<R: Rng + ?Sized>(shape: CubeShape, i: u8, j: u8, p: f64, rng: &mut R) -> Result<CubeSet> {
    insensitive_closure(&CubeSet::random(shape, p, rng), j, i)
}

/// Embeds a subset of `[k-1]^m` into `[k]^m`.
pub fn embed_lower(b: &CubeSet, k: usize) -> Result<CubeSet> {
    let small = b.shape();
    if small.k() + 1 != k {
        return Err(Error::param(format!("expected a subset of [{}]^m", k - 1)));
    }
    let shape = small.with_alphabet(k)?;
    let mut out = CubeSet::empty(shape);
    for i in b.iter() {
        out.insert_index(shape.index_of(&small.digits_of(i)));
    }
    Ok(out)
}

/// The points of `a` with no digit `k`, as a subset of `[k-1]^m`.
pub fn restrict_lower(a: &CubeSet) -> Result<CubeSet> {
    let shape = a.shape();
    if shape.k() < 2 {
        return Err(Error::param("restriction to [k-1]^m needs k >= 2"));
    }
    let small = shape.with_alphabet(shape.k() - 1)?;
    let mut out = CubeSet::empty(small);
    for i in 0..small.size() {
        if a.contains_index(shape.index_of(&small.digits_of(i))) {
            out.insert_index(i);
        }
    }
    Ok(out)
}

fn check_symbol(shape: CubeShape, s: u8) -> Result<()> {
    if s == 0 || s as usize > shape.k() {
        return Err(Error::param(format!("symbol {s} outside 1..={}", shape.k())));
    }
    Ok(())
}
