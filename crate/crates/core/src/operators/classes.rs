//! The partition of the `d²` operators `Z_a X_b` into `d + 1` commuting
//! classes plus the identity.

use alloc::{format, vec, vec::Vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::pauli::{OperatorLabel, PauliOp};
use crate::error::{internal, Result};
use crate::galois::{FieldElement, FieldSpec, FieldTables};
use crate::par;

/// Largest `d` for which intra-class commutation is checked on every pair.
pub const EXHAUSTIVE_CLASS_LIMIT: usize = 81;

/// Random pairs checked per class above the exhaustive limit.
pub const SAMPLED_PAIRS_PER_CLASS: usize = 200;

/// `C_θ = {Z_θ′ X_{θθ′} : θ′ ≠ 0}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommutingClass {
    pub theta: FieldElement,
    pub labels: Vec<OperatorLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassPartition {
    /// The pure shifts `X_θ`, `θ ≠ 0`.
    pub f0: Vec<OperatorLabel>,
    /// One class per `θ`, in index order.
    pub classes: Vec<CommutingClass>,
    pub identity: OperatorLabel,
    /// Number of distinct labels covered, always `d²`.
    pub total_labels: usize,
    /// Commuting pairs verified across all classes and `F₀`.
    pub pairs_checked: u64,
    /// Whether every intra-class pair was checked.
    pub exhaustive: bool,
}

/// Builds the partition with the default sampling policy and seed 0.
pub fn commuting_classes(spec: &FieldSpec) -> Result<ClassPartition> {
    commuting_classes_with(spec, EXHAUSTIVE_CLASS_LIMIT, 0)
}

/// Builds the partition, asserting cardinalities, disjointness, coverage and
/// commutation. Commutation is exhaustive for `d ≤ exhaustive_limit`.
pub fn commuting_classes_with(spec: &FieldSpec, exhaustive_limit: usize, seed: u64) -> Result<ClassPartition> {
    let tables = FieldTables::new(spec)?;
    let d = spec.d();
    let label = |a: usize, b: usize| -> Result<OperatorLabel> {
        Ok(OperatorLabel { zpart: spec.element_at(a)?, xpart: spec.element_at(b)? })
    };
    let mut seen = vec![false; d * d];
    let mut mark = |a: usize, b: usize| -> Result<()> {
        if core::mem::replace(&mut seen[a * d + b], true) {
            return Err(internal(format!("label ({a}, {b}) appears in two classes")));
        }
        Ok(())
    };

    let mut f0_idx = Vec::with_capacity(d - 1);
    for b in 1..d {
        mark(0, b)?;
        f0_idx.push((0, b));
    }
    let mut class_idx: Vec<Vec<(usize, usize)>> = Vec::with_capacity(d);
    for theta in 0..d {
        let members: Vec<(usize, usize)> = (1..d).map(|tp| (tp, tables.mul(theta, tp))).collect();
        for &(a, b) in &members {
            mark(a, b)?;
        }
        if members.len() != d - 1 {
            return Err(internal("class has the wrong size"));
        }
        class_idx.push(members);
    }
    mark(0, 0)?;
    let total = seen.iter().filter(|&&s| s).count();
    if total != d * d {
        return Err(internal(format!("classes cover {total} of {} labels", d * d)));
    }

    let exhaustive = d <= exhaustive_limit;
    let mut groups: Vec<&[(usize, usize)]> = vec![&f0_idx];
    groups.extend(class_idx.iter().map(|c| c.as_slice()));
    let checked: Vec<Result<u64>> = par::map_indices(groups.len(), |g| {
        check_commuting(&tables, groups[g], exhaustive, seed.wrapping_add(g as u64))
    });
    let mut pairs_checked = 0u64;
    for (g, r) in checked.into_iter().enumerate() {
        pairs_checked += r.map_err(|e| internal(format!("class {g}: {e}")))?;
    }

    let to_labels = |v: &[(usize, usize)]| v.iter().map(|&(a, b)| label(a, b)).collect::<Result<Vec<_>>>();
    let classes = class_idx
        .iter()
        .enumerate()
        .map(|(theta, members)| Ok(CommutingClass { theta: spec.element_at(theta)?, labels: to_labels(members)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassPartition {
        f0: to_labels(&f0_idx)?,
        classes,
        identity: label(0, 0)?,
        total_labels: total,
        pairs_checked,
        exhaustive,
    })
}

fn check_commuting(tables: &FieldTables, members: &[(usize, usize)], exhaustive: bool, seed: u64) -> Result<u64> {
    let ops: Vec<PauliOp> = members.iter().map(|&(a, b)| PauliOp::from_label(tables, a, b)).collect();
    let fail = |i: usize, j: usize| {
        internal(format!("Z_{}X_{} and Z_{}X_{} do not commute", members[i].0, members[i].1, members[j].0, members[j].1))
    };
    let mut count = 0u64;
    if exhaustive {
        for i in 0..ops.len() {
            for j in i + 1..ops.len() {
                if !ops[i].commutes_with(&ops[j]) {
                    return Err(fail(i, j));
                }
                count += 1;
            }
        }
    } else if ops.len() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..SAMPLED_PAIRS_PER_CLASS {
            let i = rng.random_range(0..ops.len());
            let j = rng.random_range(0..ops.len());
            if !ops[i].commutes_with(&ops[j]) {
                return Err(fail(i, j));
            }
            count += 1;
        }
    }
    Ok(count)
}
