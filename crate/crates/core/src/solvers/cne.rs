//! The explicit exponential update.
//!
//! One step advances each block toward its conductance-weighted neighbour
//! average with the block's own relaxation rate:
//!
//! ```text
//! T_i(t+h) = T_i(t) · e^(-h/τ_i)
//!          + (Σ_j U_ij T_j(t) / Σ_j U_ij) · (1 - e^(-h/τ_i))
//! ```
//!
//! with `τ_i = C_i / Σ_j U_ij`. The coefficients on the right are
//! non-negative and sum to one for every `h > 0`, which makes the update a
//! convex combination of old values: unconditionally stable, and bounded
//! by the initial extremes for any number of steps.

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::{BlockId, Mesh, TemperatureField};

use super::PAR_THRESHOLD;

#[inline]
fn block_update(mesh: &Mesh, src: &[f64], i: usize, h: f64) -> f64 {
    let (ids, cond) = mesh.neighbor_slices(i);
    let total = mesh.conductance_sum(i);
    let mut weighted = 0.0;
    for (&j, &u) in ids.iter().zip(cond.iter()) {
        weighted += u * src[j];
    }
    let x = h * total / mesh.capacities()[i];
    // 1 - e^(-x) via expm1: x = h/τ spans many orders of magnitude on
    // stiff meshes and the complement cancels badly for small x. Once x
    // exceeds ~745 the decay flushes to zero and the update degrades
    // gracefully to the plain neighbour average.
    let decay = (-x).exp();
    let growth = -f64::exp_m1(-x);
    src[i] * decay + (weighted / total) * growth
}

pub(super) fn step_into(mesh: &Mesh, src: &[f64], dst: &mut [f64], h: f64) {
    if src.len() >= PAR_THRESHOLD {
        dst.par_iter_mut().with_min_len(256).enumerate().for_each(|(i, slot)| {
            *slot = block_update(mesh, src, i, h);
        });
    } else {
        for (i, slot) in dst.iter_mut().enumerate() {
            *slot = block_update(mesh, src, i, h);
        }
    }
}

/// One exponential step of size `h`, reading only the old field.
pub fn cne_step(mesh: &Mesh, field: &TemperatureField, h: f64) -> Result<TemperatureField> {
    mesh.require_no_isolated()?;
    if field.len() != mesh.n_blocks() {
        return Err(crate::error::Error::SizeMismatch {
            field: field.len(),
            expected: mesh.n_blocks(),
        });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(crate::error::Error::InvalidConfig(format!(
            "step size must be positive, got {h}"
        )));
    }
    let mut dst = vec![0.0; field.len()];
    step_into(mesh, field.values(), &mut dst, h);
    Ok(TemperatureField::from_raw(dst, field.time() + h))
}

/// The convex-combination coefficients of one step for one block: the
/// self weight `e^(-h/τ_i)` followed by the neighbour weights
/// `(1 - e^(-h/τ_i)) · U_ij / Σ U` in ascending neighbour order.
///
/// All are non-negative and sum to 1; this is the stability argument in
/// executable form.
pub fn convex_weights(mesh: &Mesh, block: BlockId, h: f64) -> Result<(f64, Vec<f64>)> {
    let tau = mesh.characteristic_time(block)?;
    let decay = (-h / tau).exp();
    let growth = -f64::exp_m1(-h / tau);
    let total = mesh.conductance_sum(block.0);
    let weights = mesh
        .neighbors(block)?
        .into_iter()
        .map(|(_, u)| growth * (u / total))
        .collect();
    Ok((decay, weights))
}
