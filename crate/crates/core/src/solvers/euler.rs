//! Explicit Euler, the conventional baseline.
//!
//! `T' = T + h · dT/dt` with the rate evaluated matrix-free. On this
//! spatial discretization the scheme is the forward-time central-space
//! (FTCS) method; it is stable only while `h <= 2 / |λ_m|` and the
//! integrator loop in [`super::integrate`] detects the blow-up above
//! that threshold.

use rayon::prelude::*;

use crate::error::Result;
use crate::mesh::{Mesh, TemperatureField};
use crate::system::block_rate;

use super::PAR_THRESHOLD;

pub(super) fn step_into(mesh: &Mesh, src: &[f64], dst: &mut [f64], h: f64) {
    if src.len() >= PAR_THRESHOLD {
        dst.par_iter_mut().with_min_len(256).enumerate().for_each(|(i, slot)| {
            *slot = src[i] + h * block_rate(mesh, src, i);
        });
    } else {
        for (i, slot) in dst.iter_mut().enumerate() {
            *slot = src[i] + h * block_rate(mesh, src, i);
        }
    }
}

/// One explicit Euler step of size `h`, reading only the old field.
pub fn euler_step(mesh: &Mesh, field: &TemperatureField, h: f64) -> Result<TemperatureField> {
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
