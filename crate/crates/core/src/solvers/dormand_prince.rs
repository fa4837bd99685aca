//! Embedded Dormand–Prince 5(4) pair with PI step-size control.
//!
//! The classic seven-stage tableau with the first-same-as-last property:
//! six right-hand-side evaluations per accepted step. Error control uses
//! the standard mixed norm with per-component scale
//! `atol + rtol · max(|y_i|, |y'_i|)`; a trial step is accepted when the
//! norm is at most 1.
//!
//! Controller constants, pinned for reproducibility: safety factor 0.9,
//! step-ratio bounds [0.2, 5], PI exponents 0.17 (= 1/5 − 0.75·β) and
//! β = 0.04.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, TemperatureField};
use crate::system::block_rate;

use super::RunResult;

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] =
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
// Row 7 doubles as the 5th-order weights (FSAL).
const A7: [f64; 6] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// 5th-order minus embedded 4th-order weights.
const ERR_W: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - 0.75 * BETA;
/// Step underflow threshold relative to the integration span.
const MIN_STEP_REL: f64 = 1e-14;
/// Hard cap on trial steps; reached only when the problem is far too
/// stiff for an explicit adaptive method.
const MAX_STEPS: usize = 20_000_000;

fn rhs_into(mesh: &Mesh, src: &[f64], dst: &mut [f64]) {
    for (i, slot) in dst.iter_mut().enumerate() {
        *slot = block_rate(mesh, src, i);
    }
}

fn combine(y: &[f64], h: f64, coeffs: &[f64], k: &[Vec<f64>], out: &mut [f64]) {
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, stage) in coeffs.iter().zip(k.iter()) {
            acc += c * stage[i];
        }
        *slot = y[i] + h * acc;
    }
}

fn rms_norm(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    let sum: f64 = values.map(|v| v * v).sum();
    (sum / n as f64).sqrt()
}

/// Hairer-style initial step size guess; costs one extra evaluation.
fn initial_step(mesh: &Mesh, y0: &[f64], f0: &[f64], span: f64, rtol: f64, atol: f64) -> f64 {
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|y| atol + rtol * y.abs()).collect();
    let d0 = rms_norm(y0.iter().zip(&sc).map(|(y, s)| y / s), n);
    let d1 = rms_norm(f0.iter().zip(&sc).map(|(f, s)| f / s), n);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);

    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; n];
    rhs_into(mesh, &y1, &mut f1);
    let d2 = rms_norm(f1.iter().zip(f0).zip(&sc).map(|((a, b), s)| (a - b) / s), n) / h0;

    let der = d1.max(d2);
    let h1 = if der <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / der).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

pub(super) fn run(
    mesh: &Mesh,
    initial: &TemperatureField,
    t_fin: f64,
    rtol: f64,
    atol: f64,
    record_trajectory: bool,
) -> Result<RunResult> {
    mesh.require_no_isolated()?;
    let n = mesh.n_blocks();
    if initial.len() != n {
        return Err(Error::SizeMismatch { field: initial.len(), expected: n });
    }
    let t0 = initial.time();
    let span = t_fin - t0;
    if !(span.is_finite() && span > 0.0) {
        return Err(Error::InvalidConfig(format!("bad integration span [{t0}, {t_fin}]")));
    }

    let mut y = initial.values().to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut y_stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    rhs_into(mesh, &y, &mut k[0]);

    let mut h = initial_step(mesh, &y, &k[0], span, rtol, atol);
    let mut t = t0;
    let mut facold = 1e-4f64;
    let mut last_rejected = false;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut trajectory = record_trajectory.then(|| vec![initial.clone()]);

    while t < t_fin {
        if accepted + rejected >= MAX_STEPS {
            return Err(Error::AdaptiveFailure(format!(
                "no convergence within {MAX_STEPS} trial steps (reached t = {t}); \
                 the problem is too stiff for this explicit method"
            )));
        }
        if h < MIN_STEP_REL * span {
            return Err(Error::AdaptiveFailure(format!(
                "step size underflow at t = {t} (h = {h:.3e})"
            )));
        }
        let last = h >= t_fin - t;
        if last {
            h = t_fin - t;
        }

        combine(&y, h, &A2, &k[..1], &mut y_stage);
        rhs_into(mesh, &y_stage, &mut k[1]);
        combine(&y, h, &A3, &k[..2], &mut y_stage);
        rhs_into(mesh, &y_stage, &mut k[2]);
        combine(&y, h, &A4, &k[..3], &mut y_stage);
        rhs_into(mesh, &y_stage, &mut k[3]);
        combine(&y, h, &A5, &k[..4], &mut y_stage);
        rhs_into(mesh, &y_stage, &mut k[4]);
        combine(&y, h, &A6, &k[..5], &mut y_stage);
        rhs_into(mesh, &y_stage, &mut k[5]);
        combine(&y, h, &A7, &k[..6], &mut y_new);
        {
            let (head, tail) = k.split_at_mut(6);
            let _ = head;
            rhs_into(mesh, &y_new, &mut tail[0]);
        }

        let err = {
            let sum: f64 = (0..n)
                .map(|i| {
                    let e: f64 =
                        h * ERR_W.iter().zip(k.iter()).map(|(w, stage)| w * stage[i]).sum::<f64>();
                    let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
                    let q = e / scale;
                    q * q
                })
                .sum();
            (sum / n as f64).sqrt()
        };

        if err <= 1.0 {
            accepted += 1;
            t = if last { t_fin } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6); // FSAL
            if let Some(traj) = trajectory.as_mut() {
                traj.push(TemperatureField::from_raw(y.clone(), t));
            }
            let fac =
                ((err.powf(EXPO1) / facold.powf(BETA)) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            facold = err.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            rejected += 1;
            last_rejected = true;
            h *= (SAFETY / err.powf(EXPO1)).max(FAC_MIN);
        }
    }

    Ok(RunResult {
        final_field: TemperatureField::from_raw(y, t_fin),
        steps_taken: accepted,
        steps_rejected: rejected,
        wall_time: 0.0,
        trajectory,
    })
}

/// Integrates from `initial` (at its own time stamp) to `t_fin` with the
/// embedded 5(4) pair at the given tolerances.
pub fn dormand_prince_integrate(
    mesh: &Mesh,
    initial: &TemperatureField,
    t_fin: f64,
    rtol: f64,
    atol: f64,
) -> Result<RunResult> {
    if !(rtol.is_finite() && rtol > 0.0 && atol.is_finite() && atol > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "tolerances must be positive, got rtol = {rtol}, atol = {atol}"
        )));
    }
    run(mesh, initial, t_fin, rtol, atol, false)
}
