//! Consensus: stationary density of the kernel's Markov chain, the consensus
//! value, its geometric certificate, and discounted utilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{OpinionFunction, StepFunction};
use crate::kernel::{apply, gamma_mixing, Kernel};

/// Tolerance on `∫ψ = 1` for stage-utility weights.
pub const PSI_NORM_TOL: f64 = 1e-9;

/// Opinion diameter; the `α` of the consensus envelope.
pub const ENVELOPE_ALPHA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDensity {
    pub density: StepFunction,
    /// L¹ change of the final iteration.
    pub residual: f64,
    /// Ratio of the last two residuals.
    pub rate: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// One adjoint step `h'(y) = ∫ W(x, y) h(x) dx`, block form `h'_j = Σ_i p_i h_i w_ij`.
pub fn adjoint_step(kernel: &Kernel, h: &[f64]) -> Vec<f64> {
    let p = kernel.partition().weights();
    let w = kernel.density();
    let n = h.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mass = p[i] * h[i];
        if mass == 0.0 {
            continue;
        }
        for (o, wij) in out.iter_mut().zip(&w[i]) {
            *o += mass * wij;
        }
    }
    out
}

fn weighted_l1(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    p.iter().zip(a).zip(b).map(|((p, x), y)| p * (x - y).abs()).sum()
}

/// Power iteration on the adjoint operator from the uniform density.
///
/// Non-convergence within `max_iter` is reported through `converged = false`
/// with the last iterate; this can happen when the kernel is not γ-mixing.
pub fn stationary_density(kernel: &Kernel, tol: f64, max_iter: usize) -> Result<StationaryDensity> {
    let start = StepFunction::constant(kernel.partition(), 1.0);
    stationary_density_from(kernel, &start, tol, max_iter)
}

/// [`stationary_density`] from an arbitrary non-negative starting density.
pub fn stationary_density_from(
    kernel: &Kernel,
    start: &StepFunction,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryDensity> {
    let partition = kernel.partition();
    if !start.partition().same_as(&partition) {
        return Err(Error::Shape("starting density is not on the kernel partition".into()));
    }
    if start.min() < 0.0 || start.integral() <= 0.0 {
        return Err(Error::InvalidArgument("starting density must be non-negative with positive mass".into()));
    }
    let p = partition.weights();
    let mass = start.integral();
    let mut h: Vec<f64> = start.values().iter().map(|v| v / mass).collect();
    let (mut residual, mut prev_residual) = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    while iterations < max_iter {
        let mut next = adjoint_step(kernel, &h);
        let total: f64 = next.iter().zip(&p).map(|(v, w)| v * w).sum();
        next.iter_mut().for_each(|v| *v /= total);
        prev_residual = residual;
        residual = weighted_l1(&p, &next, &h);
        h = next;
        iterations += 1;
        if residual <= tol {
            break;
        }
    }
    let rate = if prev_residual.is_finite() && prev_residual > 0.0 {
        residual / prev_residual
    } else {
        0.0
    };
    Ok(StationaryDensity {
        density: StepFunction::new(partition, h)?,
        residual,
        rate,
        iterations,
        converged: residual <= tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusReport {
    /// `f* = ∫ h f₀`.
    pub value: f64,
    /// Whether the kernel is γ-mixing with `γ > 0`.
    pub certified: bool,
    pub gamma: f64,
    pub rho: f64,
    pub alpha: f64,
    /// `sup_x |f_t(x) − f*|` for `t = 0, 1, …`.
    pub sup_distances: Vec<f64>,
    pub converged: bool,
    pub density: StationaryDensity,
}

impl ConsensusReport {
    /// `α ρ^t`.
    pub fn envelope(&self, t: usize) -> f64 {
        self.alpha * self.rho.powi(t as i32)
    }
}

/// Consensus value and trajectory distances; iterates until the sup-change is at most `tol`.
pub fn consensus(kernel: &Kernel, f0: &OpinionFunction, tol: f64, max_iter: usize) -> Result<ConsensusReport> {
    let density = stationary_density(kernel, tol, max_iter)?;
    let value = density.density.inner(f0.as_step()).clamp(-1.0, 1.0);
    let gamma = gamma_mixing(kernel);
    let target = StepFunction::constant(f0.partition().clone(), value);
    let mut sup_distances = vec![f0.as_step().sup_distance(&target)];
    let mut f = f0.clone();
    let mut settled = false;
    for _ in 0..max_iter {
        let next = apply(kernel, &f)?;
        let change = next.as_step().sup_distance(f.as_step());
        sup_distances.push(next.as_step().sup_distance(&target));
        f = next;
        if change <= tol {
            settled = true;
            break;
        }
    }
    Ok(ConsensusReport {
        value,
        certified: gamma > 0.0,
        gamma,
        rho: 1.0 - gamma,
        alpha: ENVELOPE_ALPHA,
        sup_distances,
        converged: settled && density.converged,
        density,
    })
}

/// Checks `ψ ≥ 0` and `∫ψ = 1`.
pub fn check_weight_function(psi: &StepFunction) -> Result<()> {
    if psi.min() < 0.0 {
        return Err(Error::Contract("weight function must be non-negative".into()));
    }
    let mass = psi.integral();
    if (mass - 1.0).abs() > PSI_NORM_TOL {
        return Err(Error::Contract(format!("weight function integrates to {mass}, expected 1")));
    }
    Ok(())
}

/// `sign · ∫ f ψ`.
pub fn stage_utility(f: &OpinionFunction, psi: &StepFunction, sign: f64) -> Result<f64> {
    check_weight_function(psi)?;
    Ok(sign * f.as_step().inner(psi))
}

/// Horizon `T*`: smallest `T` with `δ^{T+1} ≤ tol`.
pub fn horizon(delta: f64, tol: f64) -> usize {
    if tol >= 1.0 {
        return 0;
    }
    ((tol.ln() / delta.ln()).ceil() as usize).saturating_sub(1)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("discount factor {delta} not in (0, 1)")));
    }
    Ok(())
}

/// `(1 − δ) Σ_{t≥1} δ^t u(T^t f)`, truncated once the geometric tail is below `tol`.
///
/// A trajectory that becomes constant is closed out with the exact tail sum.
pub fn discounted_utility(
    kernel: &Kernel,
    f_initial: &OpinionFunction,
    psi: &StepFunction,
    sign: f64,
    delta: f64,
    tol: f64,
) -> Result<f64> {
    check_delta(delta)?;
    check_weight_function(psi)?;
    let horizon = horizon(delta, tol);
    let mut f = f_initial.clone();
    let mut weight = 1.0 - delta;
    let mut total = 0.0;
    for _ in 1..=horizon {
        f = apply(kernel, &f)?;
        weight *= delta;
        let u = sign * f.as_step().inner(psi);
        if f.as_step().max() - f.as_step().min() == 0.0 {
            // (1 − δ) Σ_{s ≥ t} δ^s = δ^t
            return Ok(total + weight / (1.0 - delta) * u);
        }
        total += weight * u;
    }
    Ok(total)
}
