//! Flat-model Cauchy-data matching on the interface sphere |x| = r_ε.
//!
//! Interior field (ρ ≤ r_ε):
//!   A = u_{ε,R} + Υ + ((n−4)u + ρu')⟨a, x⟩ + P(φ),
//! exterior field (ρ ≥ r_ε):
//!   B = 1 + λρ^{4−n} + Q(ψ) + V,
//! where P, Q are the interior/exterior Navier–Poisson extensions and V is an
//! optional regular biharmonic background (zero by default).
//!
//! Traces are stored scaled: (w, r∂w, r²Δw, r³∂Δw) at r = r_ε, which is the
//! weighting (1, r, r², r³) of the matching rows.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::conformal::{bilaplacian_from_jet, radial_jet, J5};
use crate::delaunay::DelaunaySolution;
use crate::error::{domain, QflowError, Result};
use crate::modes::{
    exterior_coeffs, interior_coeffs, interior_poisson, multiplicity, n2n_inverse, BoundaryData, Mode,
    RadialProfile,
};

/// Small schedule constants; must satisfy m > δ2 > δ1 > 0 and δ0 > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleKnobs {
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub m: f64,
}

impl Default for ScheduleKnobs {
    fn default() -> Self {
        Self { delta0: 0.05, delta1: 0.02, delta2: 0.03, m: 0.04 }
    }
}

impl ScheduleKnobs {
    pub fn validate(&self, n: u32) -> Result<()> {
        let ok = self.m > self.delta2 && self.delta2 > self.delta1 && self.delta1 > 0.0 && self.delta0 > 0.0;
        if !ok || ![self.delta0, self.delta1, self.delta2, self.m].iter().all(|v| v.is_finite()) {
            return domain("schedule constants need m > δ2 > δ1 > 0 and δ0 > 0");
        }
        if self.delta0 >= 2.0 / (n as f64 - 4.0) {
            return domain("δ0 must be below 2/(n−4) so that s > 0");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GluingSchedule {
    pub n: u32,
    pub eps: f64,
    pub alpha: f64,
    pub knobs: ScheduleKnobs,
    pub s: f64,
    pub r_eps: f64,
    pub b: f64,
    pub r_param: f64,
}

/// r_ε = α_ε^s with s = 2/(n−4) − δ0, and R = (α_ε/(2+2b))^{2/(n−4)}.
pub fn make_schedule(sol: &DelaunaySolution, knobs: ScheduleKnobs, b: f64) -> Result<GluingSchedule> {
    let n = sol.params.n;
    knobs.validate(n)?;
    if !(b.abs() <= 0.5) {
        return domain(format!("|b| must be ≤ 1/2, got {b}"));
    }
    let nf = n as f64;
    let s = 2.0 / (nf - 4.0) - knobs.delta0;
    let r_eps = sol.alpha.powf(s);
    if !(r_eps > 0.0 && r_eps < 1.0) {
        return domain(format!("r_eps = {r_eps} is not in (0, 1)"));
    }
    let k = 2.0 / (nf - 4.0);
    let r_param = (k * sol.alpha.ln() - k * (2.0 + 2.0 * b).ln()).exp();
    Ok(GluingSchedule { n, eps: sol.eps, alpha: sol.alpha, knobs, s, r_eps, b, r_param })
}

/// Per-mode scaled traces (w, r∂w, r²Δw, r³∂Δw) at radius `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyTrace {
    pub r: f64,
    pub modes: BTreeMap<Mode, [f64; 4]>,
}

impl CauchyTrace {
    pub fn get(&self, mode: Mode) -> [f64; 4] {
        self.modes.get(&mode).copied().unwrap_or([0.0; 4])
    }

    /// Unscaled (w, ∂w, Δw, ∂Δw) of one mode.
    pub fn raw(&self, mode: Mode) -> [f64; 4] {
        let t = self.get(mode);
        std::array::from_fn(|k| t[k] / self.r.powi(k as i32))
    }

    fn add(&mut self, mode: Mode, t: [f64; 4]) {
        let e = self.modes.entry(mode).or_insert([0.0; 4]);
        for k in 0..4 {
            e[k] += t[k];
        }
    }
}

/// Full matching state: schedule, solved parameters and the background.
#[derive(Debug, Clone)]
pub struct GluingState {
    pub solution: Arc<DelaunaySolution>,
    pub schedule: GluingSchedule,
    pub lambda: f64,
    pub a: Vec<f64>,
    pub xi0: f64,
    pub xi2: f64,
    pub tau: Vec<f64>,
    pub zeta: Vec<f64>,
    pub rho: Vec<f64>,
    /// Exterior high-mode Navier data ψ''.
    pub psi_high: BoundaryData,
    /// Interior high-mode Navier data φ''.
    pub phi_high: BoundaryData,
    /// Regular background in the exterior field: coefficients of ρ^l and ρ^{l+2} per mode.
    pub background: BTreeMap<Mode, (f64, f64)>,
    pub l_max: u32,
}

impl GluingState {
    /// All parameters zero (b = 0, λ = 0).
    pub fn unsolved(solution: Arc<DelaunaySolution>, knobs: ScheduleKnobs, l_max: u32) -> Result<Self> {
        let schedule = make_schedule(&solution, knobs, 0.0)?;
        let n = solution.params.n;
        let dim = n as usize;
        let r = schedule.r_eps;
        Ok(Self {
            solution,
            schedule,
            lambda: 0.0,
            a: vec![0.0; dim],
            xi0: 0.0,
            xi2: 0.0,
            tau: vec![0.0; dim],
            zeta: vec![0.0; dim],
            rho: vec![0.0; dim],
            psi_high: BoundaryData::new(n, r)?,
            phi_high: BoundaryData::new(n, r)?,
            background: BTreeMap::new(),
            l_max,
        })
    }

    pub fn with_background(mut self, background: BTreeMap<Mode, (f64, f64)>) -> Result<Self> {
        let n = self.n();
        for m in background.keys() {
            if m.pos as u64 >= multiplicity(m.l, n) {
                return domain(format!("background mode ({}, {}) out of range", m.l, m.pos));
            }
        }
        self.background = background;
        Ok(self)
    }

    pub fn n(&self) -> u32 {
        self.solution.params.n
    }

    pub fn r(&self) -> f64 {
        self.schedule.r_eps
    }

    fn set_b(&mut self, b: f64) -> Result<()> {
        self.schedule = make_schedule(&self.solution, self.schedule.knobs, b)?;
        Ok(())
    }

    fn green_leading(&self) -> f64 {
        self.schedule.alpha.powi(2) / (4.0 * (1.0 + self.schedule.b))
    }

    /// κ = (α²/(4(1+b)) − λ) r^{4−n}.
    pub fn kappa(&self) -> f64 {
        (self.green_leading() - self.lambda) * self.r().powf(4.0 - self.n() as f64)
    }

    fn background_profile(&self, mode: Mode) -> Option<RadialProfile> {
        let (g, h) = *self.background.get(&mode)?;
        let r = self.r();
        let l = mode.l as i32;
        Some(RadialProfile {
            n: self.n(),
            l: mode.l,
            scale: r,
            coeffs: [g * r.powi(l), h * r.powi(l + 2), 0.0, 0.0],
            particular: None,
        })
    }

    fn interior_u_jet(&self, rho: f64) -> J5 {
        radial_jet(&self.solution, self.schedule.r_param, rho)
    }

    /// −(β/2) R^{−n/2}.
    fn upsilon_coeff(&self) -> f64 {
        -(self.solution.beta / 2.0) * self.schedule.r_param.powf(-(self.n() as f64) / 2.0)
    }
}

fn profile_traces(p: &RadialProfile) -> [f64; 4] {
    p.scaled_traces()
}

fn profile(n: u32, l: u32, r: f64, coeffs: [f64; 4]) -> RadialProfile {
    RadialProfile { n, l, scale: r, coeffs, particular: None }
}

/// Scaled traces of a radial function given its derivatives u, u', …, u''''.
fn radial_traces(d: &[f64; 5], r: f64, n: f64) -> [f64; 4] {
    let lap = d[2] + (n - 1.0) * d[1] / r;
    let dlap = d[3] + (n - 1.0) * d[2] / r - (n - 1.0) * d[1] / (r * r);
    [d[0], r * d[1], r * r * lap, r.powi(3) * dlap]
}

/// Scaled traces of the degree-1 radial part h(ρ) = ρ((n−4)u + ρu').
fn translation_traces(d: &[f64; 5], r: f64, n: f64) -> [f64; 4] {
    let h = (n - 4.0) * r * d[0] + r * r * d[1];
    let h1 = (n - 4.0) * d[0] + (n - 2.0) * r * d[1] + r * r * d[2];
    let h2 = (2.0 * n - 6.0) * d[1] + n * r * d[2] + r * r * d[3];
    let h3 = (3.0 * n - 6.0) * d[2] + (n + 2.0) * r * d[3] + r * r * d[4];
    let lap = h2 + (n - 1.0) * h1 / r - (n - 1.0) * h / (r * r);
    let dlap = h3 + (n - 1.0) * h2 / r - 2.0 * (n - 1.0) * h1 / (r * r) + 2.0 * (n - 1.0) * h / r.powi(3);
    [h, r * h1, r * r * lap, r.powi(3) * dlap]
}

fn u_derivs(state: &GluingState, rho: f64) -> [f64; 5] {
    let j = state.interior_u_jet(rho);
    std::array::from_fn(|k| j.deriv(k))
}

pub fn interior_trace(state: &GluingState) -> Result<CauchyTrace> {
    let n = state.n();
    let nf = n as f64;
    let r = state.r();
    let d = u_derivs(state, r);
    let mut out = CauchyTrace { r, modes: BTreeMap::new() };

    let c = state.upsilon_coeff() * r * r;
    let p0 = profile(n, 0, r, interior_coeffs(0, n, 0.0, state.xi0)?);
    out.add(Mode::new(0, 0), radial_traces(&d, r, nf));
    out.add(Mode::new(0, 0), [c, 2.0 * c, 2.0 * nf * c, 0.0]);
    out.add(Mode::new(0, 0), profile_traces(&p0));

    let tr = translation_traces(&d, r, nf);
    for j in 0..n as usize {
        let mode = Mode::new(1, j as u32);
        let p1 = profile(n, 1, r, interior_coeffs(1, n, 0.0, state.tau[j])?);
        let mut t = profile_traces(&p1);
        for k in 0..4 {
            t[k] += state.a[j] * tr[k];
        }
        out.add(mode, t);
    }
    for (m, (c0, c2)) in &state.phi_high.coeffs {
        if m.l <= state.l_max {
            out.add(*m, profile_traces(&profile(n, m.l, r, interior_coeffs(m.l, n, *c0, *c2)?)));
        }
    }
    out.modes.retain(|_, t| t.iter().any(|&v| v != 0.0));
    Ok(out)
}

pub fn exterior_trace(state: &GluingState) -> Result<CauchyTrace> {
    let n = state.n();
    let nf = n as f64;
    let r = state.r();
    let mut out = CauchyTrace { r, modes: BTreeMap::new() };

    let green = profile(n, 0, r, [0.0, 0.0, 0.0, state.lambda * r.powf(4.0 - nf)]);
    let q0 = profile(n, 0, r, exterior_coeffs(0, n, 0.0, state.xi2)?);
    out.add(Mode::new(0, 0), [1.0, 0.0, 0.0, 0.0]);
    out.add(Mode::new(0, 0), profile_traces(&green));
    out.add(Mode::new(0, 0), profile_traces(&q0));
    for j in 0..n as usize {
        let q1 = profile(n, 1, r, exterior_coeffs(1, n, state.rho[j], state.zeta[j])?);
        out.add(Mode::new(1, j as u32), profile_traces(&q1));
    }
    for (m, (c0, c2)) in &state.psi_high.coeffs {
        if m.l <= state.l_max {
            out.add(*m, profile_traces(&profile(n, m.l, r, exterior_coeffs(m.l, n, *c0, *c2)?)));
        }
    }
    for m in state.background.keys() {
        if m.l <= state.l_max {
            if let Some(p) = state.background_profile(*m) {
                out.add(*m, profile_traces(&p));
            }
        }
    }
    out.modes.retain(|_, t| t.iter().any(|&v| v != 0.0));
    Ok(out)
}

/// Interior minus exterior, per mode.
pub fn trace_difference(state: &GluingState) -> Result<BTreeMap<Mode, [f64; 4]>> {
    let int = interior_trace(state)?;
    let ext = exterior_trace(state)?;
    let mut out = BTreeMap::new();
    for m in int.modes.keys().chain(ext.modes.keys()) {
        let (a, b) = (int.get(*m), ext.get(*m));
        out.insert(*m, std::array::from_fn(|k| a[k] - b[k]));
    }
    Ok(out)
}

/// Sup over modes of each scaled trace difference, one norm per matching row.
pub fn cauchy_mismatch(state: &GluingState) -> Result<[f64; 4]> {
    let diff = trace_difference(state)?;
    let mut out = [0.0f64; 4];
    for t in diff.values() {
        for k in 0..4 {
            out[k] = out[k].max(t[k].abs());
        }
    }
    Ok(out)
}

/// Linear part of the degree-0 matching rows in (b, κ, ξ0, ξ2).
#[rustfmt::skip]
pub fn constants_matrix(n: u32) -> Matrix4<f64> {
    let nf = n as f64;
    let g = 4.0 - nf;
    Matrix4::new(
        1.0, 1.0, 1.0 / (2.0 * nf), 0.0,
        0.0, g, 1.0 / nf, -1.0 / g,
        0.0, 2.0 * g, 1.0, -1.0,
        0.0, 2.0 * g * (2.0 - nf), 0.0, nf - 2.0,
    )
}

/// Result of [`solve_constants`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSolution {
    pub b: f64,
    pub lambda: f64,
    pub xi0: f64,
    pub xi2: f64,
    pub iterations: usize,
    /// Degree-0 scaled mismatch after the last iterate.
    pub residual: [f64; 4],
}

fn degree0_mismatch(state: &GluingState) -> Result<Vector4<f64>> {
    let d = trace_difference(state)?;
    let t = d.get(&Mode::new(0, 0)).copied().unwrap_or([0.0; 4]);
    Ok(Vector4::from(t))
}

fn apply_constants(state: &mut GluingState, x: &Vector4<f64>) -> Result<()> {
    state.set_b(x[0])?;
    let nf = state.n() as f64;
    state.lambda = state.green_leading() - x[1] * state.r().powf(nf - 4.0);
    state.xi0 = x[2];
    state.xi2 = x[3];
    Ok(())
}

/// Quasi-Newton on the degree-0 rows: X ← X − J⁻¹ m(X), with J the linear model
/// and m the exact scaled trace mismatch (it carries the nonlinearity in b).
pub fn solve_constants(state: &mut GluingState) -> Result<ConstantsSolution> {
    let j = constants_matrix(state.n());
    let lu = j.lu();
    let mut x = Vector4::new(state.schedule.b, state.kappa(), state.xi0, state.xi2);
    let mut log = Vec::new();
    for it in 1..=100 {
        let m = degree0_mismatch(state)?;
        let dx = lu.solve(&m).ok_or_else(|| QflowError::Solve("degree-0 matching matrix is singular".into()))?;
        x -= dx;
        log.push(format!("{it}: b={:.6e} |m|={:.3e}", x[0], m.amax()));
        if !(x[0].abs() <= 0.5) || !x.iter().all(|v| v.is_finite()) {
            return Err(QflowError::Convergence(format!("constants left the admissible range: {}", log.join("; "))));
        }
        apply_constants(state, &x)?;
        if dx.amax() <= 1e-15 * (1.0 + x.amax()) {
            let residual = degree0_mismatch(state)?;
            return Ok(ConstantsSolution {
                b: x[0],
                lambda: state.lambda,
                xi0: x[2],
                xi2: x[3],
                iterations: it,
                residual: residual.into(),
            });
        }
    }
    Err(QflowError::Convergence(format!("constants did not converge: {}", log.join("; "))))
}

/// (F, G, M, N) at r_ε for u = u_{ε,R}.
pub fn fgmn(state: &GluingState) -> [f64; 4] {
    let nf = state.n() as f64;
    let r = state.r();
    let d = u_derivs(state, r);
    let (u, u1, u2, u3, u4) = (d[0], r * d[1], r * r * d[2], r.powi(3) * d[3], r.powi(4) * d[4]);
    [
        (nf - 4.0) * u + u1,
        (nf - 4.0) * u + (nf - 2.0) * u1 + u2,
        (nf - 3.0) * (nf + 1.0) * u1 + (2.0 * nf - 1.0) * u2 + u3,
        (nf * nf - 4.0) * u2 + (2.0 * nf + 1.0) * u3 + u4,
    ]
}

/// Weights (1, 1/(n−1), c1, c2) that eliminate τ, ζ, ϱ from the coordinate rows.
pub fn reduction_weights(n: u32) -> [f64; 4] {
    let nf = n as f64;
    let den = 2.0 * (nf - 1.0) * (nf - 2.0);
    [1.0, 1.0 / (nf - 1.0), -(nf - 3.0) / den, -1.0 / den]
}

/// 𝒯 = F + G/(n−1) + c1 M + c2 N.
pub fn transversality(state: &GluingState) -> f64 {
    let f = fgmn(state);
    let w = reduction_weights(state.n());
    (0..4).map(|k| w[k] * f[k]).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinateSolution {
    pub a: Vec<f64>,
    pub tau: Vec<f64>,
    pub zeta: Vec<f64>,
    pub rho: Vec<f64>,
    pub transversality: f64,
    pub iterations: usize,
    /// Largest degree-1 scaled mismatch after the solve.
    pub residual: f64,
}

fn degree1_mismatch(state: &GluingState) -> Result<Vec<[f64; 4]>> {
    let d = trace_difference(state)?;
    Ok((0..state.n()).map(|j| d.get(&Mode::new(1, j)).copied().unwrap_or([0.0; 4])).collect())
}

/// Per coordinate: a_j from the reduced row, then ζ_j, τ_j, ϱ_j by back-substitution.
pub fn solve_coordinates(state: &mut GluingState) -> Result<CoordinateSolution> {
    let n = state.n();
    let nf = n as f64;
    let r = state.r();
    let [f, _, m, nn] = fgmn(state);
    let tt = transversality(state);
    if !(tt.abs() > 1e-8) {
        return Err(QflowError::IllConditioned(format!("transversality constant {tt:e} is too small")));
    }
    let w = reduction_weights(n);
    let mut iterations = 0;
    for it in 1..=20 {
        iterations = it;
        let mis = degree1_mismatch(state)?;
        let mut change = 0.0f64;
        for j in 0..n as usize {
            // rows: J X = h with h = −m(X) + J X at the current X
            let h: [f64; 4] = std::array::from_fn(|k| -mis[j][k]);
            let da = (0..4).map(|k| w[k] * h[k]).sum::<f64>() / (r * tt);
            let dzeta = (h[3] - h[2] - (nn - m) * r * da) / nf;
            let dtau = h[2] - m * r * da + dzeta;
            let drho = f * r * da + dtau / (2.0 * nf + 4.0) - h[0];
            state.a[j] += da;
            state.tau[j] += dtau;
            state.zeta[j] += dzeta;
            state.rho[j] += drho;
            change = change.max(da.abs() + dtau.abs() + dzeta.abs() + drho.abs());
        }
        if change <= 1e-15 {
            break;
        }
    }
    let residual = degree1_mismatch(state)?.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(CoordinateSolution {
        a: state.a.clone(),
        tau: state.tau.clone(),
        zeta: state.zeta.clone(),
        rho: state.rho.clone(),
        transversality: tt,
        iterations,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighModeSolution {
    pub psi: BoundaryData,
    pub phi: BoundaryData,
    pub iterations: usize,
    /// Largest high-mode scaled mismatch after the solve.
    pub residual: f64,
}

fn high_frozen_mismatch(state: &GluingState) -> Result<BTreeMap<Mode, [f64; 4]>> {
    // mismatch of everything except P(φ'') and Q(ψ'')
    let mut bare = state.clone();
    bare.psi_high = BoundaryData::new(state.n(), state.r())?;
    bare.phi_high = bare.psi_high.clone();
    let d = trace_difference(&bare)?;
    Ok(d.into_iter().filter(|(m, _)| !m.is_low() && m.l <= state.l_max).collect())
}

/// ψ'' = Z⁻¹(P_{1,3}(E0, E2) − E_{1,3}) and φ'' = ψ'' − (E0, E2), per high mode,
/// where E is the frozen interior-minus-exterior mismatch and Z the
/// Navier-to-Neumann matrix.
pub fn solve_high_modes(state: &mut GluingState) -> Result<HighModeSolution> {
    if state.l_max < 2 {
        return domain("l_max must be ≥ 2");
    }
    let n = state.n();
    let r = state.r();
    let mut iterations = 0;
    for it in 1..=5 {
        iterations = it;
        let e = high_frozen_mismatch(state)?;
        let mut e02 = BoundaryData::new(n, r)?;
        for (m, t) in &e {
            e02.set(*m, t[0], t[2])?;
        }
        let pe = interior_poisson(&e02, 2.0)?;
        let mut rhs = BoundaryData::new(n, r)?;
        for (m, t) in &e {
            let tp = pe.profile(*m).scaled_traces();
            rhs.set(*m, tp[1] - t[1], tp[3] - t[3])?;
        }
        let psi = n2n_inverse(&rhs)?;
        let phi = psi.add(&e02.scale(-1.0))?;
        let same = psi == state.psi_high && phi == state.phi_high;
        state.psi_high = psi;
        state.phi_high = phi;
        if same {
            break;
        }
    }
    let d = trace_difference(state)?;
    let residual = d
        .iter()
        .filter(|(m, _)| !m.is_low())
        .flat_map(|(_, t)| t.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(HighModeSolution { psi: state.psi_high.clone(), phi: state.phi_high.clone(), iterations, residual })
}

/// Weighted sup of σ⁴|Δ²w − C w^p| for the degree-0 glued field on [r/2, r]
/// (interior) and [r, 2r] (exterior), σ the inner radius of each annulus.
pub fn pde_residual_diagnostic(state: &GluingState) -> Result<f64> {
    let p = &state.solution.params;
    let n = state.n();
    let nf = n as f64;
    let r = state.r();
    let samples = 64;
    let cu = state.upsilon_coeff();
    let p0 = profile(n, 0, r, interior_coeffs(0, n, 0.0, state.xi0)?);
    let q0 = profile(n, 0, r, exterior_coeffs(0, n, 0.0, state.xi2)?);
    let bg = state.background_profile(Mode::new(0, 0));
    let profile_jet = |prof: &RadialProfile, rho: f64| J5::from_derivs(&prof.derivs(rho));
    let mut worst = 0.0f64;
    for k in 0..=samples {
        let frac = k as f64 / samples as f64;
        let inner = r / 2.0 * (1.0 + frac);
        let x = J5::var(inner);
        let w = state.interior_u_jet(inner) + x * x * cu + profile_jet(&p0, inner);
        let res = bilaplacian_from_jet(&w, inner, nf) - p.c * w.value().abs().powf(p.p_crit);
        worst = worst.max((r / 2.0).powi(4) * res.abs());

        let outer = r * (1.0 + frac);
        let x = J5::var(outer);
        let mut w = x.powf(4.0 - nf) * state.lambda + profile_jet(&q0, outer) + 1.0;
        if let Some(b) = &bg {
            w = w + profile_jet(b, outer);
        }
        let res = bilaplacian_from_jet(&w, outer, nf) - p.c * w.value().abs().powf(p.p_crit);
        worst = worst.max(r.powi(4) * res.abs());
    }
    Ok(worst)
}

/// Everything reported by a full matching run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluingReport {
    pub n: u32,
    pub eps: f64,
    pub schedule: GluingSchedule,
    pub constants: ConstantsSolution,
    pub coordinates: CoordinateSolution,
    pub high_modes: HighModeSolution,
    pub mismatch_before: [f64; 4],
    pub mismatch_after: [f64; 4],
    pub pde_residual: f64,
    pub passes: usize,
}

/// Solves constants, coordinates and high modes in turn until a full pass
/// leaves the mismatch unchanged.
pub fn solve_gluing(state: &mut GluingState) -> Result<GluingReport> {
    let mismatch_before = cauchy_mismatch(state)?;
    let mut last = None;
    let mut passes = 0;
    let mut out = None;
    for pass in 1..=5 {
        passes = pass;
        let constants = solve_constants(state)?;
        let coordinates = solve_coordinates(state)?;
        let high_modes = solve_high_modes(state)?;
        let mis = cauchy_mismatch(state)?;
        let done = last == Some(mis);
        last = Some(mis);
        out = Some((constants, coordinates, high_modes, mis));
        if done {
            break;
        }
    }
    let (constants, coordinates, high_modes, mismatch_after) = out.expect("at least one pass");
    Ok(GluingReport {
        n: state.n(),
        eps: state.solution.eps,
        schedule: state.schedule,
        constants,
        coordinates,
        high_modes,
        mismatch_before,
        mismatch_after,
        pde_residual: pde_residual_diagnostic(state)?,
        passes,
    })
}
