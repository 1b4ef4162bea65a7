//! Dimension-dependent constants, the ODE nonlinearity and the Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Every constant derived from the dimension `n`.
///
/// `a`, `b`, `c` have denominators 2 and 16, so they are stored exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionParams {
    pub n: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub v_cyl: f64,
    pub h_cyl: f64,
    pub p_crit: f64,
    pub kelvin_exp: f64,
}

/// State of the first-order system (v, v', v'', v''') at cylinder time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct OdeState {
    pub t: f64,
    pub v: f64,
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl OdeState {
    pub fn new(t: f64, v: f64, v1: f64, v2: f64, v3: f64) -> Self {
        Self { t, v, v1, v2, v3 }
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.v.is_finite()
            && self.v1.is_finite()
            && self.v2.is_finite()
            && self.v3.is_finite()
    }
}

pub fn make_params(n: u32) -> Result<DimensionParams> {
    if n < 5 {
        return domain("n must be ≥ 5");
    }
    let nf = n as f64;
    let a = (nf * (nf - 4.0) + 8.0) / 2.0;
    let b = nf * nf * (nf - 4.0) * (nf - 4.0) / 16.0;
    let c = nf * (nf - 4.0) * (nf * nf - 4.0) / 16.0;
    let ratio = nf * (nf - 4.0) / (nf * nf - 4.0);
    let v_cyl = ratio.powf((nf - 4.0) / 8.0);
    let h_cyl = -((nf - 4.0) * (nf * nf - 4.0) / 8.0) * ratio.powf(nf / 4.0);
    Ok(DimensionParams {
        n,
        a,
        b,
        c,
        v_cyl,
        h_cyl,
        p_crit: (nf + 4.0) / (nf - 4.0),
        kelvin_exp: 4.0 - nf,
    })
}

impl DimensionParams {
    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    /// Coefficient of u^p in the flat equation Δ²u = c·u^p (equal to C).
    pub fn flat_coeff(&self) -> f64 {
        self.c
    }

    /// Odd extension C|v|^{p-1}v − Bv, used inside integrator stages.
    pub fn f_signed(&self, v: f64) -> f64 {
        self.c * v.abs().powf(self.p_crit - 1.0) * v - self.b * v
    }
}

pub fn nonlinearity_f(params: &DimensionParams, v: f64) -> Result<f64> {
    if v < 0.0 || v.is_nan() {
        return domain(format!("nonlinearity needs v ≥ 0, got {v}"));
    }
    Ok(params.c * v.powf(params.p_crit) - params.b * v)
}

pub fn hamiltonian(params: &DimensionParams, s: &OdeState) -> f64 {
    let n = params.nf();
    -s.v3 * s.v1 + s.v2 * s.v2 / 2.0 + (n * n - 4.0 * n + 8.0) / 4.0 * s.v1 * s.v1
        - n * n * (n - 4.0) * (n - 4.0) / 32.0 * s.v * s.v
        + (n - 4.0) * (n - 4.0) * (n * n - 4.0) / 32.0 * s.v.abs().powf(2.0 * n / (n - 4.0))
}

/// The fourth derivative A·v'' + f(v).
pub fn ode_rhs(params: &DimensionParams, s: &OdeState) -> Result<f64> {
    Ok(params.a * s.v2 + nonlinearity_f(params, s.v)?)
}

/// cosh^{(4-n)/2}(t) and its first four derivatives, from the closed form.
pub fn spherical_state(params: &DimensionParams, t: f64) -> (OdeState, f64) {
    let k = (4.0 - params.nf()) / 2.0;
    let j = crate::jet::Jet::<5>::var(t).cosh().powf(k);
    (OdeState::new(t, j.deriv(0), j.deriv(1), j.deriv(2), j.deriv(3)), j.deriv(4))
}
