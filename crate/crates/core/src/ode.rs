//! Fixed-step classical RK4 for the Delaunay ODE v'''' = A v'' + f(v).

use crate::error::{QflowError, Result};
use crate::params::{DimensionParams, OdeState};

pub const DEFAULT_CEILING: f64 = 2.0;

fn deriv(p: &DimensionParams, s: &[f64; 4]) -> [f64; 4] {
    [s[1], s[2], s[3], p.a * s[2] + p.f_signed(s[0])]
}

/// One RK4 step of length `h` (negative `h` integrates backward).
pub fn rk4_step(p: &DimensionParams, s: &OdeState, h: f64) -> OdeState {
    let y = [s.v, s.v1, s.v2, s.v3];
    let k1 = deriv(p, &y);
    let y2: [f64; 4] = std::array::from_fn(|i| y[i] + 0.5 * h * k1[i]);
    let k2 = deriv(p, &y2);
    let y3: [f64; 4] = std::array::from_fn(|i| y[i] + 0.5 * h * k2[i]);
    let k3 = deriv(p, &y3);
    let y4: [f64; 4] = std::array::from_fn(|i| y[i] + h * k3[i]);
    let k4 = deriv(p, &y4);
    let out: [f64; 4] = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    OdeState::new(s.t + h, out[0], out[1], out[2], out[3])
}

fn check_escape(s: &OdeState, ceiling: f64) -> Result<()> {
    if !s.is_finite() || s.v.abs() > ceiling {
        return Err(QflowError::EscapedAbove { t: s.t });
    }
    if s.v < 0.0 {
        return Err(QflowError::EscapedBelow { t: s.t });
    }
    Ok(())
}

/// Integrates from `ic.t` to `t_end`, returning every step including both endpoints.
pub fn integrate(p: &DimensionParams, ic: OdeState, t_end: f64, step: f64) -> Result<Vec<OdeState>> {
    integrate_with_ceiling(p, ic, t_end, step, DEFAULT_CEILING)
}

pub fn integrate_with_ceiling(
    p: &DimensionParams,
    ic: OdeState,
    t_end: f64,
    step: f64,
    ceiling: f64,
) -> Result<Vec<OdeState>> {
    if !(step > 0.0) || !ic.is_finite() || !t_end.is_finite() {
        return Err(QflowError::Domain("need step > 0 and finite data".into()));
    }
    check_escape(&ic, ceiling)?;
    let span = t_end - ic.t;
    let steps = (span.abs() / step).ceil().max(0.0) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(ic);
    if steps == 0 {
        return Ok(out);
    }
    let h = span / steps as f64;
    let mut s = ic;
    for i in 1..=steps {
        s = rk4_step(p, &s, h);
        s.t = ic.t + h * i as f64;
        check_escape(&s, ceiling)?;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{make_params, spherical_state};

    #[test]
    fn equilibrium_stays_put() {
        let p = make_params(6).unwrap();
        let tr = integrate(&p, OdeState::new(0.0, p.v_cyl, 0.0, 0.0, 0.0), 5.0, 1e-2).unwrap();
        assert_eq!(tr.len(), 501);
        for s in &tr {
            assert!((s.v - p.v_cyl).abs() < 1e-14);
        }
    }

    fn sphere_error(n: u32, h: f64) -> f64 {
        let p = make_params(n).unwrap();
        let (ic, _) = spherical_state(&p, -3.0);
        let tr = integrate(&p, ic, 3.0, h).unwrap();
        assert!((tr.last().unwrap().t - 3.0).abs() < 1e-12);
        tr.iter().map(|s| (s.v - spherical_state(&p, s.t).0.v).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn spherical_solution_is_reproduced() {
        assert!(sphere_error(5, 1e-3) < 1e-8);
        // larger n amplifies truncation error along the unstable direction; check the order instead
        for n in [6, 8] {
            let ratio = sphere_error(n, 2e-3) / sphere_error(n, 1e-3);
            assert!(ratio > 12.0, "n={n}: ratio {ratio}");
        }
    }

    #[test]
    fn immediate_escape() {
        let p = make_params(5).unwrap();
        let err = integrate(&p, OdeState::new(0.0, 4.0, 0.0, 0.0, 0.0), 1.0, 1e-3).unwrap_err();
        assert_eq!(err, QflowError::EscapedAbove { t: 0.0 });
        let err = integrate(&p, OdeState::new(0.0, 0.1, -1.0, 0.0, 0.0), 1.0, 1e-3).unwrap_err();
        assert!(matches!(err, QflowError::EscapedBelow { .. }));
    }

    #[test]
    fn backward_integration() {
        let p = make_params(5).unwrap();
        let (ic, _) = spherical_state(&p, 1.0);
        let tr = integrate(&p, ic, -1.0, 1e-3).unwrap();
        let end = tr.last().unwrap();
        assert!((end.v - spherical_state(&p, -1.0).0.v).abs() < 1e-10);
    }
}
