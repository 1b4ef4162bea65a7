//! Independent reconstruction of v from the variation-of-parameters formula
//!
//!   v(t) = α cosh((n−4)t/2) + β cosh(nt/2)
//!        + C e^{(n−4)t/2} ∫₀ᵗ e^{(4−n)s} ∫₀ˢ e^{−2x} ∫₀ˣ e^{ny} ∫₀ʸ e^{−nz/2} v^p dz dy dx ds.
//!
//! Each layer is a cumulative trapezoid rule with the Euler–Maclaurin end
//! correction −h²/12 (g'(b) − g'(a)); the integrand derivatives are exact
//! because g_k' = c_k g_k + e^{c_k x} g_{k−1}.

use crate::delaunay::{evaluate, DelaunaySolution};
use crate::error::{domain, Result};

fn cumulative(x: &[f64], g: &[f64], dg: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    out.push(0.0);
    for i in 1..x.len() {
        let h = x[i] - x[i - 1];
        let piece = 0.5 * h * (g[i] + g[i - 1]) - h * h / 12.0 * (dg[i] - dg[i - 1]);
        out.push(out[i - 1] + piece);
    }
    out
}

/// Evaluates the representation at `t ∈ [0, T_ε]` on the solution's sample grid.
pub fn vop_reconstruct(sol: &DelaunaySolution, t: f64) -> Result<f64> {
    if !(0.0..=sol.period).contains(&t) {
        return domain(format!("t = {t} outside [0, {}]", sol.period));
    }
    let p = &sol.params;
    let n = p.nf();
    let pc = p.p_crit;

    let mut nodes: Vec<(f64, f64, f64)> = sol
        .samples
        .iter()
        .take_while(|s| s.t < t)
        .map(|s| (s.t, s.v, s.v1))
        .collect();
    let end = evaluate(sol, t);
    nodes.push((t, end.v, end.v1));
    if nodes.len() == 1 {
        return Ok(sol.alpha + sol.beta);
    }
    let x: Vec<f64> = nodes.iter().map(|a| a.0).collect();

    let e1: Vec<f64> = x.iter().map(|&z| (-n * z / 2.0).exp()).collect();
    let g1: Vec<f64> = nodes.iter().zip(&e1).map(|(a, e)| e * a.1.powf(pc)).collect();
    let d1: Vec<f64> = nodes
        .iter()
        .zip(&e1)
        .zip(&g1)
        .map(|((a, e), g)| -n / 2.0 * g + e * pc * a.1.powf(pc - 1.0) * a.2)
        .collect();
    let i1 = cumulative(&x, &g1, &d1);

    let layer = |c: f64, inner: &[f64], inner_g: &[f64]| {
        let e: Vec<f64> = x.iter().map(|&z| (c * z).exp()).collect();
        let g: Vec<f64> = e.iter().zip(inner).map(|(e, i)| e * i).collect();
        let d: Vec<f64> = g.iter().zip(&e).zip(inner_g).map(|((g, e), ig)| c * g + e * ig).collect();
        let i = cumulative(&x, &g, &d);
        (g, i)
    };
    let (g2, i2) = layer(n, &i1, &g1);
    let (g3, i3) = layer(-2.0, &i2, &g2);
    let (_, i4) = layer(4.0 - n, &i3, &g3);

    let last = *i4.last().unwrap();
    Ok(sol.alpha * ((n - 4.0) * t / 2.0).cosh()
        + sol.beta * (n * t / 2.0).cosh()
        + p.c * ((n - 4.0) * t / 2.0).exp() * last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::{shoot_delaunay, ShootOptions};
    use crate::params::make_params;

    #[test]
    fn matches_the_orbit() {
        let p = make_params(5).unwrap();
        let sol = shoot_delaunay(&p, 0.2, &ShootOptions::default()).unwrap();
        assert_eq!(vop_reconstruct(&sol, 0.0).unwrap(), sol.alpha + sol.beta);
        for frac in [0.1, 0.25, 0.4, 0.5] {
            let t = frac * sol.period;
            let v = vop_reconstruct(&sol, t).unwrap();
            let e = evaluate(&sol, t).v;
            assert!((v - e).abs() < 1e-7, "t={t}: {v} vs {e}");
        }
        assert!(vop_reconstruct(&sol, -0.1).is_err());
        assert!(vop_reconstruct(&sol, sol.period * 1.01).is_err());
    }
}
