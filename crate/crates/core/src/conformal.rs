//! Euclidean conformal factors built from Delaunay orbits, the Kelvin
//! transform, and the radial bi-Laplacian.

use serde::{Deserialize, Serialize};

use crate::delaunay::{evaluate_derivs, DelaunaySolution};
use crate::error::{domain, Result};
use crate::jet::Jet;
use crate::params::DimensionParams;

pub type J5 = Jet<5>;

/// u_{ε,R,a}: a Delaunay orbit placed at scale `r_param` and translated at infinity by `a`.
#[derive(Debug, Clone)]
pub struct ConformalFactor<'a> {
    pub solution: &'a DelaunaySolution,
    pub r_param: f64,
    pub a: Vec<f64>,
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn u_from_v(sol: &DelaunaySolution, r_param: f64, x: &[f64]) -> Result<f64> {
    let rho = norm(x);
    if rho == 0.0 {
        return domain("u_from_v is singular at x = 0");
    }
    let kappa = (4.0 - sol.params.nf()) / 2.0;
    let t = -rho.ln() + r_param.ln();
    Ok(rho.powf(kappa) * evaluate_derivs(sol, t)[0])
}

/// Taylor jet in ρ of u_{ε,R}(ρ) = ρ^{(4−n)/2} v(−log ρ + log R).
pub fn radial_jet(sol: &DelaunaySolution, r_param: f64, rho: f64) -> J5 {
    let kappa = (4.0 - sol.params.nf()) / 2.0;
    let r = J5::var(rho);
    let t = -r.ln() + r_param.ln();
    let v = t.compose(&evaluate_derivs(sol, t.value()));
    r.powf(kappa) * v
}

impl<'a> ConformalFactor<'a> {
    pub fn new(solution: &'a DelaunaySolution, r_param: f64, a: Vec<f64>) -> Result<Self> {
        if !(r_param > 0.0) {
            return domain("R must be positive");
        }
        if a.len() != solution.params.n as usize {
            return domain("translation vector must have n components");
        }
        Ok(Self { solution, r_param, a })
    }

    pub fn radial(solution: &'a DelaunaySolution, r_param: f64) -> Result<Self> {
        Self::new(solution, r_param, vec![0.0; solution.params.n as usize])
    }

    pub fn params(&self) -> &DimensionParams {
        &self.solution.params
    }
}

pub fn u_family(f: &ConformalFactor, x: &[f64]) -> Result<f64> {
    let rho = norm(x);
    if rho == 0.0 {
        return domain("u_family is singular at x = 0");
    }
    if x.len() != f.a.len() {
        return domain("dimension mismatch");
    }
    if f.a.iter().all(|&c| c == 0.0) {
        return u_from_v(f.solution, f.r_param, x);
    }
    let shifted: Vec<f64> = x.iter().zip(&f.a).map(|(xi, ai)| xi - ai * rho * rho).collect();
    let d = norm(&shifted);
    if d == 0.0 {
        return domain("u_family is singular at x = a/|a|²");
    }
    let kappa = (4.0 - f.params().nf()) / 2.0;
    let t = -rho.ln() + (d / rho).ln() + f.r_param.ln();
    Ok(d.powf(kappa) * evaluate_derivs(f.solution, t)[0])
}

/// |x|^{4−n} u(x/|x|²) in dimension n = x.len().
pub fn kelvin(u: impl Fn(&[f64]) -> Result<f64>, x: &[f64]) -> Result<f64> {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    if r2 == 0.0 {
        return domain("Kelvin transform is singular at x = 0");
    }
    let y: Vec<f64> = x.iter().map(|c| c / r2).collect();
    Ok(r2.sqrt().powf(4.0 - x.len() as f64) * u(&y)?)
}

/// Radial Laplacian from a jet: u'' + (n−1)u'/r.
pub fn laplacian_from_jet(j: &J5, r: f64, n: f64) -> f64 {
    j.deriv(2) + (n - 1.0) / r * j.deriv(1)
}

/// d/dr of the radial Laplacian.
pub fn dr_laplacian_from_jet(j: &J5, r: f64, n: f64) -> f64 {
    j.deriv(3) + (n - 1.0) / r * j.deriv(2) - (n - 1.0) / (r * r) * j.deriv(1)
}

/// Radial bi-Laplacian from a jet.
pub fn bilaplacian_from_jet(j: &J5, r: f64, n: f64) -> f64 {
    let m = (n - 1.0) * (n - 3.0);
    j.deriv(4) + 2.0 * (n - 1.0) / r * j.deriv(3) + m / (r * r) * j.deriv(2) - m / (r * r * r) * j.deriv(1)
}

/// The bubble ((1+ρ²)/2)^{(4−n)/2} as a jet.
pub fn bubble_jet(n: f64, rho: f64) -> J5 {
    let r = J5::var(rho);
    ((r * r + 1.0) * 0.5).powf((4.0 - n) / 2.0)
}

/// Δ²u − C u^p evaluated exactly from a jet.
pub fn flat_residual_jet(params: &DimensionParams, j: &J5, r: f64) -> Result<f64> {
    if !(j.value() > 0.0) {
        return domain("flat residual needs u > 0");
    }
    Ok(bilaplacian_from_jet(j, r, params.nf()) - params.c * j.value().powf(params.p_crit))
}

/// Uniform grid in log r: r_i = exp(log_r0 + i·h).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub log_r0: f64,
    pub h: f64,
    pub len: usize,
}

impl LogGrid {
    pub fn spanning(r_min: f64, r_max: f64, len: usize) -> Self {
        let log_r0 = r_min.ln();
        Self { log_r0, h: (r_max.ln() - log_r0) / (len - 1) as f64, len }
    }

    pub fn r(&self, i: usize) -> f64 {
        (self.log_r0 + self.h * i as f64).exp()
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.r(i)).collect()
    }
}

/// Fourth-order finite-difference Δ² on a log-radius grid, at interior points 3..len−3.
///
/// Uses Δ² = r^{−4} D(D+n−2)(D−2)(D+n−4) with D = d/d(log r).
pub fn radial_bilaplacian(u: &[f64], grid: &LogGrid, n: f64) -> Result<Vec<(f64, f64)>> {
    if grid.len < 7 || u.len() != grid.len {
        return domain("radial_bilaplacian needs at least 7 samples matching the grid");
    }
    let h = grid.h;
    let c3 = 2.0 * n - 8.0;
    let c2 = n * n - 10.0 * n + 20.0;
    let c1 = -2.0 * (n - 2.0) * (n - 4.0);
    let mut out = Vec::with_capacity(grid.len - 6);
    for i in 3..grid.len - 3 {
        let f = |k: isize| u[(i as isize + k) as usize];
        let d1 = (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * h);
        let d2 = (-f(-2) + 16.0 * f(-1) - 30.0 * f(0) + 16.0 * f(1) - f(2)) / (12.0 * h * h);
        let d3 = (f(-3) - 8.0 * f(-2) + 13.0 * f(-1) - 13.0 * f(1) + 8.0 * f(2) - f(3)) / (8.0 * h * h * h);
        let d4 = (-f(-3) + 12.0 * f(-2) - 39.0 * f(-1) + 56.0 * f(0) - 39.0 * f(1) + 12.0 * f(2) - f(3))
            / (6.0 * h * h * h * h);
        let r = grid.r(i);
        out.push((r, (d4 + c3 * d3 + c2 * d2 + c1 * d1) / r.powi(4)));
    }
    Ok(out)
}

/// Δ²u − C u^p on a log grid (finite differences).
pub fn flat_residual(u: &[f64], grid: &LogGrid, params: &DimensionParams) -> Result<Vec<(f64, f64)>> {
    if u.iter().any(|&x| !(x > 0.0)) {
        return domain("flat residual needs u > 0 on the grid");
    }
    let bl = radial_bilaplacian(u, grid, params.nf())?;
    Ok(bl
        .into_iter()
        .enumerate()
        .map(|(k, (r, b))| (r, b - params.c * u[k + 3].powf(params.p_crit)))
        .collect())
}

/// −(β/2) R^{−n/2} |x|².
pub fn upsilon(f: &ConformalFactor, x: &[f64]) -> f64 {
    let n = f.params().nf();
    let r2: f64 = x.iter().map(|c| c * c).sum();
    -(f.solution.beta / 2.0) * f.r_param.powf(-n / 2.0) * r2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub r_param: f64,
    pub sup_normalized: f64,
    pub argmax_radius: f64,
}

/// The α/β model of u_{ε,R} at radius ρ, optionally without the |x|² term.
pub fn expansion_model(f: &ConformalFactor, rho: f64, with_quadratic: bool) -> f64 {
    let n = f.params().nf();
    let r = f.r_param;
    let (a, b) = (f.solution.alpha, f.solution.beta);
    let quad = if with_quadratic { r.powf(-n / 2.0) * rho * rho } else { 0.0 };
    a / 2.0 * (r.powf((4.0 - n) / 2.0) + r.powf((n - 4.0) / 2.0) * rho.powf(4.0 - n))
        + b / 2.0 * (quad + r.powf(n / 2.0) * rho.powf(2.0 - n))
}

fn expansion_sup(f: &ConformalFactor, radii: &[f64], with_upsilon: bool) -> Result<ExpansionReport> {
    if f.a.iter().any(|&c| c != 0.0) {
        return domain("expansion check needs a = 0");
    }
    let p = f.params();
    let n = p.nf();
    let mut best = (0.0, 0.0);
    for &rho in radii {
        if !(rho > 0.0) {
            return domain("radii must be positive");
        }
        let x = radial_point(p.n, rho);
        let mut u = u_from_v(f.solution, f.r_param, &x)?;
        if with_upsilon {
            u += upsilon(f, &x);
        }
        let model = expansion_model(f, rho, !with_upsilon);
        let scale = f.r_param.powf((n + 4.0) / 2.0) * f.solution.eps.powf(p.p_crit) * rho.powf(-n);
        let r = (u - model).abs() / scale;
        if r > best.0 {
            best = (r, rho);
        }
    }
    Ok(ExpansionReport { r_param: f.r_param, sup_normalized: best.0, argmax_radius: best.1 })
}

/// sup |u_{ε,R} − model| / (R^{(n+4)/2} ε^p |x|^{−n}) over the radii.
pub fn expansion_check_u(f: &ConformalFactor, radii: &[f64]) -> Result<ExpansionReport> {
    expansion_sup(f, radii, false)
}

/// Same remainder for u_{ε,R} + Υ against the model with the |x|² term removed.
pub fn expansion_check_u_plus_upsilon(f: &ConformalFactor, radii: &[f64]) -> Result<ExpansionReport> {
    expansion_sup(f, radii, true)
}

pub fn radial_point(n: u32, rho: f64) -> Vec<f64> {
    let mut x = vec![0.0; n as usize];
    x[0] = rho;
    x
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationReport {
    /// u_{ε,R,a}(x) minus its first-order expansion (signed).
    pub remainder: f64,
    /// Remainder / (|a|² |x|^{(8−n)/2}).
    pub normalized_near: f64,
    /// Remainder / (|a|² ε R^{(4−n)/2} |x|²), only when R ≤ |x|.
    pub normalized_far: Option<f64>,
}

/// Compares u_{ε,R,a}(x) with its first-order expansion in a.
pub fn translation_expansion_check(f: &ConformalFactor, x: &[f64], r0: f64) -> Result<TranslationReport> {
    let rho = norm(x);
    let an = norm(&f.a);
    if !(an * rho < r0) {
        return domain(format!("|a||x| = {} must be below r0 = {r0}", an * rho));
    }
    let n = f.params().nf();
    let exact = u_family(f, x)?;
    let j = radial_jet(f.solution, f.r_param, rho);
    let linear = ((n - 4.0) * j.value() + rho * j.deriv(1)) * dot(&f.a, x);
    let remainder = exact - j.value() - linear;
    if an == 0.0 {
        return Ok(TranslationReport { remainder, normalized_near: 0.0, normalized_far: (f.r_param <= rho).then_some(0.0) });
    }
    let near = remainder.abs() / (an * an * rho.powf((8.0 - n) / 2.0));
    let far = (f.r_param <= rho)
        .then(|| remainder.abs() / (an * an * f.solution.eps * f.r_param.powf((4.0 - n) / 2.0) * rho * rho));
    Ok(TranslationReport { remainder, normalized_near: near, normalized_far: far })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delaunay::{shoot_delaunay, ShootOptions};
    use crate::params::make_params;

    fn sol(n: u32, eps: f64) -> DelaunaySolution {
        shoot_delaunay(&make_params(n).unwrap(), eps, &ShootOptions::default()).unwrap()
    }

    #[test]
    fn fd_bilaplacian_of_powers() {
        for n in [5.0, 6.0, 8.0] {
            let grid = LogGrid::spanning(0.2, 2.0, 81);
            for m in [2.0, 4.0 - n, 1.5, 3.0, -0.7] {
                let u: Vec<f64> = grid.radii().iter().map(|r| r.powf(m)).collect();
                let expect = m * (m + n - 2.0) * (m - 2.0) * (m + n - 4.0);
                for (r, b) in radial_bilaplacian(&u, &grid, n).unwrap() {
                    let e = expect * r.powf(m - 4.0);
                    assert!((b - e).abs() < 1e-6 * (1.0 + m.abs() + n).powi(4) * r.powf(m - 4.0), "n={n} m={m} r={r}: {b} vs {e}");
                }
            }
        }
        let g = LogGrid::spanning(1.0, 2.0, 6);
        assert!(radial_bilaplacian(&[1.0; 6], &g, 5.0).is_err());
    }

    #[test]
    fn fd_bilaplacian_is_fourth_order() {
        let n = 5.0;
        let p = make_params(5).unwrap();
        let err = |len: usize| {
            let grid = LogGrid::spanning(0.1, 3.0, len);
            let u: Vec<f64> = grid.radii().iter().map(|&r| bubble_jet(n, r).value()).collect();
            flat_residual(&u, &grid, &p).unwrap().iter().map(|x| x.1.abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(51), err(101));
        assert!(e1 / e2 > 13.0, "{e1} {e2}");
    }

    #[test]
    fn jet_operators() {
        for n in [5.0, 7.0] {
            let r = 0.8;
            let j = J5::var(r) * J5::var(r);
            assert!((laplacian_from_jet(&j, r, n) - 2.0 * n).abs() < 1e-13);
            assert!(bilaplacian_from_jet(&j, r, n).abs() < 1e-12);
            let g = J5::var(r).powf(4.0 - n);
            assert!(bilaplacian_from_jet(&g, r, n).abs() < 1e-10);
            let m = 3.3;
            let pw = J5::var(r).powf(m);
            let expect = m * (m + n - 2.0) * (m - 2.0) * (m + n - 4.0) * r.powf(m - 4.0);
            assert!((bilaplacian_from_jet(&pw, r, n) - expect).abs() < 1e-11);
        }
    }

    #[test]
    fn exact_solutions_have_zero_residual() {
        for n in [5, 6, 8] {
            let p = make_params(n).unwrap();
            for i in 0..50 {
                let r = 0.1 + 0.06 * i as f64;
                let b = bubble_jet(p.nf(), r);
                assert!(flat_residual_jet(&p, &b, r).unwrap().abs() < 1e-10);
                let cyl = J5::var(r).powf((4.0 - p.nf()) / 2.0) * p.v_cyl;
                assert!(flat_residual_jet(&p, &cyl, r).unwrap().abs() < 1e-9 * r.powf(-p.nf()));
            }
        }
    }

    #[test]
    fn kelvin_basics() {
        let n = 5;
        let g = |y: &[f64]| Ok(norm(y).powf(4.0 - n as f64));
        for rho in [0.3, 1.0, 2.5] {
            let x = radial_point(n, rho);
            assert!((kelvin(g, &x).unwrap() - 1.0).abs() < 1e-14);
            let u = |y: &[f64]| Ok((1.0 + y[0]).exp() * (1.0 + norm(y)));
            let kk = kelvin(|y| kelvin(u, y), &x).unwrap();
            assert!((kk - u(&x).unwrap()).abs() < 1e-12 * u(&x).unwrap());
        }
        assert!(kelvin(g, &[0.0; 5]).is_err());
    }

    #[test]
    fn family_reduces_and_kelvin_swaps_scale() {
        let s = sol(5, 0.2);
        let f = ConformalFactor::radial(&s, 1.3).unwrap();
        let x = vec![0.3, -0.2, 0.1, 0.4, 0.0];
        assert_eq!(u_family(&f, &x).unwrap(), u_from_v(&s, 1.3, &x).unwrap());
        let unit = radial_point(5, 1.0);
        assert!((u_from_v(&s, 1.0, &unit).unwrap() - 0.2).abs() < 1e-15);
        let inv = ConformalFactor::radial(&s, 1.0 / 1.3).unwrap();
        for rho in [0.05, 0.3, 1.0, 4.0] {
            let x = radial_point(5, rho);
            let k = kelvin(|y| u_family(&f, y), &x).unwrap();
            let d = u_family(&inv, &x).unwrap();
            assert!((k - d).abs() < 1e-9 * d.abs(), "{rho}: {k} {d}");
        }
        let bad = ConformalFactor::new(&s, 1.0, vec![1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(u_family(&bad, &radial_point(5, 1.0)).is_err());
        assert!(u_family(&bad, &[0.0; 5]).is_err());
    }

    #[test]
    fn cylinder_profile() {
        let p = make_params(6).unwrap();
        let mut s = sol(6, 0.3);
        for st in s.samples.iter_mut() {
            *st = crate::params::OdeState::new(st.t, p.v_cyl, 0.0, 0.0, 0.0);
        }
        let x = radial_point(6, 0.37);
        let u = u_from_v(&s, 1.0, &x).unwrap();
        assert!((u - p.v_cyl * 0.37f64.powf(-1.0)).abs() < 1e-14);
    }

    #[test]
    fn expansion_anchor_and_scaling() {
        let s = sol(5, 0.2);
        let f = ConformalFactor::radial(&s, 1.0).unwrap();
        let at_one = expansion_check_u(&f, &[1.0]).unwrap();
        assert!(at_one.sup_normalized < 1e-9);
        let radii: Vec<f64> = (1..=40).map(|i| i as f64 / 40.0).collect();
        let r1 = expansion_check_u(&f, &radii).unwrap();
        let big_r = 0.37;
        let g = ConformalFactor::radial(&s, big_r).unwrap();
        let scaled: Vec<f64> = radii.iter().map(|r| r * big_r).collect();
        let r2 = expansion_check_u(&g, &scaled).unwrap();
        assert!((r1.sup_normalized - r2.sup_normalized).abs() < 1e-9 * r1.sup_normalized);
        let r3 = expansion_check_u_plus_upsilon(&f, &radii).unwrap();
        assert!((r1.sup_normalized - r3.sup_normalized).abs() < 1e-9 * r1.sup_normalized);
    }

    #[test]
    fn translation_remainder() {
        let s = sol(5, 0.2);
        let x = vec![0.5 * 0.8, 0.5 * 0.6, 0.0, 0.0, 0.0];
        let zero = ConformalFactor::new(&s, 0.1, vec![0.0; 5]).unwrap();
        let z = translation_expansion_check(&zero, &x, 0.1).unwrap();
        assert_eq!(z.remainder, 0.0);
        let dir = [0.6, -0.3, 0.2, 0.7, 0.1];
        let dn = norm(&dir);
        let rem = |scale: f64| {
            let a: Vec<f64> = dir.iter().map(|c| c * scale / dn).collect();
            let f = ConformalFactor::new(&s, 0.1, a).unwrap();
            translation_expansion_check(&f, &x, 0.1).unwrap()
        };
        let (r1, r2) = (rem(0.01).remainder, rem(0.02).remainder);
        let slope = (r2.abs() / r1.abs()).log2();
        assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
        // the a -> -a symmetrized remainder cancels the quadratic term's odd partner
        let rm = rem(-0.01).remainder;
        assert!((r1 - rm).abs() < 0.1 * r1.abs());
        let big = ConformalFactor::new(&s, 0.1, vec![0.3, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(translation_expansion_check(&big, &x, 0.1).is_err());
        assert!(rem(0.05).normalized_far.is_some());
    }
}
