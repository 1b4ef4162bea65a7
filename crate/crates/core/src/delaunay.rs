//! Periodic Delaunay-type orbits: shooting, periodic evaluation and the
//! quantitative checks on a converged orbit.

use serde::{Deserialize, Serialize};

use crate::error::{domain, QflowError, Result};
use crate::ode::{rk4_step, DEFAULT_CEILING};
use crate::params::{hamiltonian, DimensionParams, OdeState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    pub step: f64,
    pub tol: f64,
    pub ceiling: f64,
    pub margin: f64,
    pub horizon: f64,
    pub max_iter: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { step: 1e-3, tol: 1e-12, ceiling: DEFAULT_CEILING, margin: 1e-3, horizon: 200.0, max_iter: 200 }
    }
}

/// One period of a Delaunay orbit sampled at a uniform step.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaunaySolution {
    pub params: DimensionParams,
    pub eps: f64,
    pub q: f64,
    pub period: f64,
    pub step: f64,
    pub samples: Vec<OdeState>,
    pub energy: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// The serializable part of a solution; samples are rebuilt from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelaunayRecord {
    pub n: u32,
    pub eps: f64,
    pub q: f64,
    pub period: f64,
    pub energy: f64,
    pub alpha: f64,
    pub beta: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trial {
    Above,
    Below,
    Bounded,
}

pub fn alpha_beta(params: &DimensionParams, eps: f64, q: f64) -> (f64, f64) {
    let n = params.nf();
    let alpha = (n * n * eps / 4.0 - q) / (2.0 * (n - 2.0));
    let beta = (q - (n - 4.0) * (n - 4.0) * eps / 4.0) / (2.0 * (n - 2.0));
    (alpha, beta)
}

/// Open intervals that α_ε and β_ε must lie in.
pub fn alpha_beta_bounds(params: &DimensionParams, eps: f64) -> ((f64, f64), (f64, f64)) {
    let n = params.nf();
    let a = (n * eps / (2.0 * (n - 2.0)), n * eps / 4.0);
    let b = (-(n - 4.0) * eps / 4.0, -(n - 4.0) * (n + 2.0) * eps.powf(params.p_crit) / (8.0 * n));
    (a, b)
}

pub fn q_bound(params: &DimensionParams, eps: f64) -> f64 {
    let n = params.nf();
    n * (n - 4.0) * eps / 4.0
}

/// Classifies one trial value of v''(0) by where the trajectory goes.
pub fn classify(params: &DimensionParams, eps: f64, q: f64, opts: &ShootOptions) -> Trial {
    let mut s = OdeState::new(0.0, eps, 0.0, q, 0.0);
    let floor = eps * (1.0 - opts.tol.max(1e-14));
    let steps = (opts.horizon / opts.step).ceil() as usize;
    let mut seen_max = false;
    for _ in 0..steps {
        let next = rk4_step(params, &s, opts.step);
        if !next.is_finite() || next.v > opts.ceiling {
            return Trial::Above;
        }
        if next.v < 0.0 || (!seen_max && next.v < floor) {
            return Trial::Below;
        }
        if s.v1 > 0.0 && next.v1 <= 0.0 {
            seen_max = true;
        }
        s = next;
    }
    Trial::Bounded
}

fn bisect(
    params: &DimensionParams,
    eps: f64,
    mut lo: f64,
    mut hi: f64,
    opts: &ShootOptions,
) -> Result<f64> {
    for _ in 0..opts.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= opts.tol * q_bound(params, eps) * 1e-3 {
            return Ok(mid);
        }
        match classify(params, eps, mid, opts) {
            Trial::Above => hi = mid,
            Trial::Below => lo = mid,
            Trial::Bounded => return Ok(mid),
        }
    }
    Err(QflowError::Convergence(format!("bisection on q did not converge for eps = {eps}")))
}

/// Finds the bounded orbit with minimum `eps` by bisection on q = v''(0).
pub fn shoot_delaunay(params: &DimensionParams, eps: f64, opts: &ShootOptions) -> Result<DelaunaySolution> {
    if !(eps > 0.0) || eps > params.v_cyl - opts.margin {
        return domain(format!("eps must lie in (0, v_cyl - margin) = (0, {})", params.v_cyl - opts.margin));
    }
    if !(opts.step > 0.0) || !(opts.tol > 0.0) {
        return domain("step and tol must be positive");
    }
    let qm = q_bound(params, eps);
    let edge = qm * (1.0 - 1e-9);
    let coarse = ShootOptions { step: (opts.step * 10.0).min(0.02), ..*opts };
    if classify(params, eps, -edge, &coarse) != Trial::Below || classify(params, eps, edge, &coarse) != Trial::Above {
        return Err(QflowError::ShootingBracket(format!("eps = {eps}: ends of (-{qm}, {qm}) do not separate")));
    }
    let qc = bisect(params, eps, -edge, edge, &coarse)?;

    let mut width = 1e-6 * qm;
    let (lo, hi) = loop {
        let lo = (qc - width).max(-edge);
        let hi = (qc + width).min(edge);
        if classify(params, eps, lo, opts) == Trial::Below && classify(params, eps, hi, opts) == Trial::Above {
            break (lo, hi);
        }
        if lo <= -edge && hi >= edge {
            return Err(QflowError::ShootingBracket(format!("eps = {eps}: fine bracket failed")));
        }
        width *= 16.0;
    };
    let q = bisect(params, eps, lo, hi, opts)?;
    DelaunaySolution::from_shot(params, eps, q, opts.step)
}

impl DelaunaySolution {
    /// Rebuilds the sampled orbit for a known shooting value. Deterministic in its inputs.
    pub fn from_shot(params: &DimensionParams, eps: f64, q: f64, step: f64) -> Result<Self> {
        let t_half = first_maximum_time(params, eps, q, step)?;
        let m = (t_half / step).ceil().max(1.0) as usize;
        let h = t_half / m as f64;
        let mut half = Vec::with_capacity(m + 1);
        let mut s = OdeState::new(0.0, eps, 0.0, q, 0.0);
        half.push(s);
        for i in 1..=m {
            s = rk4_step(params, &s, h);
            s.t = h * i as f64;
            half.push(s);
        }
        // the maximum is a symmetry point of the orbit
        half[m].t = t_half;
        half[m].v1 = 0.0;
        half[m].v3 = 0.0;
        let period = 2.0 * t_half;
        let mut samples = half.clone();
        for k in (0..m).rev() {
            let a = half[k];
            samples.push(OdeState::new(period - a.t, a.v, -a.v1, a.v2, -a.v3));
        }
        samples[2 * m].t = period;
        let (alpha, beta) = alpha_beta(params, eps, q);
        let energy = hamiltonian(params, &OdeState::new(0.0, eps, 0.0, q, 0.0));
        Ok(Self { params: *params, eps, q, period, step: h, samples, energy, alpha, beta })
    }

    pub fn from_record(params: &DimensionParams, rec: &DelaunayRecord, step: f64) -> Result<Self> {
        Self::from_shot(params, rec.eps, rec.q, step)
    }

    pub fn record(&self, step: f64) -> DelaunayRecord {
        DelaunayRecord {
            n: self.params.n,
            eps: self.eps,
            q: self.q,
            period: self.period,
            energy: self.energy,
            alpha: self.alpha,
            beta: self.beta,
            step,
        }
    }

    /// Samples covering [0, T/2].
    pub fn half_samples(&self) -> &[OdeState] {
        &self.samples[..=self.samples.len() / 2]
    }

    pub fn max_v(&self) -> f64 {
        self.samples.iter().map(|s| s.v).fold(f64::MIN, f64::max)
    }

    pub fn min_v(&self) -> f64 {
        self.samples.iter().map(|s| s.v).fold(f64::MAX, f64::min)
    }

    /// Largest |H(sample) − H_ε| / |H_ε| over the period.
    pub fn hamiltonian_drift(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (hamiltonian(&self.params, s) - self.energy).abs())
            .fold(0.0, f64::max)
            / self.energy.abs()
    }
}

/// Integrates until the first maximum and refines its time inside the last step.
fn first_maximum_time(params: &DimensionParams, eps: f64, q: f64, step: f64) -> Result<f64> {
    let mut s = OdeState::new(0.0, eps, 0.0, q, 0.0);
    let limit = (1000.0 / step) as usize;
    for _ in 0..limit {
        let next = rk4_step(params, &s, step);
        if !next.is_finite() || next.v > DEFAULT_CEILING || next.v < 0.0 {
            return Err(QflowError::Convergence(format!("orbit escaped before its maximum (q = {q})")));
        }
        if s.v1 > 0.0 && next.v1 <= 0.0 {
            // v1 after a partial step is monotone here; bisect on the step length
            let (mut a, mut b) = (0.0, step);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if rk4_step(params, &s, mid).v1 > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            return Ok(s.t + 0.5 * (a + b));
        }
        s = next;
    }
    Err(QflowError::PeriodNotFound)
}

fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, x: f64) -> f64 {
    let x2 = x * x;
    let x3 = x2 * x;
    (2.0 * x3 - 3.0 * x2 + 1.0) * y0 + (x3 - 2.0 * x2 + x) * h * d0 + (-2.0 * x3 + 3.0 * x2) * y1 + (x3 - x2) * h * d1
}

/// Root of the cubic Hermite interpolant of v1 (slope v2) on one sample interval.
fn crossing_time(a: &OdeState, b: &OdeState) -> f64 {
    let h = b.t - a.t;
    let g = |x: f64| hermite(a.v1, a.v2, b.v1, b.v2, h, x);
    let (mut lo, mut hi) = (0.0, 1.0);
    let glo = g(lo);
    if glo == 0.0 {
        return a.t;
    }
    if g(hi) == 0.0 {
        return b.t;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    a.t + 0.5 * (lo + hi) * h
}

/// Times of the first interior maximum and the following minimum.
pub fn extrema_times(traj: &[OdeState]) -> Result<(f64, f64)> {
    let mut t_max = None;
    for w in traj.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        match t_max {
            None => {
                if a.v1 > 0.0 && b.v1 <= 0.0 && (a.v2 < 0.0 || b.v2 < 0.0) {
                    t_max = Some(crossing_time(a, b));
                }
            }
            Some(tm) => {
                if a.v1 < 0.0 && b.v1 >= 0.0 && (a.v2 > 0.0 || b.v2 > 0.0) {
                    return Ok((tm, crossing_time(a, b)));
                }
            }
        }
    }
    Err(QflowError::PeriodNotFound)
}

/// Time from the start of the trajectory (a minimum) to the next minimum.
pub fn period(traj: &[OdeState]) -> Result<f64> {
    let (_, t_min) = extrema_times(traj)?;
    Ok(t_min - traj[0].t)
}

/// State at any t, using periodicity and the reflection symmetry at the maximum.
pub fn evaluate(sol: &DelaunaySolution, t: f64) -> OdeState {
    let big_t = sol.period;
    let mut tm = t.rem_euclid(big_t);
    if tm >= big_t {
        tm = 0.0;
    }
    let (s, sign) = if tm > big_t / 2.0 { (big_t - tm, -1.0) } else { (tm, 1.0) };
    let half = sol.half_samples();
    let m = half.len() - 1;
    let h = sol.step;
    let k = ((s / h).floor() as usize).min(m - 1);
    let (a, b) = (&half[k], &half[k + 1]);
    let hk = b.t - a.t;
    let x = ((s - a.t) / hk).clamp(0.0, 1.0);
    let p = &sol.params;
    let a4 = p.a * a.v2 + p.f_signed(a.v);
    let b4 = p.a * b.v2 + p.f_signed(b.v);
    OdeState::new(
        t,
        hermite(a.v, a.v1, b.v, b.v1, hk, x),
        sign * hermite(a.v1, a.v2, b.v1, b.v2, hk, x),
        hermite(a.v2, a.v3, b.v2, b.v3, hk, x),
        sign * hermite(a.v3, a4, b.v3, b4, hk, x),
    )
}

/// v and its first four derivatives at t (the fourth from the ODE).
pub fn evaluate_derivs(sol: &DelaunaySolution, t: f64) -> [f64; 5] {
    let s = evaluate(sol, t);
    [s.v, s.v1, s.v2, s.v3, sol.params.a * s.v2 + sol.params.f_signed(s.v)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prop2Report {
    pub eps: f64,
    pub t_max: f64,
    /// Normalized sup-remainders for derivative orders 0..=4.
    pub remainders: [f64; 5],
}

/// Remainders of v^{(k)} against the α/β hyperbolic model, normalized by ε^p e^{(n+4)t/2}.
pub fn check_prop2(sol: &DelaunaySolution, t_max: f64) -> Prop2Report {
    let p = &sol.params;
    let n = p.nf();
    let k1 = (n - 4.0) / 2.0;
    let k2 = n / 2.0;
    let count = (t_max / sol.step).ceil().max(1.0) as usize;
    let mut rem = [0.0_f64; 5];
    for i in 0..=count {
        let t = t_max * i as f64 / count as f64;
        let d = evaluate_derivs(sol, t);
        let norm = sol.eps.powf(p.p_crit) * ((n + 4.0) * t / 2.0).exp();
        for (k, r) in rem.iter_mut().enumerate() {
            let (c1, c2) = if k % 2 == 0 { ((k1 * t).cosh(), (k2 * t).cosh()) } else { ((k1 * t).sinh(), (k2 * t).sinh()) };
            let model = sol.alpha * k1.powi(k as i32) * c1 + sol.beta * k2.powi(k as i32) * c2;
            *r = r.max((d[k] - model).abs() / norm);
        }
    }
    Prop2Report { eps: sol.eps, t_max, remainders: rem }
}

/// Admissible open interval for ω.
pub fn omega_interval(params: &DimensionParams, eps: f64) -> (f64, f64) {
    let n = params.nf();
    let lo = params.b - n * (n + 4.0) * (n * n - 4.0) * eps.powf(8.0 / (n - 4.0)) / 16.0;
    (lo, params.a * params.a / 4.0)
}

pub fn default_omega(params: &DimensionParams, eps: f64) -> f64 {
    let (lo, hi) = omega_interval(params, eps);
    0.5 * (lo + hi)
}

/// Roots λ ≤ μ of x² − A x + ω = 0.
pub fn omega_roots(params: &DimensionParams, omega: f64) -> (f64, f64) {
    let d = (params.a * params.a - 4.0 * omega).max(0.0).sqrt();
    (params.a / 2.0 - d / 2.0, params.a / 2.0 + d / 2.0)
}

fn check_omega(params: &DimensionParams, eps: f64, omega: f64) -> Result<()> {
    let (lo, hi) = omega_interval(params, eps);
    if !(omega > lo && omega < hi) {
        return domain(format!("omega = {omega} outside ({lo}, {hi})"));
    }
    Ok(())
}

/// sign(v3 − γ v1) = −sign(v1) wherever |v1| clears the dead-band.
pub fn sign_property(sol: &DelaunaySolution, gamma: f64, omega: f64) -> Result<bool> {
    check_omega(&sol.params, sol.eps, omega)?;
    let (lam, mu) = omega_roots(&sol.params, omega);
    if gamma < lam || gamma > mu {
        return domain(format!("gamma = {gamma} outside [{lam}, {mu}]"));
    }
    Ok(sign_property_on(&sol.samples, gamma))
}

pub(crate) fn sign_property_on(samples: &[OdeState], gamma: f64) -> bool {
    let vmax = samples.iter().map(|s| s.v1.abs()).fold(0.0, f64::max);
    let band = 1e-9 * vmax;
    samples
        .iter()
        .filter(|s| s.v1.abs() > band)
        .all(|s| (s.v3 - gamma * s.v1).signum() == -s.v1.signum() && s.v3 - gamma * s.v1 != 0.0)
}

/// (A/2 − λ)v1² + v2²/2 < (B/2)v² at every sample.
pub fn energy_inequality_check(sol: &DelaunaySolution, omega: f64) -> Result<bool> {
    check_omega(&sol.params, sol.eps, omega)?;
    Ok(energy_inequality_on(&sol.params, &sol.samples, omega))
}

pub(crate) fn energy_inequality_on(params: &DimensionParams, samples: &[OdeState], omega: f64) -> bool {
    let (lam, _) = omega_roots(params, omega);
    samples
        .iter()
        .all(|s| (params.a / 2.0 - lam) * s.v1 * s.v1 + s.v2 * s.v2 / 2.0 < params.b / 2.0 * s.v * s.v)
}

/// Largest ratio v / (ε cosh((n−4)t/2)) over [0, T/2].
pub fn cosh_bound_ratio(sol: &DelaunaySolution) -> f64 {
    let k = (sol.params.nf() - 4.0) / 2.0;
    sol.half_samples().iter().map(|s| s.v / (sol.eps * (k * s.t).cosh())).fold(0.0, f64::max)
}

/// sup over |t| ≤ window of |v(t + T/2) − cosh^{(4−n)/2}(t)|.
pub fn sphere_deviation(sol: &DelaunaySolution, window: f64) -> f64 {
    let kappa = (4.0 - sol.params.nf()) / 2.0;
    let count = (2.0 * window / sol.step).ceil() as usize;
    (0..=count)
        .map(|i| {
            let t = -window + 2.0 * window * i as f64 / count as f64;
            (evaluate(sol, t + sol.period / 2.0).v - t.cosh().powf(kappa)).abs()
        })
        .fold(0.0, f64::max)
}

/// Smallest c with |v1| ≤ c v and |v2| ≤ c v along the orbit.
pub fn derivative_bound_constant(sol: &DelaunaySolution) -> f64 {
    sol.samples.iter().map(|s| (s.v1.abs().max(s.v2.abs())) / s.v).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::integrate;
    use crate::params::make_params;

    fn solve(n: u32, eps: f64) -> DelaunaySolution {
        let p = make_params(n).unwrap();
        shoot_delaunay(&p, eps, &ShootOptions::default()).unwrap()
    }

    #[test]
    fn alpha_beta_identities() {
        let p = make_params(5).unwrap();
        let (a, b) = alpha_beta(&p, 0.2, 0.0);
        assert_eq!(a, 25.0 * 0.2 / 24.0);
        assert_eq!(b, -0.2 / 24.0);
        for &(e, q) in &[(0.2, 0.05), (0.1, -0.01), (0.3, 0.07)] {
            let (a, b) = alpha_beta(&p, e, q);
            assert!((a + b - e).abs() <= 1e-16);
        }
    }

    #[test]
    fn rejects_bad_eps() {
        let p = make_params(5).unwrap();
        let o = ShootOptions::default();
        assert!(matches!(shoot_delaunay(&p, 0.0, &o), Err(QflowError::Domain(_))));
        assert!(matches!(shoot_delaunay(&p, p.v_cyl, &o), Err(QflowError::Domain(_))));
    }

    #[test]
    fn symmetry_built_in() {
        let sol = solve(6, 0.3);
        let s0 = &sol.samples[0];
        assert_eq!((s0.v, s0.v1, s0.v3), (0.3, 0.0, 0.0));
        assert!((sol.min_v() - 0.3).abs() < 1e-12);
        assert!(sol.max_v() < 1.0);
        let (tm, tmin) = extrema_times(&sol.samples).unwrap();
        assert!((tm - sol.period / 2.0).abs() < 1e-12);
        assert!((tmin - sol.period).abs() < 1e-12);
        for i in 1..20 {
            let s = 0.13 * i as f64;
            let a = evaluate(&sol, sol.period / 2.0 + s);
            let b = evaluate(&sol, sol.period / 2.0 - s);
            assert!((a.v - b.v).abs() < 1e-13);
        }
        let e0 = evaluate(&sol, 0.0);
        let et = evaluate(&sol, sol.period);
        assert_eq!((e0.v, e0.v1, e0.v2, e0.v3), (et.v, et.v1, et.v2, et.v3));
        assert_eq!(e0.v, 0.3);
    }

    #[test]
    fn period_of_a_directly_integrated_orbit() {
        // A short orbit is stable enough to integrate over a whole period.
        let sol = solve(6, 0.3);
        let p = sol.params;
        let tr = integrate(&p, OdeState::new(0.0, sol.eps, 0.0, sol.q, 0.0), sol.period * 1.2, 1e-3).unwrap();
        let (tm, tmin) = extrema_times(&tr).unwrap();
        let big_t = period(&tr).unwrap();
        assert!((big_t - sol.period).abs() < 1e-6, "{big_t} vs {}", sol.period);
        assert!((2.0 * tm - tmin).abs() < 1e-6);
        let at_min = tr.iter().min_by(|a, b| (a.t - tmin).abs().total_cmp(&(b.t - tmin).abs())).unwrap();
        assert!((at_min.v - sol.eps).abs() < 1e-6);
    }

    #[test]
    fn constant_orbit_has_no_period() {
        let p = make_params(5).unwrap();
        let tr = integrate(&p, OdeState::new(0.0, p.v_cyl, 0.0, 0.0, 0.0), 10.0, 1e-2).unwrap();
        assert_eq!(period(&tr), Err(QflowError::PeriodNotFound));
    }

    #[test]
    fn sign_property_and_energy_inequality() {
        let sol = solve(6, 0.1);
        let p = sol.params;
        let w = default_omega(&p, sol.eps);
        let (lam, mu) = omega_roots(&p, w);
        for g in [lam, p.a / 2.0, mu] {
            assert!(sign_property(&sol, g, w).unwrap());
        }
        assert!(sign_property(&sol, mu + 1.0, w).is_err());
        assert!(energy_inequality_check(&sol, w).unwrap());
        assert!(energy_inequality_check(&sol, p.a * p.a).is_err());
        let flat = vec![OdeState::new(0.0, p.v_cyl, 0.0, 0.0, 0.0); 10];
        assert!(sign_property_on(&flat, p.a / 2.0));
        assert!(energy_inequality_on(&p, &flat, w));
    }

    #[test]
    fn prop2_exact_at_origin() {
        let sol = solve(6, 0.2);
        let r = check_prop2(&sol, 0.0);
        assert!(r.remainders[0] < 1e-12);
        assert_eq!(r.remainders[1], 0.0);
        assert!(r.remainders[2] < 1e-12);
        // order 4 at t = 0 is C ε^p / ε^p
        assert!((r.remainders[4] - sol.params.c).abs() < 1e-9);
    }
}
