//! Discrete weighted sup norms on dyadic annuli.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Norm definition: derivative order `k`, weight exponent `mu`, outer radius `r`.
///
/// The annuli are [σ, 2σ] with σ = r/2, r/4, ... down to `finest`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    pub k: usize,
    pub mu: f64,
    pub r: f64,
    pub finest: f64,
}

/// Samples on one annulus: `derivs[j]` holds |∇^j u| at the sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusSamples {
    pub sigma: f64,
    pub derivs: Vec<Vec<f64>>,
}

impl WeightedNormSpec {
    pub fn new(k: usize, mu: f64, r: f64, finest: f64) -> Result<Self> {
        if k > 4 {
            return domain("derivative order must be at most 4");
        }
        if !(r > 0.0) || !(finest > 0.0) || finest > r / 2.0 {
            return domain("need r > 0 and 0 < finest ≤ r/2");
        }
        Ok(Self { k, mu, r, finest })
    }

    pub fn sigmas(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut s = self.r / 2.0;
        while s >= self.finest * (1.0 - 1e-12) {
            out.push(s);
            s /= 2.0;
        }
        out
    }

    /// Samples a radial function on every annulus. `f(ρ)` returns |∇^j u|(ρ) for j = 0..=4.
    pub fn sample_radial(&self, per_annulus: usize, f: impl Fn(f64) -> [f64; 5]) -> Vec<AnnulusSamples> {
        let m = per_annulus.max(2);
        self.sigmas()
            .into_iter()
            .map(|sigma| {
                let mut derivs = vec![Vec::with_capacity(m); self.k + 1];
                for i in 0..m {
                    let rho = sigma * (1.0 + i as f64 / (m - 1) as f64);
                    let d = f(rho);
                    for (j, col) in derivs.iter_mut().enumerate() {
                        col.push(d[j].abs());
                    }
                }
                AnnulusSamples { sigma, derivs }
            })
            .collect()
    }
}

pub fn weighted_sup_norm(samples: &[AnnulusSamples], spec: &WeightedNormSpec) -> Result<f64> {
    if samples.is_empty() {
        return domain("empty annulus grid");
    }
    let mut best: f64 = 0.0;
    for a in samples {
        if a.derivs.is_empty() || a.derivs.iter().any(|d| d.is_empty()) {
            return domain("annulus without samples");
        }
        let mut total = 0.0;
        for (j, vals) in a.derivs.iter().enumerate().take(spec.k + 1) {
            let m = vals.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
            total += a.sigma.powi(j as i32) * m;
        }
        best = best.max(a.sigma.powf(-spec.mu) * total);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(mu: f64) -> WeightedNormSpec {
        WeightedNormSpec::new(0, mu, 1.0, 1e-4).unwrap()
    }

    #[test]
    fn pure_power_has_unit_norm() {
        // With μ ≤ 0 the annulus maximum of |x|^μ sits at the inner radius σ.
        for mu in [-2.0, -0.5, 0.0] {
            let s = spec(mu);
            let v = weighted_sup_norm(&s.sample_radial(33, |r| [r.powf(mu), 0.0, 0.0, 0.0, 0.0]), &s).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{mu}: {v}");
        }
        // For μ > 0 it sits at 2σ, so the norm is 2^μ.
        let s = spec(1.5);
        let v = weighted_sup_norm(&s.sample_radial(33, |r| [r.powf(1.5), 0.0, 0.0, 0.0, 0.0]), &s).unwrap();
        assert!((v - 2f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_and_empty() {
        let s = spec(1.0);
        assert_eq!(weighted_sup_norm(&s.sample_radial(9, |_| [0.0; 5]), &s).unwrap(), 0.0);
        assert!(weighted_sup_norm(&[], &s).is_err());
    }

    #[test]
    fn growing_weight_peaks_outside() {
        let mu = -1.0;
        let s = spec(mu);
        let samples = s.sample_radial(17, |r| [r.powf(mu + 1.0), 0.0, 0.0, 0.0, 0.0]);
        let per: Vec<f64> = samples
            .iter()
            .map(|a| weighted_sup_norm(std::slice::from_ref(a), &s).unwrap())
            .collect();
        let total = weighted_sup_norm(&samples, &s).unwrap();
        assert_eq!(total, per[0]);
        assert!(per.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn derivative_orders_accumulate() {
        let s = WeightedNormSpec::new(2, 0.0, 1.0, 0.25).unwrap();
        let samples = s.sample_radial(5, |_| [1.0, 1.0, 1.0, 7.0, 7.0]);
        // σ = 1/2: 1 + 1/2 + 1/4; higher orders beyond k are ignored.
        assert_eq!(weighted_sup_norm(&samples, &s).unwrap(), 1.75);
    }

    proptest! {
        #[test]
        fn homogeneous_and_subadditive(c in -5.0..5.0f64, p in -3.0..3.0f64, q in -3.0..3.0f64, mu in -2.0..2.0f64) {
            let s = spec(mu);
            let f = |r: f64| r.powf(p) * (1.0 + 0.3 * (7.0 * r).sin());
            let g = |r: f64| r.powf(q) * (2.0 + (3.0 * r).cos());
            let nf = weighted_sup_norm(&s.sample_radial(9, |r| [f(r), 0.0, 0.0, 0.0, 0.0]), &s).unwrap();
            let ng = weighted_sup_norm(&s.sample_radial(9, |r| [g(r), 0.0, 0.0, 0.0, 0.0]), &s).unwrap();
            let ncf = weighted_sup_norm(&s.sample_radial(9, |r| [c * f(r), 0.0, 0.0, 0.0, 0.0]), &s).unwrap();
            let nsum = weighted_sup_norm(&s.sample_radial(9, |r| [f(r) + g(r), 0.0, 0.0, 0.0, 0.0]), &s).unwrap();
            prop_assert!((ncf - c.abs() * nf).abs() <= 1e-9 * (1.0 + ncf));
            prop_assert!(nsum <= (nf + ng) * (1.0 + 1e-12));
        }
    }
}
