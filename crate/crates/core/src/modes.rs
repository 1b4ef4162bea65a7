//! Spherical-harmonic mode algebra for Δ² with Navier data.
//!
//! Modes are handled per degree `l`; the radial part of `ρ^e Y_l` obeys
//! Δ(ρ^e Y_l) = laplacian_factor(e, l, n) ρ^{e−2} Y_l, so every operator here is
//! closed-form algebra on power terms.
//!
//! Boundary convention at radius r: the trace datum is `c0 = w(r)` and the
//! Laplacian datum is `c2` with `Δw(r) = r^{−2} c2`. Profiles are stored in the
//! scaled variable ρ/r, which makes their scaled traces independent of r.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{domain, QflowError, Result};

pub const CONVENTION: &str = "w(r) = c0, Δw(r) = r^-2 c2";

pub fn eigenvalue(l: u32, n: u32) -> f64 {
    let (l, n) = (l as f64, n as f64);
    l * (l + n - 2.0)
}

fn binomial(top: u64, k: u64) -> Option<u64> {
    let k = k.min(top.saturating_sub(k)) as u128;
    let top = top as u128;
    let mut acc = 1u128;
    for i in 0..k {
        acc = acc.checked_mul(top - i)? / (i + 1);
    }
    u64::try_from(acc).ok()
}

/// Dimension of the degree-l spherical harmonics on S^{n−1}, saturating at `u64::MAX`.
pub fn multiplicity(l: u32, n: u32) -> u64 {
    let (l, n) = (l as u64, n as u64);
    let all = binomial(l + n - 1, n - 1);
    let lower = if l < 2 { Some(0) } else { binomial(l + n - 3, n - 1) };
    match (all, lower) {
        (Some(a), Some(b)) => a - b,
        _ => u64::MAX,
    }
}

/// Eigendata of one degree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeIndex {
    pub l: u32,
    pub lambda: f64,
    pub multiplicity: u64,
}

impl ModeIndex {
    pub fn new(l: u32, n: u32) -> Self {
        Self { l, lambda: eigenvalue(l, n), multiplicity: multiplicity(l, n) }
    }
}

/// A single eigenfunction: degree plus position inside the degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Mode {
    pub l: u32,
    pub pos: u32,
}

impl Mode {
    pub fn new(l: u32, pos: u32) -> Self {
        Self { l, pos }
    }

    pub fn is_low(&self) -> bool {
        self.l < 2
    }
}

/// Navier boundary data (trace, Laplacian trace) on the sphere of radius `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub n: u32,
    pub r: f64,
    pub coeffs: BTreeMap<Mode, (f64, f64)>,
}

impl BoundaryData {
    pub fn new(n: u32, r: f64) -> Result<Self> {
        if n < 5 {
            return domain("n must be ≥ 5");
        }
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("radius must be positive, got {r}"));
        }
        Ok(Self { n, r, coeffs: BTreeMap::new() })
    }

    /// Sets the pair for `mode`; zero pairs are dropped so the support stays exact.
    pub fn set(&mut self, mode: Mode, c0: f64, c2: f64) -> Result<()> {
        if mode.pos as u64 >= multiplicity(mode.l, self.n) {
            return domain(format!("position {} out of range for degree {}", mode.pos, mode.l));
        }
        if c0 == 0.0 && c2 == 0.0 {
            self.coeffs.remove(&mode);
        } else {
            self.coeffs.insert(mode, (c0, c2));
        }
        Ok(())
    }

    pub fn with(mut self, mode: Mode, c0: f64, c2: f64) -> Result<Self> {
        self.set(mode, c0, c2)?;
        Ok(self)
    }

    pub fn get(&self, mode: Mode) -> (f64, f64) {
        self.coeffs.get(&mode).copied().unwrap_or((0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn filtered(&self, keep: impl Fn(&Mode) -> bool) -> Self {
        let coeffs = self.coeffs.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (*m, *c)).collect();
        Self { n: self.n, r: self.r, coeffs }
    }

    /// Combines two data sets on the same sphere.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.r != other.r {
            return domain("boundary data live on different spheres");
        }
        let mut out = self.clone();
        for (m, (a, b)) in &other.coeffs {
            let (c0, c2) = out.get(*m);
            out.set(*m, c0 + a, c2 + b)?;
        }
        Ok(out)
    }

    pub fn scale(&self, k: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(m, (a, b))| (*m, (k * a, k * b)))
            .filter(|(_, (a, b))| *a != 0.0 || *b != 0.0)
            .collect();
        Self { n: self.n, r: self.r, coeffs }
    }
}

/// Degrees 0 and 1.
pub fn project_low(data: &BoundaryData) -> BoundaryData {
    data.filtered(Mode::is_low)
}

/// Degrees ≥ 2.
pub fn project_high(data: &BoundaryData) -> BoundaryData {
    data.filtered(|m| !m.is_low())
}

pub fn laplacian_factor(m: f64, l: u32, n: u32) -> f64 {
    let nf = n as f64;
    m * (m + nf - 2.0) - eigenvalue(l, n)
}

/// Homogeneous exponents of Δ² on degree l: {l, l+2, 2−n−l, 4−n−l}.
pub fn basis_exponents(l: u32, n: u32) -> [f64; 4] {
    let (l, n) = (l as f64, n as f64);
    [l, l + 2.0, 2.0 - n - l, 4.0 - n - l]
}

/// `coef · ρ^exp` in absolute ρ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub exp: f64,
    pub coef: f64,
}

/// Radial part of a degree-l solution:
/// `Σ coeffs[k] (ρ/scale)^{e_k} + particular`, with `e_k` from [`basis_exponents`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub n: u32,
    pub l: u32,
    pub scale: f64,
    pub coeffs: [f64; 4],
    pub particular: Option<PowerTerm>,
}

/// (w, r∂w, r²Δw, r³∂Δw) at ρ = r.
pub type ScaledTraces = [f64; 4];

impl RadialProfile {
    pub fn zero(n: u32, l: u32, scale: f64) -> Self {
        Self { n, l, scale, coeffs: [0.0; 4], particular: None }
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let ex = basis_exponents(self.l, self.n);
        // (exponent, coefficient, reference radius)
        (0..4)
            .map(move |k| (ex[k], self.coeffs[k], self.scale))
            .chain(self.particular.map(|p| (p.exp, p.coef, 1.0)))
            .filter(|t| t.1 != 0.0)
    }

    fn sum(&self, rho: f64, f: impl Fn(f64) -> (f64, f64)) -> f64 {
        // f(e) = (factor, power shift)
        self.terms()
            .map(|(e, c, s)| {
                let (k, shift) = f(e);
                c * k * (rho / s).powf(e) * rho.powf(-shift)
            })
            .sum()
    }

    pub fn value(&self, rho: f64) -> f64 {
        self.sum(rho, |_| (1.0, 0.0))
    }

    /// Radial derivatives d^j/dρ^j for j = 0..4.
    pub fn derivs(&self, rho: f64) -> [f64; 5] {
        std::array::from_fn(|j| {
            self.sum(rho, |e| ((0..j).map(|i| e - i as f64).product(), j as f64))
        })
    }

    /// Radial part of Δ(w Y_l).
    pub fn laplacian(&self, rho: f64) -> f64 {
        let (l, n) = (self.l, self.n);
        self.sum(rho, |e| (laplacian_factor(e, l, n), 2.0))
    }

    /// Radial part of ∂_ρ Δ(w Y_l).
    pub fn dr_laplacian(&self, rho: f64) -> f64 {
        let (l, n) = (self.l, self.n);
        self.sum(rho, |e| (laplacian_factor(e, l, n) * (e - 2.0), 3.0))
    }

    /// Radial part of Δ²(w Y_l).
    pub fn bilaplacian(&self, rho: f64) -> f64 {
        let (l, n) = (self.l, self.n);
        self.sum(rho, |e| (laplacian_factor(e, l, n) * laplacian_factor(e - 2.0, l, n), 4.0))
    }

    /// Traces at ρ = scale, computed from the scaled coefficients without touching
    /// the scale itself. The particular term is not scale-free and is excluded.
    pub fn scaled_traces(&self) -> ScaledTraces {
        let ex = basis_exponents(self.l, self.n);
        let mut out = [0.0; 4];
        for (e, c) in ex.iter().zip(self.coeffs) {
            let lf = laplacian_factor(*e, self.l, self.n);
            out[0] += c;
            out[1] += c * e;
            out[2] += c * lf;
            out[3] += c * lf * (e - 2.0);
        }
        out
    }

    /// (w, ρ∂w, ρ²Δw, ρ³∂Δw) at an arbitrary radius, particular term included.
    pub fn traces_at(&self, rho: f64) -> ScaledTraces {
        let d = self.derivs(rho);
        [d[0], rho * d[1], rho * rho * self.laplacian(rho), rho.powi(3) * self.dr_laplacian(rho)]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.l != other.l || self.scale != other.scale {
            return domain("profiles do not share degree and scale");
        }
        let particular = match (self.particular, other.particular) {
            (None, p) | (p, None) => p,
            (Some(a), Some(b)) if a.exp == b.exp => Some(PowerTerm { exp: a.exp, coef: a.coef + b.coef }),
            _ => return domain("cannot merge particular terms with different exponents"),
        };
        Ok(Self {
            n: self.n,
            l: self.l,
            scale: self.scale,
            coeffs: std::array::from_fn(|k| self.coeffs[k] + other.coeffs[k]),
            particular,
        })
    }
}

/// Which side of the sphere a Poisson solution lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Interior,
    Exterior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonSolution {
    pub side: Side,
    pub n: u32,
    pub r: f64,
    pub convention: String,
    pub profiles: BTreeMap<Mode, RadialProfile>,
}

impl PoissonSolution {
    /// Radial profile of `mode`, zero when the mode is absent.
    pub fn profile(&self, mode: Mode) -> RadialProfile {
        self.profiles.get(&mode).cloned().unwrap_or_else(|| RadialProfile::zero(self.n, mode.l, self.r))
    }
}

/// Scaled coefficients of the interior solution of one degree.
pub fn interior_coeffs(l: u32, n: u32, c0: f64, c2: f64) -> Result<[f64; 4]> {
    if l < 2 {
        if c0 != 0.0 {
            return domain(format!("degree {l} accepts only a Laplacian datum in the interior"));
        }
        // pure ρ² Y_l profile: ρ² for l = 0 (index 1 has exponent 2), ρ³ Y_1 for l = 1
        return Ok([0.0, c2 / laplacian_factor(l as f64 + 2.0, l, n), 0.0, 0.0]);
    }
    let b = c2 / laplacian_factor(l as f64 + 2.0, l, n);
    Ok([c0 - b, b, 0.0, 0.0])
}

/// Scaled coefficients of the decaying exterior solution of one degree.
pub fn exterior_coeffs(l: u32, n: u32, c0: f64, c2: f64) -> Result<[f64; 4]> {
    let lf = exterior_laplacian_factor(l, n);
    if lf == 0.0 {
        return Err(QflowError::Resonance(4.0 - n as f64 - l as f64));
    }
    let b = c2 / lf;
    Ok([0.0, 0.0, c0 - b, b])
}

/// D_l = laplacian_factor(4−n−l, l, n) = 8 − 2n − 4l.
pub fn exterior_laplacian_factor(l: u32, n: u32) -> f64 {
    laplacian_factor(4.0 - n as f64 - l as f64, l, n)
}

/// Interior biharmonic extension of Navier data. Degrees 0 and 1 carry only the
/// Laplacian datum and use the ρ²-type profile; `mu` is the growth weight and must be ≤ 2.
pub fn interior_poisson(data: &BoundaryData, mu: f64) -> Result<PoissonSolution> {
    if mu > 2.0 {
        return domain(format!("interior profiles grow like |x|^2; weight {mu} > 2 is not admissible"));
    }
    let mut profiles = BTreeMap::new();
    for (m, (c0, c2)) in &data.coeffs {
        let coeffs = interior_coeffs(m.l, data.n, *c0, *c2)?;
        profiles.insert(*m, RadialProfile { n: data.n, l: m.l, scale: data.r, coeffs, particular: None });
    }
    Ok(PoissonSolution { side: Side::Interior, n: data.n, r: data.r, convention: CONVENTION.into(), profiles })
}

/// Decaying biharmonic extension of Navier data to |x| ≥ r.
pub fn exterior_poisson(data: &BoundaryData) -> Result<PoissonSolution> {
    let mut profiles = BTreeMap::new();
    for (m, (c0, c2)) in &data.coeffs {
        let coeffs = exterior_coeffs(m.l, data.n, *c0, *c2)?;
        profiles.insert(*m, RadialProfile { n: data.n, l: m.l, scale: data.r, coeffs, particular: None });
    }
    Ok(PoissonSolution { side: Side::Exterior, n: data.n, r: data.r, convention: CONVENTION.into(), profiles })
}

/// Boundary conditions used by [`annulus_navier_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnnulusBc {
    /// w = Δw = 0 at ρ = s only, homogeneous part built from the growing exponents.
    OuterOnly,
    /// w = Δw = 0 at both ρ = r and ρ = s.
    Both,
}

/// Solves Δ²(w Y_l) = c ρ^m Y_l on r < ρ < s with Navier conditions.
///
/// The homogeneous part uses (ρ/s)^e for the growing exponents and (ρ/r)^e for the
/// decaying ones, so the 4×4 system stays O(1); the result is re-expressed on scale r.
pub fn annulus_navier_solve(
    l: u32,
    n: u32,
    r: f64,
    s: f64,
    c: f64,
    m: f64,
    bc: AnnulusBc,
) -> Result<RadialProfile> {
    if n < 5 {
        return domain("n must be ≥ 5");
    }
    if !(r > 0.0 && 2.0 * r < s && s.is_finite()) {
        return domain(format!("need 0 < 2r < s, got r = {r}, s = {s}"));
    }
    if c == 0.0 {
        return Ok(RadialProfile::zero(n, l, r));
    }
    let den = laplacian_factor(m + 4.0, l, n) * laplacian_factor(m + 2.0, l, n);
    if den == 0.0 {
        return Err(QflowError::Resonance(m + 4.0));
    }
    let part = PowerTerm { exp: m + 4.0, coef: c / den };
    let ex = basis_exponents(l, n);
    let refs = [s, s, r, r];
    let active: Vec<usize> = match bc {
        AnnulusBc::OuterOnly => vec![0, 1],
        AnnulusBc::Both => vec![0, 1, 2, 3],
    };
    let radii: Vec<f64> = match bc {
        AnnulusBc::OuterOnly => vec![s],
        AnnulusBc::Both => vec![s, r],
    };
    let size = active.len();
    let mut a = DMatrix::<f64>::zeros(size, size);
    let mut rhs = DVector::<f64>::zeros(size);
    for (i, &rho) in radii.iter().enumerate() {
        // rows: w(ρ) and ρ²Δw(ρ)
        for (j, &k) in active.iter().enumerate() {
            let base = (rho / refs[k]).powf(ex[k]);
            a[(2 * i, j)] = base;
            a[(2 * i + 1, j)] = laplacian_factor(ex[k], l, n) * base;
        }
        let pv = part.coef * rho.powf(part.exp);
        rhs[2 * i] = -pv;
        rhs[2 * i + 1] = -laplacian_factor(part.exp, l, n) * pv;
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| QflowError::Solve(format!("singular Navier system for degree {l}")))?;
    let mut coeffs = [0.0; 4];
    for (j, &k) in active.iter().enumerate() {
        // re-express (ρ/refs)^e as (ρ/r)^e
        coeffs[k] = sol[j] * (r / refs[k]).powf(ex[k]);
    }
    Ok(RadialProfile { n, l, scale: r, coeffs, particular: Some(part) })
}

/// Indicial roots of the zero-potential cylinder operator on degree l.
pub fn indicial_roots(l: u32, n: u32) -> (f64, f64) {
    let lam = eigenvalue(l, n);
    let nf = n as f64;
    let inner = 4.0 * ((nf - 2.0).powi(2) + 4.0 * lam).sqrt();
    let base = nf * (nf - 4.0) + 8.0 + 4.0 * lam;
    ((base + inner).sqrt() / 2.0, (base - inner).sqrt() / 2.0)
}

pub type Mat2 = [[f64; 2]; 2];

/// Matrix of (c0, c2) ↦ (r∂_ρ(P−Q), r³∂_ρΔ(P−Q)) at ρ = r for degree l ≥ 2.
///
/// Built from the scaled traces of the unit-datum profiles, so `r` never enters
/// the arithmetic; it is validated only.
pub fn n2n_matrix(l: u32, r: f64, n: u32) -> Result<Mat2> {
    if l < 2 {
        return domain(format!("Navier-to-Neumann map is defined on degrees ≥ 2, got {l}"));
    }
    if !(r > 0.0 && r.is_finite()) {
        return domain(format!("radius must be positive, got {r}"));
    }
    let col = |c0: f64, c2: f64| -> Result<[f64; 2]> {
        let p = RadialProfile { n, l, scale: r, coeffs: interior_coeffs(l, n, c0, c2)?, particular: None };
        let q = RadialProfile { n, l, scale: r, coeffs: exterior_coeffs(l, n, c0, c2)?, particular: None };
        let (tp, tq) = (p.scaled_traces(), q.scaled_traces());
        Ok([tp[1] - tq[1], tp[3] - tq[3]])
    };
    let c1 = col(1.0, 0.0)?;
    let c2 = col(0.0, 1.0)?;
    Ok([[c1[0], c2[0]], [c1[1], c2[1]]])
}

fn mode_matrices(data: &BoundaryData) -> Result<BTreeMap<u32, Mat2>> {
    let mut out = BTreeMap::new();
    for m in data.coeffs.keys() {
        if m.is_low() {
            return domain(format!("Navier-to-Neumann data must be supported on degrees ≥ 2, found {}", m.l));
        }
        if let std::collections::btree_map::Entry::Vacant(e) = out.entry(m.l) {
            e.insert(n2n_matrix(m.l, data.r, data.n)?);
        }
    }
    Ok(out)
}

/// Modewise Navier-to-Neumann map.
pub fn n2n_apply(data: &BoundaryData) -> Result<BoundaryData> {
    let mats = mode_matrices(data)?;
    let mut out = BoundaryData::new(data.n, data.r)?;
    for (m, (a, b)) in &data.coeffs {
        let k = &mats[&m.l];
        out.set(*m, k[0][0] * a + k[0][1] * b, k[1][0] * a + k[1][1] * b)?;
    }
    Ok(out)
}

/// Inverse of [`n2n_apply`] by per-mode 2×2 solves.
pub fn n2n_inverse(data: &BoundaryData) -> Result<BoundaryData> {
    let mats = mode_matrices(data)?;
    let mut out = BoundaryData::new(data.n, data.r)?;
    for (m, (a, b)) in &data.coeffs {
        let k = &mats[&m.l];
        let det = k[0][0] * k[1][1] - k[0][1] * k[1][0];
        if det == 0.0 {
            return Err(QflowError::Solve(format!("singular Navier-to-Neumann block at degree {}", m.l)));
        }
        out.set(*m, (k[1][1] * a - k[0][1] * b) / det, (k[0][0] * b - k[1][0] * a) / det)?;
    }
    Ok(out)
}

/// One row of the mode table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub l: u32,
    pub lambda: f64,
    pub multiplicity: u64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    #[serde(rename = "D_l")]
    pub d_l: f64,
    pub n2n: Option<Mat2>,
}

pub fn mode_table(n: u32, l_max: u32) -> Result<Vec<ModeRow>> {
    if n < 5 {
        return domain("n must be ≥ 5");
    }
    (0..=l_max)
        .map(|l| {
            let (mu_plus, mu_minus) = indicial_roots(l, n);
            Ok(ModeRow {
                l,
                lambda: eigenvalue(l, n),
                multiplicity: multiplicity(l, n),
                mu_plus,
                mu_minus,
                d_l: exterior_laplacian_factor(l, n),
                n2n: if l >= 2 { Some(n2n_matrix(l, 1.0, n)?) } else { None },
            })
        })
        .collect()
}
