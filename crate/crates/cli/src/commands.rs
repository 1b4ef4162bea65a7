//! One function per subcommand. Each returns the document or CSV text it emits.

use std::path::Path;
use std::sync::Arc;

use qflow_core::acceptance::{run_all, CriterionResult, PROP2_PINS, PROP2_SLACK};
use qflow_core::cylinder::{apriori_ratio, assemble, bump_forcing, solve_mode_bvp, BoundaryKind, ModeOperator, Potential};
use qflow_core::delaunay::{
    check_prop2, default_omega, energy_inequality_check, evaluate, omega_roots, shoot_delaunay, sign_property,
    DelaunayRecord, DelaunaySolution, ShootOptions,
};
use qflow_core::gluing::{make_schedule, solve_gluing, GluingReport, GluingState};
use qflow_core::modes::{mode_table, n2n_matrix, Mat2, ModeRow, CONVENTION};
use qflow_core::params::make_params;
use qflow_core::vop::vop_reconstruct;
use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{Cache, CacheKey};
use crate::config::RunConfig;
use crate::document::{decode_document, encode};
use crate::error::{usage, CliError, CliResult};

/// Text produced by a command; `failed` marks a report whose checks did not all pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub kind: &'static str,
    pub ext: &'static str,
    pub body: String,
    pub failed: bool,
}

impl Emitted {
    fn json(kind: &'static str, body: String) -> Self {
        Self { kind, ext: "json", body, failed: false }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Shoots (or loads) the solution for `eps`; the flag reports a cache hit.
pub fn solve_cached(cfg: &RunConfig, cache: Option<&Cache>, eps: f64) -> CliResult<(Arc<DelaunaySolution>, bool)> {
    let p = make_params(cfg.n)?;
    let key = CacheKey { n: cfg.n, eps, step: cfg.step, tol: cfg.tol };
    if let Some(c) = cache {
        if let Some(rec) = c.lookup(&key)? {
            return Ok((Arc::new(DelaunaySolution::from_record(&p, &rec.solution, cfg.step)?), true));
        }
    }
    let opts = ShootOptions { step: cfg.step, tol: cfg.tol, ..Default::default() };
    let sol = shoot_delaunay(&p, eps, &opts)?;
    if let Some(c) = cache {
        c.append(key, sol.record(cfg.step))?;
    }
    Ok((Arc::new(sol), false))
}

pub fn cmd_params(cfg: &RunConfig) -> CliResult<Emitted> {
    Ok(Emitted::json("params", encode("params", &make_params(cfg.n)?)?))
}

#[derive(Debug, Serialize)]
pub struct Verification {
    pub prop2_remainders: [f64; 5],
    pub prop2_pin: Option<[f64; 5]>,
    pub prop2_pass: bool,
    /// γ = λ, A/2, μ.
    pub sign_property: [bool; 3],
    pub energy_inequality: bool,
    pub vop_max_error: f64,
    pub vop_pass: bool,
    pub all_pass: bool,
}

pub fn verify_solution(sol: &DelaunaySolution) -> CliResult<Verification> {
    let rem = check_prop2(sol, sol.period / 2.0).remainders;
    let pin = PROP2_PINS.iter().find(|(n, _)| *n == sol.params.n).map(|(_, p)| *p);
    let prop2_pass = match pin {
        Some(p) => (0..5).all(|k| rem[k] <= PROP2_SLACK * p[k]),
        None => rem.iter().all(|r| r.is_finite()),
    };
    let omega = default_omega(&sol.params, sol.eps);
    let (lam, mu) = omega_roots(&sol.params, omega);
    let mut signs = [false; 3];
    for (slot, g) in signs.iter_mut().zip([lam, sol.params.a / 2.0, mu]) {
        *slot = sign_property(sol, g, omega)?;
    }
    let energy = energy_inequality_check(sol, omega)?;
    let mut vop = 0.0f64;
    for frac in [0.1, 0.25, 0.4, 0.5] {
        let t = frac * sol.period;
        vop = vop.max((vop_reconstruct(sol, t)? - evaluate(sol, t).v).abs());
    }
    let vop_pass = vop < 1e-7;
    let all_pass = prop2_pass && signs.iter().all(|&s| s) && energy && vop_pass;
    Ok(Verification {
        prop2_remainders: rem,
        prop2_pin: pin,
        prop2_pass,
        sign_property: signs,
        energy_inequality: energy,
        vop_max_error: vop,
        vop_pass,
        all_pass,
    })
}

#[derive(Serialize)]
struct DelaunayDoc {
    solution: DelaunayRecord,
    verification: Option<Verification>,
}

pub fn cmd_delaunay(cfg: &RunConfig, cache: Option<&Cache>, check: bool, trajectory: Option<&Path>) -> CliResult<Emitted> {
    let (sol, _) = solve_cached(cfg, cache, cfg.require_eps()?)?;
    if let Some(path) = trajectory {
        let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
        w.write_record(["t", "v", "v1", "v2", "v3"]).map_err(|e| io_err(path, e))?;
        for s in &sol.samples {
            w.serialize((s.t, s.v, s.v1, s.v2, s.v3)).map_err(|e| io_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    let verification = if check { Some(verify_solution(&sol)?) } else { None };
    let failed = verification.as_ref().is_some_and(|v| !v.all_pass);
    let doc = DelaunayDoc { solution: sol.record(cfg.step), verification };
    Ok(Emitted { failed, ..Emitted::json("delaunay", encode("delaunay", &doc)?) })
}

#[derive(Serialize)]
struct ModesDoc {
    n: u32,
    convention: &'static str,
    rows: Vec<ModeRow>,
}

pub fn cmd_modes(cfg: &RunConfig) -> CliResult<Emitted> {
    let rows = mode_table(cfg.n, cfg.l_max)?;
    Ok(Emitted::json("modes", encode("modes", &ModesDoc { n: cfg.n, convention: CONVENTION, rows })?))
}

#[derive(Debug, Serialize)]
pub struct N2nRow {
    pub l: u32,
    pub matrix: Mat2,
    pub det: f64,
    /// (2l + n − 2)².
    pub det_closed_form: f64,
}

#[derive(Serialize)]
struct N2nDoc {
    n: u32,
    r: f64,
    rows: Vec<N2nRow>,
}

pub fn cmd_n2n(cfg: &RunConfig, r: f64) -> CliResult<Emitted> {
    let rows = (2..=cfg.l_max)
        .map(|l| {
            let m = n2n_matrix(l, r, cfg.n)?;
            let d = 2.0 * l as f64 + cfg.n as f64 - 2.0;
            Ok(N2nRow { l, matrix: m, det: m[0][0] * m[1][1] - m[0][1] * m[1][0], det_closed_form: d * d })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Emitted::json("n2n", encode("n2n", &N2nDoc { n: cfg.n, r, rows })?))
}

/// Parameters of `modesolve`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSolveSpec {
    pub l: u32,
    pub t_end: f64,
    pub delta: f64,
    pub bc: BoundaryKind,
    pub steps: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct ModeSolveDoc {
    pub n: u32,
    pub eps: f64,
    pub l: u32,
    pub t0: f64,
    pub t_end: f64,
    pub steps: usize,
    pub bc: BoundaryKind,
    pub delta: f64,
    /// Forcing ((t−1)(3−t))⁴ on [1, 3].
    pub forcing: &'static str,
    pub ratio: f64,
    pub max_abs_w: f64,
}

pub fn mode_solve(sol: Arc<DelaunaySolution>, spec: &ModeSolveSpec) -> CliResult<(ModeSolveDoc, Vec<(f64, f64, f64)>)> {
    if !(spec.t_end > 3.0) {
        return usage(format!("--t-end must exceed 3 (the forcing lives on [1, 3]), got {}", spec.t_end));
    }
    let steps = spec.steps.unwrap_or((spec.t_end / 0.01).round() as usize);
    let op = ModeOperator::new(sol.params, Potential::Delaunay(sol.clone()), spec.l, (0.0, spec.t_end), steps, spec.bc)?;
    let sys = assemble(&op)?;
    let f = bump_forcing(&sys.grid, 1.0, 3.0);
    let ratio = apriori_ratio(&sys, &f, spec.delta)?;
    let w = solve_mode_bvp(&sys, &f)?;
    let profile = sys.grid.iter().zip(&f).zip(&w).map(|((t, f), w)| (*t, *f, *w)).collect();
    let doc = ModeSolveDoc {
        n: sol.params.n,
        eps: sol.eps,
        l: spec.l,
        t0: 0.0,
        t_end: spec.t_end,
        steps,
        bc: spec.bc,
        delta: spec.delta,
        forcing: "((t-1)(3-t))^4 on [1, 3]",
        ratio,
        max_abs_w: w.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
    };
    Ok((doc, profile))
}

pub fn cmd_modesolve(cfg: &RunConfig, cache: Option<&Cache>, spec: &ModeSolveSpec, profile: Option<&Path>) -> CliResult<Emitted> {
    let (sol, _) = solve_cached(cfg, cache, cfg.require_eps()?)?;
    let (doc, rows) = mode_solve(sol, spec)?;
    if let Some(path) = profile {
        let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
        w.write_record(["t", "f", "w"]).map_err(|e| io_err(path, e))?;
        for r in rows {
            w.serialize(r).map_err(|e| io_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    Ok(Emitted::json("modesolve", encode("modesolve", &doc)?))
}

pub fn glue(cfg: &RunConfig, sol: Arc<DelaunaySolution>) -> CliResult<GluingReport> {
    let knobs = cfg.schedule.knobs();
    let mut st = GluingState::unsolved(sol.clone(), knobs, cfg.l_max)?;
    st.schedule = make_schedule(&sol, knobs, cfg.schedule.b)?;
    Ok(solve_gluing(&mut st)?)
}

pub fn cmd_glue(cfg: &RunConfig, cache: Option<&Cache>) -> CliResult<Emitted> {
    let (sol, _) = solve_cached(cfg, cache, cfg.require_eps()?)?;
    let rep = glue(cfg, sol)?;
    Ok(Emitted::json("glue", encode("glue", &rep)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepWhat {
    Delaunay,
    Glue,
    Ratio,
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn cells(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|x| format!("{x:e}")).collect()
}

/// One CSV row per ε, computed in parallel; rows keep the order of the grid.
pub fn cmd_sweep(cfg: &RunConfig, cache: Option<&Cache>, what: SweepWhat, spec: &ModeSolveSpec) -> CliResult<Emitted> {
    let grid = match &cfg.eps_grid {
        Some(g) => g.clone(),
        None => vec![cfg.require_eps()?],
    };
    let rows: Vec<Vec<String>> = grid
        .par_iter()
        .map(|&eps| -> CliResult<Vec<String>> {
            let (sol, _) = solve_cached(cfg, cache, eps)?;
            let mut row = vec![cfg.n.to_string()];
            match what {
                SweepWhat::Delaunay => row.extend(cells(&[eps, sol.q, sol.period, sol.energy, sol.alpha, sol.beta])),
                SweepWhat::Glue => {
                    let r = glue(cfg, sol)?;
                    let m = r.mismatch_after;
                    let worst = m.iter().copied().fold(0.0, f64::max);
                    row.extend(cells(&[
                        eps,
                        r.schedule.r_eps,
                        r.constants.b,
                        r.constants.lambda,
                        r.constants.xi0,
                        r.constants.xi2,
                        r.coordinates.transversality,
                        m[0],
                        m[1],
                        m[2],
                        m[3],
                        worst,
                        r.pde_residual,
                    ]));
                }
                SweepWhat::Ratio => {
                    let (doc, _) = mode_solve(sol, spec)?;
                    row.extend(cells(&[eps, doc.t_end, doc.delta, doc.ratio]));
                    row.insert(1, doc.l.to_string());
                }
            }
            Ok(row)
        })
        .collect::<CliResult<_>>()?;
    let header: &[&str] = match what {
        SweepWhat::Delaunay => &["n", "eps", "q", "period", "energy", "alpha", "beta"],
        SweepWhat::Glue => &[
            "n",
            "eps",
            "r_eps",
            "b",
            "lambda",
            "xi0",
            "xi2",
            "transversality",
            "mismatch_w",
            "mismatch_dw",
            "mismatch_lap",
            "mismatch_dlap",
            "mismatch_max",
            "pde_residual",
        ],
        SweepWhat::Ratio => &["n", "l", "eps", "T", "delta", "ratio"],
    };
    Ok(Emitted { kind: "sweep", ext: "csv", body: csv_text(header, rows)?, failed: false })
}

#[derive(Debug, Serialize)]
pub struct InputSummary {
    pub path: String,
    pub schema: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub inputs: Vec<InputSummary>,
    pub criteria: Vec<CriterionResult>,
    pub passed: usize,
    pub failed: usize,
}

/// Checks the given documents, then runs the acceptance suite twice; the
/// second run supplies criterion 12 (identical serialized results).
pub fn cmd_verify(inputs: &[std::path::PathBuf]) -> CliResult<Emitted> {
    let mut summaries = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let doc = decode_document(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        summaries.push(InputSummary { path: path.display().to_string(), schema: doc.schema });
    }
    let first = run_all();
    let second = run_all();
    let a = serde_json::to_string(&first).map_err(|e| CliError::Numerical(e.to_string()))?;
    let b = serde_json::to_string(&second).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut criteria = first;
    criteria.push(CriterionResult {
        id: 12,
        name: "determinism".into(),
        passed: a == b,
        detail: format!("two in-process runs {}", if a == b { "serialize identically" } else { "differ" }),
    });
    let passed = criteria.iter().filter(|c| c.passed).count();
    let failed = criteria.len() - passed;
    let report = VerifyReport { inputs: summaries, criteria, passed, failed };
    Ok(Emitted { failed: failed > 0, ..Emitted::json("verify", encode("verify", &report)?) })
}
