//! The energy functional T(u) = Φ_{s,G}(u) + Φ_G(u) − ∫ F(u) dx and a
//! discrete mountain-pass solver.
//!
//! The solver maintains a discrete path z_0 = 0, …, z_K = e, repeatedly picks
//! the interior maximizer of the energy along the path, applies one
//! mass-preconditioned descent step with Armijo backtracking to it, and
//! re-equidistributes the path by arc length in ‖·‖_{W^{s,G}} to prevent
//! clustering at the ridge. It terminates when the normalized gradient norm
//! at the path maximum falls below tolerance; the maximizer is then the
//! critical-point candidate and its energy the mountain-pass level.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{apply_weak_value, residual_from_partials, weak_residual};
use crate::space::{
    hat_norm, luxemburg_norm, modular_g, modular_sg, norm_wsg, Grid, GridFunction, GridKind,
    ModularKind,
};
use crate::young::YoungFunction;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum NlFamily {
    Power { q: f64 },
    Table,
    Zero,
}

/// The reaction term f, its primitive F, the superlinearity constant θ and
/// the comparison Young function M controlling growth at infinity.
#[derive(Clone)]
pub struct Nonlinearity {
    family: NlFamily,
    f: ScalarFn,
    big_f: ScalarFn,
    theta: f64,
    m_fn: YoungFunction,
    covers_reals: bool,
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Nonlinearity({:?}, theta={})", self.family, self.theta)
    }
}

impl Nonlinearity {
    /// f(t) = |t|^{q-2} t (odd extension), F(t) = |t|^q / q, θ = q,
    /// M(t) = t^q / q.
    pub fn power(q: f64) -> Result<Self> {
        Self::power_with_theta(q, q)
    }

    pub fn power_with_theta(q: f64, theta: f64) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::Domain(format!("power reaction needs q > 1, got {q}")));
        }
        Ok(Nonlinearity {
            family: NlFamily::Power { q },
            f: Arc::new(move |t: f64| t.abs().powf(q - 2.0) * t),
            big_f: Arc::new(move |t: f64| t.abs().powf(q) / q),
            theta,
            m_fn: YoungFunction::power(q)?,
            covers_reals: true,
        })
    }

    /// f ≡ 0; useful to exercise the geometry-failure path.
    pub fn zero() -> Self {
        Nonlinearity {
            family: NlFamily::Zero,
            f: Arc::new(|_| 0.0),
            big_f: Arc::new(|_| 0.0),
            theta: f64::INFINITY,
            m_fn: YoungFunction::power(2.0).expect("quadratic"),
            covers_reals: true,
        }
    }

    /// Reaction sampled on a strictly increasing table of (t, f(t)) rows;
    /// interpolated linearly, with the exact primitive of the interpolant.
    /// The table should straddle 0; `covers_reals` records whether it spans
    /// a symmetric window.
    pub fn from_table(ts: Vec<f64>, fs: Vec<f64>, theta: f64, m_fn: YoungFunction) -> Result<Self> {
        if ts.len() != fs.len() || ts.len() < 2 {
            return Err(Error::Domain("reaction table needs matching rows".into()));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("reaction table must strictly increase".into()));
        }
        if ts[0] > 0.0 || *ts.last().unwrap() < 0.0 {
            return Err(Error::Domain("reaction table must straddle t = 0".into()));
        }
        let covers = ts[0] <= -1.0 && *ts.last().unwrap() >= 1.0;
        let interp = move |grid: &[f64], vals: &[f64], t: f64| -> f64 {
            let n = grid.len();
            if t <= grid[0] {
                return vals[0];
            }
            if t >= grid[n - 1] {
                return vals[n - 1];
            }
            let i = match grid.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                Ok(i) => return vals[i],
                Err(i) => i - 1,
            };
            let w = (t - grid[i]) / (grid[i + 1] - grid[i]);
            vals[i] * (1.0 - w) + vals[i + 1] * w
        };
        // exact cumulative primitive of the piecewise-linear interpolant,
        // anchored at F(0) = 0
        let mut cum = vec![0.0; ts.len()];
        for i in 1..ts.len() {
            cum[i] = cum[i - 1] + 0.5 * (fs[i] + fs[i - 1]) * (ts[i] - ts[i - 1]);
        }
        let zero_off = {
            let (tsr, fsr, cumr) = (&ts, &fs, &cum);
            let i = match tsr.binary_search_by(|v| v.partial_cmp(&0.0).unwrap()) {
                Ok(i) => cumr[i],
                Err(i) => {
                    let i = i - 1;
                    let w = -tsr[i] / (tsr[i + 1] - tsr[i]);
                    let f_mid = fsr[i] * (1.0 - 0.5 * w) + fsr[i + 1] * (0.5 * w);
                    cumr[i] + f_mid * (-tsr[i])
                }
            };
            i
        };
        let (ts1, fs1) = (ts.clone(), fs.clone());
        let (ts2, fs2, cum2) = (ts, fs, cum);
        Ok(Nonlinearity {
            family: NlFamily::Table,
            f: Arc::new(move |t: f64| interp(&ts1, &fs1, t)),
            big_f: Arc::new(move |t: f64| {
                let n = ts2.len();
                let raw = if t <= ts2[0] {
                    cum2[0] + fs2[0] * (t - ts2[0])
                } else if t >= ts2[n - 1] {
                    cum2[n - 1] + fs2[n - 1] * (t - ts2[n - 1])
                } else {
                    let i = match ts2.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                        Ok(i) => return cum2[i] - zero_off,
                        Err(i) => i - 1,
                    };
                    let dt = t - ts2[i];
                    let w = dt / (ts2[i + 1] - ts2[i]);
                    let f_mid = fs2[i] * (1.0 - 0.5 * w) + fs2[i + 1] * (0.5 * w);
                    cum2[i] + f_mid * dt
                };
                raw - zero_off
            }),
            theta,
            m_fn,
            covers_reals: covers,
        })
    }

    /// Parse `power:q=<x>` with an optional explicit θ (defaults to q).
    pub fn parse(spec: &str, theta: Option<f64>) -> Result<Self> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("power:") {
            let q: f64 = rest
                .strip_prefix("q=")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Config("reaction spec wants power:q=<num>".into()))?;
            return match theta {
                Some(th) => Self::power_with_theta(q, th),
                None => Self::power(q),
            };
        }
        if spec == "zero" {
            return Ok(Self::zero());
        }
        Err(Error::Config(format!("unknown reaction spec: {spec}")))
    }

    pub fn f(&self, t: f64) -> f64 {
        (self.f)(t)
    }
    pub fn big_f(&self, t: f64) -> f64 {
        (self.big_f)(t)
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn m_fn(&self) -> &YoungFunction {
        &self.m_fn
    }
    pub fn family(&self) -> &NlFamily {
        &self.family
    }
    pub fn covers_reals(&self) -> bool {
        self.covers_reals
    }
}

/// Solver knobs; the defaults are used by every benchmark run.
#[derive(Debug, Clone, Serialize)]
pub struct SolverParams {
    /// number of path segments (the path has this many + 1 points)
    pub path_points: usize,
    /// gradient tolerance, scaled by max(1, ‖e‖)
    pub tol_grad: f64,
    pub max_iter: usize,
    pub armijo_c: f64,
    pub max_halvings: usize,
    /// re-equidistribute the path every this many iterations
    pub reequi_every: usize,
    /// record an iterate snapshot every this many iterations
    pub snapshot_every: usize,
    /// bisection tolerance for reported Luxemburg norms
    pub lux_tol: f64,
    /// coarser tolerance for path arc-length norms
    pub path_norm_tol: f64,
    pub geometry_dirs: usize,
    pub rho_init: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            path_points: 16,
            tol_grad: 1e-6,
            max_iter: 50_000,
            armijo_c: 1e-4,
            max_halvings: 40,
            reequi_every: 10,
            snapshot_every: 25,
            lux_tol: 1e-10,
            path_norm_tol: 1e-3,
            geometry_dirs: 12,
            rho_init: 0.5,
        }
    }
}

/// Everything defining one problem instance.
pub struct ProblemSpec {
    pub young: YoungFunction,
    pub grid: Arc<Grid>,
    pub nl: Nonlinearity,
    pub solver: SolverParams,
    hat_norms: OnceLock<Vec<f64>>,
}

impl ProblemSpec {
    pub fn new(
        young: YoungFunction,
        grid: Arc<Grid>,
        nl: Nonlinearity,
        solver: SolverParams,
    ) -> Result<Self> {
        let idx = young.indices();
        let (n, s) = (grid.n_dim() as f64, grid.s());
        if n - s * idx.p_minus <= 0.0 {
            return Err(Error::Config(format!(
                "Sobolev window undefined: N - s p⁻ = {} - {} · {} <= 0",
                n, s, idx.p_minus
            )));
        }
        Ok(ProblemSpec {
            young,
            grid,
            nl,
            solver,
            hat_norms: OnceLock::new(),
        })
    }

    /// ‖φ_i‖_{W^{s,G}} for every nodal basis function, cached.
    pub fn hat_norms(&self) -> &[f64] {
        self.hat_norms.get_or_init(|| {
            (0..self.grid.len())
                .map(|i| hat_norm(&self.young, &self.grid, i, 1e-8).expect("hat norm"))
                .collect()
        })
    }
}

/// (Φ_{s,G}(u), Φ_G(u), ∫ F(u) dx)
pub fn energy_terms(prob: &ProblemSpec, u: &GridFunction) -> Result<(f64, f64, f64)> {
    let j = modular_sg(&prob.young, u);
    let i = modular_g(&prob.young, u);
    let mut pot = 0.0;
    for (w, v) in prob.grid.weights().iter().zip(u.values()) {
        pot += w * prob.nl.big_f(*v);
    }
    if !pot.is_finite() || !j.is_finite() || !i.is_finite() {
        return Err(Error::Evaluation("energy term not finite".into()));
    }
    Ok((j, i, pot))
}

/// T(u) = Φ_{s,G}(u) + Φ_G(u) − ∫ F(u) dx.
pub fn energy(prob: &ProblemSpec, u: &GridFunction) -> Result<f64> {
    let (j, i, f) = energy_terms(prob, u)?;
    Ok(j + i - f)
}

/// All partial derivatives ∂T/∂u_i of the discretized energy; the pairing of
/// this vector against any nodal v reproduces the Gâteaux derivative exactly.
pub fn energy_partials(prob: &ProblemSpec, u: &GridFunction) -> Result<Vec<f64>> {
    let y = &prob.young;
    let grid = &prob.grid;
    let pt = grid.pair_table();
    let uu = u.values();
    let n = uu.len();
    let k = pt.k;
    let n_pairs = pt.pi.len();
    const CHUNK: usize = 16 * 1024;
    let n_chunks = n_pairs.div_ceil(CHUNK).max(1);
    let locals: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n_pairs);
            let mut loc = vec![0.0; n];
            for p in lo..hi {
                let i = pt.pi[p] as usize;
                let j = pt.pj[p] as usize;
                let du = uu[i] - uu[j];
                if du == 0.0 {
                    continue;
                }
                let sgn = du.signum();
                let dua = du.abs();
                let off = p * k;
                let mut t = 0.0;
                for q in 0..k {
                    let a = pt.a[off + q];
                    if a != 0.0 {
                        let b = pt.b[off + q];
                        t += a * y.density_unchecked(dua * b) * b;
                    }
                }
                loc[i] += t * sgn;
                loc[j] -= t * sgn;
            }
            loc
        })
        .collect();
    let mut out = vec![0.0; n];
    for loc in &locals {
        for (o, l) in out.iter_mut().zip(loc) {
            *o += l;
        }
    }
    let w = grid.weights();
    for i in 0..n {
        let ui = uu[i];
        if pt.k_tail > 0 && ui != 0.0 {
            let off = i * pt.k_tail;
            let mut t = 0.0;
            for q in 0..pt.k_tail {
                let a = pt.tail_a[off + q];
                if a != 0.0 {
                    let b = pt.tail_b[off + q];
                    t += a * y.density_unchecked(ui.abs() * b) * b;
                }
            }
            out[i] += t * ui.signum();
        }
        let local = if ui == 0.0 {
            0.0
        } else {
            y.density_unchecked(ui.abs()) * ui.signum()
        };
        out[i] += w[i] * (local - prob.nl.f(ui));
        if !out[i].is_finite() {
            return Err(Error::Evaluation(format!("gradient not finite at node {i}")));
        }
    }
    Ok(out)
}

/// ⟨T′(u), v⟩ = ⟨(-Δ_g)^s u, v⟩ + ∫ g(|u|) sign(u) v − ∫ f(u) v.
pub fn gateaux(prob: &ProblemSpec, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    let mut val = apply_weak_value(&prob.young, u, v)?;
    for ((w, ui), vi) in prob
        .grid
        .weights()
        .iter()
        .zip(u.values())
        .zip(v.values())
    {
        let local = if *ui == 0.0 {
            0.0
        } else {
            prob.young.density_unchecked(ui.abs()) * ui.signum()
        };
        val += w * (local - prob.nl.f(*ui)) * vi;
    }
    Ok(val)
}

/// Euclidean gradient in nodal coordinates: Σ_i grad_i v_i w_i = ⟨T′(u), v⟩.
pub fn grad(prob: &ProblemSpec, u: &GridFunction) -> Result<GridFunction> {
    let partials = energy_partials(prob, u)?;
    let vals: Vec<f64> = partials
        .iter()
        .zip(prob.grid.weights())
        .map(|(p, w)| p / w)
        .collect();
    GridFunction::from_values(&prob.grid, vals)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub ok: bool,
    pub detail: String,
}

/// Witnessed verdicts for the structural conditions on the reaction term.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionsReport {
    /// f(t)/g(t) → 0 as t → 0 (sampled on a decreasing window)
    pub f1_small_t: CheckItem,
    /// |f| dominated by the comparison density m at infinity
    pub f2_growth: CheckItem,
    /// 0 < θ F(t) ≤ f(t) t away from 0
    pub f3_superlinearity: CheckItem,
    /// p⁺ < m⁻ ≤ m⁺ < p⁻_* = N p⁻ / (N − s p⁻)
    pub m1_window: CheckItem,
    pub p_minus: f64,
    pub p_plus: f64,
    pub m_minus: f64,
    pub m_plus: f64,
    pub p_star: Option<f64>,
    pub theta: f64,
    /// θ > p⁺, required by the mountain-pass geometry
    pub theta_ok: bool,
    pub covers_reals: bool,
    pub all_ok: bool,
}

/// Check (f₁)-(f₃) and the (m₁) exponent window on sampled windows.
pub fn check_f_conditions(nl: &Nonlinearity, y: &YoungFunction, grid: &Grid) -> ConditionsReport {
    let idx = y.indices();
    let midx = nl.m_fn().indices();
    // (f₁): |f|/g on a decreasing window reaching 1e-8
    let f1 = {
        let mut ratios = Vec::new();
        for k in 0..=28 {
            let t = 10f64.powf(-1.0 - 0.25 * k as f64);
            let g = y.density_unchecked(t);
            if g > 0.0 {
                ratios.push((t, nl.f(t).abs() / g));
            }
        }
        let dec = ratios.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9));
        let last = ratios.last().map(|r| r.1).unwrap_or(f64::INFINITY);
        CheckItem {
            ok: dec && last < 1e-3,
            detail: format!(
                "f/g falls from {:.3e} at t=1e-1 to {:.3e} at t=1e-8 (monotone: {dec})",
                ratios.first().map(|r| r.1).unwrap_or(f64::NAN),
                last
            ),
        }
    };
    // (f₂): |f|/m bounded on [1, 1e6]
    let f2 = {
        let mut sup: f64 = 0.0;
        let mut at = 1.0;
        for k in 0..=120 {
            let t = 10f64.powf(0.05 * k as f64);
            let m = nl.m_fn().density_unchecked(t);
            if m > 0.0 {
                let r = nl.f(t).abs() / m;
                if r > sup {
                    sup = r;
                    at = t;
                }
            }
        }
        CheckItem {
            ok: sup.is_finite() && sup <= 1e6,
            detail: format!("sup |f|/m on [1, 1e6] = {sup:.6e} at t = {at:.3e}"),
        }
    };
    // (f₃): 0 < θ F(t) ≤ f(t) t on symmetric samples
    let f3 = {
        let theta = nl.theta();
        let mut ok = theta.is_finite();
        let mut worst = f64::INFINITY;
        let mut at = 0.0;
        for sign in [-1.0, 1.0] {
            for k in 0..=60 {
                let t = sign * 10f64.powf(-3.0 + 0.1 * k as f64);
                let big = nl.big_f(t);
                let lhs = theta * big;
                let rhs = nl.f(t) * t;
                if !(big > 0.0) || lhs > rhs * (1.0 + 1e-9) + 1e-12 {
                    ok = false;
                }
                let margin = rhs - lhs;
                if margin < worst {
                    worst = margin;
                    at = t;
                }
            }
        }
        CheckItem {
            ok,
            detail: format!("min (f·t − θF) over samples = {worst:.3e} at t = {at:.3e}"),
        }
    };
    // (m₁) exponent chain
    let (nf, s) = (grid.n_dim() as f64, grid.s());
    let p_star = if nf - s * idx.p_minus > 0.0 {
        Some(nf * idx.p_minus / (nf - s * idx.p_minus))
    } else {
        None
    };
    let m1 = match p_star {
        None => CheckItem {
            ok: false,
            detail: format!(
                "Sobolev window undefined: N − s p⁻ = {:.4} ≤ 0",
                nf - s * idx.p_minus
            ),
        },
        Some(ps) => {
            let ok = idx.p_plus < midx.p_minus && midx.p_minus <= midx.p_plus && midx.p_plus < ps;
            CheckItem {
                ok,
                detail: format!(
                    "need p⁺ < m⁻ ≤ m⁺ < p⁻_*: {:.4} < {:.4} ≤ {:.4} < {:.4}",
                    idx.p_plus, midx.p_minus, midx.p_plus, ps
                ),
            }
        }
    };
    let theta_ok = nl.theta() > idx.p_plus;
    let all_ok = f1.ok && f2.ok && f3.ok && m1.ok && theta_ok;
    ConditionsReport {
        f1_small_t: f1,
        f2_growth: f2,
        f3_superlinearity: f3,
        m1_window: m1,
        p_minus: idx.p_minus,
        p_plus: idx.p_plus,
        m_minus: midx.p_minus,
        m_plus: midx.p_plus,
        p_star,
        theta: nl.theta(),
        theta_ok,
        covers_reals: nl.covers_reals(),
        all_ok,
    }
}

/// A mountain-pass geometry witness.
#[derive(Debug)]
pub struct Geometry {
    pub rho: f64,
    pub delta_rho: f64,
    pub e: GridFunction,
    pub e_norm: f64,
    pub e_energy: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeometrySummary {
    pub rho: f64,
    pub delta_rho: f64,
    pub e_norm: f64,
    pub e_energy: f64,
}

fn random_smooth_profile<R: Rng>(grid: &Arc<Grid>, rng: &mut R) -> GridFunction {
    let r_max = grid.r_max();
    loop {
        let mut params = Vec::new();
        for _ in 0..3 {
            let c: f64 = rng.gen_range(-1.0..1.0);
            let mu: f64 = rng.gen_range(0.0..r_max / 3.0);
            let sig: f64 = rng.gen_range(r_max / 30.0..r_max / 6.0);
            params.push((c, mu, sig));
        }
        let mut v = GridFunction::from_fn(grid, |r| {
            params
                .iter()
                .map(|(c, mu, sig)| c * (-((r - mu) / sig).powi(2)).exp())
                .sum()
        });
        let n = v.values().len();
        v.values_mut()[n - 1] = 0.0;
        if v.max_abs() > 1e-8 {
            return v;
        }
    }
}

/// Find (ρ, δ_ρ, e): a sphere radius with positive sampled energy minimum
/// and a far point with negative energy.
pub fn mountain_pass_geometry<R: Rng>(prob: &ProblemSpec, rng: &mut R) -> Result<Geometry> {
    let y = &prob.young;
    let grid = &prob.grid;
    let tol = prob.solver.lux_tol;
    let mut rho = prob.solver.rho_init;
    let mut found = None;
    for _ in 0..24 {
        let mut min_e = f64::INFINITY;
        for _ in 0..prob.solver.geometry_dirs.max(4) {
            let v = random_smooth_profile(grid, rng);
            let nv = norm_wsg(y, &v, tol)?;
            let u = v.scaled(rho / nv);
            min_e = min_e.min(energy(prob, &u)?);
        }
        if min_e > 0.0 {
            found = Some((rho, min_e));
            break;
        }
        rho *= 0.5;
        if rho < 1e-7 {
            break;
        }
    }
    let (rho, delta_rho) = found.ok_or_else(|| {
        Error::GeometryFailure(
            "no sphere radius with positive sampled energy minimum (checked down to 1e-7)".into(),
        )
    })?;
    // scaling ray through a fixed positive radial bump
    let r_max = grid.r_max();
    let mut psi = GridFunction::from_fn(grid, |r| (-(r / (r_max / 6.0)).powi(2)).exp());
    let n = psi.values().len();
    psi.values_mut()[n - 1] = 0.0;
    let mut t0 = 1.0;
    for _ in 0..100 {
        let e = psi.scaled(t0);
        let en = energy(prob, &e)?;
        if en < 0.0 {
            let e_norm = norm_wsg(y, &e, tol)?;
            if e_norm > rho {
                return Ok(Geometry {
                    rho,
                    delta_rho,
                    e,
                    e_norm,
                    e_energy: en,
                });
            }
        }
        t0 *= 2.0;
    }
    Err(Error::GeometryFailure(
        "energy never becomes negative along the scaling ray: the reaction term does not \
         dominate the modulars (θ ≤ p⁺ or f too weak)"
            .into(),
    ))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub max_energy: f64,
    pub grad_norm: f64,
}

/// Candidate critical point with its certificate data.
#[derive(Serialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// energy at the path maximizer
    pub level_c: f64,
    /// normalized weak-equation residual at u_star
    pub residual: f64,
    pub grad_tol_used: f64,
    pub u_star_norm_lg: f64,
    pub nontrivial: bool,
    pub radial: bool,
    pub geometry: GeometrySummary,
    pub energy_terms: (f64, f64, f64),
    pub conditions: ConditionsReport,
    pub trace: Vec<TraceEntry>,
    pub diagonal_error_estimate: f64,
    #[serde(skip)]
    pub u_star: GridFunction,
    #[serde(skip)]
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

/// Discrete path-deformation minimax from a fresh ray path.
pub fn solve_mountain_pass(prob: &ProblemSpec, seed: u64) -> Result<SolveReport> {
    solve_mountain_pass_from(prob, seed, None)
}

/// As [`solve_mountain_pass`], optionally routing the initial path through a
/// waypoint (used to warm-start a refined grid from a coarse solution).
pub fn solve_mountain_pass_from(
    prob: &ProblemSpec,
    seed: u64,
    waypoint: Option<&GridFunction>,
) -> Result<SolveReport> {
    let conditions = check_f_conditions(&prob.nl, &prob.young, &prob.grid);
    if !conditions.theta_ok {
        return Err(Error::GeometryFailure(format!(
            "theta = {} does not exceed p⁺ = {}; the energy has no mountain-pass shape",
            conditions.theta, conditions.p_plus
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geo = mountain_pass_geometry(prob, &mut rng)?;
    let k = prob.solver.path_points.max(4);
    let n = prob.grid.len();
    let mut path: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    match waypoint {
        None => {
            for j in 0..=k {
                let t = j as f64 / k as f64;
                path.push(geo.e.values().iter().map(|v| t * v).collect());
            }
        }
        Some(w) => {
            // two linear legs: 0 → w (half the points) and w → e
            let half = k / 2;
            for j in 0..=half {
                let t = j as f64 / half as f64;
                path.push(w.values().iter().map(|v| t * v).collect());
            }
            for j in 1..=(k - half) {
                let t = j as f64 / (k - half) as f64;
                path.push(
                    w.values()
                        .iter()
                        .zip(geo.e.values())
                        .map(|(a, b)| a + t * (b - a))
                        .collect(),
                );
            }
        }
    }
    let as_fn = |vals: &[f64]| -> Result<GridFunction> {
        GridFunction::from_values(&prob.grid, vals.to_vec())
    };
    let mut energies = Vec::with_capacity(k + 1);
    for z in &path {
        energies.push(energy(prob, &as_fn(z)?)?);
    }
    let tol = prob.solver.tol_grad * geo.e_norm.max(1.0);
    let weights = prob.grid.weights().to_vec();
    let mut trace = Vec::new();
    let mut snapshots = Vec::new();
    let mut alpha_prev = 1.0f64;
    let mut converged = false;
    let mut stalls = 0usize;
    let mut iterations = 0usize;
    let mut kstar = 1usize;
    for iter in 0..prob.solver.max_iter {
        iterations = iter + 1;
        kstar = 1;
        for j in 2..k {
            if energies[j] > energies[kstar] {
                kstar = j;
            }
        }
        let u = as_fn(&path[kstar])?;
        let partials = energy_partials(prob, &u)?;
        let gn = residual_from_partials(prob, &partials);
        trace.push(TraceEntry {
            iter,
            max_energy: energies[kstar],
            grad_norm: gn,
        });
        if iter % prob.solver.snapshot_every == 0 {
            snapshots.push((iter, path[kstar].clone()));
        }
        if gn < tol {
            converged = true;
            break;
        }
        // mass-preconditioned descent, boundary node pinned
        let mut dir: Vec<f64> = partials
            .iter()
            .zip(&weights)
            .map(|(p, w)| -p / w)
            .collect();
        dir[n - 1] = 0.0;
        let slope: f64 = partials
            .iter()
            .zip(&dir)
            .map(|(p, d)| p * d)
            .sum();
        if slope >= 0.0 {
            stalls += 1;
            if stalls > 60 {
                break;
            }
            continue;
        }
        let e_old = energies[kstar];
        let mut alpha = (alpha_prev * 2.0).clamp(1e-12, 1e6);
        let mut accepted = false;
        for _ in 0..prob.solver.max_halvings {
            let trial: Vec<f64> = path[kstar]
                .iter()
                .zip(&dir)
                .map(|(z, d)| z + alpha * d)
                .collect();
            let e_new = energy(prob, &as_fn(&trial)?);
            if let Ok(e_new) = e_new {
                if e_new <= e_old + prob.solver.armijo_c * alpha * slope {
                    path[kstar] = trial;
                    energies[kstar] = e_new;
                    alpha_prev = alpha;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            stalls += 1;
            alpha_prev = (alpha_prev * 0.5).max(1e-12);
            if stalls > 60 {
                break;
            }
            continue;
        }
        stalls = 0;
        if (iter + 1) % prob.solver.reequi_every == 0 {
            reequidistribute(prob, &mut path)?;
            for (j, z) in path.iter().enumerate() {
                energies[j] = energy(prob, &as_fn(z)?)?;
            }
            // path collapse: every interior point numerically zero
            let sup = path[1..k]
                .iter()
                .map(|z| z.iter().fold(0.0f64, |m, v| m.max(v.abs())))
                .fold(0.0f64, f64::max);
            if sup < 1e-13 * geo.e.max_abs() {
                return Err(Error::DegeneratePath(
                    "every interior path point collapsed to zero".into(),
                ));
            }
        }
    }
    let u_star = as_fn(&path[kstar])?;
    snapshots.push((iterations, path[kstar].clone()));
    let residual = weak_residual(&u_star, prob)?;
    let level_c = energies[kstar];
    let u_star_norm_lg = luxemburg_norm(&prob.young, &u_star, ModularKind::Local, prob.solver.lux_tol)?;
    let terms = energy_terms(prob, &u_star)?;
    // keep serialized traces bounded
    let trace = if trace.len() > 20_000 {
        let stride = trace.len() / 10_000;
        let mut t: Vec<TraceEntry> = trace.iter().step_by(stride).copied().collect();
        if let Some(last) = trace.last() {
            if t.last().map(|e| e.iter) != Some(last.iter) {
                t.push(*last);
            }
        }
        t
    } else {
        trace
    };
    Ok(SolveReport {
        converged,
        iterations,
        level_c,
        residual,
        grad_tol_used: tol,
        u_star_norm_lg,
        nontrivial: u_star_norm_lg > 10.0 * tol,
        radial: prob.grid.kind() == GridKind::RadialND,
        geometry: GeometrySummary {
            rho: geo.rho,
            delta_rho: geo.delta_rho,
            e_norm: geo.e_norm,
            e_energy: geo.e_energy,
        },
        energy_terms: terms,
        conditions,
        trace,
        diagonal_error_estimate: crate::space::diagonal_omission_estimate(&prob.young, &u_star),
        u_star,
        snapshots,
    })
}

/// Redistribute the interior points to equal arc length in ‖·‖_{W^{s,G}}.
fn reequidistribute(prob: &ProblemSpec, path: &mut Vec<Vec<f64>>) -> Result<()> {
    let k = path.len() - 1;
    let tol = prob.solver.path_norm_tol;
    let mut seg = Vec::with_capacity(k);
    for j in 0..k {
        let d: Vec<f64> = path[j + 1]
            .iter()
            .zip(&path[j])
            .map(|(a, b)| a - b)
            .collect();
        let df = GridFunction::from_values(&prob.grid, d)?;
        seg.push(norm_wsg(&prob.young, &df, tol)?.max(1e-300));
    }
    let mut cum = vec![0.0; k + 1];
    for j in 0..k {
        cum[j + 1] = cum[j] + seg[j];
    }
    let total = cum[k];
    let old = path.clone();
    for j in 1..k {
        let target = total * j as f64 / k as f64;
        let mut seg_idx = 0;
        while seg_idx + 1 < k && cum[seg_idx + 1] < target {
            seg_idx += 1;
        }
        let t = (target - cum[seg_idx]) / (cum[seg_idx + 1] - cum[seg_idx]);
        path[j] = old[seg_idx]
            .iter()
            .zip(&old[seg_idx + 1])
            .map(|(a, b)| a + t * (b - a))
            .collect();
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PsEntry {
    pub iter: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub norm: f64,
}

/// Boundedness surrogate along the iterate snapshots:
/// T(u) − (1/θ)⟨T′u, u⟩ ≥ ((θ − p⁺)/θ)(Φ_{s,G}(u) + Φ_G(u)) − 1e-8.
#[derive(Debug, Clone, Serialize)]
pub struct PsReport {
    pub entries: Vec<PsEntry>,
    pub sup_norm: f64,
    pub ok: bool,
}

pub fn ps_monitor(prob: &ProblemSpec, report: &SolveReport) -> Result<PsReport> {
    let theta = prob.nl.theta();
    let p_plus = prob.young.indices().p_plus;
    let mut entries = Vec::new();
    let mut sup_norm = 0.0f64;
    let mut ok = true;
    for (iter, vals) in &report.snapshots {
        let u = GridFunction::from_values(&prob.grid, vals.clone())?;
        let (j, i, _f) = energy_terms(prob, &u)?;
        let e = energy(prob, &u)?;
        let pairing = gateaux(prob, &u, &u)?;
        let lhs = e - pairing / theta;
        let rhs = (theta - p_plus) / theta * (j + i);
        let margin = lhs - rhs;
        if margin < -1e-8 * rhs.abs().max(1.0) {
            ok = false;
        }
        let norm = norm_wsg(&prob.young, &u, prob.solver.path_norm_tol)?;
        sup_norm = sup_norm.max(norm);
        entries.push(PsEntry {
            iter: *iter,
            lhs,
            rhs,
            margin,
            norm,
        });
    }
    Ok(PsReport {
        entries,
        sup_norm,
        ok,
    })
}

/// Enforce the radial ansatz: identity on radial grids, mirror averaging
/// about the interval midpoint (by node index) on 1-D grids. Idempotent and
/// exact on already-symmetric inputs.
pub fn radialize(u: &GridFunction) -> GridFunction {
    match u.grid().kind() {
        GridKind::RadialND => u.clone(),
        GridKind::Interval1D => {
            let vals = u.values();
            let n = vals.len();
            let avg: Vec<f64> = (0..n)
                .map(|i| 0.5 * (vals[i] + vals[n - 1 - i]))
                .collect();
            GridFunction::from_values(u.grid(), avg).expect("mirrored values stay finite")
        }
    }
}

/// Convexity-consistency certificate at a candidate critical point:
/// Φ(v) − Φ(u) ≥ ∫ f(u)(v − u) for Φ = Φ_{s,G} + Φ_G over random nearby v.
#[derive(Debug, Clone, Serialize)]
pub struct E1Report {
    pub draws: usize,
    pub min_margin: f64,
    pub perturbation_scale: f64,
    pub ok: bool,
}

pub fn szulkin_e1_check(
    prob: &ProblemSpec,
    u: &GridFunction,
    draws: usize,
    rel_scale: f64,
    seed: u64,
) -> Result<E1Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = |w: &GridFunction| -> f64 { modular_sg(&prob.young, w) + modular_g(&prob.young, w) };
    let phi_u = phi(u);
    let scale = rel_scale * u.max_abs().max(1e-12);
    let mut min_margin = f64::INFINITY;
    for _ in 0..draws {
        let d = random_smooth_profile(&prob.grid, &mut rng);
        let denom = d.max_abs().max(1e-300);
        let v = u.axpy(scale / denom, &d);
        let mut rhs = 0.0;
        for ((w, ui), (vi, di)) in prob
            .grid
            .weights()
            .iter()
            .zip(u.values())
            .zip(v.values().iter().zip(u.values()))
        {
            let _ = di;
            rhs += w * prob.nl.f(*ui) * (vi - ui);
        }
        let margin = phi(&v) - phi_u - rhs;
        min_margin = min_margin.min(margin);
    }
    Ok(E1Report {
        draws,
        min_margin,
        perturbation_scale: scale,
        ok: min_margin >= -1e-6,
    })
}
