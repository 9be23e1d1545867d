//! Finite empirical surrogates for the compactness mechanisms: decay of
//! ball integrals for radial functions (sphere-packing counts), the
//! vanishing alternative (concentration functional Q_r), and lattice
//! recentring of non-vanishing sequences.
//!
//! Diagnostics work on analytically transformed radial bumps
//! u(x) = amp · φ(|x − center| / scale): translations, amplitude and
//! dilation schedules are exact, ball and cube integrals reduce to low
//! dimensional quadrature, and recentring is representation-exact. The
//! supremum over centers in Q_r is taken over a cubic lattice of spacing
//! r/2 covering the support, an under-approximation by at most the covering
//! ratio.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, gauss_legendre};
use crate::young::{essentially_stronger, YoungFunction};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A radial base profile with a hard support radius.
#[derive(Clone)]
pub struct Profile {
    eval: ScalarFn,
    support: f64,
    pub spec: String,
}

impl std::fmt::Debug for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Profile({}, support={})", self.spec, self.support)
    }
}

impl Profile {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(
        spec: &str,
        support: f64,
        eval: F,
    ) -> Self {
        Profile {
            eval: Arc::new(eval),
            support,
            spec: spec.to_string(),
        }
    }

    /// exp(−ρ²), cut off where it underflows any sensible tolerance.
    pub fn gauss() -> Self {
        Self::new("gauss", 8.0, |rho: f64| (-rho * rho).exp())
    }

    /// Smooth compactly supported bump on [0, 1).
    pub fn bump() -> Self {
        Self::new("bump", 1.0, |rho: f64| {
            if rho >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - rho * rho)).exp()
            }
        })
    }

    pub fn tent() -> Self {
        Self::new("tent", 1.0, |rho: f64| (1.0 - rho).max(0.0))
    }

    /// (1 + ρ)^{-2}, truncated at the given radius.
    pub fn inverse_square(truncation: f64) -> Self {
        Self::new("invsq", truncation, |rho: f64| (1.0 + rho).powi(-2))
    }

    /// Indicator of [0, 1).
    pub fn indicator() -> Self {
        Self::new("indicator", 1.0, |rho: f64| if rho < 1.0 { 1.0 } else { 0.0 })
    }

    pub fn parse(spec: &str) -> Result<Self> {
        match spec {
            "gauss" => Ok(Self::gauss()),
            "bump" => Ok(Self::bump()),
            "tent" => Ok(Self::tent()),
            "indicator" => Ok(Self::indicator()),
            _ => {
                if let Some(rest) = spec.strip_prefix("invsq:") {
                    let t: f64 = rest
                        .parse()
                        .map_err(|_| Error::Config(format!("bad invsq truncation: {rest}")))?;
                    return Ok(Self::inverse_square(t));
                }
                Err(Error::Config(format!("unknown profile spec: {spec}")))
            }
        }
    }

    pub fn eval(&self, rho: f64) -> f64 {
        if rho >= self.support {
            0.0
        } else {
            (self.eval)(rho)
        }
    }

    pub fn support(&self) -> f64 {
        self.support
    }
}

/// A translated, scaled radial bump: u(x) = amp · φ(|x − center| / scale).
#[derive(Clone, Debug)]
pub struct Field {
    pub dim: usize,
    pub center: Vec<f64>,
    pub amp: f64,
    pub scale: f64,
    pub profile: Profile,
}

impl Field {
    pub fn radial(dim: usize, profile: Profile) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Domain(format!("diagnostics support N ≤ 3, got {dim}")));
        }
        Ok(Field {
            dim,
            center: vec![0.0; dim],
            amp: 1.0,
            scale: 1.0,
            profile,
        })
    }

    pub fn support_radius(&self) -> f64 {
        self.profile.support() * self.scale
    }

    /// Value at radius ρ from the field's own center.
    pub fn at_radius(&self, rho: f64) -> f64 {
        self.amp * self.profile.eval(rho / self.scale)
    }

    pub fn at_point(&self, x: &[f64]) -> f64 {
        let d2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        self.at_radius(d2.sqrt())
    }

    pub fn translated(&self, shift: &[f64]) -> Field {
        let mut f = self.clone();
        for (c, s) in f.center.iter_mut().zip(shift) {
            *c += s;
        }
        f
    }

    fn surface(&self) -> f64 {
        match self.dim {
            1 => 2.0,
            2 => 2.0 * PI,
            _ => 4.0 * PI,
        }
    }
}

/// ∫ Ψ(|u|) dx over the whole space (the support is finite).
pub fn field_modular(field: &Field, y: &YoungFunction) -> f64 {
    let s = field.support_radius();
    if s <= 0.0 || field.amp == 0.0 {
        return 0.0;
    }
    let n = field.dim as f64;
    let surf = field.surface();
    adaptive_simpson(
        &|rho: f64| {
            let v = field.at_radius(rho).abs();
            if v == 0.0 {
                0.0
            } else {
                surf * rho.powf(n - 1.0) * y.eval_unchecked(v)
            }
        },
        0.0,
        s,
        1e-9,
    )
}

/// Fraction of the sphere of radius ρ about the field center lying inside
/// the ball B_r(y) with |y − center| = d.
fn sphere_cap_fraction(dim: usize, rho: f64, d: f64, r: f64) -> f64 {
    if rho + d <= r {
        return 1.0;
    }
    if (rho - d).abs() >= r {
        return 0.0;
    }
    match dim {
        1 => 0.5,
        2 => {
            let c = ((d * d + rho * rho - r * r) / (2.0 * d * rho)).clamp(-1.0, 1.0);
            c.acos() / PI
        }
        _ => {
            let c = ((d * d + rho * rho - r * r) / (2.0 * d * rho)).clamp(-1.0, 1.0);
            0.5 * (1.0 - c)
        }
    }
}

/// ∫_{B_r(y)} G(|u|) dx for a center at distance `d` from the field center.
pub fn ball_integral(field: &Field, y: &YoungFunction, d: f64, r: f64) -> f64 {
    let s = field.support_radius();
    if field.amp == 0.0 || s <= 0.0 || d >= s + r {
        return 0.0;
    }
    let n = field.dim as f64;
    let surf = field.surface();
    let (gx, gw) = gauss_legendre(64);
    let mut total = 0.0;
    let mut add_panel = |lo: f64, hi: f64, full: bool| {
        if hi <= lo {
            return;
        }
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (x, w) in gx.iter().zip(&gw) {
            let rho = mid + half * x;
            let v = field.at_radius(rho).abs();
            if v == 0.0 {
                continue;
            }
            let frac = if full {
                1.0
            } else {
                sphere_cap_fraction(field.dim, rho, d, r)
            };
            if frac > 0.0 {
                total += w * half * surf * rho.powf(n - 1.0) * y.eval_unchecked(v) * frac;
            }
        }
    };
    if d < 1e-12 {
        add_panel(0.0, r.min(s), true);
        return total;
    }
    let full_hi = (r - d).max(0.0).min(s);
    add_panel(0.0, full_hi, true);
    let lo_b = (d - r).abs();
    let hi_b = (d + r).min(s);
    add_panel(lo_b.min(s), hi_b, false);
    total
}

/// Q_r(u) = sup over lattice centers of ∫_{B_r(y)} G(|u|) dx, the lattice
/// having spacing r/2 and covering the support.
pub fn concentration(field: &Field, y: &YoungFunction, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain("ball radius must be positive".into()));
    }
    if field.amp == 0.0 {
        return Ok(0.0);
    }
    let h = 0.5 * r;
    let reach = field.support_radius() + r;
    let steps = (reach / h).ceil() as i64;
    let mut d2s: Vec<f64> = Vec::new();
    let dim = field.dim;
    let c = &field.center;
    let mut push = |offs: &[i64]| {
        let mut d2 = 0.0;
        for (k, &o) in offs.iter().enumerate() {
            // nearest lattice sheet per axis plus the offset
            let base = (c[k] / h).round() * h;
            let dx = base + o as f64 * h - c[k];
            d2 += dx * dx;
        }
        if d2 <= reach * reach {
            d2s.push(d2);
        }
    };
    match dim {
        1 => {
            for i in -steps..=steps {
                push(&[i]);
            }
        }
        2 => {
            for i in -steps..=steps {
                for j in -steps..=steps {
                    push(&[i, j]);
                }
            }
        }
        _ => {
            for i in -steps..=steps {
                for j in -steps..=steps {
                    for k in -steps..=steps {
                        push(&[i, j, k]);
                    }
                }
            }
        }
    }
    d2s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d2s.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + *b));
    let mut best = 0.0f64;
    for d2 in d2s {
        let v = ball_integral(field, y, d2.sqrt(), r);
        best = best.max(v);
    }
    Ok(best)
}

/// mes([|u| > τ]) by a scan with bisected level crossings.
pub fn superlevel_measure(field: &Field, tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Domain("superlevel threshold must be positive".into()));
    }
    let s = field.support_radius();
    if s <= 0.0 || field.amp.abs() <= tau {
        // |u| ≤ |amp| everywhere; quick reject only when the bound already fails
        if field.amp.abs() <= tau {
            return Ok(0.0);
        }
    }
    let n = field.dim as f64;
    let surf = field.surface();
    let m = 8192usize;
    let h = s / m as f64;
    let above = |rho: f64| field.at_radius(rho).abs() > tau;
    let mut total = 0.0;
    let mut seg_start: Option<f64> = None;
    let mut prev = above(0.0);
    if prev {
        seg_start = Some(0.0);
    }
    let shell = |lo: f64, hi: f64| surf * (hi.powf(n) - lo.powf(n)) / n;
    for i in 1..=m {
        let rho = i as f64 * h;
        let cur = above(rho);
        if cur != prev {
            // refine the crossing
            let mut lo = rho - h;
            let mut hi = rho;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if above(mid) == prev {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cross = 0.5 * (lo + hi);
            if prev {
                total += shell(seg_start.take().unwrap(), cross);
            } else {
                seg_start = Some(cross);
            }
            prev = cur;
        }
    }
    if let Some(start) = seg_start {
        total += shell(start, s);
    }
    Ok(total)
}

/// One member of a concentration/vanishing test sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FamilyKind {
    /// u_n = φ(· − n·step): norms constant by construction
    Translate,
    /// u_n = n^{-amp_exp} φ(·/n): spreading with decaying amplitude
    Vanish { amp_exp: f64 },
    /// u_n = n^{amp_exp} φ(n·): concentrating at the origin
    Spike { amp_exp: f64 },
}

#[derive(Debug, Clone)]
pub struct SequenceFamily {
    pub base: Field,
    pub kind: FamilyKind,
    pub step: Vec<f64>,
    pub n_max: usize,
}

impl SequenceFamily {
    pub fn translate(base: Field, step: Vec<f64>, n_max: usize) -> Result<Self> {
        if step.len() != base.dim {
            return Err(Error::Domain("translation step has wrong dimension".into()));
        }
        Ok(SequenceFamily {
            base,
            kind: FamilyKind::Translate,
            step,
            n_max,
        })
    }

    pub fn vanish(base: Field, amp_exp: f64, n_max: usize) -> Result<Self> {
        let dim = base.dim;
        let _ = dim;
        Ok(SequenceFamily {
            base,
            kind: FamilyKind::Vanish { amp_exp },
            step: vec![],
            n_max,
        })
    }

    pub fn spike(base: Field, amp_exp: f64, n_max: usize) -> Result<Self> {
        Ok(SequenceFamily {
            base,
            kind: FamilyKind::Spike { amp_exp },
            step: vec![],
            n_max,
        })
    }

    /// n ≥ 1.
    pub fn member(&self, n: usize) -> Field {
        let nf = n as f64;
        let mut f = self.base.clone();
        match self.kind {
            FamilyKind::Translate => {
                for (c, s) in f.center.iter_mut().zip(&self.step) {
                    *c += nf * s;
                }
            }
            FamilyKind::Vanish { amp_exp } => {
                f.amp *= nf.powf(-amp_exp);
                f.scale *= nf;
            }
            FamilyKind::Spike { amp_exp } => {
                f.amp *= nf.powf(amp_exp);
                f.scale /= nf;
            }
        }
        f
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LionsRow {
    pub n: usize,
    pub q_r: f64,
    pub modular_g: f64,
    pub modular_gstar: f64,
    pub modular_psi: f64,
}

/// Trajectory report for the vanishing implication: if Q_r(u_n) decays then
/// Φ_Ψ(u_n) must decay as well. A monotone-trend surrogate, not a limit
/// claim; "vacuous" records that the decay hypothesis never triggered.
#[derive(Debug, Clone, Serialize)]
pub struct LionsReport {
    pub rows: Vec<LionsRow>,
    pub se1_ok: bool,
    pub se2_ok: bool,
    pub g_bounded: bool,
    pub gstar_bounded: bool,
    pub triggered: bool,
    pub q_monotone_violations: usize,
    pub psi_monotone_violations: usize,
    pub final_psi_ratio: f64,
    pub verdict: String,
}

fn monotone_violations(xs: &[f64]) -> usize {
    xs.windows(2)
        .filter(|w| w[1] > w[0] * (1.0 + 1e-9) + 1e-300)
        .count()
}

fn bounded_trajectory(xs: &[f64]) -> bool {
    let head = xs.iter().take(3).cloned().fold(0.0f64, f64::max);
    xs.iter().all(|&v| v <= 1.5 * head + 1e-12)
}

/// Run the vanishing test along a family.
///
/// Preconditions: Ψ must vanish against G at zero (SE1 surrogate) and be
/// essentially weaker than the Sobolev conjugate G_* (SE2 surrogate), and
/// the G / G_* modulars must stay bounded along the family whenever the
/// decay hypothesis actually triggers.
pub fn lions_vanishing_test(
    family: &SequenceFamily,
    y_g: &YoungFunction,
    psi: &YoungFunction,
    s: f64,
    r: f64,
) -> Result<LionsReport> {
    let dim = family.base.dim;
    let gstar = y_g.sobolev_conjugate(dim, s)?;
    // (SE1): Ψ/G decays at zero
    let se1_ok = {
        let mut ratios = Vec::new();
        for k in 0..=28 {
            let t = 10f64.powf(-1.0 - 0.25 * k as f64);
            let g = y_g.eval_unchecked(t);
            if g > 0.0 {
                ratios.push(psi.eval_unchecked(t) / g);
            }
        }
        ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9))
            && ratios.last().is_some_and(|&v| v < 1e-3)
    };
    let se2_ok = essentially_stronger(psi, &gstar, &[0.5, 1.0, 2.0], 1e4)?;
    if !se1_ok || !se2_ok {
        return Err(Error::Precondition(format!(
            "target function violates the embedding window (SE1 ok: {se1_ok}, SE2 ok: {se2_ok})"
        )));
    }
    let mut rows = Vec::with_capacity(family.n_max);
    for n in 1..=family.n_max {
        let u = family.member(n);
        rows.push(LionsRow {
            n,
            q_r: concentration(&u, y_g, r)?,
            modular_g: field_modular(&u, y_g),
            modular_gstar: field_modular(&u, &gstar),
            modular_psi: field_modular(&u, psi),
        });
    }
    let qs: Vec<f64> = rows.iter().map(|r| r.q_r).collect();
    let psis: Vec<f64> = rows.iter().map(|r| r.modular_psi).collect();
    let g_bounded = bounded_trajectory(&rows.iter().map(|r| r.modular_g).collect::<Vec<_>>());
    let gstar_bounded =
        bounded_trajectory(&rows.iter().map(|r| r.modular_gstar).collect::<Vec<_>>());
    let triggered = qs.last().is_some_and(|&l| l <= 0.5 * qs[0]);
    if triggered && !(g_bounded && gstar_bounded) {
        return Err(Error::Precondition(format!(
            "family modulars unbounded along the schedule (G bounded: {g_bounded}, \
             G_* bounded: {gstar_bounded})"
        )));
    }
    let q_viol = monotone_violations(&qs);
    let psi_viol = monotone_violations(&psis);
    let final_ratio = psis.last().unwrap() / psis[0].max(1e-300);
    let verdict = if triggered {
        "held".to_string()
    } else {
        "vacuous: concentration did not decay, implication not triggered".to_string()
    };
    Ok(LionsReport {
        rows,
        se1_ok,
        se2_ok,
        g_bounded,
        gstar_bounded,
        triggered,
        q_monotone_violations: q_viol,
        psi_monotone_violations: psi_viol,
        final_psi_ratio: final_ratio,
        verdict,
    })
}

/// ∫_{K(z)} G(|u| · factor) dx over the unit cube centered at the integer
/// point z, by tensor Gauss-Legendre.
fn cube_integral(field: &Field, y: &YoungFunction, z: &[i64], factor: f64) -> f64 {
    let (gx, gw) = gauss_legendre(8);
    let dim = field.dim;
    let mut total = 0.0;
    let mut x = vec![0.0f64; dim];
    match dim {
        1 => {
            for (a, wa) in gx.iter().zip(&gw) {
                x[0] = z[0] as f64 + 0.5 * a;
                let v = field.at_point(&x).abs() * factor;
                if v > 0.0 {
                    total += 0.5 * wa * y.eval_unchecked(v);
                }
            }
        }
        2 => {
            for (a, wa) in gx.iter().zip(&gw) {
                x[0] = z[0] as f64 + 0.5 * a;
                for (b, wb) in gx.iter().zip(&gw) {
                    x[1] = z[1] as f64 + 0.5 * b;
                    let v = field.at_point(&x).abs() * factor;
                    if v > 0.0 {
                        total += 0.25 * wa * wb * y.eval_unchecked(v);
                    }
                }
            }
        }
        _ => {
            for (a, wa) in gx.iter().zip(&gw) {
                x[0] = z[0] as f64 + 0.5 * a;
                for (b, wb) in gx.iter().zip(&gw) {
                    x[1] = z[1] as f64 + 0.5 * b;
                    for (c, wc) in gx.iter().zip(&gw) {
                        x[2] = z[2] as f64 + 0.5 * c;
                        let v = field.at_point(&x).abs() * factor;
                        if v > 0.0 {
                            total += 0.125 * wa * wb * wc * y.eval_unchecked(v);
                        }
                    }
                }
            }
        }
    }
    total
}

/// Measure of K(0) ∩ [|u| > level] by midpoint subcells.
fn cube_superlevel_measure(field: &Field, level: f64) -> f64 {
    let m = 24usize;
    let h = 1.0 / m as f64;
    let dim = field.dim;
    let cell = h.powi(dim as i32);
    let mut count = 0usize;
    let mut x = vec![0.0f64; dim];
    let mut idx = vec![0usize; dim];
    loop {
        for k in 0..dim {
            x[k] = -0.5 + (idx[k] as f64 + 0.5) * h;
        }
        if field.at_point(&x).abs() > level {
            count += 1;
        }
        // odometer
        let mut k = 0;
        loop {
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
            if k == dim {
                return count as f64 * cell;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LiebOutcome {
    pub y0: Vec<i64>,
    /// ∫_{K(0)} G(|recentered|)
    pub cube_mass: f64,
    /// measured packing constant mes(K(0) ∩ [|v| > τ/2])
    pub c4: f64,
    /// G(τ/2) · c4, the certified lower bound
    pub bound: f64,
    pub ok: bool,
    #[serde(skip)]
    pub recentered: Field,
}

/// Search the integer lattice for the cube maximizing ∫_{K(y)} G(|u|/2) and
/// recenter; ties break to the lexicographically smallest center.
pub fn lieb_recenter(
    field: &Field,
    y_g: &YoungFunction,
    tau: f64,
    delta: f64,
) -> Result<LiebOutcome> {
    let lvl = superlevel_measure(field, tau)?;
    if lvl < delta {
        return Err(Error::Precondition(format!(
            "superlevel measure mes([|u| > {tau}]) = {lvl:.6e} below the required δ = {delta}"
        )));
    }
    let reach = field.support_radius() + 1.0;
    let dim = field.dim;
    let mut best: Option<(f64, Vec<i64>)> = None;
    let mut consider = |z: Vec<i64>| {
        let near = z
            .iter()
            .zip(&field.center)
            .all(|(zi, ci)| (*zi as f64 - ci).abs() <= reach);
        if !near {
            return;
        }
        let mass = cube_integral(field, y_g, &z, 0.5);
        match &best {
            Some((m, _)) if *m >= mass => {}
            _ => best = Some((mass, z)),
        }
    };
    let lo: Vec<i64> = field
        .center
        .iter()
        .map(|c| (c - reach).floor() as i64)
        .collect();
    let hi: Vec<i64> = field
        .center
        .iter()
        .map(|c| (c + reach).ceil() as i64)
        .collect();
    match dim {
        1 => {
            for i in lo[0]..=hi[0] {
                consider(vec![i]);
            }
        }
        2 => {
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    consider(vec![i, j]);
                }
            }
        }
        _ => {
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        consider(vec![i, j, k]);
                    }
                }
            }
        }
    }
    let (_, y0) = best.ok_or_else(|| Error::Evaluation("no candidate cube".into()))?;
    let shift: Vec<f64> = y0.iter().map(|z| -(*z as f64)).collect();
    let recentered = field.translated(&shift);
    let cube_mass = cube_integral(&recentered, y_g, &vec![0i64; dim], 1.0);
    let c4 = cube_superlevel_measure(&recentered, 0.5 * tau);
    let bound = y_g.eval_unchecked(0.5 * tau) * c4;
    Ok(LiebOutcome {
        ok: c4 > 0.0 && cube_mass >= bound * (1.0 - 1e-9),
        y0,
        cube_mass,
        c4,
        bound,
        recentered,
    })
}

/// Deterministic spiral covering of S² used as the greedy candidate set.
fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    (0..n)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = 2.0 * PI * (i as f64) / phi;
            [r * th.cos(), r * th.sin(), z]
        })
        .collect()
}

/// Lower bound on the number of disjoint balls of radius r that fit with
/// centers on the sphere of radius `dist`: exact in dimensions 1 and 2,
/// greedy spherical-code packing in dimension 3.
pub fn gamma_count(dist: f64, r: f64, dim: usize) -> Result<u64> {
    if !(dist > r) {
        return Err(Error::Precondition(format!(
            "packing needs |y| > r, got |y| = {dist}, r = {r}"
        )));
    }
    match dim {
        1 => Ok(2),
        2 => {
            let th = (r / dist).asin();
            Ok((PI / th).floor().max(1.0) as u64)
        }
        3 => {
            // disjointness needs angular separation ≥ 2 asin(r/|y|)
            let x = r / dist;
            let cos_min = 1.0 - 2.0 * x * x;
            let cands = fibonacci_sphere(4096);
            let mut picked: Vec<[f64; 3]> = Vec::new();
            'outer: for c in cands {
                for p in &picked {
                    let dot = c[0] * p[0] + c[1] * p[1] + c[2] * p[2];
                    if dot > cos_min {
                        continue 'outer;
                    }
                }
                picked.push(c);
            }
            Ok(picked.len() as u64)
        }
        _ => Err(Error::Domain(format!("packing count supports N ≤ 3, got {dim}"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StraussRow {
    pub dist: f64,
    pub gamma: u64,
    pub ball_integral: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StraussReport {
    pub total_modular: f64,
    pub rows: Vec<StraussRow>,
    pub ok: bool,
}

/// Verify ∫_{B_r(y)} G(u) ≤ Φ_G(u) / γ(|y|) · (1 + slack) for a radial u at
/// the sampled center distances.
pub fn strauss_decay_test(
    field: &Field,
    y_g: &YoungFunction,
    r: f64,
    dists: &[f64],
    slack: f64,
) -> Result<StraussReport> {
    if field.center.iter().any(|c| *c != 0.0) {
        return Err(Error::Precondition(
            "the packing bound needs a radial function (center at the origin)".into(),
        ));
    }
    let total = field_modular(field, y_g);
    if !total.is_finite() {
        return Err(Error::Precondition("G-modular must be finite".into()));
    }
    let mut rows = Vec::new();
    let mut all_ok = true;
    for &d in dists {
        let gamma = gamma_count(d, r, field.dim)?;
        let ball = ball_integral(field, y_g, d, r);
        let bound = total / gamma as f64 * (1.0 + slack);
        let ok = ball <= bound;
        all_ok &= ok;
        rows.push(StraussRow {
            dist: d,
            gamma,
            ball_integral: ball,
            bound,
            ok,
        });
    }
    Ok(StraussReport {
        total_modular: total,
        rows,
        ok: all_ok,
    })
}
