//! Young-function calculus.
//!
//! A Young function G(t) = ∫₀ᵗ g(τ) dτ is generated by a right-continuous
//! density g with g(0) = 0, g > 0 on (0, ∞), g non-decreasing and unbounded.
//! This module evaluates G and its inverse, forms the complementary function
//! through the generalized inverse density g̃(t) = sup{s : g(s) ≤ t}, builds
//! the Sobolev conjugate G_*, estimates the growth indices
//! p⁻ = inf t·g(t)/G(t) and p⁺ = sup t·g(t)/G(t), and exposes the structural
//! predicates (Δ₂ ratio bound, square-root convexity, the essentially-stronger
//! comparison A ≺≺ B).
//!
//! All predicates are finite surrogates: they sample a configured window and
//! report the witnessing extremal sample, never a claim about all t.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{adaptive_simpson, gauss_legendre, ls_slope, MonotoneCubic};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative tolerance for primitive integrals.
const PRIM_REL_TOL: f64 = 1e-10;
/// Search ceiling for the generalized inverse density.
const DEFAULT_GINV_CEILING: f64 = 1e14;
/// Default window and resolution for index estimation.
const INDEX_WINDOW: (f64, f64, usize) = (1e-6, 1e6, 10_000);
/// Bound above which a sampled Δ₂ ratio counts as unbounded.
const DELTA2_CAP: f64 = 1e8;

/// Family descriptor, used for reporting only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FamilyTag {
    /// G(t) = t^p / p
    Power { p: f64 },
    /// G(t) = t^p
    PurePower { p: f64 },
    /// G(t) = t^p log(1 + t)
    PowerLog { p: f64 },
    /// G(t) = t log(1 + t)
    LLogL,
    /// density given by a sampled monotone table
    Table,
    /// derived or custom construction
    Derived(String),
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyTag::Power { p } => write!(f, "power:p={p}"),
            FamilyTag::PurePower { p } => write!(f, "purepower:p={p}"),
            FamilyTag::PowerLog { p } => write!(f, "powerlog:p={p}"),
            FamilyTag::LLogL => write!(f, "lloglt"),
            FamilyTag::Table => write!(f, "table"),
            FamilyTag::Derived(s) => write!(f, "derived:{s}"),
        }
    }
}

/// Growth indices of a Young function over a sampled window.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrliczIndices {
    pub p_minus: f64,
    pub p_plus: f64,
    /// abscissae where the extremes were attained: (argmin, argmax)
    pub attained_at: (f64, f64),
}

#[derive(Default)]
struct Notes {
    saturated: AtomicBool,
    extrapolated: AtomicBool,
}

struct Inner {
    tag: FamilyTag,
    density: ScalarFn,
    /// closed-form primitive when available; otherwise adaptive quadrature
    primitive: Option<ScalarFn>,
    /// closed-form inverse of the primitive when available
    primitive_inv: Option<ScalarFn>,
    notes: Notes,
    indices: OnceLock<OrliczIndices>,
    complement: OnceLock<Box<YoungFunction>>,
}

/// A convex N-function given by its density g.
#[derive(Clone)]
pub struct YoungFunction {
    inner: Arc<Inner>,
}

impl fmt::Debug for YoungFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "YoungFunction({})", self.inner.tag)
    }
}

impl YoungFunction {
    fn from_parts(
        tag: FamilyTag,
        density: ScalarFn,
        primitive: Option<ScalarFn>,
        primitive_inv: Option<ScalarFn>,
    ) -> Result<Self> {
        let yf = YoungFunction {
            inner: Arc::new(Inner {
                tag,
                density,
                primitive,
                primitive_inv,
                notes: Notes::default(),
                indices: OnceLock::new(),
                complement: OnceLock::new(),
            }),
        };
        yf.validate()?;
        Ok(yf)
    }

    /// G(t) = t^p / p, density g(t) = t^{p-1}. Requires p > 1.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidYoung(format!(
                "power family needs p > 1, got {p}"
            )));
        }
        Self::from_parts(
            FamilyTag::Power { p },
            Arc::new(move |t: f64| t.powf(p - 1.0)),
            Some(Arc::new(move |t: f64| t.powf(p) / p)),
            Some(Arc::new(move |y: f64| (p * y).powf(1.0 / p))),
        )
    }

    /// G(t) = t^p, density g(t) = p t^{p-1}. Requires p > 1.
    pub fn pure_power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidYoung(format!(
                "pure power family needs p > 1, got {p}"
            )));
        }
        Self::from_parts(
            FamilyTag::PurePower { p },
            Arc::new(move |t: f64| p * t.powf(p - 1.0)),
            Some(Arc::new(move |t: f64| t.powf(p))),
            Some(Arc::new(move |y: f64| y.powf(1.0 / p))),
        )
    }

    /// G(t) = t^p log(1 + t). Requires p >= 1.
    pub fn power_log(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidYoung(format!(
                "power-log family needs p >= 1, got {p}"
            )));
        }
        Self::from_parts(
            FamilyTag::PowerLog { p },
            Arc::new(move |t: f64| p * t.powf(p - 1.0) * (1.0 + t).ln() + t.powf(p) / (1.0 + t)),
            Some(Arc::new(move |t: f64| t.powf(p) * (1.0 + t).ln())),
            None,
        )
    }

    /// G(t) = t log(1 + t), the L log L prototype with p⁻ = 1, p⁺ = 2.
    pub fn l_log_l() -> Self {
        Self::from_parts(
            FamilyTag::LLogL,
            Arc::new(|t: f64| (1.0 + t).ln() + t / (1.0 + t)),
            Some(Arc::new(|t: f64| t * (1.0 + t).ln())),
            None,
        )
        .expect("t log(1+t) is a Young function")
    }

    /// G(t) = e^t - t - 1; the standard example violating Δ₂.
    pub fn exp_growth() -> Self {
        Self::from_parts(
            FamilyTag::Derived("exp".into()),
            Arc::new(|t: f64| t.exp() - 1.0),
            Some(Arc::new(|t: f64| t.exp() - t - 1.0)),
            None,
        )
        .expect("e^t - t - 1 is a Young function")
    }

    /// Density sampled as a strictly increasing table of (t, g(t)) rows.
    ///
    /// The density is interpolated linearly inside the table and continued
    /// linearly with the last secant slope beyond it; the primitive is exact
    /// for the piecewise-linear density.
    pub fn from_table(ts: Vec<f64>, gs: Vec<f64>) -> Result<Self> {
        if ts.len() != gs.len() || ts.len() < 2 {
            return Err(Error::InvalidYoung(
                "table needs at least two matching rows".into(),
            ));
        }
        let mut ts = ts;
        let mut gs = gs;
        if ts[0] > 0.0 {
            ts.insert(0, 0.0);
            gs.insert(0, 0.0);
        }
        if ts[0] != 0.0 || gs[0] != 0.0 {
            return Err(Error::InvalidYoung(
                "table must start at t=0 with g(0)=0".into(),
            ));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidYoung(
                "table abscissae must strictly increase".into(),
            ));
        }
        if gs.windows(2).any(|w| w[1] < w[0]) || gs[1..].iter().any(|&g| g <= 0.0) {
            return Err(Error::InvalidYoung(
                "table densities must be non-decreasing and positive for t > 0".into(),
            ));
        }
        let n = ts.len();
        let last_slope = {
            let s = (gs[n - 1] - gs[n - 2]) / (ts[n - 1] - ts[n - 2]);
            s.max(gs[n - 1] / ts[n - 1]).max(1e-12)
        };
        // cumulative integrals of the piecewise-linear density (exact)
        let mut cum = vec![0.0; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + 0.5 * (gs[i] + gs[i - 1]) * (ts[i] - ts[i - 1]);
        }
        let (tse, gse, cume) = (ts.clone(), gs.clone(), cum);
        let (tsd, gsd) = (ts, gs);
        let density: ScalarFn = Arc::new(move |t: f64| {
            let n = tsd.len();
            if t >= tsd[n - 1] {
                return gsd[n - 1] + last_slope * (t - tsd[n - 1]);
            }
            let i = match tsd.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                Ok(i) => return gsd[i],
                Err(i) => i - 1,
            };
            let w = (t - tsd[i]) / (tsd[i + 1] - tsd[i]);
            gsd[i] * (1.0 - w) + gsd[i + 1] * w
        });
        let primitive: ScalarFn = Arc::new(move |t: f64| {
            let n = tse.len();
            if t >= tse[n - 1] {
                let dt = t - tse[n - 1];
                return cume[n - 1] + gse[n - 1] * dt + 0.5 * last_slope * dt * dt;
            }
            let i = match tse.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
                Ok(i) => return cume[i],
                Err(i) => i - 1,
            };
            let dt = t - tse[i];
            let w = dt / (tse[i + 1] - tse[i]);
            let g_mid = gse[i] * (1.0 - 0.5 * w) + gse[i + 1] * (0.5 * w);
            cume[i] + g_mid * dt
        });
        Self::from_parts(FamilyTag::Table, density, Some(primitive), None)
    }

    /// Custom construction from a density and an optional closed primitive.
    pub fn from_density<D, P>(name: &str, density: D, primitive: Option<P>) -> Result<Self>
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_parts(
            FamilyTag::Derived(name.to_string()),
            Arc::new(density),
            primitive.map(|p| Arc::new(p) as ScalarFn),
            None,
        )
    }

    /// Parse a family specification string.
    ///
    /// Accepted forms: `power:p=<x>`, `purepower:p=<x>`, `powerlog:p=<x>`,
    /// `lloglt`, `exp`, `table:<path>` (two-column CSV of t, g(t)).
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "lloglt" {
            return Ok(Self::l_log_l());
        }
        if spec == "exp" {
            return Ok(Self::exp_growth());
        }
        if let Some(rest) = spec.strip_prefix("table:") {
            let text = std::fs::read_to_string(rest)
                .map_err(|e| Error::Config(format!("cannot read table {rest}: {e}")))?;
            let mut ts = Vec::new();
            let mut gs = Vec::new();
            for (ln, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with("t,") {
                    continue;
                }
                let mut it = line.split(',');
                let t: f64 = it
                    .next()
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad table row {}", ln + 1)))?;
                let g: f64 = it
                    .next()
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad table row {}", ln + 1)))?;
                ts.push(t);
                gs.push(g);
            }
            return Self::from_table(ts, gs);
        }
        let parse_p = |rest: &str, what: &str| -> Result<f64> {
            rest.strip_prefix("p=")
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("unknown {what} spec: expected p=<num>")))
        };
        if let Some(rest) = spec.strip_prefix("power:") {
            return Self::power(parse_p(rest, "power")?);
        }
        if let Some(rest) = spec.strip_prefix("purepower:") {
            return Self::pure_power(parse_p(rest, "purepower")?);
        }
        if let Some(rest) = spec.strip_prefix("powerlog:") {
            return Self::power_log(parse_p(rest, "powerlog")?);
        }
        Err(Error::Config(format!("unknown Young family spec: {spec}")))
    }

    fn validate(&self) -> Result<()> {
        let g = &self.inner.density;
        let g0 = g(0.0);
        if !(g0.abs() <= 1e-9 * g(1.0).abs().max(1.0)) {
            return Err(Error::InvalidYoung(format!("density g(0) = {g0}, not 0")));
        }
        let mut prev = 0.0;
        for k in 0..=160 {
            let t = 10f64.powf(-8.0 + 0.1 * k as f64);
            let v = g(t);
            if !v.is_finite() && t < 1e2 {
                return Err(Error::InvalidYoung(format!("density not finite at t={t}")));
            }
            if v.is_finite() {
                if v <= 0.0 {
                    return Err(Error::InvalidYoung(format!(
                        "density not positive at t={t}"
                    )));
                }
                if v < prev * (1.0 - 1e-12) {
                    return Err(Error::InvalidYoung(format!("density decreases at t={t}")));
                }
                prev = v;
            }
        }
        let e0 = self.eval(0.0)?;
        if e0.abs() > 1e-12 {
            return Err(Error::InvalidYoung(format!("G(0) = {e0}, not 0")));
        }
        Ok(())
    }

    pub fn tag(&self) -> &FamilyTag {
        &self.inner.tag
    }

    pub fn describe(&self) -> String {
        self.inner.tag.to_string()
    }

    /// True if a generalized-inverse search hit its ceiling.
    pub fn saturated(&self) -> bool {
        self.inner.notes.saturated.load(Ordering::Relaxed)
    }

    /// True if a tabulated primitive was evaluated beyond its table.
    pub fn extrapolated(&self) -> bool {
        self.inner.notes.extrapolated.load(Ordering::Relaxed)
    }

    /// G(t). Exact for closed-form families, adaptive quadrature otherwise.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::Domain(format!("G argument must be >= 0, got {t}")));
        }
        Ok(self.eval_unchecked(t))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, t: f64) -> f64 {
        match &self.inner.primitive {
            Some(p) => p(t),
            None => {
                if t == 0.0 {
                    0.0
                } else {
                    adaptive_simpson(&|x| (self.inner.density)(x), 0.0, t, PRIM_REL_TOL)
                }
            }
        }
    }

    /// The density g(t).
    pub fn density(&self, t: f64) -> Result<f64> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::Domain(format!("g argument must be >= 0, got {t}")));
        }
        Ok((self.inner.density)(t))
    }

    #[inline]
    pub(crate) fn density_unchecked(&self, t: f64) -> f64 {
        (self.inner.density)(t)
    }

    /// t with G(t) = y, by bisection on the strictly increasing primitive.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if y < 0.0 || !y.is_finite() {
            return Err(Error::Domain(format!(
                "G^-1 argument must be >= 0, got {y}"
            )));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        if let Some(inv) = &self.inner.primitive_inv {
            return Ok(inv(y));
        }
        let mut hi = 1.0;
        let mut n = 0;
        while self.eval_unchecked(hi) < y {
            hi *= 2.0;
            n += 1;
            if n > 1100 {
                return Err(Error::Evaluation(format!("G never reaches {y}")));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let v = self.eval_unchecked(mid);
            if (v - y).abs() <= 1e-12 * y.max(1.0) {
                return Ok(mid);
            }
            if v < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// inf and sup of t·g(t)/G(t) over a log-uniform sample of [t_lo, t_hi].
    ///
    /// The sampled inf over-approximates the true p⁻ and the sampled sup
    /// under-approximates the true p⁺.
    pub fn estimate_indices(&self, t_lo: f64, t_hi: f64, samples: usize) -> Result<OrliczIndices> {
        if !(t_lo > 0.0 && t_hi > t_lo) {
            return Err(Error::Domain(format!(
                "index window needs 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]"
            )));
        }
        if samples < 100 {
            return Err(Error::Domain(format!(
                "index estimation needs >= 100 samples, got {samples}"
            )));
        }
        let lr = (t_hi / t_lo).ln();
        let mut p_minus = f64::INFINITY;
        let mut p_plus = f64::NEG_INFINITY;
        let mut at = (f64::NAN, f64::NAN);
        let mut used = 0usize;
        for k in 0..samples {
            let t = t_lo * (lr * k as f64 / (samples - 1) as f64).exp();
            let big = self.eval_unchecked(t);
            if !(big.is_finite() && big > 1e-300) {
                continue;
            }
            let ratio = t * self.density_unchecked(t) / big;
            if !ratio.is_finite() {
                continue;
            }
            used += 1;
            if ratio < p_minus {
                p_minus = ratio;
                at.0 = t;
            }
            if ratio > p_plus {
                p_plus = ratio;
                at.1 = t;
            }
        }
        if used == 0 {
            return Err(Error::Evaluation(
                "index ratio undefined at every sample".into(),
            ));
        }
        Ok(OrliczIndices {
            p_minus,
            p_plus,
            attained_at: at,
        })
    }

    /// Indices over the default window [1e-6, 1e6], cached.
    pub fn indices(&self) -> OrliczIndices {
        *self.inner.indices.get_or_init(|| {
            self.estimate_indices(INDEX_WINDOW.0, INDEX_WINDOW.1, INDEX_WINDOW.2)
                .expect("default index window")
        })
    }

    /// Generalized inverse density g̃(t) = sup{s : g(s) ≤ t}.
    ///
    /// Computed by bisection on the monotone density with the sup (right
    /// endpoint) convention on plateaus; searches are capped at `ceiling`
    /// and saturation is recorded on the notes flag.
    pub fn density_general_inverse(&self, t: f64, ceiling: f64) -> f64 {
        let g = &self.inner.density;
        if t <= 0.0 || g(f64::MIN_POSITIVE) > t {
            // level set is {0} (or empty up to right-continuity)
            if g(1e-300) > t {
                return 0.0;
            }
        }
        if g(ceiling) <= t {
            self.inner.notes.saturated.store(true, Ordering::Relaxed);
            return ceiling;
        }
        let mut lo = 0.0;
        let mut hi = ceiling;
        for _ in 0..200 {
            if hi - lo <= 1e-14 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if g(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// The complementary Young function G̃, built from the generalized
    /// inverse density. Cached; see `complement_with_ceiling` for the knob.
    pub fn complement(&self) -> &YoungFunction {
        self.inner
            .complement
            .get_or_init(|| Box::new(self.complement_with_ceiling(DEFAULT_GINV_CEILING)))
    }

    /// The complementary Young function with an explicit search ceiling.
    ///
    /// The primitive is evaluated through the conjugacy identity
    /// G̃(t) = t·g̃(t) − G(g̃(t)), which is exact at the bisected maximizer.
    pub fn complement_with_ceiling(&self, ceiling: f64) -> YoungFunction {
        let parent = self.clone();
        let density: ScalarFn =
            Arc::new(move |t: f64| parent.density_general_inverse(t, ceiling));
        let parent2 = self.clone();
        let primitive: ScalarFn = Arc::new(move |t: f64| {
            if t == 0.0 {
                return 0.0;
            }
            let w = parent2.density_general_inverse(t, ceiling);
            (t * w - parent2.eval_unchecked(w)).max(0.0)
        });
        YoungFunction {
            inner: Arc::new(Inner {
                tag: FamilyTag::Derived(format!("complement({})", self.inner.tag)),
                density,
                primitive: Some(primitive),
                primitive_inv: None,
                notes: Notes::default(),
                indices: OnceLock::new(),
                complement: OnceLock::new(),
            }),
        }
    }

    /// Young inequality defect G(a) + G̃(b) − a·b; non-negative up to
    /// numerical tolerance, zero exactly at b = g(a).
    pub fn young_gap(&self, a: f64, b: f64) -> Result<f64> {
        if a < 0.0 || b < 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!(
                "young_gap needs a, b >= 0, got ({a}, {b})"
            )));
        }
        Ok(self.eval_unchecked(a) + self.complement().eval_unchecked(b) - a * b)
    }

    /// Sampled sup of G(2t)/G(t) over [t_lo, t_hi] and whether it stayed
    /// under the unboundedness cap.
    pub fn delta2_sup(&self, t_lo: f64, t_hi: f64) -> Result<Delta2Report> {
        if !(t_lo > 0.0 && t_hi > t_lo) {
            return Err(Error::Domain(format!(
                "Δ₂ window needs 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]"
            )));
        }
        let n = 2048;
        let lr = (t_hi / t_lo).ln();
        let mut sup = 0.0;
        let mut witness = t_lo;
        for k in 0..n {
            let t = t_lo * (lr * k as f64 / (n - 1) as f64).exp();
            let lo = self.eval_unchecked(t);
            let hi = self.eval_unchecked(2.0 * t);
            if lo > 0.0 && hi.is_finite() {
                let r = hi / lo;
                if r > sup {
                    sup = r;
                    witness = t;
                }
            } else if !hi.is_finite() {
                sup = f64::INFINITY;
                witness = t;
                break;
            }
        }
        Ok(Delta2Report {
            bounded: sup <= DELTA2_CAP,
            sup,
            witness,
        })
    }

    /// Is t ↦ G(√t) convex on a uniform sample of [t_lo, t_hi]?
    ///
    /// Checked through second differences with a -1e-10 slack scaled by the
    /// local magnitude.
    pub fn is_sqrt_convex(&self, t_lo: f64, t_hi: f64) -> Result<bool> {
        if !(t_lo >= 0.0 && t_hi > t_lo) {
            return Err(Error::Domain(format!(
                "convexity window needs 0 <= t_lo < t_hi, got [{t_lo}, {t_hi}]"
            )));
        }
        let n = 1024;
        let h = (t_hi - t_lo) / n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|k| self.eval_unchecked((t_lo + h * k as f64).sqrt()))
            .collect();
        for w in vals.windows(3) {
            let dd = w[2] - 2.0 * w[1] + w[0];
            let scale = 1.0f64.max(w[0].abs() + w[1].abs() + w[2].abs());
            if dd < -1e-10 * scale {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The Sobolev conjugate G_* for dimension `n` and fractional order `s`,
    /// obtained by inverting the quadrature of
    /// G_*⁻¹(t) = ∫₀ᵗ G⁻¹(τ) τ^{-(N+s)/N} dτ.
    ///
    /// The table is built on a log grid and interpolated monotone-cubically
    /// in log-log coordinates; evaluation outside the table continues the
    /// boundary log-log slope and sets the `extrapolated` flag.
    pub fn sobolev_conjugate(&self, n: usize, s: f64) -> Result<YoungFunction> {
        if n < 1 {
            return Err(Error::Domain("dimension must be >= 1".into()));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("fractional order s={s} not in (0,1)")));
        }
        let nf = n as f64;
        // integrability at 0 is governed by the growth index near zero
        let p0 = {
            let mut p = f64::NEG_INFINITY;
            for t in [1e-10, 1e-8, 1e-6] {
                let big = self.eval_unchecked(t);
                if big > 0.0 {
                    p = p.max(t * self.density_unchecked(t) / big);
                }
            }
            p
        };
        if !(nf > s * p0) {
            return Err(Error::Precondition(format!(
                "Sobolev conjugate undefined: integral of G^-1(τ) τ^(-(N+s)/N) diverges near 0 \
                 (N = {n}, s = {s}, near-zero index ≈ {p0:.4})"
            )));
        }
        // integrate (N/s) G^-1(σ^{N/s}) σ^{-2} dσ cumulatively on a log grid
        let pow = nf / s;
        let integrand = |sigma: f64| -> f64 {
            if sigma <= 0.0 {
                return 0.0;
            }
            let tau = sigma.powf(pow);
            match self.invert(tau) {
                Ok(ginv) => pow * ginv / (sigma * sigma),
                Err(_) => f64::NAN,
            }
        };
        let sigma_min = 1e-14f64.powf(s / nf);
        // head [0, sigma_min]: one more power substitution flattens the
        // possibly singular-but-integrable endpoint
        let alpha = nf / (s * p0) - 2.0;
        let gamma = (2.0 / (1.0 + alpha)).max(1.0);
        let (gx, gw) = gauss_legendre(32);
        let mut head = 0.0;
        for (x, w) in gx.iter().zip(&gw) {
            let z = 0.5 * (x + 1.0);
            let sigma = sigma_min * z.powf(gamma);
            head += w * 0.5 * integrand(sigma) * gamma * sigma_min * z.powf(gamma - 1.0);
        }
        let x_need = 1e5;
        let per_decade = 160usize;
        let ratio = 10f64.powf(1.0 / per_decade as f64);
        let (px, pw) = gauss_legendre(8);
        let mut xs = Vec::with_capacity(4096);
        let mut taus = Vec::with_capacity(4096);
        let mut acc = head;
        let mut sigma = sigma_min;
        xs.push(acc);
        taus.push(sigma.powf(pow));
        let mut stall = 0usize;
        for _ in 0..6000 {
            let next = sigma * ratio;
            let mid = 0.5 * (sigma + next);
            let half = 0.5 * (next - sigma);
            let mut panel = 0.0;
            for (x, w) in px.iter().zip(&pw) {
                panel += w * integrand(mid + half * x);
            }
            panel *= half;
            if !panel.is_finite() {
                return Err(Error::Evaluation(
                    "Sobolev conjugate integrand not finite".into(),
                ));
            }
            if panel <= acc * 1e-14 {
                stall += 1;
                if stall > 2 * per_decade {
                    return Err(Error::Precondition(
                        "Sobolev conjugate table stalled: the upper integral of \
                         G^-1(τ) τ^(-(N+s)/N) appears to converge"
                            .into(),
                    ));
                }
            } else {
                stall = 0;
            }
            acc += panel;
            sigma = next;
            xs.push(acc);
            taus.push(sigma.powf(pow));
            if acc >= x_need && taus.last().unwrap() >= &1e8 {
                break;
            }
        }
        let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
        let lt: Vec<f64> = taus.iter().map(|v| v.ln()).collect();
        let table = Arc::new(MonotoneCubic::new(lx, lt)?);
        let notes = Notes::default();
        let yf_notes = Arc::new(notes);
        let (t_lo, t_hi) = (xs[0], *xs.last().unwrap());
        let table_g = table.clone();
        let flag = yf_notes.clone();
        let gstar = move |x: f64| -> f64 {
            if x <= 0.0 {
                return 0.0;
            }
            let lx = x.ln();
            if x < t_lo || x > t_hi {
                flag.extrapolated.store(true, Ordering::Relaxed);
            }
            table_g.eval(lx).exp()
        };
        let gstar_arc: ScalarFn = Arc::new(gstar);
        let gstar_for_density = gstar_arc.clone();
        let parent = self.clone();
        let expo = (nf + s) / nf;
        let density: ScalarFn = Arc::new(move |x: f64| {
            if x <= 0.0 {
                return 0.0;
            }
            let tau = gstar_for_density(x);
            match parent.invert(tau) {
                Ok(ginv) if ginv > 0.0 => tau.powf(expo) / ginv,
                _ => 0.0,
            }
        });
        Ok(YoungFunction {
            inner: Arc::new(Inner {
                tag: FamilyTag::Derived(format!("sobolev_conjugate({}, N={n}, s={s})", self.inner.tag)),
                density,
                primitive: Some(gstar_arc),
                primitive_inv: None,
                notes: Notes {
                    saturated: AtomicBool::new(false),
                    extrapolated: AtomicBool::new(
                        yf_notes.extrapolated.load(Ordering::Relaxed),
                    ),
                },
                indices: OnceLock::new(),
                complement: OnceLock::new(),
            }),
        })
    }

    /// Fitted log-log slope of G over [t_lo, t_hi].
    pub fn log_log_slope(&self, t_lo: f64, t_hi: f64, samples: usize) -> f64 {
        let lr = (t_hi / t_lo).ln();
        let mut xs = Vec::with_capacity(samples);
        let mut ys = Vec::with_capacity(samples);
        for k in 0..samples {
            let t = t_lo * (lr * k as f64 / (samples - 1) as f64).exp();
            let v = self.eval_unchecked(t);
            if v > 0.0 && v.is_finite() {
                xs.push(t.ln());
                ys.push(v.ln());
            }
        }
        ls_slope(&xs, &ys)
    }
}

/// Result of the sampled Δ₂ check.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Delta2Report {
    pub bounded: bool,
    pub sup: f64,
    pub witness: f64,
}

/// Finite surrogate for A ≺≺ B: for every λ the sampled ratio A(λt)/B(t)
/// must be non-increasing over the last two decades up to `t_cap`, and
/// either fall below 1e-3 at t_cap or lose at least 10% over the window
/// (log-type ratios vanish too slowly for an absolute threshold alone).
pub fn essentially_stronger(
    a: &YoungFunction,
    b: &YoungFunction,
    lambdas: &[f64],
    t_cap: f64,
) -> Result<bool> {
    if lambdas.is_empty() {
        return Err(Error::Domain("essentially_stronger needs lambdas".into()));
    }
    if !(t_cap > 100.0) {
        return Err(Error::Domain(format!("t_cap must be large, got {t_cap}")));
    }
    let pts = 17usize;
    for &lam in lambdas {
        if !(lam > 0.0) {
            return Err(Error::Domain(format!("lambda must be > 0, got {lam}")));
        }
        let mut ratios = Vec::with_capacity(pts);
        for k in 0..pts {
            let t = t_cap / 100.0 * (100f64.powf(k as f64 / (pts - 1) as f64));
            let num = a.eval_unchecked(lam * t);
            let den = b.eval_unchecked(t);
            if !(num.is_finite() && den.is_finite() && den > 0.0) {
                return Ok(false);
            }
            ratios.push(num / den);
        }
        let monotone = ratios
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
        let last = *ratios.last().unwrap();
        let vanishing = last < 1e-3 || last <= 0.9 * ratios[0];
        if !(monotone && vanishing) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn eval_closed_forms() {
        let g = YoungFunction::power(2.0).unwrap(); // t^2/2
        assert_eq!(g.eval(2.0).unwrap(), 2.0);
        assert_eq!(g.eval(0.0).unwrap(), 0.0);
        assert!(g.eval(-1.0).is_err());
    }

    #[test]
    fn eval_quadrature_matches_closed_form() {
        // density of t log(1+t) without its closed primitive
        let g = YoungFunction::from_density(
            "llog-quad",
            |t: f64| (1.0 + t).ln() + t / (1.0 + t),
            None::<fn(f64) -> f64>,
        )
        .unwrap();
        let exact = 2f64.ln();
        assert!(rel_err(g.eval(1.0).unwrap(), exact) < 1e-10);
        let closed = YoungFunction::l_log_l();
        for t in [0.1, 0.5, 3.0, 20.0] {
            assert!(rel_err(g.eval(t).unwrap(), closed.eval(t).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn invert_round_trips() {
        let g = YoungFunction::pure_power(2.0).unwrap();
        assert!((g.invert(4.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(g.invert(0.0).unwrap(), 0.0);
        let llog = YoungFunction::l_log_l();
        assert!((llog.invert(2f64.ln()).unwrap() - 1.0).abs() < 1e-10);
        // identity on [0, 100]
        for k in 0..=20 {
            let t = 5.0 * k as f64;
            let y = llog.eval(t).unwrap();
            assert!((llog.invert(y).unwrap() - t).abs() <= 1e-9 * t.max(1.0));
        }
    }

    #[test]
    fn indices_of_powers_are_exact() {
        for p in [1.5, 2.0, 3.0] {
            let g = YoungFunction::power(p).unwrap();
            let idx = g.estimate_indices(1e-6, 1e6, 200).unwrap();
            assert!((idx.p_minus - p).abs() < 1e-12);
            assert!((idx.p_plus - p).abs() < 1e-12);
        }
        let g = YoungFunction::pure_power(3.0).unwrap();
        let idx = g.indices();
        assert!((idx.p_minus - 3.0).abs() < 1e-12 && (idx.p_plus - 3.0).abs() < 1e-12);
    }

    #[test]
    fn indices_of_l_log_l() {
        let g = YoungFunction::l_log_l();
        let idx = g.estimate_indices(1e-6, 1e6, 10_000).unwrap();
        assert!(idx.p_minus >= 1.0 && idx.p_minus <= 1.01, "{}", idx.p_minus);
        assert!(idx.p_plus <= 2.0 && idx.p_plus >= 1.99, "{}", idx.p_plus);
        // extremes attained at the window ends: ratio decreases from 2 to 1
        assert!(idx.attained_at.0 > 1e5);
        assert!(idx.attained_at.1 < 1e-5);
    }

    #[test]
    fn complement_of_quadratic_is_self_dual() {
        let g = YoungFunction::power(2.0).unwrap();
        let c = g.complement();
        for t in [0.0, 0.3, 1.0, 4.0, 9.0] {
            assert!(rel_err(c.eval(t).unwrap(), t * t / 2.0) < 1e-10);
        }
    }

    #[test]
    fn complement_matches_direct_maximization() {
        // oracle: brute-force sup over a fine w grid, then golden refinement
        let oracle = |g: &YoungFunction, t: f64| -> f64 {
            let mut best = 0.0;
            let mut best_w = 0.0;
            for k in 0..=40_000 {
                let w = k as f64 * 2.5e-4 * 40.0; // w in [0, 400]
                let v = t * w - g.eval(w).unwrap();
                if v > best {
                    best = v;
                    best_w = w;
                }
            }
            let (mut lo, mut hi) = ((best_w - 0.02).max(0.0), best_w + 0.02);
            for _ in 0..200 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                let f1 = t * m1 - g.eval(m1).unwrap();
                let f2 = t * m2 - g.eval(m2).unwrap();
                if f1 < f2 {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            let w = 0.5 * (lo + hi);
            t * w - g.eval(w).unwrap()
        };
        let g = YoungFunction::power(3.0).unwrap(); // complement is t^{3/2}/(3/2)
        let c = g.complement();
        for t in [0.25f64, 1.0, 2.0, 5.0] {
            let expect = t.powf(1.5) / 1.5;
            assert!(rel_err(c.eval(t).unwrap(), expect) < 1e-8);
            assert!(rel_err(c.eval(t).unwrap(), oracle(&g, t)) < 1e-8);
        }
        let llog = YoungFunction::l_log_l();
        for t in [0.2, 0.9, 2.0] {
            assert!(rel_err(llog.complement().eval(t).unwrap(), oracle(&llog, t)) < 1e-7);
        }
    }

    #[test]
    fn complement_is_an_involution() {
        for g in [
            YoungFunction::l_log_l(),
            YoungFunction::power(3.0).unwrap(),
            YoungFunction::power(1.5).unwrap(),
        ] {
            let cc = g.complement().complement();
            for k in 0..=40 {
                let t = 0.25 * k as f64;
                let err = (cc.eval(t).unwrap() - g.eval(t).unwrap()).abs();
                assert!(
                    err <= 1e-6 * g.eval(t).unwrap().max(1.0),
                    "involution off by {err} at t={t} for {:?}",
                    g
                );
            }
        }
    }

    #[test]
    fn complement_density_integral_matches_conjugacy_primitive() {
        // two routes to G̃: ∫ g̃ by quadrature vs the conjugacy identity
        let g = YoungFunction::l_log_l();
        let c = g.complement();
        for t in [0.5, 1.0, 2.5] {
            let by_quad = adaptive_simpson(&|x| c.density_unchecked(x), 0.0, t, 1e-9);
            assert!(rel_err(c.eval(t).unwrap(), by_quad) < 1e-7);
        }
    }

    #[test]
    fn young_gap_examples() {
        let g2 = YoungFunction::power(2.0).unwrap();
        assert!(g2.young_gap(1.0, 1.0).unwrap().abs() < 1e-10);
        assert!(g2.young_gap(0.0, 0.0).unwrap().abs() < 1e-12);
        let g3 = YoungFunction::power(3.0).unwrap();
        let gap = g3.young_gap(2.0, 1.0).unwrap();
        assert!((gap - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn delta2_examples() {
        let g = YoungFunction::pure_power(2.5).unwrap();
        let rep = g.delta2_sup(0.01, 100.0).unwrap();
        assert!(rep.bounded);
        assert!(rel_err(rep.sup, 2f64.powf(2.5)) < 1e-9);
        let e = YoungFunction::exp_growth();
        let rep = e.delta2_sup(0.1, 50.0).unwrap();
        assert!(!rep.bounded);
        assert!(rep.witness > 10.0);
        let l = YoungFunction::l_log_l();
        let rep = l.delta2_sup(1e-4, 1e6).unwrap();
        assert!(rep.bounded && rep.sup <= 4.0 + 1e-9);
    }

    #[test]
    fn sqrt_convexity() {
        assert!(YoungFunction::pure_power(2.0)
            .unwrap()
            .is_sqrt_convex(0.0, 10.0)
            .unwrap());
        assert!(YoungFunction::pure_power(4.0)
            .unwrap()
            .is_sqrt_convex(0.0, 10.0)
            .unwrap());
        assert!(!YoungFunction::pure_power(1.5)
            .unwrap()
            .is_sqrt_convex(0.0, 10.0)
            .unwrap());
    }

    #[test]
    fn essentially_stronger_examples() {
        let t2 = YoungFunction::pure_power(2.0).unwrap();
        let t3 = YoungFunction::pure_power(3.0).unwrap();
        let lam = [0.5, 1.0, 2.0];
        assert!(essentially_stronger(&t2, &t3, &lam, 1e6).unwrap());
        assert!(!essentially_stronger(&t3, &t2, &lam, 1e6).unwrap());
        let t2log = YoungFunction::power_log(2.0).unwrap();
        assert!(essentially_stronger(&t2, &t2log, &lam, 1e6).unwrap());
        // a function is never essentially stronger than itself
        assert!(!essentially_stronger(&t2, &t2, &lam, 1e6).unwrap());
    }

    #[test]
    fn sobolev_conjugate_slope_for_quadratic() {
        let g = YoungFunction::pure_power(2.0).unwrap();
        let gs = g.sobolev_conjugate(3, 0.5).unwrap();
        // exact conjugate here is x^3/27
        let slope = gs.log_log_slope(10.0, 1e4, 60);
        assert!((slope - 3.0).abs() < 0.05, "slope {slope}");
        assert!(rel_err(gs.eval(30.0).unwrap(), 1000.0) < 1e-3);
        assert!((gs.invert(0.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sobolev_conjugate_slope_three_halves() {
        let g = YoungFunction::pure_power(1.5).unwrap();
        let gs = g.sobolev_conjugate(2, 0.5).unwrap();
        let slope = gs.log_log_slope(10.0, 1e4, 60);
        assert!((slope - 2.4).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn sobolev_conjugate_rejects_supercritical_window() {
        let g = YoungFunction::pure_power(2.0).unwrap();
        let err = g.sobolev_conjugate(1, 0.6).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn table_family_round_trip() {
        // tabulated density of t^2 (g = 2t)
        let ts: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let gs: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
        let g = YoungFunction::from_table(ts, gs).unwrap();
        for t in [0.3, 1.0, 5.0, 9.9] {
            assert!(rel_err(g.eval(t).unwrap(), t * t) < 1e-12);
        }
        // beyond the table: quadratic continuation with the last slope
        assert!(rel_err(g.eval(20.0).unwrap(), 400.0) < 1e-9);
    }

    #[test]
    fn parse_family_strings() {
        assert!(matches!(
            YoungFunction::parse("power:p=2").unwrap().tag(),
            FamilyTag::Power { .. }
        ));
        assert!(matches!(
            YoungFunction::parse("lloglt").unwrap().tag(),
            FamilyTag::LLogL
        ));
        assert!(YoungFunction::parse("power:p=0.5").is_err());
        assert!(YoungFunction::parse("nope").is_err());
    }
}
