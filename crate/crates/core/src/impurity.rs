//! Impurity criteria and exact purity-gain computation.
//!
//! An impurity function `G : [0,1] -> [0,1]` is concave, symmetric about
//! 1/2, with `G(0) = G(1) = 0` and `G(1/2) = 1`.  The purity gain of
//! querying `x_i` on target `f` under distribution `D` is
//!
//! ```text
//! G(E[f]) - p_i G(E[f_{x_i=1}]) - (1 - p_i) G(E[f_{x_i=0}])
//! ```
//!
//! For a `(alpha, L)`-impurity (`-G''` within `[alpha, L]`) on a
//! delta-balanced product distribution, the gain-to-squared-difference
//! ratio `gain / (E[f_{x_i=0}] - E[f_{x_i=1}])^2` lies in `[1/kappa, kappa]`
//! with `kappa = max(2 / (alpha delta (1 - delta)), L / 8)`.

use serde::{Deserialize, Serialize};

use crate::dist::ProductDistribution;
use crate::restriction::Restriction;
use crate::targets::TargetFunction;
use crate::{Error, Result, GAIN_TOL};

/// Squared differences at or below this floor count as "no separation".
pub const SQ_DIFF_FLOOR: f64 = 1e-12;
/// Slack applied to the `[1/kappa, kappa]` ratio band.
pub const RATIO_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpurityKind {
    Gini,
    Entropy,
    /// Kearns--Mansour square-root criterion `2 sqrt(p(1-p))`.
    Km,
}

/// A concave split criterion with its strong-concavity/smoothness bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpurityFunction {
    kind: ImpurityKind,
    alpha: f64,
    /// `None` means `-G''` is unbounded near the endpoints.
    smoothness: Option<f64>,
}

impl ImpurityFunction {
    /// `G(p) = 4 p (1 - p)`; `-G'' = 8` everywhere.
    pub fn gini() -> Self {
        ImpurityFunction { kind: ImpurityKind::Gini, alpha: 8.0, smoothness: Some(8.0) }
    }

    /// Binary entropy; `-G'' = 1 / (ln2 p (1-p))`, minimized at 4/ln2.
    pub fn entropy() -> Self {
        ImpurityFunction {
            kind: ImpurityKind::Entropy,
            alpha: 4.0 / std::f64::consts::LN_2,
            smoothness: None,
        }
    }

    /// `G(p) = 2 sqrt(p (1-p))`; `-G''` is minimized at 4 and unbounded.
    pub fn km() -> Self {
        ImpurityFunction { kind: ImpurityKind::Km, alpha: 4.0, smoothness: None }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "gini" => Ok(Self::gini()),
            "entropy" => Ok(Self::entropy()),
            "km" => Ok(Self::km()),
            other => Err(Error::UnknownImpurity(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ImpurityKind::Gini => "gini",
            ImpurityKind::Entropy => "entropy",
            ImpurityKind::Km => "km",
        }
    }

    pub fn kind(&self) -> ImpurityKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn smoothness(&self) -> Option<f64> {
        self.smoothness
    }

    /// Whether `-G''` is bounded on all of `[0, 1]`.
    pub fn has_finite_bounds(&self) -> bool {
        self.smoothness.is_some()
    }

    pub fn eval(&self, p: f64) -> f64 {
        debug_assert!((-1e-9..=1.0 + 1e-9).contains(&p), "impurity input {p}");
        let p = p.clamp(0.0, 1.0);
        match self.kind {
            ImpurityKind::Gini => 4.0 * p * (1.0 - p),
            ImpurityKind::Entropy => {
                if p == 0.0 || p == 1.0 {
                    0.0
                } else {
                    -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
                }
            }
            ImpurityKind::Km => 2.0 * (p * (1.0 - p)).sqrt(),
        }
    }

    pub fn kappa(&self, delta: f64) -> Result<Kappa> {
        let l = self
            .smoothness
            .ok_or_else(|| Error::InfiniteSmoothness(self.name().to_string()))?;
        Kappa::new(self.alpha, l, delta)
    }

    /// Substitute curvature bounds measured by central differences on a
    /// grid over `[lo, hi]`, for criteria whose global bounds are infinite.
    pub fn with_grid_bounds(&self, lo: f64, hi: f64, step: f64) -> Result<Self> {
        let report = certify_curvature_on(self, lo, hi, step)?;
        Ok(ImpurityFunction {
            kind: self.kind,
            alpha: report.min_neg_second,
            smoothness: Some(report.max_neg_second),
        })
    }
}

/// All built-in criteria: gini, entropy, km.
pub fn builtin_impurities() -> Vec<ImpurityFunction> {
    vec![ImpurityFunction::gini(), ImpurityFunction::entropy(), ImpurityFunction::km()]
}

/// `kappa = max(2 / (alpha delta (1-delta)), L / 8)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kappa {
    pub value: f64,
}

impl Kappa {
    pub fn new(alpha: f64, smoothness: f64, delta: f64) -> Result<Kappa> {
        if !(alpha > 0.0 && smoothness >= alpha) {
            return Err(Error::InvalidSpec(format!(
                "need 0 < alpha <= L, got alpha = {alpha}, L = {smoothness}"
            )));
        }
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidSpec(format!("delta must lie in (0, 1/2], got {delta}")));
        }
        Ok(Kappa { value: (2.0 / (alpha * delta * (1.0 - delta))).max(smoothness / 8.0) })
    }
}

/// Purity gain of querying `x_i` on `f` under `d` (Definition of the split
/// score used by the greedy heuristics).
pub fn purity_gain(
    f: &TargetFunction,
    d: &ProductDistribution,
    imp: &ImpurityFunction,
    i: usize,
) -> Result<f64> {
    purity_gain_under(f, &Restriction::empty(), d, imp, i)
}

/// Purity gain of `x_i` on the restricted target `f_pi`.
///
/// Re-querying a variable already fixed by `pi` has gain 0 by convention.
pub fn purity_gain_under(
    f: &TargetFunction,
    pi: &Restriction,
    d: &ProductDistribution,
    imp: &ImpurityFunction,
    i: usize,
) -> Result<f64> {
    if i >= f.arity() {
        return Err(Error::ArityMismatch { expected: f.arity(), got: i + 1 });
    }
    if pi.contains(i) {
        return Ok(0.0);
    }
    let e = f.expectation(d, pi)?;
    let e0 = f.expectation(d, &pi.extended(i, false)?)?;
    let e1 = f.expectation(d, &pi.extended(i, true)?)?;
    let p = d.bias(i);
    Ok(imp.eval(e) - p * imp.eval(e1) - (1.0 - p) * imp.eval(e0))
}

/// The gain, the squared mean difference, and whether their ratio sits in
/// the `[1/kappa, kappa]` band (with the zero-separation convention).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GainRatio {
    pub gain: f64,
    pub sq_diff: f64,
    pub kappa: Kappa,
    pub ratio_ok: bool,
}

pub fn gain_ratio_bounds(
    f: &TargetFunction,
    d: &ProductDistribution,
    imp: &ImpurityFunction,
    i: usize,
) -> Result<GainRatio> {
    let kappa = imp.kappa(d.delta())?;
    let gain = purity_gain(f, d, imp, i)?;
    let e0 = f.expectation(d, &Restriction::fixing(i, false))?;
    let e1 = f.expectation(d, &Restriction::fixing(i, true))?;
    let sq_diff = (e0 - e1) * (e0 - e1);
    let ratio_ok = if sq_diff <= SQ_DIFF_FLOOR {
        gain <= GAIN_TOL
    } else {
        let r = gain / sq_diff;
        r >= 1.0 / kappa.value - RATIO_TOL && r <= kappa.value + RATIO_TOL
    };
    Ok(GainRatio { gain, sq_diff, kappa, ratio_ok })
}

/// Curvature of `G` measured by central second differences on a grid.
#[derive(Clone, Copy, Debug)]
pub struct CurvatureReport {
    pub min_neg_second: f64,
    pub max_neg_second: f64,
    pub alpha_ok: bool,
    pub smoothness_ok: bool,
}

/// Certifies `alpha <= -G'' (<= L)` on the default grid over `(0, 1)` with
/// step `1e-4`.
pub fn certify_curvature(imp: &ImpurityFunction) -> Result<CurvatureReport> {
    certify_curvature_on(imp, 0.0, 1.0, 1e-4)
}

pub fn certify_curvature_on(
    imp: &ImpurityFunction,
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<CurvatureReport> {
    if !(step > 0.0 && lo >= 0.0 && hi <= 1.0 && lo < hi) {
        return Err(Error::InvalidSpec(format!("bad curvature grid [{lo}, {hi}] step {step}")));
    }
    let mut min_neg = f64::INFINITY;
    let mut max_neg = f64::NEG_INFINITY;
    let mut p = lo + step;
    while p < hi - step / 2.0 {
        let second = (imp.eval(p + step) - 2.0 * imp.eval(p) + imp.eval(p - step)) / (step * step);
        let neg = -second;
        min_neg = min_neg.min(neg);
        max_neg = max_neg.max(neg);
        p += step;
    }
    // finite differences carry O(eps / step^2) rounding noise
    let fd_tol = 1e-4;
    let alpha_ok = min_neg >= imp.alpha() - imp.alpha() * fd_tol;
    let smoothness_ok = match imp.smoothness() {
        Some(l) => max_neg <= l + l * fd_tol,
        None => true,
    };
    Ok(CurvatureReport { min_neg_second: min_neg, max_neg_second: max_neg, alpha_ok, smoothness_ok })
}
