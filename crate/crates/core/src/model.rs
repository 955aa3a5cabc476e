//! Rate-distortion mathematics for two correlated Gaussian sources.
//!
//! Rates are in bits per sample. Internally most formulas are written in terms
//! of the attenuations `x = 2^(-2 r1)` and `y = 2^(-2 r2)`, which for a rate
//! achieved at power `p` over gain `h` equal `1 / (1 + h p)`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-9;
const REGION_TOL: f64 = 1e-12;

/// Static problem instance: correlation, distortion weights and channel gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct SystemParams {
    eta: f64,
    w1: f64,
    w2: f64,
    h1: f64,
    h2: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    eta: f64,
    w1: f64,
    w2: f64,
    h1: f64,
    h2: f64,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        SystemParams::new(raw.eta, raw.w1, raw.w2, raw.h1, raw.h2)
    }
}

impl From<SystemParams> for RawParams {
    fn from(p: SystemParams) -> Self {
        RawParams { eta: p.eta, w1: p.w1, w2: p.w2, h1: p.h1, h2: p.h2 }
    }
}

impl SystemParams {
    /// Validates and builds a parameter set.
    ///
    /// Requires `0 <= eta <= 1`, `w1 + w2 = 1` with `0 < w1 < w2`, and positive
    /// gains. Callers with `w1 > w2` should relabel the nodes.
    pub fn new(eta: f64, w1: f64, w2: f64, h1: f64, h2: f64) -> Result<Self> {
        let all = [eta, w1, w2, h1, h2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("parameters must be finite".into()));
        }
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("eta = {eta} outside [0, 1]")));
        }
        if w1 <= 0.0 || w2 <= 0.0 {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        if (w1 + w2 - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter(format!("weights sum to {} instead of 1", w1 + w2)));
        }
        if w1 >= w2 {
            return Err(Error::InvalidParameter(format!(
                "w1 = {w1} must be strictly smaller than w2 = {w2}; relabel the nodes"
            )));
        }
        if h1 <= 0.0 || h2 <= 0.0 {
            return Err(Error::InvalidParameter("channel gains must be positive".into()));
        }
        Ok(SystemParams { eta, w1, w2, h1, h2 })
    }

    /// Reference parameters: eta = 0.7, w = (0.3, 0.7), h = (0.8, 0.5).
    pub fn paper_defaults() -> Self {
        SystemParams { eta: 0.7, w1: 0.3, w2: 0.7, h1: 0.8, h2: 0.5 }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn w1(&self) -> f64 {
        self.w1
    }
    pub fn w2(&self) -> f64 {
        self.w2
    }
    pub fn h1(&self) -> f64 {
        self.h1
    }
    pub fn h2(&self) -> f64 {
        self.h2
    }

    /// Gain of node 1 or 2.
    pub fn gain(&self, node: Node) -> f64 {
        match node {
            Node::One => self.h1,
            Node::Two => self.h2,
        }
    }

    /// Same parameters with a different correlation.
    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        SystemParams::new(eta, self.w1, self.w2, self.h1, self.h2)
    }
}

/// One of the two transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Node {
    One,
    Two,
}

impl Node {
    pub fn other(self) -> Node {
        match self {
            Node::One => Node::Two,
            Node::Two => Node::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Node::One => 0,
            Node::Two => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        let r = RatePair { r1, r2 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r1.is_finite() && self.r2.is_finite()) || self.r1 < 0.0 || self.r2 < 0.0 {
            return Err(Error::Domain(format!("rates ({}, {}) must be finite and >= 0", self.r1, self.r2)));
        }
        Ok(())
    }

    /// `(2^(-2 r1), 2^(-2 r2))`.
    pub fn attenuations(&self) -> (f64, f64) {
        (attenuation(self.r1), attenuation(self.r2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionPoint {
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionBounds {
    pub d1min: f64,
    pub d2min: f64,
    pub d12min: f64,
    pub d1max: f64,
    pub d2max: f64,
}

impl DistortionBounds {
    /// Bounds in terms of the attenuations `x`, `y`.
    pub fn from_attenuations(x: f64, y: f64, eta: f64) -> Self {
        let eb = 1.0 - eta;
        let xy = x * y;
        DistortionBounds {
            d1min: (eb + eta * y) * x,
            d2min: (eb + eta * x) * y,
            d12min: (eb + eta * xy) * xy,
            d1max: eb + eta * y,
            d2max: eb + eta * x,
        }
    }

    pub fn contains(&self, d1: f64, d2: f64) -> bool {
        d1 >= self.d1min - REGION_TOL
            && d2 >= self.d2min - REGION_TOL
            && d1 * d2 >= self.d12min - REGION_TOL
            && d1 <= self.d1max + REGION_TOL
            && d2 <= self.d2max + REGION_TOL
    }
}

/// Which part of the region boundary holds the weighted-sum optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Tangent point on the hyperbola `d1 d2 = d12min`.
    Curve,
    /// Corner `(d12min / d2min, d2min)`.
    CornerD,
    /// Corner `(d1min, d12min / d1min)`.
    CornerC,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedDistortion {
    pub value: f64,
    pub point: DistortionPoint,
    pub branch: Branch,
}

/// `2^(-2 r)`.
pub fn attenuation(r: f64) -> f64 {
    (-2.0 * r * LN_2).exp()
}

/// `1 / (1 + h p)`, the attenuation reached at power `p`.
pub fn attenuation_at_power(p: f64, h: f64) -> f64 {
    1.0 / (1.0 + h * p)
}

/// `½ log2(1 + h p)`.
pub fn channel_rate(p: f64, h: f64) -> Result<f64> {
    if !p.is_finite() || p < 0.0 {
        return Err(Error::Domain(format!("power {p} must be finite and >= 0")));
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Domain(format!("gain {h} must be positive")));
    }
    Ok((h * p).ln_1p() / (2.0 * LN_2))
}

/// Inverse of [`channel_rate`]: `(2^(2 r) - 1) / h`.
pub fn power_for_rate(r: f64, h: f64) -> Result<f64> {
    if !r.is_finite() || r < 0.0 {
        return Err(Error::Domain(format!("rate {r} must be finite and >= 0")));
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::Domain(format!("gain {h} must be positive")));
    }
    Ok((2.0 * r * LN_2).exp_m1() / h)
}

pub fn distortion_bounds(r: RatePair, eta: f64) -> Result<DistortionBounds> {
    r.validate()?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta = {eta} outside [0, 1]")));
    }
    let (x, y) = r.attenuations();
    Ok(DistortionBounds::from_attenuations(x, y, eta))
}

/// Rate `g(r1)` separating the curve optimum (`r2 >= g`) from corner D (`r2 < g`).
pub fn g_threshold(r1: f64, params: &SystemParams) -> Result<f64> {
    if !r1.is_finite() || r1 < 0.0 {
        return Err(Error::Domain(format!("rate {r1} must be finite and >= 0")));
    }
    branch_threshold_raw(r1, params.eta, params.w1, params.w2)
}

/// [`g_threshold`] without parameter validation.
///
/// Errors when `w2 (1-eta + eta x)^2 - w1 eta x^2 <= 0`, which requires `w1 >= w2`.
pub fn branch_threshold_raw(r1: f64, eta: f64, w1: f64, w2: f64) -> Result<f64> {
    let x = attenuation(r1);
    let eb = 1.0 - eta;
    let den = w2 * (eb + eta * x).powi(2) - w1 * eta * x * x;
    if den <= 0.0 || !den.is_finite() {
        return Err(Error::DegenerateBranch { r1, denominator: den });
    }
    let num = w1 * eb * x;
    if num <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-0.5 * (num / den).ln() / LN_2)
}

/// Minimum of `w1 D1 + w2 D2` over the distortion region at rates `r`.
///
/// The optimum is the tangent point of the line with slope `-w1/w2` on the
/// hyperbola `d1 d2 = d12min`, clamped to the boundary segment between corners
/// C `(d1min, ·)` and D `(·, d2min)`.
pub fn min_weighted_distortion(r: RatePair, params: &SystemParams) -> Result<WeightedDistortion> {
    r.validate()?;
    let (x, y) = r.attenuations();
    Ok(min_weighted_distortion_xy(x, y, params))
}

/// [`min_weighted_distortion`] at attenuations `x`, `y` in `(0, 1]`.
pub fn min_weighted_distortion_xy(x: f64, y: f64, params: &SystemParams) -> WeightedDistortion {
    let (w1, w2, eta) = (params.w1, params.w2, params.eta);
    let xy = x * y;
    let (d1, d2, branch) = if eta >= 1.0 {
        // perfectly correlated sources: both estimates coincide
        (xy, xy, Branch::CornerD)
    } else {
        let eb = 1.0 - eta;
        let a = eb + eta * xy;
        let bx = eb + eta * x;
        let by = eb + eta * y;
        match select_branch(x, y, params) {
            Branch::CornerD => (a * x / bx, bx * y, Branch::CornerD),
            Branch::CornerC => (by * x, a * y / by, Branch::CornerC),
            Branch::Curve => {
                let d12 = a * xy;
                ((w2 / w1 * d12).sqrt(), (w1 / w2 * d12).sqrt(), Branch::Curve)
            }
        }
    };
    WeightedDistortion { value: w1 * d1 + w2 * d2, point: DistortionPoint { d1, d2 }, branch }
}

/// Branch of the weighted-sum optimum at attenuations `x`, `y`.
pub fn select_branch(x: f64, y: f64, params: &SystemParams) -> Branch {
    let (w1, w2, eta) = (params.w1, params.w2, params.eta);
    if eta >= 1.0 {
        return Branch::CornerD;
    }
    let eb = 1.0 - eta;
    let a = eb + eta * x * y;
    let bx = eb + eta * x;
    let by = eb + eta * y;
    // r2 < g(r1) rewritten without logarithms
    if w2 * bx * bx * y > w1 * a * x {
        Branch::CornerD
    } else if w1 * by * by * x > w2 * a * y {
        Branch::CornerC
    } else {
        Branch::Curve
    }
}

/// Weighted distortion when node `k` transmits with power `p_k`.
pub fn weighted_distortion_at_power(p1: f64, p2: f64, params: &SystemParams) -> WeightedDistortion {
    min_weighted_distortion_xy(
        attenuation_at_power(p1, params.h1),
        attenuation_at_power(p2, params.h2),
        params,
    )
}

/// Grid-search reference for [`min_weighted_distortion`].
///
/// Scans a `grid_n x grid_n` grid over `[d1min, d1max] x [d2min, d2max]`, keeps
/// the region members, then rescans the neighbourhood of the best point at
/// ten times the resolution.
pub fn brute_force_min_distortion(r: RatePair, params: &SystemParams, grid_n: usize) -> Result<f64> {
    if grid_n < 1000 {
        return Err(Error::InvalidParameter(format!("grid_n = {grid_n} must be at least 1000")));
    }
    let b = distortion_bounds(r, params.eta)?;
    let (w1, w2) = (params.w1, params.w2);
    let step1 = (b.d1max - b.d1min) / (grid_n - 1) as f64;
    let step2 = (b.d2max - b.d2min) / (grid_n - 1) as f64;

    let mut best = f64::INFINITY;
    let mut best_at = (0usize, 0usize);
    for k in 0..grid_n {
        let d1 = b.d1min + step1 * k as f64;
        for l in 0..grid_n {
            let d2 = b.d2min + step2 * l as f64;
            if b.contains(d1, d2) {
                let v = w1 * d1 + w2 * d2;
                if v < best {
                    best = v;
                    best_at = (k, l);
                }
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::EmptyGrid(format!("no region point on the grid at r = ({}, {})", r.r1, r.r2)));
    }

    let c1 = b.d1min + step1 * best_at.0 as f64;
    let c2 = b.d2min + step2 * best_at.1 as f64;
    let (f1, f2) = (step1 / 10.0, step2 / 10.0);
    for k in -10i32..=10 {
        let d1 = (c1 + f1 * k as f64).clamp(b.d1min, b.d1max);
        for l in -10i32..=10 {
            let d2 = (c2 + f2 * l as f64).clamp(b.d2min, b.d2max);
            if b.contains(d1, d2) {
                best = best.min(w1 * d1 + w2 * d2);
            }
        }
    }
    Ok(best)
}

/// Membership of `point` in the distortion region at rates `r`, tolerance 1e-12.
pub fn region_contains(point: DistortionPoint, r: RatePair, eta: f64) -> bool {
    match distortion_bounds(r, eta) {
        Ok(b) => b.contains(point.d1, point.d2),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rate_examples() {
        assert_eq!(channel_rate(0.0, 0.8).unwrap(), 0.0);
        assert_relative_eq!(channel_rate(3.75, 0.8).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(channel_rate(4.25, 0.8).unwrap(), 0.5 * 4.4f64.log2(), max_relative = 1e-14);
        assert!(channel_rate(-1.0, 0.8).is_err());
        assert!(channel_rate(1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(SystemParams::new(0.7, 0.5, 0.5, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.7, 0.7, 0.3, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.7, 0.3, 0.6, 1.0, 1.0).is_err());
        assert!(SystemParams::new(1.2, 0.3, 0.7, 1.0, 1.0).is_err());
        assert!(SystemParams::new(0.7, 0.3, 0.7, -1.0, 1.0).is_err());
    }

    #[test]
    fn zero_rate_point() {
        let p = SystemParams::paper_defaults();
        let w = min_weighted_distortion(RatePair::new(0.0, 0.0).unwrap(), &p).unwrap();
        assert_eq!(w.value, 1.0);
        assert_eq!(w.point, DistortionPoint { d1: 1.0, d2: 1.0 });
    }

    #[test]
    fn eta_one_product_form() {
        let p = SystemParams::new(1.0, 0.3, 0.7, 0.8, 0.5).unwrap();
        let w = min_weighted_distortion(RatePair::new(1.0, 1.0).unwrap(), &p).unwrap();
        assert_relative_eq!(w.value, 0.0625, max_relative = 1e-15);
        assert_eq!(g_threshold(0.5, &p).unwrap(), f64::INFINITY);
    }

    #[test]
    fn threshold_at_zero() {
        let p = SystemParams::paper_defaults();
        let g = g_threshold(0.0, &p).unwrap();
        assert_relative_eq!(g, -0.5 * (0.09f64 / 0.49).log2(), max_relative = 1e-14);
        assert!((g - 1.2224).abs() < 1e-4);
    }

    #[test]
    fn degenerate_denominator_reported() {
        // w1 > w2 with strong correlation drives the denominator negative
        let err = branch_threshold_raw(0.0, 0.9, 0.9, 0.1).unwrap_err();
        assert!(matches!(err, Error::DegenerateBranch { .. }));
    }

    #[test]
    fn independent_sources_factorize() {
        let b = distortion_bounds(RatePair::new(0.7, 1.3).unwrap(), 0.0).unwrap();
        assert_relative_eq!(b.d12min, 2f64.powf(-4.0), max_relative = 1e-14);
        assert_relative_eq!(b.d1min, 2f64.powf(-1.4), max_relative = 1e-14);
    }

    #[test]
    fn region_membership_examples() {
        let r0 = RatePair::new(0.0, 0.0).unwrap();
        assert!(region_contains(DistortionPoint { d1: 1.0, d2: 1.0 }, r0, 0.7));
        let r = RatePair::new(0.8, 0.4).unwrap();
        let b = distortion_bounds(r, 0.7).unwrap();
        assert!(!region_contains(DistortionPoint { d1: b.d1min * 0.99, d2: 1.0 }, r, 0.7));
    }

    #[test]
    fn params_deserialize_validates() {
        let ok: SystemParams =
            serde_json::from_str(r#"{"eta":0.7,"w1":0.3,"w2":0.7,"h1":0.8,"h2":0.5}"#).unwrap();
        assert_eq!(ok, SystemParams::paper_defaults());
        let bad = serde_json::from_str::<SystemParams>(r#"{"eta":0.7,"w1":0.7,"w2":0.3,"h1":0.8,"h2":0.5}"#);
        assert!(bad.is_err());
    }
}
