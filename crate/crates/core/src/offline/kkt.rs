use std::f64::consts::LN_2;

use serde::Serialize;

use super::PowerSchedule;
use crate::error::{Error, Result};
use crate::model::{attenuation_at_power, select_branch, Branch, Node, SystemParams};

/// Lagrange multipliers of the per-slot distortion-region constraints.
///
/// `lambda1` and `lambda2` belong to the `d1 >= d1min` and `d2 >= d2min`
/// constraints, `lambda3` to `d1 d2 >= d12min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktMultipliers {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub branch: Branch,
}

pub fn kkt_multipliers(x: f64, y: f64, params: &SystemParams) -> Result<KktMultipliers> {
    if !(x > 0.0 && x <= 1.0 && y > 0.0 && y <= 1.0) {
        return Err(Error::Domain(format!("attenuations ({x}, {y}) must lie in (0, 1]")));
    }
    Ok(multipliers(x, y, params))
}

pub(crate) fn multipliers(x: f64, y: f64, params: &SystemParams) -> KktMultipliers {
    let (w1, w2, eta) = (params.w1(), params.w2(), params.eta());
    let eb = 1.0 - eta;
    let xy = x * y;
    let a = eb + eta * xy;
    let branch = select_branch(x, y, params);
    match branch {
        Branch::Curve => KktMultipliers {
            lambda1: 0.0,
            lambda2: 0.0,
            lambda3: LN_2 * (w1 * w2 * a * xy).sqrt(),
            branch,
        },
        Branch::CornerD => {
            let bx = eb + eta * x;
            KktMultipliers {
                lambda1: 0.0,
                lambda2: w2 - w1 * a * x / (bx * bx * y),
                lambda3: w1 * LN_2 * a * x / bx,
                branch,
            }
        }
        Branch::CornerC => {
            let by = eb + eta * y;
            KktMultipliers {
                lambda1: w1 - w2 * a * y / (by * by * x),
                lambda2: 0.0,
                lambda3: w2 * LN_2 * a * y / by,
                branch,
            }
        }
    }
}

/// `-dD/dp` for `node`, written through the multipliers.
pub(crate) fn marginal_xy(node: Node, x: f64, y: f64, params: &SystemParams) -> f64 {
    let m = multipliers(x, y, params);
    let eta = params.eta();
    let eb = 1.0 - eta;
    let xy = x * y;
    let shared = m.lambda3 / LN_2 * (eb + 2.0 * eta * xy) / (eb + eta * xy);
    match node {
        Node::One => params.h1() * x * (m.lambda1 * x * (eb + eta * y) + m.lambda2 * eta * xy + shared),
        Node::Two => params.h2() * y * (m.lambda2 * y * (eb + eta * x) + m.lambda1 * eta * xy + shared),
    }
}

fn powers_to_xy(node: Node, p_self: f64, p_other: f64, params: &SystemParams) -> (f64, f64) {
    match node {
        Node::One => (attenuation_at_power(p_self, params.h1()), attenuation_at_power(p_other, params.h2())),
        Node::Two => (attenuation_at_power(p_other, params.h1()), attenuation_at_power(p_self, params.h2())),
    }
}

fn check_powers(p_self: f64, p_other: f64) -> Result<()> {
    if !(p_self.is_finite() && p_other.is_finite()) || p_self < 0.0 || p_other < 0.0 {
        return Err(Error::Domain(format!("powers ({p_self}, {p_other}) must be finite and >= 0")));
    }
    Ok(())
}

/// Marginal distortion reduction `-dD/dp_node` at the given powers.
pub fn marginal_gain(node: Node, p_self: f64, p_other: f64, params: &SystemParams) -> Result<f64> {
    check_powers(p_self, p_other)?;
    let (x, y) = powers_to_xy(node, p_self, p_other, params);
    Ok(marginal_xy(node, x, y, params))
}

/// Generalized water level of `node`: the reciprocal of its marginal gain.
///
/// Increasing in `p_self`; equalized across slots that share a band at the
/// optimum.
pub fn water_level(node: Node, p_self: f64, p_other: f64, params: &SystemParams) -> Result<f64> {
    Ok(1.0 / marginal_gain(node, p_self, p_other, params)?)
}

/// Per-slot water levels of `node` for a pair of schedules.
pub fn water_levels(node: Node, p_self: &PowerSchedule, p_other: &PowerSchedule, params: &SystemParams) -> Vec<f64> {
    p_self
        .as_slice()
        .iter()
        .zip(p_other.as_slice())
        .map(|(&a, &b)| {
            let (x, y) = powers_to_xy(node, a, b, params);
            1.0 / marginal_xy(node, x, y, params)
        })
        .collect()
}

/// Optimal powers at water levels `nu1`, `nu2` when the sources are identical.
pub fn eta_one_closed_form(nu1: f64, nu2: f64, h1: f64, h2: f64) -> Result<(f64, f64)> {
    if !(nu1 > 0.0 && nu2 > 0.0 && h1 > 0.0 && h2 > 0.0) {
        return Err(Error::Domain("water levels and gains must be positive".into()));
    }
    let p1 = ((h1 * h1 * nu1 * nu1 / (h2 * nu2)).cbrt() - 1.0).max(0.0) / h1;
    let p2 = ((h2 * h2 * nu2 * nu2 / (h1 * nu1)).cbrt() - 1.0).max(0.0) / h2;
    Ok((p1, p2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_attenuation_multipliers() {
        let p = SystemParams::paper_defaults();
        let m = kkt_multipliers(1.0, 1.0, &p).unwrap();
        assert_eq!(m.branch, Branch::CornerD);
        assert_relative_eq!(m.lambda3, 0.3 * LN_2, max_relative = 1e-14);
        assert_relative_eq!(m.lambda2, 0.4, max_relative = 1e-14);
        assert_eq!(m.lambda1, 0.0);
    }

    #[test]
    fn zero_power_level() {
        // h1 (lambda2 eta + w1 (1 + eta)) at x = y = 1
        let p = SystemParams::paper_defaults();
        let z = water_level(Node::One, 0.0, 0.0, &p).unwrap();
        assert_relative_eq!(z, 1.0 / (0.8 * (0.4 * 0.7 + 0.3 * 1.7)), max_relative = 1e-14);
    }

    #[test]
    fn closed_form_zero_bracket() {
        // h1^2 nu1^2 = h2 nu2 puts the cube root at 1
        let (p1, _) = eta_one_closed_form(1.0, 0.8 * 0.8 / 0.5, 0.8, 0.5).unwrap();
        assert!(p1.abs() < 1e-15);
    }
}
