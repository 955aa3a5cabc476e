use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::bellman::DistortionTable;
use super::transition::node_transition_pmf;
use super::{transfer_matrix, CostVector, OnlineModel, PolicyTable, TransferMatrix};
use crate::error::{Error, Result};
use crate::model::Node;

const RESIDUAL_TOL: f64 = 1e-10;

/// Per-state distortion `d_rho(s)` of a policy.
pub fn policy_distortion(rho: &PolicyTable, model: &OnlineModel) -> Result<CostVector> {
    rho.matches(model)?;
    let table = DistortionTable::new(model);
    CostVector::new(rho.actions().iter().map(|&(p1, p2)| table.get(p1, p2)).collect())
}

/// Solves `(I - alpha P) v = (1 - alpha) d` for a stationary policy.
pub fn policy_value_exact(rho: &PolicyTable, model: &OnlineModel) -> Result<CostVector> {
    let p = transfer_matrix(rho, model)?;
    let d = policy_distortion(rho, model)?;
    solve_policy_value(&p, &d, model.alpha())
}

fn solve_policy_value(p: &TransferMatrix, d: &CostVector, alpha: f64) -> Result<CostVector> {
    let n = p.size();
    let a = DMatrix::<f64>::identity(n, n) - p.matrix() * alpha;
    let b = DVector::from_iterator(n, d.as_slice().iter().map(|x| (1.0 - alpha) * x));
    let v = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular policy-evaluation system".into()))?;
    let residual = (&a * &v - &b).amax();
    if residual > RESIDUAL_TOL {
        return Err(Error::Numerical(format!("policy-evaluation residual {residual:e}")));
    }
    CostVector::new(v.iter().copied().collect())
}

/// Number of closed communicating classes of the chain.
pub fn closed_class_count(p: &TransferMatrix) -> usize {
    let n = p.size();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for s in 0..n {
        for t in 0..n {
            if p.get(s, t) > 0.0 {
                g.add_edge(nodes[s], nodes[t], ());
            }
        }
    }
    let sccs = tarjan_scc(&g);
    let mut component = vec![0usize; n];
    for (c, members) in sccs.iter().enumerate() {
        for m in members {
            component[m.index()] = c;
        }
    }
    sccs.iter()
        .enumerate()
        .filter(|(c, members)| {
            members.iter().all(|m| {
                let s = m.index();
                (0..n).all(|t| p.get(s, t) == 0.0 || component[t] == *c)
            })
        })
        .count()
}

/// Stationary distribution through `pi (I - P + 1) = 1`, falling back to
/// power iteration if the linear solve is not accurate enough.
pub fn stationary_distribution(p: &TransferMatrix) -> Result<Vec<f64>> {
    let closed = closed_class_count(p);
    if closed != 1 {
        return Err(Error::AmbiguousStationary(closed));
    }
    let n = p.size();
    let m = DMatrix::<f64>::identity(n, n) - p.matrix() + DMatrix::<f64>::from_element(n, n, 1.0);
    let ones = DVector::<f64>::from_element(n, 1.0);
    if let Some(x) = m.transpose().lu().solve(&ones) {
        let pi = clean_distribution(x.iter().copied().collect());
        if stationarity_residual(p, &pi) <= RESIDUAL_TOL {
            return Ok(pi);
        }
    }
    stationary_by_power_iteration(p, 1e-12, 1_000_000)
}

/// Power iteration on the lazy chain `(P + I) / 2`, which shares the
/// stationary vector of `P` but is aperiodic.
pub fn stationary_by_power_iteration(p: &TransferMatrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = p.size();
    let pt = p.matrix().transpose();
    let mut pi = DVector::<f64>::from_element(n, 1.0 / n as f64);
    for _ in 0..max_iter {
        let next = (&pt * &pi + &pi) * 0.5;
        let change = (&next - &pi).lp_norm(1);
        pi = next;
        if change <= tol {
            let out = clean_distribution(pi.iter().copied().collect());
            return Ok(out);
        }
    }
    Err(Error::Numerical(format!("power iteration did not reach {tol:e} in {max_iter} steps")))
}

fn clean_distribution(mut pi: Vec<f64>) -> Vec<f64> {
    for x in pi.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    pi
}

fn stationarity_residual(p: &TransferMatrix, pi: &[f64]) -> f64 {
    let row = DVector::from_column_slice(pi);
    let moved = p.matrix().transpose() * &row;
    (moved - row).amax()
}

/// `sum_s pi(s) v*(s)`, the long-run expected distortion of `rho*`.
pub fn expected_distortion(v_star: &CostVector, rho_star: &PolicyTable, model: &OnlineModel) -> Result<f64> {
    if v_star.len() != model.num_states() {
        return Err(Error::InvalidParameter("cost vector does not match the model".into()));
    }
    let pi = stationary_distribution(&transfer_matrix(rho_star, model)?)?;
    Ok(pi.iter().zip(v_star.as_slice()).map(|(a, b)| a * b).sum())
}

/// Stationary probability that each node's harvest is clipped at its cap.
pub fn overflow_probability(rho: &PolicyTable, model: &OnlineModel) -> Result<(f64, f64)> {
    let pi = stationary_distribution(&transfer_matrix(rho, model)?)?;
    let pmf1 = model.harvest(Node::One);
    let pmf2 = model.harvest(Node::Two);
    let mut q = (0.0, 0.0);
    for (k, &w) in pi.iter().enumerate() {
        let (i, j) = model.levels(k);
        let (p1, p2) = rho.actions()[k];
        q.0 += w * node_transition_pmf(i, p1, &pmf1, model.l1())?.overflow;
        q.1 += w * node_transition_pmf(j, p2, &pmf2, model.l2())?.overflow;
    }
    Ok(q)
}

/// Elementwise minimum of the exact values of every stationary policy.
///
/// Errors when the model has more than `max_policies` policies.
pub fn optimal_values_by_enumeration(model: &OnlineModel, max_policies: u64) -> Result<CostVector> {
    let n = model.num_states();
    let sizes: Vec<usize> = (0..n)
        .map(|k| {
            let (i, j) = model.levels(k);
            i * j
        })
        .collect();
    let count = sizes.iter().try_fold(1u64, |acc, &s| acc.checked_mul(s as u64));
    match count {
        Some(c) if c <= max_policies => {}
        _ => return Err(Error::InvalidParameter(format!("more than {max_policies} stationary policies"))),
    }
    let mut digits = vec![0usize; n];
    let mut best = vec![f64::INFINITY; n];
    loop {
        let actions = digits
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let (_, j) = model.levels(k);
                (d / j + 1, d % j + 1)
            })
            .collect();
        let rho = PolicyTable::new(model, actions)?;
        let v = policy_value_exact(&rho, model)?;
        for (b, x) in best.iter_mut().zip(v.as_slice()) {
            *b = b.min(*x);
        }
        // mixed-radix increment
        let mut k = 0;
        loop {
            if k == n {
                return CostVector::new(best);
            }
            digits[k] += 1;
            if digits[k] < sizes[k] {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_chain() {
        let p = TransferMatrix::new(DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(stationary_distribution(&p).unwrap(), vec![1.0]);
    }

    #[test]
    fn doubly_stochastic_is_uniform() {
        let m = DMatrix::from_row_slice(3, 3, &[0.2, 0.5, 0.3, 0.5, 0.3, 0.2, 0.3, 0.2, 0.5]);
        let pi = stationary_distribution(&TransferMatrix::new(m).unwrap()).unwrap();
        for x in pi {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_closed_classes_rejected() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.5, 0.5, 0.0]);
        let err = stationary_distribution(&TransferMatrix::new(m).unwrap()).unwrap_err();
        assert_eq!(err, Error::AmbiguousStationary(2));
    }

    #[test]
    fn transient_states_get_no_mass() {
        let m = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.25, 0.25, 0.5]);
        let pi = stationary_distribution(&TransferMatrix::new(m).unwrap()).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12 && pi[2].abs() < 1e-12);
    }
}
