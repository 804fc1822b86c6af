//! Deterministic sampling of sets and simulation-based validation.
//!
//! Points come from a Halton sequence, so validation runs are reproducible
//! without a seed.

use crate::error::{Error, Result};
use crate::geometry::{Bundle, LinearSystem, LinearSystemSet};
use crate::linprog::LpOutcome;
use crate::reachability::{Flowpipe, Model};
use crate::stl::{monitor_successor, Formula};

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as f64;
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base as u64) as f64 * inv;
        index /= base as u64;
        inv /= b;
    }
    out
}

/// Halton points in `[0,1]^dim`, starting after the origin.
#[derive(Debug, Clone)]
pub struct Halton {
    dim: usize,
    index: u64,
    offset: usize,
}

impl Halton {
    pub fn new(dim: usize) -> Self {
        Self::with_offset(dim, 0)
    }

    /// Uses the bases after the first `offset` primes, so two streams with
    /// disjoint bases are not correlated.
    pub fn with_offset(dim: usize, offset: usize) -> Self {
        assert!(dim + offset <= PRIMES.len(), "Halton dimension too large");
        Halton {
            dim,
            index: 0,
            offset,
        }
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        self.index += 1;
        Some(
            (0..self.dim)
                .map(|k| radical_inverse(self.index, PRIMES[self.offset + k]))
                .collect(),
        )
    }
}

fn scale(u: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(lo.iter().zip(hi))
        .map(|(t, (l, h))| l + t * (h - l))
        .collect()
}

/// `count` points of a bounded, nonempty polytope. Rejection sampling from
/// the bounding box, topped up with convex combinations of LP vertices when
/// the set is too thin for rejection to succeed.
pub fn sample_polytope(system: &LinearSystem, count: usize, offset: usize) -> Result<Vec<Vec<f64>>> {
    let n = system.dim();
    if n == 0 {
        return Ok(vec![Vec::new(); count]);
    }
    let (lo, hi) = system.bounding_box()?;
    let mut out = Vec::with_capacity(count);
    for u in Halton::with_offset(n, offset).take(count.saturating_mul(200)) {
        if out.len() == count {
            return Ok(out);
        }
        let x = scale(&u, &lo, &hi);
        if system.contains(&x, 0.0) {
            out.push(x);
        }
    }
    let mut vertices = Vec::new();
    for d in Halton::with_offset(n, offset).take(2 * n + 4) {
        let dir: Vec<f64> = d.iter().map(|v| 2.0 * v - 1.0).collect();
        if let LpOutcome::Optimal { point, .. } = system.maximize(&dir)? {
            vertices.push(point);
        }
    }
    if vertices.is_empty() {
        return Err(Error::EmptySet);
    }
    let k = vertices.len();
    for w in Halton::with_offset(k.min(PRIMES.len() - offset), offset).take(count - out.len()) {
        let total: f64 = w.iter().sum::<f64>() + 1e-12;
        let mut x = vec![0.0; n];
        for (wi, v) in w.iter().zip(&vertices) {
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk += wi / total * vk;
            }
        }
        out.push(x);
    }
    Ok(out)
}

/// Points of a bundle, drawn through the generator form of its first
/// template and filtered by the remaining constraints.
pub fn sample_bundle(bundle: &Bundle, count: usize, offset: usize) -> Result<Vec<Vec<f64>>> {
    let n = bundle.dim();
    let map = bundle.template_parallelotope(0)?.to_generator_form()?;
    let mut out = Vec::with_capacity(count);
    for u in Halton::with_offset(n, offset).take(count.saturating_mul(200)) {
        if out.len() == count {
            return Ok(out);
        }
        let x = map.apply(&u);
        if bundle.contains(&x, 1e-12) {
            out.push(x);
        }
    }
    let rest = sample_polytope(&bundle.to_linear_system(), count - out.len(), offset)?;
    out.extend(rest);
    Ok(out)
}

/// Points of a union of polytopes, split evenly across members.
pub fn sample_set(set: &LinearSystemSet, count: usize, offset: usize) -> Result<Vec<Vec<f64>>> {
    let k = set.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity(count);
    for (i, m) in set.members().iter().enumerate() {
        let share = count / k + usize::from(i < count % k);
        out.extend(sample_polytope(m, share, offset)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentReport {
    pub trajectories: usize,
    pub contained: usize,
    /// Largest constraint violation seen over all steps.
    pub worst_violation: f64,
}

impl ContainmentReport {
    pub fn rate(&self) -> f64 {
        if self.trajectories == 0 {
            1.0
        } else {
            self.contained as f64 / self.trajectories as f64
        }
    }
}

fn bundle_violation(b: &Bundle, x: &[f64]) -> f64 {
    b.directions()
        .iter()
        .zip(b.upper().iter().zip(b.lower()))
        .map(|(d, (u, l))| {
            let v: f64 = d.iter().zip(x).map(|(a, b)| a * b).sum();
            (v - u).max(-l - v)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Simulates `count` sampled `(x0, p)` pairs and checks that step `k` of every
/// trajectory lies in `flowpipe.steps()[k]` up to `tol`.
pub fn validate_flowpipe(
    model: &Model,
    x0: &Bundle,
    params: &LinearSystem,
    flowpipe: &Flowpipe,
    count: usize,
    tol: f64,
) -> Result<ContainmentReport> {
    let states = sample_bundle(x0, count, 0)?;
    let ps = sample_polytope(params, count, model.dim())?;
    let steps = flowpipe.len() - 1;
    let mut report = ContainmentReport {
        trajectories: count,
        contained: 0,
        worst_violation: f64::NEG_INFINITY,
    };
    for (x, p) in states.iter().zip(&ps) {
        let tr = model.simulate(x, p, steps)?;
        let worst = tr
            .iter()
            .zip(flowpipe.steps())
            .map(|(s, b)| bundle_violation(b, s))
            .fold(f64::NEG_INFINITY, f64::max);
        report.worst_violation = report.worst_violation.max(worst);
        if worst <= tol {
            report.contained += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatisfactionReport {
    pub checked: usize,
    pub satisfied: usize,
}

impl SatisfactionReport {
    pub fn rate(&self) -> f64 {
        if self.checked == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.checked as f64
        }
    }
}

/// Monitors `phi` on trajectories for `param_count` sampled parameters from
/// `set` × `state_count` sampled initial states from `x0`.
pub fn validate_synthesis(
    model: &Model,
    x0: &Bundle,
    set: &LinearSystemSet,
    phi: &Formula,
    param_count: usize,
    state_count: usize,
) -> Result<SatisfactionReport> {
    let ps = sample_set(set, param_count, model.dim())?;
    let states = sample_bundle(x0, state_count, 0)?;
    let steps = phi.horizon() + 1;
    let mut report = SatisfactionReport {
        checked: 0,
        satisfied: 0,
    };
    for p in &ps {
        for x in &states {
            let tr = model.simulate(x, p, steps)?;
            report.checked += 1;
            if monitor_successor(&tr, phi)? {
                report.satisfied += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        let v: Vec<f64> = (1..5).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn thin_polytope_is_sampled() {
        // Segment x = y within the unit square.
        let s = LinearSystem::new(
            2,
            vec![
                vec![1.0, -1.0],
                vec![-1.0, 1.0],
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
            ],
            vec![0.0, 0.0, 1.0, 0.0],
        )
        .unwrap();
        let pts = sample_polytope(&s, 20, 0).unwrap();
        assert_eq!(pts.len(), 20);
        assert!(pts.iter().all(|p| s.contains(p, 1e-9)));
    }

    #[test]
    fn sample_set_splits_members() {
        let a = LinearSystem::from_box(&[0.0], &[1.0]).unwrap();
        let b = LinearSystem::from_box(&[5.0], &[6.0]).unwrap();
        let set = LinearSystemSet::new(1, vec![a, b]).unwrap();
        let pts = sample_set(&set, 7, 0).unwrap();
        assert_eq!(pts.len(), 7);
        assert_eq!(pts.iter().filter(|p| p[0] >= 5.0).count(), 3);
    }
}
