//! Parameter synthesis for STL specifications by structural induction.
//!
//! Every atom `g(x) <= 0` is checked on the successor of the current reach
//! set: for each template map `v`, the Bernstein coefficients of
//! `g(f(v(u), p))` are affine in `p`, and requiring all of them to be
//! non-positive is a sufficient linear condition on `p`. Temporal operators
//! advance the reach set under the parameters refined so far.
//!
//! Formulas are therefore interpreted on the trajectory `x_1, x_2, ...`: time
//! 0 of the formula is the first successor of the initial set.

use std::collections::HashMap;

use log::{debug, trace};

use crate::bernstein::ParameterDomain;
use crate::error::{Error, Result};
use crate::geometry::{Bundle, LinearSystem, LinearSystemSet};
use crate::polynomial::SparsePolynomial;
use crate::reachability::{check_divergence, Model, ReachEngine};
use crate::stl::{Atom, Formula};

/// Linear parts below this magnitude are treated as parameter-free.
const VACUOUS_TOL: f64 = 1e-14;

/// Counters collected during one synthesis run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynthesisStats {
    pub refinements: usize,
    pub empty_refinements: usize,
    pub reach_steps: usize,
    /// Largest member count of any intermediate parameter set.
    pub max_members: usize,
}

/// Memo key: formula node (by address), remaining interval, and the exact
/// bits of the reach set and parameter polytope. Unfolding nested temporal
/// operators revisits the same triple along many paths.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct MemoKey {
    node: usize,
    interval: (usize, usize),
    state: Vec<u64>,
}

fn state_bits(x: &Bundle, params: &LinearSystem) -> Vec<u64> {
    let mut bits: Vec<u64> = x.upper().iter().chain(x.lower()).map(|v| v.to_bits()).collect();
    bits.push(u64::MAX);
    for (d, c) in params.directions().iter().zip(params.offsets()) {
        bits.extend(d.iter().map(|v| v.to_bits()));
        bits.push(c.to_bits());
    }
    bits
}

pub struct Synthesizer<'m> {
    engine: ReachEngine<'m>,
    stats: SynthesisStats,
    memo: HashMap<MemoKey, LinearSystemSet>,
    successors: HashMap<Vec<u64>, Bundle>,
}

impl<'m> Synthesizer<'m> {
    pub fn new(model: &'m Model) -> Self {
        Synthesizer {
            engine: ReachEngine::new(model),
            stats: SynthesisStats::default(),
            memo: HashMap::new(),
            successors: HashMap::new(),
        }
    }

    pub fn stats(&self) -> &SynthesisStats {
        &self.stats
    }

    pub fn engine(&self) -> &ReachEngine<'m> {
        &self.engine
    }

    /// Parameters in `params` for which every trajectory from `x0` satisfies
    /// `phi` (successor-state convention).
    pub fn run(
        &mut self,
        x0: &Bundle,
        params: &LinearSystem,
        phi: &Formula,
    ) -> Result<LinearSystemSet> {
        let model = self.engine.model();
        if x0.dim() != model.dim() || params.dim() != model.num_params() {
            return Err(Error::Dimension(
                "initial set or parameter set does not match the model".into(),
            ));
        }
        if phi.num_vars() != model.dim() {
            return Err(Error::InvalidFormula(format!(
                "formula ranges over {} variables, model has {}",
                phi.num_vars(),
                model.dim()
            )));
        }
        if params.is_empty()? {
            return Err(Error::EmptyParameterSet);
        }
        self.synth(x0, params, phi, 0)
    }

    /// Refinement of `params` by one atom on the successor of `x`; `None`
    /// when some Bernstein coefficient is a positive constant.
    pub fn refine_atom(
        &mut self,
        x: &Bundle,
        params: &LinearSystem,
        atom: &Atom,
    ) -> Result<Option<LinearSystem>> {
        let model = self.engine.model();
        let (coeffs, constant) = atom.linear_parts();
        if coeffs.len() != model.dim() {
            return Err(Error::Dimension(
                "atom does not match the model's state dimension".into(),
            ));
        }
        let g_of_f = model.directional(&coeffs)?.checked_add(&SparsePolynomial::constant(
            model.dim(),
            model.num_params(),
            constant,
        ))?;
        self.stats.refinements += 1;

        let m = params.dim();
        let mut directions: Vec<Vec<f64>> = params.directions().to_vec();
        let mut offsets: Vec<f64> = params.offsets().to_vec();
        for v in self.engine.template_maps(x)? {
            let form = self.engine.bernstein(&g_of_f, &v)?;
            for b in form.coefficients() {
                let scale = b.linear.iter().fold(0.0f64, |acc, a| acc.max(a.abs()));
                if scale <= VACUOUS_TOL * b.constant.abs().max(1.0) {
                    if b.constant > 0.0 {
                        self.stats.empty_refinements += 1;
                        return Ok(None);
                    }
                    continue;
                }
                let row: Vec<f64> = b.linear.iter().map(|a| a / scale).collect();
                let rhs = -b.constant / scale;
                if !directions.iter().zip(&offsets).any(|(d, c)| *d == row && *c <= rhs) {
                    directions.push(row);
                    offsets.push(rhs);
                }
            }
        }
        let refined = LinearSystem::new(m, directions, offsets)?;
        if refined.is_empty()? {
            self.stats.empty_refinements += 1;
            return Ok(None);
        }
        Ok(Some(refined.remove_redundant()?))
    }

    fn synth(
        &mut self,
        x: &Bundle,
        params: &LinearSystem,
        phi: &Formula,
        time: usize,
    ) -> Result<LinearSystemSet> {
        let key = MemoKey {
            node: phi as *const Formula as usize,
            interval: (usize::MAX, usize::MAX),
            state: state_bits(x, params),
        };
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let out = match phi {
            Formula::Atom(a) => match self.refine_atom(x, params, a)? {
                Some(s) => LinearSystemSet::singleton(s)?,
                None => LinearSystemSet::empty(params.dim()),
            },
            Formula::And(l, r) => {
                let left = self.synth(x, params, l, time)?;
                if left.is_empty() {
                    return Ok(left);
                }
                let right = self.synth(x, params, r, time)?;
                simplify(left.intersect(&right)?)?
            }
            Formula::Or(l, r) => {
                let left = self.synth(x, params, l, time)?;
                left.union(&self.synth(x, params, r, time)?)?
            }
            Formula::Until {
                left,
                right,
                interval,
            } => self.until(x, params, Some(left), right, interval.a, interval.b, time)?,
            Formula::Eventually { interval, sub } => {
                self.until(x, params, None, sub, interval.a, interval.b, time)?
            }
            Formula::Globally { interval, sub } => {
                self.globally(x, params, sub, interval.a, interval.b, time)?
            }
        };
        self.stats.max_members = self.stats.max_members.max(out.len());
        trace!(
            "t={time} {}: {} member(s){}",
            node_name(phi),
            out.len(),
            if out.is_empty() { " (empty)" } else { "" }
        );
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    /// `left U[a,b] right`; `left = None` stands for `true`.
    #[allow(clippy::too_many_arguments)]
    fn until(
        &mut self,
        x: &Bundle,
        params: &LinearSystem,
        left: Option<&Formula>,
        right: &Formula,
        a: usize,
        b: usize,
        time: usize,
    ) -> Result<LinearSystemSet> {
        if a == 0 && b == 0 {
            return self.synth(x, params, right, time);
        }
        let key = MemoKey {
            node: right as *const Formula as usize,
            interval: (a, b),
            state: state_bits(x, params),
        };
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let now = if a == 0 {
            self.synth(x, params, right, time)?
        } else {
            LinearSystemSet::empty(params.dim())
        };
        let holding = match left {
            Some(f) => self.synth(x, params, f, time)?,
            None => LinearSystemSet::singleton(params.clone())?,
        };
        let mut later = LinearSystemSet::empty(params.dim());
        for member in holding.members() {
            let next = self.advance(x, member, time)?;
            let sub = self.until(
                &next,
                member,
                left,
                right,
                a.saturating_sub(1),
                b - 1,
                time + 1,
            )?;
            later = later.union(&sub)?;
        }
        let out = now.union(&later)?;
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    fn globally(
        &mut self,
        x: &Bundle,
        params: &LinearSystem,
        sub: &Formula,
        a: usize,
        b: usize,
        time: usize,
    ) -> Result<LinearSystemSet> {
        if a > 0 {
            let next = self.advance(x, params, time)?;
            return self.globally(&next, params, sub, a - 1, b - 1, time + 1);
        }
        let now = self.synth(x, params, sub, time)?;
        if b == 0 {
            return Ok(now);
        }
        let mut out = LinearSystemSet::empty(params.dim());
        for member in now.members() {
            let next = self.advance(x, member, time)?;
            out = out.union(&self.globally(&next, member, sub, 0, b - 1, time + 1)?)?;
        }
        Ok(out)
    }

    fn advance(&mut self, x: &Bundle, params: &LinearSystem, time: usize) -> Result<Bundle> {
        let key = state_bits(x, params);
        if let Some(next) = self.successors.get(&key) {
            return Ok(next.clone());
        }
        self.stats.reach_steps += 1;
        let domain = ParameterDomain::new(params)?;
        let next = self.engine.step_with(x, &domain).map_err(|e| match e {
            Error::Divergence { value, .. } => Error::Divergence {
                step: time + 1,
                value,
            },
            e => e,
        })?;
        check_divergence(&next, time + 1)?;
        self.successors.insert(key, next.clone());
        Ok(next)
    }
}

fn simplify(set: LinearSystemSet) -> Result<LinearSystemSet> {
    let members = set
        .members()
        .iter()
        .map(|m| m.remove_redundant())
        .collect::<Result<Vec<_>>>()?;
    LinearSystemSet::new(set.dim(), members)
}

fn node_name(phi: &Formula) -> &'static str {
    match phi {
        Formula::Atom(_) => "atom",
        Formula::And(..) => "and",
        Formula::Or(..) => "or",
        Formula::Until { .. } => "until",
        Formula::Globally { .. } => "globally",
        Formula::Eventually { .. } => "eventually",
    }
}

/// One-shot refinement with a fresh engine.
pub fn refine_atom(
    model: &Model,
    x: &Bundle,
    params: &LinearSystem,
    atom: &Atom,
) -> Result<Option<LinearSystem>> {
    Synthesizer::new(model).refine_atom(x, params, atom)
}

/// Synthesized parameter set for `phi`; an empty result is an answer, not an
/// error.
pub fn synthesize(
    model: &Model,
    x0: &Bundle,
    params: &LinearSystem,
    phi: &Formula,
) -> Result<LinearSystemSet> {
    let mut s = Synthesizer::new(model);
    let out = s.run(x0, params, phi)?;
    let stats = s.stats();
    debug!(
        "synthesis: {} refinements ({} empty), {} reach steps, {} member(s)",
        stats.refinements,
        stats.empty_refinements,
        stats.reach_steps,
        out.len()
    );
    Ok(out)
}
