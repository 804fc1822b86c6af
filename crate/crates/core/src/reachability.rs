//! Bounded-horizon flowpipes for `x_{k+1} = f(x_k, p)`.
//!
//! One step maps every template parallelotope of the current bundle to the
//! unit box (generator form), composes each signed bundle direction with the
//! dynamics, and bounds the result by its maximal Bernstein coefficient over
//! the parameter set. Each offset keeps the smallest bound found across
//! templates, and the new bundle is canonicalized.
//!
//! The composition `D_i · f(q + G u, p)` is built symbolically once per
//! polynomial and only instantiated with the numeric `q` and `G` of each
//! template at each step.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::Instant;

use log::{debug, trace};

use crate::bernstein::{BernsteinCache, BernsteinForm, ParameterDomain};
use crate::error::{Error, Result};
use crate::geometry::{Bundle, LinearSystem};
use crate::polynomial::{AffineMap, SparsePolynomial, SymbolicComposition};

/// Offsets beyond this magnitude are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e30;

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub state_vars: Vec<String>,
    pub param_vars: Vec<String>,
    /// `dynamics[k]` is the next-state polynomial of `state_vars[k]`.
    pub dynamics: Vec<SparsePolynomial>,
}

impl Model {
    pub fn new(
        name: impl Into<String>,
        state_vars: Vec<String>,
        param_vars: Vec<String>,
        dynamics: Vec<SparsePolynomial>,
    ) -> Result<Self> {
        let n = state_vars.len();
        let m = param_vars.len();
        if n == 0 {
            return Err(Error::InvalidModel("no state variables".into()));
        }
        if dynamics.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} dynamics components for {n} state variables",
                dynamics.len()
            )));
        }
        if let Some(k) = dynamics
            .iter()
            .position(|f| f.num_vars() != n || f.num_params() != m)
        {
            return Err(Error::InvalidModel(format!(
                "dynamics of `{}` is not over the declared variables and parameters",
                state_vars[k]
            )));
        }
        let mut all: Vec<&String> = state_vars.iter().chain(&param_vars).collect();
        all.sort();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel(format!("`{}` declared twice", w[0])));
        }
        Ok(Model {
            name: name.into(),
            state_vars,
            param_vars,
            dynamics,
        })
    }

    pub fn dim(&self) -> usize {
        self.state_vars.len()
    }

    pub fn num_params(&self) -> usize {
        self.param_vars.len()
    }

    pub fn step(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        self.dynamics.iter().map(|f| f.evaluate(x, p)).collect()
    }

    /// `x_0, ..., x_T`.
    pub fn simulate(&self, x0: &[f64], p: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(x0.to_vec());
        for _ in 0..steps {
            let next = self.step(out.last().expect("nonempty"), p)?;
            out.push(next);
        }
        Ok(out)
    }

    /// `Σ_k d_k · f_k`.
    pub fn directional(&self, direction: &[f64]) -> Result<SparsePolynomial> {
        let mut acc = SparsePolynomial::zero(self.dim(), self.num_params());
        for (d, f) in direction.iter().zip(&self.dynamics) {
            if *d != 0.0 {
                acc = acc.checked_add(&f.scaled(*d))?;
            }
        }
        Ok(acc)
    }

    fn symbol_names(&self) -> Vec<&str> {
        self.state_vars
            .iter()
            .chain(&self.param_vars)
            .map(String::as_str)
            .collect()
    }
}

/// Iterates the dynamics from a single point.
pub fn simulate(model: &Model, x0: &[f64], p: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
    model.simulate(x0, p, steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flowpipe {
    pub model: String,
    steps: Vec<Bundle>,
}

impl Flowpipe {
    pub fn new(model: impl Into<String>, steps: Vec<Bundle>) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| Error::InvalidSet("flowpipe needs at least the initial set".into()))?;
        if steps
            .iter()
            .any(|b| b.directions() != first.directions() || b.templates() != first.templates())
        {
            return Err(Error::InvalidSet(
                "flowpipe steps must share directions and templates".into(),
            ));
        }
        Ok(Flowpipe {
            model: model.into(),
            steps,
        })
    }

    pub fn steps(&self) -> &[Bundle] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> &Bundle {
        self.steps.last().expect("flowpipe is never empty")
    }
}

type PolyKey = Vec<u64>;

fn poly_key(p: &SparsePolynomial) -> PolyKey {
    let mut key = vec![p.num_vars() as u64, p.num_params() as u64];
    for (idx, form) in p.terms() {
        key.extend(idx.exponents().iter().map(|e| *e as u64));
        key.push(form.constant.to_bits());
        key.extend(form.linear.iter().map(|a| a.to_bits()));
    }
    key
}

/// Shared machinery for reach steps: symbolic compositions memoized per
/// polynomial and Bernstein weight tables memoized per shape.
#[derive(Debug)]
pub struct ReachEngine<'m> {
    model: &'m Model,
    cache: BernsteinCache,
    compositions: RwLock<HashMap<PolyKey, Arc<SymbolicComposition>>>,
}

impl<'m> ReachEngine<'m> {
    pub fn new(model: &'m Model) -> Self {
        ReachEngine {
            model,
            cache: BernsteinCache::new(),
            compositions: RwLock::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn cache(&self) -> &BernsteinCache {
        &self.cache
    }

    pub fn composition(&self, p: &SparsePolynomial) -> Result<Arc<SymbolicComposition>> {
        let key = poly_key(p);
        if let Some(c) = self.compositions.read().expect("composition lock").get(&key) {
            return Ok(Arc::clone(c));
        }
        let c = Arc::new(p.compose_symbolic(&self.model.symbol_names())?);
        let mut guard = self.compositions.write().expect("composition lock");
        Ok(Arc::clone(guard.entry(key).or_insert(c)))
    }

    /// Bernstein form of `p ∘ v` on the unit box.
    pub fn bernstein(&self, p: &SparsePolynomial, v: &AffineMap) -> Result<BernsteinForm> {
        let c = self.composition(p)?;
        self.cache.instantiate(&c, v)
    }

    /// Generator form of every template parallelotope of `x`.
    pub fn template_maps(&self, x: &Bundle) -> Result<Vec<AffineMap>> {
        (0..x.templates().len())
            .map(|t| {
                x.template_parallelotope(t)?
                    .to_generator_form()
                    .map_err(|e| match e {
                        Error::DegenerateTemplate(_) => Error::DegenerateTemplate(t),
                        e => e,
                    })
            })
            .collect()
    }

    /// One set-image step: a bundle with the same directions and templates
    /// that contains `f(x, p)` for every `x ∈ X` and `p ∈ P`.
    pub fn step(&self, x: &Bundle, params: &LinearSystem) -> Result<Bundle> {
        let domain = ParameterDomain::new(params)?;
        self.step_with(x, &domain)
    }

    pub fn step_with(&self, x: &Bundle, domain: &ParameterDomain) -> Result<Bundle> {
        if x.dim() != self.model.dim() || domain.dim() != self.model.num_params() {
            return Err(Error::Dimension(
                "bundle or parameter set does not match the model".into(),
            ));
        }
        let maps = self.template_maps(x)?;
        let q = x.num_directions();
        let mut upper = vec![f64::INFINITY; q];
        let mut lower = vec![f64::INFINITY; q];
        for (i, d) in x.directions().iter().enumerate() {
            let plus = self.model.directional(d)?;
            let minus = plus.negated();
            for v in &maps {
                upper[i] = upper[i].min(self.bernstein(&plus, v)?.upper_bound(domain)?);
                lower[i] = lower[i].min(self.bernstein(&minus, v)?.upper_bound(domain)?);
            }
        }
        x.with_offsets(upper, lower)?.canonicalize()
    }
}

/// Single reach step with a fresh engine.
pub fn reach_step(model: &Model, x: &Bundle, params: &LinearSystem) -> Result<Bundle> {
    ReachEngine::new(model).step(x, params)
}

pub(crate) fn check_divergence(b: &Bundle, step: usize) -> Result<()> {
    for v in b.upper().iter().chain(b.lower()) {
        if !v.is_finite() || v.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Divergence { step, value: *v });
        }
    }
    Ok(())
}

/// `X_0, ..., X_T` with `X_{k+1} ⊇ f(X_k, P)`.
pub fn compute_flowpipe(
    model: &Model,
    x0: &Bundle,
    params: &LinearSystem,
    steps: usize,
) -> Result<Flowpipe> {
    let engine = ReachEngine::new(model);
    let domain = ParameterDomain::new(params)?;
    let mut sets = Vec::with_capacity(steps + 1);
    sets.push(x0.clone());
    for k in 1..=steps {
        let start = Instant::now();
        let next = engine
            .step_with(sets.last().expect("nonempty"), &domain)
            .map_err(|e| match e {
                Error::Divergence { value, .. } => Error::Divergence { step: k, value },
                e => e,
            })?;
        check_divergence(&next, k)?;
        debug!("step {k}: {:.3} s", start.elapsed().as_secs_f64());
        trace!("step {k}: upper {:?} lower {:?}", next.upper(), next.lower());
        sets.push(next);
    }
    debug!(
        "flowpipe done: {} weight tables, {} cache hits",
        engine.cache().misses(),
        engine.cache().hits()
    );
    Flowpipe::new(model.name.clone(), sets)
}
