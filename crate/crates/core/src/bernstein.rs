//! Bernstein form of power-basis polynomials on the unit box.
//!
//! For a polynomial `π(x) = Σ_{i∈I} a_i x^i` with dominating degree `d`, the
//! Bernstein coefficient at grid index `i ≤ d` is
//!
//! ```text
//! b_i = Σ_{j ≤ i} C(i, j) / C(d, j) · a_j
//! ```
//!
//! where `C(i, j)` is the product of the per-variable binomials. The weights
//! depend only on the support `I` and on `d`, so [`BernsteinCache`] computes a
//! weight table once per shape and reuses it for every set of numeric
//! coefficients with that shape. Coefficients are [`AffineForm`]s, so each
//! `b_i(p)` is affine in the parameters.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::geometry::LinearSystem;
use crate::linprog::LpOutcome;
use crate::polynomial::{AffineForm, AffineMap, MultiIndex, SparsePolynomial, SymbolicComposition};

/// Dense grid of Bernstein coefficients `{b_i : i ≤ d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinForm {
    degree: MultiIndex,
    num_params: usize,
    /// Row-major over the grid, last variable fastest.
    coeffs: Vec<AffineForm>,
}

/// Precomputed Bernstein weights for one `(support, degree)` shape.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    degree: MultiIndex,
    /// For each grid point, the `(support position, weight)` pairs with `j ≤ i`.
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightTable {
    pub fn build(support: &[MultiIndex], degree: &MultiIndex) -> Result<WeightTable> {
        let ratios: Vec<Vec<Vec<f64>>> = degree
            .exponents()
            .iter()
            .map(|&d| binomial_ratios(d))
            .collect::<Result<_>>()?;
        let grid = grid_points(degree);
        let rows = grid
            .iter()
            .map(|i| {
                support
                    .iter()
                    .enumerate()
                    .filter(|(_, j)| j.dominated_by(i))
                    .map(|(pos, j)| {
                        let w: f64 = i
                            .exponents()
                            .iter()
                            .zip(j.exponents())
                            .zip(&ratios)
                            .map(|((&ik, &jk), r)| r[ik as usize][jk as usize])
                            .product();
                        (pos, w)
                    })
                    .collect()
            })
            .collect();
        Ok(WeightTable {
            degree: degree.clone(),
            rows,
        })
    }

    pub fn degree(&self) -> &MultiIndex {
        &self.degree
    }

    pub fn grid_len(&self) -> usize {
        self.rows.len()
    }

    fn apply(&self, coeffs: &[&AffineForm], num_params: usize) -> BernsteinForm {
        let out = self
            .rows
            .iter()
            .map(|row| {
                let mut b = AffineForm::zero(num_params);
                for &(pos, w) in row {
                    b.add_scaled(w, coeffs[pos]);
                }
                b
            })
            .collect();
        BernsteinForm {
            degree: self.degree.clone(),
            num_params,
            coeffs: out,
        }
    }
}

/// `r[i][j] = C(i, j) / C(d, j)` for `0 ≤ j ≤ i ≤ d`, built as running products
/// `Π_{t<j} (i − t)/(d − t)` so no factorial is ever formed.
fn binomial_ratios(d: u32) -> Result<Vec<Vec<f64>>> {
    let d_us = d as usize;
    let mut r = vec![vec![0.0; d_us + 1]; d_us + 1];
    for i in 0..=d_us {
        let mut acc = 1.0;
        r[i][0] = 1.0;
        for j in 1..=i {
            acc *= (i + 1 - j) as f64 / (d_us + 1 - j) as f64;
            if !acc.is_finite() {
                return Err(Error::BinomialOverflow(d));
            }
            r[i][j] = acc;
        }
    }
    Ok(r)
}

/// All `i ≤ d` in row-major order.
fn grid_points(degree: &MultiIndex) -> Vec<MultiIndex> {
    let d = degree.exponents();
    let total: usize = d.iter().map(|&k| k as usize + 1).product();
    let mut out = Vec::with_capacity(total);
    let mut cur = vec![0u32; d.len()];
    for _ in 0..total {
        out.push(MultiIndex::new(cur.clone()));
        for k in (0..d.len()).rev() {
            if cur[k] < d[k] {
                cur[k] += 1;
                break;
            }
            cur[k] = 0;
        }
    }
    out
}

fn support_of(p: &SparsePolynomial) -> (Vec<MultiIndex>, Vec<&AffineForm>) {
    p.terms().map(|(i, a)| (i.clone(), a)).unzip()
}

/// Bernstein form of `p` on `[0,1]^n` with the minimal dominating degree.
pub fn to_bernstein(p: &SparsePolynomial) -> Result<BernsteinForm> {
    let degree = p.degree_vector();
    let (support, coeffs) = support_of(p);
    let table = WeightTable::build(&support, &degree)?;
    Ok(table.apply(&coeffs, p.num_params()))
}

impl BernsteinForm {
    pub fn degree(&self) -> &MultiIndex {
        &self.degree
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficients(&self) -> &[AffineForm] {
        &self.coeffs
    }

    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, &AffineForm)> {
        grid_points(&self.degree).into_iter().zip(&self.coeffs)
    }

    pub fn get(&self, i: &MultiIndex) -> Option<&AffineForm> {
        let d = self.degree.exponents();
        if i.len() != d.len() || !i.dominated_by(&self.degree) {
            return None;
        }
        let mut pos = 0usize;
        for (ik, dk) in i.exponents().iter().zip(d) {
            pos = pos * (*dk as usize + 1) + *ik as usize;
        }
        self.coeffs.get(pos)
    }

    /// `Σ_i b_i(p) B_{i,d}(x)`.
    pub fn evaluate(&self, x: &[f64], p: &[f64]) -> f64 {
        let d = self.degree.exponents();
        let basis: Vec<Vec<f64>> = d
            .iter()
            .zip(x)
            .map(|(&dk, &xk)| bernstein_basis_1d(dk, xk))
            .collect();
        self.iter()
            .map(|(i, b)| {
                let w: f64 = i
                    .exponents()
                    .iter()
                    .zip(&basis)
                    .map(|(&ik, bk)| bk[ik as usize])
                    .product();
                w * b.evaluate(p)
            })
            .sum()
    }

    pub fn is_parameter_free(&self) -> bool {
        self.coeffs.iter().all(AffineForm::is_parameter_free)
    }

    /// `(min_i min_{p∈P} b_i(p), max_i max_{p∈P} b_i(p))`.
    pub fn enclosure_bounds(&self, params: &LinearSystem) -> Result<(f64, f64)> {
        let domain = ParameterDomain::new(params)?;
        self.enclosure_with(&domain)
    }

    pub fn enclosure_with(&self, domain: &ParameterDomain) -> Result<(f64, f64)> {
        let upper = self.upper_bound(domain)?;
        let mut lower = f64::INFINITY;
        for b in &self.coeffs {
            lower = lower.min(-domain.max_affine(&b.negated())?);
        }
        Ok((lower, upper))
    }

    /// `max_i max_{p∈P} b_i(p)`, the enclosure upper bound alone.
    pub fn upper_bound(&self, domain: &ParameterDomain) -> Result<f64> {
        if self.num_params != domain.dim() {
            return Err(Error::Dimension(format!(
                "Bernstein form over {} parameters, parameter set of dimension {}",
                self.num_params,
                domain.dim()
            )));
        }
        let mut upper = f64::NEG_INFINITY;
        for b in &self.coeffs {
            upper = upper.max(domain.max_affine(b)?);
        }
        Ok(upper)
    }
}

fn bernstein_basis_1d(d: u32, x: f64) -> Vec<f64> {
    let mut binom = 1.0;
    (0..=d)
        .map(|i| {
            if i > 0 {
                binom = binom * (d + 1 - i) as f64 / i as f64;
            }
            binom * x.powi(i as i32) * (1.0 - x).powi((d - i) as i32)
        })
        .collect()
}

/// A nonempty parameter polytope prepared for repeated maximization of
/// affine forms. Axis-aligned bounded sets take a closed-form corner path.
#[derive(Debug, Clone)]
pub struct ParameterDomain {
    system: LinearSystem,
    bounds: Option<(Vec<f64>, Vec<f64>)>,
}

impl ParameterDomain {
    pub fn new(system: &LinearSystem) -> Result<Self> {
        if system.is_empty()? {
            return Err(Error::EmptyParameterSet);
        }
        Ok(ParameterDomain {
            system: system.clone(),
            bounds: system.box_bounds(),
        })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    pub fn max_affine(&self, form: &AffineForm) -> Result<f64> {
        if form.is_parameter_free() {
            return Ok(form.constant);
        }
        if let Some((lo, hi)) = &self.bounds {
            let v: f64 = form
                .linear
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(a, (l, h))| if *a >= 0.0 { a * h } else { a * l })
                .sum();
            return Ok(form.constant + v);
        }
        match self.system.maximize(&form.linear)? {
            LpOutcome::Optimal { value, .. } => Ok(form.constant + value),
            LpOutcome::Unbounded => Err(Error::UnboundedParameterSet),
            LpOutcome::Infeasible => Err(Error::EmptyParameterSet),
            LpOutcome::Stalled => Err(Error::LpStalled(0)),
        }
    }
}

type CacheKey = (Vec<MultiIndex>, MultiIndex);

/// Weight tables keyed by `(support, degree)`, shared across threads.
#[derive(Debug, Default)]
pub struct BernsteinCache {
    tables: RwLock<HashMap<CacheKey, Arc<WeightTable>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl BernsteinCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.tables.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight_table(&self, support: &[MultiIndex], degree: &MultiIndex) -> Result<Arc<WeightTable>> {
        let key = (support.to_vec(), degree.clone());
        if let Some(t) = self.tables.read().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(WeightTable::build(support, degree)?);
        let mut guard = self.tables.write().expect("cache lock");
        let entry = guard.entry(key).or_insert_with(|| Arc::clone(&table));
        self.misses.fetch_add(1, Ordering::Relaxed);
        Ok(Arc::clone(entry))
    }

    /// Same result as [`to_bernstein`], reusing the weight table for `p`'s shape.
    pub fn bernstein(&self, p: &SparsePolynomial) -> Result<BernsteinForm> {
        let degree = p.degree_vector();
        let (support, coeffs) = support_of(p);
        let table = self.weight_table(&support, &degree)?;
        Ok(table.apply(&coeffs, p.num_params()))
    }

    /// Instantiates the placeholders of a symbolic composition with `bindings`
    /// and returns the Bernstein form of the resulting polynomial.
    pub fn instantiate(
        &self,
        composition: &SymbolicComposition,
        bindings: &AffineMap,
    ) -> Result<BernsteinForm> {
        let p = composition.instantiate(bindings)?;
        self.bernstein(&p)
    }
}
