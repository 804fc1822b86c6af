//! Sparse multivariate polynomials over the state variables whose coefficients
//! are affine forms in the parameters.
//!
//! Every coefficient is an [`AffineForm`] `c + Σ_j a_j p_j`, so a polynomial
//! `π(x, p)` is always linear in `p`. Products that would break this (two
//! parameter-dependent factors) are rejected. Terms are kept in a `BTreeMap`
//! under graded-lexicographic order, which makes iteration and every output
//! derived from it deterministic.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Exponent vector of a monomial `x_1^{i_1} ... x_n^{i_n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zeros(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The multi-index with a single `1` at position `k`.
    pub fn unit(n: usize, k: usize) -> Self {
        let mut e = vec![0; n];
        e[k] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Componentwise `self <= other`.
    pub fn dominated_by(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `x^i` evaluated at a point.
    pub fn monomial_value(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(e, _)| **e > 0)
            .map(|(e, v)| v.powi(*e as i32))
            .product()
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `constant + Σ_j linear[j] · p_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub constant: f64,
    pub linear: Vec<f64>,
}

impl AffineForm {
    pub fn zero(m: usize) -> Self {
        AffineForm {
            constant: 0.0,
            linear: vec![0.0; m],
        }
    }

    pub fn constant(m: usize, c: f64) -> Self {
        AffineForm {
            constant: c,
            linear: vec![0.0; m],
        }
    }

    /// The form `p_j`.
    pub fn parameter(m: usize, j: usize) -> Self {
        let mut linear = vec![0.0; m];
        linear[j] = 1.0;
        AffineForm {
            constant: 0.0,
            linear,
        }
    }

    pub fn num_params(&self) -> usize {
        self.linear.len()
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.is_parameter_free()
    }

    pub fn is_parameter_free(&self) -> bool {
        self.linear.iter().all(|a| *a == 0.0)
    }

    pub fn evaluate(&self, p: &[f64]) -> f64 {
        self.constant + self.linear.iter().zip(p).map(|(a, v)| a * v).sum::<f64>()
    }

    pub fn add_assign(&mut self, other: &AffineForm) {
        self.constant += other.constant;
        for (a, b) in self.linear.iter_mut().zip(&other.linear) {
            *a += b;
        }
    }

    /// `self += k · other`
    pub fn add_scaled(&mut self, k: f64, other: &AffineForm) {
        self.constant += k * other.constant;
        for (a, b) in self.linear.iter_mut().zip(&other.linear) {
            *a += k * b;
        }
    }

    pub fn scaled(&self, k: f64) -> AffineForm {
        AffineForm {
            constant: k * self.constant,
            linear: self.linear.iter().map(|a| k * a).collect(),
        }
    }

    pub fn negated(&self) -> AffineForm {
        self.scaled(-1.0)
    }

    /// Product of two forms, defined only when at least one is parameter-free.
    pub fn checked_mul(&self, other: &AffineForm) -> Result<AffineForm> {
        if self.is_parameter_free() {
            Ok(other.scaled(self.constant))
        } else if other.is_parameter_free() {
            Ok(self.scaled(other.constant))
        } else {
            Err(Error::ParameterNonlinear)
        }
    }
}

/// A point in the generator representation of a parallelotope:
/// `u ↦ base + Σ_j u_j · generators[j]` for `u ∈ [0,1]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub base: Vec<f64>,
    /// `generators[j]` is the column vector `g_j`.
    pub generators: Vec<Vec<f64>>,
}

impl AffineMap {
    pub fn new(base: Vec<f64>, generators: Vec<Vec<f64>>) -> Result<Self> {
        let n = base.len();
        if generators.len() != n || generators.iter().any(|g| g.len() != n) {
            return Err(Error::Dimension(format!(
                "affine map needs {n} generators of length {n}"
            )));
        }
        Ok(AffineMap { base, generators })
    }

    pub fn identity(n: usize) -> Self {
        let generators = (0..n)
            .map(|j| {
                let mut g = vec![0.0; n];
                g[j] = 1.0;
                g
            })
            .collect();
        AffineMap {
            base: vec![0.0; n],
            generators,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut x = self.base.clone();
        for (uj, g) in u.iter().zip(&self.generators) {
            for (xk, gk) in x.iter_mut().zip(g) {
                *xk += uj * gk;
            }
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsePolynomial {
    num_vars: usize,
    num_params: usize,
    terms: BTreeMap<MultiIndex, AffineForm>,
}

impl SparsePolynomial {
    pub fn zero(num_vars: usize, num_params: usize) -> Self {
        SparsePolynomial {
            num_vars,
            num_params,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, num_params: usize, c: f64) -> Self {
        Self::from_affine(num_vars, AffineForm::constant(num_params, c))
    }

    /// The constant (in x) polynomial with the given affine coefficient.
    pub fn from_affine(num_vars: usize, form: AffineForm) -> Self {
        let mut p = Self::zero(num_vars, form.num_params());
        p.insert(MultiIndex::zeros(num_vars), form);
        p
    }

    pub fn variable(num_vars: usize, num_params: usize, k: usize) -> Self {
        let mut p = Self::zero(num_vars, num_params);
        p.insert(
            MultiIndex::unit(num_vars, k),
            AffineForm::constant(num_params, 1.0),
        );
        p
    }

    pub fn parameter(num_vars: usize, num_params: usize, j: usize) -> Self {
        Self::from_affine(num_vars, AffineForm::parameter(num_params, j))
    }

    /// Builds a polynomial from terms, summing repeated multi-indices.
    pub fn from_terms(
        num_vars: usize,
        num_params: usize,
        terms: impl IntoIterator<Item = (MultiIndex, AffineForm)>,
    ) -> Result<Self> {
        let mut p = Self::zero(num_vars, num_params);
        for (idx, form) in terms {
            if idx.len() != num_vars || form.num_params() != num_params {
                return Err(Error::Dimension(format!(
                    "term {:?} does not fit {num_vars} variables and {num_params} parameters",
                    idx.exponents()
                )));
            }
            p.accumulate(idx, &form, 1.0);
        }
        Ok(p)
    }

    fn insert(&mut self, idx: MultiIndex, form: AffineForm) {
        if !form.is_zero() {
            self.terms.insert(idx, form);
        }
    }

    fn accumulate(&mut self, idx: MultiIndex, form: &AffineForm, k: f64) {
        match self.terms.get_mut(&idx) {
            Some(existing) => {
                existing.add_scaled(k, form);
                if existing.is_zero() {
                    self.terms.remove(&idx);
                }
            }
            None => {
                let f = form.scaled(k);
                self.insert(idx, f);
            }
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &AffineForm)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, idx: &MultiIndex) -> Option<&AffineForm> {
        self.terms.get(idx)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_parameter_free(&self) -> bool {
        self.terms.values().all(AffineForm::is_parameter_free)
    }

    /// Componentwise maximum of the exponents (all zero for the zero polynomial).
    pub fn degree_vector(&self) -> MultiIndex {
        let mut d = vec![0; self.num_vars];
        for idx in self.terms.keys() {
            for (dk, ek) in d.iter_mut().zip(idx.exponents()) {
                *dk = (*dk).max(*ek);
            }
        }
        MultiIndex(d)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(MultiIndex::total_degree).max().unwrap_or(0)
    }

    fn check_same_shape(&self, other: &SparsePolynomial) -> Result<()> {
        if self.num_vars != other.num_vars || self.num_params != other.num_params {
            return Err(Error::Dimension(format!(
                "polynomials over ({}, {}) and ({}, {}) variables/parameters",
                self.num_vars, self.num_params, other.num_vars, other.num_params
            )));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &SparsePolynomial) -> Result<SparsePolynomial> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (idx, form) in &other.terms {
            out.accumulate(idx.clone(), form, 1.0);
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &SparsePolynomial) -> Result<SparsePolynomial> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (idx, form) in &other.terms {
            out.accumulate(idx.clone(), form, -1.0);
        }
        Ok(out)
    }

    pub fn scaled(&self, k: f64) -> SparsePolynomial {
        let mut out = Self::zero(self.num_vars, self.num_params);
        for (idx, form) in &self.terms {
            out.insert(idx.clone(), form.scaled(k));
        }
        out
    }

    pub fn negated(&self) -> SparsePolynomial {
        self.scaled(-1.0)
    }

    pub fn checked_mul(&self, other: &SparsePolynomial) -> Result<SparsePolynomial> {
        self.check_same_shape(other)?;
        if !self.is_parameter_free() && !other.is_parameter_free() {
            return Err(Error::ParameterNonlinear);
        }
        let mut out = Self::zero(self.num_vars, self.num_params);
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                let prod = a.checked_mul(b)?;
                out.accumulate(i.add(j), &prod, 1.0);
            }
        }
        Ok(out)
    }

    pub fn checked_pow(&self, e: u32) -> Result<SparsePolynomial> {
        let mut acc = Self::constant(self.num_vars, self.num_params, 1.0);
        for _ in 0..e {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }

    pub fn evaluate(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        if x.len() != self.num_vars || p.len() != self.num_params {
            return Err(Error::Dimension(format!(
                "evaluation point has {} coordinates and {} parameters, expected {} and {}",
                x.len(),
                p.len(),
                self.num_vars,
                self.num_params
            )));
        }
        Ok(self.evaluate_unchecked(x, p))
    }

    pub(crate) fn evaluate_unchecked(&self, x: &[f64], p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(idx, form)| form.evaluate(p) * idx.monomial_value(x))
            .sum()
    }

    /// Substitutes `x_k := subs[k]`, where every `subs[k]` is a parameter-free
    /// polynomial over a common target variable set.
    ///
    /// Variables are eliminated one at a time in Horner form, so intermediate
    /// results never contain more than one partially expanded variable.
    pub fn substitute(&self, subs: &[SparsePolynomial]) -> Result<SparsePolynomial> {
        if subs.len() != self.num_vars {
            return Err(Error::Dimension(format!(
                "{} substitutions for {} variables",
                subs.len(),
                self.num_vars
            )));
        }
        let target_vars = subs.first().map_or(0, |s| s.num_vars);
        for s in subs {
            if s.num_vars != target_vars || s.num_params != self.num_params {
                return Err(Error::Dimension(
                    "substituted polynomials must share one variable set and the parameter count"
                        .into(),
                ));
            }
            if !s.is_parameter_free() {
                return Err(Error::ParameterNonlinear);
            }
        }
        if self.terms.is_empty() {
            return Ok(Self::zero(target_vars, self.num_params));
        }
        let terms: Vec<_> = self.terms.iter().collect();
        horner(&terms, 0, subs, target_vars, self.num_params)
    }

    /// `q(u) = self(v(u))`, a polynomial in fresh variables `u`.
    pub fn compose_affine(&self, v: &AffineMap) -> Result<SparsePolynomial> {
        let n = self.num_vars;
        if v.dim() != n {
            return Err(Error::Dimension(format!(
                "affine map of dimension {} applied to a polynomial in {n} variables",
                v.dim()
            )));
        }
        let subs: Vec<_> = (0..n)
            .map(|k| {
                let mut s = Self::constant(n, self.num_params, v.base[k]);
                for (j, g) in v.generators.iter().enumerate() {
                    s.accumulate(
                        MultiIndex::unit(n, j),
                        &AffineForm::constant(self.num_params, g[k]),
                        1.0,
                    );
                }
                s
            })
            .collect();
        self.substitute(&subs)
    }

    /// Composes with a generic affine map whose base and generator entries are
    /// left as placeholder symbols. `existing` lists names already in use; the
    /// generated placeholder names must not collide with them.
    pub fn compose_symbolic(&self, existing: &[&str]) -> Result<SymbolicComposition> {
        let n = self.num_vars;
        let names = SymbolicComposition::symbol_names(n);
        if let Some(clash) = names.iter().find(|s| existing.contains(&s.as_str())) {
            return Err(Error::SymbolCollision(clash.clone()));
        }
        let ext = n + n + n * n;
        let m = self.num_params;
        let subs: Vec<_> = (0..n)
            .map(|k| {
                let mut s = Self::variable(ext, m, n + k);
                for j in 0..n {
                    let mut e = vec![0; ext];
                    e[j] = 1;
                    e[2 * n + k * n + j] = 1;
                    s.accumulate(MultiIndex(e), &AffineForm::constant(m, 1.0), 1.0);
                }
                s
            })
            .collect();
        let poly = self.substitute(&subs)?;
        Ok(SymbolicComposition::new(n, poly))
    }

    /// Renders the polynomial as an expression readable by the model parser.
    pub fn to_expression(&self, vars: &[String], params: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (t, (idx, form)) in self.terms.iter().enumerate() {
            let monomial: Vec<String> = idx
                .exponents()
                .iter()
                .enumerate()
                .filter(|(_, e)| **e > 0)
                .map(|(k, e)| {
                    if *e == 1 {
                        vars[k].clone()
                    } else {
                        format!("{}^{}", vars[k], e)
                    }
                })
                .collect();
            let monomial = monomial.join("*");
            let (negative, text) = if form.is_parameter_free() {
                let c = form.constant;
                let mag = c.abs();
                let text = if monomial.is_empty() {
                    format!("{mag}")
                } else if mag == 1.0 {
                    monomial
                } else {
                    format!("{mag}*{monomial}")
                };
                (c.is_sign_negative(), text)
            } else {
                let coeff = affine_to_expression(form, params);
                let text = if monomial.is_empty() {
                    coeff
                } else {
                    format!("{coeff}*{monomial}")
                };
                (false, text)
            };
            match (t, negative) {
                (0, false) => {}
                (0, true) => out.push('-'),
                (_, false) => out.push_str(" + "),
                (_, true) => out.push_str(" - "),
            }
            out.push_str(&text);
        }
        out
    }
}

pub(crate) fn affine_to_expression(form: &AffineForm, params: &[String]) -> String {
    if form.is_parameter_free() {
        return format_real(form.constant);
    }
    let mut parts = Vec::new();
    if form.constant != 0.0 {
        parts.push(format_real(form.constant));
    }
    for (j, a) in form.linear.iter().enumerate() {
        if *a != 0.0 {
            parts.push(format!("{}*{}", format_real(*a), params[j]));
        }
    }
    format!("({})", parts.join(" + "))
}

/// Shortest decimal text that parses back to the same `f64`.
pub(crate) fn format_real(v: f64) -> String {
    if v < 0.0 {
        format!("({v})")
    } else {
        format!("{v}")
    }
}

fn horner(
    terms: &[(&MultiIndex, &AffineForm)],
    var: usize,
    subs: &[SparsePolynomial],
    target_vars: usize,
    m: usize,
) -> Result<SparsePolynomial> {
    if var == subs.len() {
        let mut out = SparsePolynomial::zero(target_vars, m);
        for (_, form) in terms {
            out.accumulate(MultiIndex::zeros(target_vars), form, 1.0);
        }
        return Ok(out);
    }
    let mut groups: BTreeMap<u32, Vec<(&MultiIndex, &AffineForm)>> = BTreeMap::new();
    for &(idx, form) in terms {
        groups.entry(idx.exponents()[var]).or_default().push((idx, form));
    }
    let top = *groups.keys().next_back().expect("nonempty term list");
    let mut acc: Option<SparsePolynomial> = None;
    for e in (0..=top).rev() {
        if let Some(a) = acc.take() {
            acc = Some(a.checked_mul(&subs[var])?);
        }
        if let Some(group) = groups.get(&e) {
            let inner = horner(group, var + 1, subs, target_vars, m)?;
            acc = Some(match acc {
                Some(a) => a.checked_add(&inner)?,
                None => inner,
            });
        }
    }
    Ok(acc.expect("top exponent group is nonempty"))
}

/// A polynomial composed with a symbolic affine map
/// `x_k = q_k + Σ_j G_{kj} u_j`.
///
/// The extended variable layout is `u_0..u_{n-1}`, then `q_0..q_{n-1}`, then
/// `G_{kj}` at `2n + k·n + j`. Instantiating the placeholders with the numbers
/// of a concrete [`AffineMap`] yields the same polynomial as
/// [`SparsePolynomial::compose_affine`].
#[derive(Debug, Clone)]
pub struct SymbolicComposition {
    n: usize,
    poly: SparsePolynomial,
    /// Terms grouped by their `u` multi-index, with placeholder exponents.
    groups: Vec<(MultiIndex, Vec<(Vec<(usize, u32)>, AffineForm)>)>,
}

impl SymbolicComposition {
    fn new(n: usize, poly: SparsePolynomial) -> Self {
        let mut grouped: BTreeMap<MultiIndex, Vec<(Vec<(usize, u32)>, AffineForm)>> =
            BTreeMap::new();
        for (idx, form) in poly.terms() {
            let e = idx.exponents();
            let u = MultiIndex(e[..n].to_vec());
            let placeholders = e[n..]
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0)
                .map(|(s, p)| (s, *p))
                .collect();
            grouped.entry(u).or_default().push((placeholders, form.clone()));
        }
        SymbolicComposition {
            n,
            poly,
            groups: grouped.into_iter().collect(),
        }
    }

    /// Names of the extended symbols, in variable order.
    pub fn symbol_names(n: usize) -> Vec<String> {
        let mut names: Vec<String> = (0..n).map(|j| format!("$u{j}")).collect();
        names.extend((0..n).map(|k| format!("$q{k}")));
        for k in 0..n {
            for j in 0..n {
                names.push(format!("$g{k}_{j}"));
            }
        }
        names
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// The composition as a polynomial over the extended symbol set.
    pub fn polynomial(&self) -> &SparsePolynomial {
        &self.poly
    }

    pub fn instantiate(&self, v: &AffineMap) -> Result<SparsePolynomial> {
        let n = self.n;
        if v.dim() != n {
            return Err(Error::Dimension(format!(
                "bindings for a {}-dimensional map, expected {n}",
                v.dim()
            )));
        }
        let mut values = Vec::with_capacity(n + n * n);
        values.extend_from_slice(&v.base);
        for k in 0..n {
            for j in 0..n {
                values.push(v.generators[j][k]);
            }
        }
        let m = self.poly.num_params();
        let mut out = SparsePolynomial::zero(n, m);
        for (u, terms) in &self.groups {
            let mut acc = AffineForm::zero(m);
            for (placeholders, form) in terms {
                let w: f64 = placeholders
                    .iter()
                    .map(|(s, e)| values[*s].powi(*e as i32))
                    .product();
                acc.add_scaled(w, form);
            }
            out.insert(u.clone(), acc);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(n: usize, k: usize) -> SparsePolynomial {
        SparsePolynomial::variable(n, 0, k)
    }

    #[test]
    fn cancellation_restores_sparsity() {
        let a = x(1, 0)
            .checked_add(&SparsePolynomial::constant(1, 0, 2.0))
            .unwrap();
        let b = x(1, 0).negated();
        let s = a.checked_add(&b).unwrap();
        assert_eq!(s, SparsePolynomial::constant(1, 0, 2.0));
        assert_eq!(s.num_terms(), 1);
    }

    #[test]
    fn zero_is_additive_identity() {
        let p = x(2, 0).checked_mul(&x(2, 1)).unwrap();
        assert_eq!(SparsePolynomial::zero(2, 0).checked_add(&p).unwrap(), p);
    }

    #[test]
    fn add_rejects_mismatched_shapes() {
        assert!(matches!(
            x(1, 0).checked_add(&x(2, 0)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(
            x(1, 0).checked_mul(&x(1, 0)).unwrap(),
            SparsePolynomial::from_terms(
                1,
                0,
                [(MultiIndex::new(vec![2]), AffineForm::constant(0, 1.0))]
            )
            .unwrap()
        );
        let p1x1 = SparsePolynomial::parameter(2, 1, 0)
            .checked_mul(&SparsePolynomial::variable(2, 1, 0))
            .unwrap();
        let prod = p1x1.checked_mul(&SparsePolynomial::variable(2, 1, 1)).unwrap();
        assert_eq!(prod.num_terms(), 1);
        assert_eq!(
            prod.coefficient(&MultiIndex::new(vec![1, 1])),
            Some(&AffineForm::parameter(1, 0))
        );
    }

    #[test]
    fn multiply_rejects_quadratic_parameters() {
        let p = SparsePolynomial::parameter(1, 1, 0);
        assert!(matches!(p.checked_mul(&p), Err(Error::ParameterNonlinear)));
    }

    #[test]
    fn evaluate_examples() {
        let p = x(2, 0)
            .checked_pow(2)
            .unwrap()
            .checked_add(&x(2, 1).scaled(2.0))
            .unwrap();
        assert_eq!(p.evaluate(&[3.0, 1.0], &[]).unwrap(), 11.0);
        assert_eq!(
            SparsePolynomial::zero(2, 1).evaluate(&[4.0, 5.0], &[6.0]).unwrap(),
            0.0
        );
        let q = SparsePolynomial::parameter(2, 1, 0)
            .checked_mul(&SparsePolynomial::variable(2, 1, 0))
            .unwrap()
            .checked_mul(&SparsePolynomial::variable(2, 1, 1))
            .unwrap();
        assert_eq!(q.evaluate(&[2.0, 3.0], &[0.5]).unwrap(), 3.0);
        assert!(q.evaluate(&[2.0], &[0.5]).is_err());
    }

    #[test]
    fn compose_examples() {
        assert_eq!(
            x(1, 0).compose_affine(&AffineMap::identity(1)).unwrap(),
            x(1, 0)
        );
        let sq = x(1, 0).checked_pow(2).unwrap();
        let v = AffineMap::new(vec![1.0], vec![vec![2.0]]).unwrap();
        let got = sq.compose_affine(&v).unwrap();
        let expected = x(1, 0)
            .checked_pow(2)
            .unwrap()
            .scaled(4.0)
            .checked_add(&x(1, 0).scaled(4.0))
            .unwrap()
            .checked_add(&SparsePolynomial::constant(1, 0, 1.0))
            .unwrap();
        assert_eq!(got, expected);

        let sum = x(2, 0).checked_add(&x(2, 1)).unwrap();
        let v = AffineMap::new(vec![0.0, 0.0], vec![vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let got = sum.compose_affine(&v).unwrap();
        let expected = x(2, 0).scaled(2.0).checked_add(&x(2, 1)).unwrap();
        assert_eq!(got, expected);
    }

    #[test]
    fn symbolic_linear_structure() {
        let sym = x(2, 0).compose_symbolic(&[]).unwrap();
        // q0 + u0*g0_0 + u1*g0_1
        assert_eq!(sym.polynomial().num_terms(), 3);
        assert_eq!(sym.polynomial().total_degree(), 2);
    }

    #[test]
    fn symbolic_specializes_to_numeric() {
        let sq = x(1, 0).checked_pow(2).unwrap();
        let v = AffineMap::new(vec![1.0], vec![vec![2.0]]).unwrap();
        let sym = sq.compose_symbolic(&["x"]).unwrap();
        assert_eq!(sym.instantiate(&v).unwrap(), sq.compose_affine(&v).unwrap());
    }

    #[test]
    fn symbolic_rejects_collisions() {
        assert!(matches!(
            x(1, 0).compose_symbolic(&["$q0"]),
            Err(Error::SymbolCollision(_))
        ));
    }

    #[test]
    fn degree_vector_of_zero_is_zero() {
        assert_eq!(
            SparsePolynomial::zero(3, 0).degree_vector(),
            MultiIndex::zeros(3)
        );
    }

    #[test]
    fn graded_order_puts_constant_first() {
        let p = x(2, 0)
            .checked_mul(&x(2, 1))
            .unwrap()
            .checked_add(&SparsePolynomial::constant(2, 0, 1.0))
            .unwrap()
            .checked_add(&x(2, 1))
            .unwrap();
        let degrees: Vec<u32> = p.terms().map(|(i, _)| i.total_degree()).collect();
        assert_eq!(degrees, vec![0, 1, 2]);
    }
}
