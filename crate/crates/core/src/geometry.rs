//! Polytopes in constraint form, their finite unions, boxes, parallelotopes,
//! and parallelotope bundles.
//!
//! A bundle stores a direction pool `L` with upper offsets `c⁺` and lower
//! offsets `c⁻`, meaning `-c⁻ <= Lx <= c⁺`. Each template picks `n` linearly
//! independent rows of `L`; the rows and their offsets form a parallelotope,
//! and the bundle is the intersection of all template parallelotopes.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linprog::{self, LpOutcome, LpProblem};
use crate::polynomial::AffineMap;

const SINGULAR_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `⟨D, c⟩ = {x : Dx <= c}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    dim: usize,
    directions: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

impl LinearSystem {
    pub fn new(dim: usize, directions: Vec<Vec<f64>>, offsets: Vec<f64>) -> Result<Self> {
        if directions.len() != offsets.len() {
            return Err(Error::Dimension(format!(
                "{} directions but {} offsets",
                directions.len(),
                offsets.len()
            )));
        }
        if directions.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension(format!("direction of wrong length for dimension {dim}")));
        }
        Ok(LinearSystem {
            dim,
            directions,
            offsets,
        })
    }

    /// The whole space (no constraints).
    pub fn universe(dim: usize) -> Self {
        LinearSystem {
            dim,
            directions: Vec::new(),
            offsets: Vec::new(),
        }
    }

    pub fn from_box(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let b = AxisBox::new(lower.to_vec(), upper.to_vec())?;
        Ok(b.to_linear_system())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_unconstrained(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.directions
            .iter()
            .zip(&self.offsets)
            .all(|(d, c)| dot(d, x) <= c + tol)
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(!linprog::is_feasible(&self.directions, &self.offsets)?)
    }

    /// `max c·x` over the set.
    pub fn maximize(&self, objective: &[f64]) -> Result<LpOutcome> {
        linprog::solve(&LpProblem::new(
            objective.to_vec(),
            self.directions.clone(),
            self.offsets.clone(),
        ))
    }

    /// Constraint concatenation; the solution set is the intersection.
    pub fn intersect(&self, other: &LinearSystem) -> Result<LinearSystem> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "intersecting sets of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        let mut out = self.clone();
        out.directions.extend(other.directions.iter().cloned());
        out.offsets.extend_from_slice(&other.offsets);
        Ok(out)
    }

    pub fn with_constraint(&self, direction: Vec<f64>, offset: f64) -> Result<LinearSystem> {
        self.intersect(&LinearSystem::new(self.dim, vec![direction], vec![offset])?)
    }

    /// Per-axis bounds when every row constrains a single coordinate and every
    /// coordinate is bounded on both sides.
    pub fn box_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut lo = vec![f64::NEG_INFINITY; self.dim];
        let mut hi = vec![f64::INFINITY; self.dim];
        for (d, c) in self.directions.iter().zip(&self.offsets) {
            let mut nz = d.iter().enumerate().filter(|(_, v)| **v != 0.0);
            match (nz.next(), nz.next()) {
                (None, _) => {
                    if *c < 0.0 {
                        return None;
                    }
                }
                (Some((k, &a)), None) => {
                    if a > 0.0 {
                        hi[k] = hi[k].min(c / a);
                    } else {
                        lo[k] = lo[k].max(c / a);
                    }
                }
                _ => return None,
            }
        }
        let bounded = lo
            .iter()
            .zip(&hi)
            .all(|(l, h)| l.is_finite() && h.is_finite() && l <= h);
        bounded.then_some((lo, hi))
    }

    /// Axis-aligned bounding box computed by LP.
    pub fn bounding_box(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut lo = Vec::with_capacity(self.dim);
        let mut hi = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[k] = 1.0;
            hi.push(self.support(&e)?);
            e[k] = -1.0;
            lo.push(-self.support(&e)?);
        }
        Ok((lo, hi))
    }

    fn support(&self, direction: &[f64]) -> Result<f64> {
        match self.maximize(direction)? {
            LpOutcome::Optimal { value, .. } => Ok(value),
            LpOutcome::Infeasible => Err(Error::EmptySet),
            LpOutcome::Unbounded => Err(Error::InvalidSet("set is unbounded".into())),
            LpOutcome::Stalled => Err(Error::LpStalled(0)),
        }
    }

    /// Drops constraints implied by the remaining ones. The solution set is
    /// unchanged up to a relative slack of `1e-12` on the dropped rows.
    pub fn remove_redundant(&self) -> Result<LinearSystem> {
        let mut keep: Vec<bool> = vec![true; self.len()];
        for k in 0..self.len() {
            let (dirs, offs): (Vec<_>, Vec<_>) = (0..self.len())
                .filter(|&i| i != k && keep[i])
                .map(|i| (self.directions[i].clone(), self.offsets[i]))
                .unzip();
            let rest = LinearSystem::new(self.dim, dirs, offs)?;
            let redundant = match rest.maximize(&self.directions[k])? {
                LpOutcome::Optimal { value, .. } => {
                    value <= self.offsets[k] + 1e-12 * self.offsets[k].abs().max(1.0)
                }
                LpOutcome::Infeasible => {
                    // Everything else is already empty; keep the row so the
                    // emptiness stays visible.
                    false
                }
                _ => false,
            };
            if redundant {
                keep[k] = false;
            }
        }
        let (dirs, offs) = (0..self.len())
            .filter(|&i| keep[i])
            .map(|i| (self.directions[i].clone(), self.offsets[i]))
            .unzip();
        LinearSystem::new(self.dim, dirs, offs)
    }
}

/// A finite union of polytopes; empty members are pruned on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystemSet {
    dim: usize,
    members: Vec<LinearSystem>,
}

impl LinearSystemSet {
    pub fn new(dim: usize, members: Vec<LinearSystem>) -> Result<Self> {
        let mut kept = Vec::with_capacity(members.len());
        for m in members {
            if m.dim() != dim {
                return Err(Error::Dimension(format!(
                    "member of dimension {} in a set of dimension {dim}",
                    m.dim()
                )));
            }
            if !m.is_empty()? {
                kept.push(m);
            }
        }
        Ok(LinearSystemSet { dim, members: kept })
    }

    pub fn empty(dim: usize) -> Self {
        LinearSystemSet {
            dim,
            members: Vec::new(),
        }
    }

    pub fn singleton(system: LinearSystem) -> Result<Self> {
        Self::new(system.dim(), vec![system])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn members(&self) -> &[LinearSystem] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.members.iter().any(|m| m.contains(x, tol))
    }

    fn check_dim(&self, other: &LinearSystemSet) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!(
                "sets of dimension {} and {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    pub fn intersect(&self, other: &LinearSystemSet) -> Result<LinearSystemSet> {
        self.check_dim(other)?;
        let mut members = Vec::new();
        for a in &self.members {
            for b in &other.members {
                members.push(a.intersect(b)?);
            }
        }
        Self::new(self.dim, members)
    }

    pub fn union(&self, other: &LinearSystemSet) -> Result<LinearSystemSet> {
        self.check_dim(other)?;
        let mut members = self.members.clone();
        for m in &other.members {
            if !members.contains(m) {
                members.push(m.clone());
            }
        }
        Ok(LinearSystemSet {
            dim: self.dim,
            members,
        })
    }
}

/// Hyperrectangle `lower <= x <= upper`; zero-width components are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Dimension("box bounds of different lengths".into()));
        }
        if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] <= upper[k])) {
            return Err(Error::InvalidSet(format!(
                "box component {k} has lower bound {} above upper bound {}",
                lower[k], upper[k]
            )));
        }
        Ok(AxisBox { lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    pub fn to_linear_system(&self) -> LinearSystem {
        let n = self.dim();
        let mut dirs = Vec::with_capacity(2 * n);
        let mut offs = Vec::with_capacity(2 * n);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            dirs.push(e.clone());
            offs.push(self.upper[k]);
            e[k] = -1.0;
            dirs.push(e);
            offs.push(-self.lower[k]);
        }
        LinearSystem {
            dim: n,
            directions: dirs,
            offsets: offs,
        }
    }

    /// Axis directions with a single template.
    pub fn to_bundle(&self) -> Bundle {
        let n = self.dim();
        Bundle {
            directions: identity_rows(n),
            upper: self.upper.clone(),
            lower: self.lower.iter().map(|v| -v).collect(),
            templates: vec![(0..n).collect()],
        }
    }
}

fn identity_rows(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            e
        })
        .collect()
}

fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

/// `|det U|` relative to the product of row norms (Hadamard's bound), so the
/// test does not depend on direction scaling.
fn is_singular(rows: &[Vec<f64>]) -> bool {
    if rows.is_empty() {
        return false;
    }
    let scale: f64 = rows.iter().map(|r| dot(r, r).sqrt()).product();
    if scale == 0.0 {
        return true;
    }
    (matrix(rows).determinant() / scale).abs() < SINGULAR_TOL
}

/// `-lower <= Ux <= upper` with `n` independent rows `U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parallelotope {
    directions: Vec<Vec<f64>>,
    upper: Vec<f64>,
    lower: Vec<f64>,
}

impl Parallelotope {
    pub fn new(directions: Vec<Vec<f64>>, upper: Vec<f64>, lower: Vec<f64>) -> Result<Self> {
        let n = directions.len();
        if upper.len() != n || lower.len() != n || directions.iter().any(|d| d.len() != n) {
            return Err(Error::Dimension(format!(
                "parallelotope needs {n} directions of length {n} with {n} offsets each side"
            )));
        }
        if is_singular(&directions) {
            return Err(Error::DegenerateTemplate(0));
        }
        Ok(Parallelotope {
            directions,
            upper,
            lower,
        })
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.directions
            .iter()
            .zip(self.upper.iter().zip(&self.lower))
            .all(|(d, (u, l))| {
                let v = dot(d, x);
                v <= u + tol && -v <= l + tol
            })
    }

    /// Generator form with the base at the vertex where every lower
    /// constraint is active.
    pub fn to_generator_form(&self) -> Result<AffineMap> {
        let n = self.dim();
        let inv = matrix(&self.directions)
            .try_inverse()
            .ok_or(Error::DegenerateTemplate(0))?;
        let rhs = nalgebra::DVector::from_iterator(n, self.lower.iter().map(|c| -c));
        let base = &inv * rhs;
        let mut generators = Vec::with_capacity(n);
        for j in 0..n {
            let mut width = self.upper[j] + self.lower[j];
            let slack = 1e-9 * (1.0 + self.upper[j].abs() + self.lower[j].abs());
            if width < 0.0 {
                if width < -slack {
                    return Err(Error::EmptySet);
                }
                width = 0.0;
            }
            generators.push((0..n).map(|k| width * inv[(k, j)]).collect());
        }
        AffineMap::new(base.iter().copied().collect(), generators)
    }

    /// Tightest offsets along `directions` of the image of the unit box under `v`.
    pub fn from_generator_form(directions: Vec<Vec<f64>>, v: &AffineMap) -> Result<Self> {
        if v.dim() != directions.len() {
            return Err(Error::Dimension("map and direction count differ".into()));
        }
        let mut upper = Vec::with_capacity(directions.len());
        let mut lower = Vec::with_capacity(directions.len());
        for d in &directions {
            let at_base = dot(d, &v.base);
            let (mut hi, mut lo) = (at_base, at_base);
            for g in &v.generators {
                let s = dot(d, g);
                if s > 0.0 {
                    hi += s;
                } else {
                    lo += s;
                }
            }
            upper.push(hi);
            lower.push(-lo);
        }
        Parallelotope::new(directions, upper, lower)
    }
}

/// Intersection of parallelotopes sharing the direction pool `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    directions: Vec<Vec<f64>>,
    upper: Vec<f64>,
    lower: Vec<f64>,
    templates: Vec<Vec<usize>>,
}

impl Bundle {
    pub fn new(
        directions: Vec<Vec<f64>>,
        upper: Vec<f64>,
        lower: Vec<f64>,
        templates: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let q = directions.len();
        let n = directions.first().map_or(0, Vec::len);
        if n == 0 || directions.iter().any(|d| d.len() != n) {
            return Err(Error::Dimension("bundle directions must share a nonzero length".into()));
        }
        if q < n {
            return Err(Error::InvalidSet(format!(
                "bundle has {q} directions in dimension {n}"
            )));
        }
        if upper.len() != q || lower.len() != q {
            return Err(Error::Dimension(format!(
                "{q} directions need {q} upper and lower offsets"
            )));
        }
        if templates.is_empty() {
            return Err(Error::InvalidSet("bundle has no templates".into()));
        }
        let mut covered = vec![false; q];
        for (t, tpl) in templates.iter().enumerate() {
            if tpl.len() != n || tpl.iter().any(|&i| i >= q) {
                return Err(Error::InvalidSet(format!(
                    "template {t} must list {n} direction indices below {q}"
                )));
            }
            let rows: Vec<Vec<f64>> = tpl.iter().map(|&i| directions[i].clone()).collect();
            if is_singular(&rows) {
                return Err(Error::DegenerateTemplate(t));
            }
            for &i in tpl {
                covered[i] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return Err(Error::InvalidSet(format!(
                "direction {i} is not used by any template"
            )));
        }
        Ok(Bundle {
            directions,
            upper,
            lower,
            templates,
        })
    }

    pub fn dim(&self) -> usize {
        self.directions[0].len()
    }

    pub fn num_directions(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn templates(&self) -> &[Vec<usize>] {
        &self.templates
    }

    /// Same directions and templates with new offsets.
    pub fn with_offsets(&self, upper: Vec<f64>, lower: Vec<f64>) -> Result<Bundle> {
        if upper.len() != self.upper.len() || lower.len() != self.lower.len() {
            return Err(Error::Dimension("offset count changed".into()));
        }
        Ok(Bundle {
            directions: self.directions.clone(),
            upper,
            lower,
            templates: self.templates.clone(),
        })
    }

    /// Offset range `c⁺_i + c⁻_i` along direction `i`.
    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] + self.lower[i]
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.directions
            .iter()
            .zip(self.upper.iter().zip(&self.lower))
            .all(|(d, (u, l))| {
                let v = dot(d, x);
                v <= u + tol && -v <= l + tol
            })
    }

    pub fn template_parallelotope(&self, t: usize) -> Result<Parallelotope> {
        let tpl = self
            .templates
            .get(t)
            .ok_or_else(|| Error::InvalidSet(format!("no template {t}")))?;
        Parallelotope::new(
            tpl.iter().map(|&i| self.directions[i].clone()).collect(),
            tpl.iter().map(|&i| self.upper[i]).collect(),
            tpl.iter().map(|&i| self.lower[i]).collect(),
        )
        .map_err(|e| match e {
            Error::DegenerateTemplate(_) => Error::DegenerateTemplate(t),
            e => e,
        })
    }

    pub fn to_linear_system(&self) -> LinearSystem {
        let mut dirs = Vec::with_capacity(2 * self.directions.len());
        let mut offs = Vec::with_capacity(2 * self.directions.len());
        for (d, (u, l)) in self.directions.iter().zip(self.upper.iter().zip(&self.lower)) {
            dirs.push(d.clone());
            offs.push(*u);
            dirs.push(d.iter().map(|v| -v).collect());
            offs.push(*l);
        }
        LinearSystem {
            dim: self.dim(),
            directions: dirs,
            offsets: offs,
        }
    }

    /// Replaces every offset with the support value of the whole bundle in
    /// that direction. Offsets never grow.
    pub fn canonicalize(&self) -> Result<Bundle> {
        let system = self.to_linear_system();
        if system.is_empty()? {
            return Err(Error::EmptySet);
        }
        let mut upper = self.upper.clone();
        let mut lower = self.lower.clone();
        for (i, d) in self.directions.iter().enumerate() {
            let neg: Vec<f64> = d.iter().map(|v| -v).collect();
            let hi = system.support(d)?;
            let lo = system.support(&neg)?;
            upper[i] = upper[i].min(hi);
            lower[i] = lower[i].min(lo);
        }
        self.with_offsets(upper, lower)
    }
}
