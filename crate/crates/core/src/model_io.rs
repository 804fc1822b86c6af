//! Model files, JSON artifacts, and 2D projections.
//!
//! A model file declares variables and parameters, the dynamics, the initial
//! set, an optional specification, and run options:
//!
//! ```text
//! model sir;
//! var s, i, r;
//! param beta in [0.18, 0.20];
//! param gamma in [0.05, 0.06];
//! dynamics {
//!   s' = s - beta*s*i;
//!   i' = i + beta*s*i - gamma*i;
//!   r' = r + gamma*i;
//! }
//! init box { s in [0.79, 0.80]; i in [0.19, 0.20]; r in [0, 0]; }
//! spec G[50,100](i <= 0.44);
//! option steps 300;
//! ```
//!
//! Declarations (`var`, `param`) must precede their use. The full grammar is
//! in `docs/model-format.md`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Location, ParseError, Result};
use crate::geometry::{AxisBox, Bundle, LinearSystem, LinearSystemSet};
use crate::linprog::LpOutcome;
use crate::polynomial::SparsePolynomial;
use crate::reachability::{Flowpipe, Model};
use crate::stl::{self, Formula};
use crate::syntax::{Parser, Scope, Tok};

pub const DEFAULT_FAN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub steps: Option<usize>,
    /// Projection axes by variable name.
    pub project: Option<(String, String)>,
    /// Number of directions used for projections.
    pub fan: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            steps: None,
            project: None,
            fan: DEFAULT_FAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub model: Model,
    pub initial: Bundle,
    pub params: LinearSystem,
    pub spec: Option<Formula>,
    pub options: Options,
}

impl ProblemSpec {
    /// Index of a state variable by name.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.model.state_vars.iter().position(|v| v == name)
    }
}

pub fn load_problem(path: impl AsRef<Path>) -> Result<ProblemSpec> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_model_file(&text)?)
}

pub fn parse_model_file(text: &str) -> std::result::Result<ProblemSpec, ParseError> {
    ModelParser::new(text)?.run()
}

#[derive(Default)]
struct Sections {
    name: Option<String>,
    vars: Vec<String>,
    params: Vec<String>,
    param_boxes: Vec<(usize, f64, f64)>,
    paramset: Vec<(Vec<f64>, f64)>,
    dynamics: Option<Vec<SparsePolynomial>>,
    dynamics_loc: Option<Location>,
    initial: Option<Bundle>,
    spec: Option<Formula>,
    options: Options,
    /// Set once a section refers to the declared names.
    sealed: bool,
}

struct ModelParser {
    p: Parser,
    s: Sections,
}

type PResult<T> = std::result::Result<T, ParseError>;

fn at(loc: Location, e: impl std::fmt::Display) -> ParseError {
    ParseError::new(loc, e.to_string())
}

impl ModelParser {
    fn new(text: &str) -> PResult<Self> {
        Ok(ModelParser {
            p: Parser::new(text)?,
            s: Sections::default(),
        })
    }

    fn run(mut self) -> PResult<ProblemSpec> {
        while !self.p.at_eof() {
            let loc = self.p.loc();
            let kw = match self.p.peek() {
                Tok::Ident(s) => s.clone(),
                _ => return Err(self.p.unexpected("a section keyword")),
            };
            self.p.bump();
            match kw.as_str() {
                "model" => {
                    if self.s.name.is_some() {
                        return Err(at(loc, "model name given twice"));
                    }
                    self.s.name = Some(self.p.expect_ident()?);
                    self.p.expect_sym(";")?;
                }
                "var" => self.declare(loc, false)?,
                "param" => self.declare(loc, true)?,
                "paramset" => self.paramset()?,
                "dynamics" => self.dynamics(loc)?,
                "init" => self.init(loc)?,
                "spec" => {
                    if self.s.spec.is_some() {
                        return Err(at(loc, "spec given twice"));
                    }
                    self.seal(loc)?;
                    let f = stl::formula(&mut self.p, &self.s.vars)?;
                    self.p.expect_sym(";")?;
                    self.s.spec = Some(f);
                }
                "option" => self.option()?,
                other => return Err(at(loc, format!("unknown section `{other}`"))),
            }
        }
        self.finish()
    }

    fn seal(&mut self, loc: Location) -> PResult<()> {
        if self.s.vars.is_empty() {
            return Err(at(loc, "no state variables declared before this section"));
        }
        self.s.sealed = true;
        Ok(())
    }

    fn declare(&mut self, loc: Location, param: bool) -> PResult<()> {
        if self.s.sealed {
            return Err(at(
                loc,
                "declarations must precede dynamics, sets, and specifications",
            ));
        }
        let mut names = Vec::new();
        loop {
            let name_loc = self.p.loc();
            let name = self.p.expect_ident()?;
            if self.s.vars.contains(&name) || self.s.params.contains(&name) || names.contains(&name)
            {
                return Err(at(name_loc, format!("`{name}` declared twice")));
            }
            names.push(name);
            if !self.p.eat_sym(",") {
                break;
            }
        }
        if param && self.p.is_keyword("in") {
            if names.len() != 1 {
                return Err(at(loc, "an interval can only bound a single parameter"));
            }
            self.p.bump();
            let (lo, hi) = self.interval()?;
            self.s.param_boxes.push((self.s.params.len(), lo, hi));
        }
        self.p.expect_sym(";")?;
        if param {
            self.s.params.extend(names);
        } else {
            self.s.vars.extend(names);
        }
        Ok(())
    }

    fn interval(&mut self) -> PResult<(f64, f64)> {
        let loc = self.p.loc();
        self.p.expect_sym("[")?;
        let lo = self.p.expect_real()?;
        self.p.expect_sym(",")?;
        let hi = self.p.expect_real()?;
        self.p.expect_sym("]")?;
        if !(lo <= hi) {
            return Err(at(loc, format!("malformed interval [{lo}, {hi}]")));
        }
        Ok((lo, hi))
    }

    fn paramset(&mut self) -> PResult<()> {
        let loc = self.p.loc();
        self.seal(loc)?;
        self.p.expect_sym("{")?;
        let scope = Scope {
            vars: &[],
            params: &self.s.params,
        };
        while !self.p.eat_sym("}") {
            let loc = self.p.loc();
            let lhs = self.p.expression(&scope)?;
            let le = if self.p.eat_sym("<=") {
                true
            } else if self.p.eat_sym(">=") {
                false
            } else {
                return Err(self.p.unexpected("`<=` or `>=`"));
            };
            let rhs = self.p.expression(&scope)?;
            self.p.expect_sym(";")?;
            let g = if le { lhs.checked_sub(&rhs) } else { rhs.checked_sub(&lhs) }
                .map_err(|e| at(loc, e))?;
            // With no state variables every term is the constant monomial.
            let form = g.terms().next().map(|(_, f)| f.clone());
            let (row, offset) = match form {
                Some(f) => (f.linear.clone(), -f.constant),
                None => (vec![0.0; self.s.params.len()], 0.0),
            };
            self.s.paramset.push((row, offset));
        }
        Ok(())
    }

    fn dynamics(&mut self, loc: Location) -> PResult<()> {
        self.seal(loc)?;
        if self.s.dynamics.is_some() {
            return Err(at(loc, "dynamics given twice"));
        }
        self.p.expect_sym("{")?;
        let n = self.s.vars.len();
        let mut out: Vec<Option<SparsePolynomial>> = vec![None; n];
        while !self.p.is_sym("}") {
            let var_loc = self.p.loc();
            let name = self.p.expect_ident()?;
            let k = self
                .s
                .vars
                .iter()
                .position(|v| *v == name)
                .ok_or_else(|| at(var_loc, format!("unknown state variable `{name}`")))?;
            if out[k].is_some() {
                return Err(at(var_loc, format!("dynamics of `{name}` given twice")));
            }
            self.p.expect_sym("'")?;
            self.p.expect_sym("=")?;
            let scope = Scope {
                vars: &self.s.vars,
                params: &self.s.params,
            };
            out[k] = Some(self.p.expression(&scope)?);
            self.p.expect_sym(";")?;
        }
        let close = self.p.loc();
        self.p.bump();
        let mut dynamics = Vec::with_capacity(n);
        for (k, f) in out.into_iter().enumerate() {
            dynamics.push(
                f.ok_or_else(|| at(close, format!("missing dynamics for `{}`", self.s.vars[k])))?,
            );
        }
        self.s.dynamics = Some(dynamics);
        self.s.dynamics_loc = Some(loc);
        Ok(())
    }

    fn init(&mut self, loc: Location) -> PResult<()> {
        self.seal(loc)?;
        if self.s.initial.is_some() {
            return Err(at(loc, "initial set given twice"));
        }
        let bundle = if self.p.is_keyword("box") {
            self.p.bump();
            self.init_box()?
        } else if self.p.is_keyword("bundle") {
            self.p.bump();
            self.init_bundle(loc)?
        } else {
            return Err(self.p.unexpected("`box` or `bundle`"));
        };
        self.s.initial = Some(bundle);
        Ok(())
    }

    fn init_box(&mut self) -> PResult<Bundle> {
        self.p.expect_sym("{")?;
        let n = self.s.vars.len();
        let mut bounds: Vec<Option<(f64, f64)>> = vec![None; n];
        while !self.p.is_sym("}") {
            let var_loc = self.p.loc();
            let name = self.p.expect_ident()?;
            let k = self
                .s
                .vars
                .iter()
                .position(|v| *v == name)
                .ok_or_else(|| at(var_loc, format!("unknown state variable `{name}`")))?;
            if bounds[k].is_some() {
                return Err(at(var_loc, format!("bounds of `{name}` given twice")));
            }
            self.p.expect_keyword("in")?;
            bounds[k] = Some(self.interval()?);
            self.p.expect_sym(";")?;
        }
        let close = self.p.loc();
        self.p.bump();
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        for (k, b) in bounds.into_iter().enumerate() {
            let (l, h) =
                b.ok_or_else(|| at(close, format!("missing bounds for `{}`", self.s.vars[k])))?;
            lo.push(l);
            hi.push(h);
        }
        Ok(AxisBox::new(lo, hi).map_err(|e| at(close, e))?.to_bundle())
    }

    fn init_bundle(&mut self, loc: Location) -> PResult<Bundle> {
        self.p.expect_sym("{")?;
        let mut directions = Vec::new();
        let mut upper = Vec::new();
        let mut lower = Vec::new();
        let mut templates = Vec::new();

        self.p.expect_keyword("directions")?;
        self.p.expect_sym("{")?;
        let scope = Scope {
            vars: &self.s.vars,
            params: &[],
        };
        while !self.p.eat_sym("}") {
            let dloc = self.p.loc();
            let e = self.p.expression(&scope)?;
            self.p.expect_sym(";")?;
            directions.push(linear_row(&e).ok_or_else(|| {
                at(dloc, "a direction must be a linear expression without constant term")
            })?);
        }

        self.p.expect_keyword("offsets")?;
        self.p.expect_sym("{")?;
        while !self.p.eat_sym("}") {
            let (lo, hi) = self.interval()?;
            self.p.expect_sym(";")?;
            upper.push(hi);
            lower.push(-lo);
        }
        if upper.len() != directions.len() {
            return Err(at(
                self.p.loc(),
                format!(
                    "{} offset intervals for {} directions",
                    upper.len(),
                    directions.len()
                ),
            ));
        }

        self.p.expect_keyword("templates")?;
        self.p.expect_sym("{")?;
        while !self.p.eat_sym("}") {
            self.p.expect_sym("(")?;
            let mut t = Vec::new();
            loop {
                t.push(self.p.expect_uint()? as usize);
                if !self.p.eat_sym(",") {
                    break;
                }
            }
            self.p.expect_sym(")")?;
            self.p.expect_sym(";")?;
            templates.push(t);
        }
        self.p.expect_sym("}")?;
        Bundle::new(directions, upper, lower, templates).map_err(|e| match e {
            Error::DegenerateTemplate(t) => at(loc, format!("template {t} is singular")),
            e => at(loc, e),
        })
    }

    fn option(&mut self) -> PResult<()> {
        let loc = self.p.loc();
        let name = self.p.expect_ident()?;
        match name.as_str() {
            "steps" => self.s.options.steps = Some(self.p.expect_uint()? as usize),
            "fan" => {
                let fan = self.p.expect_uint()? as usize;
                if fan < 4 || fan % 4 != 0 {
                    return Err(at(loc, "the projection fan must be a positive multiple of 4"));
                }
                self.s.options.fan = fan;
            }
            "project" => {
                self.seal(loc)?;
                let a = self.axis()?;
                self.p.expect_sym(",")?;
                let b = self.axis()?;
                self.s.options.project = Some((a, b));
            }
            other => return Err(at(loc, format!("unknown option `{other}`"))),
        }
        self.p.expect_sym(";")
    }

    fn axis(&mut self) -> PResult<String> {
        let loc = self.p.loc();
        let name = self.p.expect_ident()?;
        if !self.s.vars.contains(&name) {
            return Err(at(loc, format!("unknown state variable `{name}`")));
        }
        Ok(name)
    }

    fn finish(self) -> PResult<ProblemSpec> {
        let eof = self.p.loc();
        let s = self.s;
        let dynamics = s.dynamics.ok_or_else(|| at(eof, "missing `dynamics` section"))?;
        let initial = s.initial.ok_or_else(|| at(eof, "missing `init` section"))?;
        let model = Model::new(
            s.name.unwrap_or_else(|| "model".into()),
            s.vars,
            s.params,
            dynamics,
        )
        .map_err(|e| at(s.dynamics_loc.unwrap_or(eof), e))?;
        let m = model.num_params();
        let mut rows = Vec::new();
        let mut offsets = Vec::new();
        for (j, lo, hi) in s.param_boxes {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            rows.push(e.clone());
            offsets.push(hi);
            e[j] = -1.0;
            rows.push(e);
            offsets.push(-lo);
        }
        for (row, c) in s.paramset {
            rows.push(row);
            offsets.push(c);
        }
        let params = LinearSystem::new(m, rows, offsets).map_err(|e| at(eof, e))?;
        Ok(ProblemSpec {
            model,
            initial,
            params,
            spec: s.spec,
            options: s.options,
        })
    }
}

/// Coefficients of a homogeneous linear polynomial.
fn linear_row(e: &SparsePolynomial) -> Option<Vec<f64>> {
    if e.total_degree() > 1 || !e.is_parameter_free() {
        return None;
    }
    let mut row = vec![0.0; e.num_vars()];
    for (idx, form) in e.terms() {
        match idx.exponents().iter().position(|x| *x == 1) {
            Some(k) => row[k] = form.constant,
            None => {
                if form.constant != 0.0 {
                    return None;
                }
            }
        }
    }
    Some(row)
}

fn linear_expression(row: &[f64], names: &[String]) -> String {
    let n = row.len();
    let mut e = SparsePolynomial::zero(n, 0);
    for (k, a) in row.iter().enumerate() {
        e = e
            .checked_add(&SparsePolynomial::variable(n, 0, k).scaled(*a))
            .expect("same shape");
    }
    e.to_expression(names, &[])
}

/// Model-file text that parses back to `spec`.
pub fn print_problem(spec: &ProblemSpec) -> String {
    let m = &spec.model;
    let mut out = String::new();
    let _ = writeln!(out, "model {};", m.name);
    let _ = writeln!(out, "var {};", m.state_vars.join(", "));
    if !m.param_vars.is_empty() {
        let _ = writeln!(out, "param {};", m.param_vars.join(", "));
    }
    if !spec.params.is_unconstrained() {
        out.push_str("paramset {\n");
        for (row, c) in spec.params.directions().iter().zip(spec.params.offsets()) {
            let mut e = SparsePolynomial::zero(0, row.len());
            for (j, a) in row.iter().enumerate() {
                e = e
                    .checked_add(&SparsePolynomial::parameter(0, row.len(), j).scaled(*a))
                    .expect("same shape");
            }
            let _ = writeln!(
                out,
                "  {} <= {};",
                e.to_expression(&[], &m.param_vars),
                fmt_real(*c)
            );
        }
        out.push_str("}\n");
    }
    out.push_str("dynamics {\n");
    for (v, f) in m.state_vars.iter().zip(&m.dynamics) {
        let _ = writeln!(
            out,
            "  {v}' = {};",
            f.to_expression(&m.state_vars, &m.param_vars)
        );
    }
    out.push_str("}\n");
    let b = &spec.initial;
    out.push_str("init bundle {\n  directions {\n");
    for d in b.directions() {
        let _ = writeln!(out, "    {};", linear_expression(d, &m.state_vars));
    }
    out.push_str("  }\n  offsets {\n");
    for (u, l) in b.upper().iter().zip(b.lower()) {
        let _ = writeln!(out, "    [{}, {}];", fmt_real(-l), fmt_real(*u));
    }
    out.push_str("  }\n  templates {\n");
    for t in b.templates() {
        let idx: Vec<String> = t.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "    ({});", idx.join(", "));
    }
    out.push_str("  }\n}\n");
    if let Some(f) = &spec.spec {
        let _ = writeln!(out, "spec {};", f.to_text(&m.state_vars));
    }
    if let Some(steps) = spec.options.steps {
        let _ = writeln!(out, "option steps {steps};");
    }
    if let Some((a, c)) = &spec.options.project {
        let _ = writeln!(out, "option project {a}, {c};");
    }
    if spec.options.fan != DEFAULT_FAN {
        let _ = writeln!(out, "option fan {};", spec.options.fan);
    }
    out
}

fn fmt_real(v: f64) -> String {
    // Signed literals are accepted where the grammar reads a bare number.
    format!("{v}")
}

// ---------------------------------------------------------------------------
// JSON

/// 17 significant digits: enough to reproduce every `f64` bit-exactly.
fn json_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_row(row: &[f64]) -> String {
    let parts: Vec<String> = row.iter().map(|v| json_num(*v)).collect();
    format!("[{}]", parts.join(", "))
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization")
}

pub fn flowpipe_to_json(fp: &Flowpipe, variables: &[String]) -> String {
    let first = &fp.steps()[0];
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"model\": {},", json_str(&fp.model));
    let vars: Vec<String> = variables.iter().map(|v| json_str(v)).collect();
    let _ = writeln!(out, "  \"variables\": [{}],", vars.join(", "));
    let dirs: Vec<String> = first.directions().iter().map(|d| json_row(d)).collect();
    let _ = writeln!(out, "  \"directions\": [\n    {}\n  ],", dirs.join(",\n    "));
    let temps: Vec<String> = first
        .templates()
        .iter()
        .map(|t| {
            let idx: Vec<String> = t.iter().map(|i| i.to_string()).collect();
            format!("[{}]", idx.join(", "))
        })
        .collect();
    let _ = writeln!(out, "  \"templates\": [{}],", temps.join(", "));
    out.push_str("  \"steps\": [\n");
    for (k, b) in fp.steps().iter().enumerate() {
        let _ = write!(
            out,
            "    {{\"upper\": {}, \"lower\": {}}}",
            json_row(b.upper()),
            json_row(b.lower())
        );
        out.push_str(if k + 1 < fp.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_flowpipe(fp: &Flowpipe, variables: &[String], path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &flowpipe_to_json(fp, variables))
}

#[derive(Debug, Deserialize)]
struct FlowpipeJson {
    model: String,
    variables: Vec<String>,
    directions: Vec<Vec<f64>>,
    templates: Vec<Vec<usize>>,
    steps: Vec<StepJson>,
}

#[derive(Debug, Deserialize)]
struct StepJson {
    upper: Vec<f64>,
    lower: Vec<f64>,
}

/// A flowpipe file read back: the flowpipe and its variable names.
pub fn read_flowpipe(path: impl AsRef<Path>) -> Result<(Flowpipe, Vec<String>)> {
    let path = path.as_ref();
    let format_err = |message: String| Error::Format {
        path: path.display().to_string(),
        message,
    };
    let raw: FlowpipeJson =
        serde_json::from_str(&read_file(path)?).map_err(|e| format_err(e.to_string()))?;
    if raw.steps.is_empty() {
        return Err(format_err("flowpipe has no steps".into()));
    }
    let steps = raw
        .steps
        .into_iter()
        .map(|s| Bundle::new(raw.directions.clone(), s.upper, s.lower, raw.templates.clone()))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| format_err(e.to_string()))?;
    let fp = Flowpipe::new(raw.model, steps).map_err(|e| format_err(e.to_string()))?;
    Ok((fp, raw.variables))
}

pub fn param_sets_to_json(set: &LinearSystemSet) -> String {
    if set.is_empty() {
        return "{\"members\": []}\n".into();
    }
    let mut out = String::from("{\"members\": [\n");
    for (k, m) in set.members().iter().enumerate() {
        let rows: Vec<String> = m.directions().iter().map(|r| json_row(r)).collect();
        let _ = write!(
            out,
            "  {{\"A\": [{}], \"b\": {}}}",
            rows.join(", "),
            json_row(m.offsets())
        );
        out.push_str(if k + 1 < set.len() { ",\n" } else { "\n" });
    }
    out.push_str("]}\n");
    out
}

pub fn write_param_sets(set: &LinearSystemSet, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &param_sets_to_json(set))
}

#[derive(Debug, Deserialize)]
struct ParamSetsJson {
    members: Vec<MemberJson>,
}

#[derive(Debug, Deserialize)]
#[allow(non_snake_case)]
struct MemberJson {
    A: Vec<Vec<f64>>,
    b: Vec<f64>,
}

/// Reads a parameter-set file; `dim` is needed because an empty set carries
/// no rows to infer it from.
pub fn read_param_sets(path: impl AsRef<Path>, dim: usize) -> Result<LinearSystemSet> {
    let path = path.as_ref();
    let format_err = |message: String| Error::Format {
        path: path.display().to_string(),
        message,
    };
    let raw: ParamSetsJson =
        serde_json::from_str(&read_file(path)?).map_err(|e| format_err(e.to_string()))?;
    let members = raw
        .members
        .into_iter()
        .map(|m| LinearSystem::new(dim, m.A, m.b))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| format_err(e.to_string()))?;
    LinearSystemSet::new(dim, members)
}

// ---------------------------------------------------------------------------
// Projections

/// Unit directions of the fan, with the axis directions exact.
fn fan_directions(fan: usize) -> Vec<(f64, f64)> {
    (0..fan)
        .map(|k| {
            if (4 * k) % fan == 0 {
                match 4 * k / fan {
                    0 => (1.0, 0.0),
                    1 => (0.0, 1.0),
                    2 => (-1.0, 0.0),
                    _ => (0.0, -1.0),
                }
            } else {
                let t = std::f64::consts::TAU * k as f64 / fan as f64;
                (t.cos(), t.sin())
            }
        })
        .collect()
}

/// Counter-clockwise polygon enclosing the projection of `bundle` onto
/// coordinates `(a, b)`: the intersections of consecutive support lines
/// along a fan of `fan` directions. Exact when every edge normal of the
/// projection is in the fan; collinear for degenerate projections.
pub fn project_bundle(bundle: &Bundle, a: usize, b: usize, fan: usize) -> Result<Vec<[f64; 2]>> {
    let n = bundle.dim();
    if a >= n || b >= n || a == b {
        return Err(Error::Dimension(format!(
            "projection axes ({a}, {b}) for a {n}-dimensional set"
        )));
    }
    if fan < 3 {
        return Err(Error::Dimension("projection fan needs at least 3 directions".into()));
    }
    let system = bundle.to_linear_system();
    let dirs = fan_directions(fan);
    let mut support = Vec::with_capacity(fan);
    for (c, s) in &dirs {
        let mut obj = vec![0.0; n];
        obj[a] = *c;
        obj[b] = *s;
        match system.maximize(&obj)? {
            LpOutcome::Optimal { value, .. } => support.push(value),
            LpOutcome::Infeasible => return Err(Error::EmptySet),
            LpOutcome::Unbounded => return Err(Error::InvalidSet("set is unbounded".into())),
            LpOutcome::Stalled => return Err(Error::LpStalled(0)),
        }
    }
    let scale = support.iter().fold(1.0f64, |m, h| m.max(h.abs()));
    let mut vertices: Vec<[f64; 2]> = Vec::with_capacity(fan);
    for k in 0..fan {
        let (c1, s1) = dirs[k];
        let (c2, s2) = dirs[(k + 1) % fan];
        let (h1, h2) = (support[k], support[(k + 1) % fan]);
        let det = c1 * s2 - s1 * c2;
        let v = [(h1 * s2 - s1 * h2) / det, (c1 * h2 - h1 * c2) / det];
        let dup = vertices.last().is_some_and(|w: &[f64; 2]| {
            (w[0] - v[0]).abs().max((w[1] - v[1]).abs()) <= 1e-12 * scale
        });
        if !dup {
            vertices.push(v);
        }
    }
    while vertices.len() > 1 {
        let (f, l) = (vertices[0], vertices[vertices.len() - 1]);
        if (f[0] - l[0]).abs().max((f[1] - l[1]).abs()) <= 1e-12 * scale {
            vertices.pop();
        } else {
            break;
        }
    }
    Ok(vertices)
}

/// CSV with header `step,vertex_index,x,y`.
pub fn projection_csv(fp: &Flowpipe, a: usize, b: usize, fan: usize) -> Result<String> {
    let mut out = String::from("step,vertex_index,x,y\n");
    for (k, bundle) in fp.steps().iter().enumerate() {
        for (i, v) in project_bundle(bundle, a, b, fan)?.iter().enumerate() {
            let _ = writeln!(out, "{k},{i},{},{}", v[0], v[1]);
        }
    }
    Ok(out)
}

pub fn write_projection(
    fp: &Flowpipe,
    a: usize,
    b: usize,
    fan: usize,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_file(path.as_ref(), &projection_csv(fp, a, b, fan)?)
}

/// Python/matplotlib script that draws the polygons of a projection CSV.
pub fn plot_script(csv_name: &str, x_label: &str, y_label: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Draws every step of a flowpipe projection. Usage: python3 plot.py [out.png]"""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt
from matplotlib.patches import Polygon

polygons = defaultdict(list)
with open(Path(__file__).with_name({csv:?})) as fh:
    for row in csv.DictReader(fh):
        polygons[int(row["step"])].append((float(row["x"]), float(row["y"])))

fig, ax = plt.subplots()
for step in sorted(polygons):
    ax.add_patch(Polygon(polygons[step], closed=True, facecolor="tab:blue",
                         edgecolor="navy", alpha=0.35, linewidth=0.5))
ax.autoscale_view()
ax.set_xlabel({x:?})
ax.set_ylabel({y:?})
if len(sys.argv) > 1:
    fig.savefig(sys.argv[1], dpi=150)
else:
    plt.show()
"#,
        csv = csv_name,
        x = x_label,
        y = y_label
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "var x; dynamics { x' = 0.5*x; } init box { x in [0,1]; } option steps 3;";

    #[test]
    fn minimal_model() {
        let spec = parse_model_file(MINIMAL).unwrap();
        assert_eq!(spec.model.dim(), 1);
        assert_eq!(spec.model.num_params(), 0);
        assert_eq!(spec.options.steps, Some(3));
        assert!(spec.spec.is_none());
    }

    #[test]
    fn parse_errors_carry_locations() {
        let e = parse_model_file("var x;\ndynamics { x' = y; }").unwrap_err();
        assert_eq!((e.location.line, e.location.column), (2, 17));
        assert!(e.message.contains("unknown identifier"));

        let e = parse_model_file("var x; param a, b;\ndynamics { x' = a*b*x; }").unwrap_err();
        assert_eq!(e.location.line, 2);
        assert!(e.message.contains("linear in the parameters"));

        let e = parse_model_file("var x; param a in [2, 1];").unwrap_err();
        assert!(e.message.contains("malformed interval"));

        let e = parse_model_file(
            "var x, y; dynamics { x' = x; y' = y; }\ninit bundle { directions { x; 2*x; } \
             offsets { [0,1]; [0,1]; } templates { (0,1); } }",
        )
        .unwrap_err();
        assert!(e.message.contains("singular"), "{}", e.message);

        assert!(parse_model_file("var x; dynamics { x' = x; }").is_err());
        assert!(parse_model_file("var x; dynamics { x' = x; } var y;").is_err());
    }

    #[test]
    fn round_trip() {
        let text = "model m; var x, y; param a in [0.1, 0.2]; param b;\n\
                    paramset { b >= -1; a + b <= 1.5; }\n\
                    dynamics { x' = x - a*x*y + 0.25; y' = (1 + b)*y^2 - x/3; }\n\
                    init box { y in [0, 1]; x in [-1, 1e-3]; }\n\
                    spec (x <= 2) U[1,3] (y >= 0.5) && G[0,2](x + y <= 4);\n\
                    option steps 7; option project y, x; option fan 16;";
        let spec = parse_model_file(text).unwrap();
        let printed = print_problem(&spec);
        assert_eq!(parse_model_file(&printed).unwrap(), spec, "{printed}");
    }

    #[test]
    fn empty_param_set_json() {
        assert_eq!(param_sets_to_json(&LinearSystemSet::empty(2)), "{\"members\": []}\n");
    }

    #[test]
    fn box_projects_to_its_corners() {
        let b = AxisBox::new(vec![0.0, -1.0, 2.0], vec![1.0, 3.0, 2.0])
            .unwrap()
            .to_bundle();
        let v = project_bundle(&b, 0, 1, 32).unwrap();
        let expected = [[0.0, -1.0], [0.0, 3.0], [1.0, -1.0], [1.0, 3.0]];
        assert_eq!(v.len(), 4, "{v:?}");
        for q in &expected {
            assert!(
                v.iter()
                    .any(|p| (p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12),
                "{q:?} missing from {v:?}"
            );
        }
        // Zero width along the second axis: a collinear list.
        let flat = project_bundle(&b, 0, 2, 32).unwrap();
        assert!(flat.iter().all(|p| (p[1] - 2.0).abs() < 1e-12));
    }
}
