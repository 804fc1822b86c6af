//! Discrete-time STL in positive normal form: AST, parser, printer, and a
//! boolean monitor over concrete trajectories.
//!
//! Surface grammar:
//!
//! ```text
//! formula := term (('&&' | '||') term)*
//! term    := atom | unary | '(' formula ')' | term 'U' '[' int ',' int ']' term
//! unary   := ('G' | 'F') '[' int ',' int ']' '(' formula ')'
//! atom    := expr ('<=' | '>=' | '<' | '>') expr
//! ```
//!
//! Binary connectives associate to the left with equal precedence. Every
//! atom is normalized to `g(x) <= 0` with `g` affine; strict comparisons are
//! read as non-strict.

use std::fmt;

use crate::error::{Error, ParseError, Result};
use crate::polynomial::SparsePolynomial;
use crate::syntax::{Parser, Scope, Tok};

/// Step interval `[a, b]`, `a <= b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub a: usize,
    pub b: usize,
}

impl Interval {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a > b {
            return Err(Error::InvalidFormula(format!("interval [{a},{b}] is empty")));
        }
        Ok(Interval { a, b })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.a, self.b)
    }
}

/// Predicate `g(x) <= 0` with `g` affine and parameter-free.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    g: SparsePolynomial,
}

impl Atom {
    pub fn new(g: SparsePolynomial) -> Result<Self> {
        if g.num_params() != 0 || g.total_degree() > 1 {
            return Err(Error::InvalidFormula(
                "atoms must be affine in the state variables and free of parameters".into(),
            ));
        }
        Ok(Atom { g })
    }

    /// `Σ_k coefficients[k] · x_k + constant <= 0`.
    pub fn from_linear(coefficients: &[f64], constant: f64) -> Self {
        let n = coefficients.len();
        let mut g = SparsePolynomial::constant(n, 0, constant);
        for (k, c) in coefficients.iter().enumerate() {
            g = g
                .checked_add(&SparsePolynomial::variable(n, 0, k).scaled(*c))
                .expect("same shape");
        }
        Atom { g }
    }

    pub fn polynomial(&self) -> &SparsePolynomial {
        &self.g
    }

    /// `(linear coefficients, constant)`.
    pub fn linear_parts(&self) -> (Vec<f64>, f64) {
        let n = self.g.num_vars();
        let mut coeffs = vec![0.0; n];
        let mut constant = 0.0;
        for (idx, form) in self.g.terms() {
            match idx.exponents().iter().position(|e| *e == 1) {
                Some(k) => coeffs[k] = form.constant,
                None => constant = form.constant,
            }
        }
        (coeffs, constant)
    }

    pub fn holds(&self, x: &[f64]) -> bool {
        self.g.evaluate_unchecked(x, &[]) <= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom(Atom),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Until {
        left: Box<Formula>,
        right: Box<Formula>,
        interval: Interval,
    },
    Globally {
        interval: Interval,
        sub: Box<Formula>,
    },
    Eventually {
        interval: Interval,
        sub: Box<Formula>,
    },
}

impl Formula {
    pub fn atom(atom: Atom) -> Formula {
        Formula::Atom(atom)
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn until(l: Formula, interval: Interval, r: Formula) -> Formula {
        Formula::Until {
            left: Box::new(l),
            right: Box::new(r),
            interval,
        }
    }

    pub fn globally(interval: Interval, sub: Formula) -> Formula {
        Formula::Globally {
            interval,
            sub: Box::new(sub),
        }
    }

    pub fn eventually(interval: Interval, sub: Formula) -> Formula {
        Formula::Eventually {
            interval,
            sub: Box::new(sub),
        }
    }

    /// Number of steps after the evaluation time the formula can look at.
    pub fn horizon(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::And(l, r) | Formula::Or(l, r) => l.horizon().max(r.horizon()),
            Formula::Until {
                left,
                right,
                interval,
            } => interval.b + left.horizon().max(right.horizon()),
            Formula::Globally { interval, sub } | Formula::Eventually { interval, sub } => {
                interval.b + sub.horizon()
            }
        }
    }

    /// Number of state variables the atoms range over, if any atom exists.
    pub fn num_vars(&self) -> usize {
        match self {
            Formula::Atom(a) => a.g.num_vars(),
            Formula::And(l, _) | Formula::Or(l, _) => l.num_vars(),
            Formula::Until { left, .. } => left.num_vars(),
            Formula::Globally { sub, .. } | Formula::Eventually { sub, .. } => sub.num_vars(),
        }
    }

    /// Text accepted by [`parse_formula`] that parses back to this AST.
    pub fn to_text(&self, vars: &[String]) -> String {
        fn wrapped(f: &Formula, vars: &[String]) -> String {
            match f {
                Formula::Globally { .. } | Formula::Eventually { .. } => f.to_text(vars),
                _ => format!("({})", f.to_text(vars)),
            }
        }
        fn operand(f: &Formula, vars: &[String]) -> String {
            match f {
                Formula::And(..) | Formula::Or(..) | Formula::Until { .. } => {
                    format!("({})", f.to_text(vars))
                }
                _ => f.to_text(vars),
            }
        }
        match self {
            Formula::Atom(a) => {
                let (coeffs, constant) = a.linear_parts();
                let lhs = Atom::from_linear(&coeffs, 0.0).g.to_expression(vars, &[]);
                format!("{lhs} <= {}", -constant)
            }
            Formula::And(l, r) => format!("{} && {}", operand(l, vars), operand(r, vars)),
            Formula::Or(l, r) => format!("{} || {}", operand(l, vars), operand(r, vars)),
            Formula::Until {
                left,
                right,
                interval,
            } => format!("{} U{} {}", wrapped(left, vars), interval, wrapped(right, vars)),
            Formula::Globally { interval, sub } => format!("G{}({})", interval, sub.to_text(vars)),
            Formula::Eventually { interval, sub } => {
                format!("F{}({})", interval, sub.to_text(vars))
            }
        }
    }
}

pub fn parse_formula(text: &str, vars: &[String]) -> std::result::Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = formula(&mut p, vars)?;
    if !p.at_eof() {
        return Err(p.unexpected("end of formula"));
    }
    Ok(f)
}

pub(crate) fn formula(p: &mut Parser, vars: &[String]) -> std::result::Result<Formula, ParseError> {
    let mut acc = term(p, vars)?;
    loop {
        if p.eat_sym("&&") {
            acc = Formula::and(acc, term(p, vars)?);
        } else if p.eat_sym("||") {
            acc = Formula::or(acc, term(p, vars)?);
        } else {
            return Ok(acc);
        }
    }
}

fn interval(p: &mut Parser) -> std::result::Result<Interval, ParseError> {
    let loc = p.loc();
    p.expect_sym("[")?;
    let a = p.expect_uint()? as usize;
    p.expect_sym(",")?;
    let b = p.expect_uint()? as usize;
    p.expect_sym("]")?;
    Interval::new(a, b).map_err(|e| ParseError::new(loc, e.to_string()))
}

fn term(p: &mut Parser, vars: &[String]) -> std::result::Result<Formula, ParseError> {
    let mut acc = primary(p, vars)?;
    while p.is_keyword("U") && matches!(p.peek_at(1), Tok::Sym("[")) {
        p.bump();
        let iv = interval(p)?;
        let rhs = primary(p, vars)?;
        acc = Formula::until(acc, iv, rhs);
    }
    Ok(acc)
}

fn primary(p: &mut Parser, vars: &[String]) -> std::result::Result<Formula, ParseError> {
    if (p.is_keyword("G") || p.is_keyword("F")) && matches!(p.peek_at(1), Tok::Sym("[")) {
        let globally = p.is_keyword("G");
        p.bump();
        let iv = interval(p)?;
        p.expect_sym("(")?;
        let sub = formula(p, vars)?;
        p.expect_sym(")")?;
        return Ok(if globally {
            Formula::globally(iv, sub)
        } else {
            Formula::eventually(iv, sub)
        });
    }
    if p.is_keyword("not") {
        return Err(p.error("negation is not supported: formulas must be in positive normal form"));
    }
    if p.is_sym("(") {
        // Either a parenthesized formula or an atom whose left side starts
        // with a parenthesized expression.
        let start = p.position();
        p.bump();
        let as_formula = formula(p, vars).and_then(|f| p.expect_sym(")").map(|_| f));
        match as_formula {
            Ok(f) if !is_comparison(p.peek()) && !is_arith(p.peek()) => return Ok(f),
            Ok(_) => p.rewind(start),
            Err(formula_err) => {
                let formula_pos = p.position();
                p.rewind(start);
                return atom(p, vars).map_err(|atom_err| {
                    if p.position() >= formula_pos {
                        atom_err
                    } else {
                        formula_err
                    }
                });
            }
        }
    }
    atom(p, vars)
}

fn is_comparison(t: &Tok) -> bool {
    matches!(t, Tok::Sym("<=") | Tok::Sym(">=") | Tok::Sym("<") | Tok::Sym(">"))
}

fn is_arith(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Sym("+") | Tok::Sym("-") | Tok::Sym("*") | Tok::Sym("/") | Tok::Sym("^")
    )
}

fn atom(p: &mut Parser, vars: &[String]) -> std::result::Result<Formula, ParseError> {
    let scope = Scope { vars, params: &[] };
    let loc = p.loc();
    let lhs = p.expression(&scope)?;
    let op = match p.peek() {
        Tok::Sym(s) if is_comparison(p.peek()) => *s,
        Tok::Sym("==") | Tok::Sym("=") => {
            return Err(p.error("equality predicates are not supported; use two inequalities"))
        }
        _ => return Err(p.unexpected("a comparison (`<=`, `>=`, `<`, `>`)")),
    };
    p.bump();
    let rhs = p.expression(&scope)?;
    let g = match op {
        "<=" | "<" => lhs.checked_sub(&rhs),
        _ => rhs.checked_sub(&lhs),
    }
    .map_err(|e| ParseError::new(loc, e.to_string()))?;
    let atom = Atom::new(g).map_err(|_| {
        ParseError::new(
            loc,
            "predicate is not affine in the state variables; only affine predicates can be synthesized",
        )
    })?;
    Ok(Formula::Atom(atom))
}

/// Whether `φ` holds at time `k` of `trajectory`.
pub fn monitor(trajectory: &[Vec<f64>], phi: &Formula, k: usize) -> Result<bool> {
    let horizon = phi.horizon();
    if k + horizon >= trajectory.len() {
        return Err(Error::Horizon {
            len: trajectory.len(),
            time: k,
            horizon,
        });
    }
    Ok(eval(trajectory, phi, k))
}

fn eval(tr: &[Vec<f64>], phi: &Formula, k: usize) -> bool {
    match phi {
        Formula::Atom(a) => a.holds(&tr[k]),
        Formula::And(l, r) => eval(tr, l, k) && eval(tr, r, k),
        Formula::Or(l, r) => eval(tr, l, k) || eval(tr, r, k),
        Formula::Until {
            left,
            right,
            interval,
        } => (k + interval.a..=k + interval.b)
            .any(|j| eval(tr, right, j) && (k..j).all(|l| eval(tr, left, l))),
        Formula::Globally { interval, sub } => {
            (k + interval.a..=k + interval.b).all(|j| eval(tr, sub, j))
        }
        Formula::Eventually { interval, sub } => {
            (k + interval.a..=k + interval.b).any(|j| eval(tr, sub, j))
        }
    }
}

/// Monitor under the successor-state convention used by synthesis: index 0
/// of the formula's timeline is `x_1`, the first state after `x_0`.
pub fn monitor_successor(trajectory_from_x0: &[Vec<f64>], phi: &Formula) -> Result<bool> {
    monitor(trajectory_from_x0.get(1..).unwrap_or(&[]), phi, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn lin(c: &[f64], k: f64) -> Formula {
        Formula::Atom(Atom::from_linear(c, k))
    }

    #[test]
    fn parse_atoms() {
        let v = vars(&["s", "i", "r"]);
        let f = parse_formula("i <= 0.44", &v).unwrap();
        assert_eq!(f, lin(&[0.0, 1.0, 0.0], -0.44));
        let g = parse_formula("i >= 0.1", &v).unwrap();
        assert_eq!(g, lin(&[0.0, -1.0, 0.0], 0.1));
        assert_eq!(parse_formula("i > 0.1", &v).unwrap(), g);
    }

    #[test]
    fn parse_temporal() {
        let v = vars(&["s", "i", "r"]);
        let f = parse_formula("G[50,100](i <= 0.44)", &v).unwrap();
        assert_eq!(
            f,
            Formula::globally(Interval::new(50, 100).unwrap(), lin(&[0.0, 1.0, 0.0], -0.44))
        );
        let v = vars(&["i", "q"]);
        let u = parse_formula("(i <= 200) U[6,10] (q <= 20)", &v).unwrap();
        assert_eq!(
            u,
            Formula::until(
                lin(&[1.0, 0.0], -200.0),
                Interval::new(6, 10).unwrap(),
                lin(&[0.0, 1.0], -20.0)
            )
        );
    }

    #[test]
    fn parenthesized_expressions_are_not_formulas() {
        let v = vars(&["x", "y"]);
        let f = parse_formula("(x + y) * 2 <= 1 && (x) >= 0", &v).unwrap();
        assert_eq!(
            f,
            Formula::and(lin(&[2.0, 2.0], -1.0), lin(&[-1.0, 0.0], 0.0))
        );
    }

    #[test]
    fn parse_errors() {
        let v = vars(&["x"]);
        let e = parse_formula("G[1,2](x <= )", &v).unwrap_err();
        assert_eq!(e.location.line, 1);
        assert!(parse_formula("x*x <= 1", &v)
            .unwrap_err()
            .message
            .contains("affine"));
        assert!(parse_formula("!(x <= 1)", &v)
            .unwrap_err()
            .message
            .contains("positive normal form"));
        assert!(parse_formula("not (x <= 1)", &v).is_err());
        assert!(parse_formula("G[3,1](x <= 1)", &v).is_err());
        assert!(parse_formula("x <= 1 &&", &v).is_err());
    }

    #[test]
    fn print_round_trip() {
        let v = vars(&["s", "i", "r"]);
        for text in [
            "i <= 0.44",
            "G[50,100](i <= 0.44)",
            "(i <= 0.2) U[6,10] (s - r >= 0.1) && F[0,3](r < 1 || s > 0.5)",
            "(s <= 1) U[0,2] ((i <= 1) U[1,3] (r <= 1))",
            "s <= 1 && i <= 2 || r <= 3",
        ] {
            let f = parse_formula(text, &v).unwrap();
            let printed = f.to_text(&v);
            assert_eq!(parse_formula(&printed, &v).unwrap(), f, "{printed}");
        }
    }

    #[test]
    fn monitor_examples() {
        let tr: Vec<Vec<f64>> = vec![vec![5.0]; 5];
        assert!(monitor(&tr, &lin(&[0.0], -1.0), 2).unwrap());
        let g = Formula::globally(Interval::new(0, 3).unwrap(), lin(&[1.0], -4.0));
        assert!(!monitor(&tr, &g, 0).unwrap());

        let down: Vec<Vec<f64>> = [3.0, 2.0, 1.0, 0.0, -1.0, -2.0]
            .iter()
            .map(|v| vec![*v])
            .collect();
        let u = Formula::until(
            lin(&[1.0], -2.0),
            Interval::new(0, 3).unwrap(),
            lin(&[1.0], 0.0),
        );
        assert!(!monitor(&down, &u, 0).unwrap());
        assert!(monitor(&down, &u, 1).unwrap());
    }

    #[test]
    fn horizon_is_checked() {
        let tr: Vec<Vec<f64>> = vec![vec![0.0]; 3];
        let g = Formula::globally(Interval::new(0, 3).unwrap(), lin(&[1.0], 0.0));
        assert_eq!(g.horizon(), 3);
        assert!(matches!(monitor(&tr, &g, 0), Err(Error::Horizon { .. })));
    }

    #[test]
    fn successor_convention_skips_initial_state() {
        let tr: Vec<Vec<f64>> = vec![vec![10.0], vec![0.0]];
        assert!(monitor_successor(&tr, &lin(&[1.0], 0.0)).unwrap());
        assert!(monitor_successor(&tr[..1], &lin(&[1.0], 0.0)).is_err());
    }
}
