//! Oracles and fixtures shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use std::path::PathBuf;

use bernreach::model_io::{load_problem, ProblemSpec};
use bernreach::stl::{Atom, Formula};
use bernreach::{AffineForm, Bundle, LinearSystem, MultiIndex, SparsePolynomial};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn load_model(name: &str) -> ProblemSpec {
    load_problem(models_dir().join(name)).expect("shipped model parses")
}

pub fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Random polynomial with at most `max_deg` per variable and coefficients in
/// `[-5, 5]`; each coefficient gets `num_params` random linear terms.
pub fn random_polynomial(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_deg: u32,
    num_params: usize,
) -> SparsePolynomial {
    let terms = rng.random_range(1..=8);
    let mut out = Vec::new();
    for _ in 0..terms {
        let idx = MultiIndex::new((0..n).map(|_| rng.random_range(0..=max_deg)).collect());
        let form = AffineForm {
            constant: rng.random_range(-5.0..5.0),
            linear: (0..num_params).map(|_| rng.random_range(-5.0..5.0)).collect(),
        };
        out.push((idx, form));
    }
    SparsePolynomial::from_terms(n, num_params, out).unwrap()
}

/// Gaussian elimination with partial pivoting; `a` is row-major `n × n`.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// All multi-indices `i <= d`, last variable fastest.
pub fn grid(d: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &dk in d {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=dk).map(move |i| {
                    let mut v = prefix.clone();
                    v.push(i);
                    v
                })
            })
            .collect();
    }
    out
}

/// Power-basis coefficient of `x^j` in the 1D Bernstein basis polynomial
/// `C(d,i) x^i (1-x)^(d-i)`.
fn basis_power_coefficient(d: u32, i: u32, j: u32) -> f64 {
    if j < i {
        return 0.0;
    }
    let k = j - i;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    binomial(d, i) * binomial(d - i, k) * sign
}

/// Bernstein coefficients of a parameter-free polynomial of degree `d`,
/// obtained by expanding every Bernstein basis polynomial into the power
/// basis and solving the resulting square system.
pub fn bernstein_by_basis_expansion(p: &SparsePolynomial, d: &[u32]) -> Vec<(Vec<u32>, f64)> {
    let g = grid(d);
    let n = g.len();
    let mut m = vec![vec![0.0; n]; n];
    for (row, j) in g.iter().enumerate() {
        for (col, i) in g.iter().enumerate() {
            m[row][col] = d
                .iter()
                .zip(i.iter().zip(j))
                .map(|(&dk, (&ik, &jk))| basis_power_coefficient(dk, ik, jk))
                .product();
        }
    }
    let rhs: Vec<f64> = g
        .iter()
        .map(|j| {
            p.coefficient(&MultiIndex::new(j.clone()))
                .map_or(0.0, |f| f.constant)
        })
        .collect();
    let b = solve_dense(m, rhs).expect("Bernstein basis is a basis");
    g.into_iter().zip(b).collect()
}

/// Direct polynomial evaluation from the term list.
pub fn eval_terms(p: &SparsePolynomial, x: &[f64], params: &[f64]) -> f64 {
    p.terms()
        .map(|(idx, f)| {
            let mono: f64 = idx
                .exponents()
                .iter()
                .zip(x)
                .map(|(&e, &v)| v.powi(e as i32))
                .product();
            let c = f.constant + f.linear.iter().zip(params).map(|(a, q)| a * q).sum::<f64>();
            c * mono
        })
        .sum()
}

fn atom_value(a: &Atom, x: &[f64]) -> f64 {
    let (c, k) = a.linear_parts();
    c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + k
}

/// Brute-force discrete STL semantics at time `k`.
pub fn oracle_holds(tr: &[Vec<f64>], phi: &Formula, k: usize) -> bool {
    match phi {
        Formula::Atom(a) => atom_value(a, &tr[k]) <= 0.0,
        Formula::And(l, r) => oracle_holds(tr, l, k) && oracle_holds(tr, r, k),
        Formula::Or(l, r) => oracle_holds(tr, l, k) || oracle_holds(tr, r, k),
        Formula::Until {
            left,
            right,
            interval,
        } => {
            for j in k + interval.a..=k + interval.b {
                if oracle_holds(tr, right, j) {
                    let mut prefix = true;
                    for l in k..j {
                        prefix &= oracle_holds(tr, left, l);
                    }
                    if prefix {
                        return true;
                    }
                }
            }
            false
        }
        Formula::Globally { interval, sub } => {
            let mut all = true;
            for j in k + interval.a..=k + interval.b {
                all &= oracle_holds(tr, sub, j);
            }
            all
        }
        Formula::Eventually { interval, sub } => {
            let mut any = false;
            for j in k + interval.a..=k + interval.b {
                any |= oracle_holds(tr, sub, j);
            }
            any
        }
    }
}

/// Trajectory by direct evaluation of the dynamics terms.
pub fn simulate(spec: &ProblemSpec, x0: &[f64], p: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let mut tr = vec![x0.to_vec()];
    for _ in 0..steps {
        let x = tr.last().unwrap();
        let next = spec
            .model
            .dynamics
            .iter()
            .map(|f| eval_terms(f, x, p))
            .collect();
        tr.push(next);
    }
    tr
}

/// Whether `phi` holds on the successor trajectory `x_1, x_2, ...`.
pub fn successor_holds(tr_from_x0: &[Vec<f64>], phi: &Formula) -> bool {
    oracle_holds(&tr_from_x0[1..], phi, 0)
}

/// Uniform point of an axis-aligned box.
pub fn uniform_in_box(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter()
        .zip(hi)
        .map(|(l, h)| if h > l { rng.random_range(*l..=*h) } else { *l })
        .collect()
}

/// Rejection sample from a bounded polytope given its bounding box.
pub fn uniform_in_polytope(
    rng: &mut ChaCha8Rng,
    s: &LinearSystem,
    lo: &[f64],
    hi: &[f64],
) -> Vec<f64> {
    for _ in 0..100_000 {
        let x = uniform_in_box(rng, lo, hi);
        if s.contains(&x, 0.0) {
            return x;
        }
    }
    panic!("rejection sampling failed; polytope too thin");
}

/// Largest violation of the bundle constraints by `x` (non-positive inside).
pub fn bundle_violation(b: &Bundle, x: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (d, (u, l)) in b.directions().iter().zip(b.upper().iter().zip(b.lower())) {
        let v: f64 = d.iter().zip(x).map(|(a, c)| a * c).sum();
        worst = worst.max(v - u).max(-l - v);
    }
    worst
}

/// Initial states in the box spanned by the bundle's axis rows; bundles in
/// the corpus always contain the axis directions.
pub fn initial_box(b: &Bundle) -> (Vec<f64>, Vec<f64>) {
    let n = b.dim();
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for (d, (u, l)) in b.directions().iter().zip(b.upper().iter().zip(b.lower())) {
        let nz: Vec<usize> = (0..n).filter(|&k| d[k] != 0.0).collect();
        if nz.len() == 1 && d[nz[0]] == 1.0 {
            hi[nz[0]] = hi[nz[0]].min(*u);
            lo[nz[0]] = lo[nz[0]].max(-*l);
        }
    }
    (lo, hi)
}

/// Initial states of the bundle by rejection from its axis box.
pub fn sample_initial(rng: &mut ChaCha8Rng, b: &Bundle) -> Vec<f64> {
    let (lo, hi) = initial_box(b);
    for _ in 0..100_000 {
        let x = uniform_in_box(rng, &lo, &hi);
        if bundle_violation(b, &x) <= 1e-12 {
            return x;
        }
    }
    panic!("rejection sampling of the initial set failed");
}
