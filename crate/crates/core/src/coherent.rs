//! Non-linear coherent states and the radial moment problem behind their
//! resolution of the identity.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::operator::{EpsilonSequence, FockOperator, StateVector, C64};

/// States whose estimated omitted mass exceeds this are rejected.
pub const TAIL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoherentError {
    #[error("|z| = {modulus} lies outside the truncation radius (tail estimate {tail:e})")]
    OutsideRadius { modulus: f64, tail: f64 },
    #[error("need at least {needed} eps values, have {have}")]
    TooShort { needed: usize, have: usize },
    #[error("{nodes} nodes cannot carry {needed} moments")]
    BadGrid { nodes: usize, needed: usize },
    #[error("support cap must be positive and finite, got {0}")]
    BadSupport(f64),
    #[error("invalid measure: {0}")]
    BadMeasure(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    pub z: C64,
    /// Normalized coefficients `z^n / sqrt(eps_n!)` in the ladder basis.
    pub coeffs: StateVector,
    /// Partial sum of `N(|z|^2) = sum |z|^{2n} / eps_n!`.
    pub norm_n: f64,
    /// Estimated omitted fraction of `N`.
    pub tail: f64,
    /// `(eps_{D-1}!)^{1 / (2(D-1))}`, the root-test proxy for the radius.
    pub radius_estimate: f64,
}

pub fn build_xi(eps: &EpsilonSequence, z: C64, dim: usize) -> Result<CoherentState, CoherentError> {
    if dim < 2 || eps.len() < dim {
        return Err(CoherentError::TooShort {
            needed: dim.max(2),
            have: eps.len(),
        });
    }
    let mut c = vec![C64::new(1.0, 0.0); dim];
    for n in 1..dim {
        c[n] = c[n - 1] * z / eps.value(n).sqrt();
    }
    let norm_n: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    let r2 = z.norm_sqr();
    let last = eps.value(dim - 1);
    let tail = if r2 == 0.0 {
        0.0
    } else {
        // geometric bound with ratio |z|^2 / eps_{D-1}, eps increasing
        let ratio = r2 / last;
        if ratio >= 1.0 {
            f64::INFINITY
        } else {
            c[dim - 1].norm_sqr() * ratio / (norm_n * (1.0 - ratio))
        }
    };
    if !(tail <= TAIL_TOL) {
        return Err(CoherentError::OutsideRadius {
            modulus: z.norm(),
            tail,
        });
    }
    let inv = 1.0 / norm_n.sqrt();
    let coeffs = StateVector::from_slice(&c.iter().map(|v| v * inv).collect::<Vec<_>>());
    let radius_estimate = eps.factorial(dim - 1).ln() / (2.0 * (dim - 1) as f64);
    Ok(CoherentState {
        z,
        coeffs,
        norm_n,
        tail,
        radius_estimate: radius_estimate.exp(),
    })
}

impl CoherentState {
    /// `sum_n c_n Phi_n` over the supplied ladder.
    pub fn in_family(&self, phi: &[StateVector]) -> StateVector {
        let mut out = StateVector::zeros(phi[0].dim());
        for (n, v) in phi.iter().enumerate().take(self.coeffs.dim()) {
            out = out.add(&v.scale(self.coeffs.get(n)));
        }
        out
    }
}

/// `||A Xi - z Xi|| / ||Xi||` with the last row, where truncation cuts the
/// ladder, left out.
pub fn check_eigenproperty(state: &CoherentState, a: &FockOperator) -> f64 {
    eigen_residual(&state.coeffs, state.z, a)
}

pub fn eigen_residual(v: &StateVector, z: C64, a: &FockOperator) -> f64 {
    let av = a * v;
    let d = v.dim();
    let mut r = 0.0;
    for i in 0..d - 1 {
        r += (av.get(i) - z * v.get(i)).norm_sqr();
    }
    r.sqrt() / v.norm()
}

/// `(Delta Q Delta P, |<A A^+> - |z|^2| / 2)` with `Q = (A + A^+)/sqrt 2`,
/// `P = (A - A^+)/(i sqrt 2)`. The top coefficient is dropped so that `A^+`
/// never leaves the truncated space.
pub fn heisenberg_product(state: &CoherentState, a: &FockOperator) -> (f64, f64) {
    let d = state.coeffs.dim();
    let mut c: Vec<C64> = state.coeffs.coeffs().iter().cloned().collect();
    c[d - 1] = C64::new(0.0, 0.0);
    let v = StateVector::from_slice(&c);
    let v = v.scale_real(1.0 / v.norm());

    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = a.add(&ad).expect("same dimension").scale(C64::new(s, 0.0));
    let p = a.sub(&ad).expect("same dimension").scale(C64::new(0.0, -s));
    let spread = |x: &FockOperator| {
        let xv = x * &v;
        let mean = v.inner(&xv).re;
        (xv.norm().powi(2) - mean * mean).max(0.0).sqrt()
    };
    let lhs = spread(&q) * spread(&p);
    let adv = &ad * &v;
    let rhs = 0.5 * (adv.norm().powi(2) - state.z.norm_sqr()).abs();
    (lhs, rhs)
}

/// Discrete radial measure `sum_j w_j delta(r - r_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMeasure {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub support_cap: f64,
}

impl RadialMeasure {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, support_cap: f64) -> Result<Self, CoherentError> {
        if nodes.len() != weights.len() {
            return Err(CoherentError::BadMeasure(format!(
                "{} nodes, {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        if !(support_cap.is_finite() && support_cap > 0.0) {
            return Err(CoherentError::BadSupport(support_cap));
        }
        if nodes.windows(2).any(|p| !(p[0] < p[1])) {
            return Err(CoherentError::BadMeasure("nodes must increase strictly".into()));
        }
        if nodes.iter().any(|r| !(*r >= 0.0 && *r <= support_cap)) {
            return Err(CoherentError::BadMeasure(format!("node outside [0, {support_cap}]")));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(CoherentError::BadMeasure("weights must be finite and nonnegative".into()));
        }
        Ok(Self {
            nodes,
            weights,
            support_cap,
        })
    }

    pub fn zero(support_cap: f64) -> Self {
        Self {
            nodes: Vec::new(),
            weights: Vec::new(),
            support_cap,
        }
    }

    /// `(1/pi) e^{-r^2} r dr` discretized by `n`-point Gauss-Laguerre in `u = r^2`.
    pub fn gaussian(n: usize) -> Self {
        let (u, w) = gauss_laguerre(n);
        let nodes: Vec<f64> = u.iter().map(|x| x.sqrt()).collect();
        let weights = w.iter().map(|x| x / (2.0 * PI)).collect();
        let support_cap = *nodes.last().unwrap_or(&1.0);
        Self {
            nodes,
            weights,
            support_cap,
        }
    }

    /// Discrete quon measure: atoms at `r_j^2 = q^j / (1 - q)` with weights
    /// `q^j (q;q)_inf / ((q;q)_j 2 pi)`, for `0 < q < 1`. Euler's identity
    /// `sum_j x^j / (q;q)_j = 1 / (x;q)_inf` gives moments `eps_k! / (2 pi)`.
    pub fn quon(q: f64) -> Self {
        assert!(q > 0.0 && q < 1.0, "quon measure needs 0 < q < 1");
        let count = ((1e-18f64).ln() / q.ln()).ceil() as usize + 1;
        let mut q_inf = 1.0;
        let mut x = q;
        while x > 1e-18 {
            q_inf *= 1.0 - x;
            x *= q;
        }
        let mut atoms = Vec::with_capacity(count);
        let mut qj = 1.0;
        let mut q_fact = 1.0;
        for j in 0..count {
            if j > 0 {
                qj *= q;
                q_fact *= 1.0 - qj;
            }
            atoms.push(((qj / (1.0 - q)).sqrt(), qj * q_inf / (q_fact * 2.0 * PI)));
        }
        atoms.reverse();
        let support_cap = (1.0 / (1.0 - q)).sqrt();
        let (nodes, weights) = atoms.into_iter().unzip();
        Self {
            nodes,
            weights,
            support_cap,
        }
    }

    /// `sum_j w_j r_j^{2k}`.
    pub fn moment(&self, k: usize) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(r, w)| w * (r * r).powi(k as i32))
            .sum()
    }
}

impl Serialize for RadialMeasure {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        let mut seq = ser.serialize_seq(Some(self.nodes.len()))?;
        for pair in self.nodes.iter().zip(&self.weights) {
            seq.serialize_element(&pair)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for RadialMeasure {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let pairs: Vec<(f64, f64)> = Vec::deserialize(de)?;
        let (nodes, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let cap = nodes.last().copied().filter(|r| *r > 0.0).unwrap_or(1.0);
        RadialMeasure::new(nodes, weights, cap).map_err(serde::de::Error::custom)
    }
}

/// Nodes and weights of the `n`-point Gauss-Laguerre rule for `int_0^inf f(u) e^{-u} du`.
pub fn gauss_laguerre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    // Jacobi matrix for the initial guesses, then Newton on the recurrence.
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = (2 * i + 1) as f64;
        if i + 1 < n {
            j[(i, i + 1)] = (i + 1) as f64;
            j[(i + 1, i)] = (i + 1) as f64;
        }
    }
    let mut guesses: Vec<f64> = j.symmetric_eigenvalues().iter().cloned().collect();
    guesses.sort_by(|a, b| a.total_cmp(b));

    let eval = |x: f64| {
        // (L_n(x), L_{n-1}(x))
        let (mut p0, mut p1) = (1.0, 1.0 - x);
        if n == 1 {
            return (p1, p0);
        }
        for k in 1..n {
            let p2 = ((2 * k + 1) as f64 - x) * p1 / (k + 1) as f64 - k as f64 * p0 / (k + 1) as f64;
            p0 = p1;
            p1 = p2;
        }
        (p1, p0)
    };
    let nf = n as f64;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for mut x in guesses {
        for _ in 0..50 {
            let (p, pm) = eval(x);
            let dp = nf * (p - pm) / x;
            let step = p / dp;
            x -= step;
            if step.abs() <= 1e-15 * x.abs() {
                break;
            }
        }
        let (_, pm) = eval(x);
        nodes.push(x);
        weights.push(x / (nf * nf * pm * pm));
    }
    (nodes, weights)
}

/// `|m_k - eps_k!/(2 pi)| / (eps_k!/(2 pi))` for `k = 0..=K`.
pub fn check_moment_measure(eps: &EpsilonSequence, measure: &RadialMeasure, k_max: usize) -> Vec<f64> {
    (0..=k_max)
        .map(|k| {
            let target = eps.factorial(k) / (2.0 * PI);
            (measure.moment(k) - target).abs() / target
        })
        .collect()
}

/// `3 max_{k <= K} sqrt(eps_k)`, with `K >= 1` so the window never collapses.
pub fn default_support(eps: &EpsilonSequence, k_max: usize) -> f64 {
    3.0 * eps.values()[..=k_max.max(1)].iter().cloned().fold(0.0, f64::max).sqrt()
}

/// `0` followed by `M - 1` geometric nodes from `R/1000` to `R`.
pub fn moment_grid(support: f64, count: usize) -> Vec<f64> {
    let mut nodes = vec![0.0];
    let geo = count - 1;
    let lo = support * 1e-3;
    for j in 0..geo {
        let t = if geo == 1 { 1.0 } else { j as f64 / (geo - 1) as f64 };
        nodes.push(lo * (support / lo).powf(t));
    }
    nodes
}

/// Nonnegative least squares fit of the moments `k <= K` on a fixed grid.
/// Returns the measure and the largest relative moment residual.
pub fn solve_moment_problem(
    eps: &EpsilonSequence,
    k_max: usize,
    support: f64,
    count: usize,
) -> Result<(RadialMeasure, f64), CoherentError> {
    if eps.len() <= k_max {
        return Err(CoherentError::TooShort {
            needed: k_max + 1,
            have: eps.len(),
        });
    }
    if !(support.is_finite() && support > 0.0) {
        return Err(CoherentError::BadSupport(support));
    }
    if count < k_max + 1 || count < 2 {
        return Err(CoherentError::BadGrid {
            nodes: count,
            needed: (k_max + 1).max(2),
        });
    }
    let nodes = moment_grid(support, count);
    let rows = k_max + 1;
    // rows scaled to unit targets, columns to unit norm
    let mut a = DMatrix::<f64>::zeros(rows, count);
    for (j, r) in nodes.iter().enumerate() {
        for k in 0..rows {
            let target = eps.factorial(k) / (2.0 * PI);
            a[(k, j)] = (r * r).powi(k as i32) / target;
        }
    }
    let col_norms: Vec<f64> = (0..count).map(|j| a.column(j).norm()).collect();
    for (j, s) in col_norms.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / s);
    }
    let b = DVector::from_element(rows, 1.0);
    let x = nnls(&a, &b);
    let atoms: Vec<(f64, f64)> = nodes
        .iter()
        .zip(x.iter().zip(&col_norms))
        .map(|(r, (w, s))| (*r, w / s))
        .filter(|(_, w)| *w > 0.0)
        .collect();
    let grid_measure = measure_from_atoms(&atoms, support);
    let grid_feas = max_residual(eps, &grid_measure, k_max);
    let polished = measure_from_atoms(&polish_atoms(eps, k_max, support, atoms), support);
    let polished_feas = max_residual(eps, &polished, k_max);
    Ok(if polished_feas < grid_feas {
        (polished, polished_feas)
    } else {
        (grid_measure, grid_feas)
    })
}

fn max_residual(eps: &EpsilonSequence, m: &RadialMeasure, k_max: usize) -> f64 {
    check_moment_measure(eps, m, k_max).into_iter().fold(0.0, f64::max)
}

fn measure_from_atoms(atoms: &[(f64, f64)], support: f64) -> RadialMeasure {
    let mut atoms = atoms.to_vec();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut nodes: Vec<f64> = Vec::with_capacity(atoms.len());
    let mut weights: Vec<f64> = Vec::with_capacity(atoms.len());
    for (r, w) in atoms {
        // coincident atoms merge
        if nodes.last() == Some(&r) {
            *weights.last_mut().unwrap() += w;
        } else {
            nodes.push(r);
            weights.push(w);
        }
    }
    RadialMeasure {
        nodes,
        weights,
        support_cap: support,
    }
}

/// Gauss-Newton on the positions and weights of the grid solution's atoms.
/// A fixed grid resolves a measure with isolated atoms only to the grid
/// spacing; letting the atoms move recovers the remaining digits.
fn polish_atoms(eps: &EpsilonSequence, k_max: usize, support: f64, mut atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let rows = k_max + 1;
    let targets: Vec<f64> = (0..rows).map(|k| eps.factorial(k) / (2.0 * PI)).collect();
    let residual = |atoms: &[(f64, f64)]| -> DVector<f64> {
        DVector::from_fn(rows, |k, _| {
            atoms.iter().map(|(r, w)| w * (r * r).powi(k as i32)).sum::<f64>() / targets[k] - 1.0
        })
    };
    let mut f = residual(&atoms);
    for _ in 0..50 {
        let err = f.amax();
        if err <= 1e-15 {
            break;
        }
        // relative increments: w -> w (1 + alpha), r -> r (1 + beta)
        let p = atoms.len();
        let mut j = DMatrix::<f64>::zeros(rows, 2 * p);
        for (i, (r, w)) in atoms.iter().enumerate() {
            for k in 0..rows {
                let m = w * (r * r).powi(k as i32) / targets[k];
                j[(k, i)] = m;
                j[(k, p + i)] = 2.0 * k as f64 * m;
            }
        }
        let Ok(step) = j.svd(true, true).solve(&(-&f), 1e-14) else {
            break;
        };
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial: Vec<(f64, f64)> = atoms
                .iter()
                .enumerate()
                .map(|(i, (r, w))| {
                    let alpha = (scale * step[i]).max(-0.5);
                    let beta = (scale * step[p + i]).clamp(-0.5, 0.5);
                    ((r * (1.0 + beta)).min(support), w * (1.0 + alpha))
                })
                .collect();
            let ft = residual(&trial);
            if ft.amax() < err {
                atoms = trial;
                f = ft;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    atoms
}

/// Lawson-Hanson active set method for `min ||A x - b||, x >= 0`.
fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-14 * a.norm().max(1.0) * b.norm().max(1.0);

    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(&idx);
        let s = sub
            .svd(true, true)
            .solve(b, 1e-15)
            .expect("svd with both factors");
        let mut full = DVector::zeros(n);
        for (i, &j) in idx.iter().enumerate() {
            full[j] = s[i];
        }
        full
    };

    for _ in 0..3 * n {
        let grad = a.transpose() * (b - a * &x);
        let pick = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        let Some(t) = pick.filter(|&t| grad[t] > tol) else {
            break;
        };
        passive[t] = true;
        loop {
            let s = solve_passive(&passive);
            if (0..n).filter(|&j| passive[j]).all(|j| s[j] > 0.0) {
                x = s;
                break;
            }
            let alpha = (0..n)
                .filter(|&j| passive[j] && s[j] <= 0.0)
                .map(|j| x[j] / (x[j] - s[j]))
                .fold(f64::INFINITY, f64::min);
            x += (s - &x) * alpha;
            for j in 0..n {
                if passive[j] && x[j] <= 0.0 {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// `max |(sum_{j,t} w_j dtheta |v><v|) - I|` on the leading block, with
/// `v = sum_n z^n / sqrt(eps_n!) e_n` at `z = r_j e^{i theta_t}`.
pub fn check_identity_resolution(
    eps: &EpsilonSequence,
    measure: &RadialMeasure,
    block: usize,
    n_theta: usize,
) -> f64 {
    let dtheta = 2.0 * PI / n_theta as f64;
    let mut acc = DMatrix::<C64>::zeros(block, block);
    let inv_sqrt_fact: Vec<f64> = (0..block).map(|n| 1.0 / eps.factorial(n).sqrt()).collect();
    for (r, w) in measure.nodes.iter().zip(&measure.weights) {
        for t in 0..n_theta {
            let z = C64::from_polar(*r, t as f64 * dtheta);
            let mut v = Vec::with_capacity(block);
            let mut zn = C64::new(1.0, 0.0);
            for (n, s) in inv_sqrt_fact.iter().enumerate() {
                if n > 0 {
                    zn *= z;
                }
                v.push(zn * *s);
            }
            let weight = w * dtheta;
            for i in 0..block {
                for j in 0..block {
                    acc[(i, j)] += v[i] * v[j].conj() * weight;
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..block {
        for j in 0..block {
            let id = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc[(i, j)] - C64::new(id, 0.0)).norm());
        }
    }
    worst
}
