//! Ready-made families with closed-form expectations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{build_by_similarity, build_from_vacua, fock_basis, EngineError, NlpbFamily};
use crate::operator::{
    apply_function, EpsilonSequence, FockOperator, OperatorError, Polynomial, StateVector,
    Tolerances, C64,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZooError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("invalid deformation function: {0}")]
    InvalidF(String),
    #[error("eps_n = n f(n) is not strictly increasing: {0}")]
    NonMonotone(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("beta * delta > 0 makes eps_1 = {0} non-positive")]
    NegativeEpsilon(f64),
    #[error("invalid similarity weights: {0}")]
    InvalidS(String),
    #[error("quon parameter q = {0} out of range")]
    InvalidQ(f64),
    #[error("similarity generator is not Hermitian (deviation {0:e})")]
    NotHermitianS(f64),
    #[error("conjugated ladder deviates from the transformed one by {0:e}")]
    SimilarityMismatch(f64),
}

/// A family together with what it should look like.
#[derive(Debug, Clone)]
pub struct ZooModel {
    pub family: NlpbFamily,
    pub expected_phi: Option<Vec<StateVector>>,
    pub expected_eta: Option<Vec<StateVector>>,
    pub diagnostics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl ZooModel {
    fn new(family: NlpbFamily) -> Self {
        Self {
            family,
            expected_phi: None,
            expected_eta: None,
            diagnostics: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    /// Largest relative deviation of the built ladders from the closed forms.
    pub fn closed_form_residual(&self) -> Option<f64> {
        let cmp = |got: &[StateVector], want: &[StateVector]| {
            got.iter()
                .zip(want)
                .map(|(g, w)| g.sub(w).norm() / w.norm().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        };
        match (&self.expected_phi, &self.expected_eta) {
            (None, None) => None,
            (p, e) => {
                let rp = p.as_ref().map_or(0.0, |p| cmp(self.family.phi(), p));
                let re = e.as_ref().map_or(0.0, |e| cmp(self.family.eta(), e));
                Some(rp.max(re))
            }
        }
    }
}

/// `[f(n)]! = f(1) f(2) ... f(n)`.
pub fn deformed_factorial(f: &Polynomial, n: usize) -> f64 {
    (1..=n).map(|j| f.eval(j as f64)).product()
}

pub fn standard_bosons(dim: usize, depth: usize, margin: usize) -> Result<ZooModel, ZooError> {
    let eps = EpsilonSequence::identity(dim);
    let a = FockOperator::lowering(&eps);
    let fam = build_from_vacua(a.clone(), a.adjoint(), eps, depth, margin, &Tolerances::default())?;
    let mut model = ZooModel::new(fam);
    model.expected_phi = Some(fock_basis(dim, depth + 1));
    model.expected_eta = Some(fock_basis(dim, depth + 1));
    Ok(model)
}

/// `A = a` and `B = f(N) a^+` with `N = a^+ a` on a truncated boson.
pub fn f_deformed_pair(f: &Polynomial, dim: usize, tol: &Tolerances) -> Result<(FockOperator, FockOperator), ZooError> {
    let a = FockOperator::lowering(&EpsilonSequence::identity(dim));
    let b = a.adjoint();
    let n = &b * &a;
    let f_n = apply_function(&n, |z| C64::new(f.eval(z.re), 0.0), tol)?;
    Ok((a, &f_n * &b))
}

fn f_deformed(
    f: &Polynomial,
    dim: usize,
    depth: usize,
    margin: usize,
    allow_nonzero_origin: bool,
) -> Result<ZooModel, ZooError> {
    let mut warnings = Vec::new();
    let f0 = f.eval(0.0);
    if f0 != 0.0 {
        if allow_nonzero_origin {
            warnings.push(format!("deformation does not vanish at 0 (value {f0})"));
        } else {
            return Err(ZooError::InvalidF(format!("f(0) = {f0}, must be 0")));
        }
    }
    if let Some(n) = (1..dim).find(|&n| !(f.eval(n as f64) > 0.0)) {
        return Err(ZooError::InvalidF(format!(
            "f({n}) = {} must be positive",
            f.eval(n as f64)
        )));
    }
    let eps = EpsilonSequence::from_deformation(f, dim).map_err(|e| match e {
        OperatorError::RejectedSequence(msg) => ZooError::NonMonotone(msg),
        other => other.into(),
    })?;
    let tol = Tolerances::default();
    let (a, b) = f_deformed_pair(f, dim, &tol)?;
    let fam = build_from_vacua(a, b, eps, depth, margin, &tol)?;
    let mut model = ZooModel::new(fam);
    let (phi, eta) = (0..=depth)
        .map(|n| {
            let ff = deformed_factorial(f, n).sqrt();
            let e = StateVector::basis(dim, n);
            (e.scale_real(ff), e.scale_real(1.0 / ff))
        })
        .unzip();
    model.expected_phi = Some(phi);
    model.expected_eta = Some(eta);
    model.warnings = warnings;
    let upto = model.family.interior();
    model
        .diagnostics
        .insert("power-closed-form".into(), power_identity_residual(&model.family, f, upto));
    Ok(model)
}

/// Deformed bosons with `eps_n = n f(n)`, `Phi_n = sqrt([f(n)]!) e_n` and
/// `eta_n = e_n / sqrt([f(n)]!)`.
pub fn make_f_deformed(f: &Polynomial, dim: usize, depth: usize, margin: usize) -> Result<ZooModel, ZooError> {
    f_deformed(f, dim, depth, margin, false)
}

/// `B = h(n)^2 a^+`, i.e. the f-deformed family with `f = h^2`. A non-zero
/// `h(0)` is tolerated with a warning.
pub fn make_h_deformed(h: &Polynomial, dim: usize, depth: usize, margin: usize) -> Result<ZooModel, ZooError> {
    let f = h.square();
    let model = f_deformed(&f, dim, depth, margin, true)?;
    let eps = model.family.eps();
    for n in 0..dim {
        let want = n as f64 * h.eval(n as f64).powi(2);
        debug_assert!((eps.value(n) - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
    Ok(model)
}

/// Max over `n <= upto` of the relative deviation of `B^n Phi_0` from
/// `[f(n)]! sqrt(n!) e_n`.
pub fn power_identity_residual(fam: &NlpbFamily, f: &Polynomial, upto: usize) -> f64 {
    let dim = fam.dim();
    let mut v = fam.phi()[0].clone();
    let mut worst = 0.0f64;
    let mut n_fact = 1.0f64;
    for n in 0..=upto {
        if n > 0 {
            v = fam.b() * &v;
            n_fact *= n as f64;
        }
        let want = StateVector::basis(dim, n).scale_real(deformed_factorial(f, n) * n_fact.sqrt());
        worst = worst.max(v.sub(&want).norm() / want.norm());
    }
    worst
}

/// The two-dimensional example with real `beta`, `delta`.
pub fn make_two_by_two(beta: f64, delta: f64) -> Result<ZooModel, ZooError> {
    if !(beta.is_finite() && delta.is_finite()) || beta == 0.0 || delta == 0.0 {
        return Err(ZooError::InvalidParams(format!(
            "beta = {beta}, delta = {delta} must be finite and non-zero"
        )));
    }
    if beta == delta {
        return Err(ZooError::InvalidParams(
            "beta = delta makes the two matrices commute".into(),
        ));
    }
    let eps1 = -(beta - delta).powi(2) / (beta * delta);
    if beta * delta > 0.0 {
        return Err(ZooError::NegativeEpsilon(eps1));
    }
    let a = FockOperator::from_real_rows(&[&[-1.0, beta], &[-1.0 / beta, 1.0]])?;
    let b = FockOperator::from_real_rows(&[&[-1.0, delta], &[-1.0 / delta, 1.0]])?;
    let eps = EpsilonSequence::new(vec![0.0, eps1])?;

    let y = 1.0 / (1.0 + beta * beta).sqrt();
    let w = 1.0 / (y * (beta - delta));
    let phi0 = StateVector::from_real(&[y * beta, y]);
    let eta0 = StateVector::from_real(&[w, -w * delta]);
    let s = 1.0 / eps1.sqrt();
    let phi1 = StateVector::from_real(&[y * s * (delta - beta), y * s * (1.0 - beta / delta)]);
    let eta1 = StateVector::from_real(&[w * s * (delta / beta - 1.0), w * s * (beta - delta)]);

    let fam = NlpbFamily::from_vacua(a, b, eps, phi0.clone(), eta0.clone(), 1, 0)?;
    let mut model = ZooModel::new(fam);
    model.expected_phi = Some(vec![phi0, phi1]);
    model.expected_eta = Some(vec![eta0, eta1]);
    model.diagnostics.insert("y".into(), y);
    model.diagnostics.insert("w".into(), w);
    Ok(model)
}

/// Closed forms of the two-dimensional example: `M = B A`, `S_Phi`, `S_eta`.
pub fn two_by_two_closed_forms(beta: f64, delta: f64) -> (FockOperator, FockOperator, FockOperator) {
    let y = 1.0 / (1.0 + beta * beta).sqrt();
    let w = 1.0 / (y * (beta - delta));
    let m = FockOperator::from_real_rows(&[
        &[1.0 - delta / beta, delta - beta],
        &[1.0 / delta - 1.0 / beta, 1.0 - beta / delta],
    ])
    .expect("2x2");
    let s_phi = FockOperator::diagonal(&[y * y * beta * (beta - delta), y * y * (1.0 - beta / delta)]);
    let s_eta = FockOperator::diagonal(&[w * w * (1.0 - delta / beta), w * w * delta * (delta - beta)]);
    (m, s_phi, s_eta)
}

/// Conjugates the ladder `a e_n = sqrt(eps_n) e_{n-1}` by `S = diag(s_n)`.
pub fn make_similarity_diagonal(
    s: &[f64],
    eps: &EpsilonSequence,
    dim: usize,
    depth: usize,
    margin: usize,
) -> Result<ZooModel, ZooError> {
    if s.len() < dim {
        return Err(ZooError::InvalidS(format!("{} weights for dimension {dim}", s.len())));
    }
    if let Some((n, v)) = s[..dim].iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(ZooError::InvalidS(format!("s_{n} = {v} must be positive and finite")));
    }
    if eps.len() < dim {
        return Err(ZooError::InvalidParams(format!("{} eps values for dimension {dim}", eps.len())));
    }
    let eps = eps.truncated(dim);
    let c = FockOperator::lowering(&eps);
    let t = FockOperator::diagonal(&s[..dim]);
    let fam = build_by_similarity(&c, &t, eps, &fock_basis(dim, dim), depth, margin, &Tolerances::default())?;
    let mut model = ZooModel::new(fam);
    model.expected_phi = Some((0..=depth).map(|n| StateVector::basis(dim, n).scale_real(s[n])).collect());
    model.expected_eta = Some((0..=depth).map(|n| StateVector::basis(dim, n).scale_real(1.0 / s[n])).collect());
    Ok(model)
}

/// `s_n = center + amplitude * sin(n)`.
pub fn sinusoidal_weights(center: f64, amplitude: f64, len: usize) -> Vec<f64> {
    (0..len).map(|n| center + amplitude * (n as f64).sin()).collect()
}

/// Quon ladder `c e_n = sqrt([n]_q) e_{n-1}`, optionally conjugated by `exp(N_0)`.
pub fn make_quon(q: f64, dim: usize, depth: usize, margin: usize, use_n0_similarity: bool) -> Result<ZooModel, ZooError> {
    if !(q > -1.0 && q < 1.0) {
        return Err(ZooError::InvalidQ(q));
    }
    if use_n0_similarity && !(q > 0.0) {
        return Err(ZooError::InvalidQ(q));
    }
    let tol = Tolerances::default();
    let eps = EpsilonSequence::quon(q, dim)?;
    let c = FockOperator::lowering(&eps);
    let cd = c.adjoint();
    let n0 = &cd * &c;

    let t = if use_n0_similarity {
        apply_function(&n0, |z| z.exp(), &tol)?
    } else {
        FockOperator::identity(dim)
    };
    let fam = build_by_similarity(&c, &t, eps.clone(), &fock_basis(dim, dim), depth, margin, &tol)?;
    let mut model = ZooModel::new(fam);
    let scale = |n: usize, sign: f64| if use_n0_similarity { (sign * eps.value(n)).exp() } else { 1.0 };
    model.expected_phi = Some((0..=depth).map(|n| StateVector::basis(dim, n).scale_real(scale(n, 1.0))).collect());
    model.expected_eta = Some((0..=depth).map(|n| StateVector::basis(dim, n).scale_real(scale(n, -1.0))).collect());

    model.diagnostics.insert("q-mutator".into(), q_mutator_residual(&c, q));
    model.diagnostics.insert("n0-norm".into(), eps.value(dim - 1));
    if use_n0_similarity {
        // exp(N_0) c exp(-N_0) = exp((1 - q) N_0 - 1) c
        let shifted = apply_function(&n0, |z| (z * (1.0 - q) - 1.0).exp(), &tol)?;
        let closed = &shifted * &c;
        let diff = model.family.a().sub(&closed)?.max_norm();
        model
            .diagnostics
            .insert("a-closed-form".into(), diff / closed.max_norm());
    }
    Ok(model)
}

/// `||c c^+ - q c^+ c - 1||_max` on the indices `n <= D - 2` untouched by truncation.
pub fn q_mutator_residual(c: &FockOperator, q: f64) -> f64 {
    let cd = c.adjoint();
    let m = (&(c * &cd)).sub(&(&cd * c).scale(C64::new(q, 0.0))).expect("same dimension");
    let d = c.dim();
    let mut worst = 0.0f64;
    for i in 0..d - 1 {
        for j in 0..d - 1 {
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m.get(i, j) - C64::new(expected, 0.0)).norm());
        }
    }
    worst
}

/// Conjugates an existing family by `exp(S)` with `S` Hermitian.
pub fn make_bounded_similarity(base: &NlpbFamily, s: &FockOperator) -> Result<ZooModel, ZooError> {
    let tol = Tolerances::default();
    let defect = s.hermiticity_defect();
    if defect > tol.herm_rel * s.max_norm().max(1.0) {
        return Err(ZooError::NotHermitianS(defect));
    }
    let e = apply_function(s, |z| z.exp(), &tol)?;
    let e_inv = apply_function(s, |z| (-z).exp(), &tol)?;
    let cond = e.condition_number();
    if !(cond <= tol.cond_cap) {
        return Err(EngineError::SingularT(format!("cond(exp S) = {cond:e}")).into());
    }
    let a = &(&e * base.a()) * &e_inv;
    let b = &(&e * base.b()) * &e_inv;
    let phi0 = &e * &base.phi()[0];
    let eta0 = &e_inv * &base.eta()[0];
    let fam = NlpbFamily::from_vacua(
        a,
        b,
        base.eps().clone(),
        phi0,
        eta0,
        base.depth(),
        base.margin(),
    )?;
    let mut model = ZooModel::new(fam);
    model.expected_phi = Some(base.phi().iter().map(|v| &e * v).collect());
    model.expected_eta = Some(base.eta().iter().map(|v| &e_inv * v).collect());
    let mismatch = model.closed_form_residual().unwrap_or(0.0);
    if !(mismatch <= tol.res_rel) {
        return Err(ZooError::SimilarityMismatch(mismatch));
    }
    Ok(model)
}

/// Spectrum selector for the diagonal-similarity model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EpsSpec {
    Identity,
    Quon { q: f64 },
    /// `eps_n = n f(n)`.
    Deformation { f: Polynomial },
    Values { values: Vec<f64> },
}

impl EpsSpec {
    pub fn build(&self, len: usize) -> Result<EpsilonSequence, OperatorError> {
        match self {
            EpsSpec::Identity => Ok(EpsilonSequence::identity(len)),
            EpsSpec::Quon { q } => EpsilonSequence::quon(*q, len),
            EpsSpec::Deformation { f } => EpsilonSequence::from_deformation(f, len),
            EpsSpec::Values { values } => EpsilonSequence::new(values.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Values(Vec<f64>),
    Sinusoidal { center: f64, amplitude: f64 },
}

impl WeightSpec {
    pub fn build(&self, len: usize) -> Vec<f64> {
        match self {
            WeightSpec::Values(v) => v.clone(),
            WeightSpec::Sinusoidal { center, amplitude } => sinusoidal_weights(*center, *amplitude, len),
        }
    }
}

/// Serializable description of a zoo family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    FDeformed {
        f: Polynomial,
    },
    HDeformed {
        h: Polynomial,
    },
    SimilarityDiagonal {
        s: WeightSpec,
        eps: EpsSpec,
    },
    TwoByTwo {
        beta: f64,
        delta: f64,
    },
    Quon {
        q: f64,
        #[serde(default)]
        use_n0_similarity: bool,
    },
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::FDeformed { .. } => ModelKind::FDeformed,
            ModelSpec::HDeformed { .. } => ModelKind::HDeformed,
            ModelSpec::SimilarityDiagonal { .. } => ModelKind::SimilarityDiagonal,
            ModelSpec::TwoByTwo { .. } => ModelKind::TwoByTwo,
            ModelSpec::Quon { .. } => ModelKind::Quon,
        }
    }

    /// Builds the family. The two-dimensional model ignores `dim`, `depth`
    /// and `margin`: its space is complete at `D = 2`.
    pub fn build(&self, dim: usize, depth: usize, margin: usize) -> Result<ZooModel, ZooError> {
        match self {
            ModelSpec::FDeformed { f } => make_f_deformed(f, dim, depth, margin),
            ModelSpec::HDeformed { h } => make_h_deformed(h, dim, depth, margin),
            ModelSpec::SimilarityDiagonal { s, eps } => {
                make_similarity_diagonal(&s.build(dim), &eps.build(dim)?, dim, depth, margin)
            }
            ModelSpec::TwoByTwo { beta, delta } => make_two_by_two(*beta, *delta),
            ModelSpec::Quon { q, use_n0_similarity } => make_quon(*q, dim, depth, margin, *use_n0_similarity),
        }
    }

    /// Just eps, for suites that never need the operators.
    pub fn epsilon(&self, dim: usize) -> Result<EpsilonSequence, ZooError> {
        Ok(match self {
            ModelSpec::FDeformed { f } => EpsilonSequence::from_deformation(f, dim)?,
            ModelSpec::HDeformed { h } => EpsilonSequence::from_deformation(&h.square(), dim)?,
            ModelSpec::SimilarityDiagonal { eps, .. } => eps.build(dim)?,
            ModelSpec::TwoByTwo { .. } => self.build(2, 1, 0)?.family.eps().clone(),
            ModelSpec::Quon { q, .. } => {
                if !(*q > -1.0 && *q < 1.0) {
                    return Err(ZooError::InvalidQ(*q));
                }
                EpsilonSequence::quon(*q, dim)?
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    FDeformed,
    HDeformed,
    SimilarityDiagonal,
    TwoByTwo,
    Quon,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamSchema {
    pub name: &'static str,
    pub range: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelInfo {
    pub kind: ModelKind,
    pub params: Vec<ParamSchema>,
    pub implements: &'static str,
    pub example: serde_json::Value,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::FDeformed,
        ModelKind::HDeformed,
        ModelKind::SimilarityDiagonal,
        ModelKind::TwoByTwo,
        ModelKind::Quon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::FDeformed => "f_deformed",
            ModelKind::HDeformed => "h_deformed",
            ModelKind::SimilarityDiagonal => "similarity_diagonal",
            ModelKind::TwoByTwo => "two_by_two",
            ModelKind::Quon => "quon",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Parameters a default instance of this kind is built with.
    pub fn default_spec(self) -> ModelSpec {
        match self {
            ModelKind::FDeformed => ModelSpec::FDeformed {
                f: Polynomial::new(vec![0.0, 1.0]),
            },
            ModelKind::HDeformed => ModelSpec::HDeformed {
                h: Polynomial::new(vec![0.0, 1.0]),
            },
            ModelKind::SimilarityDiagonal => ModelSpec::SimilarityDiagonal {
                s: WeightSpec::Sinusoidal {
                    center: 1.0,
                    amplitude: 0.5,
                },
                eps: EpsSpec::Quon { q: 0.5 },
            },
            ModelKind::TwoByTwo => ModelSpec::TwoByTwo {
                beta: 2.0,
                delta: -1.0,
            },
            ModelKind::Quon => ModelSpec::Quon {
                q: 0.5,
                use_n0_similarity: true,
            },
        }
    }

    pub fn info(self) -> ModelInfo {
        let (params, implements) = match self {
            ModelKind::FDeformed => (
                vec![ParamSchema {
                    name: "f",
                    range: "polynomial coefficients, ascending; f(0) = 0, f(n) > 0 for n >= 1",
                }],
                "A = a, B = f(N) a^+, eps_n = n f(n)",
            ),
            ModelKind::HDeformed => (
                vec![ParamSchema {
                    name: "h",
                    range: "polynomial coefficients, ascending; h(n)^2 > 0 for n >= 1",
                }],
                "A = a, B = h(n)^2 a^+, eps_n = n h(n)^2",
            ),
            ModelKind::SimilarityDiagonal => (
                vec![
                    ParamSchema {
                        name: "s",
                        range: "list of weights or {center, amplitude}; 0 < s_n < inf",
                    },
                    ParamSchema {
                        name: "eps",
                        range: "identity | quon {q} | deformation {f} | values {values}",
                    },
                ],
                "A = S a S^-1, B = S a^+ S^-1 with diagonal S",
            ),
            ModelKind::TwoByTwo => (
                vec![
                    ParamSchema {
                        name: "beta",
                        range: "real, non-zero, beta != delta, beta * delta < 0",
                    },
                    ParamSchema {
                        name: "delta",
                        range: "real, non-zero",
                    },
                ],
                "2x2 matrices on C^2 with eps_1 = -(beta - delta)^2 / (beta delta)",
            ),
            ModelKind::Quon => (
                vec![
                    ParamSchema {
                        name: "q",
                        range: "(-1, 1); (0, 1) with use_n0_similarity",
                    },
                    ParamSchema {
                        name: "use_n0_similarity",
                        range: "bool",
                    },
                ],
                "c c^+ - q c^+ c = 1, optionally conjugated by exp(N_0)",
            ),
        };
        ModelInfo {
            kind: self,
            params,
            implements,
            example: serde_json::to_value(self.default_spec()).expect("serializable spec"),
        }
    }
}
