//! Frame operators, the metric square root and the orthonormal ladder
//! hidden behind every regular family.

use nalgebra::DMatrix;

use super::family::{build_by_similarity, NlpbFamily};
use super::relative_residual;
use super::verify::{CheckResult, CheckTolerances, VerificationReport};
use super::EngineError;
use crate::operator::{
    commutator, max_abs, positive_sqrt, FockOperator, HermitianEigen, StateVector, Tolerances, C64,
};

/// `S_Phi = sum |Phi_n><Phi_n|` and `S_eta = sum |eta_n><eta_n|` over the
/// whole ladder `n <= depth`.
pub fn frame_operators(fam: &NlpbFamily) -> (FockOperator, FockOperator) {
    let frame = |ladder: &[StateVector]| {
        let d = fam.dim();
        let mut m = DMatrix::<C64>::zeros(d, d);
        for v in ladder {
            m += v.coeffs() * v.coeffs().adjoint();
        }
        FockOperator::new(m).expect("finite ladder vectors")
    };
    (frame(fam.phi()), frame(fam.eta()))
}

/// `||S_Phi S_eta - P||_max` with `P` the orthogonal projection onto the
/// leading `depth + 1` Fock states (the identity once `depth + 1 >= D`).
///
/// This is the right comparison whenever the ladders live on the leading Fock
/// states, as they do for diagonal similarities; [`verify_family`] uses a
/// basis-free variant.
///
/// [`verify_family`]: super::verify_family
pub fn check_metric_duality(s_phi: &FockOperator, s_eta: &FockOperator, depth: usize) -> f64 {
    let d = s_phi.dim();
    let p: Vec<f64> = (0..d).map(|i| if i <= depth { 1.0 } else { 0.0 }).collect();
    let prod = s_phi * s_eta;
    max_abs(prod.sub(&FockOperator::diagonal(&p)).expect("same dimension").matrix())
}

/// `S_Phi S_eta` must act as the identity on every interior `Phi_k`.
pub(crate) fn duality_on_ladder(fam: &NlpbFamily) -> f64 {
    let (s_phi, s_eta) = frame_operators(fam);
    let prod = &s_phi * &s_eta;
    (0..=fam.interior())
        .map(|k| {
            let v = &fam.phi()[k];
            relative_residual(&(&prod * v), v, v)
        })
        .fold(0.0, f64::max)
}

/// `T = S_Phi^{1/2}` on the span of the ladder, extended by the identity on
/// its orthogonal complement so that `T` stays invertible at finite depth.
#[derive(Debug, Clone)]
pub struct InteriorMetric {
    pub t: FockOperator,
    pub t_inv: FockOperator,
    /// Eigenvalues of `S_Phi` on the ladder span, ascending.
    pub spectrum: Vec<f64>,
}

impl InteriorMetric {
    pub fn new(fam: &NlpbFamily, tol: &Tolerances) -> Result<Self, EngineError> {
        let (s_phi, _) = frame_operators(fam);
        let d = fam.dim();
        let rank = fam.depth() + 1;
        if rank == d {
            let t = positive_sqrt(&s_phi, tol)?;
            let t_inv = t
                .inverse()
                .ok_or_else(|| EngineError::SingularT("S_Phi is singular".into()))?;
            let spectrum = HermitianEigen::new(&s_phi, tol)?.values;
            if !(spectrum[0] > 0.0) {
                return Err(EngineError::SingularT(format!(
                    "smallest frame eigenvalue {:e}",
                    spectrum[0]
                )));
            }
            return Ok(Self { t, t_inv, spectrum });
        }

        let eig = HermitianEigen::new(&s_phi, tol)?;
        let split = d - rank;
        let kept = &eig.values[split..];
        let dropped = eig.values[..split].iter().map(|v| v.abs()).fold(0.0, f64::max);
        let smallest = kept[0];
        if !(smallest > 0.0 && smallest > 1e3 * dropped) {
            return Err(EngineError::SingularT(format!(
                "ladder span is numerically degenerate: smallest kept eigenvalue {smallest:e}, \
                 largest null eigenvalue {dropped:e}"
            )));
        }
        let t = eig.reconstruct(|i, l| C64::new(if i < split { 1.0 } else { l.sqrt() }, 0.0));
        let t_inv = eig.reconstruct(|i, l| C64::new(if i < split { 1.0 } else { 1.0 / l.sqrt() }, 0.0));
        let herm = |m: DMatrix<C64>| {
            let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            FockOperator::new(h).expect("finite metric")
        };
        Ok(Self {
            t: herm(t),
            t_inv: herm(t_inv),
            spectrum: kept.to_vec(),
        })
    }
}

/// The decomposition `a = T c T^-1`, `b = T c^+ T^-1` recovered from a family.
#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub report: VerificationReport,
    pub metric: InteriorMetric,
    pub c: FockOperator,
    /// `Phi^_n = T^-1 Phi_n`, orthonormal for a regular family.
    pub phi_hat: Vec<StateVector>,
    /// `<Phi^_n, [c, c^+] Phi^_n>` on the checked indices.
    pub commutator_eigenvalues: Vec<C64>,
}

/// Undoes the similarity: computes `T = S_Phi^{1/2}`, `c = T^-1 a T` and
/// `Phi^_n = T^-1 Phi_n`, then checks that the `Phi^_n` are orthonormal, that
/// `c` lowers them with weights `sqrt(eps_n)`, and the commutator eigenrelation
/// `[c, c^+] Phi^_n = (eps_{n+1} - eps_n) Phi^_n`.
pub fn theorem1_roundtrip(
    fam: &NlpbFamily,
    tol: &Tolerances,
    checks: &CheckTolerances,
) -> Result<RoundTrip, EngineError> {
    let metric = InteriorMetric::new(fam, tol)?;
    let c = &(&metric.t_inv * fam.a()) * &metric.t;
    let phi_hat: Vec<StateVector> = fam.phi().iter().map(|v| &metric.t_inv * v).collect();
    let eps = fam.eps();
    let k = fam.interior();
    let k_up = k.min(fam.depth() - 1);

    let mut ortho = 0.0f64;
    for i in 0..=k {
        for j in 0..=k {
            let expected = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((phi_hat[i].inner(&phi_hat[j]) - C64::new(expected, 0.0)).norm());
        }
    }

    let lowering = (0..=k)
        .map(|n| {
            let lhs = &c * &phi_hat[n];
            let rhs = if n == 0 {
                StateVector::zeros(fam.dim())
            } else {
                phi_hat[n - 1].scale_real(eps.value(n).sqrt())
            };
            relative_residual(&lhs, &rhs, &phi_hat[n])
        })
        .fold(0.0, f64::max);

    let comm = commutator(&c, &c.adjoint())?;
    let comm_res = (0..=k_up)
        .map(|n| {
            let lhs = &comm * &phi_hat[n];
            let rhs = phi_hat[n].scale_real(eps.value(n + 1) - eps.value(n));
            relative_residual(&lhs, &rhs, &phi_hat[n])
        })
        .fold(0.0, f64::max);
    let commutator_eigenvalues = (0..=k_up)
        .map(|n| phi_hat[n].inner(&(&comm * &phi_hat[n])))
        .collect();

    let report = VerificationReport {
        checks: vec![
            CheckResult::new("thm1-orthonormal", ortho, checks.theorem1, (0, k)),
            CheckResult::new("thm1-lowering", lowering, checks.theorem1, (0, k)),
            CheckResult::new("eq514-commutator", comm_res, checks.theorem1, (0, k_up)),
        ],
        riesz: None,
    };
    Ok(RoundTrip {
        report,
        metric,
        c,
        phi_hat,
        commutator_eigenvalues,
    })
}

/// Rebuilds the family from `(c, T, Phi^)` and returns the largest entry
/// deviation of the rebuilt `a`, `b` on the interior block.
pub fn rebuild_residual(fam: &NlpbFamily, rt: &RoundTrip, tol: &Tolerances) -> Result<f64, EngineError> {
    let rebuilt = build_by_similarity(
        &rt.c,
        &rt.metric.t,
        fam.eps().clone(),
        &rt.phi_hat,
        fam.depth(),
        fam.margin(),
        tol,
    )?;
    let k = fam.interior();
    let block = |x: &FockOperator, y: &FockOperator| {
        max_abs(&(x.leading_block(k + 1) - y.leading_block(k + 1)))
    };
    Ok(block(rebuilt.a(), fam.a()).max(block(rebuilt.b(), fam.b())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntertwiningResiduals {
    /// `M T = T M_0` on the orthonormal ladder.
    pub m_t: f64,
    /// `T M^+ = M_0 T` on the dual ladder.
    pub t_mdual: f64,
    /// `M S_Phi = S_Phi M^+` on the dual ladder.
    pub m_s: f64,
}

impl IntertwiningResiduals {
    pub fn max(&self) -> f64 {
        self.m_t.max(self.t_mdual).max(self.m_s)
    }
}

/// Intertwining relations between `M = b a`, `M^+ = a^+ b^+` and
/// `M_0 = c^+ c`, each evaluated on the interior vectors spanning the
/// subspace it is asserted on.
pub fn check_intertwining(
    fam: &NlpbFamily,
    tol: &Tolerances,
) -> Result<IntertwiningResiduals, EngineError> {
    let metric = InteriorMetric::new(fam, tol)?;
    let t = &metric.t;
    let c = &(&metric.t_inv * fam.a()) * t;
    let m0 = &c.adjoint() * &c;
    let m = fam.number_op();
    let m_dual = fam.dual_number_op();
    let (s_phi, _) = frame_operators(fam);
    let k = fam.interior();

    let worst = |left: &FockOperator, right: &FockOperator, vectors: &[StateVector]| {
        vectors[..=k]
            .iter()
            .map(|v| {
                let l = left * v;
                let r = right * v;
                let scale = l.norm().max(r.norm());
                let diff = l.sub(&r).norm();
                if scale == 0.0 {
                    diff
                } else {
                    diff / scale
                }
            })
            .fold(0.0, f64::max)
    };
    let phi_hat: Vec<StateVector> = fam.phi().iter().map(|v| &metric.t_inv * v).collect();
    Ok(IntertwiningResiduals {
        m_t: worst(&(&m * t), &(t * &m0), &phi_hat),
        t_mdual: worst(&(t * &m_dual), &(&m0 * t), fam.eta()),
        m_s: worst(&(&m * &s_phi), &(&s_phi * &m_dual), fam.eta()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{build_by_similarity, build_from_vacua, fock_basis};
    use crate::operator::EpsilonSequence;

    fn bosons(d: usize, depth: usize) -> NlpbFamily {
        let eps = EpsilonSequence::identity(d);
        let a = FockOperator::lowering(&eps);
        build_from_vacua(a.clone(), a.adjoint(), eps, depth, 2, &Tolerances::default()).unwrap()
    }

    #[test]
    fn standard_bosons_frames_are_projections() {
        let fam = bosons(10, 6);
        let (s_phi, s_eta) = frame_operators(&fam);
        let p: Vec<f64> = (0..10).map(|i| if i <= 6 { 1.0 } else { 0.0 }).collect();
        let p = FockOperator::diagonal(&p);
        assert!(s_phi.sub(&p).unwrap().max_norm() < 1e-13);
        assert!(s_eta.sub(&p).unwrap().max_norm() < 1e-13);
        assert!(check_metric_duality(&s_phi, &s_eta, 6) <= 1e-10);
    }

    #[test]
    fn standard_bosons_roundtrip_is_trivial() {
        let fam = bosons(12, 9);
        let tol = Tolerances::default();
        let rt = theorem1_roundtrip(&fam, &tol, &CheckTolerances::default()).unwrap();
        assert!(rt.report.all_pass());
        let id = FockOperator::identity(12);
        assert!(rt.metric.t.sub(&id).unwrap().max_norm() < 1e-12);
        let k = fam.interior();
        for i in 0..=k {
            for j in 0..=k {
                assert!((rt.c.get(i, j) - fam.a().get(i, j)).norm() < 1e-12);
            }
        }
        let r = check_intertwining(&fam, &tol).unwrap();
        assert!(r.max() <= 1e-10, "{r:?}");
    }

    #[test]
    fn degenerate_ladder_is_singular_t() {
        // eps ladder where b sends everything to a single ray
        let eps = EpsilonSequence::identity(4);
        let a = FockOperator::lowering(&eps);
        let mut b = FockOperator::zeros(4).into_matrix();
        b[(1, 0)] = C64::new(1.0, 0.0);
        b[(1, 1)] = C64::new(1.0, 0.0);
        let b = FockOperator::new(b).unwrap();
        let fam = NlpbFamily::from_vacua(
            a,
            b,
            eps,
            StateVector::basis(4, 0),
            StateVector::basis(4, 0),
            2,
            1,
        )
        .unwrap();
        assert!(matches!(
            InteriorMetric::new(&fam, &Tolerances::default()),
            Err(EngineError::SingularT(_))
        ));
    }

    #[test]
    fn roundtrip_then_rebuild_reproduces_operators() {
        // non-diagonal similarity on a complete ladder
        let d = 6;
        let eps = EpsilonSequence::quon(0.3, d).unwrap();
        let c = FockOperator::lowering(&eps);
        let mut t = DMatrix::<C64>::identity(d, d);
        for i in 0..d - 1 {
            t[(i, i + 1)] = C64::new(0.2, 0.1);
            t[(i + 1, i)] = C64::new(0.2, -0.1);
        }
        let t = FockOperator::new(t).unwrap();
        let tol = Tolerances::default();
        let fam = build_by_similarity(&c, &t, eps.clone(), &fock_basis(d, d), d - 1, 1, &tol).unwrap();
        let rt = theorem1_roundtrip(&fam, &tol, &CheckTolerances::default()).unwrap();
        assert!(rt.report.all_pass(), "{:?}", rt.report);
        let rebuilt = build_by_similarity(&rt.c, &rt.metric.t, eps, &rt.phi_hat, d - 1, 1, &tol).unwrap();
        let k = fam.interior();
        for i in 0..=k {
            for j in 0..=k {
                assert!((rebuilt.a().get(i, j) - fam.a().get(i, j)).norm() < 1e-9);
                assert!((rebuilt.b().get(i, j) - fam.b().get(i, j)).norm() < 1e-9);
            }
        }
        assert!(rebuild_residual(&fam, &rt, &tol).unwrap() < 1e-9);
    }
}
