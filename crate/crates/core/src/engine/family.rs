use super::EngineError;
use crate::operator::{EpsilonSequence, FockOperator, StateVector, Tolerances, C64};

/// A validated triple `(a, b, eps)` with its biorthogonal ladders.
#[derive(Debug, Clone, PartialEq)]
pub struct NlpbFamily {
    a: FockOperator,
    b: FockOperator,
    eps: EpsilonSequence,
    phi: Vec<StateVector>,
    eta: Vec<StateVector>,
    depth: usize,
    margin: usize,
    normalization: C64,
}

impl NlpbFamily {
    /// Builds the ladders from given vacua by repeated application of `b`
    /// and `a^+`. The vacua are taken as they are; whether they are actually
    /// annihilated is for [`super::verify_family`] to judge.
    pub fn from_vacua(
        a: FockOperator,
        b: FockOperator,
        eps: EpsilonSequence,
        phi0: StateVector,
        eta0: StateVector,
        depth: usize,
        margin: usize,
    ) -> Result<Self, EngineError> {
        check_shapes(&a, &b, &eps, depth, margin)?;
        if phi0.dim() != a.dim() || eta0.dim() != a.dim() {
            return Err(EngineError::InvalidDepth(format!(
                "vacuum dimension {} does not match operator dimension {}",
                phi0.dim(),
                a.dim()
            )));
        }
        let ad = a.adjoint();
        let mut phi = Vec::with_capacity(depth + 1);
        let mut eta = Vec::with_capacity(depth + 1);
        phi.push(phi0);
        eta.push(eta0);
        for n in 1..=depth {
            let s = 1.0 / eps.value(n).sqrt();
            phi.push((&b * &phi[n - 1]).scale_real(s));
            eta.push((&ad * &eta[n - 1]).scale_real(s));
        }
        Ok(Self::from_ladders(a, b, eps, phi, eta, margin))
    }

    fn from_ladders(
        a: FockOperator,
        b: FockOperator,
        eps: EpsilonSequence,
        phi: Vec<StateVector>,
        eta: Vec<StateVector>,
        margin: usize,
    ) -> Self {
        let depth = phi.len() - 1;
        let normalization = phi[0].inner(&eta[0]);
        Self {
            a,
            b,
            eps,
            phi,
            eta,
            depth,
            margin,
            normalization,
        }
    }

    pub fn a(&self) -> &FockOperator {
        &self.a
    }

    pub fn b(&self) -> &FockOperator {
        &self.b
    }

    pub fn eps(&self) -> &EpsilonSequence {
        &self.eps
    }

    pub fn phi(&self) -> &[StateVector] {
        &self.phi
    }

    pub fn eta(&self) -> &[StateVector] {
        &self.eta
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// Largest index at which identities are asserted.
    pub fn interior(&self) -> usize {
        self.depth - self.margin
    }

    /// `<Phi_0, eta_0>`, equal to one after normalization.
    pub fn normalization(&self) -> C64 {
        self.normalization
    }

    /// `M = b a`.
    pub fn number_op(&self) -> FockOperator {
        &self.b * &self.a
    }

    /// `M^+ = a^+ b^+`.
    pub fn dual_number_op(&self) -> FockOperator {
        &self.a.adjoint() * &self.b.adjoint()
    }

    pub fn with_margin(&self, margin: usize) -> Result<Self, EngineError> {
        if margin > self.depth {
            return Err(EngineError::InvalidDepth(format!(
                "margin {margin} exceeds depth {}",
                self.depth
            )));
        }
        let mut out = self.clone();
        out.margin = margin;
        Ok(out)
    }
}

fn check_shapes(
    a: &FockOperator,
    b: &FockOperator,
    eps: &EpsilonSequence,
    depth: usize,
    margin: usize,
) -> Result<(), EngineError> {
    let d = a.dim();
    if b.dim() != d || eps.len() != d {
        return Err(EngineError::InvalidDepth(format!(
            "dimensions disagree: a is {d}, b is {}, eps has {} entries",
            b.dim(),
            eps.len()
        )));
    }
    if depth == 0 || depth >= d {
        return Err(EngineError::InvalidDepth(format!(
            "depth {depth} must satisfy 1 <= depth < {d}"
        )));
    }
    if margin > depth {
        return Err(EngineError::InvalidDepth(format!(
            "margin {margin} exceeds depth {depth}"
        )));
    }
    Ok(())
}

/// Right singular vector for the smallest singular value of `op`, after
/// checking that the numerical kernel is exactly one-dimensional.
fn kernel_vector(
    op: &FockOperator,
    name: &'static str,
    tol: &Tolerances,
) -> Result<StateVector, EngineError> {
    let tolerance = tol.vac_rel * op.max_norm().max(f64::MIN_POSITIVE);
    let svd = op.matrix().clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let smallest = sv[order[0]];
    if smallest > tolerance {
        return Err(EngineError::NoVacuum {
            operator: name,
            sigma: smallest,
            tolerance,
        });
    }
    if order.len() > 1 && sv[order[1]] <= tolerance {
        return Err(EngineError::DegenerateVacuum {
            operator: name,
            tolerance,
        });
    }
    let row = v_t.row(order[0]);
    let v: Vec<C64> = row.iter().map(|z| z.conj()).collect();
    let v = StateVector::from_slice(&v);
    Ok(v.scale_real(1.0 / v.norm()).fix_phase())
}

/// Extracts the vacua of `a` and `b^+` numerically, normalizes the pair so
/// that `Phi_0` has unit norm and `<Phi_0, eta_0> = 1`, and builds both ladders.
pub fn build_from_vacua(
    a: FockOperator,
    b: FockOperator,
    eps: EpsilonSequence,
    depth: usize,
    margin: usize,
    tol: &Tolerances,
) -> Result<NlpbFamily, EngineError> {
    check_shapes(&a, &b, &eps, depth, margin)?;
    let phi0 = kernel_vector(&a, "a", tol)?;
    let eta_raw = kernel_vector(&b.adjoint(), "b^+", tol)?;
    let overlap = phi0.inner(&eta_raw);
    if overlap.norm() < tol.vac_rel {
        return Err(EngineError::ZeroOverlap(overlap.norm()));
    }
    let eta0 = eta_raw.scale(overlap.inv());
    NlpbFamily::from_vacua(a, b, eps, phi0, eta0, depth, margin)
}

/// The first `count` Fock basis vectors in dimension `dim`.
pub fn fock_basis(dim: usize, count: usize) -> Vec<StateVector> {
    (0..count).map(|n| StateVector::basis(dim, n)).collect()
}

/// Conjugates an orthonormal ladder: `a = T c T^-1`, `b = T c^+ T^-1`,
/// `Phi_n = T Phi^_n`, `eta_n = (T^-1)^+ Phi^_n`.
///
/// `basis` must hold at least `depth + 1` orthonormal vectors on which
/// `c Phi^_n = sqrt(eps_n) Phi^_{n-1}`.
pub fn build_by_similarity(
    c: &FockOperator,
    t: &FockOperator,
    eps: EpsilonSequence,
    basis: &[StateVector],
    depth: usize,
    margin: usize,
    tol: &Tolerances,
) -> Result<NlpbFamily, EngineError> {
    check_shapes(c, t, &eps, depth, margin)?;
    if basis.len() < depth + 1 {
        return Err(EngineError::InvalidDepth(format!(
            "basis has {} vectors, depth {depth} needs {}",
            basis.len(),
            depth + 1
        )));
    }

    let cond = t.condition_number();
    if !(cond <= tol.cond_cap) {
        return Err(EngineError::SingularT(format!(
            "condition number {cond:e} exceeds {:e}",
            tol.cond_cap
        )));
    }
    let t_inv = t
        .inverse()
        .ok_or_else(|| EngineError::SingularT("matrix inversion failed".into()))?;

    let n = depth + 1;
    let mut gram_defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { 1.0 } else { 0.0 };
            gram_defect = gram_defect.max((basis[i].inner(&basis[j]) - expected).norm());
        }
    }
    if gram_defect > tol.res_rel {
        return Err(EngineError::LadderMismatch(format!(
            "basis is not orthonormal (deviation {gram_defect:e})"
        )));
    }
    let ladder_tol = tol.res_rel * c.max_norm().max(1.0);
    for k in 0..n {
        let lhs = c * &basis[k];
        let rhs = if k == 0 {
            StateVector::zeros(c.dim())
        } else {
            basis[k - 1].scale_real(eps.value(k).sqrt())
        };
        let r = lhs.sub(&rhs).norm();
        if !(r <= ladder_tol) {
            return Err(EngineError::LadderMismatch(format!(
                "c fails to lower basis vector {k} (residual {r:e})"
            )));
        }
    }

    let a = &(t * c) * &t_inv;
    let b = &(t * &c.adjoint()) * &t_inv;
    let t_inv_adj = t_inv.adjoint();
    let phi: Vec<StateVector> = basis[..n].iter().map(|v| t * v).collect();
    let eta: Vec<StateVector> = basis[..n].iter().map(|v| &t_inv_adj * v).collect();
    Ok(NlpbFamily::from_ladders(a, b, eps, phi, eta, margin))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bosons(d: usize) -> (FockOperator, FockOperator, EpsilonSequence) {
        let eps = EpsilonSequence::identity(d);
        let a = FockOperator::lowering(&eps);
        let b = a.adjoint();
        (a, b, eps)
    }

    #[test]
    fn standard_bosons_give_fock_basis() {
        let (a, b, eps) = bosons(12);
        let fam = build_from_vacua(a, b, eps, 10, 2, &Tolerances::default()).unwrap();
        for n in 0..=10 {
            let e = StateVector::basis(12, n);
            assert!(fam.phi()[n].sub(&e).norm() < 1e-13, "phi {n}");
            assert!(fam.eta()[n].sub(&e).norm() < 1e-13, "eta {n}");
        }
        assert!((fam.normalization() - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn two_by_two_vacua_match_closed_form() {
        let (beta, delta) = (2.0, -1.0);
        let a = FockOperator::from_real_rows(&[&[-1.0, beta], &[-1.0 / beta, 1.0]]).unwrap();
        let b = FockOperator::from_real_rows(&[&[-1.0, delta], &[-1.0 / delta, 1.0]]).unwrap();
        let eps = EpsilonSequence::new(vec![0.0, 4.5]).unwrap();
        let fam = build_from_vacua(a, b, eps, 1, 0, &Tolerances::default()).unwrap();
        // Phi_0 = y (beta, 1) with unit norm; eta_0 = w (1, -delta), y w (beta - delta) = 1
        let y = 1.0 / (1.0 + beta * beta).sqrt();
        let w = 1.0 / (y * (beta - delta));
        let phi0 = StateVector::from_real(&[y * beta, y]);
        let eta0 = StateVector::from_real(&[w, -w * delta]);
        assert!(fam.phi()[0].sub(&phi0).norm() < 1e-14);
        assert!(fam.eta()[0].sub(&eta0).norm() < 1e-14);
        assert!((y * w * (beta - delta) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trivial_kernel_is_no_vacuum() {
        let eps = EpsilonSequence::identity(4);
        let a = FockOperator::identity(4);
        let b = FockOperator::raising(&eps);
        assert!(matches!(
            build_from_vacua(a, b, eps, 2, 1, &Tolerances::default()),
            Err(EngineError::NoVacuum { operator: "a", .. })
        ));
    }

    #[test]
    fn double_kernel_is_degenerate() {
        let eps = EpsilonSequence::identity(4);
        let a = FockOperator::diagonal(&[0.0, 0.0, 1.0, 1.0]);
        let b = FockOperator::raising(&eps);
        assert!(matches!(
            build_from_vacua(a, b, eps, 2, 1, &Tolerances::default()),
            Err(EngineError::DegenerateVacuum { operator: "a", .. })
        ));
    }

    #[test]
    fn orthogonal_vacua_are_rejected() {
        // a kills e_0, b^+ kills only e_1
        let eps = EpsilonSequence::identity(3);
        let a = FockOperator::lowering(&eps);
        let b_adj = FockOperator::from_real_rows(&[
            &[1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(
            build_from_vacua(a, b_adj.adjoint(), eps, 1, 0, &Tolerances::default()),
            Err(EngineError::ZeroOverlap(_))
        ));
    }

    #[test]
    fn depth_bounds() {
        let (a, b, eps) = bosons(4);
        let tol = Tolerances::default();
        assert!(matches!(
            build_from_vacua(a.clone(), b.clone(), eps.clone(), 4, 0, &tol),
            Err(EngineError::InvalidDepth(_))
        ));
        assert!(matches!(
            build_from_vacua(a, b, eps, 2, 3, &tol),
            Err(EngineError::InvalidDepth(_))
        ));
    }

    #[test]
    fn similarity_with_identity_is_orthonormal() {
        let eps = EpsilonSequence::quon(0.5, 8);
        let eps = eps.unwrap();
        let c = FockOperator::lowering(&eps);
        let t = FockOperator::identity(8);
        let basis = fock_basis(8, 8);
        let fam = build_by_similarity(&c, &t, eps, &basis, 6, 2, &Tolerances::default()).unwrap();
        assert_eq!(fam.a(), &c);
        assert_eq!(fam.b(), &c.adjoint());
        for n in 0..=6 {
            assert_eq!(fam.phi()[n], basis[n]);
            assert_eq!(fam.eta()[n], basis[n]);
        }
    }

    #[test]
    fn similarity_rejects_singular_t_and_bad_ladder() {
        let eps = EpsilonSequence::identity(4);
        let c = FockOperator::lowering(&eps);
        let basis = fock_basis(4, 4);
        let tol = Tolerances::default();
        let t = FockOperator::diagonal(&[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            build_by_similarity(&c, &t, eps.clone(), &basis, 2, 1, &tol),
            Err(EngineError::SingularT(_))
        ));
        let wrong = FockOperator::lowering(&EpsilonSequence::new(vec![0.0, 1.0, 3.0, 4.0]).unwrap());
        assert!(matches!(
            build_by_similarity(&wrong, &FockOperator::identity(4), eps, &basis, 2, 1, &tol),
            Err(EngineError::LadderMismatch(_))
        ));
    }
}
