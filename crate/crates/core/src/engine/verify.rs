use serde::{Deserialize, Serialize};

use super::family::NlpbFamily;
use super::relative_residual;
use super::riesz::{riesz_diagnostic, RieszDiagnostic};
use crate::operator::{commutator, max_abs, FockOperator, StateVector, C64};

/// Pass thresholds for the individual check groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckTolerances {
    /// Relative residual of every ladder, eigenvalue, Gram and commutator identity.
    pub battery: f64,
    /// `||a Phi_0|| / (||a||_max ||Phi_0||)` and its dual.
    pub vacuum: f64,
    /// Orthonormality and lowering checks after undoing the similarity.
    pub theorem1: f64,
    pub intertwining: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        Self {
            battery: 1e-9,
            vacuum: 1e-10,
            theorem1: 1e-8,
            intertwining: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    /// Inclusive range of ladder indices the residual was maximized over.
    pub index_range: (usize, usize),
}

impl CheckResult {
    pub fn new(id: impl Into<String>, residual: f64, tol: f64, index_range: (usize, usize)) -> Self {
        Self {
            id: id.into(),
            residual,
            tol,
            pass: residual.is_finite() && residual <= tol,
            index_range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub riesz: Option<RieszDiagnostic>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, id: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn residual(&self, id: &str) -> f64 {
        self.check(id).map_or(f64::NAN, |c| c.residual)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

/// Max over `range` of a per-index residual.
fn max_over(range: std::ops::RangeInclusive<usize>, f: impl Fn(usize) -> f64) -> f64 {
    range.map(f).fold(0.0, |acc, r| if r.is_nan() { f64::NAN } else { acc.max(r) })
}

fn ladder_step(
    op: &FockOperator,
    ladder: &[StateVector],
    n: usize,
    coeff: f64,
    target: Option<usize>,
) -> f64 {
    let lhs = op * &ladder[n];
    let rhs = match target {
        Some(m) => ladder[m].scale_real(coeff),
        None => StateVector::zeros(lhs.dim()),
    };
    relative_residual(&lhs, &rhs, &ladder[n])
}

/// Runs every identity of the definition on the interior indices and
/// attaches the Riesz growth diagnostic.
pub fn verify_family(fam: &NlpbFamily, tol: &CheckTolerances) -> VerificationReport {
    let eps = fam.eps();
    let phi = fam.phi();
    let eta = fam.eta();
    let a = fam.a();
    let b = fam.b();
    let ad = a.adjoint();
    let bd = b.adjoint();
    let depth = fam.depth();
    let k = fam.interior();
    // identities that step one rung up need Phi_{n+1}
    let k_up = k.min(depth - 1);
    let mut checks = Vec::new();

    let vac = |op: &FockOperator, v: &StateVector| {
        let scale = op.max_norm() * v.norm();
        let r = (op * v).norm();
        if scale == 0.0 {
            r
        } else {
            r / scale
        }
    };
    checks.push(CheckResult::new("p1-vacuum", vac(a, &phi[0]), tol.vacuum, (0, 0)));
    checks.push(CheckResult::new("p2-vacuum", vac(&bd, &eta[0]), tol.vacuum, (0, 0)));

    let lower = |op: &FockOperator, ladder: &[StateVector]| {
        max_over(0..=k, |n| {
            if n == 0 {
                ladder_step(op, ladder, 0, 0.0, None)
            } else {
                ladder_step(op, ladder, n, eps.value(n).sqrt(), Some(n - 1))
            }
        })
    };
    checks.push(CheckResult::new("eq56-lower-phi", lower(a, phi), tol.battery, (0, k)));
    checks.push(CheckResult::new("eq56-lower-eta", lower(&bd, eta), tol.battery, (0, k)));

    let raise = |op: &FockOperator, ladder: &[StateVector]| {
        max_over(0..=k_up, |n| {
            ladder_step(op, ladder, n, eps.value(n + 1).sqrt(), Some(n + 1))
        })
    };
    checks.push(CheckResult::new("eq58-raise-phi", raise(b, phi), tol.battery, (0, k_up)));
    checks.push(CheckResult::new("eq58-raise-eta", raise(&ad, eta), tol.battery, (0, k_up)));

    let m = fam.number_op();
    let m_dual = fam.dual_number_op();
    let eigen = |op: &FockOperator, ladder: &[StateVector]| {
        max_over(0..=k, |n| ladder_step(op, ladder, n, eps.value(n), Some(n)))
    };
    checks.push(CheckResult::new("eq59-eigen-M", eigen(&m, phi), tol.battery, (0, k)));
    checks.push(CheckResult::new("eq59-eigen-Mdual", eigen(&m_dual, eta), tol.battery, (0, k)));

    let mut gram = 0.0f64;
    for i in 0..=k {
        for j in 0..=k {
            let expected = if i == j { 1.0 } else { 0.0 };
            gram = gram.max((phi[i].inner(&eta[j]) - C64::new(expected, 0.0)).norm());
        }
    }
    checks.push(CheckResult::new("eq510-gram", gram, tol.battery, (0, k)));

    checks.push(CheckResult::new(
        "eq512-resolution",
        resolution_residual(phi, eta, k, fam.dim()),
        tol.battery,
        (0, k),
    ));

    let comm = commutator(a, b).expect("family operators share a dimension");
    let comm_dual = commutator(&bd, &ad).expect("family operators share a dimension");
    let gap = |n: usize| eps.value(n + 1) - eps.value(n);
    checks.push(CheckResult::new(
        "eq513-commutator",
        max_over(0..=k_up, |n| ladder_step(&comm, phi, n, gap(n), Some(n))),
        tol.battery,
        (0, k_up),
    ));
    checks.push(CheckResult::new(
        "eq513-dual-commutator",
        max_over(0..=k_up, |n| ladder_step(&comm_dual, eta, n, gap(n), Some(n))),
        tol.battery,
        (0, k_up),
    ));

    checks.push(CheckResult::new(
        "metric-duality",
        super::metric::duality_on_ladder(fam),
        tol.battery,
        (0, k),
    ));

    VerificationReport {
        checks,
        riesz: Some(riesz_diagnostic(fam)),
    }
}

/// `R = sum_{n<=k} |Phi_n><eta_n|` must fix every `Phi_m` and `R^+` every
/// `eta_m` for `m <= k`; on a complete ladder `R` must be the identity.
fn resolution_residual(phi: &[StateVector], eta: &[StateVector], k: usize, dim: usize) -> f64 {
    let mut r = FockOperator::zeros(dim);
    for n in 0..=k {
        r = r.add(&phi[n].outer(&eta[n])).expect("same dimension");
    }
    let rd = r.adjoint();
    let mut worst = max_over(0..=k, |m| {
        let a = relative_residual(&(&r * &phi[m]), &phi[m], &phi[m]);
        let b = relative_residual(&(&rd * &eta[m]), &eta[m], &eta[m]);
        a.max(b)
    });
    if k + 1 == dim {
        let id = FockOperator::identity(dim);
        worst = worst.max(max_abs(r.sub(&id).expect("same dimension").matrix()));
    }
    worst
}

/// `<eta_n, [a, b] Phi_n>` on the indices where the commutator check applies.
pub fn commutator_eigenvalues(fam: &NlpbFamily) -> Vec<C64> {
    let comm = commutator(fam.a(), fam.b()).expect("family operators share a dimension");
    let k_up = fam.interior().min(fam.depth() - 1);
    (0..=k_up)
        .map(|n| fam.eta()[n].inner(&(&comm * &fam.phi()[n])) / fam.eta()[n].inner(&fam.phi()[n]))
        .collect()
}
