//! Heuristic regularity diagnostic.
//!
//! Boundedness of the frame operator cannot be decided from finite sections,
//! so the verdict only looks at how the extreme frame eigenvalues move as the
//! section doubles in size.

use nalgebra::DMatrix;
use serde::Serialize;

use super::family::NlpbFamily;
use crate::operator::{HermitianEigen, C64};

/// Last growth factor of both bounds must stay below this for "regular".
pub const STABLE_RATIO: f64 = 1.1;
/// Every growth factor of one bound at or above this reads as divergence.
pub const GROWTH_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularVerdict {
    Regular,
    NonRegularIndicated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RieszLevel {
    pub depth: usize,
    pub lower: f64,
    pub upper: f64,
    /// `sup_{n <= depth} sqrt(eps_n)`, a lower bound on `||c||`.
    pub witness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RieszDiagnostic {
    pub levels: Vec<RieszLevel>,
    pub lower: f64,
    pub upper: f64,
    pub verdict: RegularVerdict,
}

/// Extreme eigenvalues of `sum_{n<=depth} |Phi_n><Phi_n|` on its range, i.e.
/// of the Gram matrix `<Phi_n, Phi_m>`.
fn frame_bounds(fam: &NlpbFamily, depth: usize) -> (f64, f64) {
    let phi = &fam.phi()[..=depth];
    let n = phi.len();
    let mut g = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = phi[i].inner(&phi[j]);
        }
    }
    let eig = HermitianEigen::of_matrix(&g);
    (eig.values[0], eig.values[n - 1])
}

/// Sections at `K/4`, `K/2` and `K` with `K` the interior index.
fn section_depths(k: usize) -> Vec<usize> {
    let mut depths: Vec<usize> = [k / 4, k / 2, k].into_iter().filter(|&d| d >= 1).collect();
    depths.dedup();
    depths
}

pub fn riesz_diagnostic(fam: &NlpbFamily) -> RieszDiagnostic {
    let eps = fam.eps();
    let levels: Vec<RieszLevel> = section_depths(fam.interior())
        .into_iter()
        .map(|depth| {
            let (lower, upper) = frame_bounds(fam, depth);
            RieszLevel {
                depth,
                lower,
                upper,
                witness: eps.value(depth).sqrt(),
            }
        })
        .collect();
    let (lower, upper) = levels.last().map_or_else(
        || frame_bounds(fam, 0),
        |l| (l.lower, l.upper),
    );
    RieszDiagnostic {
        verdict: classify(&levels),
        levels,
        lower,
        upper,
    }
}

fn classify(levels: &[RieszLevel]) -> RegularVerdict {
    if levels.len() < 3 {
        return RegularVerdict::Inconclusive;
    }
    if levels.iter().any(|l| !(l.lower > 0.0) || !l.upper.is_finite()) {
        return RegularVerdict::NonRegularIndicated;
    }
    let up: Vec<f64> = levels.windows(2).map(|w| w[1].upper / w[0].upper).collect();
    let down: Vec<f64> = levels.windows(2).map(|w| w[0].lower / w[1].lower).collect();
    if up.iter().all(|&g| g >= GROWTH_RATIO) || down.iter().all(|&g| g >= GROWTH_RATIO) {
        return RegularVerdict::NonRegularIndicated;
    }
    let last_up = *up.last().unwrap();
    let last_down = *down.last().unwrap();
    if last_up <= STABLE_RATIO && last_down <= STABLE_RATIO {
        return RegularVerdict::Regular;
    }
    RegularVerdict::Inconclusive
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::build_from_vacua;
    use crate::operator::{EpsilonSequence, FockOperator, Tolerances};

    fn level(depth: usize, lower: f64, upper: f64) -> RieszLevel {
        RieszLevel {
            depth,
            lower,
            upper,
            witness: 0.0,
        }
    }

    #[test]
    fn classification_rules() {
        let stable = [level(4, 1.0, 2.0), level(9, 1.0, 2.1), level(18, 1.0, 2.11)];
        assert_eq!(classify(&stable), RegularVerdict::Regular);
        let growing = [level(4, 1.0, 24.0), level(9, 1.0, 4e5), level(18, 1.0, 6e15)];
        assert_eq!(classify(&growing), RegularVerdict::NonRegularIndicated);
        let shrinking = [level(4, 0.5, 1.0), level(9, 0.1, 1.0), level(18, 1e-3, 1.0)];
        assert_eq!(classify(&shrinking), RegularVerdict::NonRegularIndicated);
        let wobbly = [level(4, 1.0, 2.0), level(9, 1.0, 5.0), level(18, 1.0, 6.0)];
        assert_eq!(classify(&wobbly), RegularVerdict::Inconclusive);
        assert_eq!(classify(&stable[..2]), RegularVerdict::Inconclusive);
    }

    #[test]
    fn section_depths_are_distinct_and_positive() {
        assert_eq!(section_depths(18), vec![4, 9, 18]);
        assert_eq!(section_depths(2), vec![1, 2]);
        assert_eq!(section_depths(0), Vec::<usize>::new());
    }

    #[test]
    fn standard_bosons_are_regular() {
        let eps = EpsilonSequence::identity(30);
        let a = FockOperator::lowering(&eps);
        let fam = build_from_vacua(a.clone(), a.adjoint(), eps, 20, 2, &Tolerances::default()).unwrap();
        let diag = riesz_diagnostic(&fam);
        assert_eq!(diag.verdict, RegularVerdict::Regular);
        assert!((diag.lower - 1.0).abs() < 1e-12 && (diag.upper - 1.0).abs() < 1e-12);
        let w: Vec<f64> = diag.levels.iter().map(|l| l.witness).collect();
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
    }
}
