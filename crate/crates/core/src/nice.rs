//! Nice-basis certificates.
//!
//! A basis is nice when every bracket [X_i, X_j] hits at most one basis
//! vector and every (i, k) pair arises from at most one partner j. For such
//! bases the Einstein-nilradical question reduces to exact linear algebra:
//! build the m×n matrix Y with rows f_i + f_j − f_k over the nonzero
//! structure constants and ask for a strictly positive α with Y Yᵗ α = [1]_m.
//! The equivalent convex-geometry formulation — the projection of the origin
//! onto the affine span of the rows lies in the relative interior of their
//! convex hull — is implemented separately for cross-validation.

use crate::algebra::LieAlgebra;
use crate::linalg::{
    positive_solution, project_onto_subspace, solve_affine, AffineOutcome, PositiveOutcome,
    RationalMatrix,
};
use crate::Q;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NiceVerdict {
    Nice,
    /// Pair (i, j) maps onto two distinct targets k1, k2.
    PairTwoTargets {
        i: usize,
        j: usize,
        k1: usize,
        k2: usize,
    },
    /// Target k receives brackets from i with two distinct partners j1, j2.
    TargetTwoPartners {
        i: usize,
        k: usize,
        j1: usize,
        j2: usize,
    },
    /// A bracket [X_i, X_j] has a component on X_i or X_j, which cannot
    /// happen in a nice basis of a nilpotent algebra.
    DegenerateTarget {
        i: usize,
        j: usize,
    },
}

impl NiceVerdict {
    pub fn is_nice(&self) -> bool {
        matches!(self, NiceVerdict::Nice)
    }
}

/// Check the two counting conditions of a nice basis.
pub fn is_nice(l: &LieAlgebra) -> NiceVerdict {
    let n = l.dim();
    // Condition 1: each unordered pair has at most one target.
    for i in 0..n {
        for j in (i + 1)..n {
            let targets = l.bracket_basis(i, j);
            if targets.len() > 1 {
                return NiceVerdict::PairTwoTargets {
                    i,
                    j,
                    k1: targets[0].0,
                    k2: targets[1].0,
                };
            }
            if let Some(&(k, _)) = targets.first() {
                if k == i || k == j {
                    return NiceVerdict::DegenerateTarget { i, j };
                }
            }
        }
    }
    // Condition 2: over ordered pairs (i, k), at most one j with c_ij^k ≠ 0.
    for i in 0..n {
        for k in 0..n {
            let mut partner: Option<usize> = None;
            for j in 0..n {
                if j != i && !l.c(i, j, k).is_zero() {
                    if let Some(j1) = partner {
                        return NiceVerdict::TargetTwoPartners { i, k, j1, j2: j };
                    }
                    partner = Some(j);
                }
            }
        }
    }
    NiceVerdict::Nice
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NiceOutcome {
    EinsteinNilradical,
    NotEinsteinNilradical,
    NotNice,
}

/// Certificate data for the nice-basis test.
#[derive(Debug, Clone)]
pub struct NiceCertificate {
    /// Triples (i, j, k), i < j, with c_ij^k ≠ 0, in lexicographic order.
    pub lambda_set: Vec<(usize, usize, usize)>,
    pub y: RationalMatrix,
    pub rank_y: usize,
    pub verdict: NiceOutcome,
    /// Strictly positive solution of Y Yᵗ α = [1]_m, when one exists.
    pub alpha: Option<Vec<Q>>,
    /// Exact optimum of the positivity margin (≤ 0 on failure).
    pub infeasibility_margin: Option<Q>,
    /// Dual multipliers certifying the failed positivity, when applicable.
    pub infeasibility_duals: Option<Vec<Q>>,
    /// φ = id − (Yᵗα)^D from any solution α of the affine system; this is
    /// the diagonal pre-Einstein derivation of the algebra.
    pub phi_diag: Vec<Q>,
}

/// The ordered index set Λ and the matrix Y.
pub fn build_y(l: &LieAlgebra) -> Result<(Vec<(usize, usize, usize)>, RationalMatrix), String> {
    if !is_nice(l).is_nice() {
        return Err("basis is not nice".into());
    }
    if l.is_abelian() {
        return Err("abelian algebra has an empty Y".into());
    }
    let n = l.dim();
    // BTreeMap iteration is already lexicographic on (i, j, k).
    let lambda: Vec<(usize, usize, usize)> = l.brackets().map(|(&t, _)| t).collect();
    let rows: Vec<Vec<Q>> = lambda
        .iter()
        .map(|&(i, j, k)| {
            let mut row = vec![Q::zero(); n];
            row[i] = Q::one();
            row[j] = Q::one();
            row[k] = -Q::one();
            row
        })
        .collect();
    Ok((lambda, RationalMatrix::from_rows(rows)))
}

/// The Einstein-nilradical test for a nice basis, by exact LP.
pub fn nice_test(l: &LieAlgebra) -> Result<NiceCertificate, String> {
    let (lambda, y) = build_y(l)?;
    let m = y.nrows();
    let yyt = y.matmul(&y.transpose());
    let ones = vec![Q::one(); m];
    // The affine system is always solvable; its Yᵗα is unique across the
    // solution set and yields the diagonal pre-Einstein derivation.
    let AffineOutcome::Solvable(affine) = solve_affine(&yyt, &ones) else {
        unreachable!("Y Yᵗ α = [1] is solvable for every nice basis");
    };
    let yta = y.transpose().mul_vec(&affine.particular);
    let phi_diag: Vec<Q> = yta.iter().map(|v| Q::one() - v).collect();
    let rank_y = y.rank();
    let (verdict, alpha, margin, duals) = match positive_solution(&yyt, &ones) {
        PositiveOutcome::Positive { x, margin } => {
            (NiceOutcome::EinsteinNilradical, Some(x), Some(margin), None)
        }
        PositiveOutcome::NoPositive { best_margin, duals } => (
            NiceOutcome::NotEinsteinNilradical,
            None,
            Some(best_margin),
            Some(duals),
        ),
        PositiveOutcome::Infeasible { .. } => {
            unreachable!("Y Yᵗ α = [1] is solvable for every nice basis")
        }
    };
    Ok(NiceCertificate {
        lambda_set: lambda,
        y,
        rank_y,
        verdict,
        alpha,
        infeasibility_margin: margin,
        infeasibility_duals: duals,
        phi_diag,
    })
}

/// The convex-geometry form of the same test: the projection P of the origin
/// onto the affine span of the rows of Y must lie in the relative interior
/// of their convex hull. Decided by a second exact LP on the barycentric
/// representation P = Σ β_a Y_a, Σ β_a = 1, β > 0.
pub fn convex_hull_test(l: &LieAlgebra) -> Result<NiceOutcome, String> {
    let (_, y) = build_y(l)?;
    let m = y.nrows();
    let n = y.ncols();
    let base: Vec<Q> = y.row(0).to_vec();
    let directions: Vec<Vec<Q>> = (1..m)
        .map(|a| {
            y.row(a)
                .iter()
                .zip(&base)
                .map(|(x, b)| x - b)
                .collect::<Vec<Q>>()
        })
        .filter(|d| d.iter().any(|x| !x.is_zero()))
        .collect();
    // Reduce to an independent spanning set for the projection.
    let span = crate::algebra::Subspace::span(n, &directions);
    let proj_of_base = project_onto_subspace(&base, span.basis()).map_err(|e| e.to_string())?;
    // P = base − proj_span(base): the point of the affine span closest to 0.
    let p: Vec<Q> = base.iter().zip(&proj_of_base).map(|(b, q)| b - q).collect();
    // Strict feasibility of Yᵗβ = P, Σβ = 1, β > 0.
    let mut rows: Vec<Vec<Q>> = (0..n).map(|c| y.column(c)).collect();
    rows.push(vec![Q::one(); m]);
    let mut rhs = p.clone();
    rhs.push(Q::one());
    let a = RationalMatrix::from_rows(rows);
    Ok(match positive_solution(&a, &rhs) {
        PositiveOutcome::Positive { .. } => NiceOutcome::EinsteinNilradical,
        _ => NiceOutcome::NotEinsteinNilradical,
    })
}

/// Diagonal Ricci operator of a diagonal metric on a nice basis:
/// ric = (−½ Yᵗβ)^D with β_a = (c_ij^k)² g_k / (g_i g_j), where g_i = r_i²
/// is the diagonal of the Gram matrix. Exact.
pub fn diagonal_ricci(l: &LieAlgebra, gram_diag: &[Q]) -> Result<Vec<Q>, String> {
    if !is_nice(l).is_nice() {
        return Err("basis is not nice".into());
    }
    assert_eq!(gram_diag.len(), l.dim());
    if gram_diag.iter().any(|g| !g.is_positive()) {
        return Err("metric diagonal must be positive".into());
    }
    let n = l.dim();
    let mut ric = vec![Q::zero(); n];
    let half = Q::new(1.into(), 2.into());
    for (&(i, j, k), c) in l.brackets() {
        let beta = &(c * c) * &(&gram_diag[k] / &(&gram_diag[i] * &gram_diag[j]));
        let term = &half * &beta;
        ric[i] -= &term;
        ric[j] -= &term;
        ric[k] += &term;
    }
    Ok(ric)
}

/// Closed-form nilsoliton metric for a nice Einstein nilradical with Y of
/// full row rank: the diagonal metric r = (e^{s_1}, …, e^{s_n}) where
/// (Ys)_a = √α_a / |c_ij^k|. Returns the Gram diagonal r_i².
pub fn closed_form_nilsoliton(l: &LieAlgebra) -> Result<Option<Vec<f64>>, String> {
    let cert = nice_test(l)?;
    if cert.verdict != NiceOutcome::EinsteinNilradical {
        return Ok(None);
    }
    if cert.rank_y < cert.y.nrows() {
        // Rank-deficient Y: the linear system for s may be inconsistent;
        // callers fall back to the orbit flow.
        return Ok(None);
    }
    let alpha = cert.alpha.as_ref().expect("verdict carries alpha");
    let n = cert.y.ncols();
    let yf = cert.y.to_f64();
    let rhs: Vec<f64> = cert
        .lambda_set
        .iter()
        .zip(alpha)
        .map(|(&(i, j, k), a)| {
            let c = l.c(i, j, k).to_f64().expect("structure constant in range");
            a.to_f64().expect("alpha in range").sqrt() / c.abs()
        })
        .collect();
    // Minimum-norm solution s = Yᵗ (Y Yᵗ)⁻¹ rhs.
    let yyt = yf.matmul(&yf.transpose());
    let inv = yyt.inverse().ok_or("Y Yᵗ numerically singular")?;
    let w = inv.mul_vec(&rhs);
    let s = yf.transpose().mul_vec(&w);
    debug_assert_eq!(s.len(), n);
    Ok(Some(s.iter().map(|si| (2.0 * si).exp()).collect()))
}

/// Exact assertion Y·[1]_n = [1]_m for a nice algebra.
pub fn y_row_sum_is_one(y: &RationalMatrix) -> bool {
    let ones = vec![Q::one(); y.ncols()];
    y.mul_vec(&ones).iter().all(|v| v.is_one())
}
