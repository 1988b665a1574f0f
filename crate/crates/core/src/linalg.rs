//! Exact rational linear algebra.
//!
//! Dense row reduction, kernels, affine solves with infeasibility
//! certificates, orthogonal projection, and a strict-positivity test solved
//! by an exact simplex with Bland's rule. No floating point anywhere in this
//! module.

use crate::Q;
use num_traits::{One, Signed, Zero};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("basis vectors are linearly dependent")]
    DependentBasis,
    #[error("matrix is singular")]
    Singular,
}

pub fn qz() -> Q {
    Q::zero()
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub fn qr(num: i64, den: i64) -> Q {
    Q::new(num.into(), den.into())
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense matrix over the exact rationals, row major.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|x| x.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == nc), "ragged rows");
        RationalMatrix {
            rows: nr,
            cols: nc,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Q) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn diagonal(diag: &[Q]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = d.clone();
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Q] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Q> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].clone())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape");
        Self::from_fn(self.rows, other.cols, |r, c| {
            (0..self.cols).map(|k| &self[(r, k)] * &other[(k, c)]).sum()
        })
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len(), "mul_vec shape");
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |r, c| &self[(r, c)] + &other[(r, c)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |r, c| &self[(r, c)] - &other[(r, c)])
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| &self[(r, c)] * s)
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..r).all(|c| self[(r, c)] == self[(c, r)]))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn trace(&self) -> Q {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)].clone()).sum()
    }

    /// Reduced row echelon form; returns (rref, pivot columns).
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| !m[(i, c)].is_zero()) else {
                continue;
            };
            m.swap_rows(r, pr);
            let inv = m[(r, c)].recip();
            for cc in c..m.cols {
                let v = &m[(r, cc)] * &inv;
                m[(r, cc)] = v;
            }
            for i in 0..m.rows {
                if i != r && !m[(i, c)].is_zero() {
                    let factor = m[(i, c)].clone();
                    for cc in c..m.cols {
                        let v = &m[(i, cc)] - &(&factor * &m[(r, cc)]);
                        m[(i, cc)] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Canonical basis of the null space (one vector per free column).
    pub fn kernel(&self) -> Vec<Vec<Q>> {
        let (rref, pivots) = self.rref();
        let pivot_set: Vec<Option<usize>> = {
            let mut v = vec![None; self.cols];
            for (row, &col) in pivots.iter().enumerate() {
                v[col] = Some(row);
            }
            v
        };
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivot_set[free].is_some() {
                continue;
            }
            let mut v = vec![Q::zero(); self.cols];
            v[free] = Q::one();
            for (row, &col) in pivots.iter().enumerate() {
                v[col] = -rref[(row, free)].clone();
            }
            basis.push(v);
        }
        basis
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::DimensionMismatch(
                "inverse of non-square".into(),
            ));
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug[(r, c)] = self[(r, c)].clone();
            }
            aug[(r, n + r)] = Q::one();
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return Err(LinalgError::Singular);
        }
        Ok(Self::from_fn(n, n, |r, c| red[(r, n + c)].clone()))
    }

    pub fn det(&self) -> Q {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Q::one();
        for c in 0..n {
            let Some(pr) = (c..n).find(|&i| !m[(i, c)].is_zero()) else {
                return Q::zero();
            };
            if pr != c {
                m.swap_rows(c, pr);
                det = -det;
            }
            det *= m[(c, c)].clone();
            let inv = m[(c, c)].recip();
            for i in (c + 1)..n {
                if !m[(i, c)].is_zero() {
                    let factor = &m[(i, c)] * &inv;
                    for cc in c..n {
                        let v = &m[(i, cc)] - &(&factor * &m[(c, cc)]);
                        m[(i, cc)] = v;
                    }
                }
            }
        }
        det
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn to_f64(&self) -> crate::mat::Mat {
        crate::mat::Mat::from_fn(self.rows, self.cols, |r, c| {
            num_traits::ToPrimitive::to_f64(&self[(r, c)]).expect("rational out of f64 range")
        })
    }
}

impl std::ops::Index<(usize, usize)> for RationalMatrix {
    type Output = Q;
    fn index(&self, (r, c): (usize, usize)) -> &Q {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RationalMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Q {
        &mut self.data[r * self.cols + c]
    }
}

/// Solution set of `A x = b`: one particular solution plus a kernel basis.
#[derive(Debug, Clone)]
pub struct AffineSolutionSet {
    pub particular: Vec<Q>,
    pub kernel_basis: Vec<Vec<Q>>,
}

#[derive(Debug, Clone)]
pub enum AffineOutcome {
    Solvable(AffineSolutionSet),
    /// `multipliers` is a row vector y with yᵗA = 0 and yᵗb = 1.
    Infeasible {
        multipliers: Vec<Q>,
    },
}

/// Exact solve of `A x = b` with an infeasibility certificate on failure.
pub fn solve_affine(a: &RationalMatrix, b: &[Q]) -> AffineOutcome {
    assert_eq!(a.nrows(), b.len(), "solve_affine shape");
    let (rows, cols) = (a.nrows(), a.ncols());
    // Augment with b and an identity block to track row operations.
    let mut aug = RationalMatrix::zeros(rows, cols + 1 + rows);
    for r in 0..rows {
        for c in 0..cols {
            aug[(r, c)] = a[(r, c)].clone();
        }
        aug[(r, cols)] = b[r].clone();
        aug[(r, cols + 1 + r)] = Q::one();
    }
    let (red, _) = aug.rref();
    for r in 0..rows {
        let lead_in_a = (0..cols).any(|c| !red[(r, c)].is_zero());
        if !lead_in_a && !red[(r, cols)].is_zero() {
            let scale = red[(r, cols)].recip();
            let multipliers = (0..rows)
                .map(|k| &red[(r, cols + 1 + k)] * &scale)
                .collect();
            return AffineOutcome::Infeasible { multipliers };
        }
    }
    // Re-reduce A alone for the canonical particular solution and kernel.
    let (rref, pivots) = a.rref();
    // Carry b through the same reduction: solve from the joint reduction above.
    let mut particular = vec![Q::zero(); cols];
    {
        // red rows correspond to rref rows for the leading part.
        for (row, &col) in pivots.iter().enumerate() {
            let _ = &rref;
            particular[col] = red[(row, cols)].clone();
        }
    }
    debug_assert!(a.mul_vec(&particular).iter().zip(b).all(|(x, y)| x == y));
    AffineOutcome::Solvable(AffineSolutionSet {
        particular,
        kernel_basis: a.kernel(),
    })
}

/// Orthogonal projection of `v` onto the span of `basis` (standard inner
/// product), by an exact Gram solve.
pub fn project_onto_subspace(v: &[Q], basis: &[Vec<Q>]) -> Result<Vec<Q>, LinalgError> {
    if basis.is_empty() {
        return Ok(vec![Q::zero(); v.len()]);
    }
    let k = basis.len();
    if RationalMatrix::from_rows(basis.to_vec()).rank() < k {
        return Err(LinalgError::DependentBasis);
    }
    let gram = RationalMatrix::from_fn(k, k, |r, c| dot(&basis[r], &basis[c]));
    let rhs: Vec<Q> = basis.iter().map(|u| dot(u, v)).collect();
    let AffineOutcome::Solvable(sol) = solve_affine(&gram, &rhs) else {
        return Err(LinalgError::DependentBasis);
    };
    let mut p = vec![Q::zero(); v.len()];
    for (x, u) in sol.particular.iter().zip(basis) {
        for (pi, ui) in p.iter_mut().zip(u) {
            *pi += x * ui;
        }
    }
    Ok(p)
}

/// Outcome of the strict-positivity test for `A x = b, x > 0`.
#[derive(Debug, Clone)]
pub enum PositiveOutcome {
    /// A solution with every coordinate ≥ `margin` > 0.
    Positive { x: Vec<Q>, margin: Q },
    /// `A x = b` is solvable but admits no strictly positive solution.
    /// `best_margin` ≤ 0 is the exact optimum of max t s.t. x ≥ t·[1],
    /// and `duals` are the equality multipliers at that optimum.
    NoPositive { best_margin: Q, duals: Vec<Q> },
    /// `A x = b` itself has no solution; `multipliers` certify it.
    Infeasible { multipliers: Vec<Q> },
}

impl PositiveOutcome {
    pub fn solution(&self) -> Option<&[Q]> {
        match self {
            PositiveOutcome::Positive { x, .. } => Some(x),
            _ => None,
        }
    }
}

/// Decide whether `A x = b` admits a strictly positive solution, exactly.
///
/// Solved as the LP: maximize t subject to A x = b, x ≥ t·[1], t ≤ 1, by a
/// two-phase dense rational simplex with Bland's rule. A strictly positive
/// solution exists iff the optimum satisfies t > 0.
pub fn positive_solution(a: &RationalMatrix, b: &[Q]) -> PositiveOutcome {
    match solve_affine(a, b) {
        AffineOutcome::Infeasible { multipliers } => {
            return PositiveOutcome::Infeasible { multipliers }
        }
        AffineOutcome::Solvable(_) => {}
    }
    let m = a.ncols();
    // Standard-form variables: s_0..s_{m-1} (x = s + t·[1]), u, v (t = u − v), w.
    let nv = m + 3;
    let nrows = a.nrows() + 1;
    let mut rows: Vec<Vec<Q>> = Vec::with_capacity(nrows);
    let mut rhs: Vec<Q> = Vec::with_capacity(nrows);
    for r in 0..a.nrows() {
        let mut row = vec![Q::zero(); nv];
        let mut asum = Q::zero();
        for c in 0..m {
            row[c] = a[(r, c)].clone();
            asum += &a[(r, c)];
        }
        row[m] = asum.clone();
        row[m + 1] = -asum;
        rows.push(row);
        rhs.push(b[r].clone());
    }
    // t ≤ 1 as u − v + w = 1.
    let mut cap = vec![Q::zero(); nv];
    cap[m] = Q::one();
    cap[m + 1] = -Q::one();
    cap[m + 2] = Q::one();
    rows.push(cap);
    rhs.push(Q::one());

    let mut objective = vec![Q::zero(); nv];
    objective[m] = Q::one();
    objective[m + 1] = -Q::one();

    let lp = SimplexResult::solve(rows, rhs, objective);
    let t = lp.objective_value;
    if t.is_positive() {
        let x: Vec<Q> = (0..m).map(|j| &lp.solution[j] + &t).collect();
        debug_assert!(a.mul_vec(&x).iter().zip(b).all(|(p, q)| p == q));
        PositiveOutcome::Positive { x, margin: t }
    } else {
        let mut duals = lp.duals;
        duals.pop(); // drop the multiplier of the internal cap row
        PositiveOutcome::NoPositive {
            best_margin: t,
            duals,
        }
    }
}

struct SimplexResult {
    objective_value: Q,
    solution: Vec<Q>,
    duals: Vec<Q>,
}

impl SimplexResult {
    /// Maximize cᵗz subject to R z = rhs, z ≥ 0, assuming the system is
    /// feasible and the objective is bounded on the feasible set.
    fn solve(rows: Vec<Vec<Q>>, mut rhs: Vec<Q>, objective: Vec<Q>) -> SimplexResult {
        let m = rows.len();
        let nv = objective.len();
        let total = nv + m; // artificials appended
        let mut t = vec![vec![Q::zero(); total + 1]; m];
        let mut rows = rows;
        for r in 0..m {
            if rhs[r].is_negative() {
                for v in rows[r].iter_mut() {
                    *v = -v.clone();
                }
                rhs[r] = -rhs[r].clone();
            }
            for c in 0..nv {
                t[r][c] = rows[r][c].clone();
            }
            t[r][nv + r] = Q::one();
            t[r][total] = rhs[r].clone();
        }
        let mut basis: Vec<usize> = (nv..total).collect();

        // Phase 1: minimize the sum of artificials.
        let mut cost1 = vec![Q::zero(); total];
        for c in nv..total {
            cost1[c] = -Q::one();
        }
        Self::run(&mut t, &mut basis, &cost1, nv);
        let p1: Q = basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| b >= nv)
            .map(|(r, _)| t[r][total].clone())
            .sum();
        assert!(p1.is_zero(), "phase-1 failed on a feasible system");
        // Pivot remaining zero-level artificials out where possible.
        for r in 0..m {
            if basis[r] >= nv {
                if let Some(c) = (0..nv).find(|&c| !t[r][c].is_zero()) {
                    Self::pivot(&mut t, &mut basis, r, c);
                }
            }
        }

        // Phase 2.
        let mut cost2 = vec![Q::zero(); total];
        cost2[..nv].clone_from_slice(&objective);
        Self::run(&mut t, &mut basis, &cost2, nv);

        let mut solution = vec![Q::zero(); nv];
        for (r, &b) in basis.iter().enumerate() {
            if b < nv {
                solution[b] = t[r][total].clone();
            }
        }
        let objective_value = objective.iter().zip(&solution).map(|(c, x)| c * x).sum();
        // Duals from reduced costs over the artificial columns: c_B B^{-1},
        // flipping sign where the row was negated to make rhs nonnegative.
        let mut duals = Vec::with_capacity(m);
        for i in 0..m {
            let y: Q = basis
                .iter()
                .enumerate()
                .map(|(r, &b)| {
                    if b < nv {
                        &cost2[b] * &t[r][nv + i]
                    } else {
                        Q::zero()
                    }
                })
                .sum();
            duals.push(y);
        }
        SimplexResult {
            objective_value,
            solution,
            duals,
        }
    }

    /// Bland-rule simplex iterations for max cᵗz on the current tableau.
    /// Columns ≥ `nv` (artificials) may enter only during phase 1, which is
    /// arranged by the cost vector given to us.
    fn run(t: &mut [Vec<Q>], basis: &mut [usize], cost: &[Q], nv: usize) {
        let m = t.len();
        let total = cost.len();
        loop {
            // Reduced costs: c_j − c_B B^{-1} A_j.
            let mut entering = None;
            for j in 0..total {
                if basis.contains(&j) {
                    continue;
                }
                if j >= nv && cost[j].is_zero() {
                    // Artificial column in phase 2: never re-enter.
                    continue;
                }
                let mut red = cost[j].clone();
                for (r, &b) in basis.iter().enumerate() {
                    if !cost[b].is_zero() && !t[r][j].is_zero() {
                        red -= &cost[b] * &t[r][j];
                    }
                }
                if red.is_positive() {
                    entering = Some(j);
                    break; // Bland: smallest improving index
                }
            }
            let Some(e) = entering else { return };
            // Ratio test with Bland tie-break on the basic variable index.
            let mut leave: Option<(usize, Q)> = None;
            for r in 0..m {
                if t[r][e].is_positive() {
                    let ratio = &t[r][total] / &t[r][e];
                    match &leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < *lratio || (ratio == *lratio && basis[r] < basis[*lr]) {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((lr, _)) = leave else {
                panic!("unbounded LP in a capped program");
            };
            Self::pivot(t, basis, lr, e);
        }
    }

    fn pivot(t: &mut [Vec<Q>], basis: &mut [usize], row: usize, col: usize) {
        let m = t.len();
        let width = t[0].len();
        let inv = t[row][col].recip();
        for c in 0..width {
            let v = &t[row][c] * &inv;
            t[row][c] = v;
        }
        for r in 0..m {
            if r != row && !t[r][col].is_zero() {
                let factor = t[r][col].clone();
                for c in 0..width {
                    let v = &t[r][c] - &(&factor * &t[row][c]);
                    t[r][c] = v;
                }
            }
        }
        basis[row] = col;
    }
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn small_rational() -> impl Strategy<Value = Q> {
        (-6i64..7, 1i64..4).prop_map(|(n, d)| qr(n, d))
    }

    fn matrix_and_point() -> impl Strategy<Value = (RationalMatrix, Vec<Q>)> {
        (1usize..5, 1usize..6).prop_flat_map(|(rows, cols)| {
            (
                proptest::collection::vec(small_rational(), rows * cols),
                proptest::collection::vec(small_rational(), cols),
            )
                .prop_map(move |(entries, x)| {
                    let mut m = RationalMatrix::zeros(rows, cols);
                    for r in 0..rows {
                        for c in 0..cols {
                            m[(r, c)] = entries[r * cols + c].clone();
                        }
                    }
                    (m, x)
                })
        })
    }

    proptest! {
        // Constructed systems are solvable and every reported solution is
        // exact; kernel vectors annihilate A exactly and count the
        // dimension drop.
        #[test]
        fn affine_solutions_are_exact((a, x0) in matrix_and_point()) {
            let b = a.mul_vec(&x0);
            match solve_affine(&a, &b) {
                AffineOutcome::Solvable(s) => {
                    prop_assert_eq!(a.mul_vec(&s.particular), b);
                    for kv in &s.kernel_basis {
                        prop_assert!(a.mul_vec(kv).iter().all(|v| v.is_zero()));
                    }
                    prop_assert_eq!(s.kernel_basis.len(), a.ncols() - a.rank());
                }
                AffineOutcome::Infeasible { .. } => prop_assert!(false, "constructed system"),
            }
        }

        // Whenever the positivity LP answers, the answer is exact and
        // strictly positive.
        #[test]
        fn positive_solutions_are_exact((a, _) in matrix_and_point(), b in proptest::collection::vec(-3i64..4, 1..5)) {
            let rhs: Vec<Q> = b.iter().take(a.nrows()).map(|&v| qi(v)).collect();
            if rhs.len() != a.nrows() {
                return Ok(());
            }
            if let PositiveOutcome::Positive { x, margin } = positive_solution(&a, &rhs) {
                prop_assert!(margin.is_positive());
                prop_assert!(x.iter().all(|v| v.is_positive()));
                prop_assert_eq!(a.mul_vec(&x), rhs);
            }
        }
    }
}
