//! Nilpotent Lie algebras over the exact rationals, presented by sparse
//! structure constants on a fixed basis.
//!
//! A bracket table stores c_ij^k only for i < j; antisymmetry is synthesized
//! on read. Construction validates the Jacobi identity and nilpotency
//! exactly, so every `LieAlgebra` value in circulation is a genuine
//! nilpotent Lie algebra unless it was built with `new_unchecked`.

use crate::linalg::RationalMatrix;
use crate::Q;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("duplicate bracket for ({i}, {j}, {k})")]
    DuplicateBracket { i: usize, j: usize, k: usize },
    #[error("bracket [X{i}, X{i}] must vanish")]
    SelfBracket { i: usize },
    #[error("Jacobi identity fails on the triple ({i}, {j}, {k})")]
    JacobiFailure { i: usize, j: usize, k: usize },
    #[error("the algebra is not nilpotent")]
    NotNilpotent,
    #[error("change of basis matrix is singular")]
    SingularBasisChange,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("json error: {0}")]
    Json(String),
}

/// A subspace of Q^n, spanned by the rows of a reduced echelon basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<Vec<Q>>,
}

impl Subspace {
    /// Canonical subspace spanned by the given vectors (reduced echelon
    /// basis, so equal subspaces compare equal).
    pub fn span(ambient_dim: usize, vectors: &[Vec<Q>]) -> Self {
        if vectors.is_empty() {
            return Subspace {
                ambient_dim,
                basis: Vec::new(),
            };
        }
        let m = RationalMatrix::from_rows(vectors.to_vec());
        let (rref, pivots) = m.rref();
        let basis = (0..pivots.len()).map(|r| rref.row(r).to_vec()).collect();
        Subspace { ambient_dim, basis }
    }

    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            ambient_dim,
            basis: Vec::new(),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        let id = RationalMatrix::identity(ambient_dim);
        Subspace {
            ambient_dim,
            basis: (0..ambient_dim).map(|r| id.row(r).to_vec()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis(&self) -> &[Vec<Q>] {
        &self.basis
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        assert_eq!(v.len(), self.ambient_dim);
        if v.iter().all(|x| x.is_zero()) {
            return true;
        }
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        RationalMatrix::from_rows(rows).rank() == self.dim()
    }
}

/// An n×n rational matrix satisfying the Leibniz rule for a fixed algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    matrix: RationalMatrix,
}

impl Derivation {
    /// Wrap a matrix after checking the Leibniz rule exactly.
    pub fn new(algebra: &LieAlgebra, matrix: RationalMatrix) -> Result<Self, AlgebraError> {
        assert_eq!(matrix.nrows(), algebra.dim());
        assert_eq!(matrix.ncols(), algebra.dim());
        if !algebra.is_derivation(&matrix) {
            return Err(AlgebraError::JacobiFailure { i: 0, j: 0, k: 0 });
        }
        Ok(Derivation { matrix })
    }

    pub fn from_diagonal(algebra: &LieAlgebra, diag: &[Q]) -> Result<Self, AlgebraError> {
        Self::new(algebra, RationalMatrix::diagonal(diag))
    }

    pub fn matrix(&self) -> &RationalMatrix {
        &self.matrix
    }

    pub fn diagonal(&self) -> Option<Vec<Q>> {
        let m = &self.matrix;
        let n = m.nrows();
        for r in 0..n {
            for c in 0..n {
                if r != c && !m[(r, c)].is_zero() {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| m[(i, i)].clone()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiVerdict {
    pub pass: bool,
    /// Worst offending triple (largest residual by sum of |coefficients|).
    pub worst: Option<(usize, usize, usize, Vec<Q>)>,
}

/// Nilpotent Lie algebra with exact sparse structure constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LieAlgebra {
    dim: usize,
    basis_labels: Vec<String>,
    /// (i, j, k) -> c_ij^k for i < j, nonzero entries only.
    structure: BTreeMap<(usize, usize, usize), Q>,
}

impl LieAlgebra {
    /// Build and validate. Brackets may come in any index order; they are
    /// normalized to i < j with the sign flipped as needed.
    pub fn new(
        dim: usize,
        labels: Option<Vec<String>>,
        brackets: impl IntoIterator<Item = ((usize, usize, usize), Q)>,
    ) -> Result<Self, AlgebraError> {
        let alg = Self::assemble(dim, labels, brackets)?;
        let verdict = alg.jacobi_check();
        if !verdict.pass {
            let (i, j, k, _) = verdict.worst.unwrap();
            return Err(AlgebraError::JacobiFailure { i, j, k });
        }
        if !alg.is_nilpotent() {
            return Err(AlgebraError::NotNilpotent);
        }
        Ok(alg)
    }

    /// Assemble without the Jacobi/nilpotency checks. Useful for feeding
    /// corrupted tensors to `jacobi_check`.
    pub fn new_unchecked(
        dim: usize,
        labels: Option<Vec<String>>,
        brackets: impl IntoIterator<Item = ((usize, usize, usize), Q)>,
    ) -> Result<Self, AlgebraError> {
        Self::assemble(dim, labels, brackets)
    }

    fn assemble(
        dim: usize,
        labels: Option<Vec<String>>,
        brackets: impl IntoIterator<Item = ((usize, usize, usize), Q)>,
    ) -> Result<Self, AlgebraError> {
        let basis_labels = labels.unwrap_or_else(|| (1..=dim).map(|i| format!("e{i}")).collect());
        assert_eq!(basis_labels.len(), dim, "label count must match dimension");
        let mut structure = BTreeMap::new();
        for ((i, j, k), c) in brackets {
            for idx in [i, j, k] {
                if idx >= dim {
                    return Err(AlgebraError::IndexOutOfRange { index: idx, dim });
                }
            }
            if i == j {
                if !c.is_zero() {
                    return Err(AlgebraError::SelfBracket { i });
                }
                continue;
            }
            if c.is_zero() {
                continue;
            }
            let (key, value) = if i < j {
                ((i, j, k), c)
            } else {
                ((j, i, k), -c)
            };
            if structure.insert(key, value).is_some() {
                return Err(AlgebraError::DuplicateBracket {
                    i: key.0,
                    j: key.1,
                    k: key.2,
                });
            }
        }
        Ok(LieAlgebra {
            dim,
            basis_labels,
            structure,
        })
    }

    pub fn abelian(dim: usize) -> Self {
        LieAlgebra {
            dim,
            basis_labels: (1..=dim).map(|i| format!("e{i}")).collect(),
            structure: BTreeMap::new(),
        }
    }

    /// The 3-dimensional Heisenberg algebra, [X1, X2] = X3.
    pub fn heisenberg() -> Self {
        Self::new(
            3,
            Some(vec!["X1".into(), "X2".into(), "Z1".into()]),
            [((0, 1, 2), Q::from_integer(1.into()))],
        )
        .expect("h3 is a Lie algebra")
    }

    /// Free two-step nilpotent algebra on q generators:
    /// [X_i, X_j] = Z_(i,j) for all i < j.
    pub fn free_two_step(q: usize) -> Self {
        let p = q * (q - 1) / 2;
        let mut labels: Vec<String> = (1..=q).map(|i| format!("X{i}")).collect();
        labels.extend((1..=p).map(|a| format!("Z{a}")));
        let mut brackets = Vec::new();
        let mut z = q;
        for i in 0..q {
            for j in (i + 1)..q {
                brackets.push(((i, j, z), Q::from_integer(1.into())));
                z += 1;
            }
        }
        Self::new(q + p, Some(labels), brackets).expect("free two-step is a Lie algebra")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    /// Nonzero structure constants, i < j.
    pub fn brackets(&self) -> impl Iterator<Item = (&(usize, usize, usize), &Q)> {
        self.structure.iter()
    }

    pub fn bracket_count(&self) -> usize {
        self.structure.len()
    }

    pub fn is_abelian(&self) -> bool {
        self.structure.is_empty()
    }

    /// c_ij^k with antisymmetry synthesized.
    pub fn c(&self, i: usize, j: usize, k: usize) -> Q {
        if i < j {
            self.structure
                .get(&(i, j, k))
                .cloned()
                .unwrap_or_else(Q::zero)
        } else if i > j {
            self.structure
                .get(&(j, i, k))
                .map(|c| -c.clone())
                .unwrap_or_else(Q::zero)
        } else {
            Q::zero()
        }
    }

    /// [e_i, e_j] as a sparse list of (k, coefficient).
    pub fn bracket_basis(&self, i: usize, j: usize) -> Vec<(usize, Q)> {
        if i == j {
            return Vec::new();
        }
        let (a, b, neg) = if i < j { (i, j, false) } else { (j, i, true) };
        self.structure
            .range((a, b, 0)..(a, b, self.dim))
            .map(|(&(_, _, k), c)| (k, if neg { -c.clone() } else { c.clone() }))
            .collect()
    }

    /// [x, y] for coordinate vectors.
    pub fn bracket(&self, x: &[Q], y: &[Q]) -> Vec<Q> {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let mut out = vec![Q::zero(); self.dim];
        for (&(i, j, k), c) in &self.structure {
            // c_ij^k (x_i y_j - x_j y_i)
            let wedge = &(&x[i] * &y[j]) - &(&x[j] * &y[i]);
            if !wedge.is_zero() {
                out[k] += c * &wedge;
            }
        }
        out
    }

    /// Dense antisymmetric tensor in f64, indexed [i][j][k].
    pub fn to_float_tensor(&self) -> Vec<f64> {
        let n = self.dim;
        let mut t = vec![0.0; n * n * n];
        for (&(i, j, k), c) in &self.structure {
            let v = num_traits::ToPrimitive::to_f64(c).expect("structure constant out of range");
            t[(i * n + j) * n + k] = v;
            t[(j * n + i) * n + k] = -v;
        }
        t
    }

    pub fn jacobi_check(&self) -> JacobiVerdict {
        let mut worst: Option<(usize, usize, usize, Vec<Q>, Q)> = None;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                for k in (j + 1)..self.dim {
                    let mut residual = vec![Q::zero(); self.dim];
                    self.add_double_bracket(&mut residual, i, j, k);
                    self.add_double_bracket(&mut residual, j, k, i);
                    self.add_double_bracket(&mut residual, k, i, j);
                    if residual.iter().any(|x| !x.is_zero()) {
                        let size: Q = residual.iter().map(|x| x.abs()).sum();
                        let replace = match &worst {
                            None => true,
                            Some((.., s)) => size > *s,
                        };
                        if replace {
                            worst = Some((i, j, k, residual, size));
                        }
                    }
                }
            }
        }
        match worst {
            None => JacobiVerdict {
                pass: true,
                worst: None,
            },
            Some((i, j, k, residual, _)) => JacobiVerdict {
                pass: false,
                worst: Some((i, j, k, residual)),
            },
        }
    }

    /// residual += [e_a, [e_b, e_c]]
    fn add_double_bracket(&self, residual: &mut [Q], a: usize, b: usize, c: usize) {
        for (l, inner) in self.bracket_basis(b, c) {
            for (k, outer) in self.bracket_basis(a, l) {
                residual[k] += &inner * &outer;
            }
        }
    }

    /// [n, W] for a subspace W.
    fn bracket_with(&self, w: &Subspace) -> Subspace {
        let mut generators = Vec::new();
        for i in 0..self.dim {
            let mut ei = vec![Q::zero(); self.dim];
            ei[i] = Q::from_integer(1.into());
            for wv in w.basis() {
                let b = self.bracket(&ei, wv);
                if b.iter().any(|x| !x.is_zero()) {
                    generators.push(b);
                }
            }
        }
        Subspace::span(self.dim, &generators)
    }

    /// Lower central series n ⊃ [n,n] ⊃ [n,[n,n]] ⊃ … down to zero.
    /// Returns the full chain including the ambient space and the final zero
    /// term, so the nilpotency class is the length minus one.
    pub fn lower_central_series(&self) -> Result<Vec<Subspace>, AlgebraError> {
        let mut series = vec![Subspace::full(self.dim)];
        loop {
            let next = self.bracket_with(series.last().unwrap());
            let stalled = next.dim() == series.last().unwrap().dim();
            let done = next.dim() == 0;
            series.push(next);
            if done {
                return Ok(series);
            }
            if stalled || series.len() > self.dim + 1 {
                return Err(AlgebraError::NotNilpotent);
            }
        }
    }

    pub fn is_nilpotent(&self) -> bool {
        self.lower_central_series().is_ok()
    }

    pub fn nilpotency_class(&self) -> Result<usize, AlgebraError> {
        Ok(self.lower_central_series()?.len() - 1)
    }

    pub fn derived_subalgebra(&self) -> Subspace {
        self.bracket_with(&Subspace::full(self.dim))
    }

    /// The center z(n) = {x : [x, n] = 0}, as the kernel of the stacked
    /// adjoint maps.
    pub fn center(&self) -> Subspace {
        let n = self.dim;
        // Rows indexed by (j, k): sum_i x_i c_ij^k = 0.
        let mut rows = Vec::new();
        for j in 0..n {
            for k in 0..n {
                let row: Vec<Q> = (0..n).map(|i| self.c(i, j, k)).collect();
                if row.iter().any(|x| !x.is_zero()) {
                    rows.push(row);
                }
            }
        }
        if rows.is_empty() {
            return Subspace::full(n);
        }
        let kernel = RationalMatrix::from_rows(rows).kernel();
        Subspace::span(n, &kernel)
    }

    pub fn direct_sum(&self, other: &LieAlgebra) -> LieAlgebra {
        let n1 = self.dim;
        let dim = n1 + other.dim;
        let mut labels = self.basis_labels.clone();
        labels.extend(other.basis_labels.iter().cloned());
        let mut structure = self.structure.clone();
        for (&(i, j, k), c) in &other.structure {
            structure.insert((i + n1, j + n1, k + n1), c.clone());
        }
        LieAlgebra {
            dim,
            basis_labels: labels,
            structure,
        }
    }

    /// The algebra with bracket g.μ(x, y) = g μ(g⁻¹x, g⁻¹y).
    pub fn change_basis(&self, g: &RationalMatrix) -> Result<LieAlgebra, AlgebraError> {
        assert_eq!(g.nrows(), self.dim);
        assert_eq!(g.ncols(), self.dim);
        let ginv = g.inverse().map_err(|_| AlgebraError::SingularBasisChange)?;
        let mut structure = BTreeMap::new();
        for i in 0..self.dim {
            let u = ginv.column(i);
            for j in (i + 1)..self.dim {
                let v = ginv.column(j);
                let w = self.bracket(&u, &v);
                let out = g.mul_vec(&w);
                for (k, c) in out.into_iter().enumerate() {
                    if !c.is_zero() {
                        structure.insert((i, j, k), c);
                    }
                }
            }
        }
        Ok(LieAlgebra {
            dim: self.dim,
            basis_labels: self.basis_labels.clone(),
            structure,
        })
    }

    /// Exact check of the Leibniz rule for a candidate matrix.
    pub fn is_derivation(&self, m: &RationalMatrix) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                // ψ[e_i, e_j] - [ψe_i, e_j] - [e_i, ψe_j] = 0
                let mut lhs = vec![Q::zero(); n];
                for (l, c) in self.bracket_basis(i, j) {
                    for k in 0..n {
                        lhs[k] += &m[(k, l)] * &c;
                    }
                }
                for r in 0..n {
                    if !m[(r, i)].is_zero() {
                        for (k, c) in self.bracket_basis(r, j) {
                            lhs[k] -= &m[(r, i)] * &c;
                        }
                    }
                    if !m[(r, j)].is_zero() {
                        for (k, c) in self.bracket_basis(i, r) {
                            lhs[k] -= &m[(r, j)] * &c;
                        }
                    }
                }
                if lhs.iter().any(|x| !x.is_zero()) {
                    return false;
                }
            }
        }
        true
    }

    /// The matrix of the Leibniz system whose kernel is Der(n), with the
    /// unknown ψ flattened as ψ_{rs} ↦ index r·n + s.
    pub fn leibniz_system(&self) -> RationalMatrix {
        let n = self.dim;
        let mut rows = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    let mut row = vec![Q::zero(); n * n];
                    // ψ([e_i,e_j])_k = Σ_l c_ij^l ψ_{kl}
                    for (l, c) in self.bracket_basis(i, j) {
                        row[k * n + l] += c;
                    }
                    // -[ψe_i, e_j]_k = -Σ_r ψ_{ri} c_rj^k
                    for r in 0..n {
                        let crjk = self.c(r, j, k);
                        if !crjk.is_zero() {
                            row[r * n + i] -= crjk;
                        }
                        let cirk = self.c(i, r, k);
                        if !cirk.is_zero() {
                            row[r * n + j] -= cirk;
                        }
                    }
                    if row.iter().any(|x| !x.is_zero()) {
                        rows.push(row);
                    }
                }
            }
        }
        if rows.is_empty() {
            RationalMatrix::zeros(0, n * n)
        } else {
            RationalMatrix::from_rows(rows)
        }
    }

    /// Exact basis of Der(n), as the kernel of the Leibniz system.
    pub fn derivation_algebra(&self) -> Vec<Derivation> {
        let n = self.dim;
        self.leibniz_system()
            .kernel()
            .into_iter()
            .map(|flat| {
                let m = RationalMatrix::from_fn(n, n, |r, c| flat[r * n + c].clone());
                debug_assert!(self.is_derivation(&m));
                Derivation { matrix: m }
            })
            .collect()
    }

    /// ‖μ‖² in the standard inner product of the working basis:
    /// Σ_{i,j} ‖[e_i, e_j]‖² over ordered pairs.
    pub fn bracket_norm_squared(&self) -> Q {
        let two = Q::from_integer(2.into());
        self.structure.values().map(|c| c * c).sum::<Q>() * two
    }

    // ---------------------------------------------------------------------
    // Text format: "q=5 p=3; 131,153,231,242" with optional sign prefixes.
    // ---------------------------------------------------------------------

    /// Parse the relation-code format: a header `q=<generators> p=<targets>`
    /// followed by `;` and a comma-separated list of signed digit codes
    /// `ijα`, each meaning [X_i, X_j] = ±Z_α. Multiple codes may be glued
    /// inside one item ("-153-154" adds two relations for the same pair).
    pub fn parse_text(input: &str) -> Result<LieAlgebra, AlgebraError> {
        let (header, body) = input
            .split_once(';')
            .ok_or_else(|| AlgebraError::Parse("missing ';' after header".into()))?;
        let mut q = None;
        let mut p = None;
        for token in header.split_whitespace() {
            if let Some((key, value)) = token.split_once('=') {
                let parse = |v: &str| {
                    v.parse::<usize>()
                        .map_err(|_| AlgebraError::Parse(format!("bad integer '{v}'")))
                };
                match key.trim() {
                    "q" => q = Some(parse(value)?),
                    "p" => p = Some(parse(value)?),
                    _ => {} // tolerated extras (labels etc.)
                }
            }
        }
        let q = q.ok_or_else(|| AlgebraError::Parse("header must set q".into()))?;
        let p = p.ok_or_else(|| AlgebraError::Parse("header must set p".into()))?;
        let dim = q + p;
        let mut labels: Vec<String> = (1..=q).map(|i| format!("X{i}")).collect();
        labels.extend((1..=p).map(|a| format!("Z{a}")));

        let mut brackets: Vec<((usize, usize, usize), Q)> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for item in body.split(',') {
            let item = item.trim();
            if item.is_empty() || item == "(empty)" {
                continue;
            }
            for (i, j, alpha, sign) in parse_signed_codes(item)? {
                if i == j {
                    return Err(AlgebraError::Parse(format!("code with i = j in '{item}'")));
                }
                if i == 0 || j == 0 || alpha == 0 || i > q || j > q || alpha > p {
                    return Err(AlgebraError::IndexOutOfRange {
                        index: i.max(j).max(alpha),
                        dim,
                    });
                }
                let (a, b, s) = if i < j { (i, j, sign) } else { (j, i, -sign) };
                if !seen.insert((a, b, alpha)) {
                    return Err(AlgebraError::DuplicateBracket {
                        i: a - 1,
                        j: b - 1,
                        k: q + alpha - 1,
                    });
                }
                brackets.push(((a - 1, b - 1, q + alpha - 1), Q::from_integer(s.into())));
            }
        }
        LieAlgebra::new(dim, Some(labels), brackets)
    }

    // ---------------------------------------------------------------------
    // JSON format: {"dim": n, "brackets": [{"i":1,"j":2,"k":3,"c":"1"}]}
    // with 1-based indices and rationals as strings.
    // ---------------------------------------------------------------------

    pub fn from_json(text: &str) -> Result<LieAlgebra, AlgebraError> {
        let parsed: AlgebraJson =
            serde_json::from_str(text).map_err(|e| AlgebraError::Json(e.to_string()))?;
        let mut brackets = Vec::new();
        for b in &parsed.brackets {
            if b.i == 0 || b.j == 0 || b.k == 0 {
                return Err(AlgebraError::Json("indices are 1-based".into()));
            }
            let c: Q =
                b.c.parse()
                    .map_err(|_| AlgebraError::Json(format!("bad rational '{}'", b.c)))?;
            brackets.push(((b.i - 1, b.j - 1, b.k - 1), c));
        }
        LieAlgebra::new(parsed.dim, None, brackets)
    }

    /// Canonical JSON: brackets sorted by (i, j, k), reduced rationals.
    pub fn to_json(&self) -> String {
        let brackets = self
            .structure
            .iter()
            .map(|(&(i, j, k), c)| BracketJson {
                i: i + 1,
                j: j + 1,
                k: k + 1,
                c: c.to_string(),
            })
            .collect();
        serde_json::to_string(&AlgebraJson {
            dim: self.dim,
            brackets,
        })
        .expect("serialization cannot fail")
    }

    /// Accepts either the relation-code format or the JSON schema.
    pub fn parse(input: &str) -> Result<LieAlgebra, AlgebraError> {
        let trimmed = input.trim_start();
        if trimmed.starts_with('{') {
            Self::from_json(input)
        } else {
            Self::parse_text(input)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    dim: usize,
    brackets: Vec<BracketJson>,
}

#[derive(Serialize, Deserialize)]
struct BracketJson {
    i: usize,
    j: usize,
    k: usize,
    c: String,
}

/// Split an item like "-153-154" or "131" into signed (i, j, α) codes.
fn parse_signed_codes(item: &str) -> Result<Vec<(usize, usize, usize, i64)>, AlgebraError> {
    let mut out = Vec::new();
    let mut digits = Vec::with_capacity(3);
    let mut sign = 1i64;
    let mut pending_sign = 1i64;
    for ch in item.chars() {
        match ch {
            '-' | '\u{2212}' => {
                if !digits.is_empty() {
                    return Err(AlgebraError::Parse(format!("misplaced sign in '{item}'")));
                }
                pending_sign = -pending_sign;
            }
            '+' => {}
            c if c.is_ascii_digit() => {
                if digits.is_empty() {
                    sign = pending_sign;
                    pending_sign = 1;
                }
                digits.push(c.to_digit(10).unwrap() as usize);
                if digits.len() == 3 {
                    out.push((digits[0], digits[1], digits[2], sign));
                    digits.clear();
                }
            }
            c if c.is_whitespace() => {}
            c => {
                return Err(AlgebraError::Parse(format!(
                    "unexpected character '{c}' in '{item}'"
                )))
            }
        }
    }
    if !digits.is_empty() {
        return Err(AlgebraError::Parse(format!(
            "dangling digits in '{item}' (codes are 3 digits)"
        )));
    }
    Ok(out)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use crate::linalg::qr;
    use proptest::prelude::*;

    /// Arbitrary two-step algebras: brackets of generators landing in the
    /// trailing coordinates always satisfy Jacobi and nilpotency.
    fn two_step_algebra() -> impl Strategy<Value = LieAlgebra> {
        (2usize..5, 1usize..4).prop_flat_map(|(q, p)| {
            let pairs: Vec<(usize, usize)> = (0..q)
                .flat_map(|i| ((i + 1)..q).map(move |j| (i, j)))
                .collect();
            let npairs = pairs.len();
            proptest::collection::btree_map((0..npairs, 0..p), (-4i64..5, 1i64..3), 1..7).prop_map(
                move |entries| {
                    let brackets: Vec<((usize, usize, usize), Q)> = entries
                        .into_iter()
                        .filter(|(_, (num, _))| *num != 0)
                        .map(|((pi, alpha), (num, den))| {
                            let (i, j) = pairs[pi];
                            ((i, j, q + alpha), qr(num, den))
                        })
                        .collect();
                    LieAlgebra::new(q + p, None, brackets).expect("two-step is always Lie")
                },
            )
        })
    }

    proptest! {
        #[test]
        fn json_round_trip_is_canonical(l in two_step_algebra()) {
            let json = l.to_json();
            let back = LieAlgebra::from_json(&json).unwrap();
            prop_assert_eq!(back.to_json(), json);
        }

        // change_basis by an invertible diagonal matrix round-trips exactly.
        #[test]
        fn change_basis_round_trip(l in two_step_algebra(), seedvals in proptest::collection::vec((1i64..5, 1i64..4), 12)) {
            let n = l.dim();
            let diag: Vec<Q> = (0..n).map(|i| {
                let (num, den) = seedvals[i % seedvals.len()];
                qr(num, den)
            }).collect();
            let g = RationalMatrix::diagonal(&diag);
            let there = l.change_basis(&g).unwrap();
            let back = there.change_basis(&g.inverse().unwrap()).unwrap();
            prop_assert_eq!(back, l);
        }
    }
}
