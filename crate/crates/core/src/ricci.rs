//! Ricci operator of a metric nilpotent Lie algebra and nilsoliton
//! verification.
//!
//! The Ricci form of (n, ⟨·,·⟩) is
//!
//!   ⟨ric X, Y⟩ = ¼ Σ ⟨X,[E_i,E_j]⟩⟨Y,[E_i,E_j]⟩ − ½ Σ ⟨[X,E_i],E_j⟩⟨[Y,E_i],E_j⟩
//!
//! over an orthonormal frame {E_i}. Summing over the frame is
//! frame-independent, so the form is evaluated directly from the Gram matrix
//! G and its inverse with no square roots; exact rational metrics therefore
//! produce exact Ricci data. The orthonormal frame itself (Gram–Schmidt in
//! basis order) only appears in the floating-point representation used for
//! the nilsoliton fit.

use crate::algebra::LieAlgebra;
use crate::linalg::RationalMatrix;
use crate::mat::Mat;
use crate::Q;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RicciError {
    #[error("inner product is not positive definite")]
    NotPositiveDefinite,
    #[error("eigenspaces of the derivation are not orthogonal under the metric")]
    EigenspacesNotOrthogonal,
    #[error("dimension mismatch")]
    DimensionMismatch,
}

/// Inner product on the working basis, exact or floating.
#[derive(Debug, Clone)]
pub enum InnerProduct {
    Rational(RationalMatrix),
    Float(Mat),
}

impl InnerProduct {
    pub fn standard(n: usize) -> Self {
        InnerProduct::Rational(RationalMatrix::identity(n))
    }

    pub fn from_gram_rational(gram: RationalMatrix) -> Self {
        assert!(gram.is_symmetric());
        InnerProduct::Rational(gram)
    }

    pub fn from_gram_f64(gram: Mat) -> Self {
        InnerProduct::Float(gram.symmetrize())
    }

    pub fn diagonal_rational(diag: &[Q]) -> Self {
        InnerProduct::Rational(RationalMatrix::diagonal(diag))
    }

    /// The metric for which the columns of `frame` form an orthonormal
    /// basis: G = (B Bᵗ)⁻¹.
    pub fn from_orthonormal_frame(frame: &Mat) -> Option<Self> {
        let bbt = frame.matmul(&frame.transpose());
        bbt.inverse().map(|g| InnerProduct::Float(g.symmetrize()))
    }

    pub fn dim(&self) -> usize {
        match self {
            InnerProduct::Rational(g) => g.nrows(),
            InnerProduct::Float(g) => g.nrows(),
        }
    }

    pub fn gram_f64(&self) -> Mat {
        match self {
            InnerProduct::Rational(g) => g.to_f64(),
            InnerProduct::Float(g) => g.clone(),
        }
    }

    pub fn gram_rational(&self) -> Option<&RationalMatrix> {
        match self {
            InnerProduct::Rational(g) => Some(g),
            InnerProduct::Float(_) => None,
        }
    }

    /// Positive definiteness: exact leading principal minors in rational
    /// mode, Cholesky in floating mode.
    pub fn is_positive_definite(&self) -> bool {
        match self {
            InnerProduct::Rational(g) => {
                let n = g.nrows();
                (1..=n).all(|k| {
                    let minor = RationalMatrix::from_fn(k, k, |r, c| g[(r, c)].clone());
                    minor.det().is_positive()
                })
            }
            InnerProduct::Float(g) => g.cholesky().is_some(),
        }
    }
}

/// Ricci data of (L, ip): the operator in the working basis (exact when the
/// metric is rational) and the symmetric matrix in the Gram–Schmidt
/// orthonormal frame.
#[derive(Debug, Clone)]
pub struct RicciData {
    /// Operator in the working basis (not symmetric as a matrix, but
    /// self-adjoint for the metric).
    pub basis_operator: Mat,
    /// Exact operator, present in rational mode.
    pub basis_operator_rational: Option<RationalMatrix>,
    /// Symmetric matrix of ric in the orthonormal frame.
    pub frame_symmetric: Mat,
    /// Basis-change S: columns are the orthonormal frame vectors in basis
    /// coordinates (SᵗGS = I).
    pub frame: Mat,
}

/// Exact Ricci bilinear form Ric(e_x, e_y) for a rational Gram matrix.
pub fn ricci_form_rational(
    l: &LieAlgebra,
    gram: &RationalMatrix,
) -> Result<RationalMatrix, RicciError> {
    let n = l.dim();
    if gram.nrows() != n {
        return Err(RicciError::DimensionMismatch);
    }
    let ginv = gram
        .inverse()
        .map_err(|_| RicciError::NotPositiveDefinite)?;
    // T[a][b][x] = ⟨e_x, [e_a, e_b]⟩ = Σ_l c_ab^l G_xl
    let mut t = vec![Q::zero(); n * n * n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for (lidx, c) in l.bracket_basis(a, b) {
                for x in 0..n {
                    let idx = (a * n + b) * n + x;
                    t[idx] += &c * &gram[(x, lidx)];
                }
            }
        }
    }
    let tat = |a: usize, b: usize, x: usize| &t[(a * n + b) * n + x];
    // Term 1: ¼ Σ_{abcd} Ginv_ac Ginv_bd T_ab,x T_cd,y.
    // W[c][d][x] = Σ_{ab} Ginv_ac Ginv_bd T_ab,x, computed as two
    // matrix-like contractions per x.
    let mut w = vec![Q::zero(); n * n * n];
    for x in 0..n {
        // U[a][d] = Σ_b T_ab,x Ginv_bd
        let mut u = vec![Q::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                let tv = tat(a, b, x);
                if tv.is_zero() {
                    continue;
                }
                for d in 0..n {
                    if !ginv[(b, d)].is_zero() {
                        u[a * n + d] += tv * &ginv[(b, d)];
                    }
                }
            }
        }
        for c in 0..n {
            for a in 0..n {
                if ginv[(a, c)].is_zero() {
                    continue;
                }
                for d in 0..n {
                    if !u[a * n + d].is_zero() {
                        w[(c * n + d) * n + x] += &ginv[(a, c)] * &u[a * n + d];
                    }
                }
            }
        }
    }
    let quarter = Q::new(1.into(), 4.into());
    let half = Q::new(1.into(), 2.into());
    let mut ric = RationalMatrix::zeros(n, n);
    for x in 0..n {
        for y in x..n {
            let mut term1 = Q::zero();
            for c in 0..n {
                for d in 0..n {
                    let wv = &w[(c * n + d) * n + x];
                    if !wv.is_zero() {
                        let tv = tat(c, d, y);
                        if !tv.is_zero() {
                            term1 += wv * tv;
                        }
                    }
                }
            }
            // Term 2: ½ Σ_{ab} Ginv_ab ⟨[e_x, e_a], [e_y, e_b]⟩.
            let mut term2 = Q::zero();
            for a in 0..n {
                for b in 0..n {
                    if ginv[(a, b)].is_zero() {
                        continue;
                    }
                    let mut inner = Q::zero();
                    for (li, ci) in l.bracket_basis(x, a) {
                        for (mj, cj) in l.bracket_basis(y, b) {
                            if !gram[(li, mj)].is_zero() {
                                inner += &(&ci * &cj) * &gram[(li, mj)];
                            }
                        }
                    }
                    if !inner.is_zero() {
                        term2 += &ginv[(a, b)] * &inner;
                    }
                }
            }
            let v = &(&quarter * &term1) - &(&half * &term2);
            ric[(x, y)] = v.clone();
            ric[(y, x)] = v;
        }
    }
    Ok(ric)
}

/// Floating-point Ricci bilinear form for an arbitrary Gram matrix.
pub fn ricci_form_f64(l: &LieAlgebra, gram: &Mat) -> Result<Mat, RicciError> {
    let n = l.dim();
    if gram.nrows() != n {
        return Err(RicciError::DimensionMismatch);
    }
    let ginv = gram.inverse().ok_or(RicciError::NotPositiveDefinite)?;
    let mu = l.to_float_tensor();
    ricci_form_from_tensor(&mu, n, gram, &ginv)
}

/// Same computation, driven by a dense antisymmetric tensor (used by the
/// flow, whose brackets are floating).
pub fn ricci_form_from_tensor(
    mu: &[f64],
    n: usize,
    gram: &Mat,
    ginv: &Mat,
) -> Result<Mat, RicciError> {
    let at = |a: usize, b: usize, k: usize| mu[(a * n + b) * n + k];
    // T[a][b][x] = Σ_l c_ab^l G_xl
    let mut t = vec![0.0; n * n * n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for lidx in 0..n {
                let c = at(a, b, lidx);
                if c == 0.0 {
                    continue;
                }
                for x in 0..n {
                    t[(a * n + b) * n + x] += c * gram[(x, lidx)];
                }
            }
        }
    }
    let mut w = vec![0.0; n * n * n];
    for x in 0..n {
        let mut u = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let tv = t[(a * n + b) * n + x];
                if tv == 0.0 {
                    continue;
                }
                for d in 0..n {
                    u[a * n + d] += tv * ginv[(b, d)];
                }
            }
        }
        for c in 0..n {
            for a in 0..n {
                let g = ginv[(a, c)];
                if g == 0.0 {
                    continue;
                }
                for d in 0..n {
                    w[(c * n + d) * n + x] += g * u[a * n + d];
                }
            }
        }
    }
    let mut ric = Mat::zeros(n, n);
    for x in 0..n {
        for y in x..n {
            let mut term1 = 0.0;
            for c in 0..n {
                for d in 0..n {
                    term1 += w[(c * n + d) * n + x] * t[(c * n + d) * n + y];
                }
            }
            let mut term2 = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let g = ginv[(a, b)];
                    if g == 0.0 {
                        continue;
                    }
                    let mut inner = 0.0;
                    for li in 0..n {
                        let ci = at(x, a, li);
                        if ci == 0.0 {
                            continue;
                        }
                        for mj in 0..n {
                            let cj = at(y, b, mj);
                            if cj != 0.0 {
                                inner += ci * cj * gram[(li, mj)];
                            }
                        }
                    }
                    term2 += g * inner;
                }
            }
            let v = 0.25 * term1 - 0.5 * term2;
            ric[(x, y)] = v;
            ric[(y, x)] = v;
        }
    }
    Ok(ric)
}

/// Gram–Schmidt orthonormal frame against the metric, in basis order.
/// Returns S with columns the frame vectors: SᵗGS = I.
pub fn orthonormal_frame(gram: &Mat) -> Option<Mat> {
    let n = gram.nrows();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for u in &cols {
            // ⟨v, u⟩_G
            let inner: f64 = (0..n)
                .map(|r| (0..n).map(|c| v[r] * gram[(r, c)] * u[c]).sum::<f64>())
                .sum();
            for (vr, ur) in v.iter_mut().zip(u) {
                *vr -= inner * ur;
            }
        }
        let norm2: f64 = (0..n)
            .map(|r| (0..n).map(|c| v[r] * gram[(r, c)] * v[c]).sum::<f64>())
            .sum();
        if norm2 <= 0.0 {
            return None;
        }
        let norm = norm2.sqrt();
        for vr in v.iter_mut() {
            *vr /= norm;
        }
        cols.push(v);
    }
    Some(Mat::from_fn(n, n, |r, c| cols[c][r]))
}

/// Full Ricci computation.
pub fn ricci_operator(l: &LieAlgebra, ip: &InnerProduct) -> Result<RicciData, RicciError> {
    if !ip.is_positive_definite() {
        return Err(RicciError::NotPositiveDefinite);
    }
    let gram_f = ip.gram_f64();
    let ginv_f = gram_f.inverse().ok_or(RicciError::NotPositiveDefinite)?;
    let (form_f, basis_operator_rational) = match ip {
        InnerProduct::Rational(g) => {
            let form = ricci_form_rational(l, g)?;
            let ginv = g.inverse().map_err(|_| RicciError::NotPositiveDefinite)?;
            let op = ginv.matmul(&form);
            (form.to_f64(), Some(op))
        }
        InnerProduct::Float(g) => (ricci_form_f64(l, g)?, None),
    };
    let basis_operator = ginv_f.matmul(&form_f);
    let frame = orthonormal_frame(&gram_f).ok_or(RicciError::NotPositiveDefinite)?;
    // In the orthonormal frame the operator matrix is Sᵗ · Form · S.
    let frame_symmetric = frame
        .transpose()
        .matmul(&form_f)
        .matmul(&frame)
        .symmetrize();
    Ok(RicciData {
        basis_operator,
        basis_operator_rational,
        frame_symmetric,
        frame,
    })
}

/// Tr ric —— equals −¼‖μ‖² in any orthonormal frame.
pub fn scalar_curvature(l: &LieAlgebra, ip: &InnerProduct) -> Result<f64, RicciError> {
    Ok(ricci_operator(l, ip)?.frame_symmetric.trace())
}

/// Exact scalar curvature for rational metrics.
pub fn scalar_curvature_rational(l: &LieAlgebra, gram: &RationalMatrix) -> Result<Q, RicciError> {
    let form = ricci_form_rational(l, gram)?;
    let ginv = gram
        .inverse()
        .map_err(|_| RicciError::NotPositiveDefinite)?;
    Ok(ginv.matmul(&form).trace())
}

/// ‖μ‖² = Σ_{ij} ‖[E_i, E_j]‖² over an orthonormal frame, exactly.
pub fn bracket_norm_squared_rational(
    l: &LieAlgebra,
    gram: &RationalMatrix,
) -> Result<Q, RicciError> {
    let n = l.dim();
    let ginv = gram
        .inverse()
        .map_err(|_| RicciError::NotPositiveDefinite)?;
    // Σ_{a,b,c,d} Ginv_ac Ginv_bd ⟨[e_a,e_b],[e_c,e_d]⟩
    let mut total = Q::zero();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if ginv[(a, c)].is_zero() {
                    continue;
                }
                for d in 0..n {
                    if ginv[(b, d)].is_zero() {
                        continue;
                    }
                    let mut inner = Q::zero();
                    for (li, ci) in l.bracket_basis(a, b) {
                        for (mj, cj) in l.bracket_basis(c, d) {
                            if !gram[(li, mj)].is_zero() {
                                inner += &(&ci * &cj) * &gram[(li, mj)];
                            }
                        }
                    }
                    if !inner.is_zero() {
                        total += &(&ginv[(a, c)] * &ginv[(b, d)]) * &inner;
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Tr(ric · A) for an arbitrary endomorphism, exact.
pub fn derivation_trace_pairing_rational(
    l: &LieAlgebra,
    gram: &RationalMatrix,
    a: &RationalMatrix,
) -> Result<Q, RicciError> {
    let form = ricci_form_rational(l, gram)?;
    let ginv = gram
        .inverse()
        .map_err(|_| RicciError::NotPositiveDefinite)?;
    Ok(ginv.matmul(&form).matmul(a).trace())
}

/// Tr(ric · A), floating.
pub fn derivation_trace_pairing(
    l: &LieAlgebra,
    ip: &InnerProduct,
    a: &Mat,
) -> Result<f64, RicciError> {
    let ric = ricci_operator(l, ip)?;
    Ok(ric.basis_operator.matmul(a).trace())
}

#[derive(Debug, Clone)]
pub struct NilsolitonReport {
    /// Fitted constant in ric = c (id − φ).
    pub c: f64,
    /// ‖ric − c(id − φ)‖ / ‖ric‖ in the orthonormal frame.
    pub residual_rel: f64,
    pub tolerance: f64,
    pub phi_diag: Vec<Q>,
    pub pass: bool,
}

/// Verify that a metric is nilsoliton for a given diagonal pre-Einstein
/// derivation: fit c in ric = c(id − φ) and check the relative residual and
/// the sign of c. The eigenspaces of φ must be orthogonal under the metric.
pub fn nilsoliton_verify(
    l: &LieAlgebra,
    ip: &InnerProduct,
    phi_diag: &[Q],
    tolerance: f64,
) -> Result<NilsolitonReport, RicciError> {
    let n = l.dim();
    assert_eq!(phi_diag.len(), n);
    if !ip.is_positive_definite() {
        return Err(RicciError::NotPositiveDefinite);
    }
    // φ-eigenspaces are coordinate spans; orthogonality is G_rs = 0
    // whenever φ_r ≠ φ_s.
    let gram = ip.gram_f64();
    let scale = gram.max_abs();
    for r in 0..n {
        for s in 0..n {
            if phi_diag[r] != phi_diag[s] && gram[(r, s)].abs() > 1e-10 * scale {
                return Err(RicciError::EigenspacesNotOrthogonal);
            }
        }
    }
    let data = ricci_operator(l, ip)?;
    let phi_f: Vec<f64> = phi_diag
        .iter()
        .map(|x| x.to_f64().expect("phi in f64 range"))
        .collect();
    // In the orthonormal frame φ is S⁻¹ φ^D S = Sᵗ G φ^D S.
    let phi_basis = Mat::diagonal(&phi_f);
    let sinv = data.frame.transpose().matmul(&gram);
    let phi_frame = sinv.matmul(&phi_basis).matmul(&data.frame).symmetrize();
    let w = Mat::identity(n).sub(&phi_frame);
    let ric = &data.frame_symmetric;
    let denom = w.inner(&w);
    let c = if denom == 0.0 {
        0.0
    } else {
        ric.inner(&w) / denom
    };
    let residual = ric.sub(&w.scale(c));
    let ric_norm = ric.frobenius_norm();
    let residual_rel = if ric_norm == 0.0 {
        residual.frobenius_norm()
    } else {
        residual.frobenius_norm() / ric_norm
    };
    let pass = residual_rel <= tolerance && c < 0.0;
    Ok(NilsolitonReport {
        c,
        residual_rel,
        tolerance,
        phi_diag: phi_diag.to_vec(),
        pass,
    })
}
