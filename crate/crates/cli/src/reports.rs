//! JSON and text report shapes. Rationals serialize as "p/q" strings;
//! floating values live under a top-level `"float_precision": "f64"` marker.

use anyhow::{anyhow, Context, Result};
use nilsol_core::classify::{
    ClassificationReport, MetricRoute, NegativeCertificate, UndecidedReason, Verdict,
};
use nilsol_core::corpus::CorpusEntry;
use nilsol_core::flow::FlowOutcome;
use nilsol_core::mat::Mat;
use nilsol_core::nice::{self, NiceOutcome};
use nilsol_core::pre_einstein::{AdPhiSpectrum, PreEinsteinResult};
use nilsol_core::ricci::{InnerProduct, NilsolitonReport};
use nilsol_core::two_step::{JTuple, SurveyStats};
use nilsol_core::{LieAlgebra, RationalMatrix, Q};
use serde::Deserialize;
use serde_json::{json, Value};

fn rat(v: &Q) -> Value {
    Value::String(v.to_string())
}

fn rats(vs: &[Q]) -> Value {
    Value::Array(vs.iter().map(rat).collect())
}

fn mat_f64(m: &Mat) -> Value {
    json!(m.rows_vec())
}

fn rational_matrix(m: &RationalMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array(m.row(r).iter().map(rat).collect()))
            .collect(),
    )
}

fn eigenvalue_type_json(r: &PreEinsteinResult) -> Value {
    json!({
        "eigenvalues": rats(&r.eigenvalue_type.eigenvalues),
        "multiplicities": r.eigenvalue_type.multiplicities,
        "integer_form": r.eigenvalue_type.integer_form.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
    })
}

fn eq2_json(spectrum: &AdPhiSpectrum) -> Value {
    json!({
        "phi_positive": spectrum.phi_positive,
        "ad_phi_nonneg": spectrum.ad_phi_nonneg,
        "witness": spectrum.negative_witness.as_ref().map(|(eig, m)| json!({
            "eigenvalue": rat(eig),
            "derivation": rational_matrix(m),
        })),
    })
}

pub fn pre_einstein_json(r: &PreEinsteinResult, spectrum: &AdPhiSpectrum) -> String {
    json!({
        "phi_diagonal": rats(&r.diag),
        "eigenvalue_type": eigenvalue_type_json(r),
        "eq2": eq2_json(spectrum),
        "verified": r.verified,
    })
    .to_string()
}

pub fn nice_check_json(l: &LieAlgebra) -> Result<String> {
    let verdict = nice::is_nice(l);
    if !verdict.is_nice() {
        return Ok(json!({
            "nice": false,
            "m": Value::Null,
            "rankY": Value::Null,
            "verdict": "NotNice",
            "alpha": Value::Null,
            "phi": Value::Null,
            "offending": format!("{verdict:?}"),
        })
        .to_string());
    }
    if l.is_abelian() {
        return Ok(json!({
            "nice": true,
            "m": 0,
            "rankY": 0,
            "verdict": "Abelian",
            "alpha": Value::Null,
            "phi": rats(&vec![Q::from_integer(1.into()); l.dim()]),
        })
        .to_string());
    }
    let cert = nice::nice_test(l).map_err(|e| anyhow!(e))?;
    Ok(json!({
        "nice": true,
        "m": cert.y.nrows(),
        "rankY": cert.rank_y,
        "verdict": match cert.verdict {
            NiceOutcome::EinsteinNilradical => "EinsteinNilradical",
            NiceOutcome::NotEinsteinNilradical => "NotEinsteinNilradical",
            NiceOutcome::NotNice => "NotNice",
        },
        "alpha": cert.alpha.as_deref().map(rats),
        "phi": rats(&cert.phi_diag),
        "infeasibility_margin": cert.infeasibility_margin.as_ref().map(rat),
    })
    .to_string())
}

pub fn nilsoliton_json(r: &NilsolitonReport) -> String {
    json!({
        "pass": r.pass,
        "c": r.c,
        "residual_rel": r.residual_rel,
        "tolerance": r.tolerance,
        "phi": rats(&r.phi_diag),
        "float_precision": "f64",
    })
    .to_string()
}

pub fn flow_json(outcome: &FlowOutcome) -> String {
    let v = match outcome {
        FlowOutcome::Converged {
            iterations,
            c,
            a,
            eigenvalue_type,
            metric_gram,
            f_min,
            residual,
            ..
        } => json!({
            "tag": "Converged",
            "iterations": iterations,
            "c": c,
            "a": a,
            "eigenvalue_type": {
                "eigenvalues": rats(&eigenvalue_type.eigenvalues),
                "multiplicities": eigenvalue_type.multiplicities,
                "integer_form": eigenvalue_type.integer_form.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
            },
            "metric_gram": mat_f64(metric_gram),
            "f_min": f_min,
            "residual": residual,
            "float_precision": "f64",
        }),
        FlowOutcome::Degenerated {
            iterations,
            vanished,
            diagnostic_direction,
            residual,
            ..
        } => json!({
            "tag": "Degenerated",
            "iterations": iterations,
            "vanished_brackets": vanished.iter().map(|&(i, j, k)| vec![i + 1, j + 1, k + 1]).collect::<Vec<_>>(),
            "diagnostic_direction": diagnostic_direction,
            "residual": residual,
            "float_precision": "f64",
        }),
        FlowOutcome::MaxIterations {
            iterations,
            residual,
            f_value,
        } => json!({
            "tag": "MaxIterations",
            "iterations": iterations,
            "residual": residual,
            "f_value": f_value,
            "float_precision": "f64",
        }),
        FlowOutcome::GateRejected {
            phi_positive,
            ad_phi_nonneg,
        } => json!({
            "tag": "GateRejected",
            "phi_positive": phi_positive,
            "ad_phi_nonneg": ad_phi_nonneg,
        }),
    };
    v.to_string()
}

pub fn flow_text(outcome: &FlowOutcome) {
    match outcome {
        FlowOutcome::Converged {
            iterations,
            c,
            f_min,
            residual,
            ..
        } => crate::outln!(
            "converged after {iterations} iterations: c = {c:.6}, f_min = {f_min:.6}, residual = {residual:.2e}"
        ),
        FlowOutcome::Degenerated {
            iterations,
            vanished,
            ..
        } => crate::outln!(
            "degenerated after {iterations} iterations: {} bracket components vanished (heuristic, not a proof)",
            vanished.len()
        ),
        FlowOutcome::MaxIterations {
            iterations,
            residual,
            ..
        } => crate::outln!("no decision after {iterations} iterations (residual {residual:.2e})"),
        FlowOutcome::GateRejected {
            phi_positive,
            ad_phi_nonneg,
        } => crate::outln!(
            "rejected by the necessary conditions: phi_positive = {phi_positive}, ad_phi_nonneg = {ad_phi_nonneg}"
        ),
    }
}

pub fn verdict_name(verdict: &Verdict) -> &'static str {
    match verdict {
        Verdict::EinsteinNilradical { .. } => "EinsteinNilradical",
        Verdict::NotEinsteinNilradical { .. } => "NotEinsteinNilradical",
        Verdict::Undecided { .. } => "Undecided",
    }
}

pub fn classification_json(report: &ClassificationReport) -> String {
    let certificate = match &report.verdict {
        Verdict::NotEinsteinNilradical { certificate } => Some(match certificate {
            NegativeCertificate::NoPositiveDerivation { phi_diag } => json!({
                "kind": "no_positive_derivation",
                "phi_diagonal": rats(phi_diag),
            }),
            NegativeCertificate::AdPhiNegative { eigenvalue } => json!({
                "kind": "ad_phi_negative",
                "eigenvalue": rat(eigenvalue),
            }),
            NegativeCertificate::AlphaInfeasible { best_margin, duals } => json!({
                "kind": "alpha_infeasible",
                "best_margin": rat(best_margin),
                "duals": rats(duals),
            }),
        }),
        _ => None,
    };
    let (metric, c, verification, route) = match &report.verdict {
        Verdict::EinsteinNilradical {
            metric_gram,
            c,
            verification,
            route,
        } => (
            Some(mat_f64(metric_gram)),
            Some(*c),
            Some(json!({
                "pass": verification.pass,
                "residual_rel": verification.residual_rel,
                "tolerance": verification.tolerance,
            })),
            Some(match route {
                MetricRoute::Flat => "flat",
                MetricRoute::ClosedForm => "closed-form",
                MetricRoute::Flow => "flow",
            }),
        ),
        _ => (None, None, None, None),
    };
    let undecided = match &report.verdict {
        Verdict::Undecided { reason } => Some(match reason {
            UndecidedReason::MaxIterations { residual } => json!({
                "kind": "max_iterations",
                "residual": residual,
            }),
            UndecidedReason::Degenerated { vanished } => json!({
                "kind": "degenerated",
                "vanished_brackets": vanished.iter().map(|&(i, j, k)| vec![i + 1, j + 1, k + 1]).collect::<Vec<_>>(),
            }),
        }),
        _ => None,
    };
    json!({
        "verdict": verdict_name(&report.verdict),
        "pre_einstein": {
            "phi_diagonal": rats(&report.pre_einstein.diag),
            "eigenvalue_type": eigenvalue_type_json(&report.pre_einstein),
        },
        "eq2": eq2_json(&report.spectrum),
        "nice": report.nice_certificate.as_ref().map(|cert| json!({
            "m": cert.y.nrows(),
            "rankY": cert.rank_y,
            "alpha": cert.alpha.as_deref().map(rats),
            "phi": rats(&cert.phi_diag),
        })),
        "metric_gram": metric,
        "c": c,
        "verification": verification,
        "route": route,
        "certificate": certificate,
        "undecided": undecided,
        "flow_iterations": report.flow_iterations,
        "float_precision": "f64",
    })
    .to_string()
}

pub fn classification_text(report: &ClassificationReport) {
    crate::outln!("verdict: {}", verdict_name(&report.verdict));
    let phi: Vec<String> = report
        .pre_einstein
        .diag
        .iter()
        .map(|x| x.to_string())
        .collect();
    crate::outln!("pre-Einstein diagonal: [{}]", phi.join(", "));
    match &report.verdict {
        Verdict::EinsteinNilradical {
            c,
            verification,
            route,
            ..
        } => {
            crate::outln!(
                "nilsoliton metric found ({:?} route): c = {c:.6}, verification residual {:.2e}",
                route,
                verification.residual_rel
            );
        }
        Verdict::NotEinsteinNilradical { certificate } => match certificate {
            NegativeCertificate::NoPositiveDerivation { .. } => {
                crate::outln!("certificate: pre-Einstein derivation is not positive")
            }
            NegativeCertificate::AdPhiNegative { eigenvalue } => {
                crate::outln!("certificate: ad_phi eigenvalue {eigenvalue} < 0")
            }
            NegativeCertificate::AlphaInfeasible { best_margin, .. } => {
                crate::outln!("certificate: no strictly positive alpha (best margin {best_margin})")
            }
        },
        Verdict::Undecided { reason } => crate::outln!("undecided: {reason:?}"),
    }
}

pub fn tuple_json(t: &JTuple) -> String {
    json!({
        "q": t.q,
        "p": t.p,
        "matrices": t.matrices.iter().map(rational_matrix).collect::<Vec<_>>(),
    })
    .to_string()
}

#[derive(Deserialize)]
struct TupleFile {
    q: usize,
    matrices: Vec<Vec<Vec<String>>>,
}

pub fn load_tuple(text: &str) -> Result<JTuple> {
    // Accept either a tuple file or a two-step algebra file.
    if let Ok(parsed) = serde_json::from_str::<TupleFile>(text) {
        let mut matrices = Vec::new();
        for m in &parsed.matrices {
            let rows: Result<Vec<Vec<Q>>> = m
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|s| s.parse::<Q>().map_err(|_| anyhow!("bad rational '{s}'")))
                        .collect()
                })
                .collect();
            matrices.push(RationalMatrix::from_rows(rows?));
        }
        return JTuple::new(parsed.q, matrices).map_err(|e| anyhow!("invalid tuple: {e}"));
    }
    let l = LieAlgebra::parse(text).map_err(|e| anyhow!("parsing algebra: {e}"))?;
    nilsol_core::two_step::to_j_tuple(&l).map_err(|e| anyhow!("not a two-step algebra: {e}"))
}

#[derive(Deserialize)]
struct MetricFile {
    gram: Option<Vec<Vec<Value>>>,
    orthonormal_basis: Option<Vec<Vec<f64>>>,
}

/// Load a metric: either an explicit Gram matrix (rational strings or
/// floats) or a list of basis vectors declared orthonormal (rows are
/// vectors in the working-basis coordinates).
pub fn load_metric(path: &std::path::PathBuf, dim: usize) -> Result<InnerProduct> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: MetricFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(gram) = parsed.gram {
        if gram.len() != dim || gram.iter().any(|r| r.len() != dim) {
            return Err(anyhow!("gram must be {dim}x{dim}"));
        }
        // Rational mode when every entry is a string; float otherwise.
        let all_strings = gram.iter().all(|row| row.iter().all(|v| v.is_string()));
        if all_strings {
            let rows: Result<Vec<Vec<Q>>> = gram
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|v| {
                            let s = v.as_str().unwrap();
                            s.parse::<Q>().map_err(|_| anyhow!("bad rational '{s}'"))
                        })
                        .collect()
                })
                .collect();
            return Ok(InnerProduct::from_gram_rational(RationalMatrix::from_rows(
                rows?,
            )));
        }
        let rows: Result<Vec<Vec<f64>>> = gram
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| v.as_f64().ok_or_else(|| anyhow!("bad number {v}")))
                    .collect()
            })
            .collect();
        return Ok(InnerProduct::from_gram_f64(Mat::from_rows(rows?)));
    }
    if let Some(vectors) = parsed.orthonormal_basis {
        if vectors.len() != dim || vectors.iter().any(|v| v.len() != dim) {
            return Err(anyhow!(
                "orthonormal_basis must be {dim} vectors of length {dim}"
            ));
        }
        // Rows are vectors; columns of the frame matrix.
        let frame = Mat::from_fn(dim, dim, |r, c| vectors[c][r]);
        return InnerProduct::from_orthonormal_frame(&frame)
            .ok_or_else(|| anyhow!("basis vectors are dependent"));
    }
    Err(anyhow!("metric file needs 'gram' or 'orthonormal_basis'"))
}

pub fn survey_json(stats: &SurveyStats) -> String {
    json!({
        "p": stats.p,
        "q": stats.q,
        "samples": stats.records.len(),
        "converged": stats.converged,
        "degenerated": stats.degenerated,
        "undecided": stats.undecided,
        "mean_iterations": stats.mean_iterations,
        "float_precision": "f64",
    })
    .to_string()
}

pub fn corpus_list_json(entries: &[CorpusEntry]) -> String {
    json!(entries
        .iter()
        .map(|e| json!({
            "id": e.id,
            "dim": e.algebra.dim(),
            "summary": e.summary,
            "has_printed_frame": e.soliton_frame.is_some(),
        }))
        .collect::<Vec<_>>())
    .to_string()
}

pub struct CorpusRunRow {
    pub id: &'static str,
    pub verdict: String,
    pub verdict_ok: bool,
    pub frame_residual: Option<f64>,
    pub frame_pass: Option<bool>,
}

pub fn corpus_run_json(rows: &[CorpusRunRow]) -> String {
    json!(rows
        .iter()
        .map(|r| json!({
            "id": r.id,
            "verdict": r.verdict,
            "verdict_ok": r.verdict_ok,
            "frame_residual": r.frame_residual,
            "frame_pass": r.frame_pass,
        }))
        .collect::<Vec<_>>())
    .to_string()
}
