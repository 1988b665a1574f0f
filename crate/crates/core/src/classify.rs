//! The classification pipeline: pre-Einstein derivation, necessary-condition
//! gate, exact nice-basis test when the basis is nice, orbit flow otherwise.
//!
//! Every Einstein-nilradical verdict carries a metric that re-checks offline;
//! every negative verdict carries one of the exact certificates: a
//! non-positive pre-Einstein derivation, a negative ad_φ eigenvalue, or an
//! α-infeasibility certificate from the positivity LP.

use crate::algebra::LieAlgebra;
use crate::flow::{nilsoliton_metric_from_flow, run_flow, FlowOptions, FlowOutcome};
use crate::mat::Mat;
use crate::nice::{closed_form_nilsoliton, is_nice, nice_test, NiceCertificate, NiceOutcome};
use crate::pre_einstein::{
    ad_phi_spectrum, pre_einstein_diagonal, AdPhiSpectrum, PreEinsteinOutcome, PreEinsteinResult,
};
use crate::ricci::{nilsoliton_verify, InnerProduct, NilsolitonReport};
use crate::Q;
use num_traits::Signed;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(
        "the working basis does not support the diagonal pre-Einstein route \
         (derivation {failing_derivation} violates the trace condition); \
         supply a basis adapted to a maximal torus"
    )]
    UnsupportedBasis { failing_derivation: usize },
    #[error("internal verification failed: {0}")]
    Internal(String),
}

/// Flavor of exact certificate behind a negative verdict.
#[derive(Debug, Clone)]
pub enum NegativeCertificate {
    /// φ has a non-positive eigenvalue, so no Einstein derivation exists.
    NoPositiveDerivation { phi_diag: Vec<Q> },
    /// ad_φ has a negative eigenvalue on Der(n).
    AdPhiNegative { eigenvalue: Q },
    /// The positivity system Y Yᵗ α = [1]_m has no strictly positive
    /// solution; margin and duals certify the optimum exactly.
    AlphaInfeasible { best_margin: Q, duals: Vec<Q> },
}

#[derive(Debug, Clone)]
pub enum Verdict {
    EinsteinNilradical {
        /// Gram matrix of a nilsoliton inner product on the working basis.
        metric_gram: Mat,
        /// Constant in ric = c(id − φ) for that metric.
        c: f64,
        verification: NilsolitonReport,
        /// Whether the metric came from the closed form, the flow, or is
        /// the trivial flat metric of an abelian algebra.
        route: MetricRoute,
    },
    NotEinsteinNilradical {
        certificate: NegativeCertificate,
    },
    Undecided {
        reason: UndecidedReason,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricRoute {
    Flat,
    ClosedForm,
    Flow,
}

#[derive(Debug, Clone)]
pub enum UndecidedReason {
    MaxIterations {
        residual: f64,
    },
    /// The flow's degeneration heuristic fired; this is diagnostic evidence
    /// of a non-closed orbit, not a proof.
    Degenerated {
        vanished: Vec<(usize, usize, usize)>,
    },
}

#[derive(Debug, Clone)]
pub struct ClassificationReport {
    pub pre_einstein: PreEinsteinResult,
    pub spectrum: AdPhiSpectrum,
    pub nice_certificate: Option<NiceCertificate>,
    pub flow_iterations: Option<usize>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub flow: FlowOptions,
    /// Tolerance for the nilsoliton verification of emitted metrics.
    pub verify_tol: f64,
    /// Scale emitted metrics so the bracket norm under the metric equals
    /// the bracket norm of the input presentation under the standard
    /// metric, making the reported c reproducible.
    pub normalize_metric: bool,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            flow: FlowOptions::default(),
            verify_tol: 1e-8,
            normalize_metric: true,
        }
    }
}

/// Rescale a Gram matrix so ‖μ‖² under it equals `target`.
fn normalize_bracket_norm(l: &LieAlgebra, gram: Mat, target: f64) -> Mat {
    let ip = InnerProduct::from_gram_f64(gram.clone());
    let ric = match crate::ricci::ricci_operator(l, &ip) {
        Ok(data) => data,
        Err(_) => return gram,
    };
    // Tr ric = −¼ ‖μ‖² in any orthonormal frame.
    let norm2 = -4.0 * ric.frame_symmetric.trace();
    if norm2 <= 0.0 || target <= 0.0 {
        return gram;
    }
    // Scaling G by t scales ‖μ‖² by 1/t.
    gram.scale(norm2 / target)
}

/// Decide whether `l` is an Einstein nilradical and assemble certifying data.
pub fn classify(
    l: &LieAlgebra,
    opts: &ClassifyOptions,
) -> Result<ClassificationReport, ClassifyError> {
    let pre = match pre_einstein_diagonal(l) {
        PreEinsteinOutcome::Supported(r) => r,
        PreEinsteinOutcome::UnsupportedBasis { failing_derivation } => {
            return Err(ClassifyError::UnsupportedBasis { failing_derivation })
        }
    };
    let spectrum = ad_phi_spectrum(l, &pre.diag);

    // Abelian algebras are Einstein nilradicals with any flat metric.
    if l.is_abelian() {
        let n = l.dim();
        let metric = Mat::identity(n);
        let verification =
            nilsoliton_verify(l, &InnerProduct::standard(n), &pre.diag, opts.verify_tol)
                .map_err(|e| ClassifyError::Internal(e.to_string()))?;
        return Ok(ClassificationReport {
            pre_einstein: pre,
            spectrum,
            nice_certificate: None,
            flow_iterations: None,
            verdict: Verdict::EinsteinNilradical {
                metric_gram: metric,
                c: 0.0,
                verification,
                route: MetricRoute::Flat,
            },
        });
    }

    // Necessary conditions: φ > 0 and ad_φ ≥ 0.
    if !spectrum.phi_positive {
        return Ok(ClassificationReport {
            pre_einstein: pre.clone(),
            spectrum: spectrum.clone(),
            nice_certificate: None,
            flow_iterations: None,
            verdict: Verdict::NotEinsteinNilradical {
                certificate: NegativeCertificate::NoPositiveDerivation {
                    phi_diag: pre.diag.clone(),
                },
            },
        });
    }
    if !spectrum.ad_phi_nonneg {
        let eigenvalue = spectrum
            .pairs
            .iter()
            .find(|(e, _)| e.is_negative())
            .map(|(e, _)| e.clone())
            .expect("ad_phi_nonneg is false");
        return Ok(ClassificationReport {
            pre_einstein: pre,
            spectrum: spectrum.clone(),
            nice_certificate: None,
            flow_iterations: None,
            verdict: Verdict::NotEinsteinNilradical {
                certificate: NegativeCertificate::AdPhiNegative { eigenvalue },
            },
        });
    }

    let input_norm2 = num_traits::ToPrimitive::to_f64(&l.bracket_norm_squared())
        .expect("bracket norm in f64 range");

    // Exact path for nice bases.
    if is_nice(l).is_nice() {
        let cert = nice_test(l).map_err(ClassifyError::Internal)?;
        match cert.verdict {
            NiceOutcome::NotEinsteinNilradical => {
                let certificate = NegativeCertificate::AlphaInfeasible {
                    best_margin: cert
                        .infeasibility_margin
                        .clone()
                        .expect("negative verdict carries margin"),
                    duals: cert.infeasibility_duals.clone().unwrap_or_default(),
                };
                return Ok(ClassificationReport {
                    pre_einstein: pre,
                    spectrum,
                    nice_certificate: Some(cert),
                    flow_iterations: None,
                    verdict: Verdict::NotEinsteinNilradical { certificate },
                });
            }
            NiceOutcome::EinsteinNilradical => {
                // Metric from the closed form when Y has full row rank.
                if let Some(gram_diag) =
                    closed_form_nilsoliton(l).map_err(ClassifyError::Internal)?
                {
                    let mut gram = Mat::diagonal(&gram_diag);
                    if opts.normalize_metric {
                        gram = normalize_bracket_norm(l, gram, input_norm2);
                    }
                    let ip = InnerProduct::from_gram_f64(gram.clone());
                    let verification = nilsoliton_verify(l, &ip, &pre.diag, opts.verify_tol)
                        .map_err(|e| ClassifyError::Internal(e.to_string()))?;
                    if !verification.pass {
                        return Err(ClassifyError::Internal(format!(
                            "closed-form metric failed verification: {verification:?}"
                        )));
                    }
                    let c = verification.c;
                    return Ok(ClassificationReport {
                        pre_einstein: pre,
                        spectrum,
                        nice_certificate: Some(cert),
                        flow_iterations: None,
                        verdict: Verdict::EinsteinNilradical {
                            metric_gram: gram,
                            c,
                            verification,
                            route: MetricRoute::ClosedForm,
                        },
                    });
                }
                // Rank-deficient Y: fall through to the flow, keeping the
                // exact certificate.
                let report = run_with_flow(l, &pre, opts, input_norm2)?;
                return Ok(ClassificationReport {
                    nice_certificate: Some(cert),
                    ..report
                });
            }
            NiceOutcome::NotNice => unreachable!("guarded by is_nice"),
        }
    }

    run_with_flow(l, &pre, opts, input_norm2)
}

fn run_with_flow(
    l: &LieAlgebra,
    pre: &PreEinsteinResult,
    opts: &ClassifyOptions,
    input_norm2: f64,
) -> Result<ClassificationReport, ClassifyError> {
    let spectrum = ad_phi_spectrum(l, &pre.diag);
    // The gate already ran in classify; run the flow without re-gating.
    let report = run_flow(l, &pre.diag, &opts.flow, false);
    let (verdict, iterations) = match report.outcome {
        FlowOutcome::Converged { iterations, .. } => {
            let gram = nilsoliton_metric_from_flow(&report.outcome)
                .expect("converged outcome carries a metric");
            let gram = if opts.normalize_metric {
                normalize_bracket_norm(l, gram, input_norm2)
            } else {
                gram
            };
            let ip = InnerProduct::from_gram_f64(gram.clone());
            let verification = nilsoliton_verify(l, &ip, &pre.diag, opts.verify_tol)
                .map_err(|e| ClassifyError::Internal(e.to_string()))?;
            if !verification.pass {
                return Err(ClassifyError::Internal(format!(
                    "flow metric failed verification: {verification:?}"
                )));
            }
            let c = verification.c;
            (
                Verdict::EinsteinNilradical {
                    metric_gram: gram,
                    c,
                    verification,
                    route: MetricRoute::Flow,
                },
                Some(iterations),
            )
        }
        FlowOutcome::Degenerated {
            iterations,
            vanished,
            ..
        } => (
            Verdict::Undecided {
                reason: UndecidedReason::Degenerated { vanished },
            },
            Some(iterations),
        ),
        FlowOutcome::MaxIterations {
            iterations,
            residual,
            ..
        } => (
            Verdict::Undecided {
                reason: UndecidedReason::MaxIterations { residual },
            },
            Some(iterations),
        ),
        FlowOutcome::GateRejected { .. } => unreachable!("gate disabled here"),
    };
    Ok(ClassificationReport {
        pre_einstein: pre.clone(),
        spectrum,
        nice_certificate: None,
        flow_iterations: iterations,
        verdict,
    })
}
