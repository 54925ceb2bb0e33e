//! JSON (schema 1) and plain-text renderings of a [`VerificationReport`].
//!
//! Big integers are decimal strings so that no consumer truncates them to
//! a double.

use serde::{Deserialize, Serialize};

use crate::bounds::CmMethod;
use crate::realcf::CertifiedReal;
use crate::verifier::{ReductionOutcome, SkipReason, SquareFreePart, Status, VerificationReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonJson {
    pub u: String,
    pub v: String,
    pub denom: u32,
    /// Square-free radicand of the field.
    pub radicand: u64,
    pub norm: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub index: usize,
    pub q_k: String,
    pub a_max: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateJson {
    pub n: u64,
    pub x: Option<String>,
    pub skipped: Option<SkipReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factorization_complete: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_l: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_to: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionJson {
    pub n: u64,
    pub l: u64,
    pub c_n2_initial: String,
    pub q_k: Option<String>,
    pub kappa: Option<String>,
    /// `κ` as an exact fraction `p/q`.
    pub kappa_exact: Option<String>,
    pub bound: Option<u64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredJson {
    pub a: String,
    pub y: String,
    pub y_prime: String,
    pub z: String,
    pub z_prime: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub n: u64,
    pub n_prime: u64,
    pub x: String,
    pub x_prime: String,
    pub partial: bool,
    pub recovered: Vec<RecoveredJson>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingsJson {
    pub bounds: f64,
    pub candidates: f64,
    pub reductions: f64,
    pub scan: f64,
    pub total: f64,
}

/// One JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub schema: u32,
    pub b: u64,
    pub status: String,
    pub reason: Option<String>,
    pub epsilon: Option<EpsilonJson>,
    pub c_m: Option<String>,
    pub c_m_method: Option<CmMethod>,
    pub c_n1: Option<u64>,
    pub witness: Option<WitnessJson>,
    pub candidates: Vec<CandidateJson>,
    pub reductions: Vec<ReductionJson>,
    pub pairs: Vec<PairJson>,
    pub timings_ms: TimingsJson,
}

fn ms(d: std::time::Duration) -> f64 {
    (d.as_secs_f64() * 1e6).round() / 1e3
}

impl Record {
    pub fn from_report(r: &VerificationReport) -> Self {
        let reason = match &r.status {
            Status::NotCertified(why) => Some(why.clone()),
            _ => r.reason.clone(),
        };
        let epsilon = r.epsilon.as_ref().map(|e| EpsilonJson {
            u: e.u().to_string(),
            v: e.v().to_string(),
            denom: e.denom(),
            radicand: e.radicand(),
            norm: e.norm().try_into().unwrap_or(0),
        });
        let candidates = r
            .candidates
            .iter()
            .map(|c| {
                let k = c.kept.as_ref();
                CandidateJson {
                    n: c.n,
                    x: c.x.as_ref().map(|x| x.to_string()),
                    skipped: c.skipped,
                    z: k.map(|k| k.z.to_string()),
                    pi: k.map(|k| match &k.pi {
                        SquareFreePart::Exact(p) => p.to_string(),
                        SquareFreePart::Fallback => "fallback:1".to_string(),
                    }),
                    factorization_complete: k.map(|k| k.factorization.is_complete()),
                    c_l: k.map(|k| k.c_l),
                    scan_to: k.map(|k| k.scan_to),
                }
            })
            .collect();
        let reductions = r
            .reductions
            .iter()
            .map(|red| {
                let base = ReductionJson {
                    n: red.n,
                    l: red.l,
                    c_n2_initial: red.c_n2_initial.to_string(),
                    q_k: None,
                    kappa: None,
                    kappa_exact: None,
                    bound: None,
                    failure: None,
                };
                match &red.outcome {
                    ReductionOutcome::Reduced { q_k, kappa, bound, .. } => ReductionJson {
                        q_k: Some(q_k.to_string()),
                        kappa: Some(CertifiedReal::from_rational(kappa, 96).to_sci_string(12)),
                        kappa_exact: Some(format!("{}/{}", kappa.numer(), kappa.denom())),
                        bound: Some(*bound),
                        ..base
                    },
                    ReductionOutcome::Failed { reason, fallback } => ReductionJson {
                        bound: *fallback,
                        failure: Some(reason.clone()),
                        ..base
                    },
                }
            })
            .collect();
        let pairs = r
            .pairs
            .iter()
            .map(|p| PairJson {
                n: p.n,
                n_prime: p.n_prime,
                x: p.x.to_string(),
                x_prime: p.x_prime.to_string(),
                partial: p.partial,
                recovered: p
                    .recovered
                    .iter()
                    .map(|s| RecoveredJson {
                        a: s.a.to_string(),
                        y: s.y.to_string(),
                        y_prime: s.y_prime.to_string(),
                        z: s.z.to_string(),
                        z_prime: s.z_prime.to_string(),
                    })
                    .collect(),
            })
            .collect();
        let t = &r.timings;
        Record {
            schema: SCHEMA_VERSION,
            b: r.b,
            status: r.status.as_str().to_string(),
            reason,
            epsilon,
            c_m: r.bounds.as_ref().map(|s| s.c_m.to_string()),
            c_m_method: r.bounds.as_ref().map(|s| s.c_m_method),
            c_n1: r.bounds.as_ref().map(|s| s.c_n1),
            witness: r.bounds.as_ref().map(|s| WitnessJson {
                index: s.witness_index,
                q_k: s.witness_q.to_string(),
                a_max: s.witness_a_max.to_string(),
            }),
            candidates,
            reductions,
            pairs,
            timings_ms: TimingsJson {
                bounds: ms(t.bounds),
                candidates: ms(t.candidates),
                reductions: ms(t.reductions),
                scan: ms(t.scan),
                total: ms(t.total),
            },
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }

    /// Copy with all timing fields zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> Record {
        Record { timings_ms: TimingsJson::default(), ..self.clone() }
    }
}

/// `3.345e14`-style rendering of a decimal integer string.
fn sci(s: &str) -> String {
    let digits = s.trim_start_matches('-');
    if digits.len() <= 6 {
        return s.to_string();
    }
    let (head, tail) = digits.split_at(1);
    format!("{head}.{}e{}", &tail[..3], digits.len() - 1)
}

/// Human-readable multi-line summary.
pub fn render_text(rec: &Record) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("b = {}: {}", rec.b, rec.status));
    if let Some(r) = &rec.reason {
        line(format!("  reason: {r}"));
    }
    if let Some(e) = &rec.epsilon {
        let body = format!("{} + {}*sqrt({})", e.u, e.v, e.radicand);
        let eps = if e.denom == 1 { body } else { format!("({body})/{}", e.denom) };
        line(format!("  epsilon = {eps}  (norm {})", e.norm));
    }
    if let (Some(cm), Some(cn1)) = (&rec.c_m, rec.c_n1) {
        line(format!("  c_m = {} ({})  c_n1 = {cn1}", sci(cm), cm));
    }
    let kept: Vec<_> = rec.candidates.iter().filter(|c| c.skipped.is_none()).collect();
    line(format!(
        "  candidates: {} examined, {} kept",
        rec.candidates.len(),
        kept.len()
    ));
    for c in kept {
        line(format!(
            "    n = {}: x = {}, z = {}, c_l = {}, scanned to n' = {}",
            c.n,
            c.x.as_deref().unwrap_or("?"),
            c.z.as_deref().unwrap_or("?"),
            c.c_l.unwrap_or(0),
            c.scan_to.unwrap_or(0)
        ));
    }
    for r in &rec.reductions {
        match (&r.failure, r.bound) {
            (None, Some(bound)) => line(format!(
                "    reduction n = {}, l = {}: q_k = {}, kappa = {}, n2 <= {bound}",
                r.n,
                r.l,
                r.q_k.as_deref().unwrap_or("?"),
                r.kappa.as_deref().unwrap_or("?")
            )),
            (Some(f), _) => line(format!("    reduction n = {}, l = {}: failed ({f})", r.n, r.l)),
            _ => {}
        }
    }
    for p in &rec.pairs {
        line(format!("  pair: x = {} (n = {}), x' = {} (n' = {})", p.x, p.n, p.x_prime, p.n_prime));
        for s in &p.recovered {
            line(format!("    a = {}, y = {}, y' = {}, z = {}, z' = {}", s.a, s.y, s.y_prime, s.z, s.z_prime));
        }
    }
    line(format!("  time: {:.1} ms", rec.timings_ms.total));
    out
}
