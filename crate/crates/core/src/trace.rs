//! Per-iteration solve trace and its CSV/JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::certify::CertificateReport;
use crate::counters::CounterSnapshot;

/// How an iteration produced its step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Capped CG returned an approximate damped Newton solution.
    #[serde(rename = "CG_SOL")]
    CgSol,
    /// Capped CG returned a negative-curvature direction.
    #[serde(rename = "CG_NC")]
    CgNc,
    /// The eigenvalue oracle returned a negative-curvature direction.
    #[serde(rename = "MEO_NC")]
    MeoNc,
    /// The method stopped at this iterate.
    #[serde(rename = "TERMINATE")]
    Terminate,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::CgSol => "CG_SOL",
            Branch::CgNc => "CG_NC",
            Branch::MeoNc => "MEO_NC",
            Branch::Terminate => "TERMINATE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// Barrier objective at the iterate entering iteration `k`.
    pub phi_mu: f64,
    /// Smaller of the two first-order gate residuals.
    pub fosp_residual_min: f64,
    pub branch: Branch,
    pub step_alpha: f64,
    pub dir_norm: f64,
    pub cg_iters: usize,
    pub lanczos_iters: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub counters: CounterSnapshot,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateReport>,
}

pub const CSV_HEADER: &str = "k,phi_mu,residual,branch,alpha,dir_norm,cg_iters,lanczos_iters";

impl SolveTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{},{:e},{:e},{},{}",
                r.k,
                r.phi_mu,
                r.fosp_residual_min,
                r.branch.as_str(),
                r.step_alpha,
                r.dir_norm,
                r.cg_iters,
                r.lanczos_iters
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = SolveTrace {
            records: vec![IterationRecord {
                k: 0,
                phi_mu: -0.5,
                fosp_residual_min: 1e-3,
                branch: Branch::MeoNc,
                step_alpha: 1.0,
                dir_norm: 0.25,
                cg_iters: 0,
                lanczos_iters: 7,
            }],
            ..Default::default()
        };
        assert_eq!(
            t.to_csv(),
            "k,phi_mu,residual,branch,alpha,dir_norm,cg_iters,lanczos_iters\n0,-5e-1,1e-3,MEO_NC,1e0,2.5e-1,0,7\n"
        );
        let back: SolveTrace = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }
}
