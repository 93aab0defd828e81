//! JSON report layouts. Field order is fixed by the struct definitions, so
//! identical inputs serialize to identical bytes.

use memkernel::pairs::ConvergenceEntry;
use memkernel::LegitimacyReport;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub t_max: f64,
    pub n_steps: usize,
    pub dt: f64,
}

/// Diagnostics of one computed dynamical map.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub method: String,
    /// Smallest Choi eigenvalue over all nodes.
    pub min_choi_eig: f64,
    /// `max_k ||Λ(t_k)*[I] - I||_F`.
    pub max_map_trace_defect: f64,
    /// `max_k |Tr ρ(t_k) - 1|` along the trajectory.
    pub max_state_trace_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series_tail_norm: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub a: String,
    pub b: String,
    pub max_gap: f64,
}

/// Memory kernel in the Laplace domain at one point.
#[derive(Debug, Clone, Serialize)]
pub struct KernelLaplaceReport {
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantumReport {
    pub command: &'static str,
    pub model: &'static str,
    pub label: String,
    pub dim: usize,
    pub grid: GridReport,
    pub legitimacy: LegitimacyReport<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub convergence: Vec<ConvergenceEntry<f64>>,
    pub memory_kernel: Vec<KernelLaplaceReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solutions: Vec<SolutionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solver_gaps: Vec<GapReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

/// `W~(s)` for the classical model, rows of the matrix in order.
#[derive(Debug, Clone, Serialize)]
pub struct ClassicalKernelReport {
    pub s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_column_sum: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalSolutionReport {
    pub column_sum_defect: f64,
    pub min_entry: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalReport {
    pub command: &'static str,
    pub model: &'static str,
    pub dim: usize,
    pub grid: GridReport,
    pub nonnegative: bool,
    pub tr_semi_residual: f64,
    #[serde(rename = "tol_TR")]
    pub tol_tr: f64,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub kernel_laplace: Vec<ClassicalKernelReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<ClassicalSolutionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub solver_gaps: Vec<GapReport>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Quantum(QuantumReport),
    Classical(ClassicalReport),
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only plain data");
        s.push('\n');
        s
    }
}
