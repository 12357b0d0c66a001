//! Label-based report documents for output.

use serde::{Deserialize, Serialize};

use crate::charlike::{CharLike, SpectralReport};
use crate::tree::{Tree, WeightClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharLikeSummary {
    /// `"vertex"` or `"edge"`.
    pub kind: String,
    pub vertices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    pub value: f64,
    pub tie_count: usize,
    pub walk_trace: Vec<String>,
}

impl CharLikeSummary {
    pub fn describe(&self) -> String {
        match self.kind.as_str() {
            "vertex" => format!("characteristic-like vertex {}", self.vertices[0]),
            _ => format!(
                "characteristic-like edge ({}, {})",
                self.vertices[0], self.vertices[1]
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub root: String,
    pub size: usize,
    pub perron_value: f64,
    pub perron: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexSummary {
    pub vertex: String,
    pub rho_max: f64,
    pub perron_count: usize,
    pub gap: Option<f64>,
    pub branches: Vec<BranchSummary>,
}

/// A [`SpectralReport`] with vertex ids replaced by labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub n: usize,
    pub s: usize,
    pub weight_class: WeightClass,
    pub charlike: CharLikeSummary,
    pub kappa: f64,
    pub mu: f64,
    pub bound_holds: bool,
    pub vertices: Vec<VertexSummary>,
}

pub fn summarize_charlike(tree: &Tree, r: &crate::charlike::CharLikeResult) -> CharLikeSummary {
    let label = |v: usize| tree.label(v).to_string();
    let (kind, nu) = match r.kind {
        CharLike::Vertex { .. } => ("vertex", None),
        CharLike::Edge { nu, .. } => ("edge", Some(nu)),
    };
    CharLikeSummary {
        kind: kind.to_string(),
        vertices: r.kind.vertices().into_iter().map(label).collect(),
        nu,
        value: r.value,
        tie_count: r.tie_count,
        walk_trace: r.walk_trace.iter().map(|&v| label(v)).collect(),
    }
}

impl ReportDocument {
    pub fn new(tree: &Tree, report: &SpectralReport) -> Self {
        let label = |v: usize| tree.label(v).to_string();
        let vertices = report
            .per_vertex
            .iter()
            .map(|p| VertexSummary {
                vertex: label(p.vertex),
                rho_max: p.rho_max,
                perron_count: p.tie_count(),
                gap: p.gap,
                branches: p
                    .branches
                    .iter()
                    .zip(&p.values)
                    .enumerate()
                    .map(|(i, (b, &value))| BranchSummary {
                        root: label(b.root),
                        size: b.len(),
                        perron_value: value,
                        perron: p.perron.contains(&i),
                    })
                    .collect(),
            })
            .collect();
        Self {
            n: tree.n(),
            s: tree.s(),
            weight_class: tree.class(),
            charlike: summarize_charlike(tree, &report.charlike),
            kappa: report.kappa,
            mu: report.mu,
            bound_holds: report.bound_holds,
            vertices,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = format!(
            "tree: {} vertices, {}x{} {} weights\n",
            self.n, self.s, self.s, self.weight_class
        );
        out += &self.charlike.describe();
        if let Some(nu) = self.charlike.nu {
            out += &format!(", nu = {nu:.9}");
        }
        out += "\n";
        out += &format!("walk: {}\n", self.charlike.walk_trace.join(" -> "));
        out += &format!("kappa = {:.9}\n", self.kappa);
        out += &format!("mu    = {:.9}\n", self.mu);
        out += &format!(
            "bound kappa <= mu: {}\n\n",
            if self.bound_holds {
                "holds"
            } else {
                "VIOLATED"
            }
        );

        let width = self
            .vertices
            .iter()
            .map(|v| v.vertex.len())
            .max()
            .unwrap_or(6)
            .max(6);
        out += &format!(
            "{:<width$}  {:>14}  {:>6}  {:>12}  branches (root: value, * = Perron)\n",
            "vertex", "rho_max", "perron", "gap"
        );
        for v in &self.vertices {
            let gap = v.gap.map_or("-".to_string(), |g| format!("{g:.6e}"));
            let branches: Vec<String> = v
                .branches
                .iter()
                .map(|b| {
                    format!(
                        "{}: {:.6}{}",
                        b.root,
                        b.perron_value,
                        if b.perron { "*" } else { "" }
                    )
                })
                .collect();
            out += &format!(
                "{:<width$}  {:>14.9}  {:>6}  {:>12}  {}\n",
                v.vertex,
                v.rho_max,
                v.perron_count,
                gap,
                branches.join(", ")
            );
        }
        out
    }
}
