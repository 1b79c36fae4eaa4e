use std::fmt::Write;

use numetric::index::IndexValue;
use numetric::numetric::{AxiomReport, Branch, MarginResult, NuResult, RobustCertificate, Stabilization};
use serde::Serialize;

use crate::Format;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub d_nu: f64,
    pub mu: f64,
    pub branch: Branch,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Report {
    Dist(NuResult),
    Margin(MarginResult),
    Stabilizes(Stabilization),
    Certify(RobustCertificate),
    Axioms(AxiomReport),
    Sweep(Vec<SweepRow>),
}

fn branch(b: Branch) -> &'static str {
    match b {
        Branch::Metric => "metric",
        Branch::DegenerateOne => "degenerate_one",
    }
}

fn index(i: &Option<IndexValue>) -> String {
    i.map(|v| v.to_string()).unwrap_or_default()
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn opt6(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// The report in the requested format, ending with a newline.
pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Csv => csv(report),
        Format::Human => match report {
            Report::Sweep(_) => csv(report),
            _ => human(report),
        },
    }
}

fn csv(report: &Report) -> String {
    let mut s = String::new();
    match report {
        Report::Dist(r) => {
            s.push_str("d_nu,branch,det_invertible,index,grid\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.value,
                branch(r.branch),
                r.det_invertible,
                index(&r.index),
                r.grid_size_used
            );
        }
        Report::Margin(r) => {
            s.push_str("mu,stabilizes,h_norm,index,grid\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.mu,
                r.stabilizes,
                opt(r.h_norm),
                index(&r.index_check),
                r.grid_size_used
            );
        }
        Report::Stabilizes(r) => {
            s.push_str("stabilizes,min_det_modulus,index,grid\n");
            let _ = writeln!(
                s,
                "{},{},{},{}",
                r.stabilizes,
                r.min_det_modulus,
                index(&r.index),
                r.grid_size_used
            );
        }
        Report::Certify(r) => {
            s.push_str("mu0,dnu,certified,predicted,actual_mu1\n");
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.mu0,
                r.dnu,
                r.certified,
                r.predicted_margin_lower_bound,
                opt(r.actual_mu1)
            );
        }
        Report::Axioms(r) => {
            s.push_str("check,worst,tolerance,passed\n");
            let t = r.tolerance;
            let _ = writeln!(s, "identity,{},{t},{}", r.identity_worst, r.identity_worst <= t);
            let _ = writeln!(s, "symmetry,{},{t},{}", r.symmetry_worst, r.symmetry_worst <= t);
            let _ = writeln!(
                s,
                "triangle,{},{t},{}",
                r.triangle_worst_slack,
                r.triangle_worst_slack >= -t
            );
            let _ = writeln!(s, "positivity,,{t},{}", r.positivity_ok);
            let _ = writeln!(s, "range,,{t},{}", r.range_ok);
        }
        Report::Sweep(rows) => {
            s.push_str("param,d_nu,mu,branch\n");
            for r in rows {
                let _ = writeln!(s, "{},{},{},{}", r.param, r.d_nu, r.mu, branch(r.branch));
            }
        }
    }
    s
}

fn human(report: &Report) -> String {
    let mut s = String::new();
    match report {
        Report::Dist(r) => {
            let _ = writeln!(s, "d_nu            {:.6}", r.value);
            let _ = writeln!(s, "branch          {}", branch(r.branch));
            let _ = writeln!(s, "det invertible  {}", yes(r.det_invertible));
            let _ = writeln!(s, "index           {}", r.index.map(|v| v.to_string()).unwrap_or("-".into()));
            let _ = writeln!(s, "grid            {}", r.grid_size_used);
        }
        Report::Margin(r) => {
            let _ = writeln!(s, "mu              {:.6}", r.mu);
            let _ = writeln!(s, "stabilizes      {}", yes(r.stabilizes));
            let _ = writeln!(s, "||H(P,C)||      {}", opt6(r.h_norm));
            let _ = writeln!(s, "index           {}", r.index_check.map(|v| v.to_string()).unwrap_or("-".into()));
            let _ = writeln!(s, "grid            {}", r.grid_size_used);
        }
        Report::Stabilizes(r) => {
            let _ = writeln!(s, "stabilizes      {}", yes(r.stabilizes));
            let _ = writeln!(s, "min |det|       {:.6e}", r.min_det_modulus);
            let _ = writeln!(s, "index           {}", r.index.map(|v| v.to_string()).unwrap_or("-".into()));
            let _ = writeln!(s, "grid            {}", r.grid_size_used);
        }
        Report::Certify(r) => {
            let _ = writeln!(s, "mu0             {:.6}", r.mu0);
            let _ = writeln!(s, "d_nu            {:.6}", r.dnu);
            let _ = writeln!(s, "certified       {}", yes(r.certified));
            let _ = writeln!(s, "predicted       {:.6}", r.predicted_margin_lower_bound);
            let _ = writeln!(s, "actual mu1      {}", opt6(r.actual_mu1));
        }
        Report::Axioms(r) => {
            let _ = writeln!(s, "plants          {}", r.plants);
            let _ = writeln!(s, "d(P,P) max      {:.3e}", r.identity_worst);
            let _ = writeln!(s, "symmetry max    {:.3e}", r.symmetry_worst);
            let _ = writeln!(s, "triangle slack  {:.3e}", r.triangle_worst_slack);
            let _ = writeln!(s, "positivity      {}", if r.positivity_ok { "ok" } else { "violated" });
            let _ = writeln!(s, "range           {}", if r.range_ok { "ok" } else { "violated" });
            let _ = writeln!(s, "tolerance       {:e}", r.tolerance);
            let _ = writeln!(s, "passed          {}", yes(r.passed));
        }
        Report::Sweep(_) => unreachable!("sweeps render as CSV"),
    }
    s
}
