//! Computations shared by the HTTP handlers and the command line.

use serde::{Deserialize, Serialize};

use dca_core::analytics::{
    defect_density, detail_histogram, inspection_efficiency, pareto, u_chart, u_chart_per_hour,
    AnalyticsError, ChartDescription, DefectNature, DefectRecord, DetailCount, IterationStats,
    ParetoResult, UChartResult,
};
use dca_core::bn::{EvidenceSet, FALSE, TRUE};
use dca_core::model::{diagnose, DiagnosisView};
use dca_core::session::ModelVersion;

use crate::error::ApiError;

/// Parses `cause=true|false` pairs.
pub fn parse_evidence<S: AsRef<str>>(pairs: &[S]) -> Result<EvidenceSet, ApiError> {
    let mut ev = EvidenceSet::new();
    for p in pairs {
        let p = p.as_ref();
        let (k, v) = p.split_once('=').ok_or_else(|| {
            ApiError::bad_request(format!("evidence {p:?} is not cause=true|false"))
        })?;
        let v = v.trim();
        if v != TRUE && v != FALSE {
            return Err(ApiError::bad_request(format!(
                "evidence {p:?} must be true or false"
            )));
        }
        if ev.insert(k.trim(), v).is_some() {
            return Err(ApiError::bad_request(format!(
                "evidence for {k} given twice"
            )));
        }
    }
    Ok(ev)
}

pub fn diagnose_version(
    version: &ModelVersion,
    problem_id: &str,
    evidence: &EvidenceSet,
) -> Result<DiagnosisView, ApiError> {
    let compiled = version.compiled()?;
    Ok(diagnose(&compiled, &version.network, problem_id, evidence)?)
}

fn of_iteration(defects: &[DefectRecord], iteration: Option<&str>) -> Vec<DefectRecord> {
    defects
        .iter()
        .filter(|d| iteration.is_none_or(|i| d.iteration_id == i))
        .cloned()
        .collect()
}

fn stats_of<'a>(
    stats: &'a [IterationStats],
    iteration: &str,
) -> Result<&'a IterationStats, ApiError> {
    stats
        .iter()
        .find(|s| s.iteration_id == iteration)
        .ok_or_else(|| AnalyticsError::UnknownIteration(iteration.to_string()).into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoReport {
    pub iteration: Option<String>,
    pub result: ParetoResult,
    pub chart: ChartDescription,
}

pub fn pareto_report(
    defects: &[DefectRecord],
    iteration: Option<&str>,
) -> Result<ParetoReport, ApiError> {
    let selected = of_iteration(defects, iteration);
    if let Some(i) = iteration {
        if selected.is_empty() {
            return Err(AnalyticsError::UnknownIteration(i.to_string()).into());
        }
    }
    let result = pareto(&selected)?;
    let title = match iteration {
        Some(i) => format!("Defect natures, {i}"),
        None => "Defect natures".to_string(),
    };
    Ok(ParetoReport {
        iteration: iteration.map(str::to_string),
        chart: result.chart(&title),
        result,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// Defects per function point, one point per unit of an iteration.
    #[default]
    Fp,
    /// Defects per inspection hour, one point per iteration.
    Hours,
}

impl std::str::FromStr for Basis {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fp" => Ok(Basis::Fp),
            "hours" => Ok(Basis::Hours),
            other => Err(ApiError::bad_request(format!(
                "basis must be fp or hours, not {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UChartReport {
    pub iteration: Option<String>,
    pub result: UChartResult,
    pub chart: ChartDescription,
}

pub fn u_chart_report(
    stats: &[IterationStats],
    defects: &[DefectRecord],
    iteration: Option<&str>,
    basis: Basis,
) -> Result<UChartReport, ApiError> {
    let (result, title) = match basis {
        Basis::Fp => {
            let it = iteration.ok_or_else(|| {
                ApiError::bad_request("an iteration is required for the fp basis")
            })?;
            (
                u_chart(stats_of(stats, it)?, defects)?,
                format!("Defects per FP, {it}"),
            )
        }
        Basis::Hours => (
            u_chart_per_hour(stats, defects)?,
            "Defects per inspection hour".to_string(),
        ),
    };
    Ok(UChartReport {
        iteration: iteration.filter(|_| basis == Basis::Fp).map(str::to_string),
        chart: result.chart(&title),
        result,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMetric {
    pub iteration: String,
    pub defects: usize,
    /// Function points for density, hours for efficiency.
    pub denominator: f64,
    pub value: f64,
}

fn metric_table(
    stats: &[IterationStats],
    defects: &[DefectRecord],
    iteration: Option<&str>,
    f: fn(&IterationStats, &[DefectRecord]) -> Result<f64, AnalyticsError>,
    denominator: fn(&IterationStats) -> f64,
) -> Result<Vec<IterationMetric>, ApiError> {
    let selected: Vec<&IterationStats> = match iteration {
        Some(i) => vec![stats_of(stats, i)?],
        None => stats.iter().collect(),
    };
    selected
        .into_iter()
        .map(|s| {
            Ok(IterationMetric {
                iteration: s.iteration_id.clone(),
                defects: s.defects_of(defects)?.len(),
                denominator: denominator(s),
                value: f(s, defects)?,
            })
        })
        .collect()
}

/// Defects per function point for each iteration.
pub fn density_table(
    stats: &[IterationStats],
    defects: &[DefectRecord],
    iteration: Option<&str>,
) -> Result<Vec<IterationMetric>, ApiError> {
    metric_table(
        stats,
        defects,
        iteration,
        defect_density,
        IterationStats::total_size,
    )
}

/// Defects found per inspection hour for each iteration.
pub fn efficiency_table(
    stats: &[IterationStats],
    defects: &[DefectRecord],
    iteration: Option<&str>,
) -> Result<Vec<IterationMetric>, ApiError> {
    metric_table(stats, defects, iteration, inspection_efficiency, |s| {
        s.inspection_effort_hours
    })
}

pub fn details_table(
    defects: &[DefectRecord],
    iteration: Option<&str>,
    nature: Option<&str>,
    min_count: usize,
) -> Result<Vec<DetailCount>, ApiError> {
    let nature: Option<DefectNature> = nature.map(str::parse).transpose()?;
    Ok(detail_histogram(
        &of_iteration(defects, iteration),
        nature,
        min_count,
    ))
}

pub fn render_metrics(title: &str, rows: &[IterationMetric]) -> String {
    let mut out = format!("{title}\n");
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:>6} / {:>8.1} = {:.4}\n",
            r.iteration, r.defects, r.denominator, r.value
        ));
    }
    out
}

pub fn render_pareto(report: &ParetoReport) -> String {
    let mut out = format!(
        "{:<26} {:>6} {:>8} {:>11}\n",
        "nature", "count", "share", "cumulative"
    );
    for e in &report.result.entries {
        out.push_str(&format!(
            "{:<26} {:>6} {:>7.2}% {:>10.2}%\n",
            e.category,
            e.count,
            e.share * 100.0,
            e.cumulative_share * 100.0
        ));
    }
    out.push_str(&format!("{:<26} {:>6}\n", "total", report.result.total));
    out
}

pub fn render_diagnosis(view: &DiagnosisView) -> String {
    let mut out = format!("{} {}\n", view.problem_id, view.problem_label);
    for c in &view.categories {
        out.push_str(&format!("  {:<28} {:.4}\n", c.label, c.probability));
        for cause in &c.causes {
            let mark = cause
                .observed
                .as_deref()
                .map(|o| format!(" [{o}]"))
                .unwrap_or_default();
            out.push_str(&format!(
                "    {:<40} {:.4}{mark}\n",
                cause.label, cause.probability
            ));
        }
    }
    out
}
