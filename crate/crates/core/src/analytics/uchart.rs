use serde::{Deserialize, Serialize};

use super::chart::{ChartDescription, ChartSeries};
use super::{AnalyticsError, DefectRecord, IterationStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UChartPoint {
    pub unit_id: String,
    /// Unit size (function points, or hours for the per-hour chart).
    pub n: f64,
    pub defects: usize,
    pub u: f64,
    pub ucl: f64,
    pub lcl: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UChartResult {
    /// `fp` or `hours`.
    pub basis: String,
    pub center_line: f64,
    pub points: Vec<UChartPoint>,
}

impl UChartResult {
    pub fn flagged(&self) -> impl Iterator<Item = &UChartPoint> {
        self.points.iter().filter(|p| p.flagged)
    }

    pub fn chart(&self, title: &str) -> ChartDescription {
        let col = |f: fn(&UChartPoint) -> f64| self.points.iter().map(f).collect();
        ChartDescription {
            kind: "u-chart".into(),
            title: title.into(),
            x_labels: self.points.iter().map(|p| p.unit_id.clone()).collect(),
            series: vec![
                ChartSeries::new("u", col(|p| p.u)),
                ChartSeries::new("ucl", col(|p| p.ucl)),
                ChartSeries::new("lcl", col(|p| p.lcl)),
            ],
            center_line: Some(self.center_line),
            flagged: self.points.iter().map(|p| p.flagged).collect(),
        }
    }
}

fn point(unit_id: &str, n: f64, defects: usize, center: f64) -> UChartPoint {
    let half_width = 3.0 * (center / n).sqrt();
    let ucl = center + half_width;
    let lcl = (center - half_width).max(0.0);
    let u = defects as f64 / n;
    UChartPoint {
        unit_id: unit_id.to_string(),
        n,
        defects,
        u,
        ucl,
        lcl,
        // Points on a limit are in control.
        flagged: u > ucl || u < lcl,
    }
}

/// Defects per size unit for each unit of one iteration. Defects of other
/// iterations are ignored.
pub fn u_chart(
    stats: &IterationStats,
    defects: &[DefectRecord],
) -> Result<UChartResult, AnalyticsError> {
    stats.validate()?;
    let mine = stats.defects_of(defects)?;
    let center = mine.len() as f64 / stats.total_size();
    let points = stats
        .units
        .iter()
        .map(|unit| {
            let count = mine.iter().filter(|d| d.unit_id == unit.unit_id).count();
            point(&unit.unit_id, unit.size_fp, count, center)
        })
        .collect();
    Ok(UChartResult {
        basis: "fp".into(),
        center_line: center,
        points,
    })
}

/// Defects per inspection hour, one point per iteration.
pub fn u_chart_per_hour(
    stats: &[IterationStats],
    defects: &[DefectRecord],
) -> Result<UChartResult, AnalyticsError> {
    for s in stats {
        s.validate()?;
    }
    if let Some(d) = defects
        .iter()
        .find(|d| !stats.iter().any(|s| s.iteration_id == d.iteration_id))
    {
        return Err(AnalyticsError::UnknownIteration(d.iteration_id.clone()));
    }
    let hours: f64 = stats.iter().map(|s| s.inspection_effort_hours).sum();
    if hours <= 0.0 {
        return Err(AnalyticsError::InvalidStats("no iterations".into()));
    }
    let center = defects.len() as f64 / hours;
    let points = stats
        .iter()
        .map(|s| {
            let count = defects
                .iter()
                .filter(|d| d.iteration_id == s.iteration_id)
                .count();
            point(&s.iteration_id, s.inspection_effort_hours, count, center)
        })
        .collect();
    Ok(UChartResult {
        basis: "hours".into(),
        center_line: center,
        points,
    })
}
