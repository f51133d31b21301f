use super::{AnalyticsError, DefectRecord, IterationStats};

/// Defects per function point for one iteration.
pub fn defect_density(
    stats: &IterationStats,
    defects: &[DefectRecord],
) -> Result<f64, AnalyticsError> {
    stats.validate()?;
    Ok(stats.defects_of(defects)?.len() as f64 / stats.total_size())
}

/// Defects found per inspection hour for one iteration.
pub fn inspection_efficiency(
    stats: &IterationStats,
    defects: &[DefectRecord],
) -> Result<f64, AnalyticsError> {
    stats.validate()?;
    Ok(stats.defects_of(defects)?.len() as f64 / stats.inspection_effort_hours)
}
