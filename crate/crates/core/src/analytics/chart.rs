use std::fmt::Write;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartSeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl ChartSeries {
    pub fn new(name: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            values,
        }
    }
}

/// Plain-data chart: one x label per point, any number of series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDescription {
    pub kind: String,
    pub title: String,
    pub x_labels: Vec<String>,
    pub series: Vec<ChartSeries>,
    pub center_line: Option<f64>,
    pub flagged: Vec<bool>,
}

const BAR_WIDTH: usize = 40;

impl ChartDescription {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.values.as_slice())
    }

    /// Horizontal bars for the first series, remaining series as columns.
    /// Flagged points are marked with `*`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{}", self.title).unwrap();
        if let Some(c) = self.center_line {
            writeln!(out, "center line: {c:.4}").unwrap();
        }
        let Some(main) = self.series.first() else {
            return out;
        };
        let label_width = self.x_labels.iter().map(String::len).max().unwrap_or(0);
        let scale = main
            .values
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(0.0f64, f64::max);
        let header: Vec<String> = self
            .series
            .iter()
            .skip(1)
            .map(|s| format!("{:>10}", s.name))
            .collect();
        writeln!(
            out,
            "{:label_width$}  {:BAR_WIDTH$}  {:>10}{}",
            "",
            "",
            main.name,
            header.join("")
        )
        .unwrap();
        for (i, label) in self.x_labels.iter().enumerate() {
            let v = main.values[i];
            let len = if scale > 0.0 {
                ((v / scale) * BAR_WIDTH as f64).round() as usize
            } else {
                0
            };
            let bar = "#".repeat(len.min(BAR_WIDTH));
            let rest: Vec<String> = self
                .series
                .iter()
                .skip(1)
                .map(|s| format!("{:>10.4}", s.values[i]))
                .collect();
            let flag = if self.flagged.get(i).copied().unwrap_or(false) {
                "  *"
            } else {
                ""
            };
            writeln!(
                out,
                "{label:label_width$}  {bar:BAR_WIDTH$}  {v:>10.4}{}{flag}",
                rest.join("")
            )
            .unwrap();
        }
        out
    }
}
