//! CSV reports: `#` metadata lines, one header row, fixed-format rows.

use std::path::Path;

use supaq_core::capacity::CapacityResult;
use supaq_core::superactivation::{fmt12, SweepReport};
use supaq_core::Result;

pub const TOOL: &str = concat!("supaq ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvReport {
    pub metadata: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvReport {
    pub fn new(header: &[&str]) -> Self {
        Self {
            metadata: vec![format!("tool={TOOL}")],
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, line: impl Into<String>) -> &mut Self {
        self.metadata.push(line.into());
        self
    }

    /// Appends a row of numbers.
    pub fn push(&mut self, values: &[f64]) {
        self.push_cells(values.iter().map(|v| fmt12(*v)).collect());
    }

    pub fn push_cells(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "row width must match header");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.metadata {
            for line in m.lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn write_report(report: &CsvReport, path: &Path) -> Result<()> {
    std::fs::write(path, report.render())?;
    Ok(())
}

pub fn sweep_csv(report: &SweepReport) -> CsvReport {
    let mut csv = CsvReport::new(&["p", "r_HH", "r_HA", "r_AA", "r_super", "w_HH", "w_HA", "w_AA"]);
    csv.meta(format!("threshold={}", fmt12(report.threshold)));
    for n in &report.notes {
        csv.meta(n.clone());
    }
    if report.domain.is_empty() {
        csv.meta("domain=none");
    }
    for d in &report.domain {
        csv.meta(format!(
            "domain=[{},{}] inside=[{},{}]",
            fmt12(d.lower),
            fmt12(d.upper),
            fmt12(d.first_inside),
            fmt12(d.last_inside)
        ));
    }
    for r in &report.rows {
        if let Some(why) = &r.flag {
            csv.meta(format!("flagged p={}: {why}", fmt12(r.p)));
        }
        csv.push(&[r.p, r.r_hh, r.r_ha, r.r_aa, r.r_super, r.w_hh, r.w_ha, r.w_aa]);
    }
    csv
}

/// One row per ensemble member; the value and status go to metadata.
pub fn capacity_csv(quantity: &str, channel: &str, n: usize, result: &CapacityResult) -> CsvReport {
    let mut csv = CsvReport::new(&["member", "prob", "entropy"]);
    csv.meta(format!("quantity={quantity}"))
        .meta(format!("channel={channel}"))
        .meta(format!("uses={n}"))
        .meta(format!("value={}", fmt12(result.value)))
        .meta(format!("converged={}", result.converged))
        .meta(format!("iterations={}", result.iterations))
        .meta("value is a lower bound found by local search");
    for (i, (p, s)) in result.ensemble.iter().enumerate() {
        csv.push(&[i as f64, p, supaq_core::qstate::von_neumann_entropy(s)]);
    }
    csv
}
