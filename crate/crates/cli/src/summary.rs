//! Result table printed by `run-script`.

use std::fmt::Write;

/// Nearest-rank percentile of `sorted` (ascending). `None` when empty.
pub fn percentile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RequirementResult {
    pub id: String,
    pub description: String,
    pub passed: bool,
    pub actions: usize,
    /// Endpoints that received at least one CONTROL.
    pub endpoints: usize,
    /// Dispatch-to-ACK latencies of this requirement's deliveries.
    pub latencies_ms: Vec<f64>,
    /// Why it failed, one line each.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptSummary {
    pub results: Vec<RequirementResult>,
}

impl ScriptSummary {
    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| r.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.results.len()
    }

    pub fn latencies(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.results.iter().flat_map(|r| r.latencies_ms.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }

    pub fn render(&self) -> String {
        let ms = |v: Option<f64>| v.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
        let id_w = self.results.iter().map(|r| r.id.len()).max().unwrap_or(0).max(3);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<id_w$}  {:<6}  {:>7}  {:>9}  {:>10}  {:>10}  DESC",
            "REQ", "RESULT", "ACTIONS", "ENDPOINTS", "ACK_P50_MS", "ACK_MAX_MS"
        );
        for r in &self.results {
            let mut lat = r.latencies_ms.clone();
            lat.sort_by(f64::total_cmp);
            let _ = writeln!(
                out,
                "{:<id_w$}  {:<6}  {:>7}  {:>9}  {:>10}  {:>10}  {}",
                r.id,
                if r.passed { "PASS" } else { "FAIL" },
                r.actions,
                r.endpoints,
                ms(percentile(&lat, 50.0)),
                ms(lat.last().copied()),
                r.description
            );
        }
        for r in self.results.iter().filter(|r| !r.passed) {
            for f in &r.failures {
                let _ = writeln!(out, "{}: {f}", r.id);
            }
        }
        let all = self.latencies();
        let _ = writeln!(
            out,
            "ack latency over {} deliveries: p50 {} ms, p99 {} ms, max {} ms",
            all.len(),
            ms(percentile(&all, 50.0)),
            ms(percentile(&all, 99.0)),
            ms(all.last().copied())
        );
        let _ = write!(out, "{}/{} requirements passed", self.passed(), self.results.len());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0), Some(5.0));
        assert_eq!(percentile(&v, 99.0), Some(10.0));
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&[3.0], 50.0), Some(3.0));
        assert_eq!(percentile(&[], 50.0), None);
    }

    #[test]
    fn table_layout() {
        let s = ScriptSummary {
            results: vec![
                RequirementResult {
                    id: "R1".into(),
                    description: "first".into(),
                    passed: true,
                    actions: 2,
                    endpoints: 2,
                    latencies_ms: vec![2.0, 1.0],
                    failures: vec![],
                },
                RequirementResult {
                    id: "R2".into(),
                    description: "second".into(),
                    passed: false,
                    actions: 1,
                    endpoints: 1,
                    latencies_ms: vec![],
                    failures: vec!["tablet hr.committed: want 72, got 7".into()],
                },
            ],
        };
        let text = s.render();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("REQ  RESULT  ACTIONS  ENDPOINTS  ACK_P50_MS  ACK_MAX_MS  DESC"));
        assert_eq!(lines[1], "R1   PASS          2          2        1.00        2.00  first");
        assert_eq!(lines[2], "R2   FAIL          1          1           -           -  second");
        assert_eq!(lines[3], "R2: tablet hr.committed: want 72, got 7");
        assert_eq!(lines.last().unwrap(), &"1/2 requirements passed");
    }
}
