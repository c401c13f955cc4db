use std::fmt::Write;

use nbspec_core::graph::GraphSummary;
use nbspec_core::suites::{SuiteConfig, SuiteReport};
use nbspec_core::Error;

use crate::Format;

pub const SCHEMA: &str = "nbspec/1";

pub struct GraphRun {
    pub name: String,
    pub path: String,
    pub summary: GraphSummary,
    pub reports: Vec<SuiteReport>,
}

impl GraphRun {
    fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }
}

pub struct Output<'a> {
    pub command: &'a str,
    pub config: &'a SuiteConfig,
    pub graphs: Vec<GraphRun>,
}

impl Output<'_> {
    pub fn passed(&self) -> bool {
        self.graphs.iter().all(GraphRun::passed)
    }

    pub fn render(&self, format: Format) -> Result<String, Error> {
        Ok(match format {
            Format::Json => self.json()?,
            Format::Csv => self.csv(),
            Format::Text => self.text(),
        })
    }

    fn json(&self) -> Result<String, Error> {
        let graphs: Vec<_> = self
            .graphs
            .iter()
            .map(|g| {
                let suites: serde_json::Map<_, _> = g
                    .reports
                    .iter()
                    .map(|r| Ok((r.suite.clone(), serde_json::to_value(r)?)))
                    .collect::<Result<_, serde_json::Error>>()?;
                Ok(serde_json::json!({
                    "name": g.name,
                    "path": g.path,
                    "summary": g.summary,
                    "headline": g.summary.headline(),
                    "passed": g.passed(),
                    "suites": suites,
                }))
            })
            .collect::<Result<_, serde_json::Error>>()?;
        let doc = serde_json::json!({
            "schema": SCHEMA,
            "command": self.command,
            "config": self.config,
            "graphs": graphs,
            "passed": self.passed(),
        });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    fn csv(&self) -> String {
        let mut s = String::from("graph,suite,check,value,bound,passed\n");
        for g in &self.graphs {
            for r in &g.reports {
                for c in &r.checks {
                    let _ = writeln!(s, "{},{},{},{:e},{:e},{}", g.name, r.suite, c.name, c.value, c.bound, c.passed);
                }
            }
        }
        s
    }

    fn text(&self) -> String {
        let mut s = String::new();
        for g in &self.graphs {
            let _ = writeln!(s, "{}: {}", g.name, g.summary.headline());
            for r in &g.reports {
                let ok = r.checks.iter().filter(|c| c.passed).count();
                let verdict = if r.passed { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "  [{verdict}] {} ({ok}/{} checks)", r.suite, r.checks.len());
                for line in &r.summary {
                    let _ = writeln!(s, "    {line}");
                }
                for c in r.checks.iter().filter(|c| !c.passed) {
                    let _ = writeln!(s, "    violated {}: value {:e}, bound {:e}", c.name, c.value, c.bound);
                }
            }
        }
        if self.graphs.iter().any(|g| !g.reports.is_empty()) {
            let _ = writeln!(s, "{}", if self.passed() { "all checks passed" } else { "some checks FAILED" });
        }
        s
    }
}
