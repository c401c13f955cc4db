//! Verification suites behind a common trait, looked up by name.
//!
//! Each suite runs against one graph and returns a [`SuiteReport`] made of
//! named checks. The CLI picks suites from a [`SuiteRegistry`] at runtime.

mod builtin;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::C64;
use crate::spectral::SpectrumOptions;

pub use builtin::{
    BoundsSuite, CorrespondSuite, CoverSuite, DegeneracySuite, DualSuite, IdentitySuite, LocConstSuite,
    SpectrumSuite,
};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteConfig {
    pub theta: f64,
    /// Deepest transfer-matrix level examined.
    pub depth: usize,
    pub tol: f64,
    pub seed: u64,
    #[serde(serialize_with = "crate::ser::complex_vec")]
    pub z_values: Vec<C64>,
    pub spectrum: SpectrumOptions,
    /// Random spectral parameters per graph for the operator identity.
    pub random_z: usize,
    /// Values of θ for the contraction bounds; `theta` is always added.
    pub bounds_thetas: Vec<f64>,
    pub bounds_trials: usize,
    pub duality_pairs: usize,
    pub synthetic_trials: usize,
    pub measure_depth: usize,
    pub gelfand_n: usize,
    pub submult_max: usize,
    pub cover_base: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            theta: 0.25,
            depth: 4,
            tol: 1e-8,
            seed: 42,
            z_values: Vec::new(),
            spectrum: SpectrumOptions::default(),
            random_z: 20,
            bounds_thetas: vec![0.2, 0.5, 0.8],
            bounds_trials: 100,
            duality_pairs: 50,
            synthetic_trials: 100,
            measure_depth: 6,
            gelfand_n: 12,
            submult_max: 10,
            cover_base: 0,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::Config(format!("--theta must lie in (0, 1), got {}", self.theta)));
        }
        if !(2..=crate::path_space::MAX_TRANSFER_DEPTH).contains(&self.depth) {
            return Err(Error::Config(format!(
                "--depth must lie in 2..={}, got {}",
                crate::path_space::MAX_TRANSFER_DEPTH,
                self.depth
            )));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("--tol must be positive, got {}", self.tol)));
        }
        if self.z_values.iter().any(|z| z.norm() == 0.0 || !z.is_finite()) {
            return Err(Error::ZeroParameter);
        }
        Ok(())
    }
}

/// One named assertion with its observed value and the bound it is held to.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, passed: value <= bound }
    }

    /// Passes when `value == 0` exactly.
    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, bound: 0.0, passed: value == 0.0 }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 0.0 } else { 1.0 }, bound: 0.0, passed: ok }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub graph: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub summary: Vec<String>,
    pub details: serde_json::Value,
}

impl SuiteReport {
    pub fn new(suite: &str, graph: &str, checks: Vec<Check>, summary: Vec<String>, details: serde_json::Value) -> Self {
        Self {
            suite: suite.to_string(),
            graph: graph.to_string(),
            passed: checks.iter().all(|c| c.passed),
            checks,
            summary,
            details,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub struct SuiteContext<'a> {
    pub graph: &'a Graph,
    pub graph_name: &'a str,
    pub config: &'a SuiteConfig,
}

impl SuiteContext<'_> {
    /// A generator seeded from the run seed, the graph name and `tag`, so
    /// that results do not depend on which other suites ran.
    pub fn rng(&self, tag: &str) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.config.seed ^ fnv1a(self.graph_name) ^ fnv1a(tag).rotate_left(17))
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

pub trait Suite: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport>;
}

pub struct SuiteRegistry {
    suites: BTreeMap<&'static str, Box<dyn Suite>>,
    order: Vec<&'static str>,
}

impl SuiteRegistry {
    pub fn empty() -> Self {
        Self { suites: BTreeMap::new(), order: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(IdentitySuite));
        r.register(Box::new(SpectrumSuite));
        r.register(Box::new(CorrespondSuite));
        r.register(Box::new(LocConstSuite));
        r.register(Box::new(BoundsSuite));
        r.register(Box::new(DualSuite));
        r.register(Box::new(DegeneracySuite));
        r.register(Box::new(CoverSuite));
        r
    }

    /// Adds a suite, replacing any previous one with the same name.
    pub fn register(&mut self, suite: Box<dyn Suite>) {
        let name = suite.name();
        if self.suites.insert(name, suite).is_none() {
            self.order.push(name);
        }
    }

    pub fn get(&self, name: &str) -> Result<&dyn Suite> {
        self.suites.get(name).map(|b| b.as_ref()).ok_or_else(|| Error::UnknownSuite(name.to_string()))
    }

    /// Names in registration order.
    pub fn names(&self) -> &[&'static str] {
        &self.order
    }

    pub fn run(&self, name: &str, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
        self.get(name)?.run(ctx)
    }
}

impl Default for SuiteRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::corpus;

    struct Always;

    impl Suite for Always {
        fn name(&self) -> &'static str {
            "always"
        }
        fn description(&self) -> &'static str {
            "passes"
        }
        fn run(&self, ctx: &SuiteContext<'_>) -> Result<SuiteReport> {
            Ok(SuiteReport::new("always", ctx.graph_name, vec![Check::holds("ok", true)], vec![], serde_json::Value::Null))
        }
    }

    #[test]
    fn registry_lookup_and_order() {
        let mut r = SuiteRegistry::builtin();
        assert_eq!(r.names()[0], "identity");
        assert_eq!(r.names().len(), 8);
        assert!(matches!(r.get("nope"), Err(Error::UnknownSuite(_))));
        r.register(Box::new(Always));
        let g = corpus::graph("c3").unwrap();
        let cfg = SuiteConfig::default();
        let ctx = SuiteContext { graph: &g, graph_name: "c3", config: &cfg };
        assert!(r.run("always", &ctx).unwrap().passed);
        r.register(Box::new(Always));
        assert_eq!(r.names().len(), 9);
    }

    #[test]
    fn rng_streams_are_stable_and_distinct() {
        use rand::Rng;
        let g = corpus::graph("c3").unwrap();
        let cfg = SuiteConfig::default();
        let ctx = SuiteContext { graph: &g, graph_name: "c3", config: &cfg };
        let a: u64 = ctx.rng("x").random();
        let b: u64 = ctx.rng("x").random();
        let c: u64 = ctx.rng("y").random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn config_validation() {
        let mut c = SuiteConfig::default();
        assert!(c.validate().is_ok());
        c.theta = 1.0;
        assert!(c.validate().is_err());
        c = SuiteConfig { depth: 7, ..Default::default() };
        assert!(c.validate().is_err());
        c = SuiteConfig { z_values: vec![C64::new(0.0, 0.0)], ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::ZeroParameter)));
    }

    #[test]
    fn check_constructors() {
        assert!(Check::at_most("a", 1e-12, 1e-10).passed);
        assert!(!Check::at_most("a", f64::NAN, 1e-10).passed);
        assert!(Check::exact("b", 0.0).passed);
        assert!(!Check::exact("b", 1e-300).passed);
    }
}
