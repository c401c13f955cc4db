use nbspec_core::corpus;
use nbspec_core::suites::{SuiteConfig, SuiteContext, SuiteRegistry};

#[test]
fn every_suite_passes_on_the_corpus() {
    let reg = SuiteRegistry::builtin();
    let cfg = SuiteConfig::default();
    let mut failures = Vec::new();
    for (name, g) in corpus::all() {
        let ctx = SuiteContext { graph: &g, graph_name: name, config: &cfg };
        for suite in reg.names() {
            let rep = reg.run(suite, &ctx).unwrap_or_else(|e| panic!("{name}/{suite}: {e}"));
            for c in rep.checks.iter().filter(|c| !c.passed) {
                failures.push(format!("{name}/{suite}/{}: {} > {}", c.name, c.value, c.bound));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
