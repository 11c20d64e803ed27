use meanineq::selftest::{run_selftest, SelftestOptions, SelftestSummary};

use crate::Format;

pub fn run(seed: u64, inject_fault: bool) -> SelftestSummary {
    run_selftest(&SelftestOptions { seed, inject_fault })
}

pub fn render(summary: &SelftestSummary, format: Format) -> String {
    match format {
        Format::Machine => serde_json::to_string_pretty(summary).expect("summary serializes") + "\n",
        Format::Human => {
            let mut out: Vec<String> = summary
                .suites
                .iter()
                .map(|s| format!("{:<18} {:>5} passed {:>5} failed", s.name, s.passed, s.failed))
                .collect();
            out.push(format!(
                "{} ({} passed, {} failed, seed {})",
                if summary.all_passed() { "ok" } else { "FAILED" },
                summary.passed(),
                summary.failed(),
                summary.seed
            ));
            out.join("\n") + "\n"
        }
    }
}
