#![no_main]
use libfuzzer_sys::fuzz_target;
use nlphase_cli::config::ExperimentConfig;

fn parse(s: &str) -> Result<ExperimentConfig, nlphase_cli::config::Diagnostic> {
    ExperimentConfig::from_text(s, None)
}

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s);
    }
});
