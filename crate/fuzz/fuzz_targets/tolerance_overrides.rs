#![no_main]
use libfuzzer_sys::fuzz_target;
use nlphase_cli::tolerances::Tolerances;

fn parse(s: &str) -> Result<Tolerances, nlphase_cli::config::Diagnostic> {
    Tolerances::default().with_overrides(s)
}

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s);
    }
});
