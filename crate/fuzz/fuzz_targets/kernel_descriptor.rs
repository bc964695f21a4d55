#![no_main]
use libfuzzer_sys::fuzz_target;
use nlphase::kernels::KernelSpec;

fn parse(s: &str) -> Option<()> {
    let spec = KernelSpec::parse(s).ok()?;
    let _ = spec.build();
    Some(())
}

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s);
    }
});
