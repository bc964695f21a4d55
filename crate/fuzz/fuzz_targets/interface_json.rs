#![no_main]
use libfuzzer_sys::fuzz_target;
use nlphase::fields::PolyhedralInterface;

fn parse(s: &str) -> Option<()> {
    let sigma = PolyhedralInterface::from_json(s).ok()?;
    let _ = nlphase::integralgeom::segments(&sigma);
    Some(())
}

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse(s);
    }
});
