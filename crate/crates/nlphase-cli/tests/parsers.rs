//! Stable-toolchain replay of the fuzz corpus, plus arbitrary input through
//! the same entry points.

use std::fs;
use std::path::PathBuf;

use nlphase::fields::{decode_field, parse_field_header, PolyhedralInterface};
use nlphase::kernels::KernelSpec;
use nlphase_cli::config::ExperimentConfig;
use nlphase_cli::tolerances::Tolerances;
use proptest::prelude::*;

fn feed(target: &str, data: &[u8]) {
    if target == "field_decode" {
        let _ = decode_field(data);
        return;
    }
    let Ok(s) = std::str::from_utf8(data) else { return };
    match target {
        "kernel_descriptor" => {
            if let Ok(spec) = KernelSpec::parse(s) {
                let _ = spec.build();
            }
        }
        "config_document" => {
            let _ = nlphase::config::parse(s);
        }
        "experiment_config" => {
            let _ = ExperimentConfig::from_text(s, None);
        }
        "tolerance_overrides" => {
            let _ = Tolerances::default().with_overrides(s);
        }
        "field_header" => {
            let _ = parse_field_header(s);
        }
        "interface_json" => {
            if let Ok(sigma) = PolyhedralInterface::from_json(s) {
                let _ = nlphase::integralgeom::segments(&sigma);
            }
        }
        other => panic!("unknown target {other}"),
    }
}

const TARGETS: [&str; 7] = ["kernel_descriptor", "config_document", "experiment_config", "tolerance_overrides", "field_header", "field_decode", "interface_json"];

#[test]
fn corpus_seeds_replay() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    for t in TARGETS {
        let seeds: Vec<_> = fs::read_dir(root.join(t)).unwrap().map(|e| e.unwrap().path()).collect();
        assert!(!seeds.is_empty(), "{t} has no seeds");
        for p in seeds {
            feed(t, &fs::read(&p).unwrap());
        }
    }
    let field = fs::read(root.join("field_decode/grid_2d")).unwrap();
    assert_eq!(decode_field(&field).unwrap().values.len(), 8);
    assert!(PolyhedralInterface::from_json(&fs::read_to_string(root.join("interface_json/octagon.json")).unwrap()).is_ok());
    assert!(ExperimentConfig::from_text(&fs::read_to_string(root.join("experiment_config/liminf")).unwrap(), None).is_ok());
    assert!(ExperimentConfig::from_text(&fs::read_to_string(root.join("experiment_config/bad_potential")).unwrap(), None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn text_parsers_never_panic(s in "(?s).{0,200}", idx in 0usize..7) {
        feed(TARGETS[idx], s.as_bytes());
    }

    #[test]
    fn structured_lines_never_panic(lines in prop::collection::vec("\\[?[a-z_]{0,8}\\]? ?=? ?[-0-9a-z.,e ]{0,16}", 0..8), idx in 0usize..7) {
        feed(TARGETS[idx], lines.join("\n").as_bytes());
    }

    #[test]
    fn truncated_fields_are_rejected(cut in 0usize..200) {
        let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
        let field = fs::read(root.join("field_decode/grid_2d")).unwrap();
        let cut = cut.min(field.len() - 1);
        prop_assert!(decode_field(&field[..cut]).is_err());
    }
}
