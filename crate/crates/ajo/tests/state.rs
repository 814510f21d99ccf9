use ajo::state::{load_state, parse_state, save_state, state_text};
use ajo::AjoError;
use ajo_core::chain::{load_brain_model, PeakRef};
use ajo_core::column::{Argument, ArgumentColumn, ColumnConfig, WriteMode};
use ajo_core::fractal::{Channel, FractalSeed, PrimitiveKind, SeedGraph};
use ajo_core::query::SeedMap;
use proptest::prelude::*;

fn p(layer: usize, peak: u32) -> PeakRef {
    PeakRef::new(layer, peak)
}

fn five_writes() -> ArgumentColumn {
    let mut c = ArgumentColumn::new(load_brain_model(), ColumnConfig::default()).unwrap();
    for k in 0..5u32 {
        let a = Argument::new([p(2, k)], [p(2, 30 + k), p(3, k)]).with_label(format!("rule \"{k}\", spaced"));
        c.write_argument(a, WriteMode::Single).unwrap();
    }
    c
}

#[test]
fn save_load_save_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.txt");
    let c = five_writes();
    save_state(&path, &c).unwrap();
    let (chain, back) = load_state(&path).unwrap();
    assert_eq!(&chain, c.pristine());
    assert_eq!(back, c);
    assert_eq!(back.coupling_rule_count(), 26);
    let again = dir.path().join("again.txt");
    save_state(&again, &back).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn removal_gaps_and_graphs_survive() {
    let chain = load_brain_model();
    let map = SeedMap::new(&chain).unwrap();
    let mut c = ArgumentColumn::new(chain, ColumnConfig::default()).unwrap();
    let seed = |kind, x: f64| FractalSeed {
        kind,
        center: (x, 10.0),
        scale: 5.0,
        orientation: 0.0,
        layer: 1,
        score: 0.9,
        group: 0,
        extent: (0, 5, 15, 15),
        projected: false,
    };
    let g = |kind, x| SeedGraph { seeds: vec![seed(kind, x)], edges: vec![], channel: Channel::Visual, width: 32, height: 32 };
    c.write_argument(map.argument(g(PrimitiveKind::Circle, 8.0), g(PrimitiveKind::Square, 8.0)), WriteMode::Paired).unwrap();
    c.write_argument(map.argument(g(PrimitiveKind::Triangle, 9.0), g(PrimitiveKind::Circle, 9.0)), WriteMode::Paired).unwrap();
    c.write_argument(Argument::new([p(7, 1)], [p(7, 2)]), WriteMode::Paired).unwrap();
    c.remove_argument(2).unwrap();
    let text = state_text(&c).unwrap();
    let (_, back) = parse_state(&text, "s").unwrap();
    assert_eq!(back, c);
    assert_eq!(back.next_id(), 4);
    assert_eq!(state_text(&back).unwrap(), text);
}

#[test]
fn truncated_file_names_the_line() {
    let text = state_text(&five_writes()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // drop the last argument and the end marker
    let cut = lines[..lines.len() - 2].join("\n");
    match parse_state(&cut, "cut.txt") {
        Err(AjoError::Parse { line, message, .. }) => {
            assert_eq!(line, lines.len() - 1);
            assert!(message.contains("ends early"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    let header_only = lines[..3].join("\n");
    assert!(matches!(parse_state(&header_only, "h"), Err(AjoError::Parse { line: 4, .. })));
    let short_count = text.replace("arguments 5", "arguments 6");
    assert!(matches!(parse_state(&short_count, "c"), Err(AjoError::Parse { .. })));
}

#[test]
fn version_and_hash_are_checked() {
    let text = state_text(&five_writes()).unwrap();
    assert!(matches!(parse_state(&text.replacen("ajo-state v1", "ajo-state v9", 1), "v"), Err(AjoError::Version { .. })));
    assert!(matches!(parse_state("hello\n", "x"), Err(AjoError::Parse { line: 1, .. })));
    // nudge one band edge: the stored fingerprint no longer matches
    let first_band = text.lines().find(|l| l.starts_with("band ")).unwrap();
    let mut f: Vec<String> = first_band.split(' ').map(String::from).collect();
    let hi: f64 = f[5].parse().unwrap();
    f[5] = format!("{:e}", hi * 1.000001);
    let tampered = text.replacen(first_band, &f.join(" "), 1);
    assert!(matches!(parse_state(&tampered, "t"), Err(AjoError::Parse { line: 2, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_columns_roundtrip(writes in proptest::collection::vec((0usize..12, 0u32..40, 0u32..40), 1..8), paired in any::<bool>()) {
        let mode = if paired { WriteMode::Paired } else { WriteMode::Single };
        let mut c = ArgumentColumn::new(load_brain_model(), ColumnConfig::default()).unwrap();
        for (l, a, b) in writes {
            let _ = c.write_argument(Argument::new([p(l, a)], [p(l, b), p((l + 1) % 12, a)]), mode);
        }
        let text = state_text(&c).unwrap();
        let (_, back) = parse_state(&text, "p").unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(state_text(&back).unwrap(), text);
    }
}
