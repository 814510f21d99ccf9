use ajo::formats::{answer_json, chain_text, graph_dot, graph_json, parse_chain_text, parse_digit_grid, parse_graph_json, parse_pgm};
use ajo::AjoError;
use ajo_core::chain::{brain_spec, build_chain, load_brain_model, ChainOptions};
use ajo_core::fractal::{decompose, GridImage};
use ajo_core::query::Answer;
use proptest::prelude::*;

#[test]
fn brain_chain_file_roundtrips() {
    let spec = brain_spec();
    let text = chain_text(&spec);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 12 * 3 * 3);
    let back = parse_chain_text(&text, "brain").unwrap();
    assert_eq!(back, spec);
    assert_eq!(chain_text(&back), text);
    assert_eq!(build_chain(&back, ChainOptions::default()).unwrap(), load_brain_model());
}

#[test]
fn chain_file_errors_name_the_line() {
    let text = "# header\n1 1 lower 1e3 2e3\n1 1 middle 2e3 3e3\n";
    match parse_chain_text(text, "x.chain") {
        Err(AjoError::Parse { line, message, .. }) => {
            assert_eq!(line, 3);
            assert!(message.contains("middle"));
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_chain_text("1 1 lower 1e3\n", "x"), Err(AjoError::Parse { line: 1, .. })));
    // a triplet missing its upper band is a chain error, not a parse error
    assert!(matches!(parse_chain_text("1 1 lower 1 2\n1 1 self 2 3\n", "x"), Err(AjoError::Chain(_))));
}

#[test]
fn pgm_and_digit_grid() {
    let pgm = "P2\n# a comment\n3 2\n255\n0 255 0\n128 0 255\n";
    let img = parse_pgm(pgm, "a.pgm").unwrap();
    assert_eq!((img.width(), img.height()), (3, 2));
    assert_eq!(img.get(1, 0), 1.0);
    assert!((img.get(0, 1) - 128.0 / 255.0).abs() < 1e-15);
    assert!(matches!(parse_pgm("P2\n3 2\n255\n0 1 2\n", "b.pgm"), Err(AjoError::Parse { .. })));
    assert!(matches!(parse_pgm("P5\n1 1\n1\n0\n", "c.pgm"), Err(AjoError::Parse { line: 1, .. })));
    assert!(matches!(parse_pgm("P2\n1 1\n4\n9\n", "d.pgm"), Err(AjoError::Parse { .. })));

    let grid = parse_digit_grid("090\n909\n", "g").unwrap();
    assert_eq!((grid.width(), grid.height()), (3, 2));
    assert_eq!(grid.get(1, 0), 1.0);
    assert_eq!(grid.get(0, 0), 0.0);
    assert!(matches!(parse_digit_grid("09\n9\n", "g"), Err(AjoError::Parse { line: 2, .. })));
    assert!(matches!(parse_digit_grid("0x\n", "g"), Err(AjoError::Parse { line: 1, .. })));
}

fn square_image() -> GridImage {
    let mut text = String::new();
    for y in 0..24 {
        for x in 0..24 {
            let on = (4..=19).contains(&x) && (4..=19).contains(&y) && (x == 4 || x == 19 || y == 4 || y == 19);
            text.push(if on { '9' } else { '0' });
        }
        text.push('\n');
    }
    parse_digit_grid(&text, "square").unwrap()
}

#[test]
fn graph_json_roundtrip_and_version() {
    let g = decompose(&square_image()).unwrap();
    assert!(!g.is_empty());
    let json = graph_json(&g).unwrap();
    assert!(json.contains("\"schema_version\": 1"));
    assert_eq!(parse_graph_json(&json, "g.json").unwrap(), g);
    let future = json.replace("\"schema_version\": 1", "\"schema_version\": 2");
    assert!(matches!(parse_graph_json(&future, "g.json"), Err(AjoError::Version { .. })));
    let dot = graph_dot(&g);
    assert!(dot.starts_with("digraph seeds {") && dot.contains("n0 [label=\"square"));
}

#[test]
fn answer_json_carries_metadata() {
    let g = decompose(&square_image()).unwrap();
    let a = Answer { graph: g, matched: vec![], cycles_used: 2, converged: true, rounds: 2 };
    let v: serde_json::Value = serde_json::from_str(&answer_json(&a).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["metadata"]["cycles_used"], 2);
    assert_eq!(v["metadata"]["converged"], true);
    assert!(v["graph"]["seeds"].is_array());
}

proptest! {
    #[test]
    fn digit_grid_roundtrip(rows in proptest::collection::vec(proptest::collection::vec(0u32..10, 5), 1..6)) {
        let text: String = rows.iter().map(|r| r.iter().map(|d| char::from_digit(*d, 10).unwrap()).collect::<String>() + "\n").collect();
        let img = parse_digit_grid(&text, "p").unwrap();
        for (y, r) in rows.iter().enumerate() {
            for (x, d) in r.iter().enumerate() {
                prop_assert_eq!(img.get(x, y), *d as f64 / 9.0);
            }
        }
    }

    #[test]
    fn chain_file_roundtrips_scaled_brain(k in 1e-3f64..1e3) {
        let mut spec = brain_spec();
        for l in &mut spec.layers {
            for t in &mut l.triplets {
                for b in t.iter_mut() {
                    b.lo *= k;
                    b.hi *= k;
                }
            }
        }
        let text = chain_text(&spec);
        prop_assert_eq!(parse_chain_text(&text, "p").unwrap(), spec);
    }
}
