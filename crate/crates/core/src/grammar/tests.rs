use super::*;
use crate::raster::GreyImage;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FIGURE_PROGRAM: &str = "normDiff(I, erode(I, ellipse(1.5707963267948966, 7, 0.3)))";

fn ops_of(prog: &FeatureProgram) -> Vec<&'static str> {
    prog.nodes().iter().map(|n| n.op.name()).collect()
}

#[test]
fn grammars_are_well_formed() {
    for v in GrammarVariant::ALL {
        Grammar::new(v).check().unwrap();
    }
    let full = Grammar::new(GrammarVariant::Full);
    assert_eq!(full.productions().len(), 8);
    assert_eq!(full.terminals().len(), 4 + 1 + 4 + 1 + 1 + 1 + 1 + 1 + 1);
}

#[test]
fn haar_only_is_single_convolution() {
    let g = Grammar::new(GrammarVariant::HaarOnly);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let p = g.sample(&mut rng, DEFAULT_MAX_DEPTH);
        assert_eq!(ops_of(&p), vec!["I", "convolve"]);
        assert!(g.derives(&p));
    }
}

#[test]
fn sampled_programs_are_derivable_and_respect_exclusions() {
    for v in GrammarVariant::ALL {
        let g = Grammar::new(v);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2_000 {
            let p = g.sample(&mut rng, DEFAULT_MAX_DEPTH);
            assert!(g.derives(&p), "{v}: {}", serialize_program(&p));
            let names = ops_of(&p);
            match v {
                GrammarVariant::NoMorphology => {
                    assert!(!names
                        .iter()
                        .any(|n| ["erode", "dilate", "open", "close", "ptile"].contains(n)))
                }
                GrammarVariant::NoHaar => assert!(!names.contains(&"convolve")),
                _ => {}
            }
        }
    }
}

#[test]
fn recognizer_rejects_foreign_programs() {
    let full = Grammar::new(GrammarVariant::Full);
    // a bare image is not a feature
    assert!(!full.derives(&FeatureProgram::identity()));
    // sigmoid(sigmoid(sigmoid(I))) needs three NL levels; Feature allows two
    let p = parse_program("sigmoid(sigmoid(sigmoid(I, 0.0, 0.1), 0.0, 0.1), 0.0, 0.1)").unwrap();
    assert!(!full.derives(&p));
    let p = parse_program("sigmoid(sigmoid(I, 0.0, 0.1), 0.0, 0.1)").unwrap();
    assert!(full.derives(&p));
    // blend is not an NLBinary operator and its inputs here are not Unary(I)
    let p = parse_program("blend(ggm(I, 1.0), ggm(ggm(I, 1.0), 1.0))").unwrap();
    assert!(!full.derives(&p));
    let erode = parse_program(FIGURE_PROGRAM).unwrap();
    assert!(full.derives(&erode));
    assert!(!Grammar::new(GrammarVariant::NoMorphology).derives(&erode));
    let haar = parse_program("convolve(I, haar(h2, 2, 3, 0, 0))").unwrap();
    assert!(!Grammar::new(GrammarVariant::NoHaar).derives(&haar));
    assert!(Grammar::new(GrammarVariant::HaarOnly).derives(&haar));
}

#[test]
fn sampling_is_deterministic_per_seed() {
    let g = Grammar::new(GrammarVariant::Full);
    for seed in 0..50 {
        let a = g.sample(&mut ChaCha8Rng::seed_from_u64(seed), 8);
        let b = g.sample(&mut ChaCha8Rng::seed_from_u64(seed), 8);
        assert_eq!(a, b);
    }
}

/// Nested `Binary(I, Compound(I))` chain length along the second input.
fn compound_chain(prog: &FeatureProgram) -> usize {
    let mut n = prog.root();
    let mut depth = 0;
    while let Op::Binary(_) = prog.nodes()[n].op {
        if prog.nodes()[n].inputs[0] != 0 {
            break;
        }
        depth += 1;
        n = prog.nodes()[n].inputs[1];
    }
    depth
}

#[test]
fn max_depth_bounds_compound_recursion() {
    let g = Grammar::new(GrammarVariant::Full);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut deepest = 0;
    for _ in 0..5_000 {
        let p = g.sample(&mut rng, 3);
        deepest = deepest.max(compound_chain(&p));
        assert!(compound_chain(&p) <= 2);
    }
    assert_eq!(deepest, 2);
    for _ in 0..500 {
        assert_eq!(compound_chain(&g.sample(&mut rng, 1)), 0);
    }
}

#[test]
fn figure_program_shape_is_producible() {
    let g = Grammar::new(GrammarVariant::Full);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let found = (0..200_000).any(|_| {
        let p = g.sample(&mut rng, DEFAULT_MAX_DEPTH);
        ops_of(&p) == ["I", "erode", "normDiff"] && p.nodes()[2].inputs == [0, 1] && p.nodes()[1].inputs == [0]
    });
    assert!(found);
}

#[test]
fn identity_program_returns_input() {
    let img = GreyImage::from_rows(&[[0.1, 0.2], [0.3, 0.4]]);
    assert_eq!(FeatureProgram::identity().evaluate(&img).unwrap(), img);
}

#[test]
fn figure_program_on_constant_is_zero() {
    let p = parse_program(FIGURE_PROGRAM).unwrap();
    let out = p.evaluate(&GreyImage::filled(16, 16, 0.4)).unwrap();
    assert!(out.data().iter().all(|&v| v == 0.0));
}

#[test]
fn shared_nodes_are_evaluated_once() {
    let p = parse_program("blend($1:ggm(I, 1.5), sigmoid($1, 0.2, 0.0))").unwrap();
    assert_eq!(p.len(), 4);
    assert_eq!(p.fan_out()[1], 2);
    let mut cache = EvalCache::default();
    let img = GreyImage::from_fn(10, 10, |x, y| ((x * y) % 7) as f64 / 7.0);
    let out = p.evaluate_with(&img, &mut cache).unwrap();
    assert_eq!(cache.invocations, 3);
    let g = crate::ops::ggm(&img, 1.5);
    let expected = crate::ops::apply_binary(BinaryKind::Blend, &g, &crate::ops::apply_sigmoid(&g, 0.2, 0.0)).unwrap();
    assert_eq!(out, expected);
    assert_eq!(serialize_program(&p), "blend($1:ggm(I, 1.5), sigmoid($1, 0.2, 0.0))");
}

#[test]
fn round_trips_fuzzed_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for v in GrammarVariant::ALL {
        let g = Grammar::new(v);
        for _ in 0..250 {
            let p = g.sample(&mut rng, DEFAULT_MAX_DEPTH);
            let text = serialize_program(&p);
            assert_eq!(parse_program(&text).unwrap(), p, "{text}");
        }
    }
}

#[test]
fn figure_program_round_trip_is_bit_identical() {
    let p = parse_program(FIGURE_PROGRAM).unwrap();
    let again = parse_program(&serialize_program(&p)).unwrap();
    let img = GreyImage::from_fn(24, 24, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0);
    assert_eq!(p.evaluate(&img).unwrap().data(), again.evaluate(&img).unwrap().data());
}

#[test]
fn parse_errors_carry_position() {
    match parse_program("erode(I") {
        Err(Error::Parse { line: 1, column: 8, .. }) => {}
        other => panic!("{other:?}"),
    }
    match parse_program("mult(I,\n  frob(I, 1))") {
        Err(Error::Parse {
            line: 2,
            column: 3,
            message,
        }) => assert!(message.contains("frob")),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_program("ggm(I, 50.0)"), Err(Error::Parse { .. })));
    assert!(matches!(parse_program("blend($4, I)"), Err(Error::Parse { .. })));
    assert!(matches!(parse_program("ggm(I, 1.0) x"), Err(Error::Parse { .. })));
}

#[test]
fn rejects_cycles_and_bad_arity() {
    let nodes = vec![
        Node {
            op: Op::Input,
            inputs: vec![],
        },
        Node {
            op: Op::Binary(BinaryKind::Mult),
            inputs: vec![0, 2],
        },
        Node {
            op: Op::Binary(BinaryKind::Mult),
            inputs: vec![0, 1],
        },
    ];
    assert!(FeatureProgram::from_nodes(nodes, 2).is_err());
    let nodes = vec![
        Node {
            op: Op::Input,
            inputs: vec![],
        },
        Node {
            op: Op::Binary(BinaryKind::Mult),
            inputs: vec![0],
        },
    ];
    assert!(FeatureProgram::from_nodes(nodes, 1).is_err());
}
