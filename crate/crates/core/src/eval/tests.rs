use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn det(x: f64, y: f64, confidence: f64) -> Detection {
    Detection { x, y, confidence }
}

/// 20x20 scene with 3x3 objects centred at (4,4) and (14,14) and a confuser
/// block at the right edge.
fn scene() -> GroundTruth {
    let mut mask = LabelMask::filled(20, 20, Label::Background);
    for (cx, cy) in [(4, 4), (14, 14)] {
        for y in cy - 1..=cy + 1 {
            for x in cx - 1..=cx + 1 {
                mask.set(x, y, Label::Object);
            }
        }
    }
    for y in 0..4 {
        mask.set(19, y, Label::Confuser);
    }
    GroundTruth::new(mask)
}

#[test]
fn instances_and_centroids() {
    let gt = scene();
    assert_eq!(gt.objects().len(), 2);
    assert_eq!(gt.centroids(), vec![(4.0, 4.0), (14.0, 14.0)]);
    assert!(gt.objects().iter().all(|o| o.area == 9));
}

#[test]
fn cueing_examples() {
    let gt = scene();
    let inside = [det(3.0, 3.0, 1.0), det(4.2, 4.4, 0.5), det(5.0, 5.0, 0.1)];
    assert_eq!(match_cueing(&inside, &gt), MatchCounts { tp: 1, fp: 0, fn_: 1 });
    assert_eq!(
        match_cueing(&[det(10.0, 2.0, 1.0)], &gt),
        MatchCounts { tp: 0, fp: 1, fn_: 2 }
    );
    assert_eq!(
        match_cueing(&[det(19.0, 1.0, 1.0)], &gt),
        MatchCounts { tp: 0, fp: 0, fn_: 2 }
    );
}

#[test]
fn nn_examples() {
    assert_eq!(
        match_nn(&[(3.0, 4.0)], &[(3.0, 4.0)], 1e-9),
        MatchCounts { tp: 1, fp: 0, fn_: 0 }
    );
    let objs = [(0.0, 0.0), (10.0, 0.0)];
    let dets = [(1.0, 0.0), (2.0, 0.0), (9.0, 0.0)];
    assert_eq!(match_nn(&dets, &objs, 3.0), MatchCounts { tp: 2, fp: 1, fn_: 0 });
    assert_eq!(
        match_nn(&[(50.0, 50.0), (60.0, 0.0)], &objs, 3.0),
        MatchCounts { tp: 0, fp: 2, fn_: 2 }
    );
}

#[test]
fn counting_examples() {
    let objs = [(1.0, 1.0), (90.0, 5.0), (40.0, 70.0)];
    let diag = 100f64.hypot(100.0);
    let three = [(99.0, 99.0), (0.0, 50.0), (50.0, 0.0)];
    assert_eq!(
        match_counting(&three, &objs, diag),
        MatchCounts { tp: 3, fp: 0, fn_: 0 }
    );
    let five = [(99.0, 99.0), (0.0, 50.0), (50.0, 0.0), (3.0, 3.0), (7.0, 7.0)];
    assert_eq!(match_counting(&five, &objs, diag), MatchCounts { tp: 3, fp: 2, fn_: 0 });
    assert_eq!(match_counting(&[], &objs, diag), MatchCounts { tp: 0, fp: 0, fn_: 3 });
}

/// Repeatedly removes the globally closest admissible pair.
fn oracle_nn(dets: &[(f64, f64)], objs: &[(f64, f64)], r: f64) -> MatchCounts {
    let mut dl: Vec<Option<(f64, f64)>> = dets.iter().copied().map(Some).collect();
    let mut ol: Vec<Option<(f64, f64)>> = objs.iter().copied().map(Some).collect();
    let mut tp = 0;
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, d) in dl.iter().enumerate() {
            for (j, o) in ol.iter().enumerate() {
                if let (Some(d), Some(o)) = (d, o) {
                    let dist = ((d.0 - o.0).powi(2) + (d.1 - o.1).powi(2)).sqrt();
                    if dist <= r && best.is_none_or(|b| dist < b.0) {
                        best = Some((dist, i, j));
                    }
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        dl[i] = None;
        ol[j] = None;
        tp += 1;
    }
    MatchCounts {
        tp,
        fp: dets.len() - tp,
        fn_: objs.len() - tp,
    }
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, lattice: bool) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| {
            if lattice {
                (rng.random_range(0..6) as f64, rng.random_range(0..6) as f64)
            } else {
                (rng.random_range(0.0..20.0), rng.random_range(0.0..20.0))
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]
    #[test]
    fn nn_matches_oracle(seed in any::<u64>(), nd in 0usize..=5, no in 0usize..=5, r in 0.5f64..12.0, lattice in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dets = random_points(&mut rng, nd, lattice);
        let objs = random_points(&mut rng, no, lattice);
        prop_assert_eq!(match_nn(&dets, &objs, r), oracle_nn(&dets, &objs, r));
    }

    #[test]
    fn nn_symmetric_and_monotone(seed in any::<u64>(), nd in 0usize..=8, no in 0usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dets = random_points(&mut rng, nd, false);
        let objs = random_points(&mut rng, no, false);
        let mut prev = 0;
        for r in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0] {
            let c = match_nn(&dets, &objs, r);
            let swapped = match_nn(&objs, &dets, r);
            prop_assert_eq!(c.tp, swapped.tp);
            let mut rd = dets.clone();
            rd.reverse();
            let mut ro = objs.clone();
            ro.rotate_left(no.min(1));
            prop_assert_eq!(match_nn(&rd, &ro, r).tp, c.tp);
            prop_assert!(c.tp >= prev);
            prev = c.tp;
        }
    }
}

#[test]
fn hand_enumerated_sweep() {
    let gt = scene();
    let dets = vec![vec![
        det(4.0, 5.0, 0.6),
        det(4.0, 4.0, 0.9),
        det(10.0, 4.0, 0.8),
        det(14.0, 15.0, 0.7),
    ]];
    let gts = [gt];
    let xy = |c: &RocCurve| {
        c.points
            .iter()
            .map(|p| (p.threshold, p.fp_per_image, p.tp_rate))
            .collect::<Vec<_>>()
    };
    let inf = f64::INFINITY;
    let cue = build_roc(&dets, &gts, Criterion::Cueing, 30.0).unwrap();
    assert_eq!(
        xy(&cue),
        vec![
            (inf, 0.0, 0.0),
            (0.9, 0.0, 0.5),
            (0.8, 1.0, 0.5),
            (0.7, 1.0, 1.0),
            (0.6, 1.0, 1.0)
        ]
    );
    let track = build_roc(&dets, &gts, Criterion::Tracking { radius: 5.0 }, 30.0).unwrap();
    assert_eq!(
        xy(&track),
        vec![
            (inf, 0.0, 0.0),
            (0.9, 0.0, 0.5),
            (0.8, 1.0, 0.5),
            (0.7, 1.0, 1.0),
            (0.6, 2.0, 1.0)
        ]
    );
    let count = build_roc(&dets, &gts, Criterion::Counting, 30.0).unwrap();
    assert_eq!(
        xy(&count),
        vec![
            (inf, 0.0, 0.0),
            (0.9, 0.0, 0.5),
            (0.8, 0.0, 1.0),
            (0.7, 1.0, 1.0),
            (0.6, 2.0, 1.0)
        ]
    );
    let short = build_roc(&dets, &gts, Criterion::Tracking { radius: 5.0 }, 2.0).unwrap();
    assert_eq!(aroc(&short), 0.75);
    let shorter = build_roc(&dets, &gts, Criterion::Tracking { radius: 5.0 }, 1.5).unwrap();
    assert_eq!(shorter.points.len(), 4);
    assert!((aroc(&shorter) - (0.5 + 0.5) / 1.5).abs() < 1e-15);
}

#[test]
fn perfect_and_empty_detectors() {
    let gts = [scene()];
    let perfect = vec![vec![det(4.0, 4.0, 1.0), det(14.0, 14.0, 1.0)]];
    for c in Criterion::ALL {
        let curve = build_roc(&perfect, &gts, c, DEFAULT_U).unwrap();
        assert_eq!(curve.points.last().unwrap().tp_rate, 1.0);
        assert_eq!(curve.points.last().unwrap().fp_per_image, 0.0);
        assert_eq!(aroc(&curve), 1.0);
        let empty = build_roc(&[vec![]], &gts, c, DEFAULT_U).unwrap();
        assert_eq!(empty.points.len(), 1);
        assert_eq!(aroc(&empty), 0.0);
    }
}

#[test]
fn triangle_area_is_half() {
    let curve = RocCurve {
        points: vec![
            RocPoint {
                threshold: f64::INFINITY,
                fp_per_image: 0.0,
                tp_rate: 0.0,
            },
            RocPoint {
                threshold: 0.0,
                fp_per_image: 30.0,
                tp_rate: 1.0,
            },
        ],
        u: 30.0,
    };
    assert_eq!(aroc(&curve), 0.5);
}

#[test]
fn empty_ground_truth_is_an_error() {
    let gt = GroundTruth::new(LabelMask::filled(5, 5, Label::Background));
    assert!(matches!(
        build_roc(&[vec![det(1.0, 1.0, 1.0)]], &[gt], Criterion::Cueing, 30.0),
        Err(Error::EmptyGroundTruth)
    ));
}

fn random_dets(rng: &mut ChaCha8Rng, n: usize) -> Vec<Detection> {
    (0..n)
        .map(|_| {
            det(
                rng.random_range(0.0..19.0),
                rng.random_range(0.0..19.0),
                (rng.random_range(0..40) as f64) / 7.0 - 2.0,
            )
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]
    #[test]
    fn roc_invariants(seed in any::<u64>(), n1 in 0usize..60, n2 in 0usize..60, scale in 0.01f64..100.0, u in 0.5f64..40.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dets = vec![random_dets(&mut rng, n1), random_dets(&mut rng, n2)];
        let gts = [scene(), scene()];
        let scaled: Vec<Vec<Detection>> = dets
            .iter()
            .map(|d| d.iter().map(|x| det(x.x, x.y, x.confidence * scale)).collect())
            .collect();
        for c in Criterion::ALL {
            let curve = build_roc(&dets, &gts, c, u).unwrap();
            for p in curve.points.windows(2) {
                prop_assert!(p[0].fp_per_image <= p[1].fp_per_image);
                prop_assert!(p[0].tp_rate <= p[1].tp_rate);
                prop_assert!(p[0].threshold > p[1].threshold);
            }
            prop_assert!(curve.points.iter().all(|p| p.fp_per_image <= u));
            let a = aroc(&curve);
            prop_assert!((0.0..=1.0).contains(&a));
            let again = build_roc(&scaled, &gts, c, u).unwrap();
            prop_assert!((aroc(&again) - a).abs() <= 1e-12);
            prop_assert_eq!(again.points.len(), curve.points.len());
        }
    }
}

#[test]
fn csv_and_svg_render() {
    let gts = [scene()];
    let curve = build_roc(
        &[vec![det(4.0, 4.0, 1.0), det(9.0, 9.0, 0.5)]],
        &gts,
        Criterion::Cueing,
        30.0,
    )
    .unwrap();
    let csv = roc_csv(&curve);
    assert!(csv.starts_with("threshold,fp_per_image,tp_rate\ninf,0.0,0.0\n1.0,0.0,0.5\n"));
    assert!(csv.trim_end().ends_with(&format!("AROC={:?}", aroc(&curve))));
    let svg = roc_svg(&[("a<b", &curve)]);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("a&lt;b"));
}
