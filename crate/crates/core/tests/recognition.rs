use actrec_core::evaluation::{feature_sweep, ActivityClip, ActivityDataset, Protocol};
use actrec_core::sequence::{classify_1nn, FeatureSequence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Three trajectory shapes in the plane, sampled with jitter and a random
// phase/speed so probes never coincide with templates.
fn trajectory(class: usize, len: usize, rng: &mut ChaCha8Rng) -> FeatureSequence {
    let phase = rng.random_range(0.0..0.3);
    let speed = rng.random_range(0.8..1.2);
    let frames = (0..len)
        .map(|t| {
            let s = phase + speed * t as f64 / len as f64;
            let (x, y) = match class {
                0 => (s * 4.0, 0.0),
                1 => (0.0, s * 4.0),
                _ => ((s * 6.0).cos() * 2.0, (s * 6.0).sin() * 2.0),
            };
            vec![x + rng.random_range(-0.1..0.1), y + rng.random_range(-0.1..0.1)]
        })
        .collect();
    FeatureSequence::new(frames).with_label(class)
}

#[test]
fn separable_trajectories_are_all_recognized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gallery: Vec<_> = (0..3).flat_map(|c| (0..3).map(move |_| c)).map(|c| trajectory(c, 12, &mut rng)).collect();
    let mut correct = 0;
    for i in 0..30 {
        let probe = trajectory(i % 3, rng.random_range(8..16), &mut rng);
        let m = classify_1nn(&probe, &gallery).unwrap();
        correct += usize::from(m.predicted == i % 3);
        assert_eq!(classify_1nn(&probe, &gallery).unwrap(), m);
    }
    assert_eq!(correct, 30);
}

// Two actors, three classes; each class lives along its own direction in a
// 30-dimensional space, with per-frame noise.
fn synthetic_dataset(seed: u64) -> ActivityDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 30;
    let dirs: Vec<Vec<f64>> = (0..3).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut clips = Vec::new();
    for actor in ["A", "B"] {
        for (class, dir) in dirs.iter().enumerate() {
            let frames = (0..30)
                .map(|t| {
                    let a = ((t as f64) * 0.6).sin() * 3.0 + 4.0;
                    Some(dir.iter().map(|d| d * a + rng.random_range(-0.5..0.5)).collect())
                })
                .collect();
            clips.push(ActivityClip { actor: actor.into(), class, source: format!("{actor}/{class}"), frames });
        }
    }
    ActivityDataset { class_names: vec!["x".into(), "y".into(), "z".into()], clips }
}

#[test]
fn sweep_accuracy_rises_then_stays_flat() {
    let ds = synthetic_dataset(8);
    let reports = feature_sweep(&ds, &["A".into()], &[8, 1, 2, 4], &Protocol::default()).unwrap();
    assert_eq!(reports.iter().map(|r| r.config.d).collect::<Vec<_>>(), vec![1, 2, 4, 8]);
    let rates: Vec<f64> = reports.iter().map(|r| r.overall_rate()).collect();
    for w in rates.windows(2) {
        assert!(w[1] >= w[0] - 5.0, "{rates:?}");
    }
    assert!(*rates.last().unwrap() >= 90.0, "{rates:?}");
    for r in &reports {
        for row in r.confusion.rates() {
            assert!((row.iter().sum::<f64>() - 100.0).abs() <= 0.01);
        }
        let counts = r.confusion.counts();
        let total: u64 = counts.iter().flatten().sum();
        let weighted: f64 = r
            .per_class_rates()
            .iter()
            .zip(counts)
            .map(|(rate, row)| rate * row.iter().sum::<u64>() as f64)
            .sum::<f64>()
            / total as f64;
        assert!((weighted - r.overall_rate()).abs() <= 1e-9);
    }
    let single = feature_sweep(&ds, &["A".into()], &[1], &Protocol::default()).unwrap();
    assert_eq!(single.len(), 1);
    assert_eq!(single[0], reports[0]);
}
