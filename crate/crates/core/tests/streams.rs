use std::collections::BTreeMap;
use std::io::Write;

use lptype_core::problems::{Constraint, Labeled, MebProblem, SdpConstraint, SvmProblem};
use lptype_core::sketch::SketchBackend;
use lptype_core::solver::{Anchor, PassSource};
use lptype_core::streams::parse::parse_events;
use lptype_core::streams::{
    approx_max_norm, find_center_turnstile, inserts, run_multipass, run_multipass_anchored,
    run_turnstile, CoordCodec, FileSource, MemorySource, RadiusSearch, StreamEvent,
    TurnstileOptions,
};
use lptype_core::{Error, Solution, SolverParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lattice_points(seed: u64, n: usize, d: usize, delta: i64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| rng.gen_range(-delta..=delta) as f64)
                .collect()
        })
        .collect()
}

fn opts(bound: u64) -> TurnstileOptions {
    TurnstileOptions {
        coord_bound: bound,
        ..Default::default()
    }
}

#[test]
fn single_event_takes_three_passes() {
    let p = MebProblem::new(2, 0.1).unwrap();
    let events = inserts(&[vec![3.0, 4.0]]);
    let mut src = MemorySource::new(&events);
    let run = run_multipass(&mut src, &p, &SolverParams::new(0.1, 1)).unwrap();
    assert_eq!(run.report.passes, 3);
    assert_eq!(run.report.iterations, 1);
    assert_eq!(
        run.outcome.solution,
        Solution::Ball {
            center: vec![3.0, 4.0],
            radius: 0.0
        }
    );
}

#[test]
fn duplicates_change_nothing() {
    let p = MebProblem::new(3, 0.1).unwrap();
    let pts = lattice_points(2, 150, 3, 1000);
    let plain = inserts(&pts);
    let heavy: Vec<StreamEvent<Vec<f64>>> = pts
        .iter()
        .flat_map(|q| std::iter::repeat_n(StreamEvent::insert(q.clone()), 100))
        .collect();
    let params = SolverParams::new(0.1, 7);
    let a = run_multipass(&mut MemorySource::new(&plain), &p, &params).unwrap();
    let b = run_multipass(&mut MemorySource::new(&heavy), &p, &params).unwrap();
    assert_eq!(a.outcome.solution, b.outcome.solution);
    assert_eq!(a.report.passes, b.report.passes);
    assert_eq!(a.report.iterations, b.report.iterations);
}

#[test]
fn pass_count_bound_on_random_instances() {
    let p = MebProblem::new(2, 0.1).unwrap();
    for seed in 0..5 {
        let events = inserts(&lattice_points(seed, 300, 2, 1000));
        let params = SolverParams::new(0.1, seed).with_sample_size(30);
        let run = run_multipass(&mut MemorySource::new(&events), &p, &params).unwrap();
        let s = run.outcome.derived.s;
        assert_eq!(run.report.passes, 1 + 2 * run.report.iterations);
        assert!(run.report.passes as f64 <= 1.0 + 12.0 * 3.0 * s);
    }
}

#[test]
fn empty_stream_is_an_error() {
    let p = MebProblem::new(2, 0.1).unwrap();
    let events: Vec<StreamEvent<Vec<f64>>> = Vec::new();
    let params = SolverParams::new(0.1, 1);
    assert_eq!(
        run_multipass(&mut MemorySource::new(&events), &p, &params).unwrap_err(),
        Error::EmptyInput
    );
    assert_eq!(
        run_turnstile(&mut MemorySource::new(&events), &p, &params, &opts(100)).unwrap_err(),
        Error::EmptyInput
    );
}

#[test]
fn multipass_rejects_deletions() {
    let p = MebProblem::new(1, 0.1).unwrap();
    let events = vec![
        StreamEvent::insert(vec![1.0]),
        StreamEvent::delete(vec![1.0]),
    ];
    let err = run_multipass(
        &mut MemorySource::new(&events),
        &p,
        &SolverParams::new(0.1, 1),
    );
    assert!(matches!(err, Err(Error::Usage(_))));
}

#[test]
fn center_skips_deleted_points() {
    let p = MebProblem::new(2, 0.1).unwrap();
    let codec = CoordCodec::new(2, 100).unwrap();
    let events = vec![
        StreamEvent::insert(vec![1.0, 2.0]),
        StreamEvent::delete(vec![1.0, 2.0]),
        StreamEvent::insert(vec![-5.0, 7.0]),
    ];
    for seed in 0..20 {
        for backend in [SketchBackend::ExactOracle, SketchBackend::Randomized] {
            let params = SolverParams::new(0.1, seed).with_backend(backend);
            let (c, _) =
                find_center_turnstile(&mut MemorySource::new(&events), &p, &codec, &params)
                    .unwrap();
            assert_eq!(c, vec![-5.0, 7.0]);
        }
    }
    let single = inserts(&[vec![4.0, -4.0]]);
    let params = SolverParams::new(0.1, 3);
    let (c, _) =
        find_center_turnstile(&mut MemorySource::new(&single), &p, &codec, &params).unwrap();
    assert_eq!(c, vec![4.0, -4.0]);
}

fn live_set(events: &[StreamEvent<Vec<f64>>]) -> BTreeMap<Vec<i64>, i64> {
    let mut m = BTreeMap::new();
    for e in events {
        let k: Vec<i64> = e.item.iter().map(|v| *v as i64).collect();
        *m.entry(k).or_insert(0) += e.op.delta();
    }
    m.retain(|_, v| *v != 0);
    m
}

fn churn_stream(seed: u64, live: usize, dead: usize) -> Vec<StreamEvent<Vec<f64>>> {
    let a = lattice_points(seed, live, 2, 500);
    let b = lattice_points(seed + 1000, dead, 2, 500);
    let mut ev = inserts(&a);
    ev.extend(inserts(&b));
    ev.extend(b.iter().cloned().map(StreamEvent::delete));
    ev
}

#[test]
fn sampled_centers_are_live() {
    let p = MebProblem::new(2, 0.1).unwrap();
    let codec = CoordCodec::new(2, 500).unwrap();
    let events = churn_stream(9, 100, 60);
    let live = live_set(&events);
    for seed in 0..50 {
        for backend in [SketchBackend::ExactOracle, SketchBackend::Randomized] {
            let params = SolverParams::new(0.1, seed).with_backend(backend);
            let (c, _) =
                find_center_turnstile(&mut MemorySource::new(&events), &p, &codec, &params)
                    .unwrap();
            let k: Vec<i64> = c.iter().map(|v| *v as i64).collect();
            assert!(live.contains_key(&k), "{c:?} is not live");
        }
    }
}

#[test]
fn radius_hand_trace() {
    let p = MebProblem::new(2, 0.1).unwrap();
    let codec = CoordCodec::new(2, 100).unwrap();
    let params = SolverParams::new(0.1, 1);
    let events = inserts(&[vec![3.0, 0.0], vec![0.0, -3.0], vec![-3.0, 0.0]]);
    let r = approx_max_norm(
        &mut MemorySource::new(&events),
        &p,
        &[0.0, 0.0],
        &codec,
        &params,
    )
    .unwrap();
    assert_eq!(r, 4.0);
    let at_center = inserts(&[vec![2.0, 2.0]]);
    let r = approx_max_norm(
        &mut MemorySource::new(&at_center),
        &p,
        &[2.0, 2.0],
        &codec,
        &params,
    )
    .unwrap();
    assert_eq!(r, 0.0);
    let unit = inserts(&[vec![2.0, 2.0], vec![2.0, 3.0]]);
    let r = approx_max_norm(
        &mut MemorySource::new(&unit),
        &p,
        &[2.0, 2.0],
        &codec,
        &params,
    )
    .unwrap();
    assert_eq!(r, 1.0);
}

#[test]
fn radius_brackets_live_maximum() {
    let p = MebProblem::new(2, 0.1).unwrap();
    let codec = CoordCodec::new(2, 500).unwrap();
    for seed in 0..10 {
        let events = churn_stream(seed, 40, 40);
        let live = live_set(&events);
        let center = [0.0, 0.0];
        let dmax = live
            .keys()
            .map(|k| ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt())
            .fold(0.0, f64::max);
        for backend in [SketchBackend::ExactOracle, SketchBackend::Randomized] {
            let params = SolverParams::new(0.1, seed).with_backend(backend);
            let mut src = MemorySource::new(&events);
            let r = approx_max_norm(&mut src, &p, &center, &codec, &params).unwrap();
            assert!(r >= dmax && r <= 2.0 * dmax, "{r} vs {dmax}");
            let probes = src.passes() as f64;
            assert!(probes <= ((codec.diameter().log2().ceil() + 3.0).log2()).ceil());
        }
    }
}

#[test]
fn turnstile_matches_live_set_runs() {
    let p = MebProblem::new(2, 0.1).unwrap();
    for seed in 0..5 {
        let a = lattice_points(seed, 120, 2, 1000);
        let b = lattice_points(seed + 50, 80, 2, 1000);
        let mut churn = inserts(&a);
        churn.extend(inserts(&b));
        churn.extend(b.iter().cloned().map(StreamEvent::delete));
        let plain = inserts(&a);
        let params = SolverParams::new(0.1, seed);
        let t1 = run_turnstile(&mut MemorySource::new(&churn), &p, &params, &opts(1000)).unwrap();
        let t2 = run_turnstile(&mut MemorySource::new(&plain), &p, &params, &opts(1000)).unwrap();
        assert_eq!(t1.outcome, t2.outcome);
        assert_eq!(t1.report.center, t2.report.center);
        let anchor = Anchor {
            center: t1.report.center.clone().unwrap(),
            r_max: t1.report.r_max.unwrap(),
        };
        let m =
            run_multipass_anchored(&mut MemorySource::new(&plain), &p, &params, anchor).unwrap();
        assert_eq!(m.outcome, t1.outcome);
        assert_eq!(
            t1.report.passes - t1.report.setup_passes,
            m.report.passes - m.report.setup_passes
        );
    }
}

#[test]
fn turnstile_with_sketches_solves() {
    let p = MebProblem::new(2, 0.1).unwrap();
    let events = churn_stream(4, 60, 30);
    let params = SolverParams::new(0.1, 4).with_backend(SketchBackend::Randomized);
    let run = run_turnstile(&mut MemorySource::new(&events), &p, &params, &opts(500)).unwrap();
    let Solution::Ball { center, radius } = run.outcome.solution else {
        panic!()
    };
    for k in live_set(&events).keys() {
        let d = ((k[0] as f64 - center[0]).powi(2) + (k[1] as f64 - center[1]).powi(2)).sqrt();
        assert!(d <= radius + 1e-9);
    }
}

#[test]
fn negative_multiplicity_is_rejected() {
    let p = MebProblem::new(2, 0.1).unwrap();
    let events = vec![
        StreamEvent::insert(vec![1.0, 1.0]),
        StreamEvent::delete(vec![2.0, 2.0]),
    ];
    let err = run_turnstile(
        &mut MemorySource::new(&events),
        &p,
        &SolverParams::new(0.1, 1),
        &opts(10),
    );
    assert!(matches!(err, Err(Error::StrictTurnstile(_))));
    let svm = SvmProblem::new(1, 0.2, 0.1).unwrap();
    let lab = vec![StreamEvent::delete(Labeled::new(vec![0.5], 1))];
    let err = run_turnstile(
        &mut MemorySource::new(&lab),
        &svm,
        &SolverParams::new(0.1, 1),
        &opts(10),
    );
    assert!(matches!(err, Err(Error::StrictTurnstile(_))));
}

#[test]
fn turnstile_needs_lattice_points() {
    let p = MebProblem::new(1, 0.1).unwrap();
    let events = inserts(&[vec![0.5]]);
    let err = run_turnstile(
        &mut MemorySource::new(&events),
        &p,
        &SolverParams::new(0.1, 1),
        &opts(10),
    );
    assert!(matches!(err, Err(Error::Domain(_))));
    let events = inserts(&[vec![11.0]]);
    let err = run_turnstile(
        &mut MemorySource::new(&events),
        &p,
        &SolverParams::new(0.1, 1),
        &opts(10),
    );
    assert!(matches!(err, Err(Error::Domain(_))));
}

#[test]
fn two_pass_radius_search_is_a_stub() {
    let p = MebProblem::new(1, 0.1).unwrap();
    let events = inserts(&[vec![1.0]]);
    let o = TurnstileOptions {
        coord_bound: 10,
        radius_search: RadiusSearch::TwoPass,
    };
    let err = run_turnstile(
        &mut MemorySource::new(&events),
        &p,
        &SolverParams::new(0.1, 1),
        &o,
    );
    assert!(matches!(err, Err(Error::Usage(_))));
}

#[test]
fn svm_turnstile_drops_deleted_points() {
    let svm = SvmProblem::new(2, 0.2, 0.1).unwrap();
    let keep = vec![
        Labeled::new(vec![0.5, 0.5], 1),
        Labeled::new(vec![-0.5, -0.5], -1),
    ];
    // would make the set inseparable if it stayed live
    let bad = Labeled::new(vec![0.6, 0.6], -1);
    let mut ev = inserts(&keep);
    ev.push(StreamEvent::insert(bad.clone()));
    ev.push(StreamEvent::delete(bad));
    let params = SolverParams::new(0.1, 2);
    let t = run_turnstile(&mut MemorySource::new(&ev), &svm, &params, &opts(10)).unwrap();
    let m = run_multipass(&mut MemorySource::new(&inserts(&keep)), &svm, &params).unwrap();
    assert_eq!(t.outcome, m.outcome);
    assert_eq!(t.report.passes, m.report.passes);
    assert!(!t.outcome.solution.is_infeasible());
}

#[test]
fn sharded_passes_agree() {
    let p = MebProblem::new(3, 0.05).unwrap();
    let events = inserts(&lattice_points(31, 500, 3, 1000));
    for backend in [SketchBackend::ExactOracle, SketchBackend::Randomized] {
        let params = SolverParams::new(0.05, 11)
            .with_backend(backend)
            .with_sample_size(40);
        let a = run_multipass(&mut MemorySource::new(&events), &p, &params).unwrap();
        let b = run_multipass(&mut MemorySource::new(&events).with_shards(4), &p, &params).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn replay_is_deterministic() {
    let p = MebProblem::new(2, 0.1).unwrap();
    let events = churn_stream(5, 50, 20);
    let params = SolverParams::new(0.1, 5).with_sample_size(20);
    let a = run_turnstile(&mut MemorySource::new(&events), &p, &params, &opts(500)).unwrap();
    let b = run_turnstile(&mut MemorySource::new(&events), &p, &params, &opts(500)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn grammar_round_trip() {
    let text = "\
# demo
@dim 2
@objective 1 0 0 0
@sparsity 2
+ 2 0 0 0.5 1 1 -0.25 | 0.75   # two entries
- 1 0 1 0.3 | 0.1
";
    let (h, ev) = parse_events::<SdpConstraint>(text).unwrap();
    assert_eq!(h.dim, Some(2));
    assert_eq!(h.sparsity, Some(2));
    assert_eq!(ev.len(), 2);
    assert_eq!(ev[0].item.a, vec![0.5, 0.0, 0.0, -0.25]);
    assert_eq!(ev[1].item.a, vec![0.0, 0.3, 0.3, 0.0]);
    assert_eq!(ev[1].op.delta(), -1);

    let (_, ev) = parse_events::<Labeled>("+ 0.5 -0.5 | -1\n+ 0.1 0.2 | +1\n").unwrap();
    assert_eq!(ev[0].item.y, -1);
    assert_eq!(ev[1].item.y, 1);

    let (_, ev) = parse_events::<Constraint>("@objective 1 0\n+ 1 1 0.5\n").unwrap();
    assert_eq!(ev[0].item, Constraint::new(vec![1.0, 1.0], 0.5));
}

#[test]
fn grammar_errors_carry_line_numbers() {
    let cases: Vec<(&str, usize)> = vec![
        ("+ 1 2\n+ 1 x\n", 2),
        ("+ 1 2\n\n+ 1 2 3\n", 3),
        ("* 1 2\n", 1),
        ("+1 2\n", 1),
        ("@unknown 3\n", 1),
    ];
    for (text, line) in cases {
        match parse_events::<Vec<f64>>(text) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?} gave {other:?}"),
        }
    }
    assert!(matches!(
        parse_events::<Labeled>("+ 1 | 2\n"),
        Err(Error::Parse { line: 1, .. })
    ));
    assert!(matches!(
        parse_events::<SdpConstraint>("+ 1 0 0 1 | 0\n"),
        Err(Error::Parse { line: 1, .. })
    ));
    assert!(matches!(
        parse_events::<SdpConstraint>("@dim 2\n+ 2 0 0 1 | 0\n"),
        Err(Error::Parse { line: 2, .. })
    ));
    assert!(matches!(
        parse_events::<Constraint>("@objective 1 0\n+ 1 1 1 0.5\n"),
        Err(Error::Parse { line: 2, .. })
    ));
}

#[test]
fn file_source_matches_memory() {
    let pts = lattice_points(12, 80, 2, 1000);
    let mut f = tempfile_path("pts");
    for q in &pts {
        writeln!(f.1, "+ {} {}", q[0], q[1]).unwrap();
    }
    drop(f.1);
    let p = MebProblem::new(2, 0.1).unwrap();
    let params = SolverParams::new(0.1, 3);
    let mut fs = FileSource::open(&f.0).unwrap();
    let a = run_multipass(&mut fs, &p, &params).unwrap();
    let events = inserts(&pts);
    let b = run_multipass(&mut MemorySource::new(&events), &p, &params).unwrap();
    assert_eq!(a, b);
    assert_eq!(fs.read_all::<Vec<f64>>().unwrap(), events);
    std::fs::remove_file(&f.0).unwrap();
}

fn tempfile_path(tag: &str) -> (std::path::PathBuf, std::fs::File) {
    let path = std::env::temp_dir().join(format!("lptype-{tag}-{}.txt", std::process::id()));
    let f = std::fs::File::create(&path).unwrap();
    (path, f)
}
