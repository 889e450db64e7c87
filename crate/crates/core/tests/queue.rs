use hwq_core::dist::DistributionSpec;
use hwq_core::queuesim::{
    gidn_tail, mmn_exact, simulate_queue, GidnOptions, InitialState, QueueConfig, SimOptions, TailComparison, TailMode,
};
use hwq_core::rng::StreamFactory;

fn mm(n: usize, b: f64) -> QueueConfig {
    QueueConfig::new(n, b, 2.0, DistributionSpec::exponential(), DistributionSpec::exponential()).unwrap()
}

#[test]
fn mmn_matches_birth_death_law() {
    let cfg = mm(50, 1.0);
    let exact = mmn_exact(50, cfg.lambda()).unwrap();
    let run = simulate_queue(&cfg, &SimOptions::default(), &StreamFactory::new(42)).unwrap();
    let ks = [1.0, 7.0, 14.0];
    for mode in [TailMode::TimeAverage, TailMode::ArrivalSampled] {
        let t = run.tail(&ks, 1.0, mode, TailComparison::GreaterEq).unwrap();
        for (i, &k) in ks.iter().enumerate() {
            let want = exact.tail_l(k as usize);
            let e = t.estimate(i);
            println!("{mode:?} k={k}: sim {:.5} ± {:.5}, exact {want:.5}", e.mean, e.std_error);
            assert!(e.agrees_with(want, 3.0), "{mode:?} k={k}: {e:?} vs {want}");
        }
    }
}

#[test]
fn mm1_is_geometric() {
    let cfg = mm(1, 0.5);
    assert!((cfg.lambda() - 0.5).abs() < 1e-15);
    let opts = SimOptions { horizon: Some(4000.0), ..Default::default() };
    let run = simulate_queue(&cfg, &opts, &StreamFactory::new(8)).unwrap();
    // Q >= k  <=>  L >= k - 1 for a single server.
    let ks = [1.0, 2.0, 3.0, 5.0];
    let t = run.tail(&ks.map(|k| k - 1.0), 1.0, TailMode::TimeAverage, TailComparison::GreaterEq).unwrap();
    let geo = [0.25, 0.125, 1.0 / 32.0];
    for (i, want) in [(1, geo[0]), (2, geo[1]), (3, geo[2])] {
        let e = t.estimate(i);
        assert!(e.agrees_with(want, 3.0), "Q >= {}: {e:?} vs {want}", ks[i]);
    }
    let w = &run.waits;
    assert!(w.prob_wait.agrees_with(0.5, 3.0), "{w:?}");
}

#[test]
fn queue_tail_decreases_with_b() {
    let f = StreamFactory::new(21);
    let mut probs = Vec::new();
    for b in [0.5, 1.0, 2.0] {
        let cfg =
            QueueConfig::new(100, b, 2.0, DistributionSpec::exponential(), DistributionSpec::pareto(1.5)).unwrap();
        let run = simulate_queue(&cfg, &SimOptions::default(), &f).unwrap();
        let t = run.tail(&[1.0], 10.0, TailMode::TimeAverage, TailComparison::Greater).unwrap();
        probs.push(t.estimate(0));
    }
    println!("{probs:?}");
    for w in probs.windows(2) {
        assert!(w[1].le_within(&w[0], 3.0));
    }
}

#[test]
fn gidn_agrees_with_general_simulator() {
    let cfg = QueueConfig::new(50, 1.0, 1.5, DistributionSpec::pareto(1.5), DistributionSpec::deterministic()).unwrap();
    let f = StreamFactory::new(5);
    let fast = gidn_tail(&cfg, &GidnOptions { reps: 40, ..Default::default() }, &f).unwrap();
    let opts = SimOptions { reps: 40, horizon: Some(3000.0), initial: InitialState::Stationary, ..Default::default() };
    let des = simulate_queue(&cfg, &opts, &f).unwrap();
    let xs = [0.0, 0.5, 1.0];
    let a = fast.tail(&xs, TailComparison::Greater);
    let b = des.tail(&xs, cfg.scale(), TailMode::TimeAverage, TailComparison::Greater).unwrap();
    for i in 0..xs.len() {
        println!("x={}: fast {:?} des {:?}", xs[i], a.estimate(i), b.estimate(i));
        let (ea, eb) = (a.estimate(i), b.estimate(i));
        assert!(ea.le_within(&eb, 3.0) && eb.le_within(&ea, 3.0), "x = {}", xs[i]);
    }
}
