use hwq_core::bounds::{hwr_tail, spartbound, thm1_bound, BoundInputs};
use hwq_core::compare::{stable_walk_sup, sup_upper_process, SupKind, UpperOptions, WalkOptions};
use hwq_core::dist::DistributionSpec;
use hwq_core::queuesim::{QueueConfig, TailComparison};
use hwq_core::rng::StreamFactory;

#[test]
fn pipeline_dominance_grid() {
    let xs = [16.0, 100.0, 1e4, 1e8];
    for eps in [0.1, 0.25, 0.5, 1.0] {
        for b in [0.25, 1.0, 4.0, 16.0] {
            let inputs = BoundInputs::new(eps, 1.5, 0.4, 1.0, b);
            let r = thm1_bound(&inputs, &xs).unwrap();
            assert!(r.pipeline_dominates(), "eps={eps} B={b}");
            for w in r.rows.windows(2) {
                assert!(w[1].thm1.log10_raw <= w[0].thm1.log10_raw);
                assert!(w[1].spartbound.log10_raw <= w[0].spartbound.log10_raw);
                assert!(w[1].boundapart.log10_raw <= w[0].boundapart.log10_raw);
            }
        }
    }
}

#[test]
fn hwr_tail_bounds_walk() {
    let batch = stable_walk_sup(1.5, 1.0, 1.0, &WalkOptions::default(), &StreamFactory::new(41)).unwrap();
    let xs: Vec<f64> = (0..10).map(|i| 5.0 * i as f64).collect();
    for (x, e) in xs.iter().zip(batch.tail(&xs, TailComparison::GreaterEq)) {
        assert!(e.mean - 3.0 * e.std_error <= hwr_tail(1.0, 1.0, 1.5, *x).unwrap(), "x={x}: {e:?}");
    }
}

#[test]
fn spartbound_covers_service_supremum() {
    let spec = DistributionSpec::pareto(1.5);
    let cfg = QueueConfig::new(100, 1.0, 2.0, DistributionSpec::exponential(), spec.clone()).unwrap();
    let opts = UpperOptions { reps: 300, kind: SupKind::ServicePart, ..Default::default() };
    let batch = sup_upper_process(&cfg, &opts, &StreamFactory::new(42)).unwrap();
    let eps = 0.25;
    let inputs = BoundInputs::new(eps, spec.frac_moment(eps).unwrap(), spec.laplace(1.0).unwrap(), 1.0, 1.0);
    // The service half of the split is compared at x/2.
    for x in [16.0, 32.0] {
        let e = batch.tail(&[x / 2.0], TailComparison::GreaterEq)[0];
        let b = spartbound(&inputs, x).unwrap();
        assert!(e.mean - 3.0 * e.std_error <= b.capped);
        assert!(b.log10_raw > 90.0);
    }
}
