use ogeoc::corrdim::RadiusGrid;
use ogeoc::dynamics::{simulate, AdjacencyMatrix, NetworkSpec};
use ogeoc::geoc::{GeoCEngine, NodeSet};
use std::time::Instant;

#[test]
fn probe_fixture_backward_margins() {
    let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 0), (1, 4)];
    let adj = AdjacencyMatrix::from_edges(7, &edges).unwrap();
    let spec = NetworkSpec::new(adj.clone(), 0.1, 4.0).unwrap();
    let start = Instant::now();
    for seed in [1u64, 2] {
        let panel = simulate(&spec, None, 1000, 10000, seed).unwrap();
        let engine = GeoCEngine::new(&panel, RadiusGrid::default()).unwrap();
        let mut min_true = f64::INFINITY;
        let mut max_false = f64::NEG_INFINITY;
        let mut worst_false = (0, 0);
        for i in 0..7usize {
            let parents = adj.parents_of(i);
            let mut base = vec![i];
            base.extend(&parents);
            let base_set = NodeSet::new(base.clone()).unwrap();
            for p in &parents {
                let v = engine
                    .geoc(
                        &NodeSet::single(*p),
                        &NodeSet::single(i),
                        &base_set.without(*p),
                    )
                    .unwrap()
                    .value;
                eprintln!("  true {p}->{i} | {:?}: {v:+.5}", base_set.without(*p).as_slice());
                min_true = min_true.min(v);
            }
            for j in 0..7usize {
                if base_set.contains(j) {
                    continue;
                }
                let v = engine
                    .geoc(&NodeSet::single(j), &NodeSet::single(i), &base_set)
                    .unwrap()
                    .value;
                if v > max_false {
                    max_false = v;
                    worst_false = (j, i);
                }
            }
        }
        eprintln!(
            "seed {seed}: min true {min_true:+.5}, max false {max_false:+.5} ({}->{})",
            worst_false.0, worst_false.1
        );
    }
    eprintln!("elapsed {:?}", start.elapsed());
}
