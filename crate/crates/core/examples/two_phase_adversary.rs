// The adaptive two-phase adversary. It watches how much of the first
// phase went to value-2 transactions and then picks the continuation that
// hurts most. Every online algorithm stays at or below 7/8 of the benchmark.

use blockpack::adversary::TwoPhaseAdversary;
use blockpack::engine::{run, DeterministicOracle, GreedyFractional, OnlineAlgorithm, OracleIntegral};
use blockpack::offline::competitive_ratio;

fn main() {
    let horizon = 20;
    let algs: Vec<Box<dyn OnlineAlgorithm>> = vec![
        Box::new(GreedyFractional::new(vec![1.0, 1.0])),
        Box::new(OracleIntegral::new(vec![1.0, 1.0], DeterministicOracle)),
    ];
    for mut alg in algs {
        let mut src = TwoPhaseAdversary::new(horizon).unwrap();
        let out = run(&mut alg, &mut src, horizon, 0).unwrap();
        let inst = src.realized_instance().unwrap();
        let y = src.benchmark_allocation().unwrap();
        let ratio = competitive_ratio(&out.allocation, &y, &inst, horizon, 0).unwrap();
        println!(
            "{:<12} a1 = {:.2}, case {:?}, welfare {:.1} of {:.1}, ratio {ratio:.3}",
            alg.name(),
            src.a1().unwrap(),
            src.case().unwrap(),
            out.report.total_welfare,
            src.benchmark_value(),
        );
    }
}
