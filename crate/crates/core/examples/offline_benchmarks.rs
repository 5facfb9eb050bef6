// Offline optima for a random instance and where the online algorithms
// land between them.

use blockpack::adversary::{random_instance, DiscountDist, RandomParams};
use blockpack::engine::{run, DeterministicOracle, ExactOracle, GreedyFractional, OnlineAlgorithm, OracleIntegral, StaticSource};
use blockpack::offline::{offline_fractional_opt, offline_integral_opt};

fn main() {
    let mut params = RandomParams::new(12, 2, 4);
    params.q_max = 0.6;
    params.discount = DiscountDist::Mixed { patient: 0.5, hi: 0.3 };
    let inst = random_instance(3, &params).unwrap();
    let caps = inst.capacities().to_vec();

    let (_, frac) = offline_fractional_opt(&inst).unwrap();
    let (best, int) = offline_integral_opt(&inst).expect("12 transactions is within the search cap");
    println!("fractional optimum {frac:.3}");
    println!("integral optimum   {int:.3} ({} placements)", best.iter().count());

    let algs: Vec<Box<dyn OnlineAlgorithm>> = vec![
        Box::new(GreedyFractional::new(caps.clone())),
        Box::new(OracleIntegral::new(caps.clone(), ExactOracle::default())),
        Box::new(OracleIntegral::new(caps, DeterministicOracle)),
    ];
    for mut alg in algs {
        let out = run(&mut alg, &mut StaticSource::new(&inst), inst.horizon(), 0).unwrap();
        println!("{:<14} {:.3}", alg.name(), out.report.total_welfare);
    }
}
