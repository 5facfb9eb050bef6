// Batching trades latency for smaller relative demands: L blocks are packed
// at once with L-fold capacity, then spread over the next L blocks.

use blockpack::adversary::{random_instance, RandomParams};
use blockpack::engine::{batched_capacities, run, Batching, OracleIntegral, RandomizedOracle, StaticSource};
use blockpack::offline::{competitive_ratio, offline_fractional_opt};

fn main() {
    let horizon = 24;
    let mut params = RandomParams::new(400, 2, horizon);
    params.q_max = 0.4;
    let inst = random_instance(5, &params).unwrap();
    let (y, opt) = offline_fractional_opt(&inst).unwrap();
    println!("offline fractional optimum {opt:.2}");

    for l in [1, 2, 4, 8] {
        let caps = batched_capacities(inst.capacities(), l);
        let mut alg = Batching::new(OracleIntegral::new(caps, RandomizedOracle::new(0.25, 1)), l);
        let out = run(&mut alg, &mut StaticSource::new(&inst), horizon, l).unwrap();
        let ratio = competitive_ratio(&out.allocation, &y, &inst, horizon, l).unwrap();
        println!(
            "L = {l}: welfare {:.2}, ratio {ratio:.3}, slackness {:.2}, extension used {}",
            out.report.total_welfare, out.report.min_slackness, out.report.extension_used
        );
    }
}
