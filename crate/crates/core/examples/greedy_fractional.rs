// Fractional greedy on a small hand-written instance with one impatient
// transaction, compared against the offline fractional optimum.

use blockpack::engine::{run, GreedyFractional, StaticSource};
use blockpack::model::{min_slackness, Instance, Transaction};
use blockpack::offline::{competitive_ratio, offline_fractional_opt};

fn main() {
    let txns = vec![
        Transaction::new("swap", 1, 3.0, 0.0, vec![0.6, 0.2]),
        Transaction::new("mint", 1, 2.0, 0.5, vec![0.5, 0.5]),
        Transaction::new("bridge", 2, 4.0, 0.0, vec![0.3, 0.9]),
        Transaction::new("vote", 2, 0.5, 0.0, vec![0.1, 0.1]),
        Transaction::new("claim", 3, 1.5, 0.1, vec![0.7, 0.0]),
    ];
    let inst = Instance::new(vec![1.0, 1.0], 3, txns).expect("valid instance");

    let out = run(
        &mut GreedyFractional::new(inst.capacities().to_vec()),
        &mut StaticSource::new(&inst),
        inst.horizon(),
        0,
    )
    .expect("greedy never overfills a block");

    for (b, id, x) in out.allocation.iter() {
        println!("block {b}: {id} x = {x:.3}");
    }
    let (y, opt) = offline_fractional_opt(&inst).expect("small LP");
    let ratio = competitive_ratio(&out.allocation, &y, &inst, inst.horizon(), 0).unwrap();
    println!(
        "greedy welfare {:.3}, offline optimum {opt:.3}, ratio {ratio:.3}",
        out.report.total_welfare
    );
    println!("slackness {}", min_slackness(&out.allocation, &inst).unwrap());
}
