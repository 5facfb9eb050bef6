// Greedy against the staircase instance: light transactions look slightly
// better per block, so greedy fills up with them and never schedules the
// heavy ones. Its ratio approaches 1/2 as the number of resources grows.

use blockpack::adversary::StaircaseAdversary;
use blockpack::engine::{run, GreedyFractional};
use blockpack::offline::competitive_ratio;

fn main() {
    for m in [2, 4, 8, 16] {
        let adv = StaircaseAdversary::new(m, 10).unwrap();
        let inst = adv.instance();
        let out = run(
            &mut GreedyFractional::new(inst.capacities().to_vec()),
            &mut adv.source(),
            adv.horizon(),
            0,
        )
        .unwrap();
        let heavy = out.allocation.iter().filter(|(_, id, _)| StaircaseAdversary::is_heavy(id)).count();
        let ratio =
            competitive_ratio(&out.allocation, &adv.benchmark_allocation(), &inst, adv.horizon(), 0)
                .unwrap();
        println!(
            "m = {m:>2}: ratio {ratio:.4} (bound {:.4}), heavy scheduled: {heavy}",
            adv.greedy_ratio_bound()
        );
    }
}
