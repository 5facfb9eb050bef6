// One block packed three ways: exactly, by dropping the fractional LP
// items, and by resampling a scaled LP solution.

use blockpack::rounding::{deterministic_round, exact_pack, q_max, randomized_round, Item};
use blockpack::seeding;
use rand::Rng;

fn main() {
    let mut rng = seeding::rng_for(7);
    let caps = vec![1.0, 1.0];
    let items: Vec<Item> = (0..20)
        .map(|_| {
            Item::new(
                rng.random_range(0.5..2.0),
                vec![rng.random_range(0.0..0.15), rng.random_range(0.0..0.15)],
            )
        })
        .collect();
    println!("q_max = {:.3}", q_max(&items, &caps));

    let exact = exact_pack(&items, &caps).expect("20 items is small");
    let det = deterministic_round(&items, &caps).unwrap();
    let rnd = randomized_round(&items, &caps, 0.3, 11, 1000).unwrap();
    println!("LP bound      {:.3}", exact.lp_value);
    println!("exact         {:.3}", exact.value);
    println!("deterministic {:.3} (lambda {:.3})", det.value, det.certified_lambda);
    println!(
        "randomized    {:.3} after {} draws{}",
        rnd.value,
        rnd.iterations,
        if rnd.fallback { ", fell back" } else { "" }
    );
}
