// A parameter sweep through the same settings the command line uses,
// written as CSV to stdout.

use blockpack::harness::{cmd_sweep, write_sweep_csv, Settings};

fn main() {
    let settings = Settings::parse(
        "source = random\n\
         alg = greedy, oracle-det, oracle-rand\n\
         m = 1, 3\n\
         T = 8\n\
         n = 120\n\
         qmax = 0.2\n\
         seed = 0\n\
         seeds = 3\n",
    )
    .expect("well-formed settings");
    let rows = cmd_sweep(&settings).expect("sweep runs");
    let mut csv = Vec::new();
    write_sweep_csv(&rows, &mut csv).unwrap();
    print!("{}", String::from_utf8(csv).unwrap());
}
