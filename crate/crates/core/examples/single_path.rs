//! Runs every scheme along one shared Brownian path and prints the state in
//! `X` at a handful of times.
//!
//!     cargo run --release --example single_path [seed] [path_index]

use aitsde::model::ModelParams;
use aitsde::noise::{GridSpec, IncrementTable};
use aitsde::schemes::{simulate_path_with, SchemeId};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let index: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    let p = ModelParams::non_critical();
    let tau = 2f64.powi(-8);
    let table = IncrementTable::generate(seed, index, GridSpec::from_step(1.0, tau)?);
    let every = table.increments().len() / 8;

    print!("{:>16}", "t");
    for n in (0..=table.increments().len()).step_by(every) {
        print!("{:>10.4}", n as f64 * tau);
    }
    println!();
    for scheme in SchemeId::ALL {
        let mut xs = vec![1.0];
        let result = simulate_path_with(scheme, &p, scheme.from_x(&p, 1.0)?, table.increments(), tau, |n, s| {
            if n % every == 0 {
                xs.push(scheme.to_x(&p, s).unwrap());
            }
        })?;
        print!("{:>16}", scheme.name());
        for x in xs {
            print!("{x:>10.4}");
        }
        println!("   backstops: {}", result.diagnostics.backstop_count);
    }
    Ok(())
}
