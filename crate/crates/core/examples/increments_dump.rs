//! Generates one path's Brownian increments, writes them to a dump, reads
//! the dump back and checks that coarsening reproduces the same sums.
//!
//!     cargo run --example increments_dump [file]

use std::fs::File;
use std::io::{BufReader, BufWriter};

use aitsde::noise::{GridSpec, IncrementTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "increments.bin".into());
    let table = IncrementTable::generate(1, 0, GridSpec::new(1.0, 1 << 15)?);
    table.write_dump(BufWriter::new(File::create(&path)?))?;
    let back = IncrementTable::read_dump(BufReader::new(File::open(&path)?), 1.0)?;
    assert_eq!(back.increments(), table.increments());
    println!("wrote {} increments to {path}", back.increments().len());

    for k in [7, 9, 11] {
        let tau = 2f64.powi(-k);
        let coarse = back.at_step(tau)?;
        let w_end: f64 = coarse.iter().sum();
        println!("tau=2^-{k}: {} steps, W(1) = {w_end:.12}", coarse.len());
    }
    Ok(())
}
