//! Rate and frequency grids, and how far an off-grid rate sits from the
//! nearest grid rate.

use stiffnet::ansatz::{absorb_check, build_freq_grid, build_rate_grid};

fn main() -> stiffnet::Result<()> {
    let rates = build_rate_grid(1000.0, 10)?;
    println!("rates {:?} (spacing {})", rates.rates, rates.spacing());
    for lambda in [100.0, 250.0, 999.0, 1050.0] {
        let (nearest, gap) = absorb_check(lambda, &rates)?;
        println!("lambda {lambda:>6}: nearest {nearest:>6}, gap {gap}");
    }
    match absorb_check(2000.0, &rates) {
        Ok(_) => unreachable!(),
        Err(e) => println!("lambda 2000: {e}"),
    }

    let freqs = build_freq_grid(6.0, 4)?;
    println!("frequencies {:?}", freqs.freqs);
    let dc = build_freq_grid(10.0, 1)?;
    println!("frequencies {:?}, warning: {:?}", dc.freqs, dc.warning);
    Ok(())
}
