//! Search iterations against grid size.

use hetbid::measure_convergence;

fn main() -> hetbid::Result<()> {
    let rows = measure_convergence(&[(4, 4), (8, 8), (16, 16), (32, 32), (64, 64)], 100, 1)?;
    for r in rows {
        println!(
            "|S| = {:5}: mean {:5.1}, max {:3}, log_4/3 |S| = {:5.1}",
            r.states, r.mean_iterations, r.max_iterations, r.log_bound
        );
    }
    Ok(())
}
