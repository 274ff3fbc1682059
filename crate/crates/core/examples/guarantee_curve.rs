//! Service guarantee of a Rayleigh link and the bandwidth that makes a
//! bid's expected rate meet the user's floor.

use hetbid::{GuaranteeCurve, GuaranteeModel};

fn main() -> hetbid::Result<()> {
    let link = GuaranteeModel::new(20.0);
    let min_rate = 1.0;
    println!("rate  bw_min   guarantee  expected");
    for rate in [1.5, 2.0, 4.0, 8.0, 16.0] {
        let bw = link.min_bw_for_rate_constraint(rate, min_rate)?;
        let g = link.service_guarantee(rate, bw)?;
        println!("{rate:4.1}  {bw:7.3}  {g:9.4}  {:8.4}", rate * g);
    }
    Ok(())
}
