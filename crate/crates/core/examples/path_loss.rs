//! Hata path loss and the resulting link budget for a macro and a WiFi
//! station at a few distances.

use hetbid::radio::{hata_path_loss, link_budget, max_rate};
use hetbid::sim::{generate_scenario, ScenarioConfig};

fn main() -> hetbid::Result<()> {
    for km in [0.05, 0.1, 0.2, 0.3] {
        println!(
            "{:>5.2} km  macro {:6.1} dB  wifi {:6.1} dB",
            km,
            hata_path_loss(900.0, 30.0, 1.5, km)?,
            hata_path_loss(2400.0, 10.0, 1.5, km)?
        );
    }

    let scenario = generate_scenario(
        &ScenarioConfig {
            users: 5,
            ..ScenarioConfig::default()
        },
        11,
    )?;
    let macro_station = &scenario.stations[0];
    for user in &scenario.users {
        let link = link_budget(
            macro_station,
            user,
            scenario.physics.noise_mw,
            scenario.physics.sinr_threshold_db,
        );
        let d = macro_station.position.distance(&user.position);
        println!(
            "user {} at {:5.1} m: snr {:5.1} dB, covered {}, b_max at 1 MHz {:.2} Mbps",
            user.id,
            d,
            link.snr_db(),
            link.covered,
            max_rate(1.0, &link, user.active, link.covered)
        );
    }
    Ok(())
}
