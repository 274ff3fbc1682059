//! Draws a network, writes it as TOML and reads it back.

use hetbid::sim::{generate_scenario, Scenario, ScenarioConfig};

fn main() -> hetbid::Result<()> {
    let scenario = generate_scenario(
        &ScenarioConfig {
            users: 20,
            ..ScenarioConfig::default()
        },
        8,
    )?;
    let path = std::env::temp_dir().join("hetbid-scenario.toml");
    scenario.save(&path)?;
    let back = Scenario::load(&path)?;
    assert_eq!(scenario, back);
    let served = back
        .market_views()
        .iter()
        .filter(|v| v.contexts().next().is_some())
        .count();
    println!(
        "{} stations, {} users ({served} served), written to {}",
        back.stations.len(),
        back.users.len(),
        path.display()
    );
    Ok(())
}
