//! Link rates and propulsion power at the Table 1 defaults.

use amo::geometry::Point2;
use amo::model::energy::{hover_power, max_affordable_speed, propulsion_power};
use amo::model::radio::{link_rate, LinkEnds, LinkKind};
use amo::model::types::PropulsionParams;
use amo::scenario::{dbm_to_watts, generate_scenario, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::default();
    let sc = generate_scenario(&spec)?;
    let cfg = &sc.radio;
    let isd_power = dbm_to_watts(15.0);
    let uav_power = dbm_to_watts(23.0);

    println!("{:>8} {:>14} {:>14} {:>14}", "dist_m", "access_Mbps", "uav_uav_Mbps", "backhaul_Mbps");
    for d in [10.0, 50.0, 100.0, 250.0, 500.0, 1000.0] {
        let ground = Point2::new(0.0, 0.0);
        let away = Point2::new(d, 0.0);
        let h = spec.uav_altitude_m;
        let access = link_rate(LinkKind::IsdToUav, &LinkEnds::new(ground, away, 0.0, h), 1.0, cfg, isd_power)?;
        let peer = link_rate(LinkKind::UavToUav, &LinkEnds::new(ground, away, h, h), 1.0, cfg, uav_power)?;
        let back = link_rate(
            LinkKind::UavToMbs,
            &LinkEnds::new(away, ground, h, spec.mbs_height_m),
            1.0,
            cfg,
            uav_power,
        )?;
        println!("{d:>8.0} {:>14.2} {:>14.2} {:>14.2}", access / 1e6, peer / 1e6, back / 1e6);
    }

    let p = PropulsionParams::default();
    println!("\nhover power {:.2} W", hover_power(&p));
    for v in [0.0, 10.0, 20.0, 30.0, 40.0, 50.0] {
        println!("speed {v:>4.0} m/s -> {:.1} W", propulsion_power(v, &p)?);
    }
    let budget = spec.uav_energy_budget_j;
    let v = max_affordable_speed(budget, spec.slot_len_s, spec.max_speed_mps, &p);
    println!("fastest flight within a {budget} J slot budget: {v:.2} m/s");
    Ok(())
}
