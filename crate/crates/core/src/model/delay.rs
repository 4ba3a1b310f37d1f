use serde::{Deserialize, Serialize};

use crate::model::types::{Mode, RadioConfig, Task};

/// Rates of the hops a task traverses, in bits/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HopRates {
    /// ISD to home UAV.
    pub access_bps: f64,
    /// Home UAV to peer UAV or to the MBS.
    pub relay_bps: f64,
}

/// `bits / rate`, infinite when a nonempty payload meets a dead link.
pub fn transfer_time(bits: f64, rate_bps: f64) -> f64 {
    if bits == 0.0 {
        0.0
    } else if rate_bps > 0.0 {
        bits / rate_bps
    } else {
        f64::INFINITY
    }
}

/// `cycles / hz`, infinite when work meets no CPU.
pub fn compute_time(cycles: f64, cpu_hz: f64) -> f64 {
    if cycles == 0.0 {
        0.0
    } else if cpu_hz > 0.0 {
        cycles / cpu_hz
    } else {
        f64::INFINITY
    }
}

/// Completion delay of `task` under `mode`.
///
/// `cpu_hz` is the ISD's own CPU for local execution and the granted share
/// at the executing server otherwise. An infinite result marks an
/// infeasible hop.
pub fn service_delay(
    task: &Task,
    mode: Mode,
    rates: HopRates,
    cpu_hz: f64,
    cache_new: bool,
    cfg: &RadioConfig,
) -> f64 {
    let d = task.size_bits;
    let exec = compute_time(task.cycles(), cpu_hz);
    let base = match mode {
        Mode::Local => exec,
        Mode::HomeUav => transfer_time(d, rates.access_bps) + exec,
        Mode::PeerUav(_) | Mode::Mbs => {
            transfer_time(d, rates.access_bps) + transfer_time(d, rates.relay_bps) + exec
        }
    };
    if cache_new {
        base + cfg.cache_fill_delay_s()
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RadioConfig {
        RadioConfig {
            beta0: 1e-5,
            noise_w: 1e-12,
            bw_access_hz: 15e6,
            bw_inter_uav_hz: 10e6,
            bw_backhaul_hz: 5e6,
            backhaul_avg_bps: 1e8,
            content_size_bits: 1e7,
        }
    }

    fn task(d: f64) -> Task {
        Task {
            size_bits: d,
            service_id: 0,
            density: 500.0,
            deadline_s: 1.0,
        }
    }

    #[test]
    fn local_delay() {
        let t = service_delay(&task(1e6), Mode::Local, HopRates::default(), 1e9, false, &cfg());
        assert!((t - 0.5).abs() < 1e-15);
    }

    #[test]
    fn home_uav_with_cache_fill() {
        let rates = HopRates {
            access_bps: 1e8,
            relay_bps: 0.0,
        };
        let t = service_delay(&task(1e6), Mode::HomeUav, rates, 5e9, true, &cfg());
        assert!((t - 0.21).abs() < 1e-12);
    }

    #[test]
    fn empty_task_costs_nothing() {
        for mode in [Mode::Local, Mode::HomeUav, Mode::PeerUav(1), Mode::Mbs] {
            let t = service_delay(&task(0.0), mode, HopRates::default(), 0.0, false, &cfg());
            assert_eq!(t, 0.0);
        }
    }

    #[test]
    fn dead_hop_is_infinite_not_nan() {
        let rates = HopRates {
            access_bps: 1e7,
            relay_bps: 0.0,
        };
        let t = service_delay(&task(1e6), Mode::Mbs, rates, 1e9, false, &cfg());
        assert!(t.is_infinite());
    }
}
