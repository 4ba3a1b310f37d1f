//! Line-of-sight channel gains and OFDMA link rates.

use crate::error::ModelError;
use crate::geometry::Point2;
use crate::model::types::RadioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    IsdToUav,
    UavToUav,
    UavToMbs,
}

/// Endpoints of a link: horizontal positions and heights above ground.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEnds {
    pub tx: Point2,
    pub rx: Point2,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
}

impl LinkEnds {
    pub fn new(tx: Point2, rx: Point2, tx_height_m: f64, rx_height_m: f64) -> Self {
        Self {
            tx,
            rx,
            tx_height_m,
            rx_height_m,
        }
    }
}

impl LinkKind {
    /// Total band available to this link class.
    pub fn band_hz(self, cfg: &RadioConfig) -> f64 {
        match self {
            LinkKind::IsdToUav => cfg.bw_access_hz,
            LinkKind::UavToUav => cfg.bw_inter_uav_hz,
            LinkKind::UavToMbs => cfg.bw_backhaul_hz,
        }
    }

    /// Height offset entering the path-loss denominator. UAV pairs share
    /// one altitude, so only the horizontal distance counts.
    pub fn height_offset_sq(self, ends: &LinkEnds) -> f64 {
        match self {
            LinkKind::UavToUav => 0.0,
            _ => {
                let dh = ends.tx_height_m - ends.rx_height_m;
                dh * dh
            }
        }
    }
}

/// Squared distance in the gain denominator.
pub fn path_distance_sq(kind: LinkKind, ends: &LinkEnds) -> f64 {
    ends.tx.dist_sq(ends.rx) + kind.height_offset_sq(ends)
}

pub fn channel_gain(kind: LinkKind, ends: &LinkEnds, cfg: &RadioConfig) -> Result<f64, ModelError> {
    if !ends.tx.is_finite() || !ends.rx.is_finite() {
        return Err(ModelError::InvalidArgument("non-finite link endpoint".into()));
    }
    let s = path_distance_sq(kind, ends);
    if s <= 0.0 {
        return Err(ModelError::SingularGain);
    }
    Ok(cfg.beta0 / s)
}

/// Receive SNR at unit distance, `P * beta0 / sigma^2`.
pub fn snr_at_unit_distance(tx_power_w: f64, cfg: &RadioConfig) -> f64 {
    tx_power_w * cfg.beta0 / cfg.noise_w
}

/// `log2(1 + P G / sigma^2)`.
pub fn spectral_efficiency(
    kind: LinkKind,
    ends: &LinkEnds,
    cfg: &RadioConfig,
    tx_power_w: f64,
) -> Result<f64, ModelError> {
    let g = channel_gain(kind, ends, cfg)?;
    Ok((tx_power_w * g / cfg.noise_w).ln_1p() / std::f64::consts::LN_2)
}

/// Achievable rate in bits/s on a `bw_fraction` share of the link's band.
pub fn link_rate(
    kind: LinkKind,
    ends: &LinkEnds,
    bw_fraction: f64,
    cfg: &RadioConfig,
    tx_power_w: f64,
) -> Result<f64, ModelError> {
    if !(0.0..=1.0).contains(&bw_fraction) {
        return Err(ModelError::InvalidArgument(format!(
            "bandwidth fraction {bw_fraction} outside [0, 1]"
        )));
    }
    let se = spectral_efficiency(kind, ends, cfg, tx_power_w)?;
    if bw_fraction == 0.0 {
        return Ok(0.0);
    }
    Ok(bw_fraction * kind.band_hz(cfg) * se)
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

    #[test]
    fn isd_directly_below_uav() {
        let ends = LinkEnds::new(Point2::new(0.0, 0.0), Point2::new(0.0, 0.0), 0.0, 100.0);
        let g = channel_gain(LinkKind::IsdToUav, &ends, &cfg()).unwrap();
        assert!((g - 1e-9).abs() < 1e-24);
        let r = link_rate(LinkKind::IsdToUav, &ends, 1.0, &cfg(), 0.1).unwrap();
        let expected = 15e6 * 101f64.log2();
        assert!((r - expected).abs() / expected < 1e-12);
        assert!((r - 9.987e7).abs() / 9.987e7 < 1e-3);
    }

    #[test]
    fn uav_to_mbs_uses_height_difference() {
        let ends = LinkEnds::new(Point2::new(100.0, 0.0), Point2::new(0.0, 0.0), 100.0, 25.0);
        let g = channel_gain(LinkKind::UavToMbs, &ends, &cfg()).unwrap();
        assert!((g - 6.4e-10).abs() < 1e-22);
        let r = link_rate(LinkKind::UavToMbs, &ends, 1.0, &cfg(), 0.2).unwrap();
        assert!((r - 5e6 * 129f64.log2()).abs() < 1e-6);
    }

    #[test]
    fn zero_share_is_zero_rate() {
        let ends = LinkEnds::new(Point2::new(0.0, 0.0), Point2::new(30.0, 0.0), 100.0, 100.0);
        assert_eq!(link_rate(LinkKind::UavToUav, &ends, 0.0, &cfg(), 0.2).unwrap(), 0.0);
    }

    #[test]
    fn coincident_uavs_are_singular() {
        let p = Point2::new(5.0, 5.0);
        let ends = LinkEnds::new(p, p, 100.0, 100.0);
        assert_eq!(
            link_rate(LinkKind::UavToUav, &ends, 0.5, &cfg(), 0.2),
            Err(ModelError::SingularGain)
        );
    }

    #[test]
    fn share_outside_unit_interval_is_rejected() {
        let ends = LinkEnds::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 0.0, 100.0);
        assert!(link_rate(LinkKind::IsdToUav, &ends, 1.5, &cfg(), 0.1).is_err());
    }
}
