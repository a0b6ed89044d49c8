//! Random-waypoint mobility.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Rect;

/// Uniform speed interval in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedRange {
    pub min_mps: f64,
    pub max_mps: f64,
}

impl Default for SpeedRange {
    fn default() -> Self {
        Self { min_mps: 0.5, max_mps: 2.0 }
    }
}

impl SpeedRange {
    pub fn is_valid(&self) -> bool {
        self.min_mps >= 0.0 && self.max_mps >= self.min_mps && self.max_mps.is_finite()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.max_mps > self.min_mps {
            rng.random_range(self.min_mps..=self.max_mps)
        } else {
            self.min_mps
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Device {
    pub position: [f64; 2],
    pub waypoint: [f64; 2],
    pub speed_mps: f64,
}

impl Device {
    /// Uniform position, waypoint and speed.
    pub fn spawn<R: Rng + ?Sized>(area: &Rect, speeds: SpeedRange, rng: &mut R) -> Self {
        let position = area.sample(rng);
        let waypoint = area.sample(rng);
        Self { position, waypoint, speed_mps: speeds.sample(rng) }
    }
}

/// Advances a device by `dt_s` seconds toward its waypoint. A device that
/// reaches the waypoint within the step stops there and draws a new
/// waypoint and speed. The result is always inside `area`.
pub fn random_waypoint_step<R: Rng + ?Sized>(
    device: &Device,
    dt_s: f64,
    area: &Rect,
    speeds: SpeedRange,
    rng: &mut R,
) -> Device {
    let reach = device.speed_mps * dt_s;
    let dx = device.waypoint[0] - device.position[0];
    let dy = device.waypoint[1] - device.position[1];
    let remaining = dx.hypot(dy);
    if remaining <= reach {
        return Device {
            position: area.clamp(device.waypoint),
            waypoint: area.sample(rng),
            speed_mps: speeds.sample(rng),
        };
    }
    let f = reach / remaining;
    let moved = [device.position[0] + f * dx, device.position[1] + f * dy];
    Device { position: area.clamp(moved), ..*device }
}

/// Step length, speeds and snapshot spacing for a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MobilityConfig {
    pub dt_s: f64,
    pub speeds: SpeedRange,
    pub snapshots: usize,
    pub steps_per_snapshot: usize,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        Self { dt_s: 0.1, speeds: SpeedRange::default(), snapshots: 10, steps_per_snapshot: 10 }
    }
}

/// Positions of `num_devices` devices at `snapshots` instants, the first
/// being the spawn positions.
pub fn sample_trajectory<R: Rng + ?Sized>(
    area: &Rect,
    num_devices: usize,
    mobility: &MobilityConfig,
    rng: &mut R,
) -> Vec<Vec<Device>> {
    let mut devices: Vec<Device> =
        (0..num_devices).map(|_| Device::spawn(area, mobility.speeds, rng)).collect();
    let mut out = Vec::with_capacity(mobility.snapshots);
    for snap in 0..mobility.snapshots {
        if snap > 0 {
            for _ in 0..mobility.steps_per_snapshot {
                for d in devices.iter_mut() {
                    *d = random_waypoint_step(d, mobility.dt_s, area, mobility.speeds, rng);
                }
            }
        }
        out.push(devices.clone());
    }
    out
}
