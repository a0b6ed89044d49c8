//! Geometric multi-user channel generation.
//!
//! A realization holds, for `L` devices, the direct device–BS vectors
//! `a_ℓ ∈ ℂ^M`, the RIS–device vectors `b_ℓ ∈ ℂ^N` and the shared BS–RIS
//! matrix `C ∈ ℂ^{N×M}`. Every link is `√(path loss) · e^{−j2πd/λ} · g`
//! with `g` unit-power Rician or Rayleigh small-scale fading.

mod csv;
mod mobility;

pub use csv::{read_realization_csv, write_realization_csv};
pub use mobility::{random_waypoint_step, sample_trajectory, Device, MobilityConfig, SpeedRange};

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{cis, CMatrix, CVector};
use crate::manifold::complex_normal;
use crate::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Log-distance path loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathLossModel {
    pub reference_loss_db: f64,
    pub reference_distance_m: f64,
    pub exponent_device_bs: f64,
    pub exponent_device_ris: f64,
    pub exponent_bs_ris: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            reference_loss_db: -30.0,
            reference_distance_m: 1.0,
            exponent_device_bs: 3.5,
            exponent_device_ris: 2.2,
            exponent_bs_ris: 2.0,
        }
    }
}

impl PathLossModel {
    pub fn validate(&self) -> Result<()> {
        for (name, e) in [
            ("exponent_device_bs", self.exponent_device_bs),
            ("exponent_device_ris", self.exponent_device_ris),
            ("exponent_bs_ris", self.exponent_bs_ris),
        ] {
            if !(e >= 1.0) {
                return Err(Error::InvalidInput(format!("{name} = {e} must be at least 1")));
            }
        }
        if !(self.reference_distance_m > 0.0) || !self.reference_loss_db.is_finite() {
            return Err(Error::InvalidInput("reference distance must be positive".into()));
        }
        Ok(())
    }
}

/// `L0 − 10·n·log10(d / d0)` in dB (a negative gain).
pub fn path_loss_db(distance_m: f64, exponent: f64, model: &PathLossModel) -> Result<f64> {
    if !(distance_m >= model.reference_distance_m) {
        return Err(Error::BelowReferenceDistance {
            distance_m,
            reference_m: model.reference_distance_m,
        });
    }
    Ok(model.reference_loss_db - 10.0 * exponent * (distance_m / model.reference_distance_m).log10())
}

/// Axis-aligned rectangle in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        let r = Self { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max[0] > self.min[0] && self.max[1] > self.min[1]) {
            return Err(Error::InvalidInput("device area must have positive side lengths".into()));
        }
        Ok(())
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.min[0], self.max[0]), p[1].clamp(self.min[1], self.max[1])]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        let p = [
            rng.random_range(self.min[0]..=self.max[0]),
            rng.random_range(self.min[1]..=self.max[1]),
        ];
        self.clamp(p)
    }

    pub fn side_lengths(&self) -> [f64; 2] {
        [self.max[0] - self.min[0], self.max[1] - self.min[1]]
    }
}

/// Positions of the BS (ambient source), the RIS and the device area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkGeometry {
    pub bs_position: [f64; 3],
    pub ris_position: [f64; 3],
    pub device_area: Rect,
    pub bs_ris_distance_m: f64,
    pub carrier_hz: f64,
}

impl Default for NetworkGeometry {
    /// BS at the origin, RIS 100 m away on the x axis, and a 25 m × 25 m
    /// device area in front of the RIS whose nearest edge is 5 m away.
    fn default() -> Self {
        Self {
            bs_position: [0.0, 0.0, 0.0],
            ris_position: [100.0, 0.0, 0.0],
            device_area: Rect { min: [87.5, 5.0], max: [112.5, 30.0] },
            bs_ris_distance_m: 100.0,
            carrier_hz: 2.4e9,
        }
    }
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn ground(p: [f64; 2]) -> [f64; 3] {
    [p[0], p[1], 0.0]
}

impl NetworkGeometry {
    pub fn validate(&self) -> Result<()> {
        self.device_area.validate()?;
        let d = distance(self.bs_position, self.ris_position);
        if (d - self.bs_ris_distance_m).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "BS-RIS separation is {d} m but bs_ris_distance_m = {}",
                self.bs_ris_distance_m
            )));
        }
        if !(self.carrier_hz > 0.0) {
            return Err(Error::InvalidInput("carrier frequency must be positive".into()));
        }
        Ok(())
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn device_bs_distance(&self, p: [f64; 2]) -> f64 {
        distance(ground(p), self.bs_position)
    }

    pub fn device_ris_distance(&self, p: [f64; 2]) -> f64 {
        distance(ground(p), self.ris_position)
    }
}

/// Small-scale fading statistics. A Rician factor of `-inf` dB is Rayleigh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FadingModel {
    pub bs_ris_rician_k_db: f64,
    /// Rician factor of device links drawn as line-of-sight.
    pub device_los_rician_k_db: f64,
    /// Rician factor of the remaining (non-line-of-sight) device links.
    pub device_links_rician_k_db: f64,
    pub los_probability: f64,
}

impl Default for FadingModel {
    fn default() -> Self {
        Self {
            bs_ris_rician_k_db: 10.0,
            device_los_rician_k_db: 10.0,
            device_links_rician_k_db: f64::NEG_INFINITY,
            los_probability: 0.5,
        }
    }
}

impl FadingModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.los_probability) {
            return Err(Error::InvalidInput(format!(
                "los_probability = {} is outside [0, 1]",
                self.los_probability
            )));
        }
        for k in [self.bs_ris_rician_k_db, self.device_los_rician_k_db, self.device_links_rician_k_db]
        {
            if k.is_nan() {
                return Err(Error::InvalidInput("Rician factor is NaN".into()));
            }
        }
        Ok(())
    }
}

/// Unit-average-power Rician entries:
/// `√(K/(K+1))·e^{jφ} + √(1/(K+1))·CN(0,1)` with i.i.d. uniform `φ`.
pub fn sample_fading<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rician_k_db: f64,
    rng: &mut R,
) -> CMatrix {
    let (los, scatter) = if rician_k_db == f64::INFINITY {
        (1.0, 0.0)
    } else {
        let k = db_to_linear(rician_k_db);
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    };
    CMatrix::from_fn(rows, cols, |_, _| {
        let mut h = complex_normal(rng) * scatter;
        if los > 0.0 {
            h += cis(rng.random_range(0.0..2.0 * PI)) * los;
        }
        h
    })
}

/// Everything needed to turn device positions into channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub geometry: NetworkGeometry,
    pub path_loss: PathLossModel,
    pub fading: FadingModel,
    pub num_bs_antennas: usize,
    pub noise_power_dbm: f64,
    pub tx_snr_db: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            geometry: NetworkGeometry::default(),
            path_loss: PathLossModel::default(),
            fading: FadingModel::default(),
            num_bs_antennas: 4,
            noise_power_dbm: -80.0,
            tx_snr_db: 18.0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.path_loss.validate()?;
        self.fading.validate()?;
        if self.num_bs_antennas == 0 {
            return Err(Error::InvalidInput("at least one BS antenna is required".into()));
        }
        Ok(())
    }

    /// Transmit power implied by the noise floor and the transmit SNR.
    pub fn tx_power_dbm(&self) -> f64 {
        self.noise_power_dbm + self.tx_snr_db
    }

    /// One link: path loss, propagation phase and fading.
    pub fn link<R: Rng + ?Sized>(
        &self,
        rows: usize,
        cols: usize,
        distance_m: f64,
        exponent: f64,
        rician_k_db: f64,
        rng: &mut R,
    ) -> Result<CMatrix> {
        let gain = db_to_linear(path_loss_db(distance_m, exponent, &self.path_loss)?).sqrt();
        let phase = cis(-2.0 * PI * distance_m / self.geometry.wavelength_m());
        Ok(sample_fading(rows, cols, rician_k_db, rng) * (phase * gain))
    }

    fn device_k<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.random_bool(self.fading.los_probability) {
            self.fading.device_los_rician_k_db
        } else {
            self.fading.device_links_rician_k_db
        }
    }

    /// RIS–device channel `b` for a device at `position`.
    pub fn ris_device_link<R: Rng + ?Sized>(
        &self,
        position: [f64; 2],
        n: usize,
        rng: &mut R,
    ) -> Result<CVector> {
        let k = self.device_k(rng);
        let d = self.geometry.device_ris_distance(position);
        let m = self.link(n, 1, d, self.path_loss.exponent_device_ris, k, rng)?;
        Ok(m.column(0).into_owned())
    }

    /// BS–RIS channel `C` (`n × cols`).
    pub fn bs_ris_link<R: Rng + ?Sized>(&self, n: usize, cols: usize, rng: &mut R) -> Result<CMatrix> {
        self.link(
            n,
            cols,
            self.geometry.bs_ris_distance_m,
            self.path_loss.exponent_bs_ris,
            self.fading.bs_ris_rician_k_db,
            rng,
        )
    }
}

/// Channels of `L` devices at one location snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `a_ℓ`, device–BS, length `M`.
    pub direct: Vec<CVector>,
    /// `b_ℓ`, RIS–device, length `N`.
    pub ris_device: Vec<CVector>,
    /// `C`, BS–RIS, `N × M`.
    pub bs_ris: CMatrix,
    pub noise_power_dbm: f64,
    pub tx_snr_db: f64,
}

impl ChannelRealization {
    pub fn new(
        direct: Vec<CVector>,
        ris_device: Vec<CVector>,
        bs_ris: CMatrix,
        noise_power_dbm: f64,
        tx_snr_db: f64,
    ) -> Result<Self> {
        let r = Self { direct, ris_device, bs_ris, noise_power_dbm, tx_snr_db };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = self.bs_ris.shape();
        if self.direct.is_empty() || n == 0 || m == 0 {
            return Err(Error::InvalidInput("a realization needs L, N, M >= 1".into()));
        }
        if self.direct.len() != self.ris_device.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} direct links but {} RIS links",
                self.direct.len(),
                self.ris_device.len()
            )));
        }
        if self.direct.iter().any(|a| a.len() != m) || self.ris_device.iter().any(|b| b.len() != n)
        {
            return Err(Error::DimensionMismatch(format!(
                "link lengths do not match C of shape {n}x{m}"
            )));
        }
        let finite = |z: &num_complex::Complex64| z.re.is_finite() && z.im.is_finite();
        let all_finite = self.bs_ris.iter().all(finite)
            && self.direct.iter().all(|a| a.iter().all(finite))
            && self.ris_device.iter().all(|b| b.iter().all(finite));
        if !all_finite {
            return Err(Error::InvalidInput("channel entries must be finite".into()));
        }
        Ok(())
    }

    pub fn num_devices(&self) -> usize {
        self.direct.len()
    }

    pub fn num_elements(&self) -> usize {
        self.bs_ris.nrows()
    }

    pub fn num_bs_antennas(&self) -> usize {
        self.bs_ris.ncols()
    }

    /// `ρ = 10^(SNR/10)`.
    pub fn snr_linear(&self) -> f64 {
        db_to_linear(self.tx_snr_db)
    }
}

/// Draws one realization for devices at their current positions.
pub fn generate_realization<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    devices: &[Device],
    n: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if devices.is_empty() {
        return Err(Error::InvalidInput("at least one device is required".into()));
    }
    if n == 0 {
        return Err(Error::InvalidInput("the RIS needs at least one element".into()));
    }
    cfg.validate()?;
    let m = cfg.num_bs_antennas;
    let geo = &cfg.geometry;
    let bs_ris = cfg.bs_ris_link(n, m, rng)?;
    let mut direct = Vec::with_capacity(devices.len());
    let mut ris_device = Vec::with_capacity(devices.len());
    for dev in devices {
        if !geo.device_area.contains(dev.position) {
            return Err(Error::InvalidInput(format!(
                "device at {:?} is outside the device area",
                dev.position
            )));
        }
        let k = cfg.device_k(rng);
        let a = cfg.link(m, 1, geo.device_bs_distance(dev.position), cfg.path_loss.exponent_device_bs, k, rng)?;
        direct.push(a.column(0).into_owned());
        ris_device.push(cfg.ris_device_link(dev.position, n, rng)?);
    }
    ChannelRealization::new(direct, ris_device, bs_ris, cfg.noise_power_dbm, cfg.tx_snr_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn path_loss_examples() {
        let m = PathLossModel::default();
        assert_eq!(path_loss_db(1.0, 3.5, &m).unwrap(), -30.0);
        assert_eq!(path_loss_db(1.0, 2.0, &m).unwrap(), -30.0);
        assert!((path_loss_db(100.0, 2.0, &m).unwrap() + 70.0).abs() < 1e-12);
        assert!((path_loss_db(10.0, 3.5, &m).unwrap() + 65.0).abs() < 1e-12);
        assert!(matches!(
            path_loss_db(0.5, 2.0, &m),
            Err(Error::BelowReferenceDistance { .. })
        ));
    }

    #[test]
    fn path_loss_is_decreasing() {
        let m = PathLossModel::default();
        let mut prev = path_loss_db(1.0001, 2.0, &m).unwrap();
        for i in 1..200 {
            let d = 1.0 + i as f64 * 0.7;
            let pl = path_loss_db(d, 2.0, &m).unwrap();
            assert!(pl < prev);
            assert!(path_loss_db(d, 2.5, &m).unwrap() < pl);
            prev = pl;
        }
    }

    #[test]
    fn pure_los_is_unit_modulus() {
        let h = sample_fading(8, 3, f64::INFINITY, &mut rng_from_seed(1));
        for z in h.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn fading_has_unit_average_power() {
        for (k, seed) in [(f64::NEG_INFINITY, 10), (10.0, 11), (0.0, 12)] {
            let h = sample_fading(1000, 1000, k, &mut rng_from_seed(seed));
            let mean = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e6;
            assert!((mean - 1.0).abs() < 0.005, "K = {k} dB: mean power {mean}");
        }
    }

    #[test]
    fn zero_devices_is_rejected() {
        let cfg = ChannelConfig::default();
        assert!(matches!(
            generate_realization(&cfg, &[], 8, &mut rng_from_seed(0)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn realization_is_deterministic_per_seed() {
        let cfg = ChannelConfig::default();
        let mut rng = rng_from_seed(3);
        let devices: Vec<Device> = (0..4)
            .map(|_| Device::spawn(&cfg.geometry.device_area, SpeedRange::default(), &mut rng))
            .collect();
        let a = generate_realization(&cfg, &devices, 16, &mut rng_from_seed(9)).unwrap();
        let b = generate_realization(&cfg, &devices, 16, &mut rng_from_seed(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_devices(), 4);
        assert_eq!(a.num_elements(), 16);
        assert_eq!(a.num_bs_antennas(), 4);
    }

    #[test]
    fn unit_distance_links_carry_reference_loss() {
        // BS and RIS 2 m apart with the device midway: both links are 1 m.
        let cfg = ChannelConfig {
            geometry: NetworkGeometry {
                bs_position: [0.0, 0.0, 0.0],
                ris_position: [2.0, 0.0, 0.0],
                device_area: Rect { min: [0.0, -1.0], max: [2.0, 1.0] },
                bs_ris_distance_m: 2.0,
                carrier_hz: 2.4e9,
            },
            ..ChannelConfig::default()
        };
        let dev = Device { position: [1.0, 0.0], waypoint: [1.0, 0.0], speed_mps: 0.0 };
        let mut rng = rng_from_seed(17);
        let draws = 100_000;
        let (mut direct, mut ris) = (0.0, 0.0);
        for _ in 0..draws {
            let r = generate_realization(&cfg, &[dev], 2, &mut rng).unwrap();
            direct += r.direct[0].norm_squared();
            ris += r.ris_device[0].norm_squared();
        }
        let m = cfg.num_bs_antennas as f64;
        assert!((direct / draws as f64 / (1e-3 * m) - 1.0).abs() < 0.01);
        assert!((ris / draws as f64 / (1e-3 * 2.0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn link_power_matches_path_loss_times_dimension() {
        let cfg = ChannelConfig::default();
        let mut rng = rng_from_seed(23);
        let draws = 100_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            acc += cfg.bs_ris_link(4, 2, &mut rng).unwrap().norm_squared();
        }
        let expected = db_to_linear(-70.0) * 8.0;
        assert!((acc / draws as f64 / expected - 1.0).abs() < 0.01);
    }

    #[test]
    fn geometry_invariants() {
        NetworkGeometry::default().validate().unwrap();
        let bad = NetworkGeometry { bs_ris_distance_m: 90.0, ..NetworkGeometry::default() };
        assert!(bad.validate().is_err());
        assert!(Rect::new([0.0, 0.0], [0.0, 1.0]).is_err());
        let fading = FadingModel { los_probability: 1.5, ..FadingModel::default() };
        assert!(fading.validate().is_err());
        let pl = PathLossModel { exponent_bs_ris: 0.5, ..PathLossModel::default() };
        assert!(pl.validate().is_err());
    }
}
