//! Run configuration: a sectioned TOML document with one key per field.
//!
//! Unknown keys are rejected at every level. Dotted-path overrides
//! (`scenario.vehicle_count=150`) go through [`ScenarioConfig::set_key`].

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[min, max]`, written as a two-element array in TOML.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    pub const fn point(v: f64) -> Self {
        Range { min: v, max: v }
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.min && v <= self.max
    }

    pub fn scale(&self, k: f64) -> Range {
        Range::new(self.min * k, self.max * k)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.min + self.max)
    }

    fn check(&self, name: &str) -> Result<()> {
        if !self.min.is_finite() || !self.max.is_finite() || self.min > self.max {
            return Err(Error::Config(format!(
                "{name}: expected finite [min, max] with min <= max, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

impl From<[f64; 2]> for Range {
    fn from(a: [f64; 2]) -> Self {
        Range::new(a[0], a[1])
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.min, r.max]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    BargainMatch,
    Elo,
    Exo,
    Nvo,
    Eco,
    Nco,
    Opora,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::BargainMatch,
        Scheme::Elo,
        Scheme::Exo,
        Scheme::Nvo,
        Scheme::Eco,
        Scheme::Nco,
        Scheme::Opora,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::BargainMatch => "bargain_match",
            Scheme::Elo => "elo",
            Scheme::Exo => "exo",
            Scheme::Nvo => "nvo",
            Scheme::Eco => "eco",
            Scheme::Nco => "nco",
            Scheme::Opora => "opora",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == norm || (norm == "bm" && *k == Scheme::BargainMatch))
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppPreset {
    None,
    CollisionWarning,
    EmergencyBreak,
    TrafficJam,
    HazardousLocation,
    SpeedHarmonization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalMode {
    Literal,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSign {
    /// +1 while the vehicle closes in on the server.
    Approach,
    /// +1 while the horizontal distance grows.
    DistanceChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityPrior {
    Heading,
    Markov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LosModel {
    Constant,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AprMode {
    /// Required cycles over completion time.
    Cycles,
    /// Input bits over completion time.
    Bits,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub road_length: f64,
    pub lane_count: u32,
    pub lane_width: f64,
    pub slot_duration: f64,
    pub epoch_length: u64,
    pub horizon: u64,
    pub vehicle_count: usize,
    pub server_count: usize,
    pub server_radius: f64,
    /// Lateral distance of the roadside units from the road edge (m).
    pub rsu_offset: f64,
    pub speed: Range,
    pub task_gen_probability: f64,
    pub rng_seed: u64,
    pub scheme: Scheme,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            road_length: 10_000.0,
            lane_count: 6,
            lane_width: 3.5,
            slot_duration: 0.1,
            epoch_length: 10,
            horizon: 200,
            vehicle_count: 100,
            server_count: 30,
            server_radius: 166.0,
            rsu_offset: 5.0,
            speed: Range::new(2.0, 30.0),
            task_gen_probability: 0.05,
            rng_seed: 1,
            scheme: Scheme::BargainMatch,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSection {
    pub preset: AppPreset,
    /// Input size is uniform on `[mean - spread, mean + spread]` KB.
    pub size_mean_kb: f64,
    pub size_spread_kb: f64,
    /// cycles/bit
    pub intensity: Range,
    /// seconds
    pub deadline: Range,
    pub result_kb: Range,
}

impl Default for TaskSection {
    fn default() -> Self {
        TaskSection {
            preset: AppPreset::None,
            size_mean_kb: 700.0,
            size_spread_kb: 300.0,
            intensity: Range::new(500.0, 1500.0),
            deadline: Range::new(0.1, 5.0),
            result_kb: Range::new(0.1, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleSection {
    pub cpu_ghz: Range,
    /// Payment budget per task ($).
    pub payment_budget: f64,
    /// Energy budget per GHz of CPU (W·h/GHz).
    pub energy_wh_per_ghz: f64,
    pub weight: Range,
    pub tx_power_dbm: f64,
}

impl Default for VehicleSection {
    fn default() -> Self {
        VehicleSection {
            cpu_ghz: Range::new(0.5, 1.0),
            payment_budget: 20.0,
            energy_wh_per_ghz: 1.0,
            weight: Range::new(0.1, 0.9),
            // linear midpoint of [-85, 44.8] dBm, about 15.1 W
            tx_power_dbm: 41.79,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServerSection {
    pub cpu_ghz: Range,
    pub cores: [u32; 2],
    /// Maximum unit price ($/GHz).
    pub price_ceiling_per_ghz: f64,
    pub energy_wh_per_ghz: f64,
    pub weight: Range,
    pub sic_capacity: usize,
}

impl Default for ServerSection {
    fn default() -> Self {
        ServerSection {
            cpu_ghz: Range::new(2.0, 10.0),
            cores: [2, 8],
            price_ceiling_per_ghz: 1.0,
            energy_wh_per_ghz: 1.0,
            weight: Range::new(0.1, 0.9),
            sic_capacity: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CloudSection {
    pub cpu_ghz: f64,
    pub cores: u32,
    pub price_ceiling_per_ghz: f64,
    pub energy_wh_per_ghz: f64,
    pub weight: f64,
}

impl Default for CloudSection {
    fn default() -> Self {
        CloudSection {
            cpu_ghz: 30.0,
            cores: 10,
            price_ceiling_per_ghz: 1.0,
            energy_wh_per_ghz: 1.0,
            weight: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelParams {
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub reference_distance: f64,
    pub pathloss_exp_los: f64,
    pub pathloss_exp_nlos: f64,
    pub nakagami_m_los: f64,
    pub nakagami_m_nlos: f64,
    pub shadowing_db_los: f64,
    pub shadowing_db_nlos: f64,
    pub noise_dbm: f64,
    pub los_model: LosModel,
    pub los_probability: f64,
    /// Decay length of the exponential LoS model (m).
    pub los_decay_m: f64,
    pub fading_power: f64,
    pub light_speed: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            bandwidth_hz: 40e6,
            carrier_hz: 5.9e9,
            reference_distance: 1.0,
            pathloss_exp_los: 3.0,
            pathloss_exp_nlos: 4.0,
            nakagami_m_los: 2.0,
            nakagami_m_nlos: 1.0,
            shadowing_db_los: 3.0,
            shadowing_db_nlos: 4.0,
            noise_dbm: -98.0,
            los_model: LosModel::Constant,
            los_probability: 0.8,
            los_decay_m: 200.0,
            fading_power: 1.0,
            light_speed: 3e8,
        }
    }
}

impl ChannelParams {
    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyParams {
    pub alpha_vehicle: f64,
    pub alpha_server: f64,
    pub tau: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            alpha_vehicle: 7.8e-27,
            alpha_server: 7.8e-27,
            tau: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackhaulParams {
    pub fiber_rate: f64,
    pub cloud_rate: f64,
}

impl Default for BackhaulParams {
    fn default() -> Self {
        BackhaulParams {
            fiber_rate: 4e9,
            cloud_rate: 100e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MobilityConfig {
    pub arrival_mode: ArrivalMode,
    pub direction_sign: DirectionSign,
    pub prior: MobilityPrior,
    pub prior_confidence: f64,
    pub markov_persistence: f64,
}

impl Default for MobilityConfig {
    fn default() -> Self {
        MobilityConfig {
            arrival_mode: ArrivalMode::Corrected,
            direction_sign: DirectionSign::Approach,
            prior: MobilityPrior::Heading,
            prior_confidence: 1.0,
            markov_persistence: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BargainConfig {
    pub horizon: u32,
    pub clamp_partitions: bool,
    pub convergence_tol: f64,
}

impl Default for BargainConfig {
    fn default() -> Self {
        BargainConfig {
            horizon: 10,
            clamp_partitions: true,
            convergence_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PricingConfig {
    /// Opening price of a negotiation ($/GHz).
    pub initial_price_per_ghz: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            initial_price_per_ghz: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeParams {
    pub nco_initial_probability: f64,
    pub nco_learning_rate: f64,
    pub opora_price_step: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            nco_initial_probability: 0.5,
            nco_learning_rate: 0.3,
            opora_price_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    pub apr_mode: AprMode,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            apr_mode: AprMode::Cycles,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub task: TaskSection,
    pub vehicle: VehicleSection,
    pub server: ServerSection,
    pub cloud: CloudSection,
    pub channel: ChannelParams,
    pub energy: EnergyParams,
    pub backhaul: BackhaulParams,
    pub mobility: MobilityConfig,
    pub bargain: BargainConfig,
    pub pricing: PricingConfig,
    pub baselines: SchemeParams,
    pub metrics: MetricsConfig,
}

fn open_unit(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(Error::Config(format!($($fmt)+)));
        }
    };
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        ensure!(s.road_length > 0.0, "scenario.road_length must be > 0");
        ensure!(s.lane_count >= 1, "scenario.lane_count must be >= 1");
        ensure!(s.lane_width > 0.0, "scenario.lane_width must be > 0");
        ensure!(s.slot_duration > 0.0, "scenario.slot_duration must be > 0");
        ensure!(s.epoch_length >= 1, "scenario.epoch_length must be >= 1");
        ensure!(
            (0.0..=1.0).contains(&s.task_gen_probability),
            "scenario.task_gen_probability must lie in [0, 1]"
        );
        s.speed.check("scenario.speed")?;
        ensure!(s.speed.min >= 0.0, "scenario.speed must be nonnegative");
        ensure!(s.server_count >= 1, "scenario.server_count must be >= 1");
        ensure!(s.server_radius > 0.0, "scenario.server_radius must be > 0");
        ensure!(
            2.0 * s.server_radius * s.server_count as f64 <= s.road_length,
            "server coverages overlap: 2 * {} m * {} servers exceeds road length {} m",
            s.server_radius,
            s.server_count,
            s.road_length
        );
        ensure!(s.rsu_offset >= 0.0, "scenario.rsu_offset must be >= 0");

        let t = &self.task;
        ensure!(t.size_mean_kb > 0.0, "task.size_mean_kb must be > 0");
        ensure!(
            t.size_spread_kb >= 0.0 && t.size_spread_kb < t.size_mean_kb,
            "task.size_spread_kb must lie in [0, size_mean_kb)"
        );
        t.intensity.check("task.intensity")?;
        t.deadline.check("task.deadline")?;
        t.result_kb.check("task.result_kb")?;
        ensure!(t.intensity.min > 0.0, "task.intensity must be > 0");
        ensure!(t.deadline.min > 0.0, "task.deadline must be > 0");
        ensure!(t.result_kb.min > 0.0, "task.result_kb must be > 0");

        let v = &self.vehicle;
        v.cpu_ghz.check("vehicle.cpu_ghz")?;
        ensure!(v.cpu_ghz.min > 0.0, "vehicle.cpu_ghz must be > 0");
        ensure!(v.payment_budget > 0.0, "vehicle.payment_budget must be > 0");
        ensure!(v.energy_wh_per_ghz > 0.0, "vehicle.energy_wh_per_ghz must be > 0");
        v.weight.check("vehicle.weight")?;
        ensure!(
            open_unit(v.weight.min) && open_unit(v.weight.max),
            "vehicle.weight must lie strictly inside (0, 1)"
        );
        ensure!(v.tx_power_dbm.is_finite(), "vehicle.tx_power_dbm must be finite");

        let sv = &self.server;
        sv.cpu_ghz.check("server.cpu_ghz")?;
        ensure!(sv.cpu_ghz.min > 0.0, "server.cpu_ghz must be > 0");
        ensure!(
            sv.cores[0] >= 1 && sv.cores[0] <= sv.cores[1],
            "server.cores must be [min, max] with 1 <= min <= max"
        );
        ensure!(sv.price_ceiling_per_ghz > 0.0, "server.price_ceiling_per_ghz must be > 0");
        ensure!(sv.energy_wh_per_ghz > 0.0, "server.energy_wh_per_ghz must be > 0");
        sv.weight.check("server.weight")?;
        ensure!(
            open_unit(sv.weight.min) && open_unit(sv.weight.max),
            "server.weight must lie strictly inside (0, 1)"
        );
        ensure!(sv.sic_capacity >= 1, "server.sic_capacity must be >= 1");

        let c = &self.cloud;
        ensure!(c.cpu_ghz > 0.0 && c.cores >= 1, "cloud needs cpu_ghz > 0 and cores >= 1");
        ensure!(c.price_ceiling_per_ghz > 0.0, "cloud.price_ceiling_per_ghz must be > 0");
        ensure!(c.energy_wh_per_ghz > 0.0, "cloud.energy_wh_per_ghz must be > 0");
        ensure!(open_unit(c.weight), "cloud.weight must lie strictly inside (0, 1)");

        let ch = &self.channel;
        ensure!(ch.bandwidth_hz > 0.0, "channel.bandwidth_hz must be > 0");
        ensure!(ch.carrier_hz > 0.0, "channel.carrier_hz must be > 0");
        ensure!(ch.reference_distance > 0.0, "channel.reference_distance must be > 0");
        ensure!(
            ch.pathloss_exp_los <= ch.pathloss_exp_nlos,
            "channel.pathloss_exp_los must not exceed pathloss_exp_nlos"
        );
        for m in [ch.nakagami_m_los, ch.nakagami_m_nlos] {
            ensure!((0.5..=5.0).contains(&m), "Nakagami m must lie in [0.5, 5], got {m}");
        }
        ensure!(
            ch.shadowing_db_los >= 0.0 && ch.shadowing_db_nlos >= 0.0,
            "shadowing deviations must be >= 0"
        );
        ensure!(
            (0.0..=1.0).contains(&ch.los_probability),
            "channel.los_probability must lie in [0, 1]"
        );
        ensure!(ch.los_decay_m > 0.0, "channel.los_decay_m must be > 0");
        ensure!(ch.fading_power > 0.0, "channel.fading_power must be > 0");
        ensure!(ch.light_speed > 0.0, "channel.light_speed must be > 0");

        let e = &self.energy;
        ensure!(
            e.alpha_vehicle >= 0.0 && e.alpha_server >= 0.0,
            "switched capacitance must be >= 0"
        );
        ensure!(e.tau > 0.0, "energy.tau must be > 0");

        let b = &self.backhaul;
        ensure!(b.fiber_rate > 0.0 && b.cloud_rate > 0.0, "backhaul rates must be > 0");

        let m = &self.mobility;
        ensure!(
            (0.0..=1.0).contains(&m.prior_confidence),
            "mobility.prior_confidence must lie in [0, 1]"
        );
        ensure!(
            (0.0..=1.0).contains(&m.markov_persistence),
            "mobility.markov_persistence must lie in [0, 1]"
        );

        ensure!(self.bargain.horizon >= 1, "bargain.horizon must be >= 1");
        ensure!(self.bargain.convergence_tol > 0.0, "bargain.convergence_tol must be > 0");
        ensure!(
            self.pricing.initial_price_per_ghz > 0.0,
            "pricing.initial_price_per_ghz must be > 0"
        );

        let p = &self.baselines;
        ensure!(
            (0.0..=1.0).contains(&p.nco_initial_probability),
            "baselines.nco_initial_probability must lie in [0, 1]"
        );
        ensure!(
            (0.0..=1.0).contains(&p.nco_learning_rate),
            "baselines.nco_learning_rate must lie in [0, 1]"
        );
        ensure!(p.opora_price_step > 0.0, "baselines.opora_price_step must be > 0");
        Ok(())
    }

    /// Resolve a key to its dotted path. Bare field names are accepted when
    /// they occur in exactly one section.
    pub fn resolve_key(&self, key: &str) -> Result<String> {
        let root = toml::Table::try_from(self).expect("config always serializes");
        if key.contains('.') {
            let mut parts = key.splitn(2, '.');
            let (sec, field) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
            let found = root
                .get(sec)
                .and_then(|v| v.as_table())
                .is_some_and(|t| t.contains_key(field));
            return if found {
                Ok(key.to_string())
            } else {
                Err(Error::UnknownKey(key.to_string()))
            };
        }
        let hits: Vec<String> = root
            .iter()
            .filter_map(|(sec, v)| {
                v.as_table()
                    .filter(|t| t.contains_key(key))
                    .map(|_| format!("{sec}.{key}"))
            })
            .collect();
        match hits.len() {
            1 => Ok(hits.into_iter().next().unwrap_or_default()),
            0 => Err(Error::UnknownKey(key.to_string())),
            _ => Err(Error::Config(format!(
                "key `{key}` is ambiguous, use one of: {}",
                hits.join(", ")
            ))),
        }
    }

    /// Set one field from its textual value, then revalidate.
    pub fn set_key(&mut self, key: &str, raw: &str) -> Result<()> {
        let path = self.resolve_key(key)?;
        let (sec, field) = path.split_once('.').unwrap_or((path.as_str(), ""));
        let mut root = toml::Table::try_from(&*self).expect("config always serializes");
        if let Some(t) = root.get_mut(sec).and_then(|v| v.as_table_mut()) {
            let value = coerce_like(t.get(field), parse_value(raw));
            t.insert(field.to_string(), value);
        }
        let next: ScenarioConfig = root
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("{path} = {raw}: {e}")))?;
        next.validate()?;
        *self = next;
        Ok(())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

// `400` parses as an integer; float fields and arrays need it widened.
fn coerce_like(existing: Option<&toml::Value>, v: toml::Value) -> toml::Value {
    use toml::Value;
    match (existing, v) {
        (Some(Value::Float(_)), Value::Integer(i)) => Value::Float(i as f64),
        (Some(Value::Array(old)), Value::Array(new)) => {
            let proto = old.first();
            Value::Array(new.into_iter().map(|x| coerce_like(proto, x)).collect())
        }
        (_, v) => v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string();
        let back = ScenarioConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ScenarioConfig::from_toml_str("[scenario]\nroad_lenght = 5.0\n").unwrap_err();
        assert!(err.to_string().contains("road_lenght"), "{err}");
        assert!(ScenarioConfig::from_toml_str("[nope]\nx = 1\n").is_err());
    }

    #[test]
    fn overlapping_coverage_rejected() {
        let err = ScenarioConfig::from_toml_str(
            "[scenario]\nroad_length = 1000.0\nserver_count = 10\nserver_radius = 100.0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("overlap"));
    }

    #[test]
    fn degenerate_weights_rejected() {
        let err = ScenarioConfig::from_toml_str("[vehicle]\nweight = [0.2, 1.0]\n").unwrap_err();
        assert!(err.to_string().contains("vehicle.weight"));
        assert!(ScenarioConfig::from_toml_str("[server]\nweight = [0.0, 0.5]\n").is_err());
    }

    #[test]
    fn set_key_dotted_and_bare() {
        let mut cfg = ScenarioConfig::default();
        cfg.set_key("scenario.vehicle_count", "150").unwrap();
        assert_eq!(cfg.scenario.vehicle_count, 150);
        cfg.set_key("size_mean_kb", "400").unwrap();
        assert_eq!(cfg.task.size_mean_kb, 400.0);
        cfg.set_key("scheme", "opora").unwrap();
        assert_eq!(cfg.scenario.scheme, Scheme::Opora);
        cfg.set_key("speed", "[5.0, 10.0]").unwrap();
        assert_eq!(cfg.scenario.speed, Range::new(5.0, 10.0));
        assert!(matches!(cfg.set_key("bogus", "1"), Err(Error::UnknownKey(_))));
        assert!(cfg.set_key("cpu_ghz", "3").is_err(), "ambiguous across sections");
        assert!(cfg.set_key("scenario.task_gen_probability", "1.5").is_err());
        assert_eq!(cfg.scenario.task_gen_probability, 0.05, "failed set leaves config untouched");
    }

    #[test]
    fn scheme_names_parse() {
        for s in Scheme::ALL {
            assert_eq!(Scheme::parse(s.name()).unwrap(), s);
        }
        assert_eq!(Scheme::parse("BARGAIN-MATCH").unwrap(), Scheme::BargainMatch);
        assert!(Scheme::parse("greedy").is_err());
    }
}
