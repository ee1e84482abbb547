//! World construction and per-slot task generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{dbm_to_watts, AppPreset, Range, ScenarioConfig};
use crate::error::{Error, Result};

pub const BITS_PER_KB: f64 = 8000.0;
pub const BITS_PER_BYTE: f64 = 8.0;
pub const HZ_PER_GHZ: f64 = 1e9;
pub const JOULES_PER_WH: f64 = 3600.0;

pub type VehicleId = usize;
pub type ServerId = usize;
pub type TaskId = u64;

/// Draw from `U[r.min, r.max]`. Always consumes exactly one draw, also for a
/// degenerate range.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, r: Range) -> f64 {
    let u: f64 = rng.random();
    r.min + (r.max - r.min) * u
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: VehicleId,
    pub x: f64,
    pub y: f64,
    /// Position at the previous epoch, unwrapped so that `x - prev_x` is
    /// the true displacement. `None` before the first epoch.
    pub prev_x: Option<f64>,
    pub speed: f64,
    pub heading: i8,
    pub f_max: f64,
    pub energy_budget: f64,
    pub energy_used: f64,
    pub payment_budget: f64,
    pub weight: f64,
    pub tx_power: f64,
    /// First slot at which the local core is free again.
    pub core_busy_until: u64,
}

impl VehicleState {
    pub fn core_idle(&self, slot: u64) -> bool {
        self.core_busy_until <= slot
    }

    pub fn energy_left(&self) -> f64 {
        (self.energy_budget - self.energy_used).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServerKind {
    Edge,
    Cloud,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub id: ServerId,
    pub kind: ServerKind,
    pub x: f64,
    pub y: f64,
    /// Coverage radius; zero for the cloud.
    pub radius: f64,
    pub f_max: f64,
    pub n_core: usize,
    /// Slot at which each core becomes free (idle when `<= now`).
    pub core_release: Vec<u64>,
    /// Resource held by each core's current task.
    pub core_alloc: Vec<f64>,
    pub energy_budget: f64,
    pub energy_used: f64,
    /// $ per Hz.
    pub price_ceiling: f64,
    pub weight: f64,
    pub sic_capacity: usize,
}

impl ServerState {
    pub fn core_capacity(&self) -> f64 {
        self.f_max / self.n_core as f64
    }

    pub fn idle_cores(&self, slot: u64) -> usize {
        self.core_release.iter().filter(|&&r| r <= slot).count()
    }

    pub fn busy_cores(&self, slot: u64) -> usize {
        self.n_core - self.idle_cores(slot)
    }

    pub fn f_committed(&self, slot: u64) -> f64 {
        self.core_release
            .iter()
            .zip(&self.core_alloc)
            .filter(|(&r, _)| r > slot)
            .map(|(_, &f)| f)
            .sum()
    }

    pub fn f_available(&self, slot: u64) -> f64 {
        (self.f_max - self.f_committed(slot)).max(0.0)
    }

    /// Resource a single new task may be offered: one idle core's share.
    pub fn offer_capacity(&self, slot: u64) -> f64 {
        if self.idle_cores(slot) == 0 {
            0.0
        } else {
            self.core_capacity().min(self.f_available(slot))
        }
    }

    pub fn energy_left(&self) -> f64 {
        (self.energy_budget - self.energy_used).max(0.0)
    }

    /// Occupy the lowest-index idle core until `release`.
    pub fn occupy_core(&mut self, slot: u64, release: u64, f: f64) -> Option<usize> {
        let k = self.core_release.iter().position(|&r| r <= slot)?;
        self.core_release[k] = release;
        self.core_alloc[k] = f;
        Some(k)
    }

    pub fn covers(&self, x: f64) -> bool {
        self.kind == ServerKind::Edge && (x - self.x).abs() <= self.radius
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub id: TaskId,
    pub owner: VehicleId,
    pub gen_slot: u64,
    pub d_in: f64,
    pub d_out: f64,
    /// cycles/bit
    pub intensity: f64,
    pub c_req: f64,
    pub t_max: f64,
}

impl TaskSpec {
    pub fn new(
        id: TaskId,
        owner: VehicleId,
        gen_slot: u64,
        d_in: f64,
        d_out: f64,
        intensity: f64,
        t_max: f64,
    ) -> Result<Self> {
        if !(d_in > 0.0 && d_out > 0.0 && intensity > 0.0 && t_max > 0.0) {
            return Err(Error::Domain("task sizes, intensity and deadline must be > 0"));
        }
        Ok(TaskSpec {
            id,
            owner,
            gen_slot,
            d_in,
            d_out,
            intensity,
            c_req: d_in * intensity,
            t_max,
        })
    }
}

/// Sampling ranges for new tasks, in bits, cycles/bit and seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskDistribution {
    pub size_bits: Range,
    pub intensity: Range,
    pub deadline_s: Range,
    pub result_bits: Range,
}

impl TaskDistribution {
    pub fn from_config(cfg: &ScenarioConfig) -> TaskDistribution {
        let t = &cfg.task;
        match t.preset {
            AppPreset::None => TaskDistribution {
                size_bits: Range::new(
                    t.size_mean_kb - t.size_spread_kb,
                    t.size_mean_kb + t.size_spread_kb,
                )
                .scale(BITS_PER_KB),
                intensity: t.intensity,
                deadline_s: t.deadline,
                result_bits: t.result_kb.scale(BITS_PER_KB),
            },
            p => preset_distribution(p).expect("named presets always resolve"),
        }
    }
}

fn preset_distribution(p: AppPreset) -> Option<TaskDistribution> {
    // (size bytes, deadline ms)
    let (size, deadline) = match p {
        AppPreset::None => return None,
        AppPreset::CollisionWarning => (Range::new(300.0, 1000.0), Range::point(100.0)),
        AppPreset::EmergencyBreak => (Range::new(200.0, 400.0), Range::point(120.0)),
        AppPreset::TrafficJam => (Range::point(300.0), Range::point(2000.0)),
        AppPreset::HazardousLocation => (Range::new(300.0, 1000.0), Range::new(1000.0, 2000.0)),
        AppPreset::SpeedHarmonization => (Range::new(300.0, 1000.0), Range::new(400.0, 1500.0)),
    };
    Some(TaskDistribution {
        size_bits: size.scale(BITS_PER_BYTE),
        intensity: Range::new(1e3, 1e4),
        deadline_s: deadline.scale(1e-3),
        result_bits: Range::new(0.1, 1.0).scale(BITS_PER_KB),
    })
}

pub fn load_app_preset(name: &str) -> Result<TaskDistribution> {
    let p = match name {
        "collision_warning" => AppPreset::CollisionWarning,
        "emergency_break" => AppPreset::EmergencyBreak,
        "traffic_jam" => AppPreset::TrafficJam,
        "hazardous_location" => AppPreset::HazardousLocation,
        "speed_harmonization" => AppPreset::SpeedHarmonization,
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    preset_distribution(p).ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Independent random streams so that, for example, a scheme that flips
/// coins does not shift the task sequence seen by another scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRng {
    pub tasks: ChaCha8Rng,
    pub channel: ChaCha8Rng,
    pub scheme: ChaCha8Rng,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(k);
            r
        };
        SimRng {
            tasks: stream(1),
            channel: stream(2),
            scheme: stream(3),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub config: ScenarioConfig,
    pub slot: u64,
    pub vehicles: Vec<VehicleState>,
    /// Edge servers in road order, then the cloud as the last entry.
    pub servers: Vec<ServerState>,
    pub next_task_id: TaskId,
    pub rng: SimRng,
}

impl WorldState {
    pub fn edge_count(&self) -> usize {
        self.servers.len() - 1
    }

    pub fn cloud_index(&self) -> ServerId {
        self.servers.len() - 1
    }

    pub fn cloud(&self) -> &ServerState {
        &self.servers[self.cloud_index()]
    }

    pub fn edges(&self) -> &[ServerState] {
        &self.servers[..self.edge_count()]
    }

    /// Edge server whose coverage contains the vehicle, if any.
    pub fn attached_server(&self, v: &VehicleState) -> Option<ServerId> {
        let e = self.edge_count();
        let spacing = self.config.scenario.road_length / e as f64;
        let guess = ((v.x / spacing).floor() as isize).clamp(0, e as isize - 1) as usize;
        // coverages do not overlap, so the nearest center is the only candidate
        let lo = guess.saturating_sub(1);
        let hi = (guess + 1).min(e - 1);
        (lo..=hi)
            .filter(|&j| self.servers[j].covers(v.x))
            .min_by(|&a, &b| {
                let da = (v.x - self.servers[a].x).abs();
                let db = (v.x - self.servers[b].x).abs();
                da.total_cmp(&db)
            })
    }
}

pub fn build_scenario(config: &ScenarioConfig) -> Result<WorldState> {
    config.validate()?;
    let s = &config.scenario;
    let mut rng = ChaCha8Rng::seed_from_u64(s.rng_seed);
    rng.set_stream(0);

    let spacing = s.road_length / s.server_count as f64;
    let mut servers = Vec::with_capacity(s.server_count + 1);
    for j in 0..s.server_count {
        let f_ghz = uniform(&mut rng, config.server.cpu_ghz);
        let [cmin, cmax] = config.server.cores;
        let n_core = rng.random_range(cmin..=cmax) as usize;
        servers.push(ServerState {
            id: j,
            kind: ServerKind::Edge,
            x: (j as f64 + 0.5) * spacing,
            y: -s.rsu_offset,
            radius: s.server_radius,
            f_max: f_ghz * HZ_PER_GHZ,
            n_core,
            core_release: vec![0; n_core],
            core_alloc: vec![0.0; n_core],
            energy_budget: config.server.energy_wh_per_ghz * f_ghz * JOULES_PER_WH,
            energy_used: 0.0,
            price_ceiling: config.server.price_ceiling_per_ghz / HZ_PER_GHZ,
            weight: uniform(&mut rng, config.server.weight),
            sic_capacity: config.server.sic_capacity,
        });
    }
    let c = &config.cloud;
    servers.push(ServerState {
        id: s.server_count,
        kind: ServerKind::Cloud,
        x: 0.5 * s.road_length,
        y: 0.0,
        radius: 0.0,
        f_max: c.cpu_ghz * HZ_PER_GHZ,
        n_core: c.cores as usize,
        core_release: vec![0; c.cores as usize],
        core_alloc: vec![0.0; c.cores as usize],
        energy_budget: c.energy_wh_per_ghz * c.cpu_ghz * JOULES_PER_WH,
        energy_used: 0.0,
        price_ceiling: c.price_ceiling_per_ghz / HZ_PER_GHZ,
        weight: c.weight,
        sic_capacity: usize::MAX,
    });

    let per_dir = (s.lane_count / 2).max(1);
    let tx_power = dbm_to_watts(config.vehicle.tx_power_dbm);
    let mut vehicles = Vec::with_capacity(s.vehicle_count);
    for id in 0..s.vehicle_count {
        let x = rng.random::<f64>() * s.road_length;
        let heading: i8 = if rng.random_bool(0.5) { 1 } else { -1 };
        let lane_in_dir = rng.random_range(0..per_dir);
        // +1 traffic uses the lanes nearest the roadside units
        let lane = if heading > 0 || s.lane_count < 2 {
            lane_in_dir
        } else {
            per_dir + lane_in_dir
        };
        let f_ghz = uniform(&mut rng, config.vehicle.cpu_ghz);
        vehicles.push(VehicleState {
            id,
            x,
            y: (lane as f64 + 0.5) * s.lane_width,
            prev_x: None,
            speed: uniform(&mut rng, s.speed),
            heading,
            f_max: f_ghz * HZ_PER_GHZ,
            energy_budget: config.vehicle.energy_wh_per_ghz * f_ghz * JOULES_PER_WH,
            energy_used: 0.0,
            payment_budget: config.vehicle.payment_budget,
            weight: uniform(&mut rng, config.vehicle.weight),
            tx_power,
            core_busy_until: 0,
        });
    }

    Ok(WorldState {
        config: config.clone(),
        slot: 0,
        vehicles,
        servers,
        next_task_id: 0,
        rng: SimRng::new(s.rng_seed),
    })
}

/// Generation step for one slot. Every vehicle consumes the same number of
/// draws whether or not it emits a task, so the stream stays aligned
/// across configurations that only change the generation probability.
pub fn sample_tasks<R: Rng + ?Sized>(
    vehicles: &[VehicleState],
    slot: u64,
    p_gen: f64,
    dist: &TaskDistribution,
    next_id: &mut TaskId,
    rng: &mut R,
) -> Vec<TaskSpec> {
    let mut out = Vec::new();
    for v in vehicles {
        let hit = rng.random::<f64>() < p_gen;
        let d_in = uniform(rng, dist.size_bits);
        let intensity = uniform(rng, dist.intensity);
        let t_max = uniform(rng, dist.deadline_s);
        let d_out = uniform(rng, dist.result_bits);
        if hit {
            let task = TaskSpec::new(*next_id, v.id, slot, d_in, d_out, intensity, t_max)
                .expect("distribution ranges are validated positive");
            *next_id += 1;
            out.push(task);
        }
    }
    out
}

impl WorldState {
    pub fn sample_tasks(&mut self) -> Vec<TaskSpec> {
        let dist = TaskDistribution::from_config(&self.config);
        let p = self.config.scenario.task_gen_probability;
        sample_tasks(
            &self.vehicles,
            self.slot,
            p,
            &dist,
            &mut self.next_task_id,
            &mut self.rng.tasks,
        )
    }
}
