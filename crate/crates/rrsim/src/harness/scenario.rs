//! Scenario configuration: a line-oriented `section.key = value` format with
//! full validation, canonical printing, and round-trip stability
//! (`parse(print(c)) == c`).

use crate::world::geometry::Bounds;
use crate::world::grid::{GridError, RegionGrid};
use std::fmt::Write as _;

/// Execution fidelity of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Beacons, per-hop latency, mobility, failures.
    Detailed,
    /// Idealized routing level: tables synthesized once, zero-latency hops,
    /// no beacons; static topologies only.
    HighLevel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolKind {
    Rr,
    Ght,
    GhtStar,
    Flooding,
    Centralized,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Rr => "rr",
            ProtocolKind::Ght => "ght",
            ProtocolKind::GhtStar => "ght_star",
            ProtocolKind::Flooding => "flooding",
            ProtocolKind::Centralized => "centralized",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeocastKind {
    /// In-region flood only.
    Flood,
    /// Flood plus border-node face probes that bridge in-region gaps.
    Gfpg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkloadModel {
    /// Few insertions up front, many lookups at a steady rate.
    Service,
    /// Many event insertions, few gateway queries.
    Event,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopologyCfg {
    pub n: u32,
    /// Explicit bounds; when absent a square of `n × area_per_node` is used.
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub area_per_node: f64,
    pub seed: u64,
    /// Placement rejects positions inside this region (empty-region studies).
    pub exclude_region: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadioCfg {
    pub range: f64,
    /// Bernoulli per-link delivery loss probability.
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCfg {
    pub regions: Option<u32>,
    pub region_side: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RrCfg {
    pub s_min: u32,
    pub check_interval: f64,
    pub cache_ttl: f64,
    pub cache_capacity: u32,
    pub geocast: GeocastKind,
    pub hash_count: u32,
    /// Server position-check period (region-exit detection).
    pub position_check: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GhtCfg {
    pub refresh_interval: f64,
    pub replanarize_interval: f64,
    /// High-level mode only: resample the hash index when the home
    /// perimeter exceeds sqrt(n) hops.
    pub reject_long_perimeters: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadCfg {
    pub model: WorkloadModel,
    pub insertions: u32,
    pub lookups: u32,
    pub lookup_rate: f64,
    pub event_types: u32,
    pub events_per_type: u32,
    pub queries: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicsCfg {
    pub max_speed: f64,
    pub pause: f64,
    pub failure_fraction: f64,
    /// Position error radius as a fraction of radio range.
    pub error_fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetCfg {
    pub ttl: u32,
    pub beacon_interval: f64,
    pub beacon_expiry: f64,
    pub hop_latency: f64,
    pub jitter: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    /// Master seed: workload and protocol randomness.
    pub seed: u64,
    pub mode: Mode,
    pub duration: f64,
    pub protocol: ProtocolKind,
    /// Retransmission budget for acknowledged operations.
    pub retries: u32,
    pub topology: TopologyCfg,
    pub radio: RadioCfg,
    pub grid: GridCfg,
    pub rr: RrCfg,
    pub ght: GhtCfg,
    pub workload: WorkloadCfg,
    pub dynamics: DynamicsCfg,
    pub net: NetCfg,
}

impl Default for ScenarioConfig {
    /// Reference defaults: 100 nodes at 1024 m²/node, 80 m range, 4 regions,
    /// 3 servers minimum, 30 insertions then 300 lookups at 2/s, 200 s.
    fn default() -> Self {
        ScenarioConfig {
            seed: 1,
            mode: Mode::Detailed,
            duration: 200.0,
            protocol: ProtocolKind::Rr,
            retries: 3,
            topology: TopologyCfg {
                n: 100,
                width: None,
                height: None,
                area_per_node: 1024.0,
                seed: 1,
                exclude_region: None,
            },
            radio: RadioCfg { range: 80.0, loss: 0.0 },
            grid: GridCfg { regions: Some(4), region_side: None },
            rr: RrCfg {
                s_min: 3,
                check_interval: 20.0,
                cache_ttl: 30.0,
                cache_capacity: 3,
                geocast: GeocastKind::Flood,
                hash_count: 1,
                position_check: 1.0,
            },
            ght: GhtCfg {
                refresh_interval: 10.0,
                replanarize_interval: 2.0,
                reject_long_perimeters: false,
            },
            workload: WorkloadCfg {
                model: WorkloadModel::Service,
                insertions: 30,
                lookups: 300,
                lookup_rate: 2.0,
                event_types: 100,
                events_per_type: 10,
                queries: 50,
            },
            dynamics: DynamicsCfg {
                max_speed: 0.0,
                pause: 0.0,
                failure_fraction: 0.0,
                error_fraction: 0.0,
            },
            net: NetCfg {
                ttl: 256,
                beacon_interval: 1.0,
                beacon_expiry: 4.5,
                hop_latency: 0.005,
                jitter: 0.001,
            },
        }
    }
}

impl ScenarioConfig {
    /// Deployment bounds: explicit, or a square sized by density.
    pub fn bounds(&self) -> Bounds {
        match (self.topology.width, self.topology.height) {
            (Some(w), Some(h)) => Bounds::new(w, h),
            _ => {
                let side = ((self.topology.n as f64) * self.topology.area_per_node).sqrt();
                Bounds::new(side, side)
            }
        }
    }

    pub fn region_grid(&self) -> Result<RegionGrid, GridError> {
        let b = self.bounds();
        match (self.grid.regions, self.grid.region_side) {
            (_, Some(side)) => Ok(RegionGrid::from_cell_side(b, side)),
            (Some(r), None) => RegionGrid::from_region_count(b, r),
            (None, None) => RegionGrid::from_region_count(b, 4),
        }
    }

    /// Lookup-to-insertion ratio of the configured workload.
    pub fn lir(&self) -> f64 {
        match self.workload.model {
            WorkloadModel::Service => {
                self.workload.lookups as f64 / (self.workload.insertions.max(1) as f64)
            }
            WorkloadModel::Event => {
                let ins = self.workload.event_types * self.workload.events_per_type;
                self.workload.queries as f64 / (ins.max(1) as f64)
            }
        }
    }

    /// All invariant violations, each with the offending field path.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut bad = |path: &str, why: String| v.push(format!("{path}: {why}"));

        if self.topology.n == 0 {
            bad("topology.n", "must be >= 1".into());
        }
        if self.topology.width.is_some() != self.topology.height.is_some() {
            bad("topology.width/height", "set both or neither".into());
        }
        if let (Some(w), Some(h)) = (self.topology.width, self.topology.height) {
            if w <= 0.0 || h <= 0.0 {
                bad("topology.width/height", "must be positive".into());
            } else {
                let want = self.topology.n as f64 * self.topology.area_per_node;
                let got = w * h;
                if (got - want).abs() / want > 0.5 {
                    bad(
                        "topology.width/height",
                        format!(
                            "area {got:.0} m^2 inconsistent with n x area_per_node = {want:.0} m^2"
                        ),
                    );
                }
            }
        }
        if self.topology.area_per_node <= 0.0 {
            bad("topology.area_per_node", "must be positive".into());
        }
        if self.radio.range <= 0.0 {
            bad("radio.range", "must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.radio.loss) {
            bad("radio.loss", "must be in [0, 1]".into());
        }
        if self.duration <= 0.0 {
            bad("duration", "must be positive".into());
        }
        match (self.grid.regions, self.grid.region_side) {
            (Some(_), Some(_)) => {
                bad("grid.regions/grid.region_side", "set at most one".into())
            }
            (Some(0), _) => bad("grid.regions", "must be >= 1".into()),
            (_, Some(s)) if s <= 0.0 => bad("grid.region_side", "must be positive".into()),
            _ => {}
        }
        if let Err(e) = self.region_grid() {
            bad("grid", format!("{e}"));
        } else if let Some(x) = self.topology.exclude_region {
            let r = self.region_grid().unwrap().regions();
            if x >= r {
                bad("topology.exclude_region", format!("region {x} out of range (R={r})"));
            }
        }
        if self.rr.s_min == 0 {
            bad("rr.s_min", "must be >= 1".into());
        }
        for (path, val) in [
            ("rr.check_interval", self.rr.check_interval),
            ("rr.cache_ttl", self.rr.cache_ttl),
            ("rr.position_check", self.rr.position_check),
            ("ght.refresh_interval", self.ght.refresh_interval),
            ("ght.replanarize_interval", self.ght.replanarize_interval),
            ("net.beacon_interval", self.net.beacon_interval),
            ("net.beacon_expiry", self.net.beacon_expiry),
        ] {
            if val <= 0.0 {
                bad(path, "must be positive".into());
            }
        }
        if self.rr.hash_count == 0 {
            bad("rr.hash_count", "must be >= 1".into());
        }
        if self.net.ttl == 0 {
            bad("net.ttl", "must be >= 1".into());
        }
        if self.net.hop_latency < 0.0 || self.net.jitter < 0.0 {
            bad("net.hop_latency/jitter", "must be non-negative".into());
        }
        if self.workload.lookup_rate < 0.0 {
            bad("workload.lookup_rate", "must be non-negative".into());
        }
        if self.workload.model == WorkloadModel::Service
            && self.workload.lookups > 0
            && self.workload.lookup_rate <= 0.0
        {
            bad("workload.lookup_rate", "must be positive when lookups > 0".into());
        }
        if self.dynamics.max_speed < 0.0 || self.dynamics.pause < 0.0 {
            bad("dynamics.max_speed/pause", "must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.dynamics.failure_fraction) {
            bad("dynamics.failure_fraction", "must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.dynamics.error_fraction) {
            bad("dynamics.error_fraction", "must be in [0, 1]".into());
        }
        if self.mode == Mode::HighLevel {
            if self.dynamics.max_speed > 0.0 {
                bad("dynamics.max_speed", "high_level mode is static only".into());
            }
            if self.dynamics.failure_fraction > 0.0 {
                bad("dynamics.failure_fraction", "high_level mode is static only".into());
            }
            if self.radio.loss > 0.0 {
                bad("radio.loss", "high_level mode has no link loss".into());
            }
        }
        if self.ght.reject_long_perimeters && self.mode == Mode::Detailed {
            bad(
                "ght.reject_long_perimeters",
                "requires mode = high_level (offline topology knowledge)".into(),
            );
        }
        // The workload must fit inside the run.
        let horizon = match self.workload.model {
            WorkloadModel::Service => {
                if self.workload.lookups > 0 && self.workload.lookup_rate > 0.0 {
                    workload_start()
                        + self.workload.lookups as f64 / self.workload.lookup_rate
                } else {
                    workload_start()
                }
            }
            WorkloadModel::Event => self.duration * 0.9,
        };
        if self.duration < horizon {
            bad(
                "duration",
                format!("{} s does not cover the workload (needs >= {horizon:.1} s)", self.duration),
            );
        }
        v
    }

    /// Canonical text form; `parse` of this text reproduces `self` exactly.
    pub fn print(&self) -> String {
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "seed = {}", self.seed);
        let _ = writeln!(
            w,
            "mode = {}",
            match self.mode {
                Mode::Detailed => "detailed",
                Mode::HighLevel => "high_level",
            }
        );
        let _ = writeln!(w, "duration = {}", self.duration);
        let _ = writeln!(w, "protocol = {}", self.protocol.name());
        let _ = writeln!(w, "retries = {}", self.retries);
        let _ = writeln!(w, "topology.n = {}", self.topology.n);
        if let Some(x) = self.topology.width {
            let _ = writeln!(w, "topology.width = {x}");
        }
        if let Some(x) = self.topology.height {
            let _ = writeln!(w, "topology.height = {x}");
        }
        let _ = writeln!(w, "topology.area_per_node = {}", self.topology.area_per_node);
        let _ = writeln!(w, "topology.seed = {}", self.topology.seed);
        if let Some(x) = self.topology.exclude_region {
            let _ = writeln!(w, "topology.exclude_region = {x}");
        }
        let _ = writeln!(w, "radio.range = {}", self.radio.range);
        let _ = writeln!(w, "radio.loss = {}", self.radio.loss);
        if let Some(x) = self.grid.regions {
            let _ = writeln!(w, "grid.regions = {x}");
        }
        if let Some(x) = self.grid.region_side {
            let _ = writeln!(w, "grid.region_side = {x}");
        }
        let _ = writeln!(w, "rr.s_min = {}", self.rr.s_min);
        let _ = writeln!(w, "rr.check_interval = {}", self.rr.check_interval);
        let _ = writeln!(w, "rr.cache_ttl = {}", self.rr.cache_ttl);
        let _ = writeln!(w, "rr.cache_capacity = {}", self.rr.cache_capacity);
        let _ = writeln!(
            w,
            "rr.geocast = {}",
            match self.rr.geocast {
                GeocastKind::Flood => "flood",
                GeocastKind::Gfpg => "gfpg",
            }
        );
        let _ = writeln!(w, "rr.hash_count = {}", self.rr.hash_count);
        let _ = writeln!(w, "rr.position_check = {}", self.rr.position_check);
        let _ = writeln!(w, "ght.refresh_interval = {}", self.ght.refresh_interval);
        let _ = writeln!(w, "ght.replanarize_interval = {}", self.ght.replanarize_interval);
        let _ = writeln!(w, "ght.reject_long_perimeters = {}", self.ght.reject_long_perimeters);
        let _ = writeln!(
            w,
            "workload.model = {}",
            match self.workload.model {
                WorkloadModel::Service => "service",
                WorkloadModel::Event => "event",
            }
        );
        let _ = writeln!(w, "workload.insertions = {}", self.workload.insertions);
        let _ = writeln!(w, "workload.lookups = {}", self.workload.lookups);
        let _ = writeln!(w, "workload.lookup_rate = {}", self.workload.lookup_rate);
        let _ = writeln!(w, "workload.event_types = {}", self.workload.event_types);
        let _ = writeln!(w, "workload.events_per_type = {}", self.workload.events_per_type);
        let _ = writeln!(w, "workload.queries = {}", self.workload.queries);
        let _ = writeln!(w, "dynamics.max_speed = {}", self.dynamics.max_speed);
        let _ = writeln!(w, "dynamics.pause = {}", self.dynamics.pause);
        let _ = writeln!(w, "dynamics.failure_fraction = {}", self.dynamics.failure_fraction);
        let _ = writeln!(w, "dynamics.error_fraction = {}", self.dynamics.error_fraction);
        let _ = writeln!(w, "net.ttl = {}", self.net.ttl);
        let _ = writeln!(w, "net.beacon_interval = {}", self.net.beacon_interval);
        let _ = writeln!(w, "net.beacon_expiry = {}", self.net.beacon_expiry);
        let _ = writeln!(w, "net.hop_latency = {}", self.net.hop_latency);
        let _ = writeln!(w, "net.jitter = {}", self.net.jitter);
        s
    }

    /// Parse the line-oriented `key = value` form. Returns either a config
    /// or the full list of problems (unknown keys, bad values, violated
    /// invariants), each tagged with its field path.
    pub fn parse(text: &str) -> Result<ScenarioConfig, Vec<String>> {
        let mut cfg = ScenarioConfig::default();
        // Optional fields are cleared so that an explicit file fully
        // describes them; defaults above only seed the scalar fields.
        let mut errs = Vec::new();
        let mut grid_touched = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, val)) = line.split_once('=') else {
                errs.push(format!("line {}: expected `key = value`", lineno + 1));
                continue;
            };
            let key = key.trim();
            let val = val.trim();
            if let Err(e) = apply_field(&mut cfg, key, val, &mut grid_touched) {
                errs.push(format!("line {}: {e}", lineno + 1));
            }
        }
        errs.extend(cfg.validate());
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(errs)
        }
    }
}

/// Earliest workload activity (insertions burst at this time).
pub fn workload_start() -> f64 {
    5.0
}

fn apply_field(
    cfg: &mut ScenarioConfig,
    key: &str,
    val: &str,
    grid_touched: &mut bool,
) -> Result<(), String> {
    fn p<T: std::str::FromStr>(key: &str, val: &str) -> Result<T, String> {
        val.parse::<T>().map_err(|_| format!("{key}: cannot parse `{val}`"))
    }
    match key {
        "seed" => cfg.seed = p(key, val)?,
        "mode" => {
            cfg.mode = match val {
                "detailed" => Mode::Detailed,
                "high_level" => Mode::HighLevel,
                _ => return Err(format!("mode: unknown value `{val}`")),
            }
        }
        "duration" => cfg.duration = p(key, val)?,
        "protocol" => {
            cfg.protocol = match val {
                "rr" => ProtocolKind::Rr,
                "ght" => ProtocolKind::Ght,
                "ght_star" => ProtocolKind::GhtStar,
                "flooding" => ProtocolKind::Flooding,
                "centralized" => ProtocolKind::Centralized,
                _ => return Err(format!("protocol: unknown value `{val}`")),
            }
        }
        "retries" => cfg.retries = p(key, val)?,
        "topology.n" => cfg.topology.n = p(key, val)?,
        "topology.width" => cfg.topology.width = Some(p(key, val)?),
        "topology.height" => cfg.topology.height = Some(p(key, val)?),
        "topology.area_per_node" => cfg.topology.area_per_node = p(key, val)?,
        "topology.seed" => cfg.topology.seed = p(key, val)?,
        "topology.exclude_region" => cfg.topology.exclude_region = Some(p(key, val)?),
        "radio.range" => cfg.radio.range = p(key, val)?,
        "radio.loss" => cfg.radio.loss = p(key, val)?,
        "grid.regions" => {
            if !*grid_touched {
                cfg.grid = GridCfg { regions: None, region_side: None };
                *grid_touched = true;
            }
            cfg.grid.regions = Some(p(key, val)?)
        }
        "grid.region_side" => {
            if !*grid_touched {
                cfg.grid = GridCfg { regions: None, region_side: None };
                *grid_touched = true;
            }
            cfg.grid.region_side = Some(p(key, val)?)
        }
        "rr.s_min" => cfg.rr.s_min = p(key, val)?,
        "rr.check_interval" => cfg.rr.check_interval = p(key, val)?,
        "rr.cache_ttl" => cfg.rr.cache_ttl = p(key, val)?,
        "rr.cache_capacity" => cfg.rr.cache_capacity = p(key, val)?,
        "rr.geocast" => {
            cfg.rr.geocast = match val {
                "flood" => GeocastKind::Flood,
                "gfpg" => GeocastKind::Gfpg,
                _ => return Err(format!("rr.geocast: unknown value `{val}`")),
            }
        }
        "rr.hash_count" => cfg.rr.hash_count = p(key, val)?,
        "rr.position_check" => cfg.rr.position_check = p(key, val)?,
        "ght.refresh_interval" => cfg.ght.refresh_interval = p(key, val)?,
        "ght.replanarize_interval" => cfg.ght.replanarize_interval = p(key, val)?,
        "ght.reject_long_perimeters" => cfg.ght.reject_long_perimeters = p(key, val)?,
        "workload.model" => {
            cfg.workload.model = match val {
                "service" => WorkloadModel::Service,
                "event" => WorkloadModel::Event,
                _ => return Err(format!("workload.model: unknown value `{val}`")),
            }
        }
        "workload.insertions" => cfg.workload.insertions = p(key, val)?,
        "workload.lookups" => cfg.workload.lookups = p(key, val)?,
        "workload.lookup_rate" => cfg.workload.lookup_rate = p(key, val)?,
        "workload.event_types" => cfg.workload.event_types = p(key, val)?,
        "workload.events_per_type" => cfg.workload.events_per_type = p(key, val)?,
        "workload.queries" => cfg.workload.queries = p(key, val)?,
        "dynamics.max_speed" => cfg.dynamics.max_speed = p(key, val)?,
        "dynamics.pause" => cfg.dynamics.pause = p(key, val)?,
        "dynamics.failure_fraction" => cfg.dynamics.failure_fraction = p(key, val)?,
        "dynamics.error_fraction" => cfg.dynamics.error_fraction = p(key, val)?,
        "net.ttl" => cfg.net.ttl = p(key, val)?,
        "net.beacon_interval" => cfg.net.beacon_interval = p(key, val)?,
        "net.beacon_expiry" => cfg.net.beacon_expiry = p(key, val)?,
        "net.hop_latency" => cfg.net.hop_latency = p(key, val)?,
        "net.jitter" => cfg.net.jitter = p(key, val)?,
        _ => return Err(format!("unknown field `{key}`")),
    }
    Ok(())
}
