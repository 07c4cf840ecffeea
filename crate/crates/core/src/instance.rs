//! Instance data model: clusters of identical units, system-level series,
//! validation, deterministic synthetic generation, and JSON round-tripping.
//!
//! The time step is one hour throughout, so MW and MWh are numerically
//! interchangeable.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Penalty prices attached to generated instances.
pub const DEFAULT_SHED_PENALTY: f64 = 10_000.0;
pub const DEFAULT_CURTAIL_PENALTY: f64 = 500.0;
pub const DEFAULT_RESERVE_SHORTFALL_PENALTY: f64 = 2_000.0;

/// A group of `unit_count` identical generating units.
///
/// Power bounds and ramp limits are per unit; `init_online` units are
/// committed at t = 0 and have been in that state long enough that minimum
/// up/down times carry no constraint across the horizon start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub id: String,
    pub unit_count: u32,
    pub p_max: f64,
    pub p_min: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub su_cap: f64,
    pub sd_cap: f64,
    pub min_up: u32,
    pub min_down: u32,
    pub cost_fixed: f64,
    pub cost_variable: f64,
    pub cost_startup: f64,
    pub cost_shutdown: f64,
    #[serde(default)]
    pub init_online: u32,
    #[serde(default)]
    pub init_power_above_min: f64,
}

impl ClusterSpec {
    /// Power band available above minimum output, per unit.
    pub fn span(&self) -> f64 {
        self.p_max - self.p_min
    }

    /// Initial above-minimum power of slot/unit `g` (1-based), distributing
    /// `init_power_above_min` greedily from the first slot, each up to the
    /// unit span. The same rule seeds both the slot-ordered formulation and
    /// the per-unit expansion, so their horizon starts agree.
    pub fn init_slot_power(&self, g: u32) -> f64 {
        if g > self.init_online {
            return 0.0;
        }
        let filled = (g as f64 - 1.0) * self.span();
        (self.init_power_above_min - filled).clamp(0.0, self.span())
    }

    /// 1 if slot `g` (1-based) is online at t = 0, else 0. Initial
    /// commitment follows the slot staircase: the first `init_online`
    /// slots are on.
    pub fn init_slot_on(&self, g: u32) -> bool {
        g <= self.init_online
    }
}

/// A single-bus unit-commitment instance over `horizon` hourly periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemInstance {
    pub horizon: u32,
    pub demand: Vec<f64>,
    pub reserve_up_req: Vec<f64>,
    pub reserve_down_req: Vec<f64>,
    pub cost_curtailment: f64,
    pub cost_shed: f64,
    pub cost_reserve_shortfall: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub renewable_profile: Option<Vec<f64>>,
    pub clusters: Vec<ClusterSpec>,
}

impl SystemInstance {
    pub fn total_units(&self) -> u32 {
        self.clusters.iter().map(|c| c.unit_count).sum()
    }

    pub fn fleet_capacity(&self) -> f64 {
        self.clusters
            .iter()
            .map(|c| c.unit_count as f64 * c.p_max)
            .sum()
    }

    /// Copy of the instance with both reserve requirement series replaced
    /// by `fraction * demand_t`.
    pub fn with_reserve_fraction(&self, fraction: f64) -> SystemInstance {
        let req: Vec<f64> = self.demand.iter().map(|d| fraction * d).collect();
        SystemInstance {
            reserve_up_req: req.clone(),
            reserve_down_req: req,
            ..self.clone()
        }
    }
}

/// One violated invariant found by [`validate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Cluster id, or `None` for system-level fields.
    pub cluster: Option<String>,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.cluster {
            Some(c) => write!(f, "cluster {}: {} ({})", c, self.message, self.field),
            None => write!(f, "{} ({})", self.message, self.field),
        }
    }
}

/// Checks every documented invariant and returns one entry per violation.
/// An empty report means the instance is well-formed.
pub fn validate_instance(instance: &SystemInstance) -> Vec<Violation> {
    let mut report = Vec::new();
    let sys = |field: &str, message: String| Violation {
        cluster: None,
        field: field.to_string(),
        message,
    };

    if instance.horizon < 1 {
        report.push(sys("horizon", "T < 1".to_string()));
    }
    let t = instance.horizon as usize;
    let mut series = vec![
        ("demand", &instance.demand),
        ("reserve_up_req", &instance.reserve_up_req),
        ("reserve_down_req", &instance.reserve_down_req),
    ];
    if let Some(ren) = &instance.renewable_profile {
        series.push(("renewable_profile", ren));
    }
    for (name, values) in series {
        if values.len() != t {
            report.push(sys(
                name,
                format!("series length {} != T = {}", values.len(), t),
            ));
        }
        if let Some(v) = values.iter().find(|v| **v < 0.0 || !v.is_finite()) {
            report.push(sys(name, format!("entry {} < 0", v)));
        }
    }

    let mut seen = std::collections::BTreeSet::new();
    for cluster in &instance.clusters {
        if !seen.insert(cluster.id.clone()) {
            report.push(sys("clusters", format!("duplicate cluster id {}", cluster.id)));
        }
        report.extend(validate_cluster(cluster));
    }
    report
}

fn validate_cluster(c: &ClusterSpec) -> Vec<Violation> {
    let mut report = Vec::new();
    let mut push = |field: &str, message: String| {
        report.push(Violation {
            cluster: Some(c.id.clone()),
            field: field.to_string(),
            message,
        })
    };

    if c.id.is_empty()
        || !c
            .id
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || matches!(ch, '_' | '-' | '.'))
    {
        // Ids are embedded in variable and row names, so they must stay
        // whitespace- and bracket-free to survive the MPS round trip.
        push("id", format!("id {:?} is not [A-Za-z0-9_.-]+", c.id));
    }
    if c.unit_count < 1 {
        push("unit_count", "G < 1".to_string());
    }
    if c.p_min < 0.0 {
        push("p_min", format!("P_ < 0 ({})", c.p_min));
    }
    if c.p_min > c.p_max {
        push("p_min", format!("P_ > PBAR ({} > {})", c.p_min, c.p_max));
    }
    if c.su_cap < c.p_min {
        push("su_cap", format!("SU < P_ ({} < {})", c.su_cap, c.p_min));
    }
    if c.su_cap > c.p_max {
        push("su_cap", format!("SU > PBAR ({} > {})", c.su_cap, c.p_max));
    }
    if c.sd_cap < c.p_min {
        push("sd_cap", format!("SD < P_ ({} < {})", c.sd_cap, c.p_min));
    }
    if c.sd_cap > c.p_max {
        push("sd_cap", format!("SD > PBAR ({} > {})", c.sd_cap, c.p_max));
    }
    if c.ramp_up <= 0.0 {
        push("ramp_up", format!("RU <= 0 ({})", c.ramp_up));
    }
    if c.ramp_down <= 0.0 {
        push("ramp_down", format!("RD <= 0 ({})", c.ramp_down));
    }
    if c.min_up < 1 {
        push("min_up", format!("TU < 1 ({})", c.min_up));
    }
    if c.min_down < 1 {
        push("min_down", format!("TD < 1 ({})", c.min_down));
    }
    if c.init_online > c.unit_count {
        push(
            "init_online",
            format!("u0 > G ({} > {})", c.init_online, c.unit_count),
        );
    }
    let p0_cap = c.span() * c.init_online as f64;
    if c.init_power_above_min < 0.0 || c.init_power_above_min > p0_cap {
        push(
            "init_power_above_min",
            format!("p0 outside [0, (PBAR - P_) * u0] ({})", c.init_power_above_min),
        );
    }
    report
}

/// Inclusive sampling range for one generator parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub lo: f64,
    pub hi: f64,
}

impl ValueRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        ValueRange { lo, hi }
    }

    pub fn fixed(v: f64) -> Self {
        ValueRange { lo: v, hi: v }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntRange {
    pub lo: u32,
    pub hi: u32,
}

impl IntRange {
    pub fn new(lo: u32, hi: u32) -> Self {
        IntRange { lo, hi }
    }

    pub fn fixed(v: u32) -> Self {
        IntRange { lo: v, hi: v }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.gen_range(self.lo..=self.hi)
        }
    }
}

/// Configuration for deterministic synthetic instances.
///
/// `p_max` and `p_min` are absolute MW ranges; ramp limits and
/// startup/shutdown capabilities are drawn as fractions of the per-unit
/// band `p_max - p_min` so sampled values always respect the cluster
/// invariants. Identical seeds produce byte-identical instances.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_clusters: u32,
    pub units_per_cluster: u32,
    pub horizon: u32,
    pub p_max: ValueRange,
    pub p_min: ValueRange,
    pub ramp_up_frac: ValueRange,
    pub ramp_down_frac: ValueRange,
    pub su_frac: ValueRange,
    pub sd_frac: ValueRange,
    pub min_up: IntRange,
    pub min_down: IntRange,
    pub cost_fixed: ValueRange,
    pub cost_variable: ValueRange,
    pub cost_startup: ValueRange,
    pub cost_shutdown: ValueRange,
    /// Peak demand divided by base demand, >= 1.
    pub peak_base_ratio: f64,
    /// Up and down reserve requirement as a fraction of hourly demand.
    pub reserve_fraction: f64,
    /// Multiplicative jitter applied to the daily demand curve.
    pub demand_noise: f64,
    /// Per-unit variable-cost noise in percent, applied only when building
    /// the individual-unit formulation.
    pub cost_noise_pct: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 1,
            n_clusters: 3,
            units_per_cluster: 3,
            horizon: 24,
            p_max: ValueRange::new(120.0, 280.0),
            p_min: ValueRange::new(25.0, 70.0),
            ramp_up_frac: ValueRange::new(0.25, 0.6),
            ramp_down_frac: ValueRange::new(0.25, 0.6),
            su_frac: ValueRange::new(0.6, 1.0),
            sd_frac: ValueRange::new(0.6, 1.0),
            min_up: IntRange::new(1, 2),
            min_down: IntRange::new(1, 2),
            cost_fixed: ValueRange::new(4.0, 12.0),
            cost_variable: ValueRange::new(18.0, 55.0),
            cost_startup: ValueRange::new(150.0, 900.0),
            cost_shutdown: ValueRange::new(0.0, 60.0),
            peak_base_ratio: 2.0,
            reserve_fraction: 0.1,
            demand_noise: 0.02,
            cost_noise_pct: 0.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), InstanceError> {
        let config = |msg: String| Err(InstanceError::Config(msg));
        if self.n_clusters < 1 || self.units_per_cluster < 1 {
            return config("n_clusters and units_per_cluster must be >= 1".into());
        }
        if self.horizon < 1 {
            return config("horizon must be >= 1".into());
        }
        for (name, r) in [
            ("p_max", self.p_max),
            ("p_min", self.p_min),
            ("ramp_up_frac", self.ramp_up_frac),
            ("ramp_down_frac", self.ramp_down_frac),
            ("su_frac", self.su_frac),
            ("sd_frac", self.sd_frac),
            ("cost_fixed", self.cost_fixed),
            ("cost_variable", self.cost_variable),
            ("cost_startup", self.cost_startup),
            ("cost_shutdown", self.cost_shutdown),
        ] {
            if !(r.lo <= r.hi) {
                return config(format!("{name}: empty range [{}, {}]", r.lo, r.hi));
            }
        }
        if self.p_max.lo <= 0.0 {
            return config("p_max must be positive".into());
        }
        if self.p_min.lo < 0.0 {
            return config("p_min must be nonnegative".into());
        }
        if self.ramp_up_frac.lo <= 0.0 || self.ramp_down_frac.lo <= 0.0 {
            return config("ramp fractions must be positive".into());
        }
        for (name, r) in [("su_frac", self.su_frac), ("sd_frac", self.sd_frac)] {
            if r.lo < 0.0 || r.hi > 1.0 {
                return config(format!("{name} must lie within [0, 1]"));
            }
        }
        for (name, r) in [("min_up", self.min_up), ("min_down", self.min_down)] {
            if r.lo < 1 || r.lo > r.hi {
                return config(format!("{name}: invalid range [{}, {}]", r.lo, r.hi));
            }
        }
        if self.peak_base_ratio < 1.0 {
            return config("peak_base_ratio must be >= 1".into());
        }
        if self.reserve_fraction < 0.0 || self.demand_noise < 0.0 || self.cost_noise_pct < 0.0 {
            return config("reserve_fraction, demand_noise, cost_noise_pct must be >= 0".into());
        }
        Ok(())
    }
}

/// Deterministically generates an instance from `cfg`. The sampled fleet is
/// sized so total capacity covers at least 1.2x peak demand, and the result
/// always passes [`validate_instance`].
pub fn generate_random_instance(cfg: &GeneratorConfig) -> Result<SystemInstance, InstanceError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut clusters = Vec::with_capacity(cfg.n_clusters as usize);
    for k in 0..cfg.n_clusters {
        let p_max = cfg.p_max.sample(&mut rng);
        let lo = cfg.p_min.lo.max(0.0);
        let hi = cfg.p_min.hi.min(p_max);
        if lo > hi {
            return Err(InstanceError::Config(format!(
                "p_min range [{}, {}] incompatible with sampled p_max {}",
                cfg.p_min.lo, cfg.p_min.hi, p_max
            )));
        }
        let p_min = ValueRange::new(lo, hi).sample(&mut rng);
        let span = p_max - p_min;
        let ramp_up = cfg.ramp_up_frac.sample(&mut rng) * span;
        let ramp_down = cfg.ramp_down_frac.sample(&mut rng) * span;
        if ramp_up <= 0.0 || ramp_down <= 0.0 {
            return Err(InstanceError::Config(
                "sampled ramp limits are not positive; widen p_max/p_min ranges".into(),
            ));
        }
        clusters.push(ClusterSpec {
            id: format!("c{}", k + 1),
            unit_count: cfg.units_per_cluster,
            p_max,
            p_min,
            ramp_up,
            ramp_down,
            su_cap: p_min + cfg.su_frac.sample(&mut rng) * span,
            sd_cap: p_min + cfg.sd_frac.sample(&mut rng) * span,
            min_up: cfg.min_up.sample(&mut rng),
            min_down: cfg.min_down.sample(&mut rng),
            cost_fixed: cfg.cost_fixed.sample(&mut rng),
            cost_variable: cfg.cost_variable.sample(&mut rng),
            cost_startup: cfg.cost_startup.sample(&mut rng),
            cost_shutdown: cfg.cost_shutdown.sample(&mut rng),
            init_online: 0,
            init_power_above_min: 0.0,
        });
    }

    let fleet: f64 = clusters.iter().map(|c| c.unit_count as f64 * c.p_max).sum();
    // Head-room factor below 0.97 keeps peak * (1 + noise) under fleet / 1.2.
    let peak = fleet / 1.2 * rng.gen_range(0.88..=0.97);
    let base = peak / cfg.peak_base_ratio;
    let phase = rng.gen_range(0.0..24.0);
    let t_count = cfg.horizon as usize;
    let mut demand = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let angle = 2.0 * std::f64::consts::PI * (t as f64 + phase) / 24.0;
        let shape = 0.5 * (1.0 - angle.cos());
        let jitter = 1.0 + cfg.demand_noise * rng.gen_range(-1.0..=1.0);
        demand.push(((base + (peak - base) * shape) * jitter).max(0.0));
    }
    let reserve: Vec<f64> = demand.iter().map(|d| cfg.reserve_fraction * d).collect();

    let instance = SystemInstance {
        horizon: cfg.horizon,
        demand,
        reserve_up_req: reserve.clone(),
        reserve_down_req: reserve,
        cost_curtailment: DEFAULT_CURTAIL_PENALTY,
        cost_shed: DEFAULT_SHED_PENALTY,
        cost_reserve_shortfall: DEFAULT_RESERVE_SHORTFALL_PENALTY,
        renewable_profile: None,
        clusters,
    };
    let report = validate_instance(&instance);
    if !report.is_empty() {
        return Err(InstanceError::Validation(report));
    }
    Ok(instance)
}

/// Single-cluster instance on which the classic clustered ramp constraints
/// admit a demand step that individual units cannot follow.
///
/// Ten units share one cluster. The initial state pins eight units at full
/// output and leaves one part-loaded unit plus one offline unit, so the
/// cluster-level ramp pool advertises ten times the usable headroom. Hour 1
/// holds that state, hour 2 steps demand up by 60 MW (between one and ten
/// per-unit ramps), hour 3 holds. Serving the step per unit requires
/// starting the idle unit, which is feasible but costs its startup price;
/// the cluster-level ramp admits the step with no startup at all.
pub fn build_ramp_trap_instance() -> SystemInstance {
    ramp_trap(10, 9, 3, &[840.0, 900.0, 900.0])
}

/// Reduced ramp trap small enough for the enumeration oracle: three units,
/// two hours, immediate 30 MW step from the pinned initial state.
pub fn build_ramp_trap_reduced() -> SystemInstance {
    ramp_trap(3, 2, 2, &[170.0, 170.0])
}

fn ramp_trap(units: u32, init_online: u32, horizon: u32, demand: &[f64]) -> SystemInstance {
    let cluster = ClusterSpec {
        id: "trap".to_string(),
        unit_count: units,
        p_max: 100.0,
        p_min: 20.0,
        ramp_up: 20.0,
        ramp_down: 20.0,
        su_cap: 60.0,
        sd_cap: 60.0,
        min_up: 2,
        min_down: 2,
        cost_fixed: 10.0,
        cost_variable: 2.0,
        cost_startup: 200.0,
        cost_shutdown: 0.0,
        init_online,
        // Greedy split pins the first init_online - 1 units at full output
        // and leaves the last online unit 20 MW above minimum.
        init_power_above_min: (init_online as f64 - 1.0) * 80.0 + 20.0,
    };
    SystemInstance {
        horizon,
        demand: demand.to_vec(),
        reserve_up_req: vec![0.0; horizon as usize],
        reserve_down_req: vec![0.0; horizon as usize],
        cost_curtailment: DEFAULT_CURTAIL_PENALTY,
        cost_shed: DEFAULT_SHED_PENALTY,
        cost_reserve_shortfall: DEFAULT_RESERVE_SHORTFALL_PENALTY,
        renewable_profile: None,
        clusters: vec![cluster],
    }
}

/// Errors from parsing, generating, or validating instances.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceError {
    /// Malformed JSON or a schema mismatch, with source position.
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// Structurally valid document violating instance invariants.
    Validation(Vec<Violation>),
    /// Unusable generator configuration.
    Config(String),
}

impl fmt::Display for InstanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceError::Parse {
                line,
                column,
                message,
            } => write!(f, "parse error at line {line}, column {column}: {message}"),
            InstanceError::Validation(report) => {
                write!(f, "invalid instance:")?;
                for v in report {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
            InstanceError::Config(msg) => write!(f, "generator configuration error: {msg}"),
        }
    }
}

impl std::error::Error for InstanceError {}

/// Parses and validates a JSON instance document. Unknown fields are
/// rejected, series lengths must match the horizon, and every cluster
/// invariant must hold.
pub fn parse_instance(text: &str) -> Result<SystemInstance, InstanceError> {
    let instance: SystemInstance =
        serde_json::from_str(text).map_err(|e| InstanceError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    let report = validate_instance(&instance);
    if !report.is_empty() {
        return Err(InstanceError::Validation(report));
    }
    Ok(instance)
}

/// Serializes with canonical field order and full numeric precision.
pub fn serialize_instance(instance: &SystemInstance) -> String {
    let mut text = serde_json::to_string_pretty(instance).expect("instance serialization");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cluster() -> ClusterSpec {
        ClusterSpec {
            id: "c1".to_string(),
            unit_count: 1,
            p_max: 50.0,
            p_min: 10.0,
            ramp_up: 50.0,
            ramp_down: 50.0,
            su_cap: 50.0,
            sd_cap: 50.0,
            min_up: 1,
            min_down: 1,
            cost_fixed: 5.0,
            cost_variable: 2.0,
            cost_startup: 100.0,
            cost_shutdown: 0.0,
            init_online: 1,
            init_power_above_min: 20.0,
        }
    }

    fn small_instance() -> SystemInstance {
        SystemInstance {
            horizon: 2,
            demand: vec![30.0, 40.0],
            reserve_up_req: vec![0.0, 0.0],
            reserve_down_req: vec![0.0, 0.0],
            cost_curtailment: 500.0,
            cost_shed: 10_000.0,
            cost_reserve_shortfall: 2_000.0,
            renewable_profile: None,
            clusters: vec![small_cluster()],
        }
    }

    #[test]
    fn well_formed_instance_has_empty_report() {
        assert!(validate_instance(&small_instance()).is_empty());
    }

    #[test]
    fn su_below_p_min_is_reported() {
        let mut instance = small_instance();
        instance.clusters[0].su_cap = 5.0;
        instance.clusters[0].p_min = 20.0;
        let report = validate_instance(&instance);
        assert!(report.iter().any(|v| v.message.contains("SU < P_")));
        assert!(report.iter().any(|v| v.field == "su_cap"));
    }

    #[test]
    fn zero_min_up_is_reported() {
        let mut instance = small_instance();
        instance.clusters[0].min_up = 0;
        let report = validate_instance(&instance);
        assert!(report.iter().any(|v| v.message.contains("TU < 1")));
    }

    #[test]
    fn wrong_series_length_is_reported() {
        let mut instance = small_instance();
        instance.demand = vec![30.0];
        let report = validate_instance(&instance);
        assert!(report.iter().any(|v| v.field == "demand"));
    }

    #[test]
    fn duplicate_cluster_ids_are_reported() {
        let mut instance = small_instance();
        instance.clusters.push(small_cluster());
        let report = validate_instance(&instance);
        assert!(report.iter().any(|v| v.message.contains("duplicate cluster id")));
    }

    #[test]
    fn init_power_above_cap_is_reported() {
        let mut instance = small_instance();
        instance.clusters[0].init_power_above_min = 100.0;
        let report = validate_instance(&instance);
        assert!(report.iter().any(|v| v.field == "init_power_above_min"));
    }

    #[test]
    fn generator_is_deterministic() {
        let cfg = GeneratorConfig {
            seed: 42,
            ..GeneratorConfig::default()
        };
        let a = serialize_instance(&generate_random_instance(&cfg).unwrap());
        let b = serialize_instance(&generate_random_instance(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn generator_echoes_structure() {
        let cfg = GeneratorConfig {
            seed: 7,
            n_clusters: 3,
            units_per_cluster: 3,
            horizon: 24,
            ..GeneratorConfig::default()
        };
        let instance = generate_random_instance(&cfg).unwrap();
        assert_eq!(instance.clusters.len(), 3);
        assert!(instance.clusters.iter().all(|c| c.unit_count == 3));
        assert_eq!(instance.horizon, 24);
        assert_eq!(instance.demand.len(), 24);
    }

    #[test]
    fn generated_instances_validate_and_cover_peak() {
        for seed in 0..20 {
            let cfg = GeneratorConfig {
                seed,
                ..GeneratorConfig::default()
            };
            let instance = generate_random_instance(&cfg).unwrap();
            assert!(validate_instance(&instance).is_empty(), "seed {seed}");
            let peak = instance.demand.iter().cloned().fold(0.0, f64::max);
            assert!(
                instance.fleet_capacity() >= 1.2 * peak,
                "seed {seed}: capacity {} < 1.2 * peak {}",
                instance.fleet_capacity(),
                peak
            );
        }
    }

    #[test]
    fn infeasible_p_min_range_is_a_config_error() {
        let cfg = GeneratorConfig {
            p_max: ValueRange::new(50.0, 60.0),
            p_min: ValueRange::new(80.0, 90.0),
            ..GeneratorConfig::default()
        };
        match generate_random_instance(&cfg) {
            Err(InstanceError::Config(msg)) => assert!(msg.contains("p_min")),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parse_round_trip_is_lossless() {
        let instance = small_instance();
        let text = serialize_instance(&instance);
        let parsed = parse_instance(&text).unwrap();
        assert_eq!(parsed, instance);
    }

    #[test]
    fn missing_demand_names_the_field() {
        let text = r#"{"horizon": 1, "reserve_up_req": [0.0], "reserve_down_req": [0.0],
            "cost_curtailment": 0.0, "cost_shed": 0.0, "cost_reserve_shortfall": 0.0,
            "clusters": []}"#;
        match parse_instance(text) {
            Err(InstanceError::Parse { message, .. }) => assert!(message.contains("demand")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut doc: serde_json::Value =
            serde_json::from_str(&serialize_instance(&small_instance())).unwrap();
        doc.as_object_mut()
            .unwrap()
            .insert("mystery".to_string(), serde_json::json!(1));
        match parse_instance(&doc.to_string()) {
            Err(InstanceError::Parse { message, .. }) => assert!(message.contains("mystery")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn demand_length_mismatch_is_a_validation_error() {
        let mut instance = small_instance();
        instance.demand.push(10.0);
        let text = serde_json::to_string(&instance).unwrap();
        match parse_instance(&text) {
            Err(InstanceError::Validation(report)) => {
                assert!(report.iter().any(|v| v.field == "demand"))
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn ramp_trap_is_valid_and_steps_between_one_and_g_ramps() {
        let instance = build_ramp_trap_instance();
        assert!(validate_instance(&instance).is_empty());
        let c = &instance.clusters[0];
        let step = instance.demand[1] - instance.demand[0];
        assert!(c.ramp_up < step && step < c.unit_count as f64 * c.ramp_up);

        let reduced = build_ramp_trap_reduced();
        assert!(validate_instance(&reduced).is_empty());
        assert!(reduced.total_units() <= 4 && reduced.horizon <= 8);
        let step = reduced.demand[0]
            - (reduced.clusters[0].init_online as f64 * reduced.clusters[0].p_min
                + reduced.clusters[0].init_power_above_min);
        assert!(reduced.clusters[0].ramp_up < step);
    }

    #[test]
    fn greedy_initial_split_pins_leading_slots() {
        let instance = build_ramp_trap_instance();
        let c = &instance.clusters[0];
        assert_eq!(c.init_slot_power(1), 80.0);
        assert_eq!(c.init_slot_power(8), 80.0);
        assert_eq!(c.init_slot_power(9), 20.0);
        assert_eq!(c.init_slot_power(10), 0.0);
        assert!(c.init_slot_on(9));
        assert!(!c.init_slot_on(10));
    }
}
