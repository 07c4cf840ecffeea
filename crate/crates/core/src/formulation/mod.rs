//! Translates a [`SystemInstance`] into a [`MilpModel`] for each
//! formulation variant.
//!
//! Per cluster, the classic formulation tracks integer commitment counts
//! `u`, startups `y`, shutdowns `z`, above-minimum power `p`, total output
//! `p_hat`, and reserves `r+`/`r-`. The slot-resolved variants add one
//! ordered binary slot per unit (`u_tilde`) with its own power and reserve
//! share, committed first-slot-first so identical-unit symmetry is broken.
//! Every emitted row carries its equation-family tag (`eq01`..`eq24`,
//! `sysbal`, `sysrup`, `sysrdn`), which is the normative composition
//! contract checked by the tests.

mod check;
mod schedule;

pub use check::{check_schedule_feasibility, FeasibilityViolation};
pub use schedule::{
    extract_schedule, slot_projection, ClusterSchedule, Schedule, ScheduleError, SlotSeries,
};

use crate::instance::{validate_instance, ClusterSpec, SystemInstance, Violation};
use crate::milp::{
    assemble_model, LinearConstraint, MilpModel, ModelError, ModelMetadata, Sense, VarKind,
    Variable,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

/// The five formulation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Variant {
    /// Individual unit commitment: every physical unit is its own
    /// single-unit cluster with binary commitment.
    Iuc,
    /// Classic clustered formulation with integer counts and pooled ramps.
    Ccuc,
    /// Slot-resolved formulation without the startup/shutdown capability
    /// rows (plain slot capacity instead).
    PcucS,
    /// Slot-resolved formulation without per-slot ramps; cluster-level
    /// ramps are retained so ramping stays bounded.
    PcucR,
    /// Complete slot-resolved formulation.
    Pcuc,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Iuc,
        Variant::Ccuc,
        Variant::PcucS,
        Variant::PcucR,
        Variant::Pcuc,
    ];

    /// Variants that carry per-slot variables and ordering constraints.
    pub fn is_slot_resolved(self) -> bool {
        matches!(self, Variant::PcucS | Variant::PcucR | Variant::Pcuc)
    }

    /// Variants with cluster-level ramp rows.
    fn has_cluster_ramps(self) -> bool {
        matches!(self, Variant::Iuc | Variant::Ccuc | Variant::PcucR)
    }

    /// Variants with per-slot ramp rows.
    fn has_slot_ramps(self) -> bool {
        matches!(self, Variant::Pcuc | Variant::PcucS)
    }

    /// Variants with the slot startup/shutdown capability rows in place of
    /// plain slot capacity.
    fn has_slot_susd(self) -> bool {
        matches!(self, Variant::Pcuc | Variant::PcucR)
    }

    /// Variants keeping the cluster-level down-reserve floor, which the
    /// slot-resolved variants replace with its per-slot counterpart.
    fn has_cluster_reserve_floor(self) -> bool {
        matches!(self, Variant::Iuc | Variant::Ccuc)
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Variant::Iuc => "iuc",
            Variant::Ccuc => "ccuc",
            Variant::PcucS => "pcuc-s",
            Variant::PcucR => "pcuc-r",
            Variant::Pcuc => "pcuc",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Iuc => "IUC",
            Variant::Ccuc => "CCUC",
            Variant::PcucS => "PCUC-S",
            Variant::PcucR => "PCUC-R",
            Variant::Pcuc => "PCUC",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "iuc" => Ok(Variant::Iuc),
            "ccuc" => Ok(Variant::Ccuc),
            "pcuc-s" => Ok(Variant::PcucS),
            "pcuc-r" => Ok(Variant::PcucR),
            "pcuc" => Ok(Variant::Pcuc),
            other => Err(format!(
                "unknown variant {other}; expected one of iuc, ccuc, pcuc-s, pcuc-r, pcuc"
            )),
        }
    }
}

/// Build-time options.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    /// Label recorded in the model metadata and MPS NAME line.
    pub instance_id: String,
    /// Per-unit multiplicative noise on variable cost, in percent, applied
    /// only when expanding to individual units.
    pub iuc_noise_pct: f64,
    pub noise_seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            instance_id: "instance".to_string(),
            iuc_noise_pct: 0.0,
            noise_seed: 0,
        }
    }
}

impl BuildOptions {
    pub fn labeled(instance_id: impl Into<String>) -> Self {
        BuildOptions {
            instance_id: instance_id.into(),
            ..BuildOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FormulationError {
    InvalidInstance(Vec<Violation>),
    Model(ModelError),
}

impl fmt::Display for FormulationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulationError::InvalidInstance(report) => {
                write!(f, "instance failed validation:")?;
                for v in report {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
            FormulationError::Model(e) => write!(f, "model assembly failed: {e}"),
        }
    }
}

impl std::error::Error for FormulationError {}

impl From<ModelError> for FormulationError {
    fn from(e: ModelError) -> Self {
        FormulationError::Model(e)
    }
}

// Variable-name builders; the scheme `<group>[<cluster>][g<slot>][t<hour>]`
// is canonical so MPS output is reproducible byte for byte.

pub(crate) fn name_u(c: &str, t: usize) -> String {
    format!("u[{c}][t{t}]")
}
pub(crate) fn name_y(c: &str, t: usize) -> String {
    format!("y[{c}][t{t}]")
}
pub(crate) fn name_z(c: &str, t: usize) -> String {
    format!("z[{c}][t{t}]")
}
pub(crate) fn name_p(c: &str, t: usize) -> String {
    format!("p[{c}][t{t}]")
}
pub(crate) fn name_p_hat(c: &str, t: usize) -> String {
    format!("p_hat[{c}][t{t}]")
}
pub(crate) fn name_r_plus(c: &str, t: usize) -> String {
    format!("r_plus[{c}][t{t}]")
}
pub(crate) fn name_r_minus(c: &str, t: usize) -> String {
    format!("r_minus[{c}][t{t}]")
}
pub(crate) fn name_u_tilde(c: &str, g: usize, t: usize) -> String {
    format!("u_tilde[{c}][g{g}][t{t}]")
}
pub(crate) fn name_p_tilde(c: &str, g: usize, t: usize) -> String {
    format!("p_tilde[{c}][g{g}][t{t}]")
}
pub(crate) fn name_r_tilde_plus(c: &str, g: usize, t: usize) -> String {
    format!("r_tilde_plus[{c}][g{g}][t{t}]")
}
pub(crate) fn name_r_tilde_minus(c: &str, g: usize, t: usize) -> String {
    format!("r_tilde_minus[{c}][g{g}][t{t}]")
}
pub(crate) fn name_shed(t: usize) -> String {
    format!("shed[t{t}]")
}
pub(crate) fn name_curtail(t: usize) -> String {
    format!("curtail[t{t}]")
}
pub(crate) fn name_short_plus(t: usize) -> String {
    format!("short_plus[t{t}]")
}
pub(crate) fn name_short_minus(t: usize) -> String {
    format!("short_minus[t{t}]")
}

struct ModelBuilder {
    vars: Vec<Variable>,
    cons: Vec<LinearConstraint>,
    costs: HashMap<String, f64>,
}

impl ModelBuilder {
    fn new() -> Self {
        ModelBuilder {
            vars: Vec::new(),
            cons: Vec::new(),
            costs: HashMap::new(),
        }
    }

    fn var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64, group: &str) -> String {
        self.vars.push(Variable::new(name.clone(), kind, lower, upper, group));
        name
    }

    fn con(&mut self, tag: &str, name: String, terms: Vec<(String, f64)>, sense: Sense, rhs: f64) {
        let terms = terms.into_iter().filter(|(_, c)| *c != 0.0).collect();
        self.cons.push(LinearConstraint {
            name,
            terms,
            sense,
            rhs,
            tag: tag.to_string(),
        });
    }

    fn cost(&mut self, name: &str, coefficient: f64) {
        if coefficient != 0.0 {
            *self.costs.entry(name.to_string()).or_insert(0.0) += coefficient;
        }
    }

    fn finish(self, metadata: ModelMetadata) -> Result<MilpModel, ModelError> {
        // Objective entries in variable-creation order keeps output stable.
        let objective = self
            .vars
            .iter()
            .filter_map(|v| self.costs.get(&v.name).map(|c| (v.name.clone(), *c)))
            .collect();
        assemble_model(self.vars, self.cons, objective, metadata)
    }
}

/// Expands every cluster into `unit_count` single-unit clusters, splitting
/// the initial above-minimum power greedily across the initially-online
/// units. With `noise_pct > 0`, each unit's variable cost is scaled by an
/// independent factor drawn uniformly from +/- noise_pct percent.
pub fn expand_to_units(instance: &SystemInstance, noise_pct: f64, seed: u64) -> SystemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clusters = Vec::new();
    for c in &instance.clusters {
        for k in 1..=c.unit_count {
            let noise = if noise_pct > 0.0 {
                1.0 + rng.gen_range(-noise_pct..=noise_pct) / 100.0
            } else {
                1.0
            };
            clusters.push(ClusterSpec {
                id: format!("{}.u{}", c.id, k),
                unit_count: 1,
                cost_variable: c.cost_variable * noise,
                init_online: c.init_slot_on(k) as u32,
                init_power_above_min: c.init_slot_power(k),
                ..c.clone()
            });
        }
    }
    SystemInstance {
        clusters,
        ..instance.clone()
    }
}

/// Builds the MILP for `variant` over a validated instance.
pub fn build_formulation(
    instance: &SystemInstance,
    variant: Variant,
    opts: &BuildOptions,
) -> Result<MilpModel, FormulationError> {
    let report = validate_instance(instance);
    if !report.is_empty() {
        return Err(FormulationError::InvalidInstance(report));
    }
    let effective = match variant {
        Variant::Iuc => expand_to_units(instance, opts.iuc_noise_pct, opts.noise_seed),
        _ => instance.clone(),
    };
    let mut b = ModelBuilder::new();
    for cluster in &effective.clusters {
        emit_cluster(&mut b, cluster, effective.horizon as usize, variant);
    }
    emit_system(&mut b, &effective);
    let model = b.finish(ModelMetadata {
        variant: variant.to_string(),
        instance_id: opts.instance_id.clone(),
    })?;
    Ok(model)
}

fn emit_cluster(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize, variant: Variant) {
    let cid = c.id.as_str();
    let units = c.unit_count as usize;
    let count_kind = if c.unit_count == 1 {
        VarKind::Binary
    } else {
        VarKind::Integer
    };
    let g_f = c.unit_count as f64;

    for t in 1..=horizon {
        b.var(name_u(cid, t), count_kind, 0.0, g_f, "u");
        b.var(name_y(cid, t), count_kind, 0.0, g_f, "y");
        b.var(name_z(cid, t), count_kind, 0.0, g_f, "z");
        b.var(name_p(cid, t), VarKind::Continuous, 0.0, f64::INFINITY, "p");
        b.var(name_p_hat(cid, t), VarKind::Continuous, 0.0, f64::INFINITY, "p_hat");
        b.var(name_r_plus(cid, t), VarKind::Continuous, 0.0, f64::INFINITY, "r_plus");
        b.var(name_r_minus(cid, t), VarKind::Continuous, 0.0, f64::INFINITY, "r_minus");
    }
    if variant.is_slot_resolved() {
        for g in 1..=units {
            for t in 1..=horizon {
                b.var(name_u_tilde(cid, g, t), VarKind::Binary, 0.0, 1.0, "u_tilde");
                b.var(name_p_tilde(cid, g, t), VarKind::Continuous, 0.0, f64::INFINITY, "p_tilde");
                b.var(
                    name_r_tilde_plus(cid, g, t),
                    VarKind::Continuous,
                    0.0,
                    f64::INFINITY,
                    "r_tilde_plus",
                );
                b.var(
                    name_r_tilde_minus(cid, g, t),
                    VarKind::Continuous,
                    0.0,
                    f64::INFINITY,
                    "r_tilde_minus",
                );
            }
        }
    }

    for t in 1..=horizon {
        b.cost(&name_u(cid, t), c.cost_fixed);
        b.cost(&name_p_hat(cid, t), c.cost_variable);
        b.cost(&name_y(cid, t), c.cost_startup);
        b.cost(&name_z(cid, t), c.cost_shutdown);
    }

    commitment_logic(b, c, horizon);
    cluster_capacity(b, c, horizon, variant);
    if variant.has_cluster_ramps() {
        cluster_ramps(b, c, horizon);
    }
    if variant.is_slot_resolved() {
        slot_ordering(b, c, horizon);
        if variant.has_slot_susd() {
            slot_susd_capacity(b, c, horizon);
        } else {
            slot_capacity(b, c, horizon);
        }
        slot_reserve_floor(b, c, horizon);
        aggregation_links(b, c, horizon);
        if variant.has_slot_ramps() {
            slot_ramps(b, c, horizon);
        }
    }
}

/// Commitment state transitions plus minimum up/down windows (tags eq01,
/// eq02, eq03). Windows that would reach before the horizon start are
/// truncated at t = 1; the initial state carries no residual obligation.
fn commitment_logic(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize) {
    let cid = c.id.as_str();
    let u0 = c.init_online as f64;
    for t in 1..=horizon {
        let mut terms = vec![
            (name_u(cid, t), 1.0),
            (name_y(cid, t), -1.0),
            (name_z(cid, t), 1.0),
        ];
        let rhs = if t == 1 {
            u0
        } else {
            terms.push((name_u(cid, t - 1), -1.0));
            0.0
        };
        b.con("eq01", format!("eq01_{cid}_t{t}"), terms, Sense::Eq, rhs);
    }
    for t in 1..=horizon {
        let start = t.saturating_sub(c.min_up as usize - 1).max(1);
        let mut terms: Vec<(String, f64)> = (start..=t).map(|i| (name_y(cid, i), 1.0)).collect();
        terms.push((name_u(cid, t), -1.0));
        b.con("eq02", format!("eq02_{cid}_t{t}"), terms, Sense::Le, 0.0);
    }
    for t in 1..=horizon {
        let start = t.saturating_sub(c.min_down as usize - 1).max(1);
        let mut terms: Vec<(String, f64)> = (start..=t).map(|i| (name_z(cid, i), 1.0)).collect();
        terms.push((name_u(cid, t), 1.0));
        b.con(
            "eq03",
            format!("eq03_{cid}_t{t}"),
            terms,
            Sense::Le,
            c.unit_count as f64,
        );
    }
}

/// Cluster power-band caps (eq04 for min-up >= 2, else eq05 + eq06), the
/// down-reserve floor eq07 where the variant keeps it, and the output
/// definition eq08. Shutdown terms in z_{t+1} are dropped at the horizon
/// end since no post-horizon shutdown is scheduled.
fn cluster_capacity(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize, variant: Variant) {
    let cid = c.id.as_str();
    let span = c.span();
    let su_gap = c.p_max - c.su_cap;
    let sd_gap = c.p_max - c.sd_cap;

    for t in 1..=horizon {
        let base = || {
            vec![
                (name_p(cid, t), 1.0),
                (name_r_plus(cid, t), 1.0),
                (name_u(cid, t), -span),
            ]
        };
        if c.min_up >= 2 {
            let mut terms = base();
            terms.push((name_y(cid, t), su_gap));
            if t < horizon {
                terms.push((name_z(cid, t + 1), sd_gap));
            }
            b.con("eq04", format!("eq04_{cid}_t{t}"), terms, Sense::Le, 0.0);
        } else {
            let mut terms = base();
            terms.push((name_y(cid, t), (c.sd_cap - c.su_cap).max(0.0)));
            if t < horizon {
                terms.push((name_z(cid, t + 1), sd_gap));
            }
            b.con("eq05", format!("eq05_{cid}_t{t}"), terms, Sense::Le, 0.0);

            let mut terms = base();
            terms.push((name_y(cid, t), su_gap));
            if t < horizon {
                terms.push((name_z(cid, t + 1), (c.su_cap - c.sd_cap).max(0.0)));
            }
            b.con("eq06", format!("eq06_{cid}_t{t}"), terms, Sense::Le, 0.0);
        }
    }

    if variant.has_cluster_reserve_floor() {
        for t in 1..=horizon {
            b.con(
                "eq07",
                format!("eq07_{cid}_t{t}"),
                vec![(name_p(cid, t), 1.0), (name_r_minus(cid, t), -1.0)],
                Sense::Ge,
                0.0,
            );
        }
    }

    for t in 1..=horizon {
        b.con(
            "eq08",
            format!("eq08_{cid}_t{t}"),
            vec![
                (name_p_hat(cid, t), 1.0),
                (name_u(cid, t), -c.p_min),
                (name_p(cid, t), -1.0),
            ],
            Sense::Eq,
            0.0,
        );
    }
}

/// Cluster-level ramp limits scaled by the commitment count (eq09, eq10).
fn cluster_ramps(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize) {
    let cid = c.id.as_str();
    let p0 = c.init_power_above_min;
    let u0 = c.init_online as f64;
    for t in 1..=horizon {
        let mut terms = vec![
            (name_p(cid, t), 1.0),
            (name_r_plus(cid, t), 1.0),
            (name_u(cid, t), -c.ramp_up),
        ];
        let rhs = if t == 1 {
            p0
        } else {
            terms.push((name_p(cid, t - 1), -1.0));
            0.0
        };
        b.con("eq09", format!("eq09_{cid}_t{t}"), terms, Sense::Le, rhs);
    }
    for t in 1..=horizon {
        let mut terms = vec![(name_p(cid, t), -1.0), (name_r_minus(cid, t), 1.0)];
        let rhs = if t == 1 {
            c.ramp_down * u0 - p0
        } else {
            terms.push((name_p(cid, t - 1), 1.0));
            terms.push((name_u(cid, t - 1), -c.ramp_down));
            0.0
        };
        b.con("eq10", format!("eq10_{cid}_t{t}"), terms, Sense::Le, rhs);
    }
}

/// Slot commitment ordering (eq11, eq12, eq13): slot 1 commits first,
/// slot G last, which breaks the permutation symmetry of identical units.
fn slot_ordering(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize) {
    let cid = c.id.as_str();
    let units = c.unit_count as usize;
    for t in 1..=horizon {
        b.con(
            "eq11",
            format!("eq11_{cid}_t{t}"),
            vec![(name_u_tilde(cid, 1, t), 1.0)],
            Sense::Le,
            1.0,
        );
    }
    for g in 1..units {
        for t in 1..=horizon {
            b.con(
                "eq12",
                format!("eq12_{cid}_g{g}_t{t}"),
                vec![
                    (name_u_tilde(cid, g + 1, t), 1.0),
                    (name_u_tilde(cid, g, t), -1.0),
                ],
                Sense::Le,
                0.0,
            );
        }
    }
    for t in 1..=horizon {
        b.con(
            "eq13",
            format!("eq13_{cid}_t{t}"),
            vec![(name_u_tilde(cid, units, t), 1.0)],
            Sense::Ge,
            0.0,
        );
    }
}

/// Plain per-slot capacity (eq14), used when the startup/shutdown block is
/// ablated.
fn slot_capacity(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize) {
    let cid = c.id.as_str();
    for g in 1..=c.unit_count as usize {
        for t in 1..=horizon {
            b.con(
                "eq14",
                format!("eq14_{cid}_g{g}_t{t}"),
                vec![
                    (name_p_tilde(cid, g, t), 1.0),
                    (name_r_tilde_plus(cid, g, t), 1.0),
                    (name_u_tilde(cid, g, t), -c.span()),
                ],
                Sense::Le,
                0.0,
            );
        }
    }
}

/// Per-slot down-reserve floor (eq15), which dominates the cluster-level
/// floor once slot power sums to cluster power.
fn slot_reserve_floor(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize) {
    let cid = c.id.as_str();
    for g in 1..=c.unit_count as usize {
        for t in 1..=horizon {
            b.con(
                "eq15",
                format!("eq15_{cid}_g{g}_t{t}"),
                vec![
                    (name_p_tilde(cid, g, t), 1.0),
                    (name_r_tilde_minus(cid, g, t), -1.0),
                ],
                Sense::Ge,
                0.0,
            );
        }
    }
}

/// Startup/shutdown-aware slot capacity (eq20 + eq21 for min-up >= 2,
/// eq22 for min-up = 1). The post-horizon state is frozen by substituting
/// u_tilde[T+1] := u_tilde[T], which reduces eq21 at t = T to plain slot
/// capacity; the initial slot state enters the t = 1 right-hand side.
fn slot_susd_capacity(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize) {
    let cid = c.id.as_str();
    let su_above = c.su_cap - c.p_min;
    let sd_above = c.sd_cap - c.p_min;
    let su_gap = c.p_max - c.su_cap;
    let sd_gap = c.p_max - c.sd_cap;

    for g in 1..=c.unit_count as usize {
        let init = c.init_slot_on(g as u32) as u32 as f64;
        for t in 1..=horizon {
            if c.min_up >= 2 {
                let mut terms = vec![
                    (name_p_tilde(cid, g, t), 1.0),
                    (name_r_tilde_plus(cid, g, t), 1.0),
                    (name_u_tilde(cid, g, t), -su_above),
                ];
                let rhs = if t == 1 {
                    su_gap * init
                } else {
                    terms.push((name_u_tilde(cid, g, t - 1), -su_gap));
                    0.0
                };
                b.con("eq20", format!("eq20_{cid}_g{g}_t{t}"), terms, Sense::Le, rhs);

                let mut coef_now = -sd_above;
                let mut terms = vec![
                    (name_p_tilde(cid, g, t), 1.0),
                    (name_r_tilde_plus(cid, g, t), 1.0),
                ];
                if t < horizon {
                    terms.push((name_u_tilde(cid, g, t + 1), -sd_gap));
                } else {
                    coef_now -= sd_gap;
                }
                terms.push((name_u_tilde(cid, g, t), coef_now));
                b.con("eq21", format!("eq21_{cid}_g{g}_t{t}"), terms, Sense::Le, 0.0);
            } else {
                let mut coef_now = -(c.su_cap - c.p_max + sd_above);
                let mut terms = vec![
                    (name_p_tilde(cid, g, t), 1.0),
                    (name_r_tilde_plus(cid, g, t), 1.0),
                ];
                let mut rhs = 0.0;
                if t == 1 {
                    rhs += su_gap * init;
                } else {
                    terms.push((name_u_tilde(cid, g, t - 1), -su_gap));
                }
                if t < horizon {
                    terms.push((name_u_tilde(cid, g, t + 1), -sd_gap));
                } else {
                    coef_now -= sd_gap;
                }
                terms.push((name_u_tilde(cid, g, t), coef_now));
                b.con("eq22", format!("eq22_{cid}_g{g}_t{t}"), terms, Sense::Le, rhs);
            }
        }
    }
}

/// Linking equalities eq16..eq19: cluster commitment, reserves, and
/// above-minimum power are the sums of their slot shares.
fn aggregation_links(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize) {
    let cid = c.id.as_str();
    let units = c.unit_count as usize;
    let families: [(&str, fn(&str, usize) -> String, fn(&str, usize, usize) -> String); 4] = [
        ("eq16", name_u, name_u_tilde),
        ("eq17", name_r_plus, name_r_tilde_plus),
        ("eq18", name_r_minus, name_r_tilde_minus),
        ("eq19", name_p, name_p_tilde),
    ];
    for (tag, cluster_var, slot_var) in families {
        for t in 1..=horizon {
            let mut terms = vec![(cluster_var(cid, t), 1.0)];
            for g in 1..=units {
                terms.push((slot_var(cid, g, t), -1.0));
            }
            b.con(tag, format!("{tag}_{cid}_t{t}"), terms, Sense::Eq, 0.0);
        }
    }
}

/// Per-slot ramp limits (eq23, eq24) with the greedy initial slot power at
/// t = 1.
fn slot_ramps(b: &mut ModelBuilder, c: &ClusterSpec, horizon: usize) {
    let cid = c.id.as_str();
    for g in 1..=c.unit_count as usize {
        let init_on = c.init_slot_on(g as u32) as u32 as f64;
        let init_p = c.init_slot_power(g as u32);
        for t in 1..=horizon {
            let mut terms = vec![
                (name_p_tilde(cid, g, t), 1.0),
                (name_r_tilde_plus(cid, g, t), 1.0),
                (name_u_tilde(cid, g, t), -c.ramp_up),
            ];
            let rhs = if t == 1 {
                init_p
            } else {
                terms.push((name_p_tilde(cid, g, t - 1), -1.0));
                0.0
            };
            b.con("eq23", format!("eq23_{cid}_g{g}_t{t}"), terms, Sense::Le, rhs);

            let mut terms = vec![
                (name_p_tilde(cid, g, t), -1.0),
                (name_r_tilde_minus(cid, g, t), 1.0),
            ];
            let rhs = if t == 1 {
                c.ramp_down * init_on - init_p
            } else {
                terms.push((name_p_tilde(cid, g, t - 1), 1.0));
                terms.push((name_u_tilde(cid, g, t - 1), -c.ramp_down));
                0.0
            };
            b.con("eq24", format!("eq24_{cid}_g{g}_t{t}"), terms, Sense::Le, rhs);
        }
    }
}

/// Demand balance, reserve requirements, and the slack variables with their
/// penalty costs. Curtailment exists only when a renewable profile is
/// present and is bounded by it hour by hour.
fn emit_system(b: &mut ModelBuilder, instance: &SystemInstance) {
    let horizon = instance.horizon as usize;
    for t in 1..=horizon {
        let shed = b.var(name_shed(t), VarKind::Continuous, 0.0, f64::INFINITY, "slack");
        b.cost(&shed, instance.cost_shed);
        let short_plus = b.var(
            name_short_plus(t),
            VarKind::Continuous,
            0.0,
            f64::INFINITY,
            "slack",
        );
        b.cost(&short_plus, instance.cost_reserve_shortfall);
        let short_minus = b.var(
            name_short_minus(t),
            VarKind::Continuous,
            0.0,
            f64::INFINITY,
            "slack",
        );
        b.cost(&short_minus, instance.cost_reserve_shortfall);

        let renewable = instance
            .renewable_profile
            .as_ref()
            .map(|r| r[t - 1])
            .unwrap_or(0.0);
        let mut balance = vec![(shed, 1.0)];
        if instance.renewable_profile.is_some() {
            let curtail = b.var(name_curtail(t), VarKind::Continuous, 0.0, renewable, "slack");
            b.cost(&curtail, instance.cost_curtailment);
            balance.push((curtail, -1.0));
        }
        for c in &instance.clusters {
            balance.push((name_p_hat(&c.id, t), 1.0));
        }
        b.con(
            "sysbal",
            format!("sysbal_t{t}"),
            balance,
            Sense::Eq,
            instance.demand[t - 1] - renewable,
        );

        let mut up = vec![(short_plus, 1.0)];
        let mut down = vec![(short_minus, 1.0)];
        for c in &instance.clusters {
            up.push((name_r_plus(&c.id, t), 1.0));
            down.push((name_r_minus(&c.id, t), 1.0));
        }
        b.con(
            "sysrup",
            format!("sysrup_t{t}"),
            up,
            Sense::Ge,
            instance.reserve_up_req[t - 1],
        );
        b.con(
            "sysrdn",
            format!("sysrdn_t{t}"),
            down,
            Sense::Ge,
            instance.reserve_down_req[t - 1],
        );
    }
}

/// Expected tag set for `variant` on `instance`; the normative composition
/// table against which built models are checked.
pub fn expected_tags(instance: &SystemInstance, variant: Variant) -> BTreeSet<String> {
    let mut tags = BTreeSet::new();
    let mut add = |t: &str| {
        tags.insert(t.to_string());
    };
    for t in ["eq01", "eq02", "eq03", "eq08", "sysbal", "sysrup", "sysrdn"] {
        add(t);
    }
    for c in &instance.clusters {
        if c.min_up >= 2 {
            add("eq04");
        } else {
            add("eq05");
            add("eq06");
        }
        if variant.is_slot_resolved() {
            if c.unit_count >= 2 {
                add("eq12");
            }
            if variant.has_slot_susd() {
                if c.min_up >= 2 {
                    add("eq20");
                    add("eq21");
                } else {
                    add("eq22");
                }
            } else {
                add("eq14");
            }
        }
    }
    if variant.has_cluster_reserve_floor() {
        add("eq07");
    }
    if variant.has_cluster_ramps() {
        add("eq09");
        add("eq10");
    }
    if variant.is_slot_resolved() {
        for t in ["eq11", "eq13", "eq15", "eq16", "eq17", "eq18", "eq19"] {
            add(t);
        }
    }
    if variant.has_slot_ramps() {
        add("eq23");
        add("eq24");
    }
    tags
}

/// Standalone ordered-slot polytope used by the LP-integrality tests: slot
/// ordering, plain slot capacity, the slot reserve floor, and the linking
/// sums for commitment and power, under a seeded random objective over the
/// slot variables.
pub fn build_hull_subsystem(
    cluster: &ClusterSpec,
    horizon: usize,
    objective_seed: u64,
) -> Result<MilpModel, FormulationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(objective_seed);
    let mut b = ModelBuilder::new();
    let cid = cluster.id.as_str();
    let units = cluster.unit_count as usize;

    for t in 1..=horizon {
        b.var(name_u(cid, t), VarKind::Continuous, 0.0, f64::INFINITY, "u");
        b.var(name_p(cid, t), VarKind::Continuous, 0.0, f64::INFINITY, "p");
    }
    for g in 1..=units {
        for t in 1..=horizon {
            let ut = b.var(name_u_tilde(cid, g, t), VarKind::Binary, 0.0, 1.0, "u_tilde");
            let pt = b.var(
                name_p_tilde(cid, g, t),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                "p_tilde",
            );
            let rp = b.var(
                name_r_tilde_plus(cid, g, t),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                "r_tilde_plus",
            );
            let rm = b.var(
                name_r_tilde_minus(cid, g, t),
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                "r_tilde_minus",
            );
            for name in [ut, pt, rp, rm] {
                b.cost(&name, rng.gen_range(-1.0..=1.0));
            }
        }
    }

    slot_ordering(&mut b, cluster, horizon);
    slot_capacity(&mut b, cluster, horizon);
    slot_reserve_floor(&mut b, cluster, horizon);
    let units_total = cluster.unit_count as usize;
    for (tag, cluster_var, slot_var) in [
        ("eq16", name_u as fn(&str, usize) -> String, name_u_tilde as fn(&str, usize, usize) -> String),
        ("eq19", name_p, name_p_tilde),
    ] {
        for t in 1..=horizon {
            let mut terms = vec![(cluster_var(cid, t), 1.0)];
            for g in 1..=units_total {
                terms.push((slot_var(cid, g, t), -1.0));
            }
            b.con(tag, format!("{tag}_{cid}_t{t}"), terms, Sense::Eq, 0.0);
        }
    }

    Ok(b.finish(ModelMetadata {
        variant: "HULL".to_string(),
        instance_id: format!("hull_seed{objective_seed}"),
    })?)
}
