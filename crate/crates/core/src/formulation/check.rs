//! Independent feasibility re-checker: every equation family of the
//! variant composition is re-evaluated by direct arithmetic on the
//! schedule, without touching the MILP representation.
//!
//! For slot-resolved variants the cluster-level down-reserve floor and
//! ramp families are checked as well even though the model does not carry
//! those rows: they are implied by the per-slot rows plus the linking
//! sums, so a hit there means the solution chain is broken.

use super::{expand_to_units, ClusterSchedule, Schedule, Variant};
use crate::instance::{ClusterSpec, SystemInstance};
use crate::milp::FEASIBILITY_TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityViolation {
    pub tag: String,
    pub cluster: Option<String>,
    /// Hour, 1-based; 0 for violations not tied to an hour.
    pub t: usize,
    /// Slot, 1-based, for per-slot families.
    pub slot: Option<usize>,
    pub amount: f64,
}

impl std::fmt::Display for FeasibilityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.tag)?;
        if let Some(c) = &self.cluster {
            write!(f, " {c}")?;
        }
        if let Some(g) = self.slot {
            write!(f, " g{g}")?;
        }
        write!(f, " t{} by {:.3e}", self.t, self.amount)
    }
}

struct Report {
    violations: Vec<FeasibilityViolation>,
    cluster: Option<String>,
}

impl Report {
    fn le(&mut self, tag: &str, t: usize, slot: Option<usize>, lhs: f64, rhs: f64) {
        if lhs - rhs > FEASIBILITY_TOL {
            self.push(tag, t, slot, lhs - rhs);
        }
    }

    fn ge(&mut self, tag: &str, t: usize, slot: Option<usize>, lhs: f64, rhs: f64) {
        self.le(tag, t, slot, rhs, lhs);
    }

    fn eq(&mut self, tag: &str, t: usize, slot: Option<usize>, lhs: f64, rhs: f64) {
        if (lhs - rhs).abs() > FEASIBILITY_TOL {
            self.push(tag, t, slot, (lhs - rhs).abs());
        }
    }

    fn push(&mut self, tag: &str, t: usize, slot: Option<usize>, amount: f64) {
        self.violations.push(FeasibilityViolation {
            tag: tag.to_string(),
            cluster: self.cluster.clone(),
            t,
            slot,
            amount,
        });
    }
}

/// Re-checks `schedule` against every equation family the variant includes,
/// at absolute tolerance 1e-6. Returns one entry per violated row.
pub fn check_schedule_feasibility(
    instance: &SystemInstance,
    variant: Variant,
    schedule: &Schedule,
) -> Vec<FeasibilityViolation> {
    let effective = match variant {
        Variant::Iuc => expand_to_units(instance, 0.0, 0),
        _ => instance.clone(),
    };
    let horizon = effective.horizon as usize;
    let mut report = Report {
        violations: Vec::new(),
        cluster: None,
    };

    if schedule.clusters.len() != effective.clusters.len() {
        report.push("shape", 0, None, (schedule.clusters.len() as f64 - effective.clusters.len() as f64).abs());
        return report.violations;
    }
    for series in [
        &schedule.shed,
        &schedule.curtailment,
        &schedule.reserve_short_up,
        &schedule.reserve_short_down,
    ] {
        if series.len() != horizon {
            report.push("shape", 0, None, (series.len() as f64 - horizon as f64).abs());
            return report.violations;
        }
    }

    for (spec, cs) in effective.clusters.iter().zip(&schedule.clusters) {
        report.cluster = Some(spec.id.clone());
        if cs.id != spec.id || cs.committed.len() != horizon {
            report.push("shape", 0, None, 1.0);
            report.cluster = None;
            return report.violations;
        }
        check_cluster(&mut report, spec, cs, variant, horizon);
    }
    report.cluster = None;

    // System rows: demand balance and reserve coverage with slacks.
    for t in 1..=horizon {
        let i = t - 1;
        let renewable = effective
            .renewable_profile
            .as_ref()
            .map(|r| r[i])
            .unwrap_or(0.0);
        let output: f64 = schedule.clusters.iter().map(|c| c.output[i]).sum();
        report.eq(
            "sysbal",
            t,
            None,
            output + renewable - schedule.curtailment[i] + schedule.shed[i],
            effective.demand[i],
        );
        report.le("sysbal", t, None, schedule.curtailment[i], renewable);
        let up: f64 = schedule.clusters.iter().map(|c| c.reserve_up[i]).sum();
        report.ge(
            "sysrup",
            t,
            None,
            up + schedule.reserve_short_up[i],
            effective.reserve_up_req[i],
        );
        let down: f64 = schedule.clusters.iter().map(|c| c.reserve_down[i]).sum();
        report.ge(
            "sysrdn",
            t,
            None,
            down + schedule.reserve_short_down[i],
            effective.reserve_down_req[i],
        );
        for (series, name) in [
            (&schedule.shed, "shed"),
            (&schedule.curtailment, "curtail"),
            (&schedule.reserve_short_up, "short_plus"),
            (&schedule.reserve_short_down, "short_minus"),
        ] {
            let _ = name;
            report.ge("nonneg", t, None, series[i], 0.0);
        }
    }

    report.violations
}

fn check_cluster(
    report: &mut Report,
    spec: &ClusterSpec,
    cs: &ClusterSchedule,
    variant: Variant,
    horizon: usize,
) {
    let g_count = spec.unit_count as f64;
    let span = spec.span();
    let su_gap = spec.p_max - spec.su_cap;
    let sd_gap = spec.p_max - spec.sd_cap;
    let u0 = spec.init_online as f64;
    let p0 = spec.init_power_above_min;

    let u = |t: usize| cs.committed[t - 1];
    let y = |t: usize| cs.startups[t - 1];
    let z = |t: usize| cs.shutdowns[t - 1];
    let p = |t: usize| cs.power_above_min[t - 1];
    let p_hat = |t: usize| cs.output[t - 1];
    let r_up = |t: usize| cs.reserve_up[t - 1];
    let r_down = |t: usize| cs.reserve_down[t - 1];
    // z beyond the horizon is zero by convention.
    let z_next = |t: usize| if t < horizon { z(t + 1) } else { 0.0 };

    for t in 1..=horizon {
        for (v, label) in [
            (u(t), "u"),
            (y(t), "y"),
            (z(t), "z"),
            (p(t), "p"),
            (p_hat(t), "p_hat"),
            (r_up(t), "r_plus"),
            (r_down(t), "r_minus"),
        ] {
            let _ = label;
            report.ge("nonneg", t, None, v, 0.0);
        }
        report.le("bounds", t, None, u(t), g_count);
        for v in [u(t), y(t), z(t)] {
            if (v - v.round()).abs() > FEASIBILITY_TOL {
                report.push("integrality", t, None, (v - v.round()).abs());
            }
        }
    }

    // Commitment logic and minimum up/down windows.
    for t in 1..=horizon {
        let prev = if t == 1 { u0 } else { u(t - 1) };
        report.eq("eq01", t, None, u(t) - prev, y(t) - z(t));
    }
    for t in 1..=horizon {
        let start = t.saturating_sub(spec.min_up as usize - 1).max(1);
        let started: f64 = (start..=t).map(y).sum();
        report.le("eq02", t, None, started, u(t));
    }
    for t in 1..=horizon {
        let start = t.saturating_sub(spec.min_down as usize - 1).max(1);
        let stopped: f64 = (start..=t).map(z).sum();
        report.le("eq03", t, None, stopped, g_count - u(t));
    }

    // Power band including startup/shutdown capability.
    for t in 1..=horizon {
        if spec.min_up >= 2 {
            report.le(
                "eq04",
                t,
                None,
                p(t) + r_up(t),
                span * u(t) - su_gap * y(t) - sd_gap * z_next(t),
            );
        } else {
            report.le(
                "eq05",
                t,
                None,
                p(t) + r_up(t),
                span * u(t) - sd_gap * z_next(t) - (spec.sd_cap - spec.su_cap).max(0.0) * y(t),
            );
            report.le(
                "eq06",
                t,
                None,
                p(t) + r_up(t),
                span * u(t) - su_gap * y(t) - (spec.su_cap - spec.sd_cap).max(0.0) * z_next(t),
            );
        }
    }

    // Down-reserve floor and cluster ramps; implied rows for the
    // slot-resolved variants, explicit otherwise.
    for t in 1..=horizon {
        report.ge("eq07", t, None, p(t) - r_down(t), 0.0);
        report.eq("eq08", t, None, p_hat(t), spec.p_min * u(t) + p(t));
    }
    for t in 1..=horizon {
        let (prev_p, prev_u) = if t == 1 { (p0, u0) } else { (p(t - 1), u(t - 1)) };
        report.le("eq09", t, None, p(t) - prev_p + r_up(t), spec.ramp_up * u(t));
        report.le("eq10", t, None, prev_p - p(t) + r_down(t), spec.ramp_down * prev_u);
    }

    if !variant.is_slot_resolved() {
        return;
    }
    let Some(slots) = &cs.slots else {
        report.push("shape", 0, None, 1.0);
        return;
    };
    let units = spec.unit_count as usize;
    if slots.on.len() != units || slots.on.iter().any(|s| s.len() != horizon) {
        report.push("shape", 0, None, 1.0);
        return;
    }

    let on = |g: usize, t: usize| slots.on[g - 1][t - 1];
    let sp = |g: usize, t: usize| slots.power_above_min[g - 1][t - 1];
    let sup = |g: usize, t: usize| slots.reserve_up[g - 1][t - 1];
    let sdn = |g: usize, t: usize| slots.reserve_down[g - 1][t - 1];
    let init_on = |g: usize| spec.init_slot_on(g as u32) as u32 as f64;
    let init_p = |g: usize| spec.init_slot_power(g as u32);
    // The post-horizon slot state repeats the last hour.
    let on_next = |g: usize, t: usize| if t < horizon { on(g, t + 1) } else { on(g, t) };

    for g in 1..=units {
        for t in 1..=horizon {
            for v in [on(g, t), sp(g, t), sup(g, t), sdn(g, t)] {
                report.ge("nonneg", t, Some(g), v, 0.0);
            }
            if (on(g, t) - on(g, t).round()).abs() > FEASIBILITY_TOL {
                report.push("integrality", t, Some(g), (on(g, t) - on(g, t).round()).abs());
            }
        }
    }

    // Ordering staircase.
    for t in 1..=horizon {
        report.le("eq11", t, Some(1), on(1, t), 1.0);
        for g in 1..units {
            report.le("eq12", t, Some(g), on(g + 1, t), on(g, t));
        }
        report.ge("eq13", t, Some(units), on(units, t), 0.0);
    }

    // Slot capacity: plain band or the startup/shutdown-aware rows.
    for g in 1..=units {
        for t in 1..=horizon {
            if variant.has_slot_susd() {
                let prev_on = if t == 1 { init_on(g) } else { on(g, t - 1) };
                if spec.min_up >= 2 {
                    report.le(
                        "eq20",
                        t,
                        Some(g),
                        sp(g, t) + sup(g, t),
                        (spec.su_cap - spec.p_min) * on(g, t) + su_gap * prev_on,
                    );
                    report.le(
                        "eq21",
                        t,
                        Some(g),
                        sp(g, t) + sup(g, t),
                        (spec.sd_cap - spec.p_min) * on(g, t) + sd_gap * on_next(g, t),
                    );
                } else {
                    report.le(
                        "eq22",
                        t,
                        Some(g),
                        sp(g, t) + sup(g, t),
                        (spec.su_cap - spec.p_max + spec.sd_cap - spec.p_min) * on(g, t)
                            + su_gap * prev_on
                            + sd_gap * on_next(g, t),
                    );
                }
            } else {
                report.le("eq14", t, Some(g), sp(g, t) + sup(g, t), span * on(g, t));
            }
            report.ge("eq15", t, Some(g), sp(g, t) - sdn(g, t), 0.0);
        }
    }

    // Linking sums.
    for t in 1..=horizon {
        let total_on: f64 = (1..=units).map(|g| on(g, t)).sum();
        let total_p: f64 = (1..=units).map(|g| sp(g, t)).sum();
        let total_up: f64 = (1..=units).map(|g| sup(g, t)).sum();
        let total_dn: f64 = (1..=units).map(|g| sdn(g, t)).sum();
        report.eq("eq16", t, None, u(t), total_on);
        report.eq("eq17", t, None, r_up(t), total_up);
        report.eq("eq18", t, None, r_down(t), total_dn);
        report.eq("eq19", t, None, p(t), total_p);
    }

    // Per-slot ramps.
    if variant.has_slot_ramps() {
        for g in 1..=units {
            for t in 1..=horizon {
                let (prev_p, prev_on) = if t == 1 {
                    (init_p(g), init_on(g))
                } else {
                    (sp(g, t - 1), on(g, t - 1))
                };
                report.le(
                    "eq23",
                    t,
                    Some(g),
                    sp(g, t) - prev_p + sup(g, t),
                    spec.ramp_up * on(g, t),
                );
                report.le(
                    "eq24",
                    t,
                    Some(g),
                    prev_p - sp(g, t) + sdn(g, t),
                    spec.ramp_down * prev_on,
                );
            }
        }
    }
}
