//! Extraction of commitment/dispatch trajectories from a solved point, and
//! a greedy slot view of cluster-level schedules.

use super::{
    expand_to_units, name_curtail, name_p, name_p_hat, name_p_tilde, name_r_minus, name_r_plus,
    name_r_tilde_minus, name_r_tilde_plus, name_shed, name_short_minus, name_short_plus, name_u,
    name_u_tilde, name_y, name_z, Variant,
};
use crate::instance::{ClusterSpec, SystemInstance};
use crate::milp::{Point, FEASIBILITY_TOL};
use serde::Serialize;
use std::fmt;

/// Per-slot trajectories, indexed `[slot][hour]`, both zero-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotSeries {
    pub on: Vec<Vec<f64>>,
    pub power_above_min: Vec<Vec<f64>>,
    pub reserve_up: Vec<Vec<f64>>,
    pub reserve_down: Vec<Vec<f64>>,
}

/// One cluster's trajectories; `slots` is populated for the slot-resolved
/// variants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSchedule {
    pub id: String,
    pub committed: Vec<f64>,
    pub startups: Vec<f64>,
    pub shutdowns: Vec<f64>,
    pub power_above_min: Vec<f64>,
    pub output: Vec<f64>,
    pub reserve_up: Vec<f64>,
    pub reserve_down: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slots: Option<SlotSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub variant: Variant,
    pub clusters: Vec<ClusterSchedule>,
    pub shed: Vec<f64>,
    pub curtailment: Vec<f64>,
    pub reserve_short_up: Vec<f64>,
    pub reserve_short_down: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleError {
    MissingVariable(String),
    Integrality { name: String, value: f64 },
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::MissingVariable(name) => {
                write!(f, "solution point misses variable {name}")
            }
            ScheduleError::Integrality { name, value } => {
                write!(f, "variable {name} = {value} is not integral within {FEASIBILITY_TOL}")
            }
        }
    }
}

impl std::error::Error for ScheduleError {}

fn lookup(point: &Point, name: String) -> Result<f64, ScheduleError> {
    point
        .get(&name)
        .copied()
        .ok_or(ScheduleError::MissingVariable(name))
}

fn lookup_integral(point: &Point, name: String) -> Result<f64, ScheduleError> {
    let value = lookup(point, name.clone())?;
    if (value - value.round()).abs() > FEASIBILITY_TOL {
        return Err(ScheduleError::Integrality { name, value });
    }
    Ok(value.round())
}

/// Populates a [`Schedule`] from a solution point of
/// `build_formulation(instance, variant, ..)`. Integral variables are
/// rounded; values more than the tolerance away from an integer are
/// rejected. Feasibility is not judged here.
pub fn extract_schedule(
    instance: &SystemInstance,
    variant: Variant,
    point: &Point,
) -> Result<Schedule, ScheduleError> {
    let effective = match variant {
        Variant::Iuc => expand_to_units(instance, 0.0, 0),
        _ => instance.clone(),
    };
    let horizon = effective.horizon as usize;

    let mut clusters = Vec::with_capacity(effective.clusters.len());
    for c in &effective.clusters {
        let cid = c.id.as_str();
        let units = c.unit_count as usize;
        let mut cs = ClusterSchedule {
            id: c.id.clone(),
            committed: Vec::with_capacity(horizon),
            startups: Vec::with_capacity(horizon),
            shutdowns: Vec::with_capacity(horizon),
            power_above_min: Vec::with_capacity(horizon),
            output: Vec::with_capacity(horizon),
            reserve_up: Vec::with_capacity(horizon),
            reserve_down: Vec::with_capacity(horizon),
            slots: None,
        };
        for t in 1..=horizon {
            cs.committed.push(lookup_integral(point, name_u(cid, t))?);
            cs.startups.push(lookup_integral(point, name_y(cid, t))?);
            cs.shutdowns.push(lookup_integral(point, name_z(cid, t))?);
            cs.power_above_min.push(lookup(point, name_p(cid, t))?);
            cs.output.push(lookup(point, name_p_hat(cid, t))?);
            cs.reserve_up.push(lookup(point, name_r_plus(cid, t))?);
            cs.reserve_down.push(lookup(point, name_r_minus(cid, t))?);
        }
        if variant.is_slot_resolved() {
            let mut slots = SlotSeries {
                on: vec![Vec::with_capacity(horizon); units],
                power_above_min: vec![Vec::with_capacity(horizon); units],
                reserve_up: vec![Vec::with_capacity(horizon); units],
                reserve_down: vec![Vec::with_capacity(horizon); units],
            };
            for g in 1..=units {
                for t in 1..=horizon {
                    slots.on[g - 1].push(lookup_integral(point, name_u_tilde(cid, g, t))?);
                    slots.power_above_min[g - 1].push(lookup(point, name_p_tilde(cid, g, t))?);
                    slots.reserve_up[g - 1].push(lookup(point, name_r_tilde_plus(cid, g, t))?);
                    slots.reserve_down[g - 1].push(lookup(point, name_r_tilde_minus(cid, g, t))?);
                }
            }
            cs.slots = Some(slots);
        }
        clusters.push(cs);
    }

    let mut schedule = Schedule {
        variant,
        clusters,
        shed: Vec::with_capacity(horizon),
        curtailment: Vec::with_capacity(horizon),
        reserve_short_up: Vec::with_capacity(horizon),
        reserve_short_down: Vec::with_capacity(horizon),
    };
    for t in 1..=horizon {
        schedule.shed.push(lookup(point, name_shed(t))?);
        schedule
            .reserve_short_up
            .push(lookup(point, name_short_plus(t))?);
        schedule
            .reserve_short_down
            .push(lookup(point, name_short_minus(t))?);
        schedule.curtailment.push(if effective.renewable_profile.is_some() {
            lookup(point, name_curtail(t))?
        } else {
            0.0
        });
    }
    Ok(schedule)
}

/// Greedy slot view of a cluster-level schedule: the first `committed[t]`
/// slots are on, above-minimum power stacks onto the lowest slots first,
/// up reserve fills remaining slot headroom, down reserve fills slot power.
///
/// This is how a cluster schedule would have to be carried out by ordered
/// identical units, and is the witness used to show cluster-feasible
/// trajectories that no per-unit dispatch can follow.
pub fn slot_projection(spec: &ClusterSpec, schedule: &ClusterSchedule) -> SlotSeries {
    let units = spec.unit_count as usize;
    let horizon = schedule.committed.len();
    let span = spec.span();
    let mut slots = SlotSeries {
        on: vec![vec![0.0; horizon]; units],
        power_above_min: vec![vec![0.0; horizon]; units],
        reserve_up: vec![vec![0.0; horizon]; units],
        reserve_down: vec![vec![0.0; horizon]; units],
    };
    for t in 0..horizon {
        let on_count = schedule.committed[t].round() as usize;
        let mut power_left = schedule.power_above_min[t];
        let mut up_left = schedule.reserve_up[t];
        let mut down_left = schedule.reserve_down[t];
        for g in 0..units.min(on_count) {
            slots.on[g][t] = 1.0;
            let p = power_left.min(span);
            slots.power_above_min[g][t] = p;
            power_left -= p;
            let up = up_left.min(span - p);
            slots.reserve_up[g][t] = up;
            up_left -= up;
            let down = down_left.min(p);
            slots.reserve_down[g][t] = down;
            down_left -= down;
        }
    }
    slots
}
