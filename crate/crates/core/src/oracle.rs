//! Brute-force optimum for tiny instances: enumerate every feasible
//! per-unit commitment pattern (pruning permutations of identical units),
//! fix the integer variables of the individual-unit model, and dispatch
//! each pattern through a relaxed bridge solve. The minimum over patterns
//! is the exact individual-unit optimum, independent of any MILP search.

use crate::formulation::{build_formulation, expand_to_units, BuildOptions, Variant};
use crate::instance::{validate_instance, SystemInstance, Violation};
use crate::milp::Point;
use crate::solver::{solve_model, BridgeError, SolveStatus, SolverConfig};
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt;

/// Hard enumeration guards.
pub const MAX_ORACLE_UNITS: u32 = 4;
pub const MAX_ORACLE_HORIZON: u32 = 8;

/// One on/off matrix over units and hours, with derived startups and
/// shutdowns. `multiplicity` counts how many unit permutations the
/// representative stands for after symmetry pruning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitmentPattern {
    /// `per_unit_on[i][t-1]` for unit `i` in instance expansion order.
    pub per_unit_on: Vec<Vec<bool>>,
    pub multiplicity: u64,
}

#[derive(Debug)]
pub enum OracleError {
    TooLarge { units: u32, horizon: u32 },
    Invalid(Vec<Violation>),
    Bridge(BridgeError),
    Solve(String),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { units, horizon } => write!(
                f,
                "instance exceeds the oracle guard ({units} units, T = {horizon}; \
                 limits are {MAX_ORACLE_UNITS} units, T <= {MAX_ORACLE_HORIZON})"
            ),
            OracleError::Invalid(report) => {
                write!(f, "invalid instance:")?;
                for v in report {
                    write!(f, "\n  {v}")?;
                }
                Ok(())
            }
            OracleError::Bridge(e) => write!(f, "{e}"),
            OracleError::Solve(m) => write!(f, "dispatch solve failed: {m}"),
        }
    }
}

impl std::error::Error for OracleError {}

impl From<BridgeError> for OracleError {
    fn from(e: BridgeError) -> Self {
        OracleError::Bridge(e)
    }
}

fn guard(instance: &SystemInstance) -> Result<(), OracleError> {
    let units = instance.total_units();
    if units > MAX_ORACLE_UNITS || instance.horizon > MAX_ORACLE_HORIZON {
        return Err(OracleError::TooLarge {
            units,
            horizon: instance.horizon,
        });
    }
    let report = validate_instance(instance);
    if !report.is_empty() {
        return Err(OracleError::Invalid(report));
    }
    Ok(())
}

/// All single-unit on/off schedules over `horizon` hours that satisfy the
/// minimum up/down windows, given the initial state. The unit is assumed
/// to have held its initial state long enough that no window reaches back
/// across t = 0.
fn feasible_unit_schedules(
    horizon: usize,
    min_up: usize,
    min_down: usize,
    init_on: bool,
) -> Vec<Vec<bool>> {
    let mut feasible = Vec::new();
    'mask: for mask in 0u32..(1 << horizon) {
        let on = |t: usize| -> bool {
            if t == 0 {
                init_on
            } else {
                mask & (1 << (t - 1)) != 0
            }
        };
        for t in 1..=horizon {
            let window_up = t.saturating_sub(min_up - 1).max(1);
            let started = (window_up..=t).any(|i| on(i) && !on(i - 1));
            if started && !on(t) {
                continue 'mask;
            }
            let window_down = t.saturating_sub(min_down - 1).max(1);
            let stopped = (window_down..=t).any(|i| !on(i) && on(i - 1));
            if stopped && on(t) {
                continue 'mask;
            }
        }
        feasible.push((1..=horizon).map(|t| on(t)).collect());
    }
    feasible
}

/// Units that are interchangeable for enumeration purposes: same source
/// cluster, same initial commitment, and same initial power share.
#[derive(Debug)]
struct UnitClass {
    size: usize,
    schedules: Vec<Vec<bool>>,
}

fn unit_classes(instance: &SystemInstance) -> Vec<UnitClass> {
    let horizon = instance.horizon as usize;
    let mut classes: Vec<(usize, bool, f64, UnitClass)> = Vec::new();
    for (ci, cluster) in instance.clusters.iter().enumerate() {
        for g in 1..=cluster.unit_count {
            let init_on = cluster.init_slot_on(g);
            let init_p = cluster.init_slot_power(g);
            match classes.last_mut() {
                Some((c, on, p, class)) if *c == ci && *on == init_on && *p == init_p => {
                    class.size += 1;
                }
                _ => {
                    classes.push((
                        ci,
                        init_on,
                        init_p,
                        UnitClass {
                            size: 1,
                            schedules: feasible_unit_schedules(
                                horizon,
                                cluster.min_up as usize,
                                cluster.min_down as usize,
                                init_on,
                            ),
                        },
                    ));
                }
            }
        }
    }
    classes.into_iter().map(|(_, _, _, class)| class).collect()
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Permutation count of a sorted index multiset.
fn multiset_multiplicity(indices: &[usize]) -> u64 {
    let mut total = factorial(indices.len());
    let mut run = 1usize;
    for w in indices.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total /= factorial(run);
            run = 1;
        }
    }
    total / factorial(run)
}

/// Advances a non-decreasing index vector over `0..m`; returns false once
/// the odometer wraps back to the start.
fn advance_multiset(indices: &mut [usize], m: usize) -> bool {
    for i in (0..indices.len()).rev() {
        if indices[i] + 1 < m {
            let v = indices[i] + 1;
            for slot in indices.iter_mut().skip(i) {
                *slot = v;
            }
            return true;
        }
    }
    for slot in indices.iter_mut() {
        *slot = 0;
    }
    false
}

/// Streaming enumerator over feasible commitment patterns with symmetry
/// pruning: within each class of interchangeable units only one
/// representative per schedule multiset is produced.
#[derive(Debug)]
pub struct PatternStream {
    classes: Vec<UnitClass>,
    state: Vec<Vec<usize>>,
    done: bool,
}

impl Iterator for PatternStream {
    type Item = CommitmentPattern;

    fn next(&mut self) -> Option<CommitmentPattern> {
        if self.done {
            return None;
        }
        let mut per_unit_on = Vec::new();
        let mut multiplicity = 1u64;
        for (class, indices) in self.classes.iter().zip(&self.state) {
            multiplicity *= multiset_multiplicity(indices);
            for &i in indices {
                per_unit_on.push(class.schedules[i].clone());
            }
        }
        // Odometer across classes, last class fastest.
        let mut advanced = false;
        for c in (0..self.classes.len()).rev() {
            if advance_multiset(&mut self.state[c], self.classes[c].schedules.len()) {
                advanced = true;
                break;
            }
        }
        if !advanced {
            self.done = true;
        }
        Some(CommitmentPattern {
            per_unit_on,
            multiplicity,
        })
    }
}

/// Feasible patterns with symmetry pruning. Guarded to at most
/// [`MAX_ORACLE_UNITS`] units and [`MAX_ORACLE_HORIZON`] hours.
pub fn enumerate_commitment_patterns(
    instance: &SystemInstance,
) -> Result<PatternStream, OracleError> {
    guard(instance)?;
    let classes = unit_classes(instance);
    let state = classes.iter().map(|c| vec![0usize; c.size]).collect();
    let done = classes.iter().any(|c| c.schedules.is_empty());
    Ok(PatternStream {
        classes,
        state,
        done,
    })
}

/// Unpruned product enumeration, used to confirm that pruning does not
/// change the optimum.
pub fn enumerate_commitment_patterns_raw(
    instance: &SystemInstance,
) -> Result<Vec<CommitmentPattern>, OracleError> {
    guard(instance)?;
    let mut per_unit: Vec<Vec<Vec<bool>>> = Vec::new();
    for cluster in &instance.clusters {
        for g in 1..=cluster.unit_count {
            per_unit.push(feasible_unit_schedules(
                instance.horizon as usize,
                cluster.min_up as usize,
                cluster.min_down as usize,
                cluster.init_slot_on(g),
            ));
        }
    }
    let mut patterns = Vec::new();
    let mut indices = vec![0usize; per_unit.len()];
    if per_unit.iter().any(|s| s.is_empty()) {
        return Ok(patterns);
    }
    loop {
        patterns.push(CommitmentPattern {
            per_unit_on: indices
                .iter()
                .enumerate()
                .map(|(unit, &i)| per_unit[unit][i].clone())
                .collect(),
            multiplicity: 1,
        });
        let mut carry = true;
        for unit in (0..indices.len()).rev() {
            if !carry {
                break;
            }
            indices[unit] += 1;
            if indices[unit] < per_unit[unit].len() {
                carry = false;
            } else {
                indices[unit] = 0;
            }
        }
        if carry {
            return Ok(patterns);
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub objective: f64,
    pub pattern: CommitmentPattern,
    pub dispatch: Point,
    pub patterns_evaluated: usize,
}

/// Exact individual-unit optimum: minimum over all enumerated patterns of
/// the dispatch LP with the pattern's integer variables fixed. Patterns
/// whose dispatch is infeasible (possible only through initial-state ramp
/// conflicts) are skipped; the slack variables keep at least the all-off
/// pattern feasible.
pub fn brute_force_optimum(
    instance: &SystemInstance,
    cfg: &SolverConfig,
) -> Result<OracleOutcome, OracleError> {
    let base = build_formulation(instance, Variant::Iuc, &BuildOptions::labeled("oracle"))
        .map_err(|e| OracleError::Solve(e.to_string()))?;
    let expanded = expand_to_units(instance, 0.0, 0);
    let horizon = instance.horizon as usize;
    let patterns: Vec<CommitmentPattern> = enumerate_commitment_patterns(instance)?.collect();

    let results: Result<Vec<Option<(f64, usize, Point)>>, OracleError> = patterns
        .par_iter()
        .enumerate()
        .map(|(index, pattern)| {
            let mut fixes = HashMap::new();
            for (unit, cluster) in expanded.clusters.iter().enumerate() {
                let on = &pattern.per_unit_on[unit];
                let mut prev = cluster.init_online == 1;
                for t in 1..=horizon {
                    let now = on[t - 1];
                    fixes.insert(
                        crate::formulation::name_u(&cluster.id, t),
                        now as u32 as f64,
                    );
                    fixes.insert(
                        crate::formulation::name_y(&cluster.id, t),
                        (now && !prev) as u32 as f64,
                    );
                    fixes.insert(
                        crate::formulation::name_z(&cluster.id, t),
                        (!now && prev) as u32 as f64,
                    );
                    prev = now;
                }
            }
            let fixed = base
                .fix_variables(&fixes)
                .map_err(|e| OracleError::Solve(e.to_string()))?;
            let outcome = solve_model(&fixed, cfg, true)?;
            match outcome.status {
                SolveStatus::Optimal | SolveStatus::FeasibleGap => Ok(Some((
                    outcome.objective.expect("point-bearing status"),
                    index,
                    outcome.point.expect("point-bearing status"),
                ))),
                SolveStatus::Infeasible => Ok(None),
                SolveStatus::Timeout | SolveStatus::Error => Err(OracleError::Solve(format!(
                    "pattern {index}: {} ({})",
                    outcome.status,
                    outcome.message.unwrap_or_default()
                ))),
            }
        })
        .collect();

    let best = results?
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    match best {
        Some((objective, index, dispatch)) => Ok(OracleOutcome {
            objective,
            pattern: patterns[index].clone(),
            dispatch,
            patterns_evaluated: patterns.len(),
        }),
        None => Err(OracleError::Solve(
            "every enumerated pattern was infeasible".to_string(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ClusterSpec, SystemInstance};

    fn unit_instance(horizon: u32, min_up: u32, units: u32) -> SystemInstance {
        SystemInstance {
            horizon,
            demand: vec![0.0; horizon as usize],
            reserve_up_req: vec![0.0; horizon as usize],
            reserve_down_req: vec![0.0; horizon as usize],
            cost_curtailment: 0.0,
            cost_shed: 1000.0,
            cost_reserve_shortfall: 1000.0,
            renewable_profile: None,
            clusters: vec![ClusterSpec {
                id: "c1".to_string(),
                unit_count: units,
                p_max: 50.0,
                p_min: 10.0,
                ramp_up: 50.0,
                ramp_down: 50.0,
                su_cap: 50.0,
                sd_cap: 50.0,
                min_up,
                min_down: 1,
                cost_fixed: 5.0,
                cost_variable: 2.0,
                cost_startup: 100.0,
                cost_shutdown: 0.0,
                init_online: 0,
                init_power_above_min: 0.0,
            }],
        }
    }

    #[test]
    fn single_unit_two_hours_yields_four_patterns() {
        let patterns: Vec<_> = enumerate_commitment_patterns(&unit_instance(2, 1, 1))
            .unwrap()
            .collect();
        assert_eq!(patterns.len(), 4);
        let masks: std::collections::BTreeSet<Vec<bool>> =
            patterns.into_iter().map(|p| p.per_unit_on[0].clone()).collect();
        assert_eq!(masks.len(), 4);
    }

    #[test]
    fn min_up_two_excludes_isolated_on_hour() {
        let patterns: Vec<_> = enumerate_commitment_patterns(&unit_instance(3, 2, 1))
            .unwrap()
            .collect();
        let has = |schedule: &[bool]| {
            patterns
                .iter()
                .any(|p| p.per_unit_on[0] == schedule.to_vec())
        };
        assert!(!has(&[false, true, false]));
        assert!(has(&[false, true, true]));
    }

    #[test]
    fn two_identical_units_prune_to_ten_multisets() {
        let patterns: Vec<_> = enumerate_commitment_patterns(&unit_instance(2, 1, 2))
            .unwrap()
            .collect();
        assert_eq!(patterns.len(), 10);
        assert_eq!(patterns.iter().map(|p| p.multiplicity).sum::<u64>(), 16);
        let raw = enumerate_commitment_patterns_raw(&unit_instance(2, 1, 2)).unwrap();
        assert_eq!(raw.len(), 16);
    }

    #[test]
    fn guard_rejects_oversized_instances() {
        let err = enumerate_commitment_patterns(&unit_instance(2, 1, 5)).unwrap_err();
        assert!(matches!(err, OracleError::TooLarge { units: 5, .. }));
        let err = enumerate_commitment_patterns(&unit_instance(9, 1, 1)).unwrap_err();
        assert!(matches!(err, OracleError::TooLarge { horizon: 9, .. }));
    }

    #[test]
    fn initially_online_unit_enumerates_from_its_state() {
        let mut instance = unit_instance(2, 2, 1);
        instance.clusters[0].init_online = 1;
        let patterns: Vec<_> = enumerate_commitment_patterns(&instance).unwrap().collect();
        // The unit has been on long enough, so an immediate shutdown is
        // allowed and all four schedules remain feasible; a restart at the
        // last hour only needs the truncated min-up window.
        assert_eq!(patterns.len(), 4);
        assert!(patterns.iter().any(|p| p.per_unit_on[0] == vec![true, true]));
        assert!(patterns.iter().any(|p| p.per_unit_on[0] == vec![false, false]));
    }
}
