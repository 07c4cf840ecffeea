//! Solver-agnostic MILP representation: named variables with bounds and
//! integrality, tagged linear constraints, a minimized linear objective,
//! point evaluation, LP relaxation, and size statistics.

use std::collections::HashMap;
use std::fmt;

/// Absolute feasibility and integrality tolerance used by the evaluator.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    /// Group tag used for schedule extraction, e.g. "u", "p_tilde", "slack".
    pub group: String,
}

impl Variable {
    pub fn new(name: impl Into<String>, kind: VarKind, lower: f64, upper: f64, group: &str) -> Self {
        Variable {
            name: name.into(),
            kind,
            lower,
            upper,
            group: group.to_string(),
        }
    }

    pub fn is_integral(&self) -> bool {
        matches!(self.kind, VarKind::Binary | VarKind::Integer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    /// Equation-family label, e.g. "eq04" or "sysbal".
    pub tag: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelMetadata {
    pub variant: String,
    pub instance_id: String,
}

/// Validated immutable model. Construct through [`assemble_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    variables: Vec<Variable>,
    constraints: Vec<LinearConstraint>,
    objective: Vec<(String, f64)>,
    pub metadata: ModelMetadata,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModelStats {
    pub n_binary: usize,
    pub n_integer: usize,
    pub n_continuous: usize,
    pub n_constraints: usize,
    pub n_nonzeros: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    DuplicateVariable(String),
    UnknownVariable { context: String, variable: String },
    DuplicateTerm { constraint: String, variable: String },
    InvalidBounds { variable: String, lower: f64, upper: f64 },
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::DuplicateVariable(name) => write!(f, "duplicate variable name {name}"),
            ModelError::UnknownVariable { context, variable } => {
                write!(f, "{context} references unknown variable {variable}")
            }
            ModelError::DuplicateTerm {
                constraint,
                variable,
            } => write!(f, "constraint {constraint} lists variable {variable} twice"),
            ModelError::InvalidBounds {
                variable,
                lower,
                upper,
            } => write!(f, "variable {variable} has invalid bounds [{lower}, {upper}]"),
        }
    }
}

impl std::error::Error for ModelError {}

/// Validates names, references, and bounds, and returns the assembled model.
pub fn assemble_model(
    variables: Vec<Variable>,
    constraints: Vec<LinearConstraint>,
    objective: Vec<(String, f64)>,
    metadata: ModelMetadata,
) -> Result<MilpModel, ModelError> {
    let mut index = HashMap::with_capacity(variables.len());
    for (i, v) in variables.iter().enumerate() {
        if index.insert(v.name.clone(), i).is_some() {
            return Err(ModelError::DuplicateVariable(v.name.clone()));
        }
        if !(v.lower <= v.upper) {
            return Err(ModelError::InvalidBounds {
                variable: v.name.clone(),
                lower: v.lower,
                upper: v.upper,
            });
        }
        if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
            return Err(ModelError::InvalidBounds {
                variable: v.name.clone(),
                lower: v.lower,
                upper: v.upper,
            });
        }
    }
    for c in &constraints {
        let mut seen = std::collections::HashSet::with_capacity(c.terms.len());
        for (name, _) in &c.terms {
            if !index.contains_key(name) {
                return Err(ModelError::UnknownVariable {
                    context: format!("constraint {}", c.name),
                    variable: name.clone(),
                });
            }
            if !seen.insert(name) {
                return Err(ModelError::DuplicateTerm {
                    constraint: c.name.clone(),
                    variable: name.clone(),
                });
            }
        }
    }
    for (name, _) in &objective {
        if !index.contains_key(name) {
            return Err(ModelError::UnknownVariable {
                context: "objective".to_string(),
                variable: name.clone(),
            });
        }
    }
    Ok(MilpModel {
        variables,
        constraints,
        objective,
        metadata,
        index,
    })
}

impl MilpModel {
    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[(String, f64)] {
        &self.objective
    }

    pub fn variable(&self, name: &str) -> Option<&Variable> {
        self.index.get(name).map(|&i| &self.variables[i])
    }

    /// Copy of the model with every integral variable re-marked continuous,
    /// bounds preserved. Idempotent.
    pub fn relax_integrality(&self) -> MilpModel {
        let mut relaxed = self.clone();
        for v in &mut relaxed.variables {
            v.kind = VarKind::Continuous;
        }
        relaxed
    }

    /// Copy of the model with the named variables pinned to fixed values via
    /// their bounds. Unknown names are rejected.
    pub fn fix_variables(&self, fixes: &HashMap<String, f64>) -> Result<MilpModel, ModelError> {
        for name in fixes.keys() {
            if !self.index.contains_key(name) {
                return Err(ModelError::UnknownVariable {
                    context: "fix_variables".to_string(),
                    variable: name.clone(),
                });
            }
        }
        let mut fixed = self.clone();
        for v in &mut fixed.variables {
            if let Some(&value) = fixes.get(&v.name) {
                v.lower = value;
                v.upper = value;
            }
        }
        Ok(fixed)
    }

    pub fn statistics(&self) -> ModelStats {
        let mut stats = ModelStats {
            n_constraints: self.constraints.len(),
            ..ModelStats::default()
        };
        for v in &self.variables {
            match v.kind {
                VarKind::Binary => stats.n_binary += 1,
                VarKind::Integer => stats.n_integer += 1,
                VarKind::Continuous => stats.n_continuous += 1,
            }
        }
        stats.n_nonzeros = self.constraints.iter().map(|c| c.terms.len()).sum();
        stats
    }

    /// Constraint tags present in the model, deduplicated.
    pub fn tag_set(&self) -> std::collections::BTreeSet<String> {
        self.constraints.iter().map(|c| c.tag.clone()).collect()
    }

    /// Constraints carrying the given tag, in creation order.
    pub fn constraints_tagged<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a LinearConstraint> {
        self.constraints.iter().filter(move |c| c.tag == tag)
    }
}

/// Convenience alias for assignments from variable name to value.
pub type Point = HashMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintViolation {
    pub name: String,
    pub tag: String,
    /// Amount by which the row misses its sense, always positive.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralityViolation {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub name: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub violated: Vec<ConstraintViolation>,
    pub integrality: Vec<IntegralityViolation>,
    pub bounds: Vec<BoundViolation>,
}

impl Evaluation {
    pub fn is_clean(&self) -> bool {
        self.violated.is_empty() && self.integrality.is_empty() && self.bounds.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    MissingAssignment(String),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::MissingAssignment(name) => {
                write!(f, "point does not assign variable {name}")
            }
        }
    }
}

impl std::error::Error for EvalError {}

/// Evaluates `point` against the model at tolerance [`FEASIBILITY_TOL`].
/// Every variable must be assigned.
pub fn evaluate_point(model: &MilpModel, point: &Point) -> Result<Evaluation, EvalError> {
    for v in &model.variables {
        if !point.contains_key(&v.name) {
            return Err(EvalError::MissingAssignment(v.name.clone()));
        }
    }
    let value = |name: &str| point[name];

    let objective = model
        .objective
        .iter()
        .map(|(name, cost)| cost * value(name))
        .sum();

    let mut violated = Vec::new();
    for c in &model.constraints {
        let lhs: f64 = c.terms.iter().map(|(name, coef)| coef * value(name)).sum();
        let amount = match c.sense {
            Sense::Le => lhs - c.rhs,
            Sense::Ge => c.rhs - lhs,
            Sense::Eq => (lhs - c.rhs).abs(),
        };
        if amount > FEASIBILITY_TOL {
            violated.push(ConstraintViolation {
                name: c.name.clone(),
                tag: c.tag.clone(),
                amount,
            });
        }
    }

    let mut integrality = Vec::new();
    let mut bounds = Vec::new();
    for v in &model.variables {
        let x = value(&v.name);
        if v.is_integral() && (x - x.round()).abs() > FEASIBILITY_TOL {
            integrality.push(IntegralityViolation {
                name: v.name.clone(),
                value: x,
            });
        }
        if x < v.lower - FEASIBILITY_TOL || x > v.upper + FEASIBILITY_TOL {
            bounds.push(BoundViolation {
                name: v.name.clone(),
                value: x,
                lower: v.lower,
                upper: v.upper,
            });
        }
    }

    Ok(Evaluation {
        objective,
        violated,
        integrality,
        bounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_model() -> MilpModel {
        assemble_model(
            vec![Variable::new("x", VarKind::Binary, 0.0, 1.0, "u")],
            vec![],
            vec![("x".to_string(), 1.0)],
            ModelMetadata::default(),
        )
        .unwrap()
    }

    fn bounded_model() -> MilpModel {
        assemble_model(
            vec![Variable::new(
                "x",
                VarKind::Continuous,
                0.0,
                f64::INFINITY,
                "p",
            )],
            vec![LinearConstraint {
                name: "floor".to_string(),
                terms: vec![("x".to_string(), 1.0)],
                sense: Sense::Ge,
                rhs: 2.0,
                tag: "test".to_string(),
            }],
            vec![("x".to_string(), 1.0)],
            ModelMetadata::default(),
        )
        .unwrap()
    }

    #[test]
    fn minimal_model_assembles() {
        let model = minimal_model();
        let stats = model.statistics();
        assert_eq!(stats.n_binary, 1);
        assert_eq!(stats.n_integer, 0);
        assert_eq!(stats.n_continuous, 0);
        assert_eq!(stats.n_constraints, 0);
        assert_eq!(stats.n_nonzeros, 0);
    }

    #[test]
    fn dangling_reference_is_rejected() {
        let err = assemble_model(
            vec![Variable::new("x", VarKind::Binary, 0.0, 1.0, "u")],
            vec![LinearConstraint {
                name: "bad".to_string(),
                terms: vec![("q".to_string(), 1.0)],
                sense: Sense::Le,
                rhs: 0.0,
                tag: "test".to_string(),
            }],
            vec![],
            ModelMetadata::default(),
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::UnknownVariable { variable, .. } if variable == "q"));
    }

    #[test]
    fn duplicate_variable_is_rejected() {
        let err = assemble_model(
            vec![
                Variable::new("u_1", VarKind::Binary, 0.0, 1.0, "u"),
                Variable::new("u_1", VarKind::Binary, 0.0, 1.0, "u"),
            ],
            vec![],
            vec![],
            ModelMetadata::default(),
        )
        .unwrap_err();
        assert_eq!(err, ModelError::DuplicateVariable("u_1".to_string()));
    }

    #[test]
    fn satisfied_point_evaluates_clean() {
        let model = bounded_model();
        let point = Point::from([("x".to_string(), 2.0)]);
        let eval = evaluate_point(&model, &point).unwrap();
        assert_eq!(eval.objective, 2.0);
        assert!(eval.is_clean());
    }

    #[test]
    fn violated_constraint_reports_slack() {
        let model = bounded_model();
        let point = Point::from([("x".to_string(), 1.0)]);
        let eval = evaluate_point(&model, &point).unwrap();
        assert_eq!(eval.violated.len(), 1);
        assert!((eval.violated[0].amount - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fractional_binary_reports_integrality() {
        let model = minimal_model();
        let point = Point::from([("x".to_string(), 0.5)]);
        let eval = evaluate_point(&model, &point).unwrap();
        assert_eq!(eval.integrality.len(), 1);
        assert_eq!(eval.integrality[0].name, "x");
    }

    #[test]
    fn missing_assignment_names_the_variable() {
        let model = minimal_model();
        let err = evaluate_point(&model, &Point::new()).unwrap_err();
        assert_eq!(err, EvalError::MissingAssignment("x".to_string()));
    }

    #[test]
    fn relaxation_clears_integrality_and_preserves_rows() {
        let model = bounded_model();
        let mixed = assemble_model(
            vec![
                Variable::new("a", VarKind::Binary, 0.0, 1.0, "u"),
                Variable::new("b", VarKind::Integer, 0.0, 3.0, "y"),
                Variable::new("c", VarKind::Binary, 0.0, 1.0, "z"),
            ],
            model.constraints().to_vec().into_iter().map(|mut c| {
                c.terms = vec![("a".to_string(), 1.0)];
                c
            }).collect(),
            vec![("a".to_string(), 1.0)],
            ModelMetadata::default(),
        )
        .unwrap();
        let relaxed = mixed.relax_integrality();
        let stats = relaxed.statistics();
        assert_eq!(stats.n_binary, 0);
        assert_eq!(stats.n_integer, 0);
        assert_eq!(stats.n_continuous, 3);
        assert_eq!(stats.n_constraints, mixed.statistics().n_constraints);
        assert_eq!(relaxed.relax_integrality(), relaxed);
        assert_eq!(relaxed.constraints(), mixed.constraints());
        assert_eq!(relaxed.objective(), mixed.objective());
        assert_eq!(relaxed.variables()[1].upper, 3.0);
    }

    #[test]
    fn fixing_pins_bounds() {
        let model = minimal_model();
        let fixed = model
            .fix_variables(&HashMap::from([("x".to_string(), 1.0)]))
            .unwrap();
        assert_eq!(fixed.variable("x").unwrap().lower, 1.0);
        assert_eq!(fixed.variable("x").unwrap().upper, 1.0);
        assert!(model
            .fix_variables(&HashMap::from([("nope".to_string(), 1.0)]))
            .is_err());
    }

    #[test]
    fn nonzeros_count_term_entries() {
        let model = bounded_model();
        assert_eq!(model.statistics().n_nonzeros, 1);
    }
}
