//! Finite impulsive CTMDP model.
//!
//! [`CtmdpModel`] is the raw data as read from a file or assembled by a
//! [`ModelBuilder`]; it may violate the model contract. [`validate_model`]
//! lists every violation. [`Ctmdp`] is the validated, index-compiled form
//! that every solver and simulator consumes.

pub(crate) mod file;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub use file::{parse_model, read_model};

/// Index of a state in its [`StateSpace`].
pub type StateId = usize;

/// Tolerance on the row sums of probability vectors.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// `(state, action label)` key shared by rate rows, impulse rows and costs.
pub type ActionKey = (StateId, String);

/// Sparse row: `(target state, weight)` pairs.
pub type SparseRow = Vec<(StateId, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    labels: Vec<String>,
    index: HashMap<String, StateId>,
}

impl StateSpace {
    /// Builds a state space; labels must be unique and there must be at least one.
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::Domain("state space must contain at least one state".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (id, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), id).is_some() {
                return Err(Error::Domain(format!("duplicate state label `{label}`")));
            }
        }
        Ok(Self { labels, index })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, id: StateId) -> &str {
        &self.labels[id]
    }

    pub fn id(&self, label: &str) -> Option<StateId> {
        self.index.get(label).copied()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Per-state gradual and impulsive action labels, in catalog order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ActionCatalog {
    pub gradual: Vec<Vec<String>>,
    pub impulsive: Vec<Vec<String>>,
}

impl ActionCatalog {
    pub fn new(n_states: usize) -> Self {
        Self {
            gradual: vec![Vec::new(); n_states],
            impulsive: vec![Vec::new(); n_states],
        }
    }

    /// Whether some impulse is admissible at `x`.
    pub fn impulse_feasible(&self, x: StateId) -> bool {
        self.impulsive.get(x).is_some_and(|a| !a.is_empty())
    }
}

/// Off-diagonal jump rates `q̄(·|x,a)` with the declared uniform bound.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateKernel {
    pub rows: BTreeMap<ActionKey, SparseRow>,
    pub k_rate: f64,
}

/// Result distribution of each impulsive action.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImpulseKernel {
    pub rows: BTreeMap<ActionKey, SparseRow>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostModel {
    pub gradual_cost: BTreeMap<ActionKey, f64>,
    pub impulse_cost: BTreeMap<ActionKey, f64>,
    pub eta: f64,
    pub k_cost: f64,
    pub c_lower: f64,
}

/// Raw model data. Use [`validate_model`] or [`Ctmdp::new`] before solving.
#[derive(Debug, Clone, PartialEq)]
pub struct CtmdpModel {
    pub states: StateSpace,
    pub actions: ActionCatalog,
    pub rates: RateKernel,
    pub impulses: ImpulseKernel,
    pub costs: CostModel,
}

impl CtmdpModel {
    /// The single bound `K = max(K_rate, K_cost)`.
    pub fn k(&self) -> f64 {
        self.rates.k_rate.max(self.costs.k_cost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    CatalogShape,
    EmptyGradualCatalog,
    DuplicateAction,
    NonFinite,
    NegativeRate,
    SelfLoop,
    TargetOutOfRange,
    DuplicateTarget,
    /// `q̄(X|x,a) > K_rate`.
    RateBound,
    MissingRateRow,
    OrphanRateRow,
    NegativeProbability,
    ImpulseNotStochastic,
    MissingImpulseRow,
    OrphanImpulseRow,
    /// `|C^g(x,a)| > K_cost`.
    GradualCostBound,
    MissingGradualCost,
    OrphanGradualCost,
    /// `c^i(x,a) < c_lower`.
    ImpulseCostBelowLower,
    MissingImpulseCost,
    OrphanImpulseCost,
    NonPositiveDiscount,
    NonPositiveLowerBound,
    NegativeBound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub state: Option<String>,
    pub action: Option<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        match (&self.state, &self.action) {
            (Some(s), Some(a)) => write!(f, " at ({s}, {a})")?,
            (Some(s), None) => write!(f, " at {s}")?,
            _ => {}
        }
        write!(f, ": {}", self.detail)
    }
}

/// All violations found in a model; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    pub(crate) fn first_message(&self) -> String {
        self.violations.first().map(ToString::to_string).unwrap_or_default()
    }

    fn push(&mut self, kind: ViolationKind, key: Option<(&str, &str)>, detail: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            state: key.map(|(s, _)| s.to_owned()),
            action: key.map(|(_, a)| a.to_owned()).filter(|a| !a.is_empty()),
            detail: detail.into(),
        });
    }
}

/// Checks every model invariant and returns the full list of violations.
pub fn validate_model(model: &CtmdpModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = model.states.len();
    let label = |x: StateId| model.states.labels().get(x).map_or("?", String::as_str);

    let c = &model.costs;
    if !(c.eta.is_finite() && c.eta > 0.0) {
        report.push(ViolationKind::NonPositiveDiscount, None, format!("eta = {}", c.eta));
    }
    if !(c.c_lower.is_finite() && c.c_lower > 0.0) {
        report.push(
            ViolationKind::NonPositiveLowerBound,
            None,
            format!("c_lower = {}", c.c_lower),
        );
    }
    for (name, value) in [("K_rate", model.rates.k_rate), ("K_cost", c.k_cost)] {
        if !(value.is_finite() && value >= 0.0) {
            report.push(ViolationKind::NegativeBound, None, format!("{name} = {value}"));
        }
    }

    let cat = &model.actions;
    if cat.gradual.len() != n || cat.impulsive.len() != n {
        report.push(
            ViolationKind::CatalogShape,
            None,
            format!(
                "catalog covers {}/{} states (gradual/impulsive), expected {n}",
                cat.gradual.len(),
                cat.impulsive.len()
            ),
        );
        return report;
    }

    let mut gradual_keys = BTreeSet::new();
    let mut impulsive_keys = BTreeSet::new();
    for x in 0..n {
        if cat.gradual[x].is_empty() {
            report.push(
                ViolationKind::EmptyGradualCatalog,
                Some((label(x), "")),
                "no admissible gradual action",
            );
        }
        for (list, keys) in [
            (&cat.gradual[x], &mut gradual_keys),
            (&cat.impulsive[x], &mut impulsive_keys),
        ] {
            for a in list {
                if !keys.insert((x, a.clone())) {
                    report.push(ViolationKind::DuplicateAction, Some((label(x), a)), "listed twice");
                }
            }
        }
    }

    let check_row = |report: &mut ValidationReport, key: &ActionKey, row: &SparseRow, is_rate: bool| {
        let k = Some((label(key.0), key.1.as_str()));
        let mut seen = BTreeSet::new();
        for &(y, w) in row {
            if y >= n {
                report.push(ViolationKind::TargetOutOfRange, k, format!("target index {y} >= {n}"));
                continue;
            }
            if !seen.insert(y) {
                report.push(
                    ViolationKind::DuplicateTarget,
                    k,
                    format!("target {} repeated", label(y)),
                );
            }
            if !w.is_finite() {
                report.push(
                    ViolationKind::NonFinite,
                    k,
                    format!("weight {w} for target {}", label(y)),
                );
            } else if w < 0.0 {
                let kind = if is_rate {
                    ViolationKind::NegativeRate
                } else {
                    ViolationKind::NegativeProbability
                };
                report.push(kind, k, format!("weight {w} for target {}", label(y)));
            }
            if is_rate && y == key.0 {
                report.push(ViolationKind::SelfLoop, k, "rate rows must not target their own state");
            }
        }
    };

    for (key, row) in &model.rates.rows {
        check_row(&mut report, key, row, true);
        let total: f64 = row.iter().map(|&(_, r)| r).sum();
        if total > model.rates.k_rate {
            report.push(
                ViolationKind::RateBound,
                Some((label(key.0), &key.1)),
                format!("total rate {total} exceeds K_rate = {}", model.rates.k_rate),
            );
        }
    }
    for (key, row) in &model.impulses.rows {
        check_row(&mut report, key, row, false);
        let total: f64 = row.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > ROW_SUM_TOL {
            report.push(
                ViolationKind::ImpulseNotStochastic,
                Some((label(key.0), &key.1)),
                format!("row sums to {total}"),
            );
        }
    }
    for (key, &cost) in &c.gradual_cost {
        let k = Some((label(key.0), key.1.as_str()));
        if !cost.is_finite() {
            report.push(ViolationKind::NonFinite, k, format!("gradual cost {cost}"));
        } else if cost.abs() > c.k_cost {
            report.push(
                ViolationKind::GradualCostBound,
                k,
                format!("|C^g| = {} exceeds K_cost = {}", cost.abs(), c.k_cost),
            );
        }
    }
    for (key, &cost) in &c.impulse_cost {
        let k = Some((label(key.0), key.1.as_str()));
        if !cost.is_finite() {
            report.push(ViolationKind::NonFinite, k, format!("impulse cost {cost}"));
        } else if cost < c.c_lower {
            report.push(
                ViolationKind::ImpulseCostBelowLower,
                k,
                format!("c^i = {cost} is below c_lower = {}", c.c_lower),
            );
        }
    }

    coverage(
        &mut report,
        &gradual_keys,
        model.rates.rows.keys(),
        &label,
        ViolationKind::MissingRateRow,
        ViolationKind::OrphanRateRow,
    );
    coverage(
        &mut report,
        &gradual_keys,
        c.gradual_cost.keys(),
        &label,
        ViolationKind::MissingGradualCost,
        ViolationKind::OrphanGradualCost,
    );
    coverage(
        &mut report,
        &impulsive_keys,
        model.impulses.rows.keys(),
        &label,
        ViolationKind::MissingImpulseRow,
        ViolationKind::OrphanImpulseRow,
    );
    coverage(
        &mut report,
        &impulsive_keys,
        c.impulse_cost.keys(),
        &label,
        ViolationKind::MissingImpulseCost,
        ViolationKind::OrphanImpulseCost,
    );

    report
}

fn coverage<'a>(
    report: &mut ValidationReport,
    catalog: &BTreeSet<ActionKey>,
    present: impl Iterator<Item = &'a ActionKey>,
    label: &dyn Fn(StateId) -> &'a str,
    missing: ViolationKind,
    orphan: ViolationKind,
) {
    let present: BTreeSet<&ActionKey> = present.collect();
    for key in catalog {
        if !present.contains(key) {
            report.push(missing, Some((label(key.0), &key.1)), "catalog entry has no data");
        }
    }
    for key in present {
        if !catalog.contains(key) {
            report.push(
                orphan,
                Some((label(key.0), &key.1)),
                "data for an action not in the catalog",
            );
        }
    }
}

/// A gradual action compiled for fast access.
#[derive(Debug, Clone, PartialEq)]
pub struct GradualAction {
    pub label: String,
    /// Positive off-diagonal rates, sorted by target.
    pub rates: SparseRow,
    pub total_rate: f64,
    pub cost: f64,
    /// Uniformized transition row `P̃(·|x,a)`, sorted by target.
    pub uniformized: SparseRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulsiveAction {
    pub label: String,
    /// Positive-probability outcomes, sorted by target.
    pub row: SparseRow,
    pub cost: f64,
}

/// A validated model, compiled to per-state action tables.
///
/// Immutable after construction and `Sync`; solvers and simulators share it
/// freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Ctmdp {
    states: StateSpace,
    gradual: Vec<Vec<GradualAction>>,
    impulsive: Vec<Vec<ImpulsiveAction>>,
    eta: f64,
    k: f64,
    k_rate: f64,
    k_cost: f64,
    c_lower: f64,
}

impl Ctmdp {
    /// Validates `model` and compiles it.
    pub fn new(model: CtmdpModel) -> Result<Self> {
        let report = validate_model(&model);
        if !report.is_valid() {
            return Err(Error::Validation(report));
        }
        let k = model.k();
        let n = model.states.len();
        let mut gradual = Vec::with_capacity(n);
        let mut impulsive = Vec::with_capacity(n);
        for x in 0..n {
            let row: Vec<GradualAction> = model.actions.gradual[x]
                .iter()
                .map(|a| {
                    let key = (x, a.clone());
                    let mut rates: SparseRow = model.rates.rows[&key]
                        .iter()
                        .copied()
                        .filter(|&(_, r)| r > 0.0)
                        .collect();
                    rates.sort_by_key(|&(y, _)| y);
                    let total_rate = rates.iter().map(|&(_, r)| r).sum();
                    let uniformized = uniformize(x, &rates, total_rate, k);
                    GradualAction {
                        label: a.clone(),
                        rates,
                        total_rate,
                        cost: model.costs.gradual_cost[&key],
                        uniformized,
                    }
                })
                .collect();
            gradual.push(row);
            let row: Vec<ImpulsiveAction> = model.actions.impulsive[x]
                .iter()
                .map(|a| {
                    let key = (x, a.clone());
                    let mut row: SparseRow = model.impulses.rows[&key]
                        .iter()
                        .copied()
                        .filter(|&(_, p)| p > 0.0)
                        .collect();
                    row.sort_by_key(|&(y, _)| y);
                    ImpulsiveAction {
                        label: a.clone(),
                        row,
                        cost: model.costs.impulse_cost[&key],
                    }
                })
                .collect();
            impulsive.push(row);
        }
        Ok(Self {
            states: model.states,
            gradual,
            impulsive,
            eta: model.costs.eta,
            k,
            k_rate: model.rates.k_rate,
            k_cost: model.costs.k_cost,
            c_lower: model.costs.c_lower,
        })
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// The uniform bound `K = max(K_rate, K_cost)`.
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn k_rate(&self) -> f64 {
        self.k_rate
    }

    pub fn k_cost(&self) -> f64 {
        self.k_cost
    }

    pub fn c_lower(&self) -> f64 {
        self.c_lower
    }

    /// `K/η`, the a priori bound on any value function.
    pub fn value_bound(&self) -> f64 {
        self.k / self.eta
    }

    pub fn gradual(&self, x: StateId) -> &[GradualAction] {
        &self.gradual[x]
    }

    pub fn impulsive(&self, x: StateId) -> &[ImpulsiveAction] {
        &self.impulsive[x]
    }

    pub fn gradual_index(&self, x: StateId, label: &str) -> Option<usize> {
        self.gradual.get(x)?.iter().position(|a| a.label == label)
    }

    pub fn impulsive_index(&self, x: StateId, label: &str) -> Option<usize> {
        self.impulsive.get(x)?.iter().position(|a| a.label == label)
    }

    /// Uniformized row `P̃(·|x,a) = (q̄(·|x,a) + δ_x (K − q̄(X|x,a))) / K`.
    pub fn uniformized_row(&self, x: StateId, action: &str) -> Result<&[(StateId, f64)]> {
        let a = self.gradual_index(x, action).ok_or_else(|| Error::UnknownKey {
            state: self.states.labels().get(x).cloned().unwrap_or_else(|| format!("#{x}")),
            action: action.to_owned(),
        })?;
        Ok(&self.gradual[x][a].uniformized)
    }

    /// Converts back to raw model data.
    pub fn to_model(&self) -> CtmdpModel {
        let n = self.n_states();
        let mut actions = ActionCatalog::new(n);
        let mut rates = RateKernel {
            rows: BTreeMap::new(),
            k_rate: self.k_rate,
        };
        let mut impulses = ImpulseKernel::default();
        let mut costs = CostModel {
            eta: self.eta,
            k_cost: self.k_cost,
            c_lower: self.c_lower,
            ..CostModel::default()
        };
        for x in 0..n {
            for a in &self.gradual[x] {
                actions.gradual[x].push(a.label.clone());
                rates.rows.insert((x, a.label.clone()), a.rates.clone());
                costs.gradual_cost.insert((x, a.label.clone()), a.cost);
            }
            for a in &self.impulsive[x] {
                actions.impulsive[x].push(a.label.clone());
                impulses.rows.insert((x, a.label.clone()), a.row.clone());
                costs.impulse_cost.insert((x, a.label.clone()), a.cost);
            }
        }
        CtmdpModel {
            states: self.states.clone(),
            actions,
            rates,
            impulses,
            costs,
        }
    }
}

fn uniformize(x: StateId, rates: &[(StateId, f64)], total_rate: f64, k: f64) -> SparseRow {
    if k <= 0.0 {
        // K = 0 forces every rate to zero: the kernel is the identity.
        return vec![(x, 1.0)];
    }
    let stay = (k - total_rate) / k;
    let mut row: SparseRow = rates.iter().map(|&(y, r)| (y, r / k)).collect();
    if stay > 0.0 {
        let pos = row.partition_point(|&(y, _)| y < x);
        row.insert(pos, (x, stay));
    }
    row
}

/// Incremental construction of a [`CtmdpModel`] by state index.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    model: CtmdpModel,
}

impl ModelBuilder {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let states = StateSpace::new(labels)?;
        let n = states.len();
        Ok(Self {
            model: CtmdpModel {
                states,
                actions: ActionCatalog::new(n),
                rates: RateKernel::default(),
                impulses: ImpulseKernel::default(),
                costs: CostModel::default(),
            },
        })
    }

    pub fn id(&self, label: &str) -> Option<StateId> {
        self.model.states.id(label)
    }

    /// Adds a gradual action with its cost rate and off-diagonal jump rates.
    pub fn gradual(&mut self, x: StateId, action: &str, cost: f64, rates: SparseRow) -> &mut Self {
        let key = (x, action.to_owned());
        self.model.actions.gradual[x].push(action.to_owned());
        self.model.rates.rows.insert(key.clone(), rates);
        self.model.costs.gradual_cost.insert(key, cost);
        self
    }

    /// Adds an impulsive action with its cost and outcome distribution.
    pub fn impulsive(&mut self, x: StateId, action: &str, cost: f64, row: SparseRow) -> &mut Self {
        let key = (x, action.to_owned());
        self.model.actions.impulsive[x].push(action.to_owned());
        self.model.impulses.rows.insert(key.clone(), row);
        self.model.costs.impulse_cost.insert(key, cost);
        self
    }

    pub fn constants(&mut self, eta: f64, k_rate: f64, k_cost: f64, c_lower: f64) -> &mut Self {
        self.model.rates.k_rate = k_rate;
        self.model.costs.eta = eta;
        self.model.costs.k_cost = k_cost;
        self.model.costs.c_lower = c_lower;
        self
    }

    pub fn build(&self) -> CtmdpModel {
        self.model.clone()
    }

    /// Builds, validates and compiles.
    pub fn compile(&self) -> Result<Ctmdp> {
        Ctmdp::new(self.build())
    }
}
