//! The epidemic with carriers.
//!
//! A population of susceptibles is infected through contact with carriers,
//! whose number follows an uncontrolled birth-and-death process. Infectives
//! cost 1 per unit time and recover at rate `κ_r`; a susceptible can be
//! immunized at cost `λ`. The value function separates as
//! `V(s, c, i) = s·v(c) + i/(η+κ_r)` where `v` solves a one-dimensional
//! fixed-point equation over carrier counts, and the optimal policy
//! immunizes every susceptible once the carrier count reaches a threshold
//! `c*`.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::file::from_toml_error;
use crate::model::{Ctmdp, ModelBuilder, SparseRow, StateId};
use crate::policy::StationaryPolicy;

pub const GRADUAL_ACTION: &str = "wait";
pub const IMPULSIVE_ACTION: &str = "immunize";
pub const DEFAULT_CARRIER_TOL: f64 = 1e-12;
const CARRIER_MAX_ITER: usize = 10_000_000;

/// A rate function on carrier counts, tabulated from `c = 0` and constant
/// beyond its last entry. An empty table is identically 0.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateTable(pub Vec<f64>);

impl RateTable {
    pub fn at(&self, c: usize) -> f64 {
        match self.0.len() {
            0 => 0.0,
            n => self.0[c.min(n - 1)],
        }
    }

    pub fn constant_from_one(value: f64) -> Self {
        Self(vec![0.0, value])
    }

    pub fn from_fn(len: usize, f: impl Fn(usize) -> f64) -> Self {
        Self((0..len).map(f).collect())
    }
}

/// Model inputs. Field names in the params file are `S`, `I`, `c0`,
/// `C_max`, `rho_b`, `rho_d`, `kappa_i`, `kappa_r`, `lambda`, `eta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicParams {
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "I")]
    pub i: usize,
    #[serde(default)]
    pub c0: usize,
    #[serde(rename = "C_max")]
    pub c_max: usize,
    pub rho_b: RateTable,
    pub rho_d: RateTable,
    pub kappa_i: RateTable,
    pub kappa_r: f64,
    pub lambda: f64,
    pub eta: f64,
}

/// Whether a violation of the monotonicity hypothesis on the carrier
/// coefficients stops the model build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HdPolicy {
    Enforce,
    #[default]
    Audit,
}

/// First carrier count at which a coefficient decreases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HdViolation {
    pub c: usize,
    pub coefficient: &'static str,
}

/// Relative slack when comparing consecutive coefficients.
const HD_SLACK: f64 = 1e-15;

impl EpidemicParams {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("eta", self.eta)?;
        positive("lambda", self.lambda)?;
        if !(self.kappa_r >= 0.0 && self.kappa_r.is_finite()) {
            return Err(Error::Domain(format!(
                "kappa_r must be nonnegative, got {}",
                self.kappa_r
            )));
        }
        for (name, table) in [
            ("rho_b", &self.rho_b),
            ("rho_d", &self.rho_d),
            ("kappa_i", &self.kappa_i),
        ] {
            if let Some((c, v)) = table.0.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
                return Err(Error::Domain(format!(
                    "{name}({c}) must be nonnegative and finite, got {v}"
                )));
            }
            if table.at(0) != 0.0 {
                return Err(Error::Domain(format!("{name}(0) must be 0, got {}", table.at(0))));
            }
        }
        if self.c0 > self.c_max {
            return Err(Error::Domain(format!(
                "c0 = {} exceeds C_max = {}",
                self.c0, self.c_max
            )));
        }
        Ok(())
    }

    /// Birth rate with the reflecting truncation at `C_max`.
    pub fn birth(&self, c: usize) -> f64 {
        if c >= self.c_max {
            0.0
        } else {
            self.rho_b.at(c)
        }
    }

    fn alphas_with(&self, c: usize, birth: f64) -> [f64; 3] {
        let (d, k) = (self.rho_d.at(c), self.kappa_i.at(c));
        let denom = self.eta + birth + d + k;
        [birth / denom, d / denom, k / (self.eta + self.kappa_r) / denom]
    }

    /// `α_1, α_2, α_3` at `c` with the declared (untruncated) birth rate.
    pub fn alphas(&self, c: usize) -> [f64; 3] {
        self.alphas_with(c, self.rho_b.at(c))
    }

    /// Coefficients of the truncated carrier equation, with `ρ_b(C_max) = 0`.
    pub fn truncated_alphas(&self, c: usize) -> [f64; 3] {
        self.alphas_with(c, self.birth(c))
    }

    /// First `c ≤ C_max` where some `α_j(c) < α_j(c-1)`.
    pub fn hd_violation(&self) -> Option<HdViolation> {
        const NAMES: [&str; 3] = ["alpha_1", "alpha_2", "alpha_3"];
        let mut prev = self.alphas(0);
        for c in 1..=self.c_max {
            let cur = self.alphas(c);
            if let Some(j) = (0..3).find(|&j| cur[j] < prev[j] - HD_SLACK * prev[j].abs()) {
                return Some(HdViolation {
                    c,
                    coefficient: NAMES[j],
                });
            }
            prev = cur;
        }
        None
    }

    /// Cost bound `K_cost = S + I`: the largest possible number of infectives.
    pub fn k_cost(&self) -> f64 {
        (self.s + self.i) as f64
    }
}

pub fn parse_params(text: &str) -> Result<EpidemicParams> {
    toml::from_str(text).map_err(|e| from_toml_error(text, &e))
}

pub fn read_params(path: impl AsRef<Path>) -> Result<EpidemicParams> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        field: String::new(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_params(&text)
}

pub type Coords = (usize, usize, usize);

/// The generic model built from [`EpidemicParams`] together with the map
/// between states and `(s, c, i)`.
#[derive(Debug, Clone)]
pub struct EpidemicModel {
    pub params: EpidemicParams,
    pub ctmdp: Ctmdp,
    pub hd_violation: Option<HdViolation>,
    coords: Vec<Coords>,
    index: HashMap<Coords, StateId>,
}

impl EpidemicModel {
    pub fn state(&self, s: usize, c: usize, i: usize) -> Option<StateId> {
        self.index.get(&(s, c, i)).copied()
    }

    pub fn coords(&self, x: StateId) -> Coords {
        self.coords[x]
    }

    pub fn initial_state(&self) -> StateId {
        let p = &self.params;
        self.state(p.s, p.c0, p.i).expect("initial state is enumerated")
    }

    pub fn n_states(&self) -> usize {
        self.coords.len()
    }
}

pub fn state_label(s: usize, c: usize, i: usize) -> String {
    format!("s{s}_c{c}_i{i}")
}

/// Outgoing natural jumps of `(s, c, i)`, zero rates omitted.
fn transitions(p: &EpidemicParams, (s, c, i): Coords) -> Vec<(Coords, f64)> {
    let mut out = Vec::with_capacity(4);
    let mut push = |to, rate: f64| {
        if rate > 0.0 {
            out.push((to, rate));
        }
    };
    push((s, c + 1, i), p.birth(c));
    if c > 0 {
        push((s, c - 1, i), p.rho_d.at(c));
    }
    if s > 0 {
        push((s - 1, c, i + 1), s as f64 * p.kappa_i.at(c));
    }
    if i > 0 {
        push((s, c, i - 1), i as f64 * p.kappa_r);
    }
    out
}

/// Builds the generic model on `{(s, c, i): s ≤ S, c ≤ C_max, s + i ≤ S + I}`.
///
/// The one gradual action `wait` costs `i` per unit time; `immunize` moves
/// `(s, c, i)` to `(s-1, c, i)` at cost `λ` wherever `s ≥ 1`. `K_rate` is the
/// largest total jump rate over all states and `K_cost = S + I`.
pub fn build_epidemic_model(params: &EpidemicParams, hd: HdPolicy) -> Result<EpidemicModel> {
    params.validate()?;
    let hd_violation = params.hd_violation();
    if let (HdPolicy::Enforce, Some(v)) = (hd, hd_violation) {
        return Err(Error::NotMonotone {
            c: v.c,
            coefficient: v.coefficient,
        });
    }
    let total = params.s + params.i;
    let mut coords = Vec::new();
    for s in 0..=params.s {
        for c in 0..=params.c_max {
            for i in 0..=(total - s) {
                coords.push((s, c, i));
            }
        }
    }
    let index: HashMap<Coords, StateId> = coords.iter().enumerate().map(|(x, &k)| (k, x)).collect();

    let mut b = ModelBuilder::new(coords.iter().map(|&(s, c, i)| state_label(s, c, i)))?;
    let mut k_rate = 0.0f64;
    for (x, &(s, c, i)) in coords.iter().enumerate() {
        let mut row: SparseRow = transitions(params, (s, c, i))
            .into_iter()
            .map(|(to, rate)| (index[&to], rate))
            .collect();
        row.sort_by_key(|&(y, _)| y);
        k_rate = k_rate.max(row.iter().map(|&(_, r)| r).sum());
        b.gradual(x, GRADUAL_ACTION, i as f64, row);
        if s > 0 {
            b.impulsive(x, IMPULSIVE_ACTION, params.lambda, vec![(index[&(s - 1, c, i)], 1.0)]);
        }
    }
    b.constants(params.eta, k_rate, params.k_cost(), params.lambda);
    Ok(EpidemicModel {
        params: params.clone(),
        ctmdp: b.compile()?,
        hd_violation,
        coords,
        index,
    })
}

/// Solution of the carrier equation
/// `v(c) = min{α_1(c) v(c+1) + α_2(c) v(c-1) + α_3(c), λ}` on `0..=C_max`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarrierValue {
    pub v: Vec<f64>,
    /// Smallest `c` where the first expression exceeds `λ`; `None` stands
    /// for an infinite threshold.
    pub c_star: Option<usize>,
    pub lambda_star: f64,
    /// Contraction modulus `sup_c (α_1 + α_2)`.
    pub d: f64,
    pub iterations: usize,
    /// `sup_c |v(c) - 𝒢v(c)|`.
    pub residual: f64,
}

/// First expression of the carrier equation at `c`.
pub fn carrier_continuation(params: &EpidemicParams, w: &[f64], c: usize) -> f64 {
    let [a1, a2, a3] = params.truncated_alphas(c);
    let up = if a1 > 0.0 { a1 * w[c + 1] } else { 0.0 };
    let down = if c > 0 { a2 * w[c - 1] } else { 0.0 };
    up + down + a3
}

fn carrier_map(params: &EpidemicParams, w: &[f64]) -> Vec<f64> {
    (0..w.len())
        .map(|c| carrier_continuation(params, w, c).min(params.lambda))
        .collect()
}

/// `λ* = (κ_i(C_max)/(η+κ_r)) / (η+κ_i(C_max))`, the rate functions being
/// constant from `C_max` on. Birth and death rates do not enter.
pub fn lambda_star(params: &EpidemicParams) -> f64 {
    let k = params.kappa_i.at(params.c_max);
    k / (params.eta + params.kappa_r) / (params.eta + k)
}

/// Successive approximations from `w_0 ≡ 0`, stopped once the sup-norm step
/// is below `tol·(1-d)`.
pub fn solve_carrier_equation(params: &EpidemicParams, tol: f64) -> Result<CarrierValue> {
    params.validate()?;
    let n = params.c_max + 1;
    let d = (0..n)
        .map(|c| {
            let [a1, a2, _] = params.truncated_alphas(c);
            a1 + a2
        })
        .fold(0.0, f64::max);
    if d >= 1.0 {
        return Err(Error::NotContraction { d });
    }
    let threshold = tol * (1.0 - d);
    let mut w = vec![0.0; n];
    let mut iterations = 0;
    loop {
        let next = carrier_map(params, &w);
        let step = next.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w = next;
        iterations += 1;
        if step < threshold {
            break;
        }
        if iterations >= CARRIER_MAX_ITER {
            return Err(Error::NonConvergence {
                iterations,
                step,
                last: Box::new(w),
            });
        }
    }
    let residual = carrier_map(params, &w)
        .iter()
        .zip(&w)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let c_star = (0..n).find(|&c| carrier_continuation(params, &w, c) > params.lambda);
    Ok(CarrierValue {
        v: w,
        c_star,
        lambda_star: lambda_star(params),
        d,
        iterations,
        residual,
    })
}

/// `s·v(c) + i/(η+κ_r)`.
pub fn analytic_value(params: &EpidemicParams, cv: &CarrierValue, s: usize, c: usize, i: usize) -> Result<f64> {
    if s > params.s || c > params.c_max || i > params.s + params.i || c >= cv.v.len() {
        return Err(Error::Domain(format!(
            "state (s={s}, c={c}, i={i}) outside 0..={} × 0..={} × 0..={}",
            params.s,
            params.c_max,
            params.s + params.i
        )));
    }
    Ok(s as f64 * cv.v[c] + i as f64 / (params.eta + params.kappa_r))
}

/// Immunize wherever `s ≥ 1` and `c ≥ c*`; wait elsewhere.
pub fn threshold_policy(model: &EpidemicModel, cv: &CarrierValue) -> StationaryPolicy {
    let mut policy = StationaryPolicy::all_gradual(model.n_states());
    if let Some(c_star) = cv.c_star {
        for x in 0..model.n_states() {
            let (s, c, _) = model.coords(x);
            if s >= 1 && c >= c_star {
                policy.set_impulsive(x, 0);
            }
        }
    }
    policy
}

/// One row of a sweep over immunization costs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub c_star: Option<usize>,
    pub lambda_star: f64,
    pub residual: f64,
}

/// Solves the carrier equation for every `λ` in `lambdas`.
pub fn sweep(params: &EpidemicParams, lambdas: &[f64], tol: f64) -> Result<Vec<SweepRow>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let p = EpidemicParams {
                lambda,
                ..params.clone()
            };
            let cv = solve_carrier_equation(&p, tol)?;
            Ok(SweepRow {
                lambda,
                c_star: cv.c_star,
                lambda_star: cv.lambda_star,
                residual: cv.residual,
            })
        })
        .collect()
}

/// The reference instance: `S = 10`, `I = 2`, `C_max = 30`,
/// `ρ_b = ρ_d = 1` for `c ≥ 1`, `κ_i(c) = min(c, 10)`, `κ_r = η = 1`.
pub fn reference_params(lambda: f64) -> EpidemicParams {
    EpidemicParams {
        s: 10,
        i: 2,
        c0: 2,
        c_max: 30,
        rho_b: RateTable::constant_from_one(1.0),
        rho_d: RateTable::constant_from_one(1.0),
        kappa_i: RateTable::from_fn(11, |c| c as f64),
        kappa_r: 1.0,
        lambda,
        eta: 1.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellman::{extract_policy, solve, DEFAULT_TOL_SET};
    use crate::intervention::sample_chain;
    use crate::policy::Mode;
    use crate::simulator::replication_rng;
    use approx::assert_abs_diff_eq;

    fn carrier_free(lambda: f64) -> EpidemicParams {
        EpidemicParams {
            rho_b: RateTable::default(),
            rho_d: RateTable::default(),
            ..reference_params(lambda)
        }
    }

    #[test]
    fn rate_table_extends_last_value() {
        let t = RateTable(vec![0.0, 2.0, 3.0]);
        assert_eq!((t.at(0), t.at(2), t.at(50)), (0.0, 3.0, 3.0));
        assert_eq!(RateTable::default().at(7), 0.0);
    }

    #[test]
    fn carrier_free_closed_form() {
        let p = carrier_free(0.2);
        let cv = solve_carrier_equation(&p, 1e-13).unwrap();
        for c in 0..=p.c_max {
            let k = c.min(10) as f64;
            assert_abs_diff_eq!(cv.v[c], (k / 2.0 / (1.0 + k)).min(0.2), epsilon = 1e-12);
        }
        assert_eq!(cv.c_star, Some(1));
        assert_eq!(cv.d, 0.0);
    }

    #[test]
    fn expensive_immunization_is_never_used() {
        let cv = solve_carrier_equation(&carrier_free(0.5), 1e-13).unwrap();
        assert_eq!(cv.c_star, None);
        assert_abs_diff_eq!(cv.lambda_star, 5.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn no_infection_means_no_value() {
        let p = EpidemicParams {
            kappa_i: RateTable::default(),
            ..reference_params(0.2)
        };
        let cv = solve_carrier_equation(&p, 1e-12).unwrap();
        assert!(cv.v.iter().all(|&v| v == 0.0));
        assert_eq!(cv.c_star, None);
        assert_eq!(lambda_star(&p), 0.0);

        let m = build_epidemic_model(&EpidemicParams { s: 3, c_max: 4, ..p }, HdPolicy::Audit).unwrap();
        let v = solve(&m.ctmdp, 1e-10).unwrap().value;
        let policy = extract_policy(&m.ctmdp, &v, DEFAULT_TOL_SET).unwrap();
        assert!(policy.mode.iter().all(|&x| x == Mode::Gradual));
    }

    #[test]
    fn reference_threshold_and_value() {
        let p = reference_params(0.2);
        let cv = solve_carrier_equation(&p, 1e-13).unwrap();
        assert_eq!(cv.c_star, Some(2));
        assert!(cv.residual <= 10.0 * 1e-13);
        assert!(cv.v.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        assert!(cv.v.iter().all(|&v| (0.0..=0.2).contains(&v)));
        let expected = 10.0 * cv.v[5] + 1.0;
        assert_abs_diff_eq!(analytic_value(&p, &cv, 10, 5, 2).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(analytic_value(&p, &cv, 1, 7, 0).unwrap(), cv.v[7], epsilon = 1e-15);
        assert_abs_diff_eq!(analytic_value(&p, &cv, 0, 9, 4).unwrap(), 2.0, epsilon = 1e-15);
        assert!(matches!(analytic_value(&p, &cv, 11, 0, 0), Err(Error::Domain(_))));
        assert!(matches!(analytic_value(&p, &cv, 0, 31, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn lambda_star_ignores_carrier_dynamics() {
        let p = reference_params(0.2);
        let q = EpidemicParams {
            rho_b: RateTable::constant_from_one(2.0),
            rho_d: RateTable::constant_from_one(2.0),
            ..p.clone()
        };
        assert_eq!(lambda_star(&p).to_bits(), lambda_star(&q).to_bits());
        assert_abs_diff_eq!(lambda_star(&p), 5.0 / 11.0, epsilon = 1e-15);
    }

    #[test]
    fn hd_audit_and_enforcement() {
        let p = reference_params(0.2);
        let v = p.hd_violation().unwrap();
        assert_eq!(v.c, 2);
        assert!(matches!(
            build_epidemic_model(&EpidemicParams { c_max: 3, ..p.clone() }, HdPolicy::Enforce),
            Err(Error::NotMonotone { c: 2, .. })
        ));
        assert!(carrier_free(0.2).hd_violation().is_none());
    }

    #[test]
    fn invalid_params_are_rejected() {
        let p = reference_params(0.2);
        for bad in [
            EpidemicParams {
                lambda: 0.0,
                ..p.clone()
            },
            EpidemicParams { eta: -1.0, ..p.clone() },
            EpidemicParams {
                rho_b: RateTable(vec![1.0]),
                ..p.clone()
            },
            EpidemicParams {
                kappa_i: RateTable(vec![0.0, -1.0]),
                ..p.clone()
            },
            EpidemicParams { c0: 31, ..p.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Domain(_))), "{bad:?}");
        }
    }

    #[test]
    fn rate_bound_matches_brute_force() {
        let p = reference_params(0.2);
        let m = build_epidemic_model(&p, HdPolicy::Audit).unwrap();
        let mut k = 0.0f64;
        for s in 0..=10usize {
            for c in 0..=30usize {
                for i in 0..=(12 - s) {
                    let kc = c.min(10) as f64;
                    let birth = if (1..30).contains(&c) { 1.0 } else { 0.0 };
                    let death = if c >= 1 { 1.0 } else { 0.0 };
                    k = k.max(birth + death + s as f64 * kc + i as f64);
                }
            }
        }
        assert_eq!(k, 104.0);
        assert_eq!(m.ctmdp.k_rate(), k);
        assert_eq!(m.ctmdp.k_cost(), 12.0);
        assert_eq!(m.n_states(), 88 * 31);
        assert_eq!(m.coords(m.initial_state()), (10, 2, 2));
        assert_eq!(m.ctmdp.states().label(m.initial_state()), "s10_c2_i2");
    }

    #[test]
    fn no_susceptibles_gives_recovery_value() {
        let p = EpidemicParams {
            s: 0,
            i: 3,
            c_max: 6,
            ..reference_params(0.2)
        };
        let m = build_epidemic_model(&p, HdPolicy::Audit).unwrap();
        assert!((0..m.n_states()).all(|x| m.ctmdp.impulsive(x).is_empty()));
        let v = solve(&m.ctmdp, 1e-11).unwrap().value;
        for x in 0..m.n_states() {
            let (_, _, i) = m.coords(x);
            assert_abs_diff_eq!(v[x], i as f64 / 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn threshold_chains_immunize_everyone() {
        let p = EpidemicParams {
            s: 3,
            i: 1,
            c_max: 8,
            ..reference_params(0.2)
        };
        let m = build_epidemic_model(&p, HdPolicy::Audit).unwrap();
        let cv = solve_carrier_equation(&p, 1e-12).unwrap();
        let policy = threshold_policy(&m, &cv);
        let c = cv.c_star.unwrap();
        let x = m.state(3, c, 1).unwrap();
        let chain = sample_chain(&m.ctmdp, &policy, x, &mut replication_rng(0, 0)).unwrap();
        assert_eq!(chain.len(), 3);
        assert_abs_diff_eq!(chain.total_cost, 0.6, epsilon = 1e-15);
        assert_eq!(m.coords(chain.landing), (0, c, 1));
        assert!(!policy.is_impulsive(m.state(3, c - 1, 1).unwrap()));
        assert!(!policy.is_impulsive(m.state(0, c, 1).unwrap()));

        let none = CarrierValue { c_star: None, ..cv };
        assert_eq!(threshold_policy(&m, &none).impulsive_states().count(), 0);
    }

    #[test]
    fn params_file_round_trip() {
        let text = r#"
S = 10
I = 2
c0 = 2
C_max = 30
rho_b = [0.0, 1.0]
rho_d = [0.0, 1.0]
kappa_i = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
kappa_r = 1.0
lambda = 0.2
eta = 1.0
"#;
        assert_eq!(parse_params(text).unwrap(), reference_params(0.2));
        match parse_params(&text.replace("eta = 1.0", "eta = 1.0\ngamma = 2.0")) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 12);
                assert_eq!(field, "gamma");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn sweep_classifies_around_lambda_star() {
        let p = reference_params(0.2);
        let ls = lambda_star(&p);
        let rows = sweep(&p, &[ls - 1e-3, ls + 1e-3], 1e-12).unwrap();
        assert!(rows[0].c_star.is_some());
        assert!(rows[1].c_star.is_none());
    }
}
