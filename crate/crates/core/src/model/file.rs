//! TOML model documents.
//!
//! ```toml
//! states = ["healthy", "sick"]
//!
//! [gradual_actions]
//! healthy = ["wait"]
//! sick = ["wait"]
//!
//! [impulsive_actions]
//! sick = ["treat"]
//!
//! [[rates]]
//! state = "sick"
//! action = "wait"
//! targets = { healthy = 1.0 }
//!
//! [[impulse_rows]]
//! state = "sick"
//! action = "treat"
//! targets = { healthy = 1.0 }
//!
//! [[costs]]
//! kind = "gradual"
//! state = "sick"
//! action = "wait"
//! cost = 1.0
//!
//! [constants]
//! eta = 1.0
//! K_rate = 1.0
//! K_cost = 1.0
//! c_lower = 0.1
//! ```
//!
//! Structural errors and references to unknown states are reported with the
//! line and field they occur at. Semantic problems (bounds, coverage, row
//! sums) are left to [`validate_model`](super::validate_model).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use super::{ActionCatalog, CostModel, CtmdpModel, ImpulseKernel, RateKernel, SparseRow, StateSpace};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    states: Spanned<Vec<String>>,
    gradual_actions: BTreeMap<String, Spanned<Vec<String>>>,
    #[serde(default)]
    impulsive_actions: BTreeMap<String, Spanned<Vec<String>>>,
    #[serde(default)]
    rates: Vec<RawRow>,
    #[serde(default)]
    impulse_rows: Vec<RawRow>,
    #[serde(default)]
    costs: Vec<RawCost>,
    constants: RawConstants,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    state: Spanned<String>,
    action: String,
    targets: Option<Spanned<BTreeMap<String, f64>>>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum CostKind {
    Gradual,
    Impulsive,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCost {
    kind: CostKind,
    state: Spanned<String>,
    action: String,
    cost: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstants {
    eta: f64,
    #[serde(rename = "K_rate")]
    k_rate: f64,
    #[serde(rename = "K_cost")]
    k_cost: f64,
    c_lower: f64,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

fn parse_error(
    text: &str,
    span: std::ops::Range<usize>,
    field: impl Into<String>,
    message: impl Into<String>,
) -> Error {
    Error::Parse {
        line: line_of(text, span.start),
        field: field.into(),
        message: message.into(),
    }
}

/// Maps a TOML/serde error onto [`Error::Parse`]; the field is the first
/// backquoted name in the message, if any.
pub(crate) fn from_toml_error(text: &str, err: &toml::de::Error) -> Error {
    let message = err.message().to_owned();
    let field = message.split('`').nth(1).map(str::to_owned).unwrap_or_default();
    Error::Parse {
        line: err.span().map_or(0, |s| line_of(text, s.start)),
        field,
        message,
    }
}

/// Parses a model document. The result is not yet validated.
pub fn parse_model(text: &str) -> Result<CtmdpModel> {
    let raw: RawModel = toml::from_str(text).map_err(|e| from_toml_error(text, &e))?;
    let states_span = raw.states.span();
    let states = StateSpace::new(raw.states.into_inner())
        .map_err(|e| parse_error(text, states_span, "states", e.to_string()))?;
    let n = states.len();
    let resolve = |label: &Spanned<String>, field: &str| {
        states.id(label.get_ref()).ok_or_else(|| {
            parse_error(
                text,
                label.span(),
                field,
                format!("unknown state `{}`", label.get_ref()),
            )
        })
    };

    let mut actions = ActionCatalog::new(n);
    for (section, table, lists) in [
        ("gradual_actions", &raw.gradual_actions, &mut actions.gradual),
        ("impulsive_actions", &raw.impulsive_actions, &mut actions.impulsive),
    ] {
        for (state, list) in table {
            let x = states.id(state).ok_or_else(|| {
                parse_error(
                    text,
                    list.span(),
                    format!("{section}.{state}"),
                    format!("unknown state `{state}`"),
                )
            })?;
            lists[x] = list.get_ref().clone();
        }
    }

    let read_rows = |rows: &[RawRow], section: &str| -> Result<BTreeMap<(usize, String), SparseRow>> {
        let mut out = BTreeMap::new();
        for (i, row) in rows.iter().enumerate() {
            let x = resolve(&row.state, &format!("{section}[{i}].state"))?;
            let mut targets = SparseRow::new();
            for (label, &w) in row.targets.iter().flat_map(|t| t.get_ref()) {
                let y = states.id(label).ok_or_else(|| {
                    parse_error(
                        text,
                        row.targets.as_ref().map_or(row.state.span(), |t| t.span()),
                        format!("{section}[{i}].targets.{label}"),
                        format!("unknown target state `{label}`"),
                    )
                })?;
                targets.push((y, w));
            }
            targets.sort_by_key(|&(y, _)| y);
            if out.insert((x, row.action.clone()), targets).is_some() {
                return Err(parse_error(
                    text,
                    row.state.span(),
                    format!("{section}[{i}]"),
                    format!("duplicate row for ({}, {})", row.state.get_ref(), row.action),
                ));
            }
        }
        Ok(out)
    };
    let rates = RateKernel {
        rows: read_rows(&raw.rates, "rates")?,
        k_rate: raw.constants.k_rate,
    };
    let impulses = ImpulseKernel {
        rows: read_rows(&raw.impulse_rows, "impulse_rows")?,
    };

    let mut costs = CostModel {
        eta: raw.constants.eta,
        k_cost: raw.constants.k_cost,
        c_lower: raw.constants.c_lower,
        ..CostModel::default()
    };
    for (i, c) in raw.costs.iter().enumerate() {
        let x = resolve(&c.state, &format!("costs[{i}].state"))?;
        let map = match c.kind {
            CostKind::Gradual => &mut costs.gradual_cost,
            CostKind::Impulsive => &mut costs.impulse_cost,
        };
        if map.insert((x, c.action.clone()), c.cost).is_some() {
            return Err(parse_error(
                text,
                c.state.span(),
                format!("costs[{i}]"),
                format!("duplicate cost for ({}, {})", c.state.get_ref(), c.action),
            ));
        }
    }

    Ok(CtmdpModel {
        states,
        actions,
        rates,
        impulses,
        costs,
    })
}

/// Reads and parses a model file.
pub fn read_model(path: impl AsRef<Path>) -> Result<CtmdpModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        field: String::new(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_model, Ctmdp, ViolationKind};

    const TWO_STATE: &str = r#"
states = ["healthy", "sick"]

[gradual_actions]
healthy = ["wait"]
sick = ["wait"]

[impulsive_actions]
sick = ["treat"]

[[rates]]
state = "sick"
action = "wait"
targets = { healthy = 1.0 }

[[rates]]
state = "healthy"
action = "wait"

[[impulse_rows]]
state = "sick"
action = "treat"
targets = { healthy = 1.0 }

[[costs]]
kind = "gradual"
state = "sick"
action = "wait"
cost = 1.0

[[costs]]
kind = "gradual"
state = "healthy"
action = "wait"
cost = 0.0

[[costs]]
kind = "impulsive"
state = "sick"
action = "treat"
cost = 0.3

[constants]
eta = 1.0
K_rate = 1.0
K_cost = 1.0
c_lower = 0.1
"#;

    #[test]
    fn parses_and_validates() {
        let model = parse_model(TWO_STATE).unwrap();
        assert!(validate_model(&model).is_valid(), "{:?}", validate_model(&model));
        let m = Ctmdp::new(model).unwrap();
        assert_eq!(m.n_states(), 2);
        assert_eq!(m.gradual(1)[0].rates, vec![(0, 1.0)]);
        assert_eq!(m.impulsive(1)[0].cost, 0.3);
        assert!(m.impulsive(0).is_empty());
    }

    #[test]
    fn unknown_target_reports_line_and_field() {
        let text = TWO_STATE.replace(
            "targets = { healthy = 1.0 }\n\n[[rates]]",
            "targets = { dead = 1.0 }\n\n[[rates]]",
        );
        match parse_model(&text) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, 14);
                assert_eq!(field, "rates[0].targets.dead");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_constant_names_the_field() {
        let text = TWO_STATE.replace("c_lower = 0.1\n", "");
        match parse_model(&text) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "c_lower"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_a_line() {
        let text = TWO_STATE.replace("eta = 1.0", "eta = = 1.0");
        match parse_model(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 44),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bound_breaches_are_validation_not_parse_errors() {
        let text = TWO_STATE.replace("cost = 0.3", "cost = 0.01");
        let model = parse_model(&text).unwrap();
        assert_eq!(validate_model(&model).count(ViolationKind::ImpulseCostBelowLower), 1);
    }
}
