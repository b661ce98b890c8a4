//! Mobile reaction network descriptions and their JSON configuration format.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Rule, Violation};
use crate::expr::{parse_expr, ExprErrorKind, RateExpr, Scope};
use crate::field::Field;
use crate::lattice::LatticeGrid;

/// Lattice used to check Dirichlet data and nonnegativity of closed-form fields.
const CHECK_K: usize = 64;

/// One interaction `Σ c_l A_l -> Σ d_l A_l` with density-form rate `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub consumed: Vec<u32>,
    pub produced: Vec<u32>,
    pub rate: RateExpr,
}

impl Reaction {
    pub fn new(consumed: Vec<u32>, produced: Vec<u32>, rate: RateExpr) -> Self {
        Reaction {
            consumed,
            produced,
            rate,
        }
    }

    /// `d_l - c_l` for every local state.
    pub fn net_change(&self) -> Vec<i64> {
        self.consumed
            .iter()
            .zip(&self.produced)
            .map(|(&c, &d)| d as i64 - c as i64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedField {
    pub name: String,
    #[serde(flatten)]
    pub field: Field,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub states: Vec<String>,
    pub reactions: Vec<Reaction>,
    pub params: Vec<NamedField>,
    /// Named literals available to rate expressions; already inlined in `reactions`.
    pub constants: BTreeMap<String, f64>,
    /// Base migration rates `μ_l`, before lattice scaling.
    pub mu: Vec<f64>,
    pub initial: Vec<Field>,
    pub horizon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReactionDoc {
    consumed: Vec<u32>,
    produced: Vec<u32>,
    rate: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    states: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    constants: BTreeMap<String, f64>,
    #[serde(default)]
    params: Vec<NamedField>,
    reactions: Vec<ReactionDoc>,
    mu: Vec<f64>,
    initial: Vec<Field>,
    horizon: f64,
}

struct DocScope<'a> {
    doc: &'a SpecDoc,
}

impl Scope for DocScope<'_> {
    fn resolve(&self, name: &str) -> Option<RateExpr> {
        if let Some(l) = self.doc.states.iter().position(|s| s == name) {
            return Some(RateExpr::Density(l));
        }
        if let Some(p) = self.doc.params.iter().position(|p| p.name == name) {
            return Some(RateExpr::Param(p));
        }
        self.doc.constants.get(name).map(|&v| RateExpr::Lit(v))
    }
}

/// Parses and validates a JSON network description.
pub fn parse_spec(text: &str) -> Result<NetworkSpec> {
    let doc: SpecDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let scope = DocScope { doc: &doc };
    let mut violations = Vec::new();
    let mut reactions = Vec::with_capacity(doc.reactions.len());
    for (j, r) in doc.reactions.iter().enumerate() {
        match parse_expr(&r.rate, &scope) {
            Ok(rate) => reactions.push(Reaction::new(r.consumed.clone(), r.produced.clone(), rate)),
            Err(e) => {
                let rule = match e.kind {
                    ExprErrorKind::UnknownVariable(_) => Rule::UnknownVariable,
                    ExprErrorKind::Syntax(_) => Rule::Shape,
                };
                violations.push(Violation {
                    rule,
                    message: format!("reactions[{j}].rate `{}`: {e}", r.rate),
                });
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    let spec = NetworkSpec {
        states: doc.states,
        reactions,
        params: doc.params,
        constants: doc.constants,
        mu: doc.mu,
        initial: doc.initial,
        horizon: doc.horizon,
    };
    spec.validate()?;
    Ok(spec)
}

/// Writes a spec back to its JSON document form.
pub fn serialize_spec(spec: &NetworkSpec) -> String {
    let doc = SpecDoc {
        states: spec.states.clone(),
        constants: spec.constants.clone(),
        params: spec.params.clone(),
        reactions: spec
            .reactions
            .iter()
            .map(|r| ReactionDoc {
                consumed: r.consumed.clone(),
                produced: r.produced.clone(),
                rate: r.rate.to_string(),
            })
            .collect(),
        mu: spec.mu.clone(),
        initial: spec.initial.clone(),
        horizon: spec.horizon,
    };
    serde_json::to_string_pretty(&doc).expect("spec documents always serialize")
}

fn nonneg_field_errors(what: &str, f: &Field, grid: &LatticeGrid) -> Vec<Violation> {
    let mut out = Vec::new();
    let bad_value = |v: f64| !v.is_finite() || v < 0.0;
    let offending: Vec<f64> = match f {
        Field::Constant { value } => vec![*value],
        Field::Theta { scale } => vec![*scale],
        Field::Sine { amplitude } => vec![*amplitude],
        Field::Table { values } => values.iter().flatten().copied().collect(),
    };
    if offending.iter().any(|v| !v.is_finite()) {
        out.push(Violation {
            rule: Rule::NonFinite,
            message: format!("{what} contains non-finite values"),
        });
    } else if offending.iter().any(|&v| bad_value(v)) || f.sample(grid).iter().any(|&v| v < 0.0) {
        out.push(Violation {
            rule: Rule::NegativeValue,
            message: format!("{what} must be nonnegative on the unit square"),
        });
    }
    out
}

impl NetworkSpec {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    /// Density-form rate `f_j` at a point.
    pub fn eval_rate(&self, j: usize, densities: &[f64], params: &[f64]) -> f64 {
        self.reactions[j].rate.eval(densities, params)
    }

    /// Lattice-scaled migration rate `μ_l K²`.
    pub fn scaled_migration(&self, k: usize, l: usize) -> f64 {
        scaled_migration(self.mu[l], k)
    }

    /// Parameter values at every region, laid out `[region * P + p]`.
    pub fn param_values(&self, grid: &LatticeGrid) -> Vec<f64> {
        let p = self.num_params();
        let mut out = vec![0.0; grid.num_regions() * p];
        for (q, nf) in self.params.iter().enumerate() {
            for (n, v) in nf.field.sample(grid).into_iter().enumerate() {
                out[n * p + q] = v;
            }
        }
        out
    }

    /// Initial densities at every region, laid out `[region * L + l]`; boundary
    /// entries are forced to zero.
    pub fn initial_densities(&self, grid: &LatticeGrid) -> Vec<f64> {
        let l_count = self.num_states();
        let mut out = vec![0.0; grid.num_regions() * l_count];
        for (l, f) in self.initial.iter().enumerate() {
            for r in grid.interior() {
                let (x, y) = grid.coords(r);
                out[grid.index(r) * l_count + l] = f.eval(x, y);
            }
        }
        out
    }

    /// Every rule violation; empty when the network is usable by all solvers.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let l_count = self.num_states();
        let p_count = self.num_params();
        let push = |v: &mut Vec<Violation>, rule, message: String| v.push(Violation { rule, message });

        if l_count == 0 {
            push(&mut v, Rule::Shape, "at least one local state is required".into());
        }
        if self.mu.len() != l_count {
            push(
                &mut v,
                Rule::Shape,
                format!("mu has {} entries, expected {l_count}", self.mu.len()),
            );
        }
        if self.initial.len() != l_count {
            push(
                &mut v,
                Rule::Shape,
                format!("initial has {} entries, expected {l_count}", self.initial.len()),
            );
        }
        for (l, &m) in self.mu.iter().enumerate() {
            if !m.is_finite() {
                push(&mut v, Rule::NonFinite, format!("mu[{l}] = {m} is not finite"));
            } else if m < 0.0 {
                push(&mut v, Rule::NegativeValue, format!("mu[{l}] = {m} must be >= 0"));
            }
        }
        for (name, &c) in &self.constants {
            if !c.is_finite() {
                push(
                    &mut v,
                    Rule::NonFinite,
                    format!("constant `{name}` = {c} is not finite"),
                );
            } else if c < 0.0 {
                push(
                    &mut v,
                    Rule::NegativeValue,
                    format!("rate constant `{name}` = {c} must be >= 0"),
                );
            }
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            push(
                &mut v,
                Rule::Horizon,
                format!("horizon = {} must be positive and finite", self.horizon),
            );
        }

        for (j, r) in self.reactions.iter().enumerate() {
            if r.consumed.len() != l_count || r.produced.len() != l_count {
                push(
                    &mut v,
                    Rule::Shape,
                    format!("reactions[{j}] stoichiometry must have {l_count} entries"),
                );
                continue;
            }
            if let Some(a) = r.rate.max_density_index().filter(|&a| a >= l_count) {
                push(
                    &mut v,
                    Rule::UnknownVariable,
                    format!(
                        "reactions[{j}].rate references a{} but there are {l_count} states",
                        a + 1
                    ),
                );
            }
            if let Some(b) = r.rate.max_param_index().filter(|&b| b >= p_count) {
                push(
                    &mut v,
                    Rule::UnknownVariable,
                    format!(
                        "reactions[{j}].rate references b{} but there are {p_count} params",
                        b + 1
                    ),
                );
            }
            for d in r.rate.unguarded_divisions() {
                push(
                    &mut v,
                    Rule::Division,
                    format!("reactions[{j}].rate divides by `{d}`; use max(eps, ...) with eps > 0"),
                );
            }
            for (l, delta) in r.net_change().into_iter().enumerate() {
                if delta < 0 && r.consumed[l] > 0 && !r.rate.vanishes_when_zero(l) {
                    push(
                        &mut v,
                        Rule::NonnegativityGuard,
                        format!(
                            "reactions[{j}].rate must vanish when a{} = 0 since it consumes that state",
                            l + 1
                        ),
                    );
                }
            }
        }

        let check = LatticeGrid::new(CHECK_K).expect("nonzero");
        for (q, nf) in self.params.iter().enumerate() {
            for e in nf.field.shape_errors() {
                push(&mut v, Rule::Shape, format!("params[{q}] ({}): {e}", nf.name));
            }
            if nf.field.shape_errors().is_empty() {
                v.extend(nonneg_field_errors(
                    &format!("params[{q}] ({})", nf.name),
                    &nf.field,
                    &check,
                ));
            }
        }
        for (l, f) in self.initial.iter().enumerate() {
            let shape = f.shape_errors();
            for e in &shape {
                push(&mut v, Rule::Shape, format!("initial[{l}]: {e}"));
            }
            if !shape.is_empty() {
                continue;
            }
            v.extend(nonneg_field_errors(&format!("initial[{l}]"), f, &check));
            let bad = dirichlet_offenders(f, &check);
            if !bad.is_empty() {
                let shown: Vec<String> = bad
                    .iter()
                    .take(8)
                    .map(|(x, y, val)| format!("({x}, {y}) -> {val}"))
                    .collect();
                push(
                    &mut v,
                    Rule::Dirichlet,
                    format!(
                        "initial[{l}] must be zero on the boundary; {} offending points, e.g. {}",
                        bad.len(),
                        shown.join(", ")
                    ),
                );
            }
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }
}

/// `μ K²`: migration rate on a lattice with spacing `1/K` that keeps the
/// walk's mean-squared displacement per unit time independent of `K`.
pub fn scaled_migration(mu: f64, k: usize) -> f64 {
    mu * (k * k) as f64
}

fn dirichlet_offenders(f: &Field, grid: &LatticeGrid) -> Vec<(f64, f64, f64)> {
    let mut pts: Vec<(f64, f64)> = grid.boundary().map(|r| grid.coords(r)).collect();
    if let Field::Table { values } = f {
        let (nx, ny) = (values.len(), values[0].len());
        for i in 0..nx {
            for j in 0..ny {
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    pts.push((i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64));
                }
            }
        }
    }
    pts.into_iter()
        .filter_map(|(x, y)| {
            let val = f.eval(x, y);
            (val != 0.0).then_some((x, y, val))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Scenario;
    use proptest::prelude::*;

    const ONOFF: &str = r#"{
        "states": ["off", "on"],
        "constants": {"lambda": 0.25, "c": 2.857},
        "reactions": [
            {"consumed": [1, 0], "produced": [0, 1], "rate": "lambda * off"},
            {"consumed": [0, 1], "produced": [1, 0], "rate": "c * min(a2, 1)"}
        ],
        "mu": [0.001, 0],
        "initial": [{"kind": "constant", "value": 0}, {"kind": "theta", "scale": 10}],
        "horizon": 10
    }"#;

    fn rules(err: Error) -> Vec<Rule> {
        match err {
            Error::Validation(v) => v.into_iter().map(|v| v.rule).collect(),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn parses_onoff_document() {
        let spec = parse_spec(ONOFF).unwrap();
        assert_eq!(spec.num_states(), 2);
        assert_eq!(spec.num_reactions(), 2);
        assert_eq!(
            spec.reactions[0].rate,
            RateExpr::mul(RateExpr::Lit(0.25), RateExpr::Density(0))
        );
        assert_eq!(spec.reactions[1].net_change(), vec![1, -1]);
        let f2 = spec.eval_rate(1, &[0.25, 0.75], &[]);
        assert!((f2 - 2.14275).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonzero_boundary_initial_field() {
        let text = ONOFF.replace(
            r#"{"kind": "constant", "value": 0}"#,
            r#"{"kind": "constant", "value": 0.5}"#,
        );
        let err = parse_spec(&text).unwrap_err();
        assert_eq!(rules(err), vec![Rule::Dirichlet]);
    }

    #[test]
    fn rejects_out_of_range_state() {
        let text = ONOFF.replace("c * min(a2, 1)", "c * min(a3, 1) * a2");
        assert_eq!(rules(parse_spec(&text).unwrap_err()), vec![Rule::UnknownVariable]);
        let text = ONOFF.replace("c * min(a2, 1)", "k * a2");
        assert_eq!(rules(parse_spec(&text).unwrap_err()), vec![Rule::UnknownVariable]);
    }

    #[test]
    fn rejects_negative_constants_and_mu() {
        let text = ONOFF.replace(r#""c": 2.857"#, r#""c": -2.857"#);
        assert_eq!(rules(parse_spec(&text).unwrap_err()), vec![Rule::NegativeValue]);
        let text = ONOFF.replace(r#""mu": [0.001, 0]"#, r#""mu": [-0.001, 0]"#);
        let err = parse_spec(&text).unwrap_err();
        assert!(err.to_string().contains("mu[0]"));
    }

    #[test]
    fn rejects_unguarded_rates() {
        let text = ONOFF.replace("lambda * off", "lambda");
        assert_eq!(rules(parse_spec(&text).unwrap_err()), vec![Rule::NonnegativityGuard]);
        let text = ONOFF.replace("lambda * off", "lambda * off / on");
        assert_eq!(rules(parse_spec(&text).unwrap_err()), vec![Rule::Division]);
    }

    #[test]
    fn reports_every_violation() {
        let text = ONOFF
            .replace(r#""mu": [0.001, 0]"#, r#""mu": [-1, 0]"#)
            .replace(r#""horizon": 10"#, r#""horizon": 0"#);
        let r = rules(parse_spec(&text).unwrap_err());
        assert!(r.contains(&Rule::NegativeValue) && r.contains(&Rule::Horizon));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_spec("{\n  \"states\": [\"a\",]\n}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn migration_scaling() {
        assert!((scaled_migration(0.010, 7) - 0.49).abs() < 1e-15);
        assert!((scaled_migration(0.001, 16) - 0.256).abs() < 1e-15);
        assert_eq!(scaled_migration(0.0, 99), 0.0);
    }

    #[test]
    fn initial_densities_are_zero_on_boundary() {
        let spec = Scenario::OnOff.spec();
        for k in [1, 2, 7, 16] {
            let g = LatticeGrid::new(k).unwrap();
            let a = spec.initial_densities(&g);
            for r in g.boundary() {
                for l in 0..2 {
                    assert_eq!(a[g.index(r) * 2 + l], 0.0);
                }
            }
        }
    }

    #[test]
    fn builtins_round_trip() {
        for s in Scenario::ALL {
            let spec = s.spec();
            spec.validate().unwrap();
            assert_eq!(parse_spec(&serialize_spec(&spec)).unwrap(), spec, "{s:?}");
        }
    }

    prop_compose! {
        fn arb_onoff()(lam in 0.0f64..10.0, c in 0.0f64..10.0, mu1 in 0.0f64..1.0,
                       v in 0.0f64..100.0, horizon in 0.1f64..50.0) -> NetworkSpec {
            let mut spec = Scenario::OnOff.spec();
            spec.constants.insert("lambda".into(), lam);
            spec.constants.insert("c".into(), c);
            spec.reactions[0].rate = RateExpr::mul(RateExpr::Lit(lam), RateExpr::Density(0));
            spec.reactions[1].rate = RateExpr::mul(RateExpr::Lit(c), RateExpr::min(RateExpr::Density(1), RateExpr::Lit(1.0)));
            spec.mu[0] = mu1;
            spec.initial[1] = Field::theta(v);
            spec.horizon = horizon;
            spec
        }
    }

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(spec in arb_onoff()) {
            let back = parse_spec(&serialize_spec(&spec)).unwrap();
            prop_assert_eq!(back, spec);
        }
    }
}
