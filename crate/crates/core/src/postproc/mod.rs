//! Post-processing over rule tables: selection predicates, maximal bodies
//! and cross-over between grouped data and rules.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hierarchy::{Coverage, Encoder, Label};
use crate::miner::{Basis, DescValue, Descriptor, DescriptorSet, Rule, SupportSemantics};
use crate::relstore::{CmpOp, GroupedTable, Row, Schema, Table, Value};
use crate::rulestore::{Provenance, RuleTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Body,
    Head,
}

/// `attribute=value`, or `attribute=*` when `value` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct DescPattern {
    pub attribute: String,
    pub value: Option<Value>,
}

impl DescPattern {
    pub fn new(attribute: &str, value: Option<Value>) -> Self {
        DescPattern {
            attribute: attribute.to_ascii_lowercase(),
            value,
        }
    }

    /// Raw values compare by SQL equality; concepts match their code, their
    /// name or their interval text.
    pub fn matches(&self, d: &Descriptor) -> bool {
        if d.attribute != self.attribute {
            return false;
        }
        let Some(want) = &self.value else {
            return true;
        };
        match &d.value {
            DescValue::Raw(v) => v.compare(want) == Some(Ordering::Equal),
            DescValue::Concept(c) => {
                let by_label = match (&c.label, want) {
                    (Label::Code(k), w) => Value::Integer(*k).compare(w) == Some(Ordering::Equal),
                    (Label::Name(n), Value::Text(w)) => n.eq_ignore_ascii_case(w),
                    (Label::Any, Value::Text(w)) => w.eq_ignore_ascii_case("any"),
                    _ => false,
                };
                let by_interval = match (&c.coverage, want) {
                    (Some(Coverage::Interval(i)), Value::Text(w)) => {
                        let w = w.replace(' ', "");
                        w == i.dotted() || w == i.comma()
                    }
                    _ => false,
                };
                by_label || by_interval
            }
        }
    }
}

/// Alternatives of conjunctions: `{(A=1) OR (B=1)}` is two alternatives of
/// one pattern each, `{(A=1),(B=1)}` one alternative of two.
#[derive(Debug, Clone, PartialEq)]
pub struct SetLiteral(pub Vec<Vec<DescPattern>>);

impl SetLiteral {
    pub fn single(p: DescPattern) -> Self {
        SetLiteral(vec![vec![p]])
    }

    fn contained_in(&self, set: &DescriptorSet) -> bool {
        self.0
            .iter()
            .any(|alt| alt.iter().all(|p| set.iter().any(|d| p.matches(d))))
    }

    fn equals(&self, set: &DescriptorSet) -> bool {
        self.0.iter().any(|alt| {
            alt.len() == set.len()
                && alt.iter().all(|p| set.iter().any(|d| p.matches(d)))
                && set.iter().all(|d| alt.iter().any(|p| p.matches(d)))
        })
    }
}

/// A rule component, optionally of a named (correlated) rule.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentRef {
    pub component: Component,
    pub alias: Option<String>,
}

impl ComponentRef {
    pub fn body(alias: Option<&str>) -> Self {
        ComponentRef {
            component: Component::Body,
            alias: alias.map(str::to_ascii_lowercase),
        }
    }

    pub fn head(alias: Option<&str>) -> Self {
        ComponentRef {
            component: Component::Head,
            alias: alias.map(str::to_ascii_lowercase),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetExpr {
    Component(ComponentRef),
    Literal(SetLiteral),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricRef {
    /// Support as the rule table displays it.
    Support,
    SupportAs(SupportSemantics, Basis),
    Confidence,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RulePredicate {
    True,
    /// `set ⊇ of`.
    Has { set: ComponentRef, of: SetExpr },
    /// `set = of`.
    Is { set: ComponentRef, of: SetExpr },
    Metric {
        metric: MetricRef,
        alias: Option<String>,
        op: CmpOp,
        value: f64,
    },
    And(Box<RulePredicate>, Box<RulePredicate>),
    Or(Box<RulePredicate>, Box<RulePredicate>),
    Not(Box<RulePredicate>),
    /// `[NOT] EXISTS (rules [AS alias] WHERE predicate)`.
    Exists {
        negated: bool,
        rules: RuleTable,
        alias: Option<String>,
        predicate: Box<RulePredicate>,
    },
}

impl RulePredicate {
    pub fn and(self, other: RulePredicate) -> RulePredicate {
        RulePredicate::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: RulePredicate) -> RulePredicate {
        RulePredicate::Or(Box::new(self), Box::new(other))
    }

    pub fn negate(self) -> RulePredicate {
        RulePredicate::Not(Box::new(self))
    }

    /// Checks that every alias names an enclosing rule.
    fn check(&self, scopes: &mut Vec<Option<String>>) -> Result<()> {
        let resolve = |alias: &Option<String>, scopes: &[Option<String>]| match alias {
            None => Ok(()),
            Some(a) if scopes.iter().any(|s| s.as_deref() == Some(a)) => Ok(()),
            Some(a) => Err(Error::plan(format!("unresolvable rule reference `{a}`"))),
        };
        match self {
            RulePredicate::True => Ok(()),
            RulePredicate::Has { set, of } | RulePredicate::Is { set, of } => {
                resolve(&set.alias, scopes)?;
                if let SetExpr::Component(c) = of {
                    resolve(&c.alias, scopes)?;
                }
                Ok(())
            }
            RulePredicate::Metric { alias, .. } => resolve(alias, scopes),
            RulePredicate::And(a, b) | RulePredicate::Or(a, b) => {
                a.check(scopes)?;
                b.check(scopes)
            }
            RulePredicate::Not(a) => a.check(scopes),
            RulePredicate::Exists {
                alias, predicate, ..
            } => {
                scopes.push(alias.clone());
                let r = predicate.check(scopes);
                scopes.pop();
                r
            }
        }
    }

    fn eval<'a>(&'a self, env: &mut Vec<Frame<'a>>) -> bool {
        match self {
            RulePredicate::True => true,
            RulePredicate::Has { set, of } => {
                let s = component(env, set);
                match of {
                    SetExpr::Component(c) => component(env, c).is_subset(s),
                    SetExpr::Literal(l) => l.contained_in(s),
                }
            }
            RulePredicate::Is { set, of } => {
                let s = component(env, set);
                match of {
                    SetExpr::Component(c) => component(env, c) == s,
                    SetExpr::Literal(l) => l.equals(s),
                }
            }
            RulePredicate::Metric {
                metric,
                alias,
                op,
                value,
            } => {
                let f = frame(env, alias);
                let measured = match metric {
                    MetricRef::Support => f.rule.support(f.provenance.semantics, f.provenance.basis),
                    MetricRef::SupportAs(s, b) => f.rule.support(*s, *b),
                    MetricRef::Confidence => f.rule.confidence(),
                };
                measured
                    .partial_cmp(value)
                    .is_some_and(|o| op.test(o))
            }
            RulePredicate::And(a, b) => a.eval(env) && b.eval(env),
            RulePredicate::Or(a, b) => a.eval(env) || b.eval(env),
            RulePredicate::Not(a) => !a.eval(env),
            RulePredicate::Exists {
                negated,
                rules,
                alias,
                predicate,
            } => {
                let found = rules.rules().iter().any(|r| {
                    env.push(Frame {
                        alias: alias.clone(),
                        rule: r,
                        provenance: &rules.provenance,
                    });
                    let hit = predicate.eval(env);
                    env.pop();
                    hit
                });
                found != *negated
            }
        }
    }
}

struct Frame<'a> {
    alias: Option<String>,
    rule: &'a Rule,
    provenance: &'a Provenance,
}

fn frame<'e, 'a>(env: &'e [Frame<'a>], alias: &Option<String>) -> &'e Frame<'a> {
    match alias {
        None => env.last().expect("predicate evaluated inside a rule scope"),
        Some(a) => env
            .iter()
            .rev()
            .find(|f| f.alias.as_deref() == Some(a))
            .expect("aliases checked before evaluation"),
    }
}

fn component<'e>(env: &'e [Frame<'_>], c: &ComponentRef) -> &'e DescriptorSet {
    let f = frame(env, &c.alias);
    match c.component {
        Component::Body => &f.rule.body,
        Component::Head => &f.rule.head,
    }
}

/// Rules of `rt` satisfying `p`, in their original order, as a new rule
/// table called `name`. `alias` names the outer rule for correlated
/// subqueries.
pub fn select_rules(rt: &RuleTable, alias: Option<&str>, p: &RulePredicate, name: &str) -> Result<RuleTable> {
    let alias = alias.map(str::to_ascii_lowercase);
    p.check(&mut vec![alias.clone()])?;
    let kept = rt
        .rules()
        .iter()
        .filter(|r| {
            let mut env = vec![Frame {
                alias: alias.clone(),
                rule: r,
                provenance: &rt.provenance,
            }];
            p.eval(&mut env)
        })
        .cloned()
        .collect();
    Ok(rt.derive(name, kept))
}

/// The nested predicate selecting maximal bodies: no rule `r2` of `rules`
/// has the same head and a strictly larger body than the outer rule `r1`.
pub fn maximality_predicate(rules: &RuleTable) -> RulePredicate {
    let inner = RulePredicate::Has {
        set: ComponentRef::body(Some("r2")),
        of: SetExpr::Component(ComponentRef::body(Some("r1"))),
    }
    .and(
        RulePredicate::Is {
            set: ComponentRef::body(Some("r2")),
            of: SetExpr::Component(ComponentRef::body(Some("r1"))),
        }
        .negate(),
    )
    .and(RulePredicate::Is {
        set: ComponentRef::head(Some("r2")),
        of: SetExpr::Component(ComponentRef::head(Some("r1"))),
    });
    RulePredicate::Exists {
        negated: true,
        rules: rules.clone(),
        alias: Some("r2".into()),
        predicate: Box::new(inner),
    }
}

/// Rules whose body is not a proper subset of another body with the same
/// head.
pub fn maximal_rules(rt: &RuleTable) -> RuleTable {
    let rules = rt.rules();
    let kept = rules
        .iter()
        .filter(|r| {
            !rules.iter().any(|o| {
                o.head == r.head && o.body.len() > r.body.len() && r.body.is_subset(&o.body)
            })
        })
        .cloned()
        .collect();
    rt.derive(&rt.name, kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossOp {
    Satisfies,
    Violates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    All,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ViolationSemantics {
    /// A group violates a rule it does not satisfy.
    #[default]
    NonSatisfaction,
    /// A group violates a rule when it holds the body but not the head.
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrossOverMode {
    pub op: CrossOp,
    pub quantifier: Quantifier,
    pub violation: ViolationSemantics,
}

impl CrossOverMode {
    pub fn new(op: CrossOp, quantifier: Quantifier) -> Self {
        CrossOverMode {
            op,
            quantifier,
            violation: ViolationSemantics::NonSatisfaction,
        }
    }
}

/// Whether every descriptor is matched by some row, encoding bound
/// attributes first.
pub fn match_descriptors(
    rows: &[Row],
    schema: &Schema,
    set: &DescriptorSet,
    bindings: &BTreeMap<String, Encoder>,
) -> Result<bool> {
    for d in set.iter() {
        let col = schema.require(&d.attribute)?;
        let mut hit = false;
        for r in rows {
            let v = &r[col];
            if v.is_null() {
                continue;
            }
            let got = match bindings.get(&d.attribute) {
                Some(enc) => DescValue::Concept(enc.encode(v)?),
                None => DescValue::Raw(v.clone()),
            };
            if got == d.value {
                hit = true;
                break;
            }
        }
        if !hit {
            return Ok(false);
        }
    }
    Ok(true)
}

fn satisfies(rows: &[Row], schema: &Schema, r: &Rule, b: &BTreeMap<String, Encoder>) -> Result<bool> {
    Ok(match_descriptors(rows, schema, &r.body, b)? && match_descriptors(rows, schema, &r.head, b)?)
}

fn violates(
    rows: &[Row],
    schema: &Schema,
    r: &Rule,
    b: &BTreeMap<String, Encoder>,
    semantics: ViolationSemantics,
) -> Result<bool> {
    Ok(match semantics {
        ViolationSemantics::NonSatisfaction => !satisfies(rows, schema, r, b)?,
        ViolationSemantics::Strict => {
            match_descriptors(rows, schema, &r.body, b)? && !match_descriptors(rows, schema, &r.head, b)?
        }
    })
}

/// Whether one group passes the quantified cross-over test.
pub fn group_passes(rows: &[Row], schema: &Schema, rules: &RuleTable, mode: CrossOverMode) -> Result<bool> {
    let b = &rules.provenance.bindings;
    let test = |r: &Rule| match mode.op {
        CrossOp::Satisfies => satisfies(rows, schema, r, b),
        CrossOp::Violates => violates(rows, schema, r, b, mode.violation),
    };
    match mode.quantifier {
        Quantifier::All => {
            for r in rules.rules() {
                if !test(r)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Quantifier::Any => {
            for r in rules.rules() {
                if test(r)? {
                    return Ok(true);
                }
            }
            Ok(false)
        }
    }
}

/// Keys of the groups passing the test, sorted. ALL over an empty rule
/// set is vacuously true.
pub fn crossover(data: &GroupedTable, rules: &RuleTable, mode: CrossOverMode) -> Result<Table> {
    let keys = data.key_table()?;
    let mut rows = Vec::new();
    for (key, group) in data.iter() {
        if group_passes(group, data.schema(), rules, mode)? {
            rows.push(key.clone());
        }
    }
    rows.sort();
    rows.dedup();
    Table::new(keys.schema().clone(), rows)
}
