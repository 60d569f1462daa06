use super::{Provenance, RuleStyle};
use crate::hierarchy::{Concept, Coverage, Label};
use crate::miner::{DescValue, Descriptor, DescriptorSet, Rule, SupportSemantics};
use crate::relstore::Value;

/// Up to three decimals, trailing zeros trimmed, at least one decimal:
/// `0.75`, `0.667`, `1.0`.
pub fn format_ratio(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0');
    if s.ends_with('.') {
        format!("{s}0")
    } else {
        s.to_string()
    }
}

/// Percent with at most one decimal: `75%`, `66.7%`, `37.5%`.
pub fn format_percent(x: f64) -> String {
    let s = format!("{:.1}", x * 100.0);
    format!("{}%", s.strip_suffix(".0").unwrap_or(&s))
}

fn quoted(v: &Value) -> String {
    match v {
        Value::Text(s) => format!("'{}'", s.replace('\'', "''")),
        other => other.to_string(),
    }
}

fn concept_label(c: &Concept) -> String {
    match &c.label {
        Label::Name(n) => format!("'{}'", n.replace('\'', "''")),
        l => l.to_string(),
    }
}

fn attr_name<'a>(d: &'a Descriptor, p: &'a Provenance) -> &'a str {
    p.aliases.get(&d.attribute).map_or(&d.attribute, |a| a.as_str())
}

fn msql(d: &Descriptor, p: &Provenance) -> String {
    match &d.value {
        DescValue::Raw(v) if p.pivoted.contains(&d.attribute) => format!("{v}=1"),
        DescValue::Raw(v) => format!("{}={v}", d.attribute),
        DescValue::Concept(c) => match &c.coverage {
            Some(Coverage::Interval(i)) => format!("{}={}", d.attribute, i.comma()),
            _ => format!("{}={}", d.attribute, c.label),
        },
    }
}

fn minesql(d: &Descriptor, p: &Provenance) -> String {
    let value = match &d.value {
        DescValue::Raw(v) => quoted(v),
        DescValue::Concept(c) => concept_label(c),
    };
    format!("{}={value}", attr_name(d, p))
}

fn dmql(d: &Descriptor) -> String {
    let value = match &d.value {
        DescValue::Raw(v) => quoted(v),
        DescValue::Concept(c) => c.canonical(),
    };
    format!("{}(X,{value})", d.attribute)
}

fn minerule(set: &DescriptorSet, schema: &[String], p: &Provenance) -> String {
    let single = schema.len() == 1 && set.iter().all(|d| d.attribute == schema[0]);
    let aliased = single && p.aliases.contains_key(&schema[0]);
    let value = |d: &Descriptor| match &d.value {
        DescValue::Raw(v) => v.to_string(),
        DescValue::Concept(c) => c.label.to_string(),
    };
    if aliased {
        let parts: Vec<String> = set
            .iter()
            .map(|d| format!("{}={}", attr_name(d, p), value(d)))
            .collect();
        parts.join(" & ")
    } else if single {
        let parts: Vec<String> = set.iter().map(value).collect();
        format!("{{{}}}", parts.join(","))
    } else {
        let parts: Vec<String> = set.iter().map(|d| d.to_string()).collect();
        format!("{{{}}}", parts.join(","))
    }
}

fn join(set: &DescriptorSet, f: impl Fn(&Descriptor) -> String) -> String {
    let parts: Vec<String> = set.iter().map(f).collect();
    parts.join(" & ")
}

/// Body and head text without arrow or metrics.
pub(crate) fn sides(r: &Rule, style: RuleStyle, p: &Provenance) -> (String, String) {
    match style {
        RuleStyle::Msql => (join(&r.body, |d| msql(d, p)), join(&r.head, |d| msql(d, p))),
        RuleStyle::MineSql => (join(&r.body, |d| minesql(d, p)), join(&r.head, |d| minesql(d, p))),
        RuleStyle::Dmql => (join(&r.body, dmql), join(&r.head, dmql)),
        RuleStyle::MineRule => (
            minerule(&r.body, &p.body_attributes, p),
            minerule(&r.head, &p.head_attributes, p),
        ),
        RuleStyle::Canonical => (r.body.to_string(), r.head.to_string()),
    }
}

/// One-line rendering of a rule in a dialect's conventions.
pub fn render_rule(r: &Rule, style: RuleStyle, p: &Provenance) -> String {
    let (body, head) = sides(r, style, p);
    let support = r.support(p.semantics, p.basis);
    let support = match p.basis {
        crate::miner::Basis::Absolute => format!("{}", support as i64),
        crate::miner::Basis::Relative => format_ratio(support),
    };
    match style {
        RuleStyle::Msql => format!(
            "{body} → {head} (supp {support}, conf {})",
            format_ratio(r.confidence())
        ),
        RuleStyle::MineSql => format!("{body}→{head}"),
        RuleStyle::Dmql => format!(
            "{body} → {head} [support {}, confidence {}]",
            match p.basis {
                crate::miner::Basis::Absolute => support,
                crate::miner::Basis::Relative => format_percent(r.support(p.semantics, p.basis)),
            },
            format_percent(r.confidence())
        ),
        RuleStyle::MineRule => format!(
            "{body} → {head} (support {support}, confidence {})",
            format_ratio(r.confidence())
        ),
        RuleStyle::Canonical => format!(
            "{body} → {head} ({} support {support}, confidence {})",
            match p.semantics {
                SupportSemantics::Body => "body",
                SupportSemantics::Rule => "rule",
            },
            format_ratio(r.confidence())
        ),
    }
}
