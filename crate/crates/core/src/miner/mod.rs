//! Constraint-driven association rule mining.
//!
//! Groups of rows are turned into transactions of [`Descriptor`]s
//! (attribute/value atoms, with hierarchy-bound attributes encoded on the
//! fly). Bodies are enumerated level-wise Apriori style, then heads are
//! grown inside each frequent body's tidset. [`brute_force_mine`] is an
//! exhaustive reference used by the tests.

mod apriori;
mod bits;
mod extract;
mod oracle;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::hierarchy::{Concept, Encoder};
use crate::relstore::{Expr, GroupedTable, Value};

pub use apriori::{enumerate_frequent, mine_associations, mine_clustered};
pub use oracle::{brute_force_mine, ORACLE_MAX_DESCRIPTORS};

/// The value side of a descriptor: a raw cell or an encoded concept.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DescValue {
    Raw(Value),
    Concept(Concept),
}

impl fmt::Display for DescValue {
    /// Canonical spelling: raw values as-is, concepts by covered interval.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DescValue::Raw(v) => write!(f, "{v}"),
            DescValue::Concept(c) => f.write_str(&c.canonical()),
        }
    }
}

/// An `attribute = value` atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Descriptor {
    pub attribute: String,
    pub value: DescValue,
}

impl Descriptor {
    pub fn new(attribute: &str, value: DescValue) -> Result<Self> {
        if attribute.is_empty() {
            return Err(Error::plan("descriptor attribute must be non-empty"));
        }
        if matches!(value, DescValue::Raw(Value::Null)) {
            return Err(Error::plan("descriptor value must be non-null"));
        }
        Ok(Descriptor {
            attribute: attribute.to_ascii_lowercase(),
            value,
        })
    }

    /// Shorthand for a raw-valued descriptor; panics on a null value.
    pub fn raw(attribute: &str, value: impl Into<Value>) -> Self {
        Descriptor::new(attribute, DescValue::Raw(value.into())).expect("non-null descriptor")
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.value)
    }
}

/// Sorted, duplicate-free set of descriptors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DescriptorSet(Vec<Descriptor>);

impl DescriptorSet {
    pub fn new(mut items: Vec<Descriptor>) -> Self {
        items.sort();
        items.dedup();
        DescriptorSet(items)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Descriptor> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, d: &Descriptor) -> bool {
        self.0.binary_search(d).is_ok()
    }

    pub fn is_subset(&self, other: &DescriptorSet) -> bool {
        self.0.iter().all(|d| other.contains(d))
    }

    pub fn is_disjoint(&self, other: &DescriptorSet) -> bool {
        !self.0.iter().any(|d| other.contains(d))
    }

    pub fn as_slice(&self) -> &[Descriptor] {
        &self.0
    }
}

impl FromIterator<Descriptor> for DescriptorSet {
    fn from_iter<I: IntoIterator<Item = Descriptor>>(iter: I) -> Self {
        DescriptorSet::new(iter.into_iter().collect())
    }
}

impl fmt::Display for DescriptorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join(" & "))
    }
}

/// Attributes a rule component draws from, with its size bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ComponentSchema {
    pub attributes: Vec<String>,
    pub min: usize,
    /// `None` is unbounded (`N`).
    pub max: Option<usize>,
}

impl ComponentSchema {
    pub fn new(attributes: &[&str], min: usize, max: Option<usize>) -> Result<Self> {
        let s = ComponentSchema {
            attributes: attributes.iter().map(|a| a.to_ascii_lowercase()).collect(),
            min,
            max,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes.is_empty() {
            return Err(Error::plan("rule component needs at least one attribute"));
        }
        if self.min < 1 || self.max.is_some_and(|m| m < self.min) {
            return Err(Error::plan(format!(
                "invalid cardinality {}..{}",
                self.min,
                self.max.map_or("N".to_string(), |m| m.to_string())
            )));
        }
        Ok(())
    }

    pub fn admits(&self, size: usize) -> bool {
        size >= self.min && self.max.is_none_or(|m| size <= m)
    }

    pub fn cardinality_text(&self) -> String {
        format!(
            "{}..{}",
            self.min,
            self.max.map_or("N".to_string(), |m| m.to_string())
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Greater,
    GreaterOrEqual,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Greater => ">",
            Comparator::GreaterOrEqual => ">=",
        }
    }
}

/// A lower bound on support or confidence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub value: f64,
    pub basis: Basis,
    pub comparator: Comparator,
}

impl Threshold {
    pub fn new(value: f64, basis: Basis, comparator: Comparator) -> Self {
        Threshold {
            value,
            basis,
            comparator,
        }
    }

    /// Relative, `>=`.
    pub fn at_least(value: f64) -> Self {
        Threshold::new(value, Basis::Relative, Comparator::GreaterOrEqual)
    }

    fn check(&self, what: &str) -> Result<()> {
        if !self.value.is_finite() || self.value < 0.0 {
            return Err(Error::plan(format!("{what} threshold must be non-negative")));
        }
        if self.basis == Basis::Relative && self.value > 1.0 {
            return Err(Error::plan(format!(
                "relative {what} threshold {} exceeds 1",
                self.value
            )));
        }
        Ok(())
    }

    fn accepts(&self, measured: f64) -> bool {
        match self.comparator {
            Comparator::Greater => measured > self.value,
            Comparator::GreaterOrEqual => measured >= self.value,
        }
    }

    /// Support test for `count` of `total` groups.
    pub fn passes_count(&self, count: usize, total: usize) -> bool {
        match self.basis {
            Basis::Absolute => self.accepts(count as f64),
            Basis::Relative if total == 0 => false,
            Basis::Relative => self.accepts(count as f64 / total as f64),
        }
    }

    /// Confidence test for `rule_count / body_count`.
    pub fn passes_ratio(&self, num: usize, den: usize) -> bool {
        den > 0 && self.accepts(num as f64 / den as f64)
    }

    /// Smallest `k` in `1..=upper` with `pass(k)`, assuming `pass` is
    /// monotone in `k`.
    pub(crate) fn least(upper: usize, pass: impl Fn(usize) -> bool) -> Option<usize> {
        if upper == 0 || !pass(upper) {
            return None;
        }
        let (mut lo, mut hi) = (1, upper);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if pass(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(lo)
    }
}

/// Which group count the support threshold is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SupportSemantics {
    /// Groups containing the body.
    Body,
    /// Groups containing body and head.
    Rule,
}

/// Everything needed to run one mining task.
#[derive(Debug, Clone, PartialEq)]
pub struct MinePlan {
    pub source: GroupedTable,
    pub body: ComponentSchema,
    pub head: ComponentSchema,
    pub support: Option<Threshold>,
    pub confidence: Option<Threshold>,
    pub semantics: SupportSemantics,
    pub bindings: BTreeMap<String, Encoder>,
    pub cluster_keys: Option<Vec<String>>,
    pub group_filter: Option<Expr>,
    pub cluster_filter: Option<Expr>,
    /// Row condition for rows contributing body descriptors.
    pub body_filter: Option<Expr>,
    /// Row condition for rows contributing head descriptors.
    pub head_filter: Option<Expr>,
}

impl MinePlan {
    pub fn new(source: GroupedTable, body: ComponentSchema, head: ComponentSchema) -> Self {
        MinePlan {
            source,
            body,
            head,
            support: None,
            confidence: None,
            semantics: SupportSemantics::Rule,
            bindings: BTreeMap::new(),
            cluster_keys: None,
            group_filter: None,
            cluster_filter: None,
            body_filter: None,
            head_filter: None,
        }
    }

    pub fn with_support(mut self, t: Threshold, semantics: SupportSemantics) -> Self {
        self.support = Some(t);
        self.semantics = semantics;
        self
    }

    pub fn with_confidence(mut self, t: Threshold) -> Self {
        self.confidence = Some(t);
        self
    }

    pub fn bind(mut self, attribute: &str, encoder: Encoder) -> Self {
        self.bindings.insert(attribute.to_ascii_lowercase(), encoder);
        self
    }

    pub fn clustered_by(mut self, keys: &[&str]) -> Self {
        self.cluster_keys = Some(keys.iter().map(|k| k.to_ascii_lowercase()).collect());
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.body.validate()?;
        self.head.validate()?;
        let schema = self.source.schema();
        for a in self.body.attributes.iter().chain(&self.head.attributes) {
            schema.require(a)?;
        }
        for a in self.bindings.keys() {
            schema.require(a)?;
        }
        if let Some(t) = &self.support {
            t.check("support")?;
        }
        if let Some(t) = &self.confidence {
            t.check("confidence")?;
            if t.basis == Basis::Absolute {
                return Err(Error::plan("confidence threshold must be relative"));
            }
        }
        if let Some(keys) = &self.cluster_keys {
            if keys.is_empty() {
                return Err(Error::plan("CLUSTER BY needs at least one attribute"));
            }
            let group_keys = self.source.key_names();
            for k in keys {
                schema.require(k)?;
                if group_keys.iter().any(|g| g == k) {
                    return Err(Error::plan(format!(
                        "cluster key `{k}` is also a grouping key"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Minimum body count any emitted rule's body can have.
    pub(crate) fn min_body_count(&self, groups: usize) -> Option<usize> {
        match &self.support {
            Some(t) => Threshold::least(groups, |k| t.passes_count(k, groups)),
            None => (groups > 0).then_some(1),
        }
    }

    /// Minimum rule count for a body seen in `body_count` of `groups`.
    pub(crate) fn min_rule_count(&self, body_count: usize, groups: usize) -> Option<usize> {
        Threshold::least(body_count, |k| self.accepts(k, body_count, groups))
    }

    /// Full threshold test for a candidate rule.
    pub fn accepts(&self, rule_count: usize, body_count: usize, groups: usize) -> bool {
        if rule_count == 0 || rule_count > body_count {
            return false;
        }
        let supported = self.support.as_ref().is_none_or(|t| match self.semantics {
            SupportSemantics::Body => t.passes_count(body_count, groups),
            SupportSemantics::Rule => t.passes_count(rule_count, groups),
        });
        let confident = self
            .confidence
            .as_ref()
            .is_none_or(|t| t.passes_ratio(rule_count, body_count));
        supported && confident
    }
}

/// A mined association rule with the raw counts behind its metrics.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub body: DescriptorSet,
    pub head: DescriptorSet,
    pub group_count: usize,
    pub body_count: usize,
    pub rule_count: usize,
}

impl Rule {
    pub fn confidence(&self) -> f64 {
        if self.body_count == 0 {
            0.0
        } else {
            self.rule_count as f64 / self.body_count as f64
        }
    }

    /// Support under the given semantics and basis.
    pub fn support(&self, semantics: SupportSemantics, basis: Basis) -> f64 {
        let count = match semantics {
            SupportSemantics::Body => self.body_count,
            SupportSemantics::Rule => self.rule_count,
        } as f64;
        match basis {
            Basis::Absolute => count,
            Basis::Relative if self.group_count == 0 => 0.0,
            Basis::Relative => count / self.group_count as f64,
        }
    }

    /// Sort key of mined output: body size, body, head.
    pub(crate) fn order_key(&self) -> (usize, &DescriptorSet, &DescriptorSet) {
        (self.body.len(), &self.body, &self.head)
    }
}

pub(crate) fn sort_rules(rules: &mut [Rule]) {
    rules.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {} [body {}, rule {}, groups {}]",
            self.body, self.head, self.body_count, self.rule_count, self.group_count
        )
    }
}

#[cfg(test)]
mod tests;
