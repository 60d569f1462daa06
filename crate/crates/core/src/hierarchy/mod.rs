//! Background knowledge: value encodings, concept hierarchies and
//! taxonomies, all normalized to one [`ConceptHierarchy`] tree and applied
//! while counting (never materialized into tables).

mod text;

use std::collections::BTreeSet;
use std::fmt;

use ordered_float::OrderedFloat;

use crate::error::{Error, Result};
use crate::relstore::{format_real, Value};

pub use text::{export_text, import_text};

/// Name of a hierarchy node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Any,
    Code(i64),
    Name(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Any => f.write_str("ANY"),
            Label::Code(c) => write!(f, "{c}"),
            Label::Name(n) => f.write_str(n),
        }
    }
}

/// A numeric bound; `None` on the low side is MIN, on the high side MAX.
pub type Bound = Option<OrderedFloat<f64>>;

/// Closed numeric interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl Interval {
    pub fn new(lo: Option<f64>, hi: Option<f64>) -> Result<Self> {
        for b in [lo, hi].into_iter().flatten() {
            if !b.is_finite() {
                return Err(Error::Definition(format!("non-finite interval bound {b}")));
            }
        }
        if let (Some(l), Some(h)) = (lo, hi) {
            if l > h {
                return Err(Error::Definition(format!(
                    "interval lower bound {} exceeds upper bound {}",
                    fmt_bound(Some(l), "MIN"),
                    fmt_bound(Some(h), "MAX")
                )));
            }
        }
        Ok(Interval {
            lo: lo.map(OrderedFloat),
            hi: hi.map(OrderedFloat),
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo.is_none_or(|l| x >= l.0) && self.hi.is_none_or(|h| x <= h.0)
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        let lo = match (self.lo, other.lo) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        match (lo, hi) {
            (Some(l), Some(h)) => l <= h,
            _ => true,
        }
    }

    pub fn lo_text(&self) -> String {
        fmt_bound(self.lo.map(|b| b.0), "MIN")
    }

    pub fn hi_text(&self) -> String {
        fmt_bound(self.hi.map(|b| b.0), "MAX")
    }

    /// `[lo..hi]`, the canonical concept spelling.
    pub fn dotted(&self) -> String {
        format!("[{}..{}]", self.lo_text(), self.hi_text())
    }

    /// `[lo,hi]`.
    pub fn comma(&self) -> String {
        format!("[{},{}]", self.lo_text(), self.hi_text())
    }
}

fn fmt_bound(b: Option<f64>, sentinel: &str) -> String {
    match b {
        None => sentinel.to_string(),
        Some(x) if x.fract() == 0.0 && x.abs() < 1e15 => format!("{}", x as i64),
        Some(x) => format_real(x),
    }
}

/// Set of raw values a leaf stands for.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coverage {
    Interval(Interval),
    Values(BTreeSet<Value>),
}

impl Coverage {
    pub fn covers(&self, v: &Value) -> bool {
        match self {
            Coverage::Interval(i) => v.as_f64().is_some_and(|x| i.contains(x)),
            Coverage::Values(set) => set.iter().any(|m| {
                m.compare(v) == Some(std::cmp::Ordering::Equal)
            }),
        }
    }

    pub fn overlaps(&self, other: &Coverage) -> bool {
        match (self, other) {
            (Coverage::Interval(a), Coverage::Interval(b)) => a.overlaps(b),
            (Coverage::Values(a), b) | (b, Coverage::Values(a)) => a.iter().any(|v| b.covers(v)),
        }
    }
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coverage::Interval(i) => f.write_str(&i.dotted()),
            Coverage::Values(vs) => {
                let parts: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "{{{}}}", parts.join(","))
            }
        }
    }
}

/// The result of encoding a value: a node label plus the raw values it covers
/// (absent for the root and for default codes).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Concept {
    pub label: Label,
    pub coverage: Option<Coverage>,
}

impl Concept {
    pub fn any() -> Self {
        Concept {
            label: Label::Any,
            coverage: None,
        }
    }

    /// Dialect-neutral spelling: the covered interval when there is one,
    /// otherwise the label.
    pub fn canonical(&self) -> String {
        match &self.coverage {
            Some(Coverage::Interval(i)) => i.dotted(),
            _ => self.label.to_string(),
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)
    }
}

/// Surface form a hierarchy was defined with; only affects pretty printing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HierarchyKind {
    Encoding,
    Hierarchy,
    Taxonomy,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub level: usize,
    pub label: Label,
    /// Literal coverage; `None` for the root and for internal nodes.
    pub coverage: Option<Coverage>,
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConceptHierarchy {
    name: String,
    attribute: String,
    kind: HierarchyKind,
    nodes: Vec<Node>,
    default_code: Option<i64>,
}

/// A member on the left side of a level definition.
#[derive(Debug, Clone, PartialEq)]
pub enum Member {
    Value(Value),
    Range(Option<f64>, Option<f64>),
}

impl Member {
    pub fn label(&self) -> Label {
        match self {
            Member::Value(Value::Integer(i)) => Label::Code(*i),
            Member::Value(v) => Label::Name(v.to_string()),
            Member::Range(lo, hi) => Label::Name(format!(
                "[{}..{}]",
                fmt_bound(*lo, "MIN"),
                fmt_bound(*hi, "MAX")
            )),
        }
    }

    fn coverage(&self) -> Result<Coverage> {
        Ok(match self {
            Member::Value(v) => Coverage::Values(BTreeSet::from([v.clone()])),
            Member::Range(lo, hi) => Coverage::Interval(Interval::new(*lo, *hi)?),
        })
    }
}

/// One line of a level definition: `members` at `level` are children of
/// `parent` (a label at `level - 1`, or `None` for the root).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDef {
    pub level: usize,
    pub members: Vec<Member>,
    pub parent_level: usize,
    pub parent: Option<Label>,
}

/// A leaf declared with an explicit label, as taxonomies and encodings do.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledLeaf {
    pub label: Label,
    pub coverage: Coverage,
}

impl ConceptHierarchy {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn kind(&self) -> HierarchyKind {
        self.kind
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn default_code(&self) -> Option<i64> {
        self.default_code
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0) + 1
    }

    pub fn leaves(&self) -> impl Iterator<Item = (usize, &Node)> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.coverage.is_some())
    }

    fn is_leaf(&self, idx: usize) -> bool {
        self.nodes[idx].coverage.is_some()
    }

    /// Assembles and validates a hierarchy from nodes (root first).
    fn build(
        name: &str,
        attribute: &str,
        kind: HierarchyKind,
        nodes: Vec<Node>,
        default_code: Option<i64>,
    ) -> Result<Self> {
        let h = ConceptHierarchy {
            name: name.to_ascii_lowercase(),
            attribute: attribute.to_ascii_lowercase(),
            kind,
            nodes,
            default_code,
        };
        h.validate()?;
        Ok(h)
    }

    fn validate(&self) -> Result<()> {
        let leaves: Vec<(usize, &Node)> = self.leaves().collect();
        if leaves.is_empty() {
            return Err(Error::Definition(format!("hierarchy `{}` has no leaves", self.name)));
        }
        for (i, (_, a)) in leaves.iter().enumerate() {
            for (_, b) in &leaves[i + 1..] {
                let (ca, cb) = (a.coverage.as_ref().unwrap(), b.coverage.as_ref().unwrap());
                if ca.overlaps(cb) {
                    return Err(Error::Definition(format!(
                        "overlapping leaves {} ({ca}) and {} ({cb}) in `{}`",
                        a.label, b.label, self.name
                    )));
                }
            }
        }
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            let p = n.parent.ok_or_else(|| {
                Error::Definition(format!("node {} has no parent", n.label))
            })?;
            if self.nodes[p].level + 1 != n.level {
                return Err(Error::Definition(format!(
                    "node {} at level {} must hang below level {}",
                    n.label,
                    n.level,
                    n.level - 1
                )));
            }
            if !self.is_leaf(i) && !self.nodes.iter().any(|c| c.parent == Some(i)) {
                return Err(Error::Definition(format!(
                    "internal node {} has no children",
                    n.label
                )));
            }
        }
        Ok(())
    }

    /// Two-level hierarchy with one coded leaf per range. Bounds are inclusive.
    pub fn define_encoding(
        name: &str,
        attribute: &str,
        ranges: &[(Option<f64>, Option<f64>, i64)],
        default_code: Option<i64>,
    ) -> Result<Self> {
        let mut codes = BTreeSet::new();
        for (_, _, c) in ranges {
            if !codes.insert(*c) {
                return Err(Error::Definition(format!("duplicate code {c} in `{name}`")));
            }
        }
        let leaves = ranges
            .iter()
            .map(|(lo, hi, c)| {
                Ok(LabeledLeaf {
                    label: Label::Code(*c),
                    coverage: Coverage::Interval(Interval::new(*lo, *hi)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::flat(name, attribute, HierarchyKind::Encoding, leaves, default_code)
    }

    /// Root plus explicitly labeled leaves.
    pub fn flat(
        name: &str,
        attribute: &str,
        kind: HierarchyKind,
        leaves: Vec<LabeledLeaf>,
        default_code: Option<i64>,
    ) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut nodes = vec![root()];
        for leaf in leaves {
            if !seen.insert(leaf.label.clone()) {
                return Err(Error::Definition(format!(
                    "duplicate label {} in `{name}`",
                    leaf.label
                )));
            }
            nodes.push(Node {
                level: 1,
                label: leaf.label,
                coverage: Some(leaf.coverage),
                parent: Some(0),
            });
        }
        Self::build(name, attribute, kind, nodes, default_code)
    }

    /// Builds a tree from level definitions. A member that later appears as
    /// a parent becomes an internal node; the others are leaves.
    pub fn define_hierarchy(name: &str, attribute: &str, levels: &[LevelDef]) -> Result<Self> {
        let mut nodes = vec![root()];
        let mut literal: Vec<Option<Coverage>> = vec![None];
        // definitions may name parents defined on a later line, so resolve
        // level by level
        let mut ordered: Vec<&LevelDef> = levels.iter().collect();
        ordered.sort_by_key(|d| d.level);
        for def in ordered {
            if def.level == 0 {
                return Err(Error::Definition("level 0 is reserved for ANY".into()));
            }
            if def.parent_level + 1 != def.level {
                return Err(Error::Definition(format!(
                    "LEVEL{} members must name a LEVEL{} parent, found LEVEL{}",
                    def.level,
                    def.level - 1,
                    def.parent_level
                )));
            }
            let parent = match &def.parent {
                None if def.parent_level == 0 => 0,
                None => {
                    return Err(Error::Definition(format!(
                        "ALL is only valid at LEVEL0 (found LEVEL{})",
                        def.parent_level
                    )))
                }
                Some(label) => nodes
                    .iter()
                    .position(|n| n.level == def.parent_level && &n.label == label)
                    .ok_or_else(|| {
                        Error::Definition(format!(
                            "orphan: parent {label} is not defined at LEVEL{}",
                            def.parent_level
                        ))
                    })?,
            };
            for m in &def.members {
                let label = m.label();
                if nodes.iter().any(|n| n.level == def.level && n.label == label) {
                    return Err(Error::Definition(format!(
                        "{label} is defined twice at LEVEL{}",
                        def.level
                    )));
                }
                nodes.push(Node {
                    level: def.level,
                    label,
                    coverage: None,
                    parent: Some(parent),
                });
                literal.push(Some(m.coverage()?));
            }
        }
        // nodes without children keep their literal coverage
        for i in 1..nodes.len() {
            if !nodes.iter().any(|c| c.parent == Some(i)) {
                nodes[i].coverage = literal[i].take();
            }
        }
        Self::build(name, attribute, HierarchyKind::Hierarchy, nodes, None)
    }

    fn covering_leaf(&self, v: &Value) -> Option<usize> {
        if v.is_null() {
            return None;
        }
        self.leaves()
            .find(|(_, n)| n.coverage.as_ref().is_some_and(|c| c.covers(v)))
            .map(|(i, _)| i)
    }

    fn concept_of(&self, idx: usize) -> Concept {
        let n = &self.nodes[idx];
        Concept {
            label: n.label.clone(),
            coverage: n.coverage.clone().or_else(|| self.union_interval(idx)),
        }
    }

    /// Coverage of an internal node when its leaves form one contiguous
    /// interval; used only for display.
    fn union_interval(&self, idx: usize) -> Option<Coverage> {
        if idx == 0 {
            return None;
        }
        let mut ivs: Vec<Interval> = Vec::new();
        for (i, n) in self.leaves() {
            if self.ancestor_at(i, self.nodes[idx].level) == idx {
                match &n.coverage {
                    Some(Coverage::Interval(iv)) => ivs.push(*iv),
                    _ => return None,
                }
            }
        }
        ivs.sort();
        let first = ivs.first()?;
        let last = ivs.iter().map(|i| i.hi).max_by(|a, b| match (a, b) {
            (None, None) => std::cmp::Ordering::Equal,
            (None, _) => std::cmp::Ordering::Greater,
            (_, None) => std::cmp::Ordering::Less,
            (Some(x), Some(y)) => x.cmp(y),
        })?;
        Some(Coverage::Interval(Interval { lo: first.lo, hi: last }))
    }

    fn ancestor_at(&self, mut idx: usize, level: usize) -> usize {
        while self.nodes[idx].level > level {
            idx = self.nodes[idx].parent.expect("non-root has parent");
        }
        idx
    }

    fn default_concept(&self, v: &Value) -> Result<Concept> {
        match self.default_code {
            Some(c) => Ok(Concept {
                label: Label::Code(c),
                coverage: None,
            }),
            None => Err(Error::Encoding(format!(
                "value {} of `{}` is not covered by `{}`",
                match v {
                    Value::Text(s) => format!("'{s}'"),
                    other => other.to_string(),
                },
                self.attribute,
                self.name
            ))),
        }
    }

    /// Concept of the unique leaf covering `v`, falling back to the default
    /// code.
    pub fn encode_value(&self, v: &Value) -> Result<Concept> {
        match self.covering_leaf(v) {
            Some(i) => Ok(self.concept_of(i)),
            None => self.default_concept(v),
        }
    }

    /// Ancestor of `v`'s leaf at `level`; leaves shallower than `level`
    /// answer with themselves.
    pub fn generalize_value(&self, v: &Value, level: usize) -> Result<Concept> {
        if level >= self.depth() {
            return Err(Error::Encoding(format!(
                "level {level} out of range for `{}` ({} levels)",
                self.name,
                self.depth()
            )));
        }
        if level == 0 {
            return Ok(Concept::any());
        }
        match self.covering_leaf(v) {
            Some(i) => Ok(self.concept_of(self.ancestor_at(i, level))),
            None => self.default_concept(v),
        }
    }
}

fn root() -> Node {
    Node {
        level: 0,
        label: Label::Any,
        coverage: None,
        parent: None,
    }
}

/// How a mined attribute's raw values turn into descriptor values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Encoder {
    /// Encode through a hierarchy, at its leaves or at a fixed level.
    Hierarchy {
        hierarchy: std::sync::Arc<ConceptHierarchy>,
        level: Option<usize>,
    },
    /// Round a number down to a multiple of `10^digits`, e.g. 534 → 500
    /// for two digits.
    Truncate { digits: u32 },
}

impl Encoder {
    pub fn hierarchy(h: std::sync::Arc<ConceptHierarchy>) -> Self {
        Encoder::Hierarchy {
            hierarchy: h,
            level: None,
        }
    }

    pub fn encode(&self, v: &Value) -> Result<Concept> {
        match self {
            Encoder::Hierarchy {
                hierarchy,
                level: None,
            } => hierarchy.encode_value(v),
            Encoder::Hierarchy {
                hierarchy,
                level: Some(l),
            } => hierarchy.generalize_value(v, *l),
            Encoder::Truncate { digits } => truncate(v, *digits),
        }
    }
}

fn truncate(v: &Value, digits: u32) -> Result<Concept> {
    let width = 10i64
        .checked_pow(digits)
        .ok_or_else(|| Error::Encoding(format!("truncation width 10^{digits} too large")))?;
    match v {
        Value::Integer(i) => {
            let base = i.div_euclid(width) * width;
            Ok(Concept {
                label: Label::Code(base),
                coverage: Some(Coverage::Interval(Interval::new(
                    Some(base as f64),
                    Some((base + width - 1) as f64),
                )?)),
            })
        }
        Value::Real(r) => {
            let base = (r / width as f64).floor() * width as f64;
            Ok(Concept {
                label: Label::Code(base as i64),
                coverage: None,
            })
        }
        other => Err(Error::Encoding(format!(
            "cannot truncate non-numeric value {other}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn income_encoding() -> ConceptHierarchy {
        ConceptHierarchy::define_encoding(
            "dscrt_income",
            "income",
            &[
                (None, Some(499.0), 1),
                (Some(500.0), Some(599.0), 2),
                (Some(600.0), Some(699.0), 3),
                (Some(700.0), Some(799.0), 4),
                (Some(800.0), None, 5),
            ],
            Some(0),
        )
        .unwrap()
    }

    fn income_levels() -> Vec<LevelDef> {
        [
            (None, Some(499.0)),
            (Some(500.0), Some(599.0)),
            (Some(600.0), Some(699.0)),
            (Some(700.0), Some(799.0)),
            (Some(800.0), None),
        ]
        .into_iter()
        .map(|(lo, hi)| LevelDef {
            level: 1,
            members: vec![Member::Range(lo, hi)],
            parent_level: 0,
            parent: None,
        })
        .collect()
    }

    fn income_taxonomy() -> ConceptHierarchy {
        let leaves = [
            (None, Some(499.0)),
            (Some(500.0), Some(599.0)),
            (Some(600.0), Some(699.0)),
            (Some(700.0), Some(799.0)),
            (Some(800.0), None),
        ]
        .into_iter()
        .zip(1..)
        .map(|((lo, hi), code)| LabeledLeaf {
            label: Label::Code(code),
            coverage: Coverage::Interval(Interval::new(lo, hi).unwrap()),
        })
        .collect();
        ConceptHierarchy::flat("income_hierarchy", "income", HierarchyKind::Taxonomy, leaves, None)
            .unwrap()
    }

    #[test]
    fn encoding_has_five_leaves() {
        let h = income_encoding();
        assert_eq!(h.leaves().count(), 5);
        assert_eq!(h.depth(), 2);
        assert_eq!(h.default_code(), Some(0));
    }

    #[test]
    fn encode_fixture_incomes() {
        let h = income_encoding();
        assert_eq!(h.encode_value(&Value::Integer(534)).unwrap().label, Label::Code(2));
        assert_eq!(h.encode_value(&Value::Integer(716)).unwrap().label, Label::Code(4));
        assert_eq!(h.encode_value(&Value::Integer(599)).unwrap().label, Label::Code(2));
        assert_eq!(h.encode_value(&Value::Null).unwrap().label, Label::Code(0));
    }

    #[test]
    fn single_unbounded_range() {
        let h = ConceptHierarchy::define_encoding("e", "x", &[(None, None, 1)], None).unwrap();
        for v in [-1e9, 0.0, 3.5, 1e12] {
            assert_eq!(h.encode_value(&Value::Real(v)).unwrap().label, Label::Code(1));
        }
    }

    #[test]
    fn overlapping_ranges_rejected() {
        let err = ConceptHierarchy::define_encoding(
            "e",
            "x",
            &[(Some(0.0), Some(10.0), 1), (Some(5.0), Some(15.0), 2)],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Definition(_)));
        let dup = ConceptHierarchy::define_encoding(
            "e",
            "x",
            &[(Some(0.0), Some(1.0), 1), (Some(5.0), Some(6.0), 1)],
            None,
        );
        assert!(matches!(dup, Err(Error::Definition(_))));
    }

    #[test]
    fn dmql_hierarchy_levels() {
        let h = ConceptHierarchy::define_hierarchy("income_hierarchy", "income", &income_levels())
            .unwrap();
        assert_eq!(h.depth(), 2);
        assert_eq!(h.leaves().count(), 5);
        let g = h.generalize_value(&Value::Integer(534), 1).unwrap();
        assert_eq!(g.label, Label::Name("[500..599]".into()));
        assert_eq!(h.generalize_value(&Value::Integer(534), 0).unwrap(), Concept::any());
        let low = h.generalize_value(&Value::Integer(499), 1).unwrap();
        assert_eq!(low.label.to_string(), "[MIN..499]");
    }

    #[test]
    fn taxonomy_leaf_labeled_by_code() {
        let h = income_taxonomy();
        let c = h.encode_value(&Value::Integer(550)).unwrap();
        assert_eq!(c.label, Label::Code(2));
        assert_eq!(c.canonical(), "[500..599]");
    }

    #[test]
    fn value_set_member() {
        let levels = vec![LevelDef {
            level: 1,
            members: vec![Member::Range(Some(500.0), Some(599.0))],
            parent_level: 0,
            parent: None,
        }];
        let h = ConceptHierarchy::define_hierarchy("odmql", "income", &levels).unwrap();
        assert_eq!(h.encode_value(&Value::Integer(550)).unwrap().canonical(), "[500..599]");
        let leaves = vec![LabeledLeaf {
            label: Label::Name("I5".into()),
            coverage: Coverage::Interval(Interval::new(Some(500.0), Some(599.0)).unwrap()),
        }];
        let h = ConceptHierarchy::flat("odmql", "income", HierarchyKind::Hierarchy, leaves, None)
            .unwrap();
        assert_eq!(h.encode_value(&Value::Integer(599)).unwrap().label, Label::Name("I5".into()));
    }

    #[test]
    fn three_level_tree() {
        let levels = vec![
            LevelDef {
                level: 1,
                members: vec![Member::Value(Value::text("low")), Member::Value(Value::text("high"))],
                parent_level: 0,
                parent: None,
            },
            LevelDef {
                level: 2,
                members: vec![Member::Range(None, Some(599.0))],
                parent_level: 1,
                parent: Some(Label::Name("low".into())),
            },
            LevelDef {
                level: 2,
                members: vec![Member::Range(Some(600.0), None)],
                parent_level: 1,
                parent: Some(Label::Name("high".into())),
            },
        ];
        let h = ConceptHierarchy::define_hierarchy("h", "income", &levels).unwrap();
        assert_eq!(h.depth(), 3);
        let c = h.generalize_value(&Value::Integer(534), 1).unwrap();
        assert_eq!(c.label, Label::Name("low".into()));
        assert_eq!(c.canonical(), "[MIN..599]");
        assert_eq!(
            h.generalize_value(&Value::Integer(534), 2).unwrap().label.to_string(),
            "[MIN..599]"
        );
    }

    #[test]
    fn orphan_and_level_errors() {
        let orphan = vec![LevelDef {
            level: 2,
            members: vec![Member::Value(Value::Integer(1))],
            parent_level: 1,
            parent: Some(Label::Name("nowhere".into())),
        }];
        assert!(matches!(
            ConceptHierarchy::define_hierarchy("h", "x", &orphan),
            Err(Error::Definition(_))
        ));
        let skip = vec![LevelDef {
            level: 3,
            members: vec![Member::Value(Value::Integer(1))],
            parent_level: 1,
            parent: None,
        }];
        assert!(ConceptHierarchy::define_hierarchy("h", "x", &skip).is_err());
    }

    #[test]
    fn uncovered_without_default_is_error() {
        let h = income_taxonomy();
        let err = h.encode_value(&Value::text("rich")).unwrap_err();
        assert!(matches!(err, Error::Encoding(ref m) if m.contains("'rich'")));
    }

    #[test]
    fn truncation_buckets() {
        let e = Encoder::Truncate { digits: 2 };
        let c = e.encode(&Value::Integer(534)).unwrap();
        assert_eq!(c.label, Label::Code(500));
        assert_eq!(c.canonical(), "[500..599]");
        assert_eq!(e.encode(&Value::Integer(599)).unwrap().label, Label::Code(500));
    }

    #[test]
    fn three_surface_forms_partition_alike() {
        let enc = income_encoding();
        let dmql = ConceptHierarchy::define_hierarchy("ih", "income", &income_levels()).unwrap();
        let tax = income_taxonomy();
        for inc in [534, 668, 716, 659, 737, 563, 591, 525, 573] {
            let v = Value::Integer(inc);
            let a = enc.encode_value(&v).unwrap().canonical();
            assert_eq!(a, dmql.encode_value(&v).unwrap().canonical());
            assert_eq!(a, tax.encode_value(&v).unwrap().canonical());
        }
    }
}
