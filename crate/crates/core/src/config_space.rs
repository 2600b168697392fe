//! Configuration options, finite spaces, concrete configurations,
//! documentation ingestion, numeric encoding, and pruning.
//!
//! Spaces are finite grids: every option carries an explicit list of
//! admissible values. Continuous ranges must be discretized upstream.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap for [`enumerate_space`].
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 1_000_000;

/// One admissible value of a configuration option.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OptionValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Symbol(String),
}

impl OptionValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            OptionValue::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            OptionValue::Int(i) => Some(*i as f64),
            OptionValue::Real(r) => Some(*r),
            OptionValue::Symbol(_) => None,
        }
    }

    fn is_numeric(&self) -> bool {
        matches!(self, OptionValue::Int(_) | OptionValue::Real(_))
    }

    /// Loose comparison used when resolving externally supplied values
    /// (LLM output, CSV cells) against an option's admissible list:
    /// `Int(5)` matches `Real(5.0)` and vice versa.
    pub fn matches(&self, other: &OptionValue) -> bool {
        match (self, other) {
            (OptionValue::Bool(a), OptionValue::Bool(b)) => a == b,
            (OptionValue::Symbol(a), OptionValue::Symbol(b)) => a == b,
            (a, b) if a.is_numeric() && b.is_numeric() => a.as_f64() == b.as_f64(),
            _ => false,
        }
    }
}

// Real values never hold NaN (all ingestion paths reject non-finite numbers),
// so exact equality is well defined.
impl Eq for OptionValue {}

impl Hash for OptionValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            OptionValue::Bool(b) => {
                state.write_u8(0);
                b.hash(state);
            }
            OptionValue::Int(i) => {
                state.write_u8(1);
                i.hash(state);
            }
            OptionValue::Real(r) => {
                state.write_u8(2);
                r.to_bits().hash(state);
            }
            OptionValue::Symbol(s) => {
                state.write_u8(3);
                s.hash(state);
            }
        }
    }
}

impl fmt::Display for OptionValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptionValue::Bool(b) => write!(f, "{b}"),
            OptionValue::Int(i) => write!(f, "{i}"),
            OptionValue::Real(r) => write!(f, "{r}"),
            OptionValue::Symbol(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptionKind {
    NumericDiscrete,
    Categorical,
    Boolean,
}

/// Tri-state performance-sensitivity flag attached by documentation or the
/// option filter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sensitivity {
    #[default]
    Unknown,
    Sensitive,
    Insensitive,
}

/// A single configuration option: a name, a kind, and an ordered finite list
/// of admissible values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigOption {
    pub name: String,
    pub kind: OptionKind,
    pub values: Vec<OptionValue>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default, skip_serializing_if = "is_unknown")]
    pub performance_sensitive: Sensitivity,
    /// Documented default value, when the documentation states one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<OptionValue>,
}

fn is_unknown(s: &Sensitivity) -> bool {
    *s == Sensitivity::Unknown
}

impl ConfigOption {
    /// Creates an option and checks its invariants. An empty value list is
    /// allowed here (documentation without ranges); [`ConfigSpace::new`]
    /// rejects it.
    pub fn new(name: impl Into<String>, kind: OptionKind, values: Vec<OptionValue>) -> Result<Self> {
        let opt = ConfigOption {
            name: name.into(),
            kind,
            values,
            description: String::new(),
            performance_sensitive: Sensitivity::Unknown,
            default: None,
        };
        opt.check()?;
        Ok(opt)
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = description.into();
        self
    }

    pub fn with_default(mut self, default: OptionValue) -> Result<Self> {
        if self.resolve_value(&default).is_none() && !self.values.is_empty() {
            return Err(Error::InadmissibleValue {
                option: self.name.clone(),
                value: default.to_string(),
            });
        }
        self.default = Some(default);
        Ok(self)
    }

    /// Replaces an empty value list with values taken from another source
    /// (typically the dataset's space definition).
    pub fn with_values(mut self, values: Vec<OptionValue>) -> Result<Self> {
        self.values = values;
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::DuplicateOrMissingName("<empty>".into()));
        }
        let mut seen = HashSet::new();
        for v in &self.values {
            if !seen.insert(v.clone()) {
                return Err(Error::InvalidOption(
                    self.name.clone(),
                    format!("duplicate value {v}"),
                ));
            }
            if let Some(x) = v.as_f64() {
                if !x.is_finite() {
                    return Err(Error::InvalidOption(
                        self.name.clone(),
                        format!("non-finite value {v}"),
                    ));
                }
            }
        }
        match self.kind {
            OptionKind::NumericDiscrete => {
                let mut prev: Option<f64> = None;
                for v in &self.values {
                    let x = v.as_f64().ok_or_else(|| {
                        Error::InvalidOption(
                            self.name.clone(),
                            format!("non-numeric value {v} in numeric-discrete option"),
                        )
                    })?;
                    if let Some(p) = prev {
                        if x <= p {
                            return Err(Error::InvalidOption(
                                self.name.clone(),
                                "numeric-discrete values must be strictly increasing".into(),
                            ));
                        }
                    }
                    prev = Some(x);
                }
            }
            OptionKind::Boolean => {
                for v in &self.values {
                    if !matches!(v, OptionValue::Bool(_)) {
                        return Err(Error::InvalidOption(
                            self.name.clone(),
                            format!("non-boolean value {v} in boolean option"),
                        ));
                    }
                }
            }
            OptionKind::Categorical => {}
        }
        Ok(())
    }

    /// Resolves a candidate value to the canonical admissible value it names,
    /// tolerating `Int`/`Real` mismatches from external sources.
    pub fn resolve_value(&self, candidate: &OptionValue) -> Option<&OptionValue> {
        self.values.iter().find(|v| v.matches(candidate))
    }

    /// The pinned default used when this option is dropped by pruning:
    /// the documented default if present, else the first admissible value.
    pub fn pin_default(&self) -> Option<OptionValue> {
        if let Some(d) = &self.default {
            self.resolve_value(d).cloned()
        } else {
            self.values.first().cloned()
        }
    }
}

/// A forbidden combination of option values. A configuration violates the
/// constraint iff it matches every `(option, value)` pair listed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraint {
    pub forbid: BTreeMap<String, OptionValue>,
}

impl Constraint {
    pub fn violated_by(&self, cfg: &Configuration) -> bool {
        self.forbid
            .iter()
            .all(|(name, value)| cfg.get(name) == Some(value))
    }
}

/// The finite universe of configurations: an ordered list of options plus
/// optional forbidden combinations. When the space was produced by pruning,
/// `dropped` records the pinned default of every removed option so sampled
/// configurations can be completed back into the parent space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigSpace {
    options: Vec<ConfigOption>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constraints: Vec<Constraint>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    dropped: BTreeMap<String, OptionValue>,
}

#[derive(Deserialize)]
struct RawSpace {
    options: Vec<ConfigOption>,
    #[serde(default)]
    constraints: Vec<Constraint>,
    #[serde(default)]
    dropped: BTreeMap<String, OptionValue>,
}

impl<'de> Deserialize<'de> for ConfigSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpace::deserialize(deserializer)?;
        let mut space =
            ConfigSpace::new(raw.options, raw.constraints).map_err(serde::de::Error::custom)?;
        space.dropped = raw.dropped;
        Ok(space)
    }
}

impl ConfigSpace {
    pub fn new(options: Vec<ConfigOption>, constraints: Vec<Constraint>) -> Result<Self> {
        let mut names = HashSet::new();
        for opt in &options {
            opt.check()?;
            if opt.values.is_empty() {
                return Err(Error::InvalidSpace(format!(
                    "option {} has no admissible values",
                    opt.name
                )));
            }
            if !names.insert(opt.name.clone()) {
                return Err(Error::DuplicateOrMissingName(opt.name.clone()));
            }
        }
        let space = ConfigSpace {
            options,
            constraints,
            dropped: BTreeMap::new(),
        };
        for c in &space.constraints {
            if c.forbid.is_empty() {
                return Err(Error::InvalidSpace("empty constraint".into()));
            }
            for (name, value) in &c.forbid {
                let opt = space
                    .option(name)
                    .ok_or_else(|| Error::UnknownOption(name.clone()))?;
                if opt.resolve_value(value).is_none() {
                    return Err(Error::InadmissibleValue {
                        option: name.clone(),
                        value: value.to_string(),
                    });
                }
            }
        }
        if space.cardinality() == 0 {
            return Err(Error::InvalidSpace("constraints forbid every configuration".into()));
        }
        Ok(space)
    }

    pub fn options(&self) -> &[ConfigOption] {
        &self.options
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Pinned defaults of options removed by pruning.
    pub fn dropped(&self) -> &BTreeMap<String, OptionValue> {
        &self.dropped
    }

    pub fn option(&self, name: &str) -> Option<&ConfigOption> {
        self.options.iter().find(|o| o.name == name)
    }

    pub fn option_index(&self, name: &str) -> Option<usize> {
        self.options.iter().position(|o| o.name == name)
    }

    /// Number of valid configurations: the plain product of value counts
    /// minus constraint-excluded combinations (inclusion–exclusion over
    /// constraint subsets).
    pub fn cardinality(&self) -> u128 {
        let product: u128 = self
            .options
            .iter()
            .map(|o| o.values.len() as u128)
            .product();
        if self.constraints.is_empty() {
            return product;
        }
        // Σ over non-empty subsets S: (−1)^{|S|+1} · |configs matching all of S|
        let m = self.constraints.len();
        let mut excluded: i128 = 0;
        for mask in 1u32..(1 << m) {
            let mut pinned: BTreeMap<&str, &OptionValue> = BTreeMap::new();
            let mut compatible = true;
            for (i, c) in self.constraints.iter().enumerate() {
                if mask & (1 << i) == 0 {
                    continue;
                }
                for (name, value) in &c.forbid {
                    match pinned.get(name.as_str()) {
                        Some(existing) if *existing != value => {
                            compatible = false;
                            break;
                        }
                        _ => {
                            pinned.insert(name, value);
                        }
                    }
                }
                if !compatible {
                    break;
                }
            }
            if !compatible {
                continue;
            }
            let count: i128 = self
                .options
                .iter()
                .map(|o| {
                    if pinned.contains_key(o.name.as_str()) {
                        1i128
                    } else {
                        o.values.len() as i128
                    }
                })
                .product();
            if mask.count_ones() % 2 == 1 {
                excluded += count;
            } else {
                excluded -= count;
            }
        }
        (product as i128 - excluded).max(0) as u128
    }

    /// Total length of [`encode_configuration`] vectors for this space.
    pub fn encoding_dimension(&self) -> usize {
        self.options
            .iter()
            .map(|o| match o.kind {
                OptionKind::Categorical => o.values.len(),
                _ => 1,
            })
            .sum()
    }

    /// Completes a configuration of this (possibly pruned) space back into
    /// full-space form by adding the pinned defaults of dropped options.
    pub fn complete(&self, cfg: &Configuration) -> Configuration {
        let mut assignments = cfg.assignments.clone();
        for (name, value) in &self.dropped {
            assignments.entry(name.clone()).or_insert_with(|| value.clone());
        }
        Configuration { assignments }
    }
}

/// One concrete assignment of a value to every option of a space.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    assignments: BTreeMap<String, OptionValue>,
}

impl Configuration {
    pub fn new(assignments: BTreeMap<String, OptionValue>) -> Self {
        Configuration { assignments }
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, OptionValue)>,
        S: Into<String>,
    {
        Configuration {
            assignments: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&OptionValue> {
        self.assignments.get(name)
    }

    pub fn assignments(&self) -> &BTreeMap<String, OptionValue> {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, v) in &self.assignments {
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{k}={v}")?;
            first = false;
        }
        Ok(())
    }
}

/// Validity verdict for [`validate_configuration`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Invalid(Violation),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }
}

/// First rule violated by an invalid configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MissingOption(String),
    UnknownOption(String),
    InadmissibleValue(String),
    ConstraintViolated(usize),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingOption(n) => write!(f, "missing option {n}"),
            Violation::UnknownOption(n) => write!(f, "unknown option {n}"),
            Violation::InadmissibleValue(n) => write!(f, "inadmissible value for option {n}"),
            Violation::ConstraintViolated(i) => write!(f, "constraint {i} violated"),
        }
    }
}

/// Parses configuration documentation: a JSON array of objects with string
/// fields `name` and `description`, plus optional `values`, `kind`, and
/// `default`. Order is preserved. Entries without `values` are recorded with
/// an empty value list and must be completed from the space definition
/// before use.
pub fn parse_documentation(doc_text: &str) -> Result<Vec<ConfigOption>> {
    let raw: Vec<serde_json::Value> = serde_json::from_str(doc_text)?;
    let mut out = Vec::with_capacity(raw.len());
    let mut seen = HashSet::new();
    for entry in raw {
        let obj = entry
            .as_object()
            .ok_or_else(|| Error::DuplicateOrMissingName("<non-object entry>".into()))?;
        let name = obj
            .get("name")
            .and_then(|v| v.as_str())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::DuplicateOrMissingName("<missing name>".into()))?
            .to_string();
        if !seen.insert(name.clone()) {
            return Err(Error::DuplicateOrMissingName(name));
        }
        let description = obj
            .get("description")
            .and_then(|v| v.as_str())
            .unwrap_or_default()
            .to_string();
        let values: Vec<OptionValue> = match obj.get("values") {
            Some(v) => serde_json::from_value(v.clone())?,
            None => Vec::new(),
        };
        let kind = match obj.get("kind") {
            Some(k) => serde_json::from_value(k.clone())?,
            None => infer_kind(&values),
        };
        let mut opt = ConfigOption::new(name, kind, values)?.with_description(description);
        if let Some(d) = obj.get("default") {
            let d: OptionValue = serde_json::from_value(d.clone())?;
            opt = opt.with_default(d)?;
        }
        out.push(opt);
    }
    Ok(out)
}

fn infer_kind(values: &[OptionValue]) -> OptionKind {
    if !values.is_empty() && values.iter().all(|v| matches!(v, OptionValue::Bool(_))) {
        OptionKind::Boolean
    } else if !values.is_empty() && values.iter().all(OptionValue::is_numeric) {
        OptionKind::NumericDiscrete
    } else {
        OptionKind::Categorical
    }
}

/// Materializes every valid configuration of the space, lexicographic over
/// option order and value order. Fails if the cardinality exceeds `limit`.
pub fn enumerate_space(space: &ConfigSpace, limit: u128) -> Result<Vec<Configuration>> {
    let cardinality = space.cardinality();
    if cardinality > limit {
        return Err(Error::CardinalityOverLimit { cardinality, limit });
    }
    let n = space.options.len();
    let mut out = Vec::with_capacity(cardinality as usize);
    if n == 0 {
        return Ok(out);
    }
    let mut indices = vec![0usize; n];
    'outer: loop {
        let cfg = Configuration {
            assignments: space
                .options
                .iter()
                .zip(&indices)
                .map(|(o, &i)| (o.name.clone(), o.values[i].clone()))
                .collect(),
        };
        if !space.constraints.iter().any(|c| c.violated_by(&cfg)) {
            out.push(cfg);
        }
        // odometer increment, rightmost option fastest
        for pos in (0..n).rev() {
            indices[pos] += 1;
            if indices[pos] < space.options[pos].values.len() {
                continue 'outer;
            }
            indices[pos] = 0;
        }
        break;
    }
    Ok(out)
}

/// Checks a configuration against a space and reports the first violated
/// rule, if any.
pub fn validate_configuration(space: &ConfigSpace, cfg: &Configuration) -> Verdict {
    for opt in &space.options {
        match cfg.get(&opt.name) {
            None => return Verdict::Invalid(Violation::MissingOption(opt.name.clone())),
            Some(v) => {
                if !opt.values.contains(v) {
                    return Verdict::Invalid(Violation::InadmissibleValue(opt.name.clone()));
                }
            }
        }
    }
    for name in cfg.assignments.keys() {
        if space.option(name).is_none() {
            return Verdict::Invalid(Violation::UnknownOption(name.clone()));
        }
    }
    for (i, c) in space.constraints.iter().enumerate() {
        if c.violated_by(cfg) {
            return Verdict::Invalid(Violation::ConstraintViolated(i));
        }
    }
    Verdict::Valid
}

/// Resolves externally supplied assignments (LLM output, CSV cells) into a
/// configuration whose values are the canonical admissible objects of the
/// space, so later equality and hashing are exact.
pub fn canonicalize_configuration(space: &ConfigSpace, cfg: &Configuration) -> Result<Configuration> {
    let mut assignments = BTreeMap::new();
    for (name, value) in &cfg.assignments {
        let opt = space
            .option(name)
            .ok_or_else(|| Error::UnknownOption(name.clone()))?;
        let canonical = opt.resolve_value(value).ok_or_else(|| Error::InadmissibleValue {
            option: name.clone(),
            value: value.to_string(),
        })?;
        assignments.insert(name.clone(), canonical.clone());
    }
    Ok(Configuration { assignments })
}

/// Maps a valid configuration to a fixed-dimension numeric feature vector:
/// booleans to 0/1, numeric-discrete values min–max scaled to [0,1] over the
/// option's value list, categoricals one-hot in value-list order. The
/// encoding is deterministic and injective.
pub fn encode_configuration(space: &ConfigSpace, cfg: &Configuration) -> Result<Vec<f64>> {
    match validate_configuration(space, cfg) {
        Verdict::Valid => {}
        Verdict::Invalid(v) => return Err(Error::InvalidConfiguration(v.to_string())),
    }
    let mut out = Vec::with_capacity(space.encoding_dimension());
    for opt in &space.options {
        let value = cfg.get(&opt.name).expect("validated above");
        match opt.kind {
            OptionKind::Boolean => {
                out.push(if *value == OptionValue::Bool(true) { 1.0 } else { 0.0 });
            }
            OptionKind::NumericDiscrete => {
                let x = value.as_f64().expect("numeric option");
                let lo = opt.values.first().and_then(OptionValue::as_f64).unwrap();
                let hi = opt.values.last().and_then(OptionValue::as_f64).unwrap();
                out.push(if hi > lo { (x - lo) / (hi - lo) } else { 0.0 });
            }
            OptionKind::Categorical => {
                for v in &opt.values {
                    out.push(if v == value { 1.0 } else { 0.0 });
                }
            }
        }
    }
    Ok(out)
}

/// Restricts a space to `keep`, pinning every dropped option to the supplied
/// admissible default. Pinned defaults are recorded in the returned space so
/// configurations can be completed back into the parent space. Constraints
/// that can no longer trigger are removed; constraints whose dropped entries
/// all match the pinned defaults are reduced to the kept options.
pub fn prune_space(
    space: &ConfigSpace,
    keep: &BTreeSet<String>,
    defaults: &BTreeMap<String, OptionValue>,
) -> Result<ConfigSpace> {
    for name in keep {
        if space.option(name).is_none() {
            return Err(Error::UnknownOption(name.clone()));
        }
    }
    let mut dropped = space.dropped.clone();
    let mut kept_options = Vec::new();
    for opt in &space.options {
        if keep.contains(&opt.name) {
            kept_options.push(opt.clone());
        } else {
            let default = defaults
                .get(&opt.name)
                .ok_or_else(|| Error::Precondition(format!("no default for dropped option {}", opt.name)))?;
            let canonical = opt.resolve_value(default).ok_or_else(|| Error::InadmissibleValue {
                option: opt.name.clone(),
                value: default.to_string(),
            })?;
            dropped.insert(opt.name.clone(), canonical.clone());
        }
    }
    let mut constraints = Vec::new();
    'constraint: for c in &space.constraints {
        let mut reduced = BTreeMap::new();
        for (name, value) in &c.forbid {
            if keep.contains(name) {
                reduced.insert(name.clone(), value.clone());
            } else if dropped.get(name) != Some(value) {
                // pinned default disagrees: the constraint can never fire
                continue 'constraint;
            }
        }
        if reduced.is_empty() {
            return Err(Error::InvalidSpace(
                "pinned defaults leave a constraint that forbids every configuration".into(),
            ));
        }
        constraints.push(Constraint { forbid: reduced });
    }
    let mut pruned = ConfigSpace::new(kept_options, constraints)?;
    pruned.dropped = dropped;
    Ok(pruned)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(s: &str) -> OptionValue {
        OptionValue::Symbol(s.into())
    }

    fn int(i: i64) -> OptionValue {
        OptionValue::Int(i)
    }

    fn toy_space() -> ConfigSpace {
        ConfigSpace::new(
            vec![
                ConfigOption::new("algorithm", OptionKind::Categorical, vec![sym("g"), sym("l"), sym("z")])
                    .unwrap(),
                ConfigOption::new("level", OptionKind::NumericDiscrete, vec![int(1), int(5), int(9)])
                    .unwrap(),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn parse_documentation_two_options() {
        let doc = r#"[
          {"name": "algorithm", "description": "Selects the compression codec; codecs trade speed against ratio."},
          {"name": "-N", "description": "Scheduling niceness from -20 to 19; no effect on speed or output."}
        ]"#;
        let opts = parse_documentation(doc).unwrap();
        assert_eq!(opts.len(), 2);
        assert_eq!(opts[0].name, "algorithm");
        assert_eq!(opts[1].name, "-N");
        assert!(opts[0].description.contains("codec"));
        assert!(opts[1].values.is_empty());
    }

    #[test]
    fn parse_documentation_empty_array() {
        assert!(parse_documentation("[]").unwrap().is_empty());
    }

    #[test]
    fn parse_documentation_missing_name() {
        let err = parse_documentation(r#"[{"description": "x"}]"#).unwrap_err();
        assert!(matches!(err, Error::DuplicateOrMissingName(_)));
    }

    #[test]
    fn parse_documentation_duplicate_name() {
        let err = parse_documentation(r#"[{"name": "a"}, {"name": "a"}]"#).unwrap_err();
        assert!(matches!(err, Error::DuplicateOrMissingName(n) if n == "a"));
    }

    #[test]
    fn parse_documentation_values_and_kind() {
        let doc = r#"[{"name": "-p", "values": [1, 2, 4], "kind": "numeric-discrete", "default": 2}]"#;
        let opts = parse_documentation(doc).unwrap();
        assert_eq!(opts[0].kind, OptionKind::NumericDiscrete);
        assert_eq!(opts[0].pin_default(), Some(int(2)));
    }

    #[test]
    fn enumerate_cartesian_product() {
        let space = toy_space();
        let all = enumerate_space(&space, DEFAULT_ENUMERATION_LIMIT).unwrap();
        assert_eq!(all.len(), 9);
        assert_eq!(space.cardinality(), 9);
        // lexicographic: first option slowest
        assert_eq!(all[0].get("algorithm"), Some(&sym("g")));
        assert_eq!(all[0].get("level"), Some(&int(1)));
        assert_eq!(all[1].get("level"), Some(&int(5)));
        assert_eq!(all[8].get("algorithm"), Some(&sym("z")));
    }

    #[test]
    fn enumerate_single_boolean_like() {
        let space = ConfigSpace::new(
            vec![ConfigOption::new("x", OptionKind::NumericDiscrete, vec![int(0), int(1)]).unwrap()],
            vec![],
        )
        .unwrap();
        let all = enumerate_space(&space, 10).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].get("x"), Some(&int(0)));
        assert_eq!(all[1].get("x"), Some(&int(1)));
    }

    #[test]
    fn enumerate_respects_constraints() {
        // 3×4 space with one forbidden pair → 11, checked against brute force
        let space = ConfigSpace::new(
            vec![
                ConfigOption::new("a", OptionKind::Categorical, vec![sym("x"), sym("y"), sym("z")]).unwrap(),
                ConfigOption::new("b", OptionKind::NumericDiscrete, vec![int(0), int(1), int(2), int(3)])
                    .unwrap(),
            ],
            vec![Constraint {
                forbid: [("a".to_string(), sym("y")), ("b".to_string(), int(2))].into(),
            }],
        )
        .unwrap();
        let all = enumerate_space(&space, 100).unwrap();
        let mut brute = 0;
        for a in ["x", "y", "z"] {
            for b in 0..4 {
                if !(a == "y" && b == 2) {
                    brute += 1;
                }
            }
        }
        assert_eq!(all.len(), brute);
        assert_eq!(all.len(), 11);
        assert_eq!(space.cardinality(), 11);
        assert!(all
            .iter()
            .all(|c| !(c.get("a") == Some(&sym("y")) && c.get("b") == Some(&int(2)))));
    }

    #[test]
    fn enumerate_over_limit() {
        let space = toy_space();
        let err = enumerate_space(&space, 8).unwrap_err();
        assert!(matches!(err, Error::CardinalityOverLimit { cardinality: 9, limit: 8 }));
    }

    #[test]
    fn validate_verdicts() {
        let space = toy_space();
        let ok = Configuration::from_pairs([("algorithm", sym("l")), ("level", int(5))]);
        assert!(validate_configuration(&space, &ok).is_valid());

        let missing = Configuration::from_pairs([("algorithm", sym("l"))]);
        assert_eq!(
            validate_configuration(&space, &missing),
            Verdict::Invalid(Violation::MissingOption("level".into()))
        );

        let bad = Configuration::from_pairs([("algorithm", sym("q")), ("level", int(5))]);
        assert_eq!(
            validate_configuration(&space, &bad),
            Verdict::Invalid(Violation::InadmissibleValue("algorithm".into()))
        );

        let extra = Configuration::from_pairs([
            ("algorithm", sym("l")),
            ("level", int(5)),
            ("ghost", int(1)),
        ]);
        assert_eq!(
            validate_configuration(&space, &extra),
            Verdict::Invalid(Violation::UnknownOption("ghost".into()))
        );
    }

    #[test]
    fn encode_one_hot_and_scaling() {
        let space = ConfigSpace::new(
            vec![
                ConfigOption::new("algorithm", OptionKind::Categorical, vec![sym("g"), sym("l"), sym("z")])
                    .unwrap(),
                ConfigOption::new("n", OptionKind::NumericDiscrete, vec![int(1), int(5), int(9)]).unwrap(),
                ConfigOption::new(
                    "flag",
                    OptionKind::Boolean,
                    vec![OptionValue::Bool(false), OptionValue::Bool(true)],
                )
                .unwrap(),
            ],
            vec![],
        )
        .unwrap();
        let cfg = Configuration::from_pairs([
            ("algorithm", sym("l")),
            ("n", int(5)),
            ("flag", OptionValue::Bool(false)),
        ]);
        let enc = encode_configuration(&space, &cfg).unwrap();
        assert_eq!(enc, vec![0.0, 1.0, 0.0, 0.5, 0.0]);
        assert_eq!(space.encoding_dimension(), 5);
    }

    #[test]
    fn encode_rejects_invalid() {
        let space = toy_space();
        let bad = Configuration::from_pairs([("algorithm", sym("q")), ("level", int(5))]);
        assert!(encode_configuration(&space, &bad).is_err());
    }

    #[test]
    fn encoding_injective_on_small_space() {
        let space = toy_space();
        let all = enumerate_space(&space, 1000).unwrap();
        let mut seen: HashSet<Vec<u64>> = HashSet::new();
        for cfg in &all {
            let enc = encode_configuration(&space, cfg).unwrap();
            let bits: Vec<u64> = enc.iter().map(|x| x.to_bits()).collect();
            assert!(seen.insert(bits), "encoding collision for {cfg}");
        }
    }

    #[test]
    fn prune_drops_and_pins() {
        // lrzip-like ratio from a 1,200-configuration space to 200
        let space = ConfigSpace::new(
            vec![
                ConfigOption::new(
                    "algorithm",
                    OptionKind::Categorical,
                    vec![sym("-g"), sym("-l"), sym("-z"), sym("-b"), sym("-n")],
                )
                .unwrap(),
                ConfigOption::new(
                    "-w",
                    OptionKind::NumericDiscrete,
                    vec![int(1), int(21), int(41), int(61), int(81)],
                )
                .unwrap(),
                ConfigOption::new("-p", OptionKind::NumericDiscrete, vec![int(1), int(2), int(3), int(4)])
                    .unwrap(),
                ConfigOption::new("-L", OptionKind::NumericDiscrete, vec![int(8), int(9)]).unwrap(),
                ConfigOption::new(
                    "-N",
                    OptionKind::NumericDiscrete,
                    vec![int(-20), int(-12), int(-4), int(4), int(12), int(19)],
                )
                .unwrap(),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(space.cardinality(), 1200);
        let keep: BTreeSet<String> = ["algorithm", "-w", "-p", "-L"].iter().map(|s| s.to_string()).collect();
        let defaults = [("-N".to_string(), int(-4))].into();
        let pruned = prune_space(&space, &keep, &defaults).unwrap();
        assert_eq!(pruned.cardinality(), 200);
        assert_eq!(pruned.dropped().get("-N"), Some(&int(-4)));
        let cfg = Configuration::from_pairs([
            ("algorithm", sym("-g")),
            ("-w", int(41)),
            ("-p", int(2)),
            ("-L", int(9)),
        ]);
        let full = pruned.complete(&cfg);
        assert_eq!(full.len(), 5);
        assert_eq!(full.get("-N"), Some(&int(-4)));
        assert!(validate_configuration(&space, &full).is_valid());
    }

    #[test]
    fn prune_keep_all_is_identity() {
        let space = toy_space();
        let keep: BTreeSet<String> = space.options().iter().map(|o| o.name.clone()).collect();
        let pruned = prune_space(&space, &keep, &BTreeMap::new()).unwrap();
        assert_eq!(
            enumerate_space(&pruned, 100).unwrap(),
            enumerate_space(&space, 100).unwrap()
        );
    }

    #[test]
    fn prune_unknown_keep_name() {
        let space = toy_space();
        let keep: BTreeSet<String> = ["ghost".to_string()].into();
        assert!(matches!(
            prune_space(&space, &keep, &BTreeMap::new()),
            Err(Error::UnknownOption(n)) if n == "ghost"
        ));
    }

    #[test]
    fn prune_inadmissible_default() {
        let space = toy_space();
        let keep: BTreeSet<String> = ["algorithm".to_string()].into();
        let defaults = [("level".to_string(), int(7))].into();
        assert!(matches!(
            prune_space(&space, &keep, &defaults),
            Err(Error::InadmissibleValue { .. })
        ));
    }

    #[test]
    fn space_json_round_trip() {
        let mut space = toy_space();
        space.dropped.insert("-N".into(), int(-4));
        let text = serde_json::to_string_pretty(&space).unwrap();
        let back: ConfigSpace = serde_json::from_str(&text).unwrap();
        assert_eq!(space, back);
        // canonical writer is byte-stable
        assert_eq!(text, serde_json::to_string_pretty(&back).unwrap());
    }

    #[test]
    fn cardinality_matches_brute_force_on_random_spaces() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let n_opts = rng.random_range(1..=4);
            let mut opts = Vec::new();
            for i in 0..n_opts {
                let n_vals = rng.random_range(1..=4);
                let values: Vec<OptionValue> = (0..n_vals).map(|v| int(v as i64)).collect();
                opts.push(ConfigOption::new(format!("o{i}"), OptionKind::NumericDiscrete, values).unwrap());
            }
            let space = match ConfigSpace::new(opts.clone(), sample_constraints(&opts, &mut rng)) {
                Ok(s) => s,
                Err(_) => continue, // constraints forbade everything; skip
            };
            let enumerated = enumerate_space(&space, 10_000).unwrap();
            assert_eq!(enumerated.len() as u128, space.cardinality());
        }
    }

    fn sample_constraints(opts: &[ConfigOption], rng: &mut impl rand::Rng) -> Vec<Constraint> {
        let n = rng.random_range(0..=2);
        (0..n)
            .map(|_| {
                let mut forbid = BTreeMap::new();
                for opt in opts {
                    if rng.random_bool(0.5) {
                        let v = opt.values[rng.random_range(0..opt.values.len())].clone();
                        forbid.insert(opt.name.clone(), v);
                    }
                }
                if forbid.is_empty() {
                    let opt = &opts[0];
                    forbid.insert(opt.name.clone(), opt.values[0].clone());
                }
                Constraint { forbid }
            })
            .collect()
    }
}
