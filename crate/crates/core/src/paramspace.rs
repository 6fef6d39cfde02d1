//! Compiler parameter spaces, parametrization validation and exhaustive
//! enumeration of the constrained search space of one optimization run.
//!
//! A [`CompilerSpec`] is loaded from a TOML file (one per compiler version).
//! Word depth and word width are always present and always fixed by the
//! designer; every other parameter is an ordinal [`ParamDef`] whose choice
//! order is the encoding order.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const WORD_DEPTH: &str = "word_depth";
pub const WORD_WIDTH: &str = "word_width";

pub const DEPTH_RANGE: (u32, u32) = (32, 32_768);
pub const WIDTH_RANGE: (u32, u32) = (8, 320);
pub const MAX_CORNERS: usize = 20;
pub const MAX_PARAMS: usize = 10;

/// A discrete parameter value: either a number (banks, mux) or a label (VT flavor).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Label(String),
}

impl ParamValue {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            ParamValue::Int(v) => Some(*v),
            ParamValue::Label(_) => None,
        }
    }

    /// Parses a table cell: integers first, otherwise a label.
    pub fn parse(s: &str) -> Self {
        s.trim()
            .parse::<i64>()
            .map(ParamValue::Int)
            .unwrap_or_else(|_| ParamValue::Label(s.trim().to_string()))
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Label(s) => f.write_str(s),
        }
    }
}

impl From<i64> for ParamValue {
    fn from(v: i64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Label(v.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortConfig {
    #[serde(rename = "1RW")]
    OneRw,
    #[serde(rename = "1R1W")]
    OneROneW,
    #[serde(rename = "2RW")]
    TwoRw,
}

impl fmt::Display for PortConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PortConfig::OneRw => "1RW",
            PortConfig::OneROneW => "1R1W",
            PortConfig::TwoRw => "2RW",
        })
    }
}

impl std::str::FromStr for PortConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1RW" => Ok(PortConfig::OneRw),
            "1R1W" => Ok(PortConfig::OneROneW),
            "2RW" => Ok(PortConfig::TwoRw),
            other => Err(Error::field("port_config", format!("unknown port configuration {other}"))),
        }
    }
}

/// An ordinal compiler input. `choices` is ordered semantically (low < standard < high).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDef {
    pub name: String,
    pub choices: Vec<ParamValue>,
}

impl ParamDef {
    pub fn index_of(&self, v: &ParamValue) -> Option<usize> {
        self.choices.iter().position(|c| c == v)
    }
}

/// A (process, voltage, temperature) characterization point, as unitless factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerDef {
    pub name: String,
    pub process: f64,
    pub voltage: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SizeVar {
    #[serde(rename = "word_depth")]
    Depth,
    #[serde(rename = "word_width")]
    Width,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

/// `var op value`, e.g. `word_depth < 256`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub var: SizeVar,
    pub op: Cmp,
    pub value: u32,
}

impl Threshold {
    fn holds(&self, depth: u32, width: u32) -> bool {
        let lhs = match self.var {
            SizeVar::Depth => depth,
            SizeVar::Width => width,
        };
        match self.op {
            Cmp::Lt => lhs < self.value,
            Cmp::Le => lhs <= self.value,
            Cmp::Gt => lhs > self.value,
            Cmp::Ge => lhs >= self.value,
        }
    }
}

/// When every threshold in `when` holds, `param` is restricted to `allowed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRule {
    pub param: String,
    pub when: Vec<Threshold>,
    pub allowed: Vec<ParamValue>,
}

impl ConstraintRule {
    pub fn applies(&self, depth: u32, width: u32) -> bool {
        self.when.iter().all(|t| t.holds(depth, width))
    }
}

/// Selects which synthetic oracle coefficient ranges a compiler uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleProfile {
    #[default]
    Standard,
    NearLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ValueItem {
    One(u32),
    Range { start: u32, end: u32, step: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawSpec {
    compiler_id: String,
    version: String,
    port_config: PortConfig,
    #[serde(default)]
    oracle_profile: OracleProfile,
    depth_values: Vec<ValueItem>,
    width_values: Vec<ValueItem>,
    #[serde(default)]
    params: Vec<ParamDef>,
    corners: Vec<CornerDef>,
    #[serde(default)]
    rules: Vec<ConstraintRule>,
}

/// Parameter space and corner set of one compiler version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct CompilerSpec {
    pub compiler_id: String,
    pub version: String,
    pub port_config: PortConfig,
    pub oracle_profile: OracleProfile,
    /// Ordinal parameters other than word depth and width, in encoding order.
    pub params: Vec<ParamDef>,
    pub depth_values: Vec<u32>,
    pub width_values: Vec<u32>,
    pub corners: Vec<CornerDef>,
    pub rules: Vec<ConstraintRule>,
}

fn expand(items: &[ValueItem], what: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for item in items {
        match *item {
            ValueItem::One(v) => out.push(v),
            ValueItem::Range { start, end, step } => {
                if step == 0 || end < start {
                    return Err(Error::InvalidSpec(format!("bad {what} range {start}..={end} step {step}")));
                }
                out.extend((start..=end).step_by(step as usize));
            }
        }
    }
    Ok(out)
}

impl TryFrom<RawSpec> for CompilerSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let spec = CompilerSpec {
            depth_values: expand(&raw.depth_values, "depth")?,
            width_values: expand(&raw.width_values, "width")?,
            compiler_id: raw.compiler_id,
            version: raw.version,
            port_config: raw.port_config,
            oracle_profile: raw.oracle_profile,
            params: raw.params,
            corners: raw.corners,
            rules: raw.rules,
        };
        spec.check()?;
        Ok(spec)
    }
}

impl From<CompilerSpec> for RawSpec {
    fn from(s: CompilerSpec) -> Self {
        RawSpec {
            compiler_id: s.compiler_id,
            version: s.version,
            port_config: s.port_config,
            oracle_profile: s.oracle_profile,
            depth_values: s.depth_values.into_iter().map(ValueItem::One).collect(),
            width_values: s.width_values.into_iter().map(ValueItem::One).collect(),
            params: s.params,
            corners: s.corners,
            rules: s.rules,
        }
    }
}

fn strictly_increasing(v: &[u32]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl CompilerSpec {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
    }

    /// Loads every `*.toml` in `dir`, sorted by file name.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Vec<Self>> {
        let mut paths: Vec<_> = std::fs::read_dir(dir.as_ref())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        paths.iter().map(Self::load).collect()
    }

    /// `compiler_id@version`
    pub fn key(&self) -> String {
        format!("{}@{}", self.compiler_id, self.version)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(format!("{}: {m}", self.key())));
        if self.depth_values.is_empty() || !strictly_increasing(&self.depth_values) {
            return bad("depth_values must be non-empty and strictly increasing".into());
        }
        if self.width_values.is_empty() || !strictly_increasing(&self.width_values) {
            return bad("width_values must be non-empty and strictly increasing".into());
        }
        let (dlo, dhi) = DEPTH_RANGE;
        if self.depth_values[0] < dlo || *self.depth_values.last().unwrap() > dhi {
            return bad(format!("depth values must lie in [{dlo}, {dhi}]"));
        }
        let (wlo, whi) = WIDTH_RANGE;
        if self.width_values[0] < wlo || *self.width_values.last().unwrap() > whi {
            return bad(format!("width values must lie in [{wlo}, {whi}]"));
        }
        let total = self.params.len() + 2;
        if !(2..=MAX_PARAMS).contains(&total) {
            return bad(format!("{total} parameters, expected 2..={MAX_PARAMS}"));
        }
        for (i, p) in self.params.iter().enumerate() {
            if p.name == WORD_DEPTH || p.name == WORD_WIDTH {
                return bad(format!("{} is implicit and must not be declared", p.name));
            }
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return bad(format!("duplicate parameter {}", p.name));
            }
            if !(2..=4).contains(&p.choices.len()) {
                return bad(format!("parameter {} has {} choices, expected 2..=4", p.name, p.choices.len()));
            }
            for (j, c) in p.choices.iter().enumerate() {
                if p.choices[..j].contains(c) {
                    return bad(format!("parameter {} lists {c} twice", p.name));
                }
            }
        }
        if self.corners.is_empty() || self.corners.len() > MAX_CORNERS {
            return bad(format!("{} corners, expected 1..={MAX_CORNERS}", self.corners.len()));
        }
        for (i, c) in self.corners.iter().enumerate() {
            if self.corners[..i].iter().any(|d| d.name == c.name) {
                return bad(format!("duplicate corner {}", c.name));
            }
            if !(c.process > 0.0 && c.voltage > 0.0 && c.temperature > 0.0) {
                return bad(format!("corner {} has a non-positive factor", c.name));
            }
        }
        for r in &self.rules {
            let Some(def) = self.param(&r.param) else {
                return bad(format!("rule references unknown parameter {}", r.param));
            };
            if r.allowed.is_empty() || r.allowed.iter().any(|v| def.index_of(v).is_none()) {
                return bad(format!("rule on {} must allow a non-empty subset of its choices", r.param));
            }
        }
        Ok(())
    }

    pub fn param(&self, name: &str) -> Option<&ParamDef> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    /// Ordinal parameters followed by word depth and word width.
    pub fn input_names(&self) -> Vec<String> {
        self.params
            .iter()
            .map(|p| p.name.clone())
            .chain([WORD_DEPTH.to_string(), WORD_WIDTH.to_string()])
            .collect()
    }

    pub fn corner_index(&self, name: &str) -> Option<usize> {
        self.corners.iter().position(|c| c.name == name)
    }

    pub fn corner_names(&self) -> Vec<String> {
        self.corners.iter().map(|c| c.name.clone()).collect()
    }

    pub fn n_targets(&self) -> usize {
        self.corners.len() * 5 + 1
    }

    /// Smallest and largest size in bits this compiler can produce.
    pub fn size_range(&self) -> (u64, u64) {
        let lo = u64::from(self.depth_values[0]) * u64::from(self.width_values[0]);
        let hi = u64::from(*self.depth_values.last().unwrap()) * u64::from(*self.width_values.last().unwrap());
        (lo, hi)
    }

    /// Whether this compiler offers the given word depth and width.
    pub fn supports_size(&self, depth: u32, width: u32) -> std::result::Result<(), String> {
        if self.depth_values.binary_search(&depth).is_err() {
            return Err(format!("word depth {depth} outside the compiler's legal depths"));
        }
        if self.width_values.binary_search(&width).is_err() {
            return Err(format!("word width {width} outside the compiler's legal widths"));
        }
        Ok(())
    }

    /// Indices of the choices of parameter `pi` that are legal at this size.
    pub fn allowed_choices(&self, pi: usize, depth: u32, width: u32) -> Vec<usize> {
        let def = &self.params[pi];
        let mut mask = vec![true; def.choices.len()];
        for r in self.rules.iter().filter(|r| r.param == def.name && r.applies(depth, width)) {
            for (ci, c) in def.choices.iter().enumerate() {
                if !r.allowed.contains(c) {
                    mask[ci] = false;
                }
            }
        }
        (0..def.choices.len()).filter(|&i| mask[i]).collect()
    }
}

/// One concrete assignment of every compiler input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Parametrization {
    pub compiler_id: String,
    pub version: String,
    pub values: BTreeMap<String, ParamValue>,
}

impl Parametrization {
    pub fn depth(&self) -> Option<u32> {
        self.size_value(WORD_DEPTH)
    }

    pub fn width(&self) -> Option<u32> {
        self.size_value(WORD_WIDTH)
    }

    fn size_value(&self, key: &str) -> Option<u32> {
        self.values.get(key)?.as_int().and_then(|v| u32::try_from(v).ok())
    }

    pub fn size_bits(&self) -> Option<u64> {
        Some(u64::from(self.depth()?) * u64::from(self.width()?))
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }
}

impl fmt::Display for Parametrization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.compiler_id, self.version)?;
        for (k, v) in &self.values {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub param: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    pub violations: Vec<Violation>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let msg = self
            .violations
            .iter()
            .map(|v| format!("{}: {}", v.param, v.message))
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::IllegalParametrization(msg))
    }
}

/// Checks `p` against `spec`.
///
/// Missing, unknown or non-integer size parameters are structural errors;
/// values outside their choice set or forbidden by a rule are violations.
pub fn validate(spec: &CompilerSpec, p: &Parametrization) -> Result<Validation> {
    if p.compiler_id != spec.compiler_id || p.version != spec.version {
        return Err(Error::Structure(format!(
            "parametrization targets {}@{}, spec is {}",
            p.compiler_id,
            p.version,
            spec.key()
        )));
    }
    for name in p.values.keys() {
        if name != WORD_DEPTH && name != WORD_WIDTH && spec.param(name).is_none() {
            return Err(Error::Structure(format!("unknown parameter {name}")));
        }
    }
    for name in spec.input_names() {
        if !p.values.contains_key(&name) {
            return Err(Error::Structure(format!("missing parameter {name}")));
        }
    }
    let (Some(depth), Some(width)) = (p.depth(), p.width()) else {
        return Err(Error::Structure("word depth and width must be positive integers".into()));
    };

    let mut out = Validation::default();
    if spec.depth_values.binary_search(&depth).is_err() {
        out.violations.push(Violation {
            param: WORD_DEPTH.into(),
            message: format!("{depth} is not a legal depth"),
        });
    }
    if spec.width_values.binary_search(&width).is_err() {
        out.violations.push(Violation {
            param: WORD_WIDTH.into(),
            message: format!("{width} is not a legal width"),
        });
    }
    for (pi, def) in spec.params.iter().enumerate() {
        let v = &p.values[&def.name];
        match def.index_of(v) {
            None => out.violations.push(Violation {
                param: def.name.clone(),
                message: format!("{v} is not one of its choices"),
            }),
            Some(ci) => {
                if !spec.allowed_choices(pi, depth, width).contains(&ci) {
                    out.violations.push(Violation {
                        param: def.name.clone(),
                        message: format!("{v} is forbidden at depth {depth}, width {width}"),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Designer-fixed values. Word depth and word width are mandatory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Fixed {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port_config: Option<PortConfig>,
    pub values: BTreeMap<String, ParamValue>,
}

impl Fixed {
    pub fn size(depth: u32, width: u32) -> Self {
        let mut values = BTreeMap::new();
        values.insert(WORD_DEPTH.to_string(), ParamValue::Int(depth.into()));
        values.insert(WORD_WIDTH.to_string(), ParamValue::Int(width.into()));
        Fixed { port_config: None, values }
    }

    pub fn with(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.values.insert(name.to_string(), value.into());
        self
    }

    pub fn with_port(mut self, port: PortConfig) -> Self {
        self.port_config = Some(port);
        self
    }

    pub fn depth_width(&self) -> Result<(u32, u32)> {
        let get = |k: &str| -> Result<u32> {
            let v = self
                .values
                .get(k)
                .ok_or_else(|| Error::field(k, "must always be specified"))?;
            v.as_int()
                .and_then(|v| u32::try_from(v).ok())
                .ok_or_else(|| Error::field(k, format!("{v} is not a positive integer")))
        };
        Ok((get(WORD_DEPTH)?, get(WORD_WIDTH)?))
    }
}

/// A parameter left open for the optimizer, with its legal choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub name: String,
    pub choices: Vec<ParamValue>,
}

/// Legal choices of every parameter not in `fixed`, in spec order.
pub fn free_choices(spec: &CompilerSpec, fixed: &Fixed) -> Result<Vec<FreeParam>> {
    let (depth, width) = fixed.depth_width()?;
    for name in fixed.values.keys() {
        if name != WORD_DEPTH && name != WORD_WIDTH && spec.param(name).is_none() {
            return Err(Error::Structure(format!("unknown parameter {name}")));
        }
    }
    let not_applicable = |reason: String| Error::NotApplicable {
        compiler: spec.key(),
        reason,
    };
    if let Some(port) = fixed.port_config {
        if port != spec.port_config {
            return Err(not_applicable(format!("port configuration {} != {port}", spec.port_config)));
        }
    }
    spec.supports_size(depth, width).map_err(not_applicable)?;

    let mut out = Vec::new();
    for (pi, def) in spec.params.iter().enumerate() {
        let allowed = spec.allowed_choices(pi, depth, width);
        match fixed.values.get(&def.name) {
            Some(v) => {
                let legal = def.index_of(v).is_some_and(|ci| allowed.contains(&ci));
                if !legal {
                    return Err(not_applicable(format!("fixed {}={v} is not legal here", def.name)));
                }
            }
            None => out.push(FreeParam {
                name: def.name.clone(),
                choices: allowed.iter().map(|&ci| def.choices[ci].clone()).collect(),
            }),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// Index of the compiler spec in the list handed to [`enumerate_solutions`].
    pub spec: usize,
    pub parametrization: Parametrization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCompiler {
    pub compiler: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub solutions: Vec<Solution>,
    pub skipped: Vec<SkippedCompiler>,
}

/// Exact Cartesian product of the free choices of every applicable compiler.
///
/// Order: spec order, then lexicographic over choice indices with the first
/// free parameter most significant.
pub fn enumerate_solutions(specs: &[CompilerSpec], fixed: &Fixed) -> Result<Enumeration> {
    fixed.depth_width()?;
    let mut solutions = Vec::new();
    let mut skipped = Vec::new();
    for (si, spec) in specs.iter().enumerate() {
        let free = match free_choices(spec, fixed) {
            Ok(f) => f,
            Err(Error::NotApplicable { compiler, reason }) => {
                skipped.push(SkippedCompiler { compiler, reason });
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut base = fixed.values.clone();
        base.retain(|k, _| k == WORD_DEPTH || k == WORD_WIDTH || spec.param(k).is_some());
        let mut idx = vec![0usize; free.len()];
        loop {
            let mut values = base.clone();
            for (fp, &ci) in free.iter().zip(&idx) {
                values.insert(fp.name.clone(), fp.choices[ci].clone());
            }
            solutions.push(Solution {
                spec: si,
                parametrization: Parametrization {
                    compiler_id: spec.compiler_id.clone(),
                    version: spec.version.clone(),
                    values,
                },
            });
            // odometer, last parameter fastest
            let mut k = free.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < free[k].choices.len() {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if free.is_empty() || k == usize::MAX {
                break;
            }
        }
    }
    if solutions.is_empty() {
        let why = skipped
            .iter()
            .map(|s| format!("{}: {}", s.compiler, s.reason))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::EmptySearchSpace(if why.is_empty() {
            "no compilers given".into()
        } else {
            why
        }));
    }
    Ok(Enumeration { solutions, skipped })
}
