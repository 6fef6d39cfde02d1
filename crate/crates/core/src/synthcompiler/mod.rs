//! Deterministic synthetic memory compiler.
//!
//! Produces ground-truth PPA for any legal parametrization from a closed-form
//! skeleton whose coefficients are drawn per compiler version. It stands in
//! for a proprietary compiler so the learning pipeline can be trained and
//! verified end to end.

mod table;

pub use table::{read_table, write_table, TableRow};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::paramspace::{validate, CompilerSpec, OracleProfile, Parametrization};
use crate::seed;

/// Default number of concurrent compiler workers.
pub const DEFAULT_WORKERS: usize = 20;

/// The six PPA dimensions. Every dimension except area has one variable per corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Area,
    AccessTime,
    CycleTime,
    ReadPower,
    WritePower,
    Leakage,
}

impl Dimension {
    pub const ALL: [Dimension; 6] = [
        Dimension::Area,
        Dimension::AccessTime,
        Dimension::CycleTime,
        Dimension::ReadPower,
        Dimension::WritePower,
        Dimension::Leakage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Area => "area",
            Dimension::AccessTime => "access_time",
            Dimension::CycleTime => "cycle_time",
            Dimension::ReadPower => "read_power",
            Dimension::WritePower => "write_power",
            Dimension::Leakage => "leakage",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Dimension::Area => "um2",
            Dimension::AccessTime | Dimension::CycleTime => "ns",
            Dimension::ReadPower | Dimension::WritePower => "uA/MHz",
            Dimension::Leakage => "uA",
        }
    }

    /// Upper bound of the plausible output range.
    pub fn upper_bound(self) -> f64 {
        match self {
            Dimension::Area => 1e5,
            Dimension::AccessTime => 2.0,
            Dimension::CycleTime => 3.0,
            Dimension::ReadPower | Dimension::WritePower => 30.0,
            Dimension::Leakage => 1e5,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Option<Self> {
        Dimension::ALL.into_iter().find(|d| d.name() == s)
    }

    /// Indices of this dimension's variables in a flat record with `c` corners.
    pub fn variables(self, c: usize) -> std::ops::Range<usize> {
        match self {
            Dimension::Area => 0..1,
            d => {
                let start = 1 + (d.slot() - 1) * c;
                start..start + c
            }
        }
    }
}

/// Flat index of `dim` at corner `k`.
pub fn var_index(dim: Dimension, k: usize, c: usize) -> usize {
    match dim {
        Dimension::Area => 0,
        d => 1 + (d.slot() - 1) * c + k,
    }
}

/// Dimension of flat variable `i`.
pub fn var_dimension(i: usize, c: usize) -> Dimension {
    if i == 0 {
        Dimension::Area
    } else {
        Dimension::ALL[1 + (i - 1) / c]
    }
}

/// Column names of the `c * 5 + 1` target variables, e.g. `leakage@ss`.
pub fn variable_names(spec: &CompilerSpec) -> Vec<String> {
    let c = spec.corners.len();
    (0..c * 5 + 1)
        .map(|i| match var_dimension(i, c) {
            Dimension::Area => "area".to_string(),
            d => format!("{}@{}", d.name(), spec.corners[(i - 1) % c].name),
        })
        .collect()
}

/// PPA outputs of one parametrization.
///
/// Stored flat as `[area, access x c, cycle x c, read x c, write x c, leakage x c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PpaRecord {
    pub corners: usize,
    pub values: Vec<f64>,
}

impl PpaRecord {
    pub fn from_flat(corners: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != corners * 5 + 1 {
            return Err(Error::Shape(format!(
                "{} values for {corners} corners, expected {}",
                values.len(),
                corners * 5 + 1
            )));
        }
        Ok(PpaRecord { corners, values })
    }

    pub fn get(&self, dim: Dimension, k: usize) -> f64 {
        self.values[var_index(dim, k, self.corners)]
    }

    pub fn area(&self) -> f64 {
        self.values[0]
    }

    pub fn dimension(&self, dim: Dimension) -> &[f64] {
        &self.values[dim.variables(self.corners)]
    }
}

#[derive(Serialize, Deserialize)]
struct GroupedPpa {
    area: f64,
    access_time: Vec<f64>,
    cycle_time: Vec<f64>,
    read_power: Vec<f64>,
    write_power: Vec<f64>,
    leakage: Vec<f64>,
}

impl Serialize for PpaRecord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GroupedPpa {
            area: self.area(),
            access_time: self.dimension(Dimension::AccessTime).to_vec(),
            cycle_time: self.dimension(Dimension::CycleTime).to_vec(),
            read_power: self.dimension(Dimension::ReadPower).to_vec(),
            write_power: self.dimension(Dimension::WritePower).to_vec(),
            leakage: self.dimension(Dimension::Leakage).to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PpaRecord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let g = GroupedPpa::deserialize(d)?;
        let c = g.access_time.len();
        let groups = [&g.cycle_time, &g.read_power, &g.write_power, &g.leakage];
        if groups.iter().any(|v| v.len() != c) {
            return Err(serde::de::Error::custom("per-corner arrays differ in length"));
        }
        let mut values = vec![g.area];
        values.extend(&g.access_time);
        for v in groups {
            values.extend(v);
        }
        Ok(PpaRecord { corners: c, values })
    }
}

const VT_DELAY: [f64; 3] = [0.9, 1.0, 1.15];
const VT_LEAK: [f64; 3] = [3.0, 1.0, 0.4];

/// Coefficients of the synthetic PPA skeleton for one compiler version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub compiler_id: String,
    pub version: String,
    pub a0: f64,
    pub a1: f64,
    pub ar: f64,
    pub a2: f64,
    pub a3: f64,
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    pub c0: f64,
    pub c1: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub w: f64,
    pub l0: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

/// `(name, lo, hi)` sampling ranges of each coefficient.
pub fn coefficient_ranges(profile: OracleProfile) -> [(&'static str, f64, f64); 18] {
    match profile {
        OracleProfile::Standard => [
            ("a0", 300.0, 600.0),
            ("a1", 0.0035, 0.0045),
            ("ar", 0.02, 0.06),
            ("a2", 0.3, 0.6),
            ("a3", 0.5, 1.0),
            ("t0", 0.15, 0.25),
            ("t1", 0.045, 0.06),
            ("t2", 0.015, 0.025),
            ("c0", 1.08, 1.15),
            ("c1", 0.15, 0.3),
            ("p0", 0.8, 1.2),
            ("p1", 0.006, 0.009),
            ("p2", 0.0006, 0.0009),
            ("w", 0.05, 0.25),
            ("l0", 3.0, 8.0),
            ("l1", 0.001, 0.0012),
            ("l2", 1.5, 3.0),
            ("l3", 1.0, 2.0),
        ],
        OracleProfile::NearLinear => [
            ("a0", 300.0, 600.0),
            ("a1", 0.0035, 0.0045),
            ("ar", 0.02, 0.03),
            ("a2", 0.3, 0.4),
            ("a3", 0.5, 0.6),
            ("t0", 0.4, 0.5),
            ("t1", 0.02, 0.025),
            ("t2", 0.005, 0.01),
            ("c0", 1.08, 1.1),
            ("c1", 0.15, 0.2),
            ("p0", 2.0, 2.5),
            ("p1", 0.006, 0.007),
            ("p2", 0.0006, 0.0007),
            ("w", 0.1, 0.15),
            ("l0", 20.0, 30.0),
            ("l1", 0.001, 0.0011),
            ("l2", 1.5, 2.0),
            ("l3", 1.0, 1.5),
        ],
    }
}

impl CoefficientSet {
    /// Draws the coefficients of `spec` from `(master_seed, compiler_id, version)`.
    pub fn draw(spec: &CompilerSpec, master_seed: u64) -> Self {
        let mut rng = seed::rng(
            master_seed,
            &[seed::hash_str(&spec.compiler_id), seed::hash_str(&spec.version)],
        );
        let ranges = coefficient_ranges(spec.oracle_profile);
        let mut v = [0.0; 18];
        for (slot, (_, lo, hi)) in v.iter_mut().zip(ranges) {
            *slot = rng.random_range(lo..hi);
        }
        let [a0, a1, ar, a2, a3, t0, t1, t2, c0, c1, p0, p1, p2, w, l0, l1, l2, l3] = v;
        CoefficientSet {
            compiler_id: spec.compiler_id.clone(),
            version: spec.version.clone(),
            a0,
            a1,
            ar,
            a2,
            a3,
            t0,
            t1,
            t2,
            c0,
            c1,
            p0,
            p1,
            p2,
            w,
            l0,
            l1,
            l2,
            l3,
        }
    }
}

/// Architectural inputs of the skeleton, with defaults for parameters a
/// compiler does not expose.
struct Arch {
    banks: f64,
    mux: f64,
    max_mux: f64,
    vt: usize,
    red: f64,
}

fn arch_of(spec: &CompilerSpec, p: &Parametrization) -> Arch {
    let int = |name: &str, default: i64| p.get(name).and_then(|v| v.as_int()).unwrap_or(default) as f64;
    let ordinal = |name: &str, default: usize| {
        spec.param(name)
            .and_then(|d| p.get(name).and_then(|v| d.index_of(v)))
            .unwrap_or(default)
    };
    let max_mux = spec
        .param("column_mux")
        .and_then(|d| d.choices.iter().filter_map(|c| c.as_int()).max())
        .unwrap_or(1) as f64;
    Arch {
        banks: int("banks", 1),
        mux: int("column_mux", 1),
        max_mux,
        vt: ordinal("periphery_vt", 1).min(2),
        red: ordinal("redundancy", 0) as f64,
    }
}

/// Evaluates the skeleton without validating `p`.
fn evaluate(spec: &CompilerSpec, k: &CoefficientSet, p: &Parametrization) -> PpaRecord {
    let depth = f64::from(p.depth().unwrap_or(0));
    let width = f64::from(p.width().unwrap_or(0));
    let bits = depth * width;
    let a = arch_of(spec, p);
    let c = spec.corners.len();

    let mut values = vec![0.0; c * 5 + 1];
    values[0] = k.a0 + k.a1 * bits * (1.0 + k.ar * a.red) + k.a2 * a.banks * bits.sqrt() + k.a3 * width * a.mux;
    let base_access = k.t0 + k.t1 * (depth / a.banks).log2() + k.t2 * width.log2();
    let base_read = k.p0 + k.p1 * width * a.banks.sqrt() + k.p2 * depth / a.mux;
    let base_leak = k.l0 + k.l1 * bits * VT_LEAK[a.vt];
    for (i, corner) in spec.corners.iter().enumerate() {
        let access = base_access * VT_DELAY[a.vt] * corner.process / corner.voltage;
        let cycle = access * (k.c0 + k.c1 * a.mux / a.max_mux);
        let read = base_read * corner.voltage * corner.voltage;
        let write = read * (1.0 + k.w);
        let leak = base_leak * corner.process.powf(k.l2) * (k.l3 * (corner.temperature - 1.0)).exp();
        values[var_index(Dimension::AccessTime, i, c)] = access;
        values[var_index(Dimension::CycleTime, i, c)] = cycle;
        values[var_index(Dimension::ReadPower, i, c)] = read;
        values[var_index(Dimension::WritePower, i, c)] = write;
        values[var_index(Dimension::Leakage, i, c)] = leak;
    }
    PpaRecord { corners: c, values }
}

fn check_coeffs(spec: &CompilerSpec, coeffs: &CoefficientSet) -> Result<()> {
    if coeffs.compiler_id != spec.compiler_id || coeffs.version != spec.version {
        return Err(Error::CoefficientMismatch {
            expected: spec.key(),
            found: format!("{}@{}", coeffs.compiler_id, coeffs.version),
        });
    }
    Ok(())
}

/// Ground-truth PPA of a legal parametrization.
pub fn compile(spec: &CompilerSpec, coeffs: &CoefficientSet, p: &Parametrization) -> Result<PpaRecord> {
    check_coeffs(spec, coeffs)?;
    validate(spec, p)?.into_result()?;
    Ok(evaluate(spec, coeffs, p))
}

/// Compiles `ps` on a pool of `workers` threads, each call optionally
/// sleeping for `latency`. Output order follows input order; the error of the
/// lowest failing index is returned.
pub fn compile_batch(
    spec: &CompilerSpec,
    coeffs: &CoefficientSet,
    ps: &[Parametrization],
    latency: Option<Duration>,
    workers: usize,
) -> Result<Vec<PpaRecord>> {
    check_coeffs(spec, coeffs)?;
    if ps.is_empty() {
        return Ok(Vec::new());
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<PpaRecord>>>> = Mutex::new((0..ps.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, ps.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= ps.len() {
                    break;
                }
                if let Some(l) = latency {
                    std::thread::sleep(l);
                }
                let r = compile(spec, coeffs, &ps[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.expect("every index is visited").map_err(|e| Error::at(i, e)))
        .collect()
}
