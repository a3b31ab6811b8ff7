//! Power-flow case ingestion: IEEE Common Data Format and a line-oriented
//! native format, plus switched-line placements.
//!
//! All electrical quantities are stored per unit on the case MVA base.
//! Loads and generator outputs given in MW/MVAR in the input files are
//! converted on parse.

use crate::error::{Error, Result};
use std::collections::{HashMap, HashSet};
use std::fmt;

/// Bus type flag, following the Common Data Format codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    /// Load bus (codes 0 and 1).
    Load,
    /// Generator bus holding voltage (code 2).
    Generator,
    /// Swing bus holding voltage and angle (code 3).
    Slack,
}

#[derive(Debug, Clone)]
pub struct Bus {
    pub id: i32,
    pub kind: BusKind,
    /// Load in per unit.
    pub p_load: f64,
    pub q_load: f64,
    /// Shunt admittance in per unit.
    pub g_shunt: f64,
    pub b_shunt: f64,
    pub voltage: f64,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub from: i32,
    pub to: i32,
    pub resistance: f64,
    pub reactance: f64,
    /// Total line-charging susceptance, per unit.
    pub charging: f64,
    /// Off-nominal turns ratio on the from side; 0 means a plain line.
    pub tap: f64,
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub bus: i32,
    /// Active power output, per unit.
    pub p_gen: f64,
}

/// Parsed bus/branch/generator records of a power-flow case.
#[derive(Debug, Clone)]
pub struct CaseData {
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

/// Successful parse plus any skipped-record warnings.
#[derive(Debug)]
pub struct CaseParse {
    pub case: CaseData,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    Cdf,
    Native,
}

impl CaseData {
    /// Index of `bus_id` in `buses`, or a validation error naming it.
    pub fn bus_index(&self, bus_id: i32) -> Result<usize> {
        self.buses
            .iter()
            .position(|b| b.id == bus_id)
            .ok_or_else(|| Error::validation(format!("unknown bus id {bus_id}")))
    }

    pub fn bus_index_map(&self) -> HashMap<i32, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id, i))
            .collect()
    }

    /// Bus ids carrying a generator.
    pub fn generator_buses(&self) -> HashSet<i32> {
        self.generators.iter().map(|g| g.bus).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(Error::validation("MVA base must be positive"));
        }
        let mut seen = HashSet::new();
        for b in &self.buses {
            if !seen.insert(b.id) {
                return Err(Error::validation(format!("duplicate bus id {}", b.id)));
            }
            for (name, v) in [
                ("p_load", b.p_load),
                ("q_load", b.q_load),
                ("g_shunt", b.g_shunt),
                ("b_shunt", b.b_shunt),
            ] {
                if !v.is_finite() {
                    return Err(Error::validation(format!(
                        "bus {}: non-finite {name}",
                        b.id
                    )));
                }
            }
        }
        for (i, br) in self.branches.iter().enumerate() {
            if !seen.contains(&br.from) || !seen.contains(&br.to) {
                return Err(Error::validation(format!(
                    "branch {i} references missing bus ({} or {})",
                    br.from, br.to
                )));
            }
            if !(br.resistance.is_finite() && br.reactance.is_finite()) {
                return Err(Error::validation(format!(
                    "branch {i}: non-finite impedance"
                )));
            }
        }
        if self.generators.is_empty() {
            return Err(Error::validation("case has no generators"));
        }
        for g in &self.generators {
            if !seen.contains(&g.bus) {
                return Err(Error::validation(format!(
                    "generator references missing bus {}",
                    g.bus
                )));
            }
        }
        Ok(())
    }
}

/// Parses a case file. `text` must be non-empty.
pub fn parse_case(text: &str, format: CaseFormat) -> Result<CaseParse> {
    if text.trim().is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "empty case file".into(),
        });
    }
    let parsed = match format {
        CaseFormat::Cdf => parse_cdf(text)?,
        CaseFormat::Native => parse_native(text)?,
    };
    parsed.case.validate()?;
    Ok(parsed)
}

/// Guesses the format from content: CDF files carry a `BUS DATA FOLLOWS`
/// section header.
pub fn detect_format(text: &str) -> CaseFormat {
    if text.contains("BUS DATA FOLLOWS") {
        CaseFormat::Cdf
    } else {
        CaseFormat::Native
    }
}

// ---------------------------------------------------------------------------
// IEEE Common Data Format (fixed columns)
// ---------------------------------------------------------------------------

/// Extracts 1-indexed inclusive columns `[a, b]` from a record, if present.
fn cols(line: &str, a: usize, b: usize) -> &str {
    let bytes = line.as_bytes();
    if a > bytes.len() {
        return "";
    }
    let end = b.min(bytes.len());
    std::str::from_utf8(&bytes[a - 1..end]).unwrap_or("").trim()
}

fn field_f64(line: &str, a: usize, b: usize, lineno: usize, what: &str) -> Result<f64> {
    let s = cols(line, a, b);
    if s.is_empty() {
        return Ok(0.0);
    }
    s.parse().map_err(|_| Error::Parse {
        line: lineno,
        message: format!("bad {what} field {s:?} in columns {a}-{b}"),
    })
}

fn field_i32(line: &str, a: usize, b: usize, lineno: usize, what: &str) -> Result<i32> {
    let s = cols(line, a, b);
    if s.is_empty() {
        return Ok(0);
    }
    s.parse().map_err(|_| Error::Parse {
        line: lineno,
        message: format!("bad {what} field {s:?} in columns {a}-{b}"),
    })
}

fn parse_cdf(text: &str) -> Result<CaseParse> {
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Bus,
        Branch,
        Other,
    }

    let mut base_mva = 100.0;
    let mut buses = Vec::new();
    let mut branches = Vec::new();
    let mut generators = Vec::new();
    let mut warnings = Vec::new();
    let mut section = Section::Preamble;
    let mut saw_title = false;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if !saw_title {
            saw_title = true;
            // title card: MVA base in columns 32-37
            if let Ok(v) = field_f64(line, 32, 37, lineno, "mva base") {
                if v > 0.0 {
                    base_mva = v;
                }
            }
            continue;
        }
        let upper = line.trim_start().to_ascii_uppercase();
        if upper.starts_with("BUS DATA FOLLOWS") {
            section = Section::Bus;
            continue;
        }
        if upper.starts_with("BRANCH DATA FOLLOWS") {
            section = Section::Branch;
            continue;
        }
        if upper.starts_with("LOSS ZONES FOLLOWS")
            || upper.starts_with("INTERCHANGE DATA FOLLOWS")
            || upper.starts_with("TIE LINES FOLLOWS")
        {
            section = Section::Other;
            continue;
        }
        if upper.starts_with("END OF DATA") {
            break;
        }
        if upper.starts_with("-9") {
            section = Section::Preamble;
            continue;
        }
        match section {
            Section::Bus => {
                let id = field_i32(line, 1, 4, lineno, "bus id")?;
                if id == 0 {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "bus record without a bus number".into(),
                    });
                }
                let kind = match field_i32(line, 25, 26, lineno, "bus type")? {
                    3 => BusKind::Slack,
                    2 => BusKind::Generator,
                    0 | 1 => BusKind::Load,
                    other => {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("unknown bus type code {other}"),
                        })
                    }
                };
                buses.push(Bus {
                    id,
                    kind,
                    voltage: field_f64(line, 28, 33, lineno, "voltage")?,
                    p_load: field_f64(line, 41, 49, lineno, "load MW")? / base_mva,
                    q_load: field_f64(line, 50, 59, lineno, "load MVAR")? / base_mva,
                    g_shunt: field_f64(line, 107, 114, lineno, "shunt G")?,
                    b_shunt: field_f64(line, 115, 122, lineno, "shunt B")?,
                });
                // generation MW lives in the bus record
                let p_gen = field_f64(line, 60, 67, lineno, "gen MW")? / base_mva;
                if matches!(kind, BusKind::Generator | BusKind::Slack) {
                    generators.push(Generator { bus: id, p_gen });
                }
            }
            Section::Branch => {
                let from = field_i32(line, 1, 4, lineno, "from bus")?;
                let to = field_i32(line, 6, 9, lineno, "to bus")?;
                if from == 0 || to == 0 {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "branch record without both endpoints".into(),
                    });
                }
                branches.push(Branch {
                    from,
                    to,
                    resistance: field_f64(line, 20, 29, lineno, "resistance")?,
                    reactance: field_f64(line, 30, 40, lineno, "reactance")?,
                    charging: field_f64(line, 41, 50, lineno, "charging")?,
                    tap: field_f64(line, 77, 82, lineno, "tap ratio")?,
                });
            }
            Section::Other => {}
            Section::Preamble => {
                warnings.push(format!("line {lineno}: unrecognized record skipped"));
            }
        }
    }

    Ok(CaseParse {
        case: CaseData {
            base_mva,
            buses,
            branches,
            generators,
        },
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Native format
// ---------------------------------------------------------------------------
//
//   # comment
//   base <mva>
//   bus <id> <type 0|2|3> <Pd MW> <Qd MVAR> <Gs pu> <Bs pu> <Vm pu>
//   branch <from> <to> <r pu> <x pu> <b pu> <tap>
//   gen <bus> <Pg MW>
//
// Record order: bus records, then branch records, then generator records.

fn parse_native(text: &str) -> Result<CaseParse> {
    let mut base_mva = 100.0;
    let mut buses = Vec::new();
    let mut branches = Vec::new();
    let mut generators = Vec::new();
    let mut warnings = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let tag = it.next().unwrap();
        let rest: Vec<&str> = it.collect();
        let num = |k: usize, what: &str| -> Result<f64> {
            rest.get(k)
                .ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: format!("missing {what} field"),
                })?
                .parse()
                .map_err(|_| Error::Parse {
                    line: lineno,
                    message: format!("bad {what} field {:?}", rest[k]),
                })
        };
        match tag {
            "base" => base_mva = num(0, "mva base")?,
            "bus" => {
                let kind = match num(1, "bus type")? as i32 {
                    3 => BusKind::Slack,
                    2 => BusKind::Generator,
                    0 | 1 => BusKind::Load,
                    other => {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("unknown bus type code {other}"),
                        })
                    }
                };
                buses.push(Bus {
                    id: num(0, "bus id")? as i32,
                    kind,
                    p_load: num(2, "Pd")? / base_mva,
                    q_load: num(3, "Qd")? / base_mva,
                    g_shunt: num(4, "Gs")?,
                    b_shunt: num(5, "Bs")?,
                    voltage: num(6, "Vm")?,
                });
            }
            "branch" => branches.push(Branch {
                from: num(0, "from bus")? as i32,
                to: num(1, "to bus")? as i32,
                resistance: num(2, "r")?,
                reactance: num(3, "x")?,
                charging: num(4, "b")?,
                tap: num(5, "tap")?,
            }),
            "gen" => generators.push(Generator {
                bus: num(0, "gen bus")? as i32,
                p_gen: num(1, "Pg")? / base_mva,
            }),
            _ => warnings.push(format!("line {lineno}: unknown record {tag:?} skipped")),
        }
    }

    Ok(CaseParse {
        case: CaseData {
            base_mva,
            buses,
            branches,
            generators,
        },
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Placements
// ---------------------------------------------------------------------------

/// Which lines are eligible to carry a switched capacitor and what it means
/// for a generator to be covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoverageRule {
    /// Only branches joining two generator buses are eligible; a generator is
    /// covered when a switched line joins its bus to another generator bus.
    #[default]
    GenToGen,
    /// Any branch incident to a generator bus is eligible; a generator is
    /// covered when a switched line touches its bus.
    AnyGenAdjacent,
}

impl CoverageRule {
    pub fn name(self) -> &'static str {
        match self {
            CoverageRule::GenToGen => "gen-to-gen",
            CoverageRule::AnyGenAdjacent => "any-gen-adjacent",
        }
    }
}

impl fmt::Display for CoverageRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The set of branch indices (0-based, into `CaseData::branches`) carrying a
/// series switched capacitor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    lines: Vec<usize>,
}

impl Placement {
    /// Builds a placement, rejecting duplicate or out-of-range indices.
    /// Indices are stored sorted.
    pub fn new(mut lines: Vec<usize>, case: &CaseData) -> Result<Self> {
        lines.sort_unstable();
        for w in lines.windows(2) {
            if w[0] == w[1] {
                return Err(Error::validation(format!(
                    "duplicate branch index {} in placement",
                    w[0]
                )));
            }
        }
        if let Some(&last) = lines.last() {
            if last >= case.branches.len() {
                return Err(Error::validation(format!(
                    "branch index {last} out of range (case has {} branches)",
                    case.branches.len()
                )));
            }
        }
        Ok(Placement { lines })
    }

    pub fn lines(&self) -> &[usize] {
        &self.lines
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn contains(&self, branch_index: usize) -> bool {
        self.lines.binary_search(&branch_index).is_ok()
    }

    /// Checks the coverage invariant for every generator under `rule`.
    pub fn validate_coverage(&self, case: &CaseData, rule: CoverageRule) -> Result<()> {
        let gen_buses = case.generator_buses();
        for g in &case.generators {
            let covered = self.lines.iter().any(|&i| {
                let br = &case.branches[i];
                match rule {
                    CoverageRule::GenToGen => {
                        (br.from == g.bus && gen_buses.contains(&br.to))
                            || (br.to == g.bus && gen_buses.contains(&br.from))
                    }
                    CoverageRule::AnyGenAdjacent => br.from == g.bus || br.to == g.bus,
                }
            });
            if !covered {
                return Err(Error::Coverage {
                    bus: g.bus,
                    rule: rule.name(),
                });
            }
        }
        Ok(())
    }

    /// Placement file format: one branch index per line, `#` comments allowed.
    pub fn from_text(text: &str, case: &CaseData) -> Result<Self> {
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let s = raw.split('#').next().unwrap_or("").trim();
            if s.is_empty() {
                continue;
            }
            let v: usize = s.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("bad branch index {s:?}"),
            })?;
            lines.push(v);
        }
        Placement::new(lines, case)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &i in &self.lines {
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }
}
