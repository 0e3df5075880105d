//! Flat `key = value` experiment files.
//!
//! Keys before the first `[case]` header are shared defaults; each `[case]`
//! section overrides them and becomes its own grid. A value holding several
//! whitespace-separated items makes that key a grid axis, and a case expands
//! to the Cartesian product of its protocol axes. `F` also accepts
//! `lo:hi:count`. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use repeaterlab::pipeline::{self, ProtocolConfig};
use repeaterlab::{CodeSpec, HardwareParams};

use crate::error::CliError;

/// Every accepted key with its default, in emission order.
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("code", None),
    ("k", Some("2")),
    ("tau_c", Some("0.1")),
    ("one_minus_T", Some("0.001")),
    ("L", Some("1280")),
    ("L0", Some("20")),
    ("L_att", Some("25.5")),
    ("c", Some("200000000")),
    ("F", Some("0.51:0.99:49")),
    ("alpha", None),
    ("theta", Some("0.01")),
    ("target", Some("0.95")),
    ("trials", Some("100000")),
    ("blocks", Some("10000000")),
    ("seed", Some("1")),
    ("n", Some("3 11")),
    ("beta", None),
    ("error_target", Some("0.00001")),
    ("samples", Some("100")),
    ("q_g", Some("0.001 0.01")),
];

/// Keys whose lists span the protocol grid.
const PROTOCOL_AXES: &[&str] = &["code", "k", "tau_c", "one_minus_T", "L", "L0", "L_att", "c"];

/// Keys that accept several values without being protocol axes.
const LIST_KEYS: &[&str] = &["F", "alpha", "n", "q_g"];

/// Where a value came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Default,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("--set"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct RawValue {
    items: Vec<String>,
    origin: Origin,
}

type RawCase = BTreeMap<String, RawValue>;

fn err(origin: &Origin, key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{origin}: {key}: {msg}"))
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

fn split_assignment(text: &str) -> Option<(&str, &str)> {
    let (k, v) = text.split_once('=')?;
    Some((k.trim(), v.trim()))
}

fn insert(case: &mut RawCase, key: &str, value: &str, origin: Origin) -> Result<(), CliError> {
    if !known(key) {
        return Err(err(&origin, key, "unknown key"));
    }
    let value = value.trim_matches('"');
    let items: Vec<String> = value.split_whitespace().map(str::to_string).collect();
    if items.is_empty() {
        return Err(err(&origin, key, "empty value"));
    }
    if items.len() > 1 && !PROTOCOL_AXES.contains(&key) && !LIST_KEYS.contains(&key) {
        return Err(err(&origin, key, "takes a single value"));
    }
    case.insert(key.to_string(), RawValue { items, origin });
    Ok(())
}

/// Raw sections of a config file, before defaults and resolution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    shared: RawCase,
    cases: Vec<(usize, RawCase)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut file = ConfigFile::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && !line.contains('=') {
                if line != "[case]" {
                    return Err(CliError::Config(format!(
                        "line {line_no}: unknown section {line}; only [case] is allowed"
                    )));
                }
                file.cases.push((line_no, RawCase::new()));
                continue;
            }
            let (key, value) = split_assignment(line).ok_or_else(|| {
                CliError::Config(format!("line {line_no}: expected key = value, got {line:?}"))
            })?;
            let target = match file.cases.last_mut() {
                Some((_, case)) => case,
                None => &mut file.shared,
            };
            if target.contains_key(key) {
                return Err(err(&Origin::Line(line_no), key, "set twice in the same section"));
            }
            insert(target, key, value, Origin::Line(line_no))?;
        }
        Ok(file)
    }

    /// Applies `key=value` overrides to every case.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), CliError> {
        for o in overrides {
            let (key, value) = split_assignment(o).ok_or_else(|| {
                CliError::Config(format!("--set {o:?}: expected key=value"))
            })?;
            insert(&mut self.shared, key, value, Origin::Override)?;
            for (_, case) in &mut self.cases {
                case.remove(key);
            }
        }
        Ok(())
    }

    /// Fills defaults and validates every case.
    pub fn resolve(&self) -> Result<Vec<Case>, CliError> {
        let sections: Vec<(Option<usize>, RawCase)> = if self.cases.is_empty() {
            vec![(None, self.shared.clone())]
        } else {
            self.cases
                .iter()
                .map(|(line, c)| {
                    let mut merged = self.shared.clone();
                    merged.extend(c.clone());
                    (Some(*line), merged)
                })
                .collect()
        };
        sections
            .into_iter()
            .map(|(line, raw)| Case::resolve(line, &with_defaults(raw)))
            .collect()
    }
}

fn with_defaults(mut raw: RawCase) -> RawCase {
    for (key, default) in KEYS {
        if let Some(d) = default {
            raw.entry(key.to_string()).or_insert_with(|| RawValue {
                items: d.split_whitespace().map(str::to_string).collect(),
                origin: Origin::Default,
            });
        }
    }
    raw
}

fn parse_items<T: FromStr>(raw: &RawCase, key: &str) -> Result<Option<(Vec<T>, Origin)>, CliError>
where
    T::Err: std::fmt::Display,
{
    let Some(v) = raw.get(key) else {
        return Ok(None);
    };
    let parsed = v
        .items
        .iter()
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| err(&v.origin, key, format!("cannot parse {s:?}: {e}")))
        })
        .collect::<Result<Vec<T>, _>>()?;
    Ok(Some((parsed, v.origin.clone())))
}

fn required<T: FromStr>(raw: &RawCase, key: &str) -> Result<(Vec<T>, Origin), CliError>
where
    T::Err: std::fmt::Display,
{
    parse_items(raw, key)?.ok_or_else(|| CliError::Config(format!("missing required key {key}")))
}

fn scalar<T: FromStr + Clone>(raw: &RawCase, key: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    Ok(required::<T>(raw, key)?.0[0].clone())
}

fn parse_fidelities(raw: &RawCase) -> Result<Vec<f64>, CliError> {
    let v = &raw["F"];
    let mut out = Vec::new();
    for item in &v.items {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => out.push(
                one.parse::<f64>()
                    .map_err(|e| err(&v.origin, "F", format!("cannot parse {one:?}: {e}")))?,
            ),
            [lo, hi, count] => {
                let bad = |s: &str| err(&v.origin, "F", format!("bad range {s:?}"));
                let lo: f64 = lo.parse().map_err(|_| bad(item))?;
                let hi: f64 = hi.parse().map_err(|_| bad(item))?;
                let count: usize = count.parse().map_err(|_| bad(item))?;
                if count == 0 || hi < lo {
                    return Err(bad(item));
                }
                out.extend(pipeline::fidelity_grid(lo, hi, count));
            }
            _ => return Err(err(&v.origin, "F", format!("expected a number or lo:hi:count, got {item:?}"))),
        }
    }
    for f in &out {
        if !(*f > 0.5 && *f <= 1.0) {
            return Err(err(&v.origin, "F", format!("{f} is outside (0.5, 1]")));
        }
    }
    Ok(out)
}

/// One protocol point with the inputs it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseProtocol {
    pub config: ProtocolConfig,
    pub tau_c_s: f64,
    pub one_minus_t: f64,
}

impl CaseProtocol {
    /// Gate error probability, fixed when the config is loaded.
    pub fn q_g(&self) -> f64 {
        self.config.hardware().gate_error_prob()
    }
}

/// A fully validated section.
#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    /// Header line of the `[case]` section, if any.
    pub line: Option<usize>,
    /// Protocol grid; errors here are deferred until a subcommand needs it.
    protocols: Result<Vec<CaseProtocol>, CliError>,
    pub fidelities: Vec<f64>,
    pub alphas: Option<Vec<f64>>,
    pub theta: f64,
    pub target: f64,
    pub trials: u64,
    pub blocks: u64,
    pub seed: u64,
    pub qubus_n: Vec<usize>,
    pub beta: Option<f64>,
    pub error_target: f64,
    pub samples: usize,
    pub q_g: Vec<f64>,
    raw: RawCase,
}

impl Case {
    fn resolve(line: Option<usize>, raw: &RawCase) -> Result<Self, CliError> {
        let target: f64 = scalar(raw, "target")?;
        if !(target > 0.0 && target <= 1.0) {
            return Err(err(&raw["target"].origin, "target", "must lie in (0, 1]"));
        }
        let theta: f64 = scalar(raw, "theta")?;
        let trials: u64 = scalar(raw, "trials")?;
        let blocks: u64 = scalar(raw, "blocks")?;
        if trials == 0 {
            return Err(err(&raw["trials"].origin, "trials", "must be at least 1"));
        }
        if blocks == 0 {
            return Err(err(&raw["blocks"].origin, "blocks", "must be at least 1"));
        }
        let error_target: f64 = scalar(raw, "error_target")?;
        let q_g = required::<f64>(raw, "q_g")?.0;
        if let Some(bad) = q_g.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(err(&raw["q_g"].origin, "q_g", format!("{bad} is not a probability")));
        }
        Ok(Self {
            line,
            protocols: protocol_grid(raw),
            fidelities: parse_fidelities(raw)?,
            alphas: parse_items::<f64>(raw, "alpha")?.map(|(v, _)| v),
            theta,
            target,
            trials,
            blocks,
            seed: scalar(raw, "seed")?,
            qubus_n: required::<usize>(raw, "n")?.0,
            beta: parse_items::<f64>(raw, "beta")?.map(|(v, _)| v[0]),
            error_target,
            samples: scalar(raw, "samples")?,
            q_g,
            raw: raw.clone(),
        })
    }

    pub fn protocols(&self) -> Result<&[CaseProtocol], CliError> {
        self.protocols.as_deref().map_err(Clone::clone)
    }

    /// Initial fidelities for this case: the `F` list, or the channel
    /// fidelities for each `alpha` when that key is set.
    pub fn initial_fidelities(&self, protocol: &CaseProtocol) -> Result<Vec<f64>, CliError> {
        match &self.alphas {
            None => Ok(self.fidelities.clone()),
            Some(alphas) => alphas
                .iter()
                .map(|&a| {
                    protocol
                        .config
                        .fidelity_from_channel(a, self.theta)
                        .map_err(|e| err(&self.raw["alpha"].origin, "alpha", e))
                })
                .collect(),
        }
    }
}

fn protocol_grid(raw: &RawCase) -> Result<Vec<CaseProtocol>, CliError> {
    let (codes, code_origin) = required::<String>(raw, "code")?;
    let codes = codes
        .iter()
        .map(|s| s.parse::<CodeSpec>().map_err(|e| err(&code_origin, "code", e)))
        .collect::<Result<Vec<_>, _>>()?;
    let (ks, _) = required::<u32>(raw, "k")?;
    let (taus, tau_origin) = required::<f64>(raw, "tau_c")?;
    let (omts, omt_origin) = required::<f64>(raw, "one_minus_T")?;
    let (ls, l_origin) = required::<f64>(raw, "L")?;
    let (l0s, l0_origin) = required::<f64>(raw, "L0")?;
    let (latts, latt_origin) = required::<f64>(raw, "L_att")?;
    let (cs, c_origin) = required::<f64>(raw, "c")?;
    let positive = |vals: &[f64], origin: &Origin, key: &str| match vals.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        Some(bad) => Err(err(origin, key, format!("{bad} must be positive"))),
        None => Ok(()),
    };
    // an infinite coherence time is a valid idealization
    if let Some(bad) = taus.iter().find(|t| !(**t > 0.0)) {
        return Err(err(&tau_origin, "tau_c", format!("{bad} must be positive")));
    }
    positive(&ls, &l_origin, "L")?;
    positive(&l0s, &l0_origin, "L0")?;
    positive(&latts, &latt_origin, "L_att")?;
    positive(&cs, &c_origin, "c")?;
    if let Some(bad) = omts.iter().find(|v| !(**v >= 0.0 && **v < 1.0)) {
        return Err(err(&omt_origin, "one_minus_T", format!("{bad} is outside [0, 1)")));
    }
    let ratio_origin = if l0_origin != Origin::Default { &l0_origin } else { &l_origin };
    let mut out = Vec::new();
    for code in &codes {
        for &k in &ks {
            for &tau in &taus {
                for &omt in &omts {
                    for &l in &ls {
                        for &l0 in &l0s {
                            for &latt in &latts {
                                for &c in &cs {
                                    let hw = HardwareParams::with_fiber_speed(1.0 - omt, tau, c)
                                        .map_err(|e| err(&omt_origin, "one_minus_T", e))?;
                                    let config = ProtocolConfig::with_attenuation(
                                        l,
                                        l0,
                                        code.clone(),
                                        k,
                                        hw,
                                        latt,
                                    )
                                    .map_err(|e| err(ratio_origin, "L/L0", e))?;
                                    out.push(CaseProtocol {
                                        config,
                                        tau_c_s: tau,
                                        one_minus_t: omt,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Resolved configuration text; parsing it yields the same cases.
pub fn emit_config(cases: &[Case]) -> String {
    let mut out = String::new();
    for case in cases {
        out.push_str("[case]\n");
        for (key, _) in KEYS {
            if let Some(v) = case.raw.get(*key) {
                let value = if *key == "F" {
                    case.fidelities
                        .iter()
                        .map(|f| f.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                } else {
                    v.items.join(" ")
                };
                let _ = writeln!(out, "{key} = {value}");
            }
        }
        out.push('\n');
    }
    out
}

/// Parses text, applies overrides, and resolves every case.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<Vec<Case>, CliError> {
    let mut file = ConfigFile::parse(text)?;
    file.apply_overrides(overrides)?;
    file.resolve()
}
