//! Flat `key = value` scenario files.
//!
//! ```text
//! # small network, two-channel bonding
//! num_users = 12
//! num_data_channels = 4
//! max_bond = 2
//! frame_bits = 5kB
//! channel_rate_bps = 200kb/s
//! pu_activity = 0.1
//! ```
//!
//! Keys that are absent keep the values of [`ScenarioConfig::small`]. Unknown
//! and repeated keys are rejected. Rates are bits per second, times seconds and
//! sizes bits; `b`/`kb`/`Mb` (bits) and `B`/`kB`/`MB` (bytes) suffixes are
//! accepted on sizes and rates, `s`/`ms`/`us` on times.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, ParseError};
use crate::model::{
    AccessProb, AdaptiveSchedule, BondingPolicy, DetectorMeta, Disruption, PenaltySpec, Priority,
    PuTraffic, RunDistribution, ScenarioConfig, ScheduleSegment, Selection,
};

/// Every key a scenario file may carry, in canonical output order.
pub const KEYS: &[&str] = &[
    "num_users",
    "num_data_channels",
    "max_bond",
    "access_prob",
    "slot_seconds",
    "sensing_seconds",
    "channel_rate_bps",
    "frame_bits",
    "pu_activity",
    "detect_prob",
    "false_alarm_prob",
    "penalty",
    "bonding_policy",
    "disruption",
    "selection",
    "priority",
    "pu_traffic",
    "pu_imbalance",
    "detector_meta",
];

const MAX_VALUE_LEN: usize = 4096;
const MAX_NUMBER_LEN: usize = 64;

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::small();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ParseError::new(line_no, "expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(ParseError::new(line_no, format!("duplicate key `{key}`")).into());
        }
        apply_setting(&mut cfg, key, value).map_err(|msg| ParseError::new(line_no, msg))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

impl FromStr for ScenarioConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_scenario(s)
    }
}

/// Set one field from its textual form. Does not validate the whole config.
pub fn apply_setting(cfg: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), String> {
    if value.len() > MAX_VALUE_LEN {
        return Err(format!("value for `{key}` is too long"));
    }
    match key {
        "num_users" => cfg.num_users = parse_count(value)?,
        "num_data_channels" => cfg.num_data_channels = parse_count(value)?,
        "max_bond" => cfg.max_bond = parse_count(value)?,
        "access_prob" => {
            cfg.access = if value.eq_ignore_ascii_case("auto") {
                AccessProb::Auto
            } else {
                AccessProb::Fixed(parse_number(value)?)
            }
        }
        "slot_seconds" => cfg.slot_seconds = parse_time(value)?,
        "sensing_seconds" => cfg.sensing_seconds = parse_time(value)?,
        "channel_rate_bps" => cfg.channel_rate_bps = parse_rate(value)?,
        "frame_bits" => cfg.frame_bits = parse_bits(value)?,
        "pu_activity" => cfg.pu_activity = parse_number(value)?,
        "detect_prob" => cfg.detect_prob = parse_number(value)?,
        "false_alarm_prob" => cfg.false_alarm_prob = parse_number(value)?,
        "penalty" => cfg.penalty = parse_penalty(value)?,
        "bonding_policy" => cfg.bonding_policy = parse_policy(value)?,
        "disruption" => {
            cfg.disruption = if value == "drop" {
                Disruption::Drop
            } else if let Some(rest) = value.strip_prefix("switch:") {
                Disruption::Switch {
                    switch_seconds: parse_time(rest)?,
                }
            } else {
                return Err(format!("unknown disruption `{value}` (drop | switch:<seconds>)"));
            }
        }
        "selection" => {
            cfg.selection = match value {
                "random" => Selection::Random,
                "least-used" => Selection::LeastUsed,
                _ => return Err(format!("unknown selection `{value}` (random | least-used)")),
            }
        }
        "priority" => {
            cfg.priority = if value == "none" {
                None
            } else {
                let (ph, b) = value
                    .split_once(':')
                    .ok_or_else(|| format!("priority `{value}` must be none or <p_h>:<buffer>"))?;
                Some(Priority {
                    high_prob: parse_number(ph)?,
                    buffer_size: parse_count_allow_zero(b)?,
                })
            }
        }
        "pu_traffic" => {
            let dist = |c: char| match c {
                'E' => Ok(RunDistribution::Geometric),
                'L' => Ok(RunDistribution::LogNormal),
                _ => Err(format!("unknown run distribution `{c}`")),
            };
            cfg.pu_traffic.model = match value {
                "iid" => PuTraffic::Iid,
                v if v.chars().count() == 2 => {
                    let mut it = v.chars();
                    let off = dist(it.next().unwrap_or('?'))?;
                    let on = dist(it.next().unwrap_or('?'))?;
                    PuTraffic::OnOff { off, on }
                }
                _ => return Err(format!("unknown PU traffic `{value}` (iid | EE | EL | LE | LL)")),
            }
        }
        "pu_imbalance" => cfg.pu_traffic.imbalance = parse_number(value)?,
        "detector_meta" => {
            cfg.detector_meta = if value == "none" {
                None
            } else {
                let parts: Vec<&str> = value.split(',').collect();
                if parts.len() != 3 {
                    return Err("detector_meta must be none or <W Hz>,<snr dB>,<threshold dB>".into());
                }
                Some(DetectorMeta {
                    bandwidth_hz: parse_number(parts[0])?,
                    snr_db: parse_number(parts[1])?,
                    threshold_db: parse_number(parts[2])?,
                })
            }
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Canonical text form; `parse_scenario(&to_scenario_text(c))` reproduces `c`.
pub fn to_scenario_text(cfg: &ScenarioConfig) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("num_users", cfg.num_users.to_string());
    put("num_data_channels", cfg.num_data_channels.to_string());
    put("max_bond", cfg.max_bond.to_string());
    put(
        "access_prob",
        match cfg.access {
            AccessProb::Auto => "auto".into(),
            AccessProb::Fixed(p) => p.to_string(),
        },
    );
    put("slot_seconds", cfg.slot_seconds.to_string());
    put("sensing_seconds", cfg.sensing_seconds.to_string());
    put("channel_rate_bps", cfg.channel_rate_bps.to_string());
    put("frame_bits", cfg.frame_bits.to_string());
    put("pu_activity", cfg.pu_activity.to_string());
    put("detect_prob", cfg.detect_prob.to_string());
    put("false_alarm_prob", cfg.false_alarm_prob.to_string());
    put(
        "penalty",
        match &cfg.penalty {
            PenaltySpec::Perfect => "perfect".into(),
            PenaltySpec::PowerLaw(a) => format!("power:{a}"),
            PenaltySpec::Table(t) => format!(
                "table:{}",
                t.iter()
                    .map(|(k, b)| format!("{k}={b}"))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        },
    );
    put(
        "bonding_policy",
        match &cfg.bonding_policy {
            BondingPolicy::Flexible => "flexible".into(),
            BondingPolicy::KOnly => "k-only".into(),
            BondingPolicy::Adaptive(s) => format!(
                "{}:{}",
                if s.k_only { "adaptive-k-only" } else { "adaptive" },
                s.segments
                    .iter()
                    .map(|seg| format!("{}={}", seg.pu_activity, seg.bond))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        },
    );
    put(
        "disruption",
        match cfg.disruption {
            Disruption::Drop => "drop".into(),
            Disruption::Switch { switch_seconds } => format!("switch:{switch_seconds}"),
        },
    );
    put(
        "selection",
        match cfg.selection {
            Selection::Random => "random".into(),
            Selection::LeastUsed => "least-used".into(),
        },
    );
    put(
        "priority",
        match cfg.priority {
            None => "none".into(),
            Some(p) => format!("{}:{}", p.high_prob, p.buffer_size),
        },
    );
    put(
        "pu_traffic",
        match cfg.pu_traffic.model {
            PuTraffic::Iid => "iid".into(),
            PuTraffic::OnOff { off, on } => {
                let c = |d| match d {
                    RunDistribution::Geometric => 'E',
                    RunDistribution::LogNormal => 'L',
                };
                format!("{}{}", c(off), c(on))
            }
        },
    );
    put("pu_imbalance", cfg.pu_traffic.imbalance.to_string());
    put(
        "detector_meta",
        match cfg.detector_meta {
            None => "none".into(),
            Some(d) => format!("{},{},{}", d.bandwidth_hz, d.snr_db, d.threshold_db),
        },
    );
    out
}

fn parse_penalty(value: &str) -> Result<PenaltySpec, String> {
    if value == "perfect" {
        return Ok(PenaltySpec::Perfect);
    }
    if let Some(a) = value.strip_prefix("power:") {
        return Ok(PenaltySpec::PowerLaw(parse_number(a)?));
    }
    if let Some(rest) = value.strip_prefix("table:") {
        let mut table = BTreeMap::new();
        for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (k, b) = item
                .split_once('=')
                .ok_or_else(|| format!("penalty table entry `{item}` must be <k>=<beta>"))?;
            if table.insert(parse_count(k)?, parse_number(b)?).is_some() {
                return Err(format!("penalty table repeats k = {}", k.trim()));
            }
        }
        return Ok(PenaltySpec::Table(table));
    }
    Err(format!("unknown penalty `{value}` (perfect | power:<a> | table:<k>=<beta>,...)"))
}

fn parse_policy(value: &str) -> Result<BondingPolicy, String> {
    match value {
        "flexible" => return Ok(BondingPolicy::Flexible),
        "k-only" => return Ok(BondingPolicy::KOnly),
        _ => {}
    }
    let (k_only, rest) = if let Some(rest) = value.strip_prefix("adaptive-k-only:") {
        (true, rest)
    } else if let Some(rest) = value.strip_prefix("adaptive:") {
        (false, rest)
    } else {
        return Err(format!(
            "unknown bonding policy `{value}` (flexible | k-only | adaptive:<q>=<k>,...)"
        ));
    };
    let segments = rest
        .split(',')
        .map(|item| {
            let (q, k) = item
                .split_once('=')
                .ok_or_else(|| format!("schedule entry `{item}` must be <q_p>=<k>"))?;
            Ok(ScheduleSegment {
                pu_activity: parse_number(q)?,
                bond: parse_count(k)?,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(BondingPolicy::Adaptive(AdaptiveSchedule { segments, k_only }))
}

/// Split `value` into the longest numeric prefix and a unit suffix.
fn split_unit(value: &str) -> Result<(f64, &str), String> {
    let value = value.trim();
    if value.is_empty() {
        return Err("empty value".into());
    }
    let limit = value.len().min(MAX_NUMBER_LEN);
    for end in (1..=limit).rev() {
        if !value.is_char_boundary(end) {
            continue;
        }
        let head = &value[..end];
        // `inf`/`nan` spellings are not numbers here.
        if head.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
            continue;
        }
        if let Ok(v) = head.parse::<f64>() {
            if !v.is_finite() {
                return Err(format!("`{value}` is not finite"));
            }
            return Ok((v, value[end..].trim()));
        }
    }
    Err(format!("`{value}` is not a number"))
}

fn parse_number(value: &str) -> Result<f64, String> {
    match split_unit(value)? {
        (v, "") => Ok(v),
        (_, unit) => Err(format!("unexpected suffix `{unit}`")),
    }
}

fn parse_count(value: &str) -> Result<u32, String> {
    let n = parse_count_allow_zero(value)?;
    if n == 0 {
        return Err("count must be positive".into());
    }
    Ok(n)
}

fn parse_count_allow_zero(value: &str) -> Result<u32, String> {
    value
        .trim()
        .parse::<u32>()
        .map_err(|_| format!("`{}` is not a non-negative integer", value.trim()))
}

fn bit_multiplier(unit: &str) -> Option<f64> {
    Some(match unit {
        "" | "b" | "bit" | "bits" => 1.0,
        "kb" | "Kb" | "kbit" => 1e3,
        "Mb" | "Mbit" => 1e6,
        "B" => 8.0,
        "kB" | "KB" => 8e3,
        "MB" => 8e6,
        _ => return None,
    })
}

fn parse_bits(value: &str) -> Result<f64, String> {
    let (v, unit) = split_unit(value)?;
    bit_multiplier(unit)
        .map(|m| v * m)
        .ok_or_else(|| format!("unknown size unit `{unit}`"))
}

fn parse_rate(value: &str) -> Result<f64, String> {
    let (v, unit) = split_unit(value)?;
    let base = unit
        .strip_suffix("/s")
        .or_else(|| unit.strip_suffix("ps"))
        .unwrap_or(unit);
    bit_multiplier(base)
        .map(|m| v * m)
        .ok_or_else(|| format!("unknown rate unit `{unit}`"))
}

fn parse_time(value: &str) -> Result<f64, String> {
    let (v, unit) = split_unit(value)?;
    let m = match unit {
        "" | "s" => 1.0,
        "ms" => 1e-3,
        "us" | "µs" => 1e-6,
        _ => return Err(format!("unknown time unit `{unit}`")),
    };
    Ok(v * m)
}
