//! INI-style channel configuration files.
//!
//! ```ini
//! # comments start with '#' or ';'
//! [global]
//! fs = 48000
//!
//! [channel.0]
//! mode = adm
//! lna_gain = 12
//! bpf.gm1 = 6.2832e-8
//! adm.delta_up = 10e-3
//! ```
//!
//! Every key names a [`ChannelConfig`] field (dotted for nested structs);
//! omitted keys keep their defaults. Unknown keys, duplicate keys and
//! duplicate sections are errors — a typo must never silently fall back to
//! a default. Parsing is purely structural; run
//! [`validate_config_set`](crate::config::validate_config_set) on the result
//! to check value ranges.

use std::path::Path;

use crate::config::{ChannelConfig, EncoderMode};
use crate::{Error, Result};

/// Keys from the `[global]` section.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Globals {
    /// Simulation sample rate in Hz, if pinned by the file.
    pub fs: Option<f64>,
}

enum Section {
    None,
    Global,
    Channel(usize),
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("{key}: expected a number, got {value:?}")))
}

fn parse_u8(line: usize, key: &str, value: &str) -> Result<u8> {
    value
        .parse::<u8>()
        .map_err(|_| Error::parse(line, format!("{key}: expected an integer 0..=255, got {value:?}")))
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::parse(
            line,
            format!("{key}: expected true or false, got {value:?}"),
        )),
    }
}

fn apply_channel_key(cfg: &mut ChannelConfig, line: usize, key: &str, value: &str) -> Result<()> {
    match key {
        "mode" => {
            cfg.mode = match value {
                "adm" => EncoderMode::Adm,
                "pfm" => EncoderMode::Pfm,
                _ => {
                    return Err(Error::parse(
                        line,
                        format!("mode: expected adm or pfm, got {value:?}"),
                    ))
                }
            }
        }
        "lna_gain" => cfg.lna_gain = parse_u8(line, key, value)?,
        "pga_gain" => cfg.pga_gain = parse_u8(line, key, value)?,
        "dsl_cutoff_hz" => cfg.dsl_cutoff_hz = parse_f64(line, key, value)?,
        "v_sat" => {
            cfg.v_sat = if value == "none" {
                None
            } else {
                Some(parse_f64(line, key, value)?)
            }
        }
        "bpf.gm1" => cfg.bpf.gm1 = parse_f64(line, key, value)?,
        "bpf.gm2" => cfg.bpf.gm2 = parse_f64(line, key, value)?,
        "bpf.c1_code" => cfg.bpf.c1_code = parse_u8(line, key, value)?,
        "bpf.c2_code" => cfg.bpf.c2_code = parse_u8(line, key, value)?,
        "bpf.c_base" => cfg.bpf.c_base = parse_f64(line, key, value)?,
        "adm.delta_up" => cfg.adm.delta_up = parse_f64(line, key, value)?,
        "adm.delta_dn" => cfg.adm.delta_dn = parse_f64(line, key, value)?,
        "adm.hysteresis" => cfg.adm.hysteresis = parse_f64(line, key, value)?,
        "adm.v_ref_init" => cfg.adm.v_ref_init = parse_f64(line, key, value)?,
        "adm.threshold_sigma" => cfg.adm.threshold_sigma = parse_f64(line, key, value)?,
        "pfm.gm_amp" => cfg.pfm.gm_amp = parse_f64(line, key, value)?,
        "pfm.c_mem" => cfg.pfm.c_mem = parse_f64(line, key, value)?,
        "pfm.v_th" => cfg.pfm.v_th = parse_f64(line, key, value)?,
        "pfm.v_reset" => cfg.pfm.v_reset = parse_f64(line, key, value)?,
        "pfm.i_leak" => cfg.pfm.i_leak = parse_f64(line, key, value)?,
        "pfm.t_refr" => cfg.pfm.t_refr = parse_f64(line, key, value)?,
        "noise.enabled" => cfg.noise.enabled = parse_bool(line, key, value)?,
        "noise.white_density" => cfg.noise.white_density = parse_f64(line, key, value)?,
        "noise.flicker_corner_hz" => cfg.noise.flicker_corner_hz = parse_f64(line, key, value)?,
        _ => return Err(Error::parse(line, format!("unknown channel key {key:?}"))),
    }
    Ok(())
}

/// Parses configuration text into globals and one config per declared
/// `[channel.N]` section, in declaration order.
pub fn parse_config(text: &str) -> Result<(Globals, Vec<ChannelConfig>)> {
    let mut globals = Globals::default();
    let mut channels: Vec<(u8, ChannelConfig)> = Vec::new();
    let mut section = Section::None;
    let mut seen_global = false;
    let mut seen_keys: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = match raw.find(['#', ';']) {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let stripped = stripped.trim();
        if stripped.is_empty() {
            continue;
        }

        if let Some(name) = stripped.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(line, format!("unterminated section header {stripped:?}")))?
                .trim();
            seen_keys.clear();
            if name == "global" {
                if seen_global {
                    return Err(Error::parse(line, "duplicate [global] section".to_string()));
                }
                seen_global = true;
                section = Section::Global;
            } else if let Some(n) = name.strip_prefix("channel.") {
                let ch: u8 = n.parse().map_err(|_| {
                    Error::parse(line, format!("bad channel index in section {name:?}"))
                })?;
                if channels.iter().any(|(c, _)| *c == ch) {
                    return Err(Error::parse(line, format!("duplicate section [channel.{ch}]")));
                }
                let mut cfg = ChannelConfig::default();
                cfg.channel = ch;
                channels.push((ch, cfg));
                section = Section::Channel(channels.len() - 1);
            } else {
                return Err(Error::parse(
                    line,
                    format!("unknown section {name:?}; expected global or channel.N"),
                ));
            }
            continue;
        }

        let (key, value) = stripped
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("expected key = value, got {stripped:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::parse(line, "empty key or value".to_string()));
        }
        if seen_keys.iter().any(|k| k == key) {
            return Err(Error::parse(line, format!("duplicate key {key:?} in this section")));
        }
        seen_keys.push(key.to_string());

        match section {
            Section::None => {
                return Err(Error::parse(line, "key outside of any section".to_string()))
            }
            Section::Global => match key {
                "fs" => globals.fs = Some(parse_f64(line, key, value)?),
                _ => return Err(Error::parse(line, format!("unknown global key {key:?}"))),
            },
            Section::Channel(i) => apply_channel_key(&mut channels[i].1, line, key, value)?,
        }
    }

    Ok((globals, channels.into_iter().map(|(_, c)| c).collect()))
}

/// Loads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<(Globals, Vec<ChannelConfig>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    parse_config(&text)
}

/// Renders globals and channel configs back to parseable text with every
/// key written out explicitly.
pub fn format_config(globals: &Globals, cfgs: &[ChannelConfig]) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    if let Some(fs) = globals.fs {
        let _ = writeln!(s, "[global]\nfs = {fs}\n");
    }
    for c in cfgs {
        let _ = writeln!(s, "[channel.{}]", c.channel);
        let _ = writeln!(s, "mode = {}", c.mode.as_str());
        let _ = writeln!(s, "lna_gain = {}", c.lna_gain);
        let _ = writeln!(s, "pga_gain = {}", c.pga_gain);
        let _ = writeln!(s, "dsl_cutoff_hz = {}", c.dsl_cutoff_hz);
        match c.v_sat {
            Some(v) => {
                let _ = writeln!(s, "v_sat = {v}");
            }
            None => {
                let _ = writeln!(s, "v_sat = none");
            }
        }
        let _ = writeln!(s, "bpf.gm1 = {}", c.bpf.gm1);
        let _ = writeln!(s, "bpf.gm2 = {}", c.bpf.gm2);
        let _ = writeln!(s, "bpf.c1_code = {}", c.bpf.c1_code);
        let _ = writeln!(s, "bpf.c2_code = {}", c.bpf.c2_code);
        let _ = writeln!(s, "bpf.c_base = {}", c.bpf.c_base);
        let _ = writeln!(s, "adm.delta_up = {}", c.adm.delta_up);
        let _ = writeln!(s, "adm.delta_dn = {}", c.adm.delta_dn);
        let _ = writeln!(s, "adm.hysteresis = {}", c.adm.hysteresis);
        let _ = writeln!(s, "adm.v_ref_init = {}", c.adm.v_ref_init);
        let _ = writeln!(s, "adm.threshold_sigma = {}", c.adm.threshold_sigma);
        let _ = writeln!(s, "pfm.gm_amp = {}", c.pfm.gm_amp);
        let _ = writeln!(s, "pfm.c_mem = {}", c.pfm.c_mem);
        let _ = writeln!(s, "pfm.v_th = {}", c.pfm.v_th);
        let _ = writeln!(s, "pfm.v_reset = {}", c.pfm.v_reset);
        let _ = writeln!(s, "pfm.i_leak = {}", c.pfm.i_leak);
        let _ = writeln!(s, "pfm.t_refr = {}", c.pfm.t_refr);
        let _ = writeln!(s, "noise.enabled = {}", c.noise.enabled);
        let _ = writeln!(s, "noise.white_density = {}", c.noise.white_density);
        let _ = writeln!(s, "noise.flicker_corner_hz = {}", c.noise.flicker_corner_hz);
        let _ = writeln!(s);
    }
    s
}
