//! Parameter files.
//!
//! Two encodings are accepted. The key/value form is
//!
//! ```text
//! # genus two sample
//! g = 2
//! w_plus.1  = 1.0  0.1
//! w_minus.1 = -1.0 0.0
//! rho.1     = 0.01 0.004
//! w_plus.2  = 1.2  2.5
//! w_minus.2 = -0.8 2.3
//! rho.2     = -0.012 0.003
//! ```
//!
//! where every value after `g` is a real and an imaginary part. The JSON form is
//! `{"g": 2, "handles": [{"w_plus": [re, im], "w_minus": [re, im], "rho": [re, im]}, ...]}`.
//! Unknown, missing and repeated keys are errors in both forms.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::params::{Handle, SchottkyParams};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonHandle {
    w_plus: [f64; 2],
    w_minus: [f64; 2],
    rho: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonParams {
    g: usize,
    handles: Vec<JsonHandle>,
}

pub fn parse_params(text: &str) -> Result<SchottkyParams> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_key_value(text)
    }
}

pub fn read_params(path: &std::path::Path) -> Result<SchottkyParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_params(&text)
}

fn parse_json(text: &str) -> Result<SchottkyParams> {
    let p: JsonParams = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if p.g == 0 {
        return Err(Error::Parse("g must be positive".into()));
    }
    if p.g != p.handles.len() {
        return Err(Error::Parse(format!("g = {} but {} handles listed", p.g, p.handles.len())));
    }
    let c = |v: [f64; 2]| C64::new(v[0], v[1]);
    let handles = p
        .handles
        .into_iter()
        .map(|h| Handle {
            w_plus: c(h.w_plus),
            w_minus: c(h.w_minus),
            rho: c(h.rho),
        })
        .collect();
    SchottkyParams::new(handles).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_key_value(text: &str) -> Result<SchottkyParams> {
    let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().to_string();
        if let Some((first, _)) = entries.get(&key) {
            return Err(Error::Parse(format!("line {}: duplicate key `{key}` (first on line {first})", n + 1)));
        }
        entries.insert(key, (n + 1, value.trim().to_string()));
    }
    let (gline, gval) = entries.remove("g").ok_or_else(|| Error::Parse("missing key `g`".into()))?;
    let g: usize = gval
        .parse()
        .map_err(|_| Error::Parse(format!("line {gline}: g must be a positive integer")))?;
    if g == 0 {
        return Err(Error::Parse(format!("line {gline}: g must be positive")));
    }
    let mut handles = Vec::with_capacity(g);
    for a in 1..=g {
        let mut take = |name: &str| -> Result<C64> {
            let key = format!("{name}.{a}");
            let (line, value) = entries.remove(&key).ok_or_else(|| Error::Parse(format!("missing key `{key}`")))?;
            parse_complex(&value).map_err(|m| Error::Parse(format!("line {line}: {m}")))
        };
        handles.push(Handle {
            w_plus: take("w_plus")?,
            w_minus: take("w_minus")?,
            rho: take("rho")?,
        });
    }
    if let Some((key, (line, _))) = entries.into_iter().next() {
        return Err(Error::Parse(format!("line {line}: unknown key `{key}`")));
    }
    SchottkyParams::new(handles).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_complex(value: &str) -> std::result::Result<C64, String> {
    let parts: Vec<&str> = value.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
    if parts.len() != 2 {
        return Err(format!("expected two reals, found `{value}`"));
    }
    let re: f64 = parts[0].parse().map_err(|_| format!("bad real `{}`", parts[0]))?;
    let im: f64 = parts[1].parse().map_err(|_| format!("bad real `{}`", parts[1]))?;
    if !(re.is_finite() && im.is_finite()) {
        return Err(format!("non-finite value `{value}`"));
    }
    Ok(C64::new(re, im))
}

/// Key/value rendering that parses back to identical parameters.
pub fn format_key_value(sp: &SchottkyParams) -> String {
    let mut out = format!("g = {}\n", sp.genus());
    for (i, h) in sp.handles().iter().enumerate() {
        let a = i + 1;
        out += &format!("w_plus.{a} = {:?} {:?}\n", h.w_plus.re, h.w_plus.im);
        out += &format!("w_minus.{a} = {:?} {:?}\n", h.w_minus.re, h.w_minus.im);
        out += &format!("rho.{a} = {:?} {:?}\n", h.rho.re, h.rho.im);
    }
    out
}

pub fn format_json(sp: &SchottkyParams) -> String {
    let p = JsonParams {
        g: sp.genus(),
        handles: sp
            .handles()
            .iter()
            .map(|h| JsonHandle {
                w_plus: [h.w_plus.re, h.w_plus.im],
                w_minus: [h.w_minus.re, h.w_minus.im],
                rho: [h.rho.re, h.rho.im],
            })
            .collect(),
    };
    serde_json::to_string_pretty(&p).expect("plain data serializes")
}
