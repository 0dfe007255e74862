//! Line grammar of event files.
//!
//! ```text
//! # comment                      ignored, also after an event
//! @dim 2                         matrix order for sdp/saddle rows
//! @objective 1 0 0               objective vector (lp) or d×d row-major matrix (sdp)
//! @sparsity 2                    nonzero bound of sdp constraint matrices
//! @frobenius 2                   Frobenius bound of sdp constraint matrices
//! + x1 ... xd                    point (meb)
//! + x1 ... xd | y                labeled point, y = +1 or -1 (svm, classify)
//! + a1 ... ad b                  constraint a·x <= b (lp)
//! + k i1 j1 v1 ... ik jk vk | b  sparse symmetric matrix row <A, X> <= b (sdp, saddle)
//! - ...                          deletion of an earlier insertion, same body
//! ```
//! Matrix triplets use 0-based indices and are mirrored across the diagonal.

use crate::problems::{Constraint, Labeled, SdpConstraint};
use crate::{Error, Result};

use super::{Op, StreamEvent};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub dim: Option<usize>,
    pub objective: Option<Vec<f64>>,
    pub sparsity: Option<usize>,
    pub frobenius: Option<f64>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn number(tok: &str) -> std::result::Result<f64, String> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("invalid number `{tok}`")),
    }
}

fn numbers(body: &str) -> std::result::Result<Vec<f64>, String> {
    body.split_whitespace().map(number).collect()
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
    .trim()
}

/// Scans the directives of a whole file.
pub fn parse_header(text: &str) -> Result<Header> {
    let mut h = Header::default();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let line = strip_comment(raw);
        let Some(rest) = line.strip_prefix('@') else {
            continue;
        };
        let mut parts = rest.splitn(2, char::is_whitespace);
        let key = parts.next().unwrap_or("");
        let value = parts.next().unwrap_or("").trim();
        let int = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| parse_err(no, format!("`@{key}` expects a positive integer")))
                .and_then(|n| {
                    if n == 0 {
                        Err(parse_err(
                            no,
                            format!("`@{key}` expects a positive integer"),
                        ))
                    } else {
                        Ok(n)
                    }
                })
        };
        let dup = |set: bool| {
            if set {
                Err(parse_err(no, format!("duplicate `@{key}`")))
            } else {
                Ok(())
            }
        };
        match key {
            "dim" => {
                dup(h.dim.is_some())?;
                h.dim = Some(int(value)?);
            }
            "sparsity" => {
                dup(h.sparsity.is_some())?;
                h.sparsity = Some(int(value)?);
            }
            "frobenius" => {
                dup(h.frobenius.is_some())?;
                let v = number(value).map_err(|m| parse_err(no, m))?;
                if v <= 0.0 {
                    return Err(parse_err(no, "`@frobenius` must be positive"));
                }
                h.frobenius = Some(v);
            }
            "objective" => {
                dup(h.objective.is_some())?;
                let v = numbers(value).map_err(|m| parse_err(no, m))?;
                if v.is_empty() {
                    return Err(parse_err(no, "`@objective` needs at least one value"));
                }
                h.objective = Some(v);
            }
            _ => return Err(parse_err(no, format!("unknown directive `@{key}`"))),
        }
    }
    Ok(h)
}

/// Item types readable from an event line body.
pub trait LineItem: Sized + Clone + Send + Sync {
    /// Parses the body after the `+`/`-` marker; returns the item and its
    /// dimension.
    fn parse_body(body: &str, header: &Header) -> std::result::Result<(Self, usize), String>;
}

impl LineItem for Vec<f64> {
    fn parse_body(body: &str, _header: &Header) -> std::result::Result<(Self, usize), String> {
        if body.contains('|') {
            return Err("unexpected `|` in a point".into());
        }
        let v = numbers(body)?;
        if v.is_empty() {
            return Err("empty point".into());
        }
        let d = v.len();
        Ok((v, d))
    }
}

impl LineItem for Labeled {
    fn parse_body(body: &str, _header: &Header) -> std::result::Result<(Self, usize), String> {
        let (x, y) = body
            .split_once('|')
            .ok_or_else(|| "labeled point needs `| y`".to_string())?;
        let x = numbers(x)?;
        if x.is_empty() {
            return Err("empty point".into());
        }
        let y = match y.trim() {
            "1" | "+1" => 1,
            "-1" => -1,
            other => return Err(format!("label must be +1 or -1, got `{other}`")),
        };
        let d = x.len();
        Ok((Labeled::new(x, y), d))
    }
}

impl LineItem for Constraint {
    fn parse_body(body: &str, header: &Header) -> std::result::Result<(Self, usize), String> {
        if body.contains('|') {
            return Err("unexpected `|` in a constraint row".into());
        }
        let mut v = numbers(body)?;
        if v.len() < 2 {
            return Err("constraint row needs coefficients and a bound".into());
        }
        let b = v.pop().unwrap_or_default();
        if let Some(c) = &header.objective {
            if c.len() != v.len() {
                return Err(format!(
                    "row has {} coefficients, objective has {}",
                    v.len(),
                    c.len()
                ));
            }
        }
        let d = v.len();
        Ok((Constraint::new(v, b), d))
    }
}

impl LineItem for SdpConstraint {
    fn parse_body(body: &str, header: &Header) -> std::result::Result<(Self, usize), String> {
        let d = header
            .dim
            .ok_or_else(|| "matrix rows need an `@dim` directive".to_string())?;
        let (lhs, b) = body
            .split_once('|')
            .ok_or_else(|| "matrix row needs `| b`".to_string())?;
        let b = number(b.trim())?;
        let toks: Vec<&str> = lhs.split_whitespace().collect();
        let k: usize = toks
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| "matrix row must start with its entry count".to_string())?;
        if toks.len() != 1 + 3 * k {
            return Err(format!("expected {k} (i, j, v) triplets"));
        }
        let mut a = vec![0.0; d * d];
        let mut seen = vec![false; d * d];
        for t in toks[1..].chunks(3) {
            let idx = |s: &str| -> std::result::Result<usize, String> {
                match s.parse::<usize>() {
                    Ok(i) if i < d => Ok(i),
                    _ => Err(format!("index `{s}` outside 0..{d}")),
                }
            };
            let (i, j, v) = (idx(t[0])?, idx(t[1])?, number(t[2])?);
            if seen[i * d + j] {
                return Err(format!("entry ({i}, {j}) given twice"));
            }
            seen[i * d + j] = true;
            seen[j * d + i] = true;
            a[i * d + j] = v;
            a[j * d + i] = v;
        }
        Ok((SdpConstraint::new(a, b), d))
    }
}

/// Parses one line; `None` for blank lines, comments and directives. `dim`
/// carries the dimension of the first event so later lines can be checked
/// against it.
pub fn parse_line<T: LineItem>(
    line: &str,
    header: &Header,
    dim: &mut Option<usize>,
    no: usize,
) -> Result<Option<StreamEvent<T>>> {
    let line = strip_comment(line);
    if line.is_empty() || line.starts_with('@') {
        return Ok(None);
    }
    let op = match line.as_bytes()[0] {
        b'+' => Op::Insert,
        b'-' => Op::Delete,
        _ => return Err(parse_err(no, "event must start with `+` or `-`")),
    };
    let body = &line[1..];
    if !body.starts_with(char::is_whitespace) {
        return Err(parse_err(no, "expected whitespace after the event marker"));
    }
    let (item, d) = T::parse_body(body, header).map_err(|m| parse_err(no, m))?;
    match *dim {
        Some(prev) if prev != d => {
            return Err(parse_err(
                no,
                format!("dimension {d} differs from earlier {prev}"),
            ))
        }
        _ => *dim = Some(d),
    }
    Ok(Some(StreamEvent { op, item }))
}

/// Parses a whole file body.
pub fn parse_events<T: LineItem>(text: &str) -> Result<(Header, Vec<StreamEvent<T>>)> {
    let header = parse_header(text)?;
    let mut dim = None;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if let Some(e) = parse_line(line, &header, &mut dim, i + 1)? {
            out.push(e);
        }
    }
    Ok((header, out))
}

/// Fixed hash of an item's coordinates, used as its key when counting raw
/// multiplicities. Collisions are ignored.
pub trait RawKey {
    fn raw_key(&self) -> u128;
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_of(values: impl Iterator<Item = f64>) -> u128 {
    let (mut h1, mut h2) = (0x243F_6A88_85A3_08D3u64, 0x1319_8A2E_0370_7344u64);
    for v in values {
        let bits = if v == 0.0 { 0 } else { v.to_bits() };
        h1 = mix(h1 ^ bits);
        h2 = mix(h2.rotate_left(17) ^ bits ^ 0xA409_3822_299F_31D0);
    }
    ((h1 as u128) << 64) | h2 as u128
}

impl RawKey for Vec<f64> {
    fn raw_key(&self) -> u128 {
        key_of(self.iter().copied())
    }
}

impl RawKey for Labeled {
    fn raw_key(&self) -> u128 {
        key_of(self.x.iter().copied().chain([self.y as f64]))
    }
}

impl RawKey for Constraint {
    fn raw_key(&self) -> u128 {
        key_of(self.a.iter().copied().chain([self.b]))
    }
}

impl RawKey for SdpConstraint {
    fn raw_key(&self) -> u128 {
        key_of(self.a.iter().copied().chain([self.b]))
    }
}
