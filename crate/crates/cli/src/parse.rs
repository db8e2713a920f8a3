//! Argument syntax: β ranges, world pairs, partitions, `id=path` world specs.

use std::path::PathBuf;
use std::str::FromStr;

use ecolab_core::{Error, Partition};

/// A malformed command line; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// `start:stop:step` with both endpoints included, or a comma-separated list.
pub fn grid(s: &str) -> anyhow::Result<Vec<f64>> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("`{t}` is not a number in `{s}`")))
    };
    if !s.contains(':') {
        return s.split(',').map(num).collect();
    }
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(usage(format!("range `{s}` must be start:stop:step")));
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0 && step.is_finite()) || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(usage(format!("range `{s}` needs start ≤ stop and step > 0")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    // Land exactly on the stop value when the step divides the range.
    if let Some(last) = out.last_mut() {
        if (*last - stop).abs() <= 1e-9 * step {
            *last = stop;
        }
    }
    Ok(out)
}

pub fn pair(s: &str) -> anyhow::Result<(String, String)> {
    match s.split_once(',') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => Ok((a.trim().into(), b.trim().into())),
        _ => Err(usage(format!("pair `{s}` must be two world ids `a,b`"))),
    }
}

/// Malformed labels are usage errors; non-canonical labels are validation
/// errors whose message carries the canonical form.
pub fn partition(s: &str) -> anyhow::Result<Partition> {
    match Partition::from_str(s) {
        Ok(p) => Ok(p),
        Err(Error::Parse(m)) => Err(usage(m)),
        Err(e) => Err(e.into()),
    }
}

/// `id=path[,path…]`
pub fn world_spec(s: &str) -> anyhow::Result<(String, Vec<PathBuf>)> {
    let (id, files) = s
        .split_once('=')
        .ok_or_else(|| usage(format!("world `{s}` must be `id=path[,path…]`")))?;
    if id.is_empty() || files.is_empty() {
        return Err(usage(format!("world `{s}` must be `id=path[,path…]`")));
    }
    Ok((id.into(), files.split(',').map(PathBuf::from).collect()))
}

pub fn seed_from_env() -> anyhow::Result<Option<u64>> {
    match std::env::var("ECOLAB_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("ECOLAB_SEED=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}
