//! Text checkpoints of a state: a versioned header, the device hash and every
//! field with 17 significant digits, so that loading reproduces the state bit for bit.

use std::fmt::Write as _;

use perovsim_core::assembly::State;
use perovsim_core::device::Device;

pub const MAGIC: &str = "perovsim-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CheckpointError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("checkpoint belongs to device {found:016x}, expected {expected:016x}")]
    DeviceMismatch { expected: u64, found: u64 },
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
}

/// FNV-1a hash of the canonical JSON form of the device configuration.
pub fn device_hash(device: &Device) -> u64 {
    let json = serde_json::to_string(&device.config).expect("device config serializes");
    json.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn push_field(out: &mut String, name: &str, values: &[f64]) {
    let _ = write!(out, "{name} {}", values.len());
    for v in values {
        let _ = write!(out, " {v:.16e}");
    }
    out.push('\n');
}

pub fn save(device: &Device, state: &State) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION}");
    let _ = writeln!(out, "device {:016x}", device_hash(device));
    let _ = writeln!(out, "t {:.16e}", state.t);
    push_field(&mut out, "psi", &state.psi);
    for (sp, u) in device.species.iter().zip(&state.densities) {
        push_field(&mut out, &format!("u:{}", sp.id), u);
    }
    out
}

pub fn load(device: &Device, text: &str) -> Result<State, CheckpointError> {
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| {
        lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| CheckpointError::Malformed {
                line: 0,
                reason: format!("missing {what}"),
            })
    };
    let bad = |line: usize, reason: &str| CheckpointError::Malformed {
        line,
        reason: reason.into(),
    };

    let (ln, header) = next("header")?;
    let mut it = header.split_whitespace();
    if it.next() != Some(MAGIC) {
        return Err(bad(ln, "not a checkpoint"));
    }
    let version: u32 = it
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(ln, "bad version"))?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let (ln, dev) = next("device hash")?;
    let found = dev
        .strip_prefix("device ")
        .and_then(|h| u64::from_str_radix(h.trim(), 16).ok())
        .ok_or_else(|| bad(ln, "bad device line"))?;
    let expected = device_hash(device);
    if found != expected {
        return Err(CheckpointError::DeviceMismatch { expected, found });
    }
    let (ln, tline) = next("time")?;
    let t: f64 = tline
        .strip_prefix("t ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| bad(ln, "bad time"))?;

    let mut field = |name: &str, len: usize| -> Result<Vec<f64>, CheckpointError> {
        let (ln, line) = next(name)?;
        let mut it = line.split_whitespace();
        if it.next() != Some(name) {
            return Err(bad(ln, &format!("expected field {name}")));
        }
        let n: usize = it
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(ln, "bad length"))?;
        if n != len {
            return Err(bad(
                ln,
                &format!("field {name} has {n} values, device needs {len}"),
            ));
        }
        let values: Result<Vec<f64>, _> = it.map(str::parse).collect();
        let values = values.map_err(|_| bad(ln, "bad number"))?;
        if values.len() != len {
            return Err(bad(ln, "truncated field"));
        }
        Ok(values)
    };
    let psi = field("psi", device.n_cells())?;
    let mut densities = Vec::new();
    for (i, sp) in device.species.iter().enumerate() {
        densities.push(field(
            &format!("u:{}", sp.id),
            device.layout.region[i].len(),
        )?);
    }
    Ok(State { t, psi, densities })
}
