//! Write-allocate traffic model for store streams.
//!
//! A standard store that misses pulls its cache line from memory before
//! modifying it, doubling the store-side traffic. This module models the
//! evasion regimes — automatic cache-line claim, the utilization-gated
//! partial evasion of recent server parts, and non-temporal stores — as
//! true-traffic/stored-data ratios over active core counts.

use crate::machine_model::MachineModel;

/// Piecewise-linear activation of partial WA evasion as a function of
/// ccNUMA-domain utilization in [0, 1]. Clamped at the endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCurve {
    /// (utilization, activation) points, utilization strictly increasing.
    pub points: Vec<(f64, f64)>,
}

impl ActivationCurve {
    /// Default: no evasion below 50% domain utilization, full evasion at
    /// 100%, linear in between.
    pub fn default_gate() -> Self {
        ActivationCurve {
            points: vec![(0.5, 0.0), (1.0, 1.0)],
        }
    }

    pub fn at(&self, utilization: f64) -> f64 {
        let pts = &self.points;
        if pts.is_empty() {
            return 0.0;
        }
        if utilization <= pts[0].0 {
            return pts[0].1;
        }
        if utilization >= pts[pts.len() - 1].0 {
            return pts[pts.len() - 1].1;
        }
        for w in pts.windows(2) {
            let (u0, a0) = w[0];
            let (u1, a1) = w[1];
            if utilization >= u0 && utilization <= u1 {
                return a0 + (utilization - u0) / (u1 - u0) * (a1 - a0);
            }
        }
        pts[pts.len() - 1].1
    }
}

/// Write-allocate regime of a store stream.
#[derive(Debug, Clone, PartialEq)]
pub enum WaMode {
    /// Every store miss reads the line first: ratio 2.
    FullWa,
    /// The core claims fully overwritten lines without reading: ratio 1.
    AutoEvasion,
    /// Utilization-gated partial evasion: ratio
    /// `2 − max_reduction × activation(domain utilization)`.
    SpecI2m {
        max_reduction: f64,
        activation: ActivationCurve,
    },
    /// Non-temporal stores with perfect WA elimination: ratio 1.
    NtPerfect,
    /// Non-temporal stores leaving a residual fraction of WA traffic:
    /// ratio `1 + residual`.
    NtResidual { residual: f64 },
}

impl WaMode {
    /// Parse a CLI mode token: `full-wa`, `auto-evasion`, `speci2m`,
    /// `nt-perfect`, or `nt-residual[:r]`.
    pub fn from_token(s: &str) -> Option<WaMode> {
        if let Some(rest) = s.strip_prefix("nt-residual") {
            let residual = match rest.strip_prefix(':') {
                Some(v) => v.parse().ok().filter(|r| (0.0..=1.0).contains(r))?,
                None => 0.10,
            };
            return Some(WaMode::NtResidual { residual });
        }
        match s {
            "full-wa" => Some(WaMode::FullWa),
            "auto-evasion" => Some(WaMode::AutoEvasion),
            "speci2m" => Some(WaMode::SpecI2m {
                max_reduction: 0.25,
                activation: ActivationCurve::default_gate(),
            }),
            "nt-perfect" => Some(WaMode::NtPerfect),
            _ => None,
        }
    }

    pub fn token(&self) -> &'static str {
        match self {
            WaMode::FullWa => "full-wa",
            WaMode::AutoEvasion => "auto-evasion",
            WaMode::SpecI2m { .. } => "speci2m",
            WaMode::NtPerfect => "nt-perfect",
            WaMode::NtResidual { .. } => "nt-residual",
        }
    }
}

/// Per-iteration memory footprint of a kernel's load and store streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficSpec {
    pub load_bytes_per_iter: f64,
    pub store_bytes_per_iter: f64,
    /// Stores overwrite full cache lines (streaming access). Partial-line
    /// stores cannot claim lines, so evasion degrades to full WA.
    pub streaming: bool,
}

/// True-traffic/stored-data ratio for a mode at a core count.
///
/// Core counts are assumed to fill one ccNUMA domain before spilling to
/// the next (compact pinning), so domain utilization is
/// `min(1, active_cores / domain_cores)`.
pub fn traffic_ratio(mode: &WaMode, machine: &MachineModel, active_cores: u32) -> f64 {
    match mode {
        WaMode::FullWa => 2.0,
        WaMode::AutoEvasion => 1.0,
        WaMode::NtPerfect => 1.0,
        WaMode::NtResidual { residual } => 1.0 + residual,
        WaMode::SpecI2m {
            max_reduction,
            activation,
        } => {
            let domain = machine.domain_cores().max(1);
            let utilization = (f64::from(active_cores) / f64::from(domain)).min(1.0);
            2.0 - max_reduction * activation.at(utilization)
        }
    }
}

/// Effective per-iteration traffic: loads plus WA-adjusted stores.
pub fn effective_traffic(
    spec: &TrafficSpec,
    mode: &WaMode,
    machine: &MachineModel,
    active_cores: u32,
) -> f64 {
    let ratio = if spec.streaming {
        traffic_ratio(mode, machine, active_cores)
    } else {
        traffic_ratio(&WaMode::FullWa, machine, active_cores)
    };
    spec.load_bytes_per_iter + spec.store_bytes_per_iter * ratio
}

/// Default store regime of a shipped machine for standard stores.
pub fn default_store_mode(machine: &MachineModel) -> WaMode {
    match machine.name.as_str() {
        "gcs" => WaMode::AutoEvasion,
        "spr" => WaMode::SpecI2m {
            max_reduction: 0.25,
            activation: ActivationCurve::default_gate(),
        },
        _ => WaMode::FullWa,
    }
}

/// Default non-temporal store regime. NT stores on the modeled Golden
/// Cove part keep a 10% WA residue except at very small core counts.
pub fn default_nt_mode(machine: &MachineModel, active_cores: u32) -> WaMode {
    match machine.name.as_str() {
        "spr" if active_cores >= 4 => WaMode::NtResidual { residual: 0.10 },
        _ => WaMode::NtPerfect,
    }
}

/// Measured ratio curve over active cores (one column of a Fig.-4-style
/// data file).
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub label: String,
    /// (active cores, ratio), cores strictly increasing.
    pub points: Vec<(u32, f64)>,
}

#[derive(Debug, thiserror::Error)]
pub enum TrafficError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("empty ratio file")]
    Empty,
    #[error("line {line}: ratio {value} outside plausible range [0.9, 2.1]")]
    RatioOutOfRange { line: usize, value: f64 },
}

/// Parse a TSV ratio file: header row with column labels, column 0 =
/// cores, columns 1.. = measured ratios per variant. Measured values may
/// wobble slightly outside [1, 2]; anything outside [0.9, 2.1] is
/// rejected as corrupt.
pub fn ingest_ratio_curves(text: &str) -> Result<Vec<RatioCurve>, TrafficError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(TrafficError::Empty);
    };
    let labels: Vec<&str> = header.split('\t').collect();
    if labels.len() < 2 {
        return Err(TrafficError::Malformed {
            line: 1,
            msg: "header needs a cores column and at least one ratio column".into(),
        });
    }
    let mut curves: Vec<RatioCurve> = labels[1..]
        .iter()
        .map(|l| RatioCurve {
            label: l.trim().to_string(),
            points: Vec::new(),
        })
        .collect();
    let mut rows = 0usize;
    let mut prev_cores: Option<u32> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != labels.len() {
            return Err(TrafficError::Malformed {
                line: line_no,
                msg: format!("expected {} columns, got {}", labels.len(), cells.len()),
            });
        }
        let cores: u32 = cells[0]
            .trim()
            .parse()
            .map_err(|_| TrafficError::Malformed {
                line: line_no,
                msg: format!("bad core count `{}`", cells[0]),
            })?;
        if prev_cores.is_some_and(|p| cores <= p) {
            return Err(TrafficError::Malformed {
                line: line_no,
                msg: format!("core counts must be strictly increasing, got {cores}"),
            });
        }
        prev_cores = Some(cores);
        for (c, cell) in curves.iter_mut().zip(&cells[1..]) {
            let value: f64 = cell.trim().parse().map_err(|_| TrafficError::Malformed {
                line: line_no,
                msg: format!("bad ratio `{cell}`"),
            })?;
            if !(0.9..=2.1).contains(&value) {
                return Err(TrafficError::RatioOutOfRange {
                    line: line_no,
                    value,
                });
            }
            c.points.push((cores, value));
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(TrafficError::Empty);
    }
    Ok(curves)
}

/// Max absolute deviation between a measured curve and the model's ratio
/// for `mode` at the curve's core counts.
pub fn compare_curve(curve: &RatioCurve, mode: &WaMode, machine: &MachineModel) -> f64 {
    curve
        .points
        .iter()
        .map(|(cores, measured)| (measured - traffic_ratio(mode, machine, *cores)).abs())
        .fold(0.0, f64::max)
}
