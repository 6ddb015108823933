//! Slope estimates with their convergence traces.

use serde::Serialize;

use crate::extended::Extended;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeKind {
    Nonlocal,
    Local,
    UniformStrict,
    Strict,
    ModifiedStrict,
    LevelNonlocal,
    LevelLocal,
    LevelUniformStrict,
    LevelStrictOuter,
    LevelModifiedStrictOuter,
    SubdiffPlain,
    SubdiffApproximate,
    StrictSubdiffPlain,
    StrictSubdiffApproximate,
    StrictSubdiffModified,
    StrictSubdiffModifiedApproximate,
    LimitingCoderivative,
    LmAlpha,
    LmBeta,
    LiminfRatio,
    Subregularity,
    ErrorBound,
}

/// One point of a trace: the schedule parameter (ρ, a radius or ε) and
/// the value obtained at it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub param: f64,
    pub value: Extended,
}

/// Asymptotic behavior of a trace as its parameter shrinks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Stable,
    Vanishing,
    Diverging,
    Infinite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub kind: SlopeKind,
    pub value: Extended,
    pub trace: Vec<TraceEntry>,
    pub truncated: bool,
    pub budget_used: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl SlopeEstimate {
    /// The value is the last trace entry; an empty trace gives `+∞`.
    pub fn from_trace(kind: SlopeKind, trace: Vec<TraceEntry>, truncated: bool, budget_used: usize) -> Self {
        let value = trace.last().map_or(Extended::Infinite, |e| e.value);
        SlopeEstimate {
            kind,
            value,
            trace,
            truncated,
            budget_used,
            flags: Vec::new(),
        }
    }

    pub fn with_flag(mut self, flag: impl Into<String>) -> Self {
        let flag = flag.into();
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
        self
    }

    pub fn trend(&self) -> Trend {
        classify(&self.trace)
    }

    /// Positive in the qualitative sense: clearly above zero and not
    /// decaying along the schedule.
    pub fn is_positive(&self) -> bool {
        match self.value {
            Extended::Infinite => true,
            Extended::Finite(v) => v > POSITIVE_FLOOR && self.trend() != Trend::Vanishing,
        }
    }

    /// Infinite, or growing without bound along the schedule.
    pub fn is_unbounded(&self) -> bool {
        matches!(self.trend(), Trend::Infinite | Trend::Diverging)
    }
}

/// Values at or below this are treated as zero by qualitative checks.
pub const POSITIVE_FLOOR: f64 = 1e-3;

/// Least-squares slope of `ln value` against `ln param` over the tail of
/// the trace. `value ~ param^α`: `α ≥ 0.25` is vanishing, `α ≤ −0.25`
/// diverging.
pub fn classify(trace: &[TraceEntry]) -> Trend {
    let Some(last) = trace.last() else { return Trend::Infinite };
    if last.value.is_infinite() {
        return Trend::Infinite;
    }
    if last.value.to_f64() <= 1e-12 {
        return Trend::Vanishing;
    }
    let tail = &trace[trace.len() - (trace.len() / 2).max(3).min(trace.len())..];
    let pts: Vec<(f64, f64)> = tail
        .iter()
        .filter_map(|e| match e.value {
            Extended::Finite(v) if v > 0.0 && e.param > 0.0 => Some((e.param.ln(), v.ln())),
            _ => None,
        })
        .collect();
    if pts.len() < 2 {
        return Trend::Stable;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Trend::Stable;
    }
    let alpha = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    if alpha >= 0.25 {
        Trend::Vanishing
    } else if alpha <= -0.25 {
        Trend::Diverging
    } else {
        Trend::Stable
    }
}
