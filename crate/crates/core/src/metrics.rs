//! Time-to-solution and time-to-diversity estimators.
//!
//! All estimates target 99% confidence. A cell with zero observed success is a
//! [`TimeEstimate::TimedOut`] value rather than an error or infinity, so it can
//! flow through optimization and reports unchanged.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Target probability of having seen at least one success.
pub const CONFIDENCE: f64 = 0.99;

/// Success rate above which a single run already meets the target.
pub const RATE_CAP: f64 = CONFIDENCE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeEstimate {
    Finite(f64),
    TimedOut,
}

impl TimeEstimate {
    pub fn value(&self) -> Option<f64> {
        match *self {
            TimeEstimate::Finite(v) => Some(v),
            TimeEstimate::TimedOut => None,
        }
    }

    pub fn is_timed_out(&self) -> bool {
        matches!(self, TimeEstimate::TimedOut)
    }

    /// Sort key with timeouts at `+inf`.
    pub fn as_f64(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }

    /// Total order with timeouts last.
    pub fn cmp_time(&self, other: &Self) -> Ordering {
        self.as_f64().total_cmp(&other.as_f64())
    }
}

impl fmt::Display for TimeEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeEstimate::Finite(v) => write!(f, "{v}"),
            TimeEstimate::TimedOut => f.write_str("timed_out"),
        }
    }
}

fn check_rate(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::invalid(format!("success rate must lie in [0, 1], got {r}")))
    }
}

fn check_time(t_s: f64) -> Result<()> {
    if t_s > 0.0 && t_s.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("time per run must be positive, got {t_s}")))
    }
}

/// `t_s ln(0.01) / ln(1 - r)`. Zero success times out; `r >= 0.99` costs
/// exactly one run.
pub fn tts(r: f64, t_s: f64) -> Result<TimeEstimate> {
    check_rate(r)?;
    check_time(t_s)?;
    Ok(if r == 0.0 {
        TimeEstimate::TimedOut
    } else if r >= RATE_CAP {
        TimeEstimate::Finite(t_s)
    } else {
        TimeEstimate::Finite(t_s * (1.0 - CONFIDENCE).ln() / (1.0 - r).ln())
    })
}

/// Equal-weight portfolio: `ln(0.01) / mean_k(ln(1 - r_k) / t_k)`.
///
/// Rates are capped at 0.99 so that a single certain solver does not send the
/// mean to `-inf`; a one-entry portfolio therefore agrees with [`tts`].
pub fn tts_portfolio(entries: &[(f64, f64)]) -> Result<TimeEstimate> {
    if entries.is_empty() {
        return Err(Error::invalid("portfolio needs at least one entry"));
    }
    let mut acc = 0.0;
    for &(r, t) in entries {
        check_rate(r)?;
        check_time(t)?;
        acc += (1.0 - r.min(RATE_CAP)).ln() / t;
    }
    if acc == 0.0 {
        return Ok(TimeEstimate::TimedOut);
    }
    let mean = acc / entries.len() as f64;
    Ok(TimeEstimate::Finite((1.0 - CONFIDENCE).ln() / mean))
}

/// Hit counts of one (protocol, time setting) cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessStats {
    /// Hits per basin seed, indexed like the seeds.
    pub per_basin_hits: Vec<u64>,
    /// Restarts that landed within the solver ratio at all.
    pub any_hits: u64,
    pub restarts: u64,
}

impl SuccessStats {
    pub fn new(per_basin_hits: Vec<u64>, any_hits: u64, restarts: u64) -> Result<Self> {
        let s = SuccessStats {
            per_basin_hits,
            any_hits,
            restarts,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let total: u64 = self.per_basin_hits.iter().sum();
        if total > self.any_hits || self.any_hits > self.restarts {
            return Err(Error::invalid(format!(
                "inconsistent hit counts: basins {total}, any {}, restarts {}",
                self.any_hits, self.restarts
            )));
        }
        Ok(())
    }

    /// `hits_l / restarts`; all zero when there were no restarts.
    pub fn rates(&self) -> Vec<f64> {
        self.per_basin_hits.iter().map(|&h| rate(h, self.restarts)).collect()
    }

    pub fn success_rate(&self) -> f64 {
        rate(self.any_hits, self.restarts)
    }

    /// Number of basins hit at least once.
    pub fn basins_hit(&self) -> usize {
        self.per_basin_hits.iter().filter(|&&h| h > 0).count()
    }
}

fn rate(hits: u64, restarts: u64) -> f64 {
    if restarts == 0 {
        0.0
    } else {
        hits as f64 / restarts as f64
    }
}

/// `ceil(D d_r)`, guarded against round-off just above an integer.
pub fn target_rank(d: usize, d_r: f64) -> Result<usize> {
    if d == 0 {
        return Err(Error::invalid("diversity D must be at least 1"));
    }
    if !(d_r > 0.0 && d_r <= 1.0) {
        return Err(Error::invalid(format!("diversity ratio must lie in (0, 1], got {d_r}")));
    }
    Ok(((d as f64 * d_r - 1e-9).ceil() as usize).clamp(1, d))
}

/// The `l`-th largest rate with `l = ceil(D d_r)`.
pub fn rate_at_rank(rates: &[f64], d_r: f64) -> Result<f64> {
    let l = target_rank(rates.len(), d_r)?;
    let mut sorted = rates.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[l - 1])
}

/// Time to see `ceil(D d_r)` distinct basins, approximated by the TTS of the
/// `l`-th most likely basin. `D` is the number of basins in `stats`.
pub fn ttd(stats: &SuccessStats, d_r: f64, t_s: f64) -> Result<TimeEstimate> {
    stats.validate()?;
    tts(rate_at_rank(&stats.rates(), d_r)?, t_s)
}

/// Portfolio analogue of [`ttd`]: the rank is taken per member, then combined
/// with [`tts_portfolio`].
pub fn ttd_portfolio(members: &[(SuccessStats, f64)], d_r: f64) -> Result<TimeEstimate> {
    let entries = members
        .iter()
        .map(|(s, t)| {
            s.validate()?;
            Ok((rate_at_rank(&s.rates(), d_r)?, *t))
        })
        .collect::<Result<Vec<_>>>()?;
    tts_portfolio(&entries)
}

/// Picks the setting with the smallest estimate, timeouts counting as `+inf`
/// and ties going to the smallest setting. `None` if every entry timed out.
pub fn optimize_over_times<K: Ord + Copy>(results: &BTreeMap<K, TimeEstimate>) -> Result<Option<(K, f64)>> {
    if results.is_empty() {
        return Err(Error::invalid("nothing to optimize over"));
    }
    let mut best: Option<(K, f64)> = None;
    for (&k, est) in results {
        if let TimeEstimate::Finite(v) = *est {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((k, v));
            }
        }
    }
    Ok(best)
}
