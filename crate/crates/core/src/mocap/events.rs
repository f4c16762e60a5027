use serde::{Deserialize, Serialize};

use super::{ForcePlateRecord, Side};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventConfig {
    /// Contact threshold on vertical GRF, newtons.
    pub threshold_n: f64,
    /// A crossing counts only if the new state holds this long, seconds.
    pub debounce_s: f64,
    /// Events closer than this are reported as chatter, seconds.
    pub chatter_s: f64,
    /// Rate of the kinematic trajectory the events index into.
    pub kinematics_rate_hz: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        EventConfig {
            threshold_n: 20.0,
            debounce_s: 0.020,
            chatter_s: 0.100,
            kinematics_rate_hz: 100.0,
        }
    }
}

/// Heel strikes and toe-offs of one side, as sorted sample indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideEvents {
    pub heel_strikes: Vec<usize>,
    pub toe_offs: Vec<usize>,
}

impl SideEvents {
    pub fn shifted(&self, offset: i64) -> Self {
        let shift = |v: &Vec<usize>| v.iter().map(|&i| (i as i64 + offset).max(0) as usize).collect();
        SideEvents {
            heel_strikes: shift(&self.heel_strikes),
            toe_offs: shift(&self.toe_offs),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDetection {
    pub side: Side,
    pub events: SideEvents,
    /// Pairs of events closer than the chatter interval.
    pub warnings: Vec<String>,
}

/// Threshold crossings of vertical GRF with a hold-time debounce.
pub fn detect_gait_events(grf: &ForcePlateRecord, cfg: &EventConfig) -> Result<EventDetection> {
    if !(cfg.threshold_n > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {}", cfg.threshold_n)));
    }
    if grf.rate_hz < cfg.kinematics_rate_hz {
        return Err(Error::InvalidArgument(format!(
            "GRF rate {} Hz below kinematics rate {} Hz",
            grf.rate_hz, cfg.kinematics_rate_hz
        )));
    }
    let x = &grf.vertical_grf;
    let thr = cfg.threshold_n;
    let hold = ((cfg.debounce_s * grf.rate_hz).round() as usize).max(1);
    let mut loaded = x.first().is_some_and(|&v| v >= thr);
    let mut hs = Vec::new();
    let mut to = Vec::new();
    let mut i = 1;
    while i < x.len() {
        let now_loaded = x[i] >= thr;
        if now_loaded != loaded {
            let end = i + hold;
            let sustained = end <= x.len() && x[i..end].iter().all(|&v| (v >= thr) == now_loaded);
            if sustained {
                if now_loaded {
                    hs.push(i);
                } else {
                    to.push(i);
                }
                loaded = now_loaded;
                i = end;
                continue;
            }
        }
        i += 1;
    }
    if hs.is_empty() && to.is_empty() {
        return Err(Error::NoCrossings { threshold_n: thr });
    }

    let mut all: Vec<(usize, &str)> = hs.iter().map(|&i| (i, "heel strike")).chain(to.iter().map(|&i| (i, "toe-off"))).collect();
    all.sort_unstable();
    let min_gap = cfg.chatter_s * grf.rate_hz;
    let warnings = all
        .windows(2)
        .filter(|w| ((w[1].0 - w[0].0) as f64) < min_gap)
        .map(|w| {
            format!(
                "{} side: {} at {:.3} s and {} at {:.3} s are closer than {:.0} ms",
                grf.side.as_str(),
                w[0].1,
                w[0].0 as f64 / grf.rate_hz,
                w[1].1,
                w[1].0 as f64 / grf.rate_hz,
                cfg.chatter_s * 1e3
            )
        })
        .collect();

    let ratio = cfg.kinematics_rate_hz / grf.rate_hz;
    let convert = |v: Vec<usize>| -> Vec<usize> {
        let mut out: Vec<usize> = v.into_iter().map(|i| (i as f64 * ratio).round() as usize).collect();
        out.dedup();
        out
    };
    Ok(EventDetection {
        side: grf.side,
        events: SideEvents {
            heel_strikes: convert(hs),
            toe_offs: convert(to),
        },
        warnings,
    })
}
