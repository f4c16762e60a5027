use super::{GaitCycleSet, GaitEvents, JointTrajectory, Side};
use crate::error::{Error, Result};

/// The last `n` heel-strike-to-heel-strike cycles of `side` in `traj`.
pub fn segment_cycles(traj: &JointTrajectory, events: &GaitEvents, n: usize, side: Side) -> Result<GaitCycleSet> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 cycles, asked for {n}")));
    }
    let strikes: Vec<usize> = events
        .side(side)
        .heel_strikes
        .iter()
        .copied()
        .filter(|&i| i < traj.len())
        .collect();
    if strikes.len() < n + 1 {
        return Err(Error::InsufficientCycles {
            needed: n + 1,
            found: strikes.len(),
        });
    }
    let used = &strikes[strikes.len() - n - 1..];
    let start = used[0];
    let end = used[n];
    let cycle_bounds = used.windows(2).map(|w| (w[0] - start, w[1] - start)).collect();
    Ok(GaitCycleSet {
        trajectory: traj.slice(start, end)?,
        cycle_bounds,
        source_offset: start,
        side,
    })
}
