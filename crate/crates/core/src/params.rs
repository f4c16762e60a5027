//! Spatiotemporal and trunk gait parameters, symmetry indices, and their
//! Pearson correlation with selected coefficients of motion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::joints::{Axis, Joint, Limb};
use crate::mocap::{GaitEvents, JointTrajectory};
use crate::synthesis::ViewingAngle;

/// Coefficient of determination above which a parameter is flagged salient.
pub const SALIENT_R2: f64 = 0.5;

/// Symmetry index formula recorded in report metadata.
pub const SI_FORMULA: &str = "100*(robotic-contralateral)/(0.5*(robotic+contralateral))";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum StepLengthMethod {
    /// Anterior-posterior ankle separation at heel strike.
    #[default]
    AnkleSeparation,
    /// Belt speed times step time.
    BeltSpeed { speed_m_s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ParamOptions {
    pub robotic_limb: Limb,
    pub step_length: StepLengthMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParameterSet {
    /// Sternum medio-lateral range of motion, m.
    pub trunk_ml: f64,
    /// Peak forward trunk angle from vertical in the sagittal plane, deg.
    pub trunk_lean: f64,
    pub robot_st: f64,
    pub ctl_st: f64,
    pub robot_sl: f64,
    pub ctl_sl: f64,
    pub st_si: f64,
    pub sl_si: f64,
}

impl GaitParameterSet {
    pub const NAMES: [&'static str; 8] = [
        "trunk_ml",
        "trunk_lean",
        "robot_st",
        "ctl_st",
        "robot_sl",
        "ctl_sl",
        "st_si",
        "sl_si",
    ];

    pub fn values(&self) -> [f64; 8] {
        [
            self.trunk_ml,
            self.trunk_lean,
            self.robot_st,
            self.ctl_st,
            self.robot_sl,
            self.ctl_sl,
            self.st_si,
            self.sl_si,
        ]
    }
}

/// Percent symmetry index; negative when the robotic side is smaller.
pub fn symmetry_index(robotic: f64, contralateral: f64) -> Result<f64> {
    let mean = 0.5 * (robotic + contralateral);
    if mean == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(100.0 * (robotic - contralateral) / mean)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Intervals from each preceding opposite-side heel strike to this side's strikes, seconds.
fn step_times(this: &[usize], other: &[usize], rate_hz: f64) -> Vec<f64> {
    this.iter()
        .filter_map(|&h| other.iter().rev().find(|&&o| o < h).map(|&o| (h - o) as f64 / rate_hz))
        .collect()
}

pub fn compute_gait_params(traj: &JointTrajectory, events: &GaitEvents, opts: &ParamOptions) -> Result<GaitParameterSet> {
    let in_range = |v: &[usize]| v.iter().copied().filter(|&i| i < traj.len()).collect::<Vec<_>>();
    let robot_hs = in_range(&events.robotic.heel_strikes);
    let ctl_hs = in_range(&events.contralateral.heel_strikes);
    for (name, hs) in [("robotic", &robot_hs), ("contralateral", &ctl_hs)] {
        if hs.len() < 2 {
            return Err(Error::MissingEvents(format!("{name} side has {} heel strike(s), need 2", hs.len())));
        }
    }
    let rate = traj.rate_hz();
    let robot_times = step_times(&robot_hs, &ctl_hs, rate);
    let ctl_times = step_times(&ctl_hs, &robot_hs, rate);
    if robot_times.is_empty() || ctl_times.is_empty() {
        return Err(Error::MissingEvents("no opposite-side heel strike precedes a step".into()));
    }
    let robot_st = mean(&robot_times);
    let ctl_st = mean(&ctl_times);

    let robot_ankle = opts.robotic_limb.ankle();
    let ctl_ankle = opts.robotic_limb.other().ankle();
    let separation = |frames: &[usize]| {
        let d: Vec<f64> = frames
            .iter()
            .map(|&f| (traj.coord(f, robot_ankle, Axis::Y) - traj.coord(f, ctl_ankle, Axis::Y)).abs())
            .collect();
        mean(&d)
    };
    let (robot_sl, ctl_sl) = match opts.step_length {
        StepLengthMethod::AnkleSeparation => (separation(&robot_hs), separation(&ctl_hs)),
        StepLengthMethod::BeltSpeed { speed_m_s } => (speed_m_s * robot_st, speed_m_s * ctl_st),
    };

    let sternum_x = traj.column(Joint::Sternum, Axis::X);
    let trunk_ml = sternum_x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - sternum_x.iter().copied().fold(f64::INFINITY, f64::min);
    let trunk_lean = (0..traj.len())
        .map(|f| {
            let dy = traj.coord(f, Joint::Sternum, Axis::Y) - traj.coord(f, Joint::Pelvis, Axis::Y);
            let dz = traj.coord(f, Joint::Sternum, Axis::Z) - traj.coord(f, Joint::Pelvis, Axis::Z);
            dy.atan2(dz).to_degrees()
        })
        .fold(0.0f64, f64::max);

    Ok(GaitParameterSet {
        trunk_ml,
        trunk_lean,
        robot_st,
        ctl_st,
        robot_sl,
        ctl_sl,
        st_si: symmetry_index(robot_st, ctl_st)?,
        sl_si: symmetry_index(robot_sl, ctl_sl)?,
    })
}

/// Pearson correlation; `None` when either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let scale_x = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let scale_y = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    // relative test so that round-off in a constant series reads as constant
    if sxx <= 1e-24 * scale_x * scale_x * n || syy <= 1e-24 * scale_y * scale_y * n {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub parameter: String,
    pub pearson_r: Option<f64>,
    pub r_squared: Option<f64>,
    pub n_points: usize,
    pub salient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub view: ViewingAngle,
    pub entries: Vec<CorrelationEntry>,
}

pub fn correlate_with_scomo(params: &[GaitParameterSet], scomo: &[f64], view: ViewingAngle) -> Result<CorrelationReport> {
    if params.len() != scomo.len() {
        return Err(Error::LengthMismatch(params.len(), scomo.len()));
    }
    if params.len() < 3 {
        return Err(Error::TooFew {
            what: "sessions for correlation",
            needed: 3,
            got: params.len(),
        });
    }
    let entries = GaitParameterSet::NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let series: Vec<f64> = params.iter().map(|p| p.values()[i]).collect();
            let r = pearson(&series, scomo);
            let r2 = r.map(|r| r * r);
            CorrelationEntry {
                parameter: name.to_string(),
                pearson_r: r,
                r_squared: r2,
                n_points: params.len(),
                salient: r2.is_some_and(|v| v > SALIENT_R2),
            }
        })
        .collect();
    Ok(CorrelationReport { view, entries })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.9}")).unwrap_or_else(|| "undefined".into())
}

/// `session_id` plus the eight parameter columns.
pub fn params_csv(rows: &[(String, GaitParameterSet)]) -> String {
    let mut out = format!("session_id,{}\n", GaitParameterSet::NAMES.join(","));
    for (id, p) in rows {
        let vals: Vec<String> = p.values().iter().map(|v| format!("{v:.9}")).collect();
        out.push_str(&format!("{id},{}\n", vals.join(",")));
    }
    out
}

pub fn correlation_csv(report: &CorrelationReport) -> String {
    let mut out = String::from("view,parameter,pearson_r,r_squared,n_points,salient\n");
    for e in &report.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            report.view.as_str(),
            e.parameter,
            fmt_opt(e.pearson_r),
            fmt_opt(e.r_squared),
            e.n_points,
            e.salient
        ));
    }
    out
}
