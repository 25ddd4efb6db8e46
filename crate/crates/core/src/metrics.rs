//! Post-processing of closed-loop logs: rainflow counting, damage-equivalent
//! loads, tracking error and actuator rates.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSurface;
use crate::sim::Trajectory;
use crate::turbine::TurbineParameters;
use crate::{Error, Result};

/// Lever arm of the tower fore-aft moment proxy (m).
pub const DEFAULT_TOWER_LEVER: f64 = 110.0;
/// Reference cycle count of the damage-equivalent load.
pub const DEFAULT_N_REF: f64 = 2e6;
/// Twenty years in seconds.
pub const DEFAULT_LIFETIME: f64 = 20.0 * 365.25 * 86400.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub range: f64,
    pub mean: f64,
    /// 1.0 for a closed cycle, 0.5 for a residual half cycle.
    pub count: f64,
}

pub type CycleSet = Vec<Cycle>;

/// Local extrema of `signal`, first and last sample included. Plateaus
/// collapse to one point.
pub fn turning_points(signal: &[f64]) -> Vec<f64> {
    let mut tp: Vec<f64> = Vec::with_capacity(signal.len());
    for &v in signal {
        match tp.len() {
            0 => tp.push(v),
            1 => {
                if v != tp[0] {
                    tp.push(v);
                }
            }
            _ => {
                let n = tp.len();
                let (a, b) = (tp[n - 2], tp[n - 1]);
                if v == b {
                    continue;
                }
                if (b - a) * (v - b) > 0.0 {
                    // still moving in the same direction: extend
                    tp[n - 1] = v;
                } else {
                    tp.push(v);
                }
            }
        }
    }
    tp
}

/// Four-point rainflow counting.
///
/// Turning points are pushed onto a stack; whenever the inner range of the top
/// four points is no larger than both adjacent ranges, the inner pair is
/// counted as a full cycle and removed. The residual is counted as half
/// cycles, one per consecutive pair.
pub fn rainflow(signal: &[f64]) -> CycleSet {
    let mut cycles = Vec::new();
    let mut stack: Vec<f64> = Vec::new();
    for p in turning_points(signal) {
        stack.push(p);
        while stack.len() >= 4 {
            let n = stack.len();
            let (s1, s2, s3, s4) = (stack[n - 4], stack[n - 3], stack[n - 2], stack[n - 1]);
            let inner = (s3 - s2).abs();
            if inner <= (s2 - s1).abs() && inner <= (s4 - s3).abs() {
                cycles.push(Cycle {
                    range: inner,
                    mean: 0.5 * (s2 + s3),
                    count: 1.0,
                });
                stack.drain(n - 3..n - 1);
            } else {
                break;
            }
        }
    }
    for w in stack.windows(2) {
        cycles.push(Cycle {
            range: (w[1] - w[0]).abs(),
            mean: 0.5 * (w[0] + w[1]),
            count: 0.5,
        });
    }
    cycles
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelSpec {
    pub woehler_exponent: f64,
    #[serde(default = "default_n_ref")]
    pub n_ref: f64,
    #[serde(default = "default_lifetime")]
    pub t_life: f64,
    pub t_sim: f64,
}

fn default_n_ref() -> f64 {
    DEFAULT_N_REF
}

fn default_lifetime() -> f64 {
    DEFAULT_LIFETIME
}

impl DelSpec {
    pub fn new(woehler_exponent: f64, t_sim: f64) -> Self {
        Self {
            woehler_exponent,
            n_ref: DEFAULT_N_REF,
            t_life: DEFAULT_LIFETIME,
            t_sim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.woehler_exponent >= 1.0) {
            return Err(Error::Validation(format!(
                "Woehler exponent must be at least 1, got {}",
                self.woehler_exponent
            )));
        }
        if !(self.n_ref > 0.0) {
            return Err(Error::Validation("n_ref must be positive".into()));
        }
        if !(self.t_sim > 0.0 && self.t_life >= self.t_sim) {
            return Err(Error::Validation(format!(
                "need t_life >= t_sim > 0, got t_life = {}, t_sim = {}",
                self.t_life, self.t_sim
            )));
        }
        Ok(())
    }
}

/// `[(t_life/t_sim)·Σ countᵢ·rangeᵢ^m / n_ref]^(1/m)`.
pub fn damage_equivalent_load(cycles: &[Cycle], spec: &DelSpec) -> f64 {
    if cycles.is_empty() {
        return 0.0;
    }
    let m = spec.woehler_exponent;
    let damage: f64 = cycles.iter().map(|c| c.count * c.range.powf(m)).sum();
    (spec.t_life / spec.t_sim * damage / spec.n_ref).powf(1.0 / m)
}

/// Root-mean-square of `P − P^d` over the log.
pub fn rms_tracking_error(traj: &Trajectory) -> f64 {
    rms_difference(&traj.power, &traj.power_d)
}

pub fn rms_difference(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let sum: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (sum / a.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateStatistics {
    /// Largest realized pitch rate magnitude (rad/s).
    pub max_pitch_rate: f64,
    /// Largest realized torque rate magnitude (N·m/s).
    pub max_torque_rate: f64,
}

/// Maxima of the realized actuator rates.
pub fn rate_statistics(traj: &Trajectory) -> RateStatistics {
    traj.u_eff.iter().fold(
        RateStatistics {
            max_pitch_rate: 0.0,
            max_torque_rate: 0.0,
        },
        |acc, u| RateStatistics {
            max_pitch_rate: acc.max_pitch_rate.max(u.u1.abs()),
            max_torque_rate: acc.max_torque_rate.max(u.u2.abs()),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadChannel {
    /// `h·(k_t·x_t + d_t·v_t)`, tower fore-aft bending moment proxy (N·m).
    TowerMoment,
    /// Generator torque `M_g` (N·m).
    ShaftTorque,
    /// Aerodynamic thrust (N).
    Thrust,
}

impl LoadChannel {
    pub const ALL: [LoadChannel; 3] = [
        LoadChannel::TowerMoment,
        LoadChannel::ShaftTorque,
        LoadChannel::Thrust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LoadChannel::TowerMoment => "tower_moment",
            LoadChannel::ShaftTorque => "shaft_torque",
            LoadChannel::Thrust => "thrust",
        }
    }

    /// Conventional Woehler exponent: 4 for steel, 10 for composites.
    pub fn default_exponent(self) -> f64 {
        match self {
            LoadChannel::TowerMoment | LoadChannel::ShaftTorque => 4.0,
            LoadChannel::Thrust => 10.0,
        }
    }
}

/// Proxy load series of one channel.
pub fn load_proxy(
    traj: &Trajectory,
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    channel: LoadChannel,
    tower_lever: f64,
) -> Vec<f64> {
    match channel {
        LoadChannel::TowerMoment => traj
            .state
            .iter()
            .map(|x| tower_lever * (params.k_t * x.x_t + params.d_t * x.v_t))
            .collect(),
        LoadChannel::ShaftTorque => traj.state.iter().map(|x| x.m_g).collect(),
        LoadChannel::Thrust => traj
            .state
            .iter()
            .zip(&traj.wind)
            .map(|(x, v)| params.tower_force(surface, x.omega, *v, x.theta))
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub channel: LoadChannel,
    pub woehler_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    #[serde(default = "default_channels")]
    pub channels: Vec<ChannelSpec>,
    #[serde(default = "default_n_ref")]
    pub n_ref: f64,
    #[serde(default = "default_lifetime")]
    pub t_life: f64,
    #[serde(default = "default_lever")]
    pub tower_lever: f64,
    /// Initial transient excluded from all statistics (s).
    #[serde(default)]
    pub skip: f64,
}

fn default_channels() -> Vec<ChannelSpec> {
    LoadChannel::ALL
        .iter()
        .map(|&c| ChannelSpec {
            channel: c,
            woehler_exponent: c.default_exponent(),
        })
        .collect()
}

fn default_lever() -> f64 {
    DEFAULT_TOWER_LEVER
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            channels: default_channels(),
            n_ref: DEFAULT_N_REF,
            t_life: DEFAULT_LIFETIME,
            tower_lever: DEFAULT_TOWER_LEVER,
            skip: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDel {
    pub channel: LoadChannel,
    pub woehler_exponent: f64,
    pub del: f64,
    pub cycles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub samples: usize,
    pub duration: f64,
    pub rms_tracking_error: f64,
    pub rms_tracking_error_rel_rated: f64,
    pub rates: RateStatistics,
    pub dels: Vec<ChannelDel>,
}

/// Drops the first `skip` seconds of a log.
pub fn trim(traj: &Trajectory, skip: f64) -> Trajectory {
    let start = traj.time.partition_point(|t| *t < traj.time.first().copied().unwrap_or(0.0) + skip);
    Trajectory {
        ts: traj.ts,
        time: traj.time[start..].to_vec(),
        state: traj.state[start..].to_vec(),
        u_cmd: traj.u_cmd[start..].to_vec(),
        u_eff: traj.u_eff[start..].to_vec(),
        wind: traj.wind[start..].to_vec(),
        wind_hat: traj.wind_hat[start..].to_vec(),
        power: traj.power[start..].to_vec(),
        power_d: traj.power_d[start..].to_vec(),
        omega_d: traj.omega_d[start..].to_vec(),
        alpha: traj.alpha[start..].to_vec(),
        saturation: traj.saturation[start..].to_vec(),
        final_state: traj.final_state,
    }
}

pub fn evaluate(
    traj: &Trajectory,
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    config: &MetricsConfig,
) -> Result<MetricsReport> {
    let traj = trim(traj, config.skip);
    if traj.len() < 2 {
        return Err(Error::Validation("trajectory too short for metrics".into()));
    }
    let duration = traj.len() as f64 * traj.ts;
    let rms = rms_tracking_error(&traj);
    let mut dels = Vec::with_capacity(config.channels.len());
    for ch in &config.channels {
        let spec = DelSpec {
            woehler_exponent: ch.woehler_exponent,
            n_ref: config.n_ref,
            t_life: config.t_life,
            t_sim: duration,
        };
        spec.validate()?;
        let cycles = rainflow(&load_proxy(&traj, params, surface, ch.channel, config.tower_lever));
        dels.push(ChannelDel {
            channel: ch.channel,
            woehler_exponent: ch.woehler_exponent,
            del: damage_equivalent_load(&cycles, &spec),
            cycles: cycles.len(),
        });
    }
    Ok(MetricsReport {
        samples: traj.len(),
        duration,
        rms_tracking_error: rms,
        rms_tracking_error_rel_rated: rms / params.p_rated,
        rates: rate_statistics(&traj),
        dels,
    })
}

pub fn cycles_to_csv(cycles: &[Cycle]) -> String {
    let mut out = String::from("range,mean,count\n");
    for c in cycles {
        let _ = writeln!(out, "{},{},{}", c.range, c.mean, c.count);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_has_no_cycles() {
        assert!(rainflow(&[2.0; 10]).is_empty());
    }

    #[test]
    fn single_excursion() {
        let c = rainflow(&[0.0, 3.0, 0.0]);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|c| c.range == 3.0 && c.count == 0.5));
    }

    #[test]
    fn turning_points_collapse_plateaus() {
        assert_eq!(
            turning_points(&[0.0, 1.0, 2.0, 2.0, 1.0, 1.0, 3.0]),
            vec![0.0, 2.0, 1.0, 3.0]
        );
    }

    #[test]
    fn del_identity_and_hand_value() {
        let one = [Cycle {
            range: 5.0,
            mean: 0.0,
            count: 1.0,
        }];
        let spec = DelSpec {
            woehler_exponent: 4.0,
            n_ref: 1.0,
            t_life: 1.0,
            t_sim: 1.0,
        };
        assert!((damage_equivalent_load(&one, &spec) - 5.0).abs() < 1e-12);
        let two = [
            Cycle {
                range: 1.0,
                mean: 0.0,
                count: 1.0,
            },
            Cycle {
                range: 2.0,
                mean: 0.0,
                count: 1.0,
            },
        ];
        let spec3 = DelSpec {
            woehler_exponent: 3.0,
            ..spec
        };
        assert!((damage_equivalent_load(&two, &spec3) - 2.0801).abs() < 1e-4);
        assert_eq!(damage_equivalent_load(&[], &spec3), 0.0);
    }

    #[test]
    fn rms_of_constant_offset() {
        assert_eq!(rms_difference(&[3.0, 3.0], &[1.0, 1.0]), 2.0);
        assert_eq!(rms_difference(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
    }
}
