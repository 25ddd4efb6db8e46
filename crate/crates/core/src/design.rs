//! Region-2 and region-3 controller design.
//!
//! Each region is represented by four operating points. Their linearizations
//! are scaled by [`StateScaling::characteristic`], a common H2 gain is
//! synthesized and certified in scaled coordinates, and the gain is mapped
//! back to physical units.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSurface;
use crate::control::{
    desired_power, operating_point, region_boundary_speed, GainSchedule, PowerSpeedTable,
    DEFAULT_DELTA_V, DEFAULT_TABLE_NODES,
};
use crate::linearize::{linearize, LinearModel, StateScaling};
use crate::synthesis::sdp::InteriorPointSolver;
use crate::synthesis::{
    certificate_report, synthesize_with, CertificateReport, ModelSet, SynthesisResult,
    SynthesisWeights, DEFAULT_EPSILON,
};
use crate::turbine::{ExternalInput, TurbineParameters};
use crate::{Error, GainMatrix, Result, NU, NX};

/// Number of operating points per region.
pub const VERTICES_PER_REGION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Two,
    Three,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::Two => "region 2",
            Region::Three => "region 3",
        }
    }
}

/// LQ weights in scaled coordinates. The state weight is
/// `diag(q_diag) + q_power·c·cᵀ` where `c·ξ̃` is the scaled electrical-power
/// deviation, averaged over the region's operating points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionWeights {
    pub q_diag: [f64; NX],
    #[serde(default)]
    pub q_power: f64,
    pub r_diag: [f64; NU],
}

impl RegionWeights {
    /// Region 2: speed tracking dominates, since the power reference is the
    /// available power itself.
    pub fn default_region2() -> Self {
        Self {
            q_diag: [1.0, 0.1, 0.1, 1.0, 0.1, 0.1, 0.1],
            q_power: 1.0,
            r_diag: [1.0, 1.0],
        }
    }

    /// Region 3: power tracking dominates.
    pub fn default_region3() -> Self {
        Self {
            q_diag: [1.0, 0.1, 0.1, 1.0, 1.0, 0.1, 0.1],
            q_power: 10.0,
            r_diag: [1.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_diag.iter().any(|q| !(*q >= 0.0)) || !(self.q_power >= 0.0) {
            return Err(Error::Validation(
                "state weights must be finite and nonnegative".into(),
            ));
        }
        if self.r_diag.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Validation(
                "R not positive definite: input weights must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub weights: RegionWeights,
    /// Operating-point wind speeds; the documented default grid if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wind_speeds: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    /// Reference power the design is built for (W).
    pub p_ref: f64,
    #[serde(default = "default_delta_v")]
    pub delta_v: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_table_nodes")]
    pub table_nodes: usize,
    pub region2: RegionSpec,
    pub region3: RegionSpec,
}

fn default_delta_v() -> f64 {
    DEFAULT_DELTA_V
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_table_nodes() -> usize {
    DEFAULT_TABLE_NODES
}

impl DesignConfig {
    pub fn with_defaults(p_ref: f64) -> Self {
        Self {
            p_ref,
            delta_v: DEFAULT_DELTA_V,
            epsilon: DEFAULT_EPSILON,
            table_nodes: DEFAULT_TABLE_NODES,
            region2: RegionSpec {
                weights: RegionWeights::default_region2(),
                wind_speeds: None,
            },
            region3: RegionSpec {
                weights: RegionWeights::default_region3(),
                wind_speeds: None,
            },
        }
    }

    pub fn validate(&self, params: &TurbineParameters) -> Result<()> {
        if !(self.p_ref > 0.0 && self.p_ref <= params.p_rated) {
            return Err(Error::Validation(format!(
                "design p_ref must lie in (0, p_rated], got {}",
                self.p_ref
            )));
        }
        if !(self.delta_v > 0.0) {
            return Err(Error::Validation("delta_v must be positive".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Validation("epsilon must be positive".into()));
        }
        self.region2.weights.validate()?;
        self.region3.weights.validate()
    }
}

/// `{V^d + 1, two evenly spaced interior points, V_cutout − 1}`.
pub fn region3_wind_speeds(params: &TurbineParameters, v_d: f64) -> Vec<f64> {
    let (lo, hi) = (v_d + 1.0, params.v_cutout - 1.0);
    (0..VERTICES_PER_REGION)
        .map(|k| lo + (hi - lo) * k as f64 / (VERTICES_PER_REGION - 1) as f64)
        .collect()
}

/// Four evenly spaced speeds spanning `[V_cutin + 1, V^d − 1]`.
pub fn region2_wind_speeds(params: &TurbineParameters, v_d: f64) -> Vec<f64> {
    let (lo, hi) = (params.v_cutin + 1.0, v_d - 1.0);
    (0..VERTICES_PER_REGION)
        .map(|k| lo + (hi - lo) * k as f64 / (VERTICES_PER_REGION - 1) as f64)
        .collect()
}

/// External inputs of the operating points: `P^d` from the reference
/// pipeline and `ω^d = LUT(P^d)`.
pub fn vertex_inputs(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    table: &PowerSpeedTable,
    p_ref: f64,
    speeds: &[f64],
) -> Vec<ExternalInput> {
    speeds
        .iter()
        .map(|&v| {
            let p_d = desired_power(params, surface, p_ref, v);
            ExternalInput {
                v,
                omega_d: table.desired_speed(p_d),
                p_d,
            }
        })
        .collect()
}

/// Linearizations at the operating points of `inputs`.
pub fn vertex_models(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    inputs: &[ExternalInput],
) -> Result<Vec<LinearModel>> {
    inputs
        .iter()
        .map(|w| {
            let eq = operating_point(params, surface, w)?;
            Ok(linearize(params, surface, &eq))
        })
        .collect()
}

pub fn scaled_model_set(models: &[LinearModel], scaling: &StateScaling) -> Result<ModelSet> {
    let b = scaling.scale_b(&models[0].b);
    ModelSet::new(
        models
            .iter()
            .map(|m| {
                let a = scaling.scale_a(&m.a);
                DMatrix::from_fn(NX, NX, |i, j| a[(i, j)])
            })
            .collect(),
        DMatrix::from_fn(NX, NU, |i, j| b[(i, j)]),
    )
}

/// Scaled synthesis weights for a model set.
pub fn synthesis_weights(weights: &RegionWeights, models: &ModelSet) -> Result<SynthesisWeights> {
    weights.validate()?;
    // row 4 of Ã is −(scaled power deviation)
    let q = models.vertices.len() as f64;
    let c = models
        .vertices
        .iter()
        .fold(nalgebra::DVector::<f64>::zeros(NX), |acc, a| {
            acc - a.row(4).transpose() / q
        });
    let mut qm = &c * c.transpose() * weights.q_power;
    for (i, w) in weights.q_diag.iter().enumerate() {
        qm[(i, i)] += w;
    }
    let qm = (&qm + qm.transpose()) * 0.5;
    SynthesisWeights::new(qm, DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&weights.r_diag)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDesign {
    pub region: Region,
    pub inputs: Vec<ExternalInput>,
    pub linear_models: Vec<LinearModel>,
    /// Scaled vertex set.
    pub models: ModelSet,
    pub weights: SynthesisWeights,
    /// Scaled-coordinate synthesis result.
    pub result: SynthesisResult,
    pub report: CertificateReport,
    /// Gain in physical units.
    pub k: GainMatrix,
}

#[allow(clippy::too_many_arguments)]
pub fn design_region(
    region: Region,
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    table: &PowerSpeedTable,
    p_ref: f64,
    spec: &RegionSpec,
    scaling: &StateScaling,
    epsilon: f64,
) -> Result<RegionDesign> {
    let v_d = region_boundary_speed(params, surface, p_ref);
    let speeds = match &spec.wind_speeds {
        Some(s) if !s.is_empty() => s.clone(),
        Some(_) => return Err(Error::Validation(format!("{}: empty wind-speed list", region.label()))),
        None => match region {
            Region::Two => region2_wind_speeds(params, v_d),
            Region::Three => region3_wind_speeds(params, v_d),
        },
    };
    if speeds.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Validation(format!(
            "{}: wind speeds must be positive",
            region.label()
        )));
    }
    let inputs = vertex_inputs(params, surface, table, p_ref, &speeds);
    let linear_models = vertex_models(params, surface, &inputs)?;
    let models = scaled_model_set(&linear_models, scaling)?;
    let weights = synthesis_weights(&spec.weights, &models)?;
    let result = synthesize_with(&InteriorPointSolver::default(), &models, &weights, epsilon)
        .map_err(|e| match e {
            Error::Infeasible(m) => Error::Infeasible(format!(
                "{}: {m}; operating points {:?}",
                region.label(),
                speeds
            )),
            other => other,
        })?;
    let report = certificate_report(&result, &models, &weights)?;
    let k_scaled = GainMatrix::from_fn(|i, j| result.k[(i, j)]);
    Ok(RegionDesign {
        region,
        inputs,
        linear_models,
        models,
        weights,
        result,
        report,
        k: scaling.unscale_gain(&k_scaled),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub p_ref: f64,
    pub v_d: f64,
    pub scaling: StateScaling,
    pub table: PowerSpeedTable,
    pub region2: RegionDesign,
    pub region3: RegionDesign,
    pub schedule: GainSchedule,
}

/// Runs both regional syntheses (concurrently where threads exist) and
/// assembles the schedule.
pub fn design(
    params: &TurbineParameters,
    surface: &CoefficientSurface,
    config: &DesignConfig,
) -> Result<Design> {
    config.validate(params)?;
    let table = PowerSpeedTable::generate(params, surface, config.table_nodes)?;
    let scaling = StateScaling::characteristic(params);
    let run = |region: Region, spec: &RegionSpec| {
        design_region(
            region,
            params,
            surface,
            &table,
            config.p_ref,
            spec,
            &scaling,
            config.epsilon,
        )
    };
    // wasm32-unknown-unknown has no threads.
    let (r2, r3) = if cfg!(target_family = "wasm") {
        (run(Region::Two, &config.region2), run(Region::Three, &config.region3))
    } else {
        std::thread::scope(|s| {
            let h2 = s.spawn(|| run(Region::Two, &config.region2));
            let r3 = run(Region::Three, &config.region3);
            (h2.join().expect("region-2 design thread panicked"), r3)
        })
    };
    let (region2, region3) = (r2?, r3?);
    let schedule = GainSchedule {
        k2: region2.k,
        k3: region3.k,
        delta_v: config.delta_v,
    };
    Ok(Design {
        p_ref: config.p_ref,
        v_d: region_boundary_speed(params, surface, config.p_ref),
        scaling,
        table,
        region2,
        region3,
        schedule,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grids() {
        let p = TurbineParameters::default();
        let r3 = region3_wind_speeds(&p, 9.0);
        assert_eq!(r3.len(), 4);
        assert_eq!(r3[0], 10.0);
        assert_eq!(r3[3], 24.0);
        let r2 = region2_wind_speeds(&p, 9.0);
        assert_eq!(r2[0], 5.0);
        assert_eq!(r2[3], 8.0);
    }

    #[test]
    fn weights_reject_nonpositive_r() {
        let mut w = RegionWeights::default_region3();
        w.r_diag[1] = 0.0;
        assert!(w.validate().is_err());
    }
}
