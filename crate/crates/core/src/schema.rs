//! JSON import and export of network descriptions, controller points, and
//! descent configurations.
//!
//! Matrices travel as row-major arrays of arrays of finite numbers. Energy
//! profiles are keyed `"R0", "R1", ...` and weight sequences
//! `"sigma0", "sigma1", ..."`, each set required to be contiguous from zero.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::model::{
    CcrMatrix, ControllerPoint, EnergyBlocks, NetworkSpec, NodeDims, WeightSequence,
};
use crate::synthesis::DescentConfig;

type RawMatrix = Vec<Vec<f64>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDims {
    n1: usize,
    n2: usize,
    m1: usize,
    m2: usize,
    d1: usize,
    d2: usize,
    #[serde(rename = "dTilde")]
    d_tilde: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawController {
    #[serde(rename = "R2")]
    r2: BTreeMap<String, RawMatrix>,
    #[serde(rename = "Rt0")]
    rt0: RawMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dims: RawDims,
    theta1: RawMatrix,
    theta2: RawMatrix,
    #[serde(rename = "plantEnergy")]
    plant_energy: BTreeMap<String, RawMatrix>,
    #[serde(rename = "M1")]
    m1: RawMatrix,
    #[serde(rename = "M2")]
    m2: RawMatrix,
    controller: RawController,
    weights: BTreeMap<String, RawMatrix>,
}

fn matrix(raw: &RawMatrix, what: &str) -> Result<DMatrix<f64>> {
    let rows = raw.len();
    if rows == 0 {
        return Err(Error::InvalidSpec(format!("{what}: matrix has no rows")));
    }
    let cols = raw[0].len();
    if cols == 0 {
        return Err(Error::InvalidSpec(format!("{what}: matrix has no columns")));
    }
    for (i, r) in raw.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::InvalidSpec(format!(
                "{what}: row {i} has {} entries, expected {cols}",
                r.len()
            )));
        }
        for (j, x) in r.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "{what}: entry ({i}, {j}) is not finite"
                )));
            }
        }
    }
    Ok(DMatrix::from_row_iterator(
        rows,
        cols,
        raw.iter().flat_map(|r| r.iter().copied()),
    ))
}

/// Pulls a contiguous `prefix0..prefixK` keyed family out of a map.
fn keyed_family(
    map: &BTreeMap<String, RawMatrix>,
    prefix: &str,
    what: &str,
) -> Result<Vec<DMatrix<f64>>> {
    let mut by_index: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
    for (key, raw) in map {
        let index = key
            .strip_prefix(prefix)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "{what}: key {key:?} does not match {prefix}<index>"
                ))
            })?;
        by_index.insert(index, matrix(raw, &format!("{what}.{key}"))?);
    }
    if by_index.is_empty() {
        return Err(Error::InvalidSpec(format!("{what}: no blocks given")));
    }
    let max = *by_index.keys().last().unwrap();
    let mut out = Vec::with_capacity(max + 1);
    for k in 0..=max {
        match by_index.remove(&k) {
            Some(m) => out.push(m),
            None => {
                return Err(Error::InvalidSpec(format!(
                    "{what}: missing block {prefix}{k}"
                )))
            }
        }
    }
    Ok(out)
}

fn energy_from_map(map: &BTreeMap<String, RawMatrix>, what: &str) -> Result<EnergyBlocks> {
    let mut blocks = keyed_family(map, "R", what)?;
    let r0 = blocks.remove(0);
    EnergyBlocks::new(r0, blocks).map_err(|e| Error::InvalidSpec(format!("{what}: {e}")))
}

/// Parses a network description from JSON text.
pub fn spec_from_str(text: &str) -> Result<NetworkSpec> {
    let raw: RawSpec =
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let dims = NodeDims::new(
        raw.dims.n1,
        raw.dims.n2,
        raw.dims.m1,
        raw.dims.m2,
        raw.dims.d1,
        raw.dims.d2,
        raw.dims.d_tilde,
    )
    .map_err(|e| Error::InvalidSpec(e.to_string()))?;

    let theta1 = CcrMatrix::new(matrix(&raw.theta1, "theta1")?)
        .map_err(|e| Error::InvalidSpec(format!("theta1: {e}")))?;
    let theta2 = CcrMatrix::new(matrix(&raw.theta2, "theta2")?)
        .map_err(|e| Error::InvalidSpec(format!("theta2: {e}")))?;
    let plant_energy = energy_from_map(&raw.plant_energy, "plantEnergy")?;
    let r2 = energy_from_map(&raw.controller.r2, "controller.R2")?;
    let rt0 = matrix(&raw.controller.rt0, "controller.Rt0")?;
    let weights = WeightSequence::new(
        keyed_family(&raw.weights, "sigma", "weights")?,
    )
    .map_err(|e| Error::InvalidSpec(format!("weights: {e}")))?;

    NetworkSpec::new(
        dims,
        theta1,
        theta2,
        plant_energy,
        matrix(&raw.m1, "M1")?,
        matrix(&raw.m2, "M2")?,
        weights,
        ControllerPoint::new(r2, rt0),
    )
    .map_err(|e| Error::InvalidSpec(e.to_string()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "maxIters")]
    max_iters: Option<usize>,
    #[serde(rename = "initStep")]
    init_step: Option<f64>,
    #[serde(rename = "backtrackFactor")]
    backtrack_factor: Option<f64>,
    #[serde(rename = "armijoC")]
    armijo_c: Option<f64>,
    #[serde(rename = "stationarityTol")]
    stationarity_tol: Option<f64>,
    #[serde(rename = "quadPoints")]
    quad_points: Option<usize>,
    seed: Option<u64>,
}

/// Parses a descent configuration from JSON text; absent fields keep their
/// defaults.
pub fn config_from_str(text: &str) -> Result<DescentConfig> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let d = DescentConfig::default();
    Ok(DescentConfig {
        max_iters: raw.max_iters.unwrap_or(d.max_iters),
        init_step: raw.init_step.unwrap_or(d.init_step),
        backtrack_factor: raw.backtrack_factor.unwrap_or(d.backtrack_factor),
        armijo_c: raw.armijo_c.unwrap_or(d.armijo_c),
        stationarity_tol: raw.stationarity_tol.unwrap_or(d.stationarity_tol),
        quad_points: raw.quad_points.unwrap_or(d.quad_points),
        seed: raw.seed.unwrap_or(d.seed),
    })
}

fn matrix_to_value(m: &DMatrix<f64>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            let row: Vec<Value> = (0..m.ncols()).map(|j| json!(m[(i, j)])).collect();
            Value::Array(row)
        })
        .collect();
    Value::Array(rows)
}

fn energy_to_map(e: &EnergyBlocks) -> Value {
    let mut map = Map::new();
    map.insert("R0".into(), matrix_to_value(e.r0()));
    for (i, r) in e.positive().iter().enumerate() {
        map.insert(format!("R{}", i + 1), matrix_to_value(r));
    }
    Value::Object(map)
}

/// Renders a controller point in the same JSON shape the parser accepts.
pub fn controller_to_value(ctrl: &ControllerPoint) -> Value {
    let mut map = Map::new();
    map.insert("R2".into(), energy_to_map(ctrl.r2()));
    map.insert("Rt0".into(), matrix_to_value(ctrl.rt0()));
    Value::Object(map)
}

/// Parses a controller point from JSON text.
pub fn controller_from_str(text: &str) -> Result<ControllerPoint> {
    let raw: RawController =
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let r2 = energy_from_map(&raw.r2, "R2")?;
    let rt0 = matrix(&raw.rt0, "Rt0")?;
    Ok(ControllerPoint::new(r2, rt0))
}

/// Renders a full network description in the shape the parser accepts.
pub fn spec_to_value(spec: &NetworkSpec) -> Value {
    let dims = spec.dims();
    let mut weights = Map::new();
    for k in 0..=spec.weights().lag() {
        weights.insert(format!("sigma{k}"), matrix_to_value(spec.weights().sigma(k)));
    }
    json!({
        "dims": {
            "n1": dims.n1,
            "n2": dims.n2,
            "m1": dims.m1,
            "m2": dims.m2,
            "d1": dims.d1,
            "d2": dims.d2,
            "dTilde": dims.d_tilde,
        },
        "theta1": matrix_to_value(spec.theta1().matrix()),
        "theta2": matrix_to_value(spec.theta2().matrix()),
        "plantEnergy": energy_to_map(spec.plant_energy()),
        "M1": matrix_to_value(spec.m1()),
        "M2": matrix_to_value(spec.m2()),
        "controller": controller_to_value(spec.controller()),
        "weights": Value::Object(weights),
    })
}
