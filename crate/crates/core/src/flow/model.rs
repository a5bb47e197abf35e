use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::expr::Expr;
use super::interval::{box_from_bounds, Interval, IntervalBox};
use super::FlowError;
use crate::cubical::{CubeSet, Grid};

/// Records the integration durations of every validated enclosure, so a run
/// can prove it never integrated past its short time step.
#[derive(Clone, Debug, Default)]
pub struct EnclosureMeter {
    inner: Arc<MeterInner>,
}

#[derive(Debug, Default)]
struct MeterInner {
    max_duration_bits: AtomicU64,
    count: AtomicU64,
}

impl EnclosureMeter {
    pub fn record(&self, duration: f64) {
        self.inner.count.fetch_add(1, Ordering::Relaxed);
        // Non-negative f64 bit patterns order like the values.
        self.inner
            .max_duration_bits
            .fetch_max(duration.max(0.0).to_bits(), Ordering::Relaxed);
    }

    pub fn max_duration(&self) -> f64 {
        f64::from_bits(self.inner.max_duration_bits.load(Ordering::Relaxed))
    }

    pub fn count(&self) -> u64 {
        self.inner.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.inner.count.store(0, Ordering::Relaxed);
        self.inner.max_duration_bits.store(0, Ordering::Relaxed);
    }
}

/// Vector field with its integration parameters.
#[derive(Clone, Debug)]
pub struct FlowModel {
    pub field: Vec<Expr>,
    pub angular_axis: Option<usize>,
    /// Bound on `‖Dv‖` (max-row-sum norm) over the working region.
    pub lipschitz_bound: f64,
    pub h: f64,
    /// Relative widening applied to every inexact floating-point result.
    pub eps: f64,
    pub substeps: u32,
    /// Largest admissible image width before a refinement error.
    pub width_cap: f64,
    pub max_iterations: u32,
    /// Non-angular bounds that translation tubes must stay inside.
    pub working_region: Option<IntervalBox>,
    pub meter: EnclosureMeter,
}

pub const DEFAULT_EPS: f64 = 1.0 / (1u64 << 50) as f64;

impl FlowModel {
    pub fn new(field: Vec<Expr>, angular_axis: Option<usize>, lipschitz_bound: f64, h: f64) -> FlowModel {
        FlowModel {
            field,
            angular_axis,
            lipschitz_bound,
            h,
            eps: DEFAULT_EPS,
            substeps: 4,
            width_cap: 1.0,
            max_iterations: 30,
            working_region: None,
            meter: EnclosureMeter::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.field.len()
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let d = self.dim();
        if d == 0 {
            return Err(FlowError::Config("vector field has no components".into()));
        }
        if let Some(i) = self.field.iter().filter_map(Expr::max_var).max() {
            if i >= d {
                return Err(FlowError::Config(format!("variable x{i} outside dimension {d}")));
            }
        }
        if let Some(a) = self.angular_axis {
            if a >= d {
                return Err(FlowError::Config(format!("angular axis {a} outside dimension {d}")));
            }
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(FlowError::Config(format!("time step h = {} must be positive", self.h)));
        }
        if !(self.lipschitz_bound >= 0.0 && self.lipschitz_bound.is_finite()) {
            return Err(FlowError::Config(
                "lipschitz_bound must be finite and non-negative".into(),
            ));
        }
        if !(self.eps >= 0.0 && self.eps < 1e-3) {
            return Err(FlowError::Config(format!("eps = {} outside [0, 1e-3)", self.eps)));
        }
        if self.substeps == 0 || !self.substeps.is_power_of_two() {
            return Err(FlowError::Config(format!(
                "substeps = {} must be a power of two",
                self.substeps
            )));
        }
        if let Some(r) = &self.working_region {
            if r.len() != d {
                return Err(FlowError::Config("working region has wrong dimension".into()));
            }
        }
        Ok(())
    }

    /// Interval extension of the vector field.
    pub fn eval(&self, x: &[Interval]) -> IntervalBox {
        self.field.iter().map(|e| e.eval(x, self.eps)).collect()
    }

    pub fn eval_point(&self, x: &[f64]) -> Vec<f64> {
        self.field.iter().map(|e| e.eval_point(x)).collect()
    }

    pub fn field_json(&self) -> Vec<Value> {
        self.field.iter().map(Expr::to_json).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotatingCheck {
    pub rotating: bool,
    pub lower_bound: f64,
}

/// Infimum over the region of the lower bound of the angular speed.
pub fn rotating_check(m: &FlowModel, grid: &Grid, region: &CubeSet) -> Result<RotatingCheck, FlowError> {
    let axis = m.angular_axis.ok_or(FlowError::NoAngularAxis)?;
    if region.is_empty() {
        return Err(FlowError::Config("rotating check needs a nonempty region".into()));
    }
    let lower_bound = region
        .par_iter()
        .map(|c| m.field[axis].eval(&box_from_bounds(&c.bounds(grid.scale)), m.eps).lo)
        .reduce(|| f64::INFINITY, f64::min);
    Ok(RotatingCheck {
        rotating: lower_bound > 0.0,
        lower_bound,
    })
}
