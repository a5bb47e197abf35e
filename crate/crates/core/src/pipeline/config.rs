use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::PipelineError;
use crate::algebra::Field;
use crate::cubical::{CubeSet, Grid};
use crate::flow::{Expr, FlowModel, DEFAULT_EPS};

/// Every parameter of a run. The CLI flags mirror these fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Vector field components as expression trees; the dimension is the
    /// number of components.
    pub field: Vec<Value>,
    pub angular_axis: usize,
    /// Bounds of the non-angular coordinates, in axis order.
    pub region: Vec<(f64, f64)>,
    pub scale: u32,
    pub h: f64,
    /// `"Q"` or `"Z/p"` with `p` prime.
    pub coefficients: String,
    pub substeps: u32,
    pub eps: f64,
    pub lipschitz_bound: f64,
    pub cross_check: bool,
    pub n_max: u32,
    /// Extra layers of top cubes added to the exit set.
    pub exit_collar: u32,
    pub allow_partial: bool,
}

/// Parses `"Q"`, `"QQ"`, `"Z/p"` or `"Zp"`.
pub fn parse_field(text: &str) -> Result<Field, PipelineError> {
    let t = text.trim();
    if t == "Q" || t == "QQ" {
        return Ok(Field::Rational);
    }
    let p = t
        .strip_prefix("Z/")
        .or_else(|| t.strip_prefix("Z"))
        .and_then(|p| p.parse::<u32>().ok())
        .ok_or_else(|| PipelineError::Config(format!("unknown coefficient field {text:?}; use Q or Z/p")))?;
    Field::prime(p).map_err(|e| PipelineError::Config(e.to_string()))
}

impl RunConfig {
    pub fn dim(&self) -> usize {
        self.field.len()
    }

    pub fn coefficient_field(&self) -> Result<Field, PipelineError> {
        parse_field(&self.coefficients)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let d = self.dim();
        if d < 2 {
            return bad("the vector field needs an angular and at least one other component".into());
        }
        if self.angular_axis >= d {
            return bad(format!("angular axis {} outside dimension {d}", self.angular_axis));
        }
        if self.region.len() != d - 1 {
            return bad(format!("region has {} bounds, expected {}", self.region.len(), d - 1));
        }
        self.grid()
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let unit = (self.scale as f64).exp2();
        for (lo, hi) in &self.region {
            let aligned = |x: f64| (x * unit).fract() == 0.0 && x.is_finite();
            if !(lo < hi) || !aligned(*lo) || !aligned(*hi) {
                return bad(format!(
                    "region bound ({lo}, {hi}) must be increasing and on the grid of scale {}",
                    self.scale
                ));
            }
        }
        if !(self.h > 0.0) {
            return bad(format!("h = {} must be positive", self.h));
        }
        if self.n_max == 0 {
            return bad("n_max must be at least 1".into());
        }
        self.coefficient_field()?;
        self.model()?
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn grid(&self) -> Grid {
        Grid::circular(self.dim(), self.scale, self.angular_axis)
    }

    pub fn model(&self) -> Result<FlowModel, PipelineError> {
        let field = self
            .field
            .iter()
            .map(Expr::from_json)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        let mut m = FlowModel::new(field, Some(self.angular_axis), self.lipschitz_bound, self.h);
        m.substeps = self.substeps;
        m.eps = self.eps;
        Ok(m)
    }

    /// Top cubes of the region times the full angular circle.
    pub fn region_tops(&self) -> CubeSet {
        let g = self.grid();
        let unit = (self.scale as f64).exp2();
        let mut lo = Vec::with_capacity(self.dim());
        let mut hi = Vec::with_capacity(self.dim());
        let mut bounds = self.region.iter();
        for a in 0..self.dim() {
            if a == self.angular_axis {
                lo.push(0);
                hi.push(g.period());
            } else {
                let (l, h) = bounds.next().expect("validated region");
                lo.push((l * unit) as i32);
                hi.push((h * unit) as i32);
            }
        }
        g.box_tops(&lo, &hi)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn ln2_times(sign: f64, var: &str) -> Value {
    json!({"op": "mul", "args": [sign, var, {"op": "ln2"}]})
}

fn base_config(name: &str, field: Vec<Value>, region: Vec<(f64, f64)>) -> RunConfig {
    RunConfig {
        name: name.into(),
        angular_axis: field.len() - 1,
        field,
        region,
        scale: 4,
        h: 1.0 / 16.0,
        coefficients: "Q".into(),
        substeps: 4,
        eps: DEFAULT_EPS,
        // ‖Dv‖ = ln 2 for all three systems.
        lipschitz_bound: 0.7,
        cross_check: true,
        n_max: 4,
        exit_collar: 1,
        allow_partial: false,
    }
}

/// Names of the built-in systems.
pub const BUILTINS: [&str; 3] = ["attracting", "repelling", "saddle"];

/// `ẋ = ∓x·ln2` (and `ẏ = −y·ln2` for the saddle), `θ̇ = 1`, on `[−1, 1]^k`.
pub fn builtin(name: &str) -> Option<RunConfig> {
    let theta = json!(1.0);
    match name {
        "attracting" => Some(base_config(name, vec![ln2_times(-1.0, "x0"), theta], vec![(-1.0, 1.0)])),
        "repelling" => Some(base_config(name, vec![ln2_times(1.0, "x0"), theta], vec![(-1.0, 1.0)])),
        "saddle" => Some(base_config(
            name,
            vec![ln2_times(1.0, "x0"), ln2_times(-1.0, "x1"), theta],
            vec![(-1.0, 1.0), (-1.0, 1.0)],
        )),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_validate() {
        for name in BUILTINS {
            let c = builtin(name).unwrap();
            c.validate().unwrap();
            assert_eq!(c.region_tops().len(), 32usize.pow(c.dim() as u32 - 1) * 16);
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn field_names() {
        assert_eq!(parse_field("Q").unwrap(), Field::Rational);
        assert_eq!(parse_field("Z/2").unwrap(), Field::Prime(2));
        assert!(parse_field("Z/4").is_err());
        assert!(parse_field("R").is_err());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut c = builtin("attracting").unwrap();
        c.region = vec![(-1.0, 0.99)];
        assert!(c.validate().is_err());
        let mut c = builtin("attracting").unwrap();
        c.substeps = 3;
        assert!(c.validate().is_err());
        let mut c = builtin("attracting").unwrap();
        c.coefficients = "Z/9".into();
        assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
        let c = builtin("saddle").unwrap();
        let text = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }
}
