use serde::{Deserialize, Serialize};

use super::interval::{box_hull, box_intersect, box_max_width, box_subset, Interval, IntervalBox};
use super::model::FlowModel;
use super::FlowError;

/// Tube and time-`h` image of a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnclosureResult {
    pub tube: IntervalBox,
    pub image: IntervalBox,
    pub validated: bool,
}

/// Tube enclosure over one time interval, with its validation flag.
#[derive(Clone, Debug, PartialEq)]
pub struct RoughEnclosure {
    pub tube: IntervalBox,
    pub validated: bool,
}

fn sweep(m: &FlowModel, b: &[Interval], e: &[Interval], delta: f64) -> IntervalBox {
    let span = Interval::new(0.0, delta);
    let v = m.eval(e);
    b.iter()
        .zip(&v)
        .map(|(x, vi)| x.hull(&x.add(&span.mul(vi, m.eps), m.eps)))
        .collect()
}

fn inflate(b: &[Interval]) -> IntervalBox {
    b.iter()
        .map(|x| {
            let pad = 0.1 * (x.hi - x.lo) + 1e-12 * (1.0 + x.mag());
            Interval::new((x.lo - pad).next_down(), (x.hi + pad).next_up())
        })
        .collect()
}

/// Encloses `φ(B, [0, δ])` by the a-priori fixed-point test
/// `B + [0, δ]·v(E) ⊆ E`.
pub fn rough_enclosure_over(m: &FlowModel, b: &[Interval], delta: f64) -> RoughEnclosure {
    let mut e = inflate(&sweep(m, b, b, delta));
    for _ in 0..m.max_iterations {
        let next = sweep(m, b, &e, delta);
        if next.iter().all(Interval::is_finite) && box_subset(&next, &e) {
            // Trajectories stay in E, so their velocities lie in v(E) and the
            // tighter sweep already contains them.
            m.meter.record(delta);
            return RoughEnclosure {
                tube: next,
                validated: true,
            };
        }
        e = inflate(&box_hull(&next, &e));
    }
    RoughEnclosure {
        tube: e,
        validated: false,
    }
}

/// Rough enclosure over the model's full step `h`.
pub fn rough_enclosure(m: &FlowModel, b: &[Interval]) -> RoughEnclosure {
    rough_enclosure_over(m, b, m.h)
}

/// One validated Euler step of length `delta`: returns `(tube, image)`.
pub(crate) fn euler_step(m: &FlowModel, x: &[Interval], delta: f64) -> Result<(IntervalBox, IntervalBox), FlowError> {
    let eps = m.eps;
    let rough = rough_enclosure_over(m, x, delta);
    if !rough.validated {
        return Err(FlowError::Refinement(format!(
            "no rough enclosure over time {delta} for box {x:?}; reduce h or the grid size"
        )));
    }
    let tube = rough.tube;
    let d = Interval::point(delta);
    let ve = m.eval(&tube);
    // Mean-value form: φ(x₀, δ) ∈ x₀ + δ·v(E).
    let simple: IntervalBox = x.iter().zip(&ve).map(|(xi, vi)| xi.add(&d.mul(vi, eps), eps)).collect();
    // Lipschitz form around the midpoint.
    let mid: Vec<f64> = x.iter().map(Interval::mid).collect();
    let mid_box: IntervalBox = mid.iter().map(|&c| Interval::point(c)).collect();
    let vm = m.eval(&mid_box);
    let norm_v = ve.iter().map(Interval::mag).fold(0.0, f64::max);
    let radius = x
        .iter()
        .zip(&mid)
        .map(|(xi, &c)| (c - xi.lo).max(xi.hi - c).next_up())
        .fold(0.0, f64::max);
    let lip = Interval::point(m.lipschitz_bound);
    let growth = lip.mul(&d, eps).exp(eps);
    let remainder = d
        .mul(&d, eps)
        .mul(&Interval::point(0.5), eps)
        .mul(&lip, eps)
        .mul(&Interval::point(norm_v), eps)
        .add(&growth.mul(&Interval::point(radius), eps), eps)
        .hi;
    let spread = Interval::new(-remainder, remainder);
    let lipschitz: IntervalBox = mid_box
        .iter()
        .zip(&vm)
        .map(|(c, vi)| c.add(&d.mul(vi, eps), eps).add(&spread, eps))
        .collect();
    let image = box_intersect(&simple, &lipschitz)
        .ok_or_else(|| FlowError::Refinement("inconsistent step enclosures (empty intersection)".into()))?;
    Ok((tube, image))
}

/// Encloses `φ^h(B)` by `substeps` validated Euler steps.
pub fn time_h_image(m: &FlowModel, b: &[Interval], substeps: u32) -> Result<EnclosureResult, FlowError> {
    if substeps == 0 || !substeps.is_power_of_two() {
        return Err(FlowError::Config(format!(
            "substeps = {substeps} must be a power of two"
        )));
    }
    let delta = m.h / substeps as f64;
    let mut x: IntervalBox = b.to_vec();
    let mut tube = x.clone();
    for _ in 0..substeps {
        let (t, next) = euler_step(m, &x, delta)?;
        tube = box_hull(&tube, &t);
        let w = box_max_width(&next);
        if !(w <= m.width_cap) {
            return Err(FlowError::Blowup {
                width: w,
                cap: m.width_cap,
            });
        }
        x = next;
    }
    Ok(EnclosureResult {
        tube,
        image: x,
        validated: true,
    })
}

fn drop_axis(b: &[Interval], axis: usize) -> IntervalBox {
    b.iter()
        .enumerate()
        .filter(|(i, _)| *i != axis)
        .map(|(_, x)| *x)
        .collect()
}

/// Encloses the first-arrival set at angle `to` of trajectories starting in
/// the section box `b` at angle `from`. `b` omits the angular coordinate.
pub fn translation_between(m: &FlowModel, b: &[Interval], from: f64, to: f64) -> Result<IntervalBox, FlowError> {
    let axis = m.angular_axis.ok_or(FlowError::NoAngularAxis)?;
    if to < from {
        return Err(FlowError::Config(format!("target angle {to} precedes start {from}")));
    }
    if to == from {
        return Ok(b.to_vec());
    }
    let mut x: IntervalBox = b.to_vec();
    x.insert(axis, Interval::point(from));
    let delta = m.h / m.substeps as f64;
    let max_steps = (64.0 * (to - from) / delta).ceil().max(64.0) as usize;
    let mut acc: Option<IntervalBox> = None;
    for _ in 0..max_steps {
        let (tube, next) = euler_step(m, &x, delta)?;
        if let Some(region) = &m.working_region {
            let inside = tube
                .iter()
                .zip(region)
                .enumerate()
                .all(|(i, (t, r))| i == axis || t.subset_of(r));
            if !inside {
                return Err(FlowError::UndefinedTranslation(format!(
                    "tube {tube:?} leaves the working region before angle {to}"
                )));
            }
        }
        let speed = m.eval(&tube)[axis].lo;
        if !(speed > 0.0) {
            return Err(FlowError::NotRotating(speed));
        }
        if box_max_width(&next) > m.width_cap {
            return Err(FlowError::Blowup {
                width: box_max_width(&next),
                cap: m.width_cap,
            });
        }
        let theta = next[axis];
        if theta.lo == to && theta.hi == to {
            // Every trajectory reaches `to` exactly at the end of this step.
            return Ok(drop_axis(&next, axis));
        }
        if tube[axis].contains(to) {
            let piece = drop_axis(&tube, axis);
            acc = Some(match acc {
                Some(a) => box_hull(&a, &piece),
                None => piece,
            });
        }
        if theta.lo > to {
            return acc.ok_or_else(|| FlowError::Refinement("angle crossed between steps".into()));
        }
        x = next;
    }
    Err(FlowError::UndefinedTranslation(format!(
        "angle {to} not reached within {max_steps} steps"
    )))
}

/// Encloses `Φ_a(B)` for a box `B` in the angle-0 section.
pub fn translation_enclosure(m: &FlowModel, b: &[Interval], a: f64) -> Result<IntervalBox, FlowError> {
    translation_between(m, b, 0.0, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::expr::Expr;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi)
    }

    fn rotation(h: f64) -> FlowModel {
        FlowModel::new(vec![Expr::c(0.0), Expr::c(1.0)], Some(1), 0.0, h)
    }

    #[test]
    fn zero_field_tube_is_box() {
        let m = FlowModel::new(vec![Expr::c(0.0), Expr::c(0.0)], None, 0.0, 0.5);
        let b = vec![iv(0.0, 0.25), iv(-0.25, 0.25)];
        let r = rough_enclosure(&m, &b);
        assert!(r.validated);
        assert_eq!(r.tube, b);
        assert_eq!(time_h_image(&m, &b, 4).unwrap().image, b);
    }

    #[test]
    fn rotation_tube_and_image() {
        let m = rotation(0.0625);
        let b = vec![iv(0.0, 0.0625), iv(0.25, 0.3125)];
        let r = rough_enclosure(&m, &b);
        assert_eq!(r.tube, vec![iv(0.0, 0.0625), iv(0.25, 0.375)]);
        let m = rotation(0.125);
        let img = time_h_image(&m, &b, 4).unwrap();
        assert_eq!(img.image, vec![iv(0.0, 0.0625), iv(0.375, 0.4375)]);
        assert!(box_subset(&img.image, &img.tube));
    }

    #[test]
    fn contraction_tube_stays_in_box() {
        let m = FlowModel::new(vec![Expr::neg(Expr::x(0))], None, 1.0, 0.1);
        let b = vec![iv(0.5, 1.0)];
        let r = rough_enclosure(&m, &b);
        assert!(r.validated);
        assert!(r.tube[0].lo >= 0.5 - 0.11 && r.tube[0].hi == 1.0);
    }

    #[test]
    fn halving_flow_image() {
        let v = Expr::mul(vec![Expr::neg(Expr::x(0)), Expr::Ln2]);
        let m = FlowModel::new(vec![v], None, std::f64::consts::LN_2 * 1.0001, 1.0);
        let r = time_h_image(&m, &[Interval::point(1.0)], 64).unwrap();
        assert!(r.image[0].contains(0.5));
        assert!(r.image[0].width() < 0.05, "{:?}", r.image);
    }

    #[test]
    fn translation_examples() {
        let m = rotation(0.0625);
        let b = vec![iv(-0.25, 0.5)];
        assert_eq!(translation_enclosure(&m, &b, 0.5).unwrap(), b);
        assert_eq!(translation_enclosure(&m, &b, 0.0).unwrap(), b);
        let v = Expr::mul(vec![Expr::neg(Expr::x(0)), Expr::Ln2]);
        let mut m = FlowModel::new(vec![v, Expr::c(1.0)], Some(1), 0.7, 0.0625);
        let p = translation_enclosure(&m, &[Interval::point(1.0)], 1.0).unwrap();
        assert!(p[0].contains(0.5) && p[0].width() < 0.1, "{p:?}");
        m.working_region = Some(vec![iv(0.9, 1.1), Interval::entire()]);
        assert!(matches!(
            translation_enclosure(&m, &[Interval::point(1.0)], 1.0),
            Err(FlowError::UndefinedTranslation(_))
        ));
    }
}
