use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::algebra::{GradedMatrix, LefschetzNumbers, LerayReduced, MatrixJson};
use crate::index_pair::IsolationEvidence;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub dim: usize,
    pub scale: u32,
    pub slabs: i32,
    pub region_tops: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolationReport {
    pub rotating_lower_bound: f64,
    /// Outcome of the purely combinatorial check on the region.
    pub combinatorial_isolating: bool,
    pub invariant_part_tops: usize,
    pub evidence: IsolationEvidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub n_tops: usize,
    pub l_tops: usize,
    pub n_cubes: usize,
    pub l_cubes: usize,
    pub lifted_n_cubes: usize,
    pub lifted_l_cubes: usize,
    pub exit_collar: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskStats {
    pub n_movable: usize,
    pub l_movable: usize,
    pub unvalidated: usize,
    /// Tube certificates stored for the witness supports.
    pub certificates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub unknowns: BTreeMap<usize, usize>,
    pub equations: BTreeMap<usize, usize>,
    pub kernel_dims: BTreeMap<usize, usize>,
    pub pivots_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LerayReport {
    pub reduced_dims: BTreeMap<i32, usize>,
    pub matrix: Vec<MatrixJson>,
    pub invariant_factors: BTreeMap<i32, Vec<String>>,
}

impl LerayReport {
    pub fn new(l: &LerayReduced) -> LerayReport {
        LerayReport {
            reduced_dims: l.reduced_dims.clone(),
            matrix: l.matrix.to_json(),
            invariant_factors: factor_strings(&l.invariant_factors),
        }
    }
}

pub fn factor_strings(f: &BTreeMap<i32, Vec<crate::algebra::Poly>>) -> BTreeMap<i32, Vec<String>> {
    f.iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(q, v)| (*q, v.iter().map(ToString::to_string).collect()))
        .collect()
}

/// Lefschetz numbers as plain integers where they are integral.
pub fn lefschetz_strings(l: &LefschetzNumbers) -> Vec<String> {
    l.values
        .iter()
        .map(|v| {
            let s = v.to_string();
            s.strip_suffix("/1").map(str::to_string).unwrap_or(s)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FixedPointDetected,
    NoConclusion,
    /// Lefschetz numbers are only computed over the rationals.
    NotOverRationals,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossCheck {
    Disabled,
    Matching {
        invariant_factors: BTreeMap<i32, Vec<String>>,
    },
    Unavailable {
        reason: String,
    },
    Mismatch {
        invariant_factors: BTreeMap<i32, Vec<String>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialFailure {
    pub stage: String,
    pub message: String,
}

/// Outcome of a run. Identical configs give byte-identical serializations;
/// timings and enclosure counters live in [`super::Instrumentation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConleyReport {
    pub config: RunConfig,
    pub config_sha256: String,
    pub grid: GridStats,
    pub isolation: IsolationReport,
    pub index_pair: PairStats,
    /// Dimensions of `H(N₀, L₀)` per degree.
    pub homology_dims: BTreeMap<usize, usize>,
    pub mask: Option<MaskStats>,
    pub solver: Option<SolverStats>,
    pub matrix_a: Option<Vec<MatrixJson>>,
    pub leray: Option<LerayReport>,
    /// `Λ(Πⁿ)` for `n = 1..=n_max`, over the rationals only.
    pub lefschetz: Option<Vec<String>>,
    pub verdict: Option<Verdict>,
    pub cross_check: CrossCheck,
    /// Set only in `allow_partial` mode when a stage failed.
    pub partial: Option<PartialFailure>,
}

impl ConleyReport {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn set_lefschetz(&mut self, l: Option<&LefschetzNumbers>) {
        self.lefschetz = l.map(lefschetz_strings);
        self.verdict = Some(match l {
            None => Verdict::NotOverRationals,
            Some(l) if l.fixed_point_detected => Verdict::FixedPointDetected,
            Some(_) => Verdict::NoConclusion,
        });
    }

    pub fn matrix(&self) -> Option<GradedMatrix> {
        let field = self.config.coefficient_field().ok()?;
        GradedMatrix::from_json(field, self.matrix_a.as_ref()?).ok()
    }

    /// Plain-text rendering for terminals.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(s, "system      {} (config {})", c.name, &self.config_sha256[..12]);
        let _ = writeln!(
            s,
            "grid        D = {}, s = {}, {} slabs, {} region tops, h = {}, field {}",
            self.grid.dim, self.grid.scale, self.grid.slabs, self.grid.region_tops, c.h, c.coefficients
        );
        let i = &self.isolation;
        let _ = writeln!(
            s,
            "isolation   {:?} (combinatorial: {}, invariant part {} tops), rotation speed >= {}",
            i.evidence, i.combinatorial_isolating, i.invariant_part_tops, i.rotating_lower_bound
        );
        let p = &self.index_pair;
        let _ = writeln!(
            s,
            "index pair  N {} tops / {} cubes, L {} tops / {} cubes, exit collar {}",
            p.n_tops, p.n_cubes, p.l_tops, p.l_cubes, p.exit_collar
        );
        let _ = writeln!(s, "H(N0, L0)   {}", dims_text(&self.homology_dims));
        if let Some(m) = &self.mask {
            let _ = writeln!(
                s,
                "movable     {} in N, {} in L, {} unvalidated, {} certificates",
                m.n_movable, m.l_movable, m.unvalidated, m.certificates
            );
        }
        if let Some(v) = &self.solver {
            let _ = writeln!(
                s,
                "solver      kernel dims {:?}, pivots {}",
                v.kernel_dims,
                &v.pivots_sha256[..12]
            );
        }
        if let Some(a) = &self.matrix_a {
            for b in a {
                let e: Vec<String> = b.entries.iter().map(|(i, j, v)| format!("({i},{j})={v}")).collect();
                let _ = writeln!(s, "A[{}]        {}x{} {}", b.degree, b.rows, b.cols, e.join(" "));
            }
        }
        if let Some(l) = &self.leray {
            for (q, f) in &l.invariant_factors {
                let _ = writeln!(s, "factors[{q}]  {}", f.join(", "));
            }
        }
        if let Some(l) = &self.lefschetz {
            let _ = writeln!(s, "Lefschetz   {}", l.join(", "));
        }
        if let Some(v) = &self.verdict {
            let _ = writeln!(s, "verdict     {v:?}");
        }
        let _ = writeln!(s, "cross-check {}", cross_check_text(&self.cross_check));
        if let Some(p) = &self.partial {
            let _ = writeln!(s, "PARTIAL     stopped at {}: {}", p.stage, p.message);
        }
        s
    }
}

fn dims_text(d: &BTreeMap<usize, usize>) -> String {
    let parts: Vec<String> = d
        .iter()
        .filter(|(_, n)| **n > 0)
        .map(|(q, n)| format!("H{q} = {n}"))
        .collect();
    if parts.is_empty() {
        "trivial".into()
    } else {
        parts.join(", ")
    }
}

fn cross_check_text(c: &CrossCheck) -> String {
    match c {
        CrossCheck::Disabled => "disabled".into(),
        CrossCheck::Matching { .. } => "matching".into(),
        CrossCheck::Unavailable { reason } => format!("unavailable ({reason})"),
        CrossCheck::Mismatch { invariant_factors } => format!("MISMATCH {invariant_factors:?}"),
    }
}
