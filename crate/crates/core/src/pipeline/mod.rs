//! End-to-end runs: configuration, the stage chain from the vector field to
//! the Leray-reduced index map, reports, bundles and the stage cache.

mod bundle;
mod cache;
mod config;
mod report;

pub use bundle::{
    decode, encode, load_state, save_state, verify_bundle, verify_loaded, Bundle, BundleError, BundleVerification,
    BUNDLE_VERSION,
};
pub use cache::{StageCache, CACHE_ENV};
pub use config::{builtin, parse_field, RunConfig, BUILTINS};
pub use report::{
    factor_strings, lefschetz_strings, ConleyReport, CrossCheck, GridStats, IsolationReport, LerayReport, MaskStats,
    PairStats, PartialFailure, SolverStats, Verdict,
};

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{lefschetz_numbers, leray_reduce, AlgebraError, Field, GradedMatrix};
use crate::contiguity::{
    contiguity_witness, corollary_transport, movability_mask, verify_witness, ContiguityError, ContiguityRun,
    MovabilityMask, TubeCertificate,
};
use crate::cubical::{lift_to_cover, CoveringGrid, Cube, CubeSet, CubicalError};
use crate::flow::{rotating_check, EnclosureMeter, FlowError, FlowModel};
use crate::homology::relative_homology;
use crate::index_pair::{
    build_index_pair, isolating_check, outer_approximation, thicken_exit_set, verify_index_pair, BuiltPair,
    IndexPairError, MultivaluedCubeMap,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Rotation,
    OuterApproximation,
    IndexPair,
    Cover,
    Movability,
    Contiguity,
    WitnessCheck,
    Leray,
    CrossCheck,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        write!(f, "{}", s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("[{stage}] refinement needed: {message}")]
    Refinement { stage: Stage, message: String },
    #[error("[{stage}] verification mismatch: {message}")]
    Mismatch { stage: Stage, message: String },
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

impl PipelineError {
    /// 0 pass, 2 refinement needed, 3 verification mismatch, 4 config or
    /// input error.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 4,
            PipelineError::Refinement { .. } => 2,
            PipelineError::Mismatch { .. } => 3,
            PipelineError::Bundle(BundleError::Version { .. } | BundleError::Io(_)) => 4,
            PipelineError::Bundle(_) => 3,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PipelineError::Refinement { stage, .. } | PipelineError::Mismatch { stage, .. } => Some(*stage),
            PipelineError::Config(_) => Some(Stage::Config),
            PipelineError::Bundle(_) => None,
        }
    }

    fn refine(stage: Stage, e: impl ToString) -> PipelineError {
        PipelineError::Refinement {
            stage,
            message: e.to_string(),
        }
    }

    fn mismatch(stage: Stage, e: impl ToString) -> PipelineError {
        PipelineError::Mismatch {
            stage,
            message: e.to_string(),
        }
    }

    fn from_flow(stage: Stage, e: FlowError) -> PipelineError {
        match e {
            FlowError::Expr(_) | FlowError::Config(_) | FlowError::NoAngularAxis => {
                PipelineError::Config(e.to_string())
            }
            FlowError::Refinement(m) => PipelineError::refine(stage, m),
            _ => PipelineError::refine(stage, e),
        }
    }

    fn from_cubical(stage: Stage, e: CubicalError) -> PipelineError {
        PipelineError::mismatch(stage, e)
    }

    fn from_contiguity(stage: Stage, e: ContiguityError) -> PipelineError {
        match e {
            ContiguityError::NotMovable { .. }
            | ContiguityError::Infeasible { .. }
            | ContiguityError::MissingSolve { .. }
            | ContiguityError::TransportUnavailable(_) => PipelineError::refine(stage, e),
            _ => PipelineError::mismatch(stage, e),
        }
    }
}

/// Where run-time side data goes; not part of the report.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub cache: Option<StageCache>,
}

impl RunOptions {
    pub fn from_env() -> RunOptions {
        RunOptions {
            cache: StageCache::from_env(),
        }
    }
}

/// Enclosure counters and timings of one run.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Instrumentation {
    /// Validated enclosures of the short-time stages.
    pub enclosures: u64,
    /// Longest integration time of any of them.
    pub max_duration: f64,
    pub h: f64,
    pub substep: f64,
    /// The full-period transport cross-check is metered separately; its
    /// steps are chained over a whole period.
    pub transport_enclosures: u64,
    pub transport_max_step: f64,
    pub timings: Vec<(Stage, f64)>,
    pub cache_hits: Vec<Stage>,
}

impl Instrumentation {
    /// No short-time enclosure ran longer than `h` plus one substep.
    pub fn short_time_ok(&self) -> bool {
        self.max_duration <= self.h + self.substep
    }

    pub fn seconds(&self, stage: Stage) -> f64 {
        self.timings.iter().filter(|(s, _)| *s == stage).map(|(_, t)| t).sum()
    }

    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|(_, t)| t).sum()
    }
}

/// Report plus the intermediate objects the later checks reuse.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub report: ConleyReport,
    pub field: Field,
    pub model: FlowModel,
    pub map: MultivaluedCubeMap,
    pub built: BuiltPair,
    pub cov: CoveringGrid,
    pub mask: Option<MovabilityMask>,
    pub contiguity: Option<ContiguityRun>,
    pub transport: Option<GradedMatrix>,
    pub instrumentation: Instrumentation,
}

impl RunArtifacts {
    /// Bundle of a complete run.
    pub fn bundle(&self) -> Option<Bundle> {
        let run = self.contiguity.as_ref()?;
        let mask = self.mask.as_ref()?;
        let w = &run.witness;
        let mut cubes: CubeSet = CubeSet::new();
        for sols in w.solutions.values() {
            for s in sols {
                cubes.extend(s.c.support().copied());
                cubes.extend(s.d.support().copied());
            }
        }
        for reps in w.basis.values() {
            for z in reps {
                for a in [w.from, w.to] {
                    cubes.extend(z.support().map(|c| self.cov.lift_section_cube(c, a)));
                }
            }
        }
        let certificates: Vec<TubeCertificate> = mask.certificates(&self.cov, &cubes);
        Some(Bundle {
            report: self.report.clone(),
            pair: self.cov.base_pair.to_json(),
            witness: w.to_json(),
            certificates,
        })
    }
}

/// Runs the stage chain with the cache named by `CONLEY_CACHE_DIR`.
pub fn run(config: &RunConfig) -> Result<ConleyReport, PipelineError> {
    run_full(config, &RunOptions::from_env()).map(|a| a.report)
}

#[derive(Serialize, Deserialize)]
struct MaskCache {
    tubes: Vec<TubeCertificate>,
    unvalidated: Vec<Cube>,
}

struct Clock {
    timings: Vec<(Stage, f64)>,
    start: Instant,
}

impl Clock {
    fn lap(&mut self, stage: Stage) {
        let now = Instant::now();
        self.timings.push((stage, (now - self.start).as_secs_f64()));
        self.start = now;
    }
}

pub fn run_full(config: &RunConfig, opts: &RunOptions) -> Result<RunArtifacts, PipelineError> {
    config.validate()?;
    let field = config.coefficient_field()?;
    let model = config.model()?;
    model.meter.reset();
    let grid = config.grid();
    let key = config.hash();
    let mut clock = Clock {
        timings: Vec::new(),
        start: Instant::now(),
    };
    let mut cache_hits = Vec::new();
    clock.lap(Stage::Config);

    let domain = config.region_tops();
    let rot = rotating_check(&model, &grid, &domain).map_err(|e| PipelineError::from_flow(Stage::Rotation, e))?;
    if !rot.rotating {
        return Err(PipelineError::refine(
            Stage::Rotation,
            format!(
                "angular speed lower bound {} is not positive on the region",
                rot.lower_bound
            ),
        ));
    }
    clock.lap(Stage::Rotation);

    let cached_map = opts
        .cache
        .as_ref()
        .and_then(|c| c.load::<Vec<(Cube, Vec<(f64, f64)>)>>(&key, "outer"));
    let map = match cached_map {
        Some(boxes) => {
            cache_hits.push(Stage::OuterApproximation);
            MultivaluedCubeMap::from_image_boxes(grid, boxes.into_iter().collect())
        }
        None => {
            let f = outer_approximation(&grid, &domain, &model)
                .map_err(|e| index_pair_error(Stage::OuterApproximation, e))?;
            if let Some(c) = &opts.cache {
                let boxes: Vec<_> = f.image_boxes.iter().map(|(q, b)| (*q, b.clone())).collect();
                c.store(&key, "outer", &boxes);
            }
            f
        }
    };
    let iso = isolating_check(&domain, &map);
    clock.lap(Stage::OuterApproximation);

    let mut built = build_index_pair(&domain, &map, Some(&model)).map_err(|e| index_pair_error(Stage::IndexPair, e))?;
    if config.exit_collar > 0 {
        built = thicken_exit_set(&built, &map, Some(&model), config.exit_collar)
            .map_err(|e| index_pair_error(Stage::IndexPair, e))?;
    } else {
        let d = verify_index_pair(&built.pair, &map, Some(&model));
        if !d.pass() {
            return Err(PipelineError::mismatch(
                Stage::IndexPair,
                format!("built pair fails re-verification: {d:?}"),
            ));
        }
    }
    clock.lap(Stage::IndexPair);

    let cov = lift_to_cover(&built.pair).map_err(|e| PipelineError::from_cubical(Stage::Cover, e))?;
    let s0 = cov
        .section_at(0)
        .map_err(|e| PipelineError::from_cubical(Stage::Cover, e))?;
    let homology_dims = relative_homology(&s0, field).dims();
    clock.lap(Stage::Cover);

    let mut report = ConleyReport {
        config: config.clone(),
        config_sha256: key.clone(),
        grid: GridStats {
            dim: grid.dim,
            scale: grid.scale,
            slabs: grid.period(),
            region_tops: domain.len(),
        },
        isolation: IsolationReport {
            rotating_lower_bound: rot.lower_bound,
            combinatorial_isolating: iso.isolating,
            invariant_part_tops: iso.invariant_part,
            evidence: built.evidence.clone(),
        },
        index_pair: PairStats {
            n_tops: built.n_tops.len(),
            l_tops: built.l_tops.len(),
            n_cubes: built.pair.n.len(),
            l_cubes: built.pair.l.len(),
            lifted_n_cubes: cov.lifted_pair.n.len(),
            lifted_l_cubes: cov.lifted_pair.l.len(),
            exit_collar: config.exit_collar,
        },
        homology_dims,
        mask: None,
        solver: None,
        matrix_a: None,
        leray: None,
        lefschetz: None,
        verdict: None,
        cross_check: CrossCheck::Disabled,
        partial: None,
    };
    let mut art = RunArtifacts {
        report: report.clone(),
        field,
        model: model.clone(),
        map,
        built,
        cov,
        mask: None,
        contiguity: None,
        transport: None,
        instrumentation: Instrumentation::default(),
    };

    let outcome = later_stages(config, opts, &key, &mut art, &mut report, &mut clock, &mut cache_hits);
    art.instrumentation = Instrumentation {
        enclosures: model.meter.count(),
        max_duration: model.meter.max_duration(),
        h: model.h,
        substep: model.h / model.substeps as f64,
        transport_enclosures: art.instrumentation.transport_enclosures,
        transport_max_step: art.instrumentation.transport_max_step,
        timings: clock.timings,
        cache_hits,
    };
    match outcome {
        Ok(()) => {}
        Err(PipelineError::Refinement { stage, message }) if config.allow_partial => {
            report.partial = Some(PartialFailure {
                stage: stage.to_string(),
                message,
            });
        }
        Err(e) => return Err(e),
    }
    art.report = report;
    Ok(art)
}

fn index_pair_error(stage: Stage, e: IndexPairError) -> PipelineError {
    match e {
        IndexPairError::Refinement(m) => PipelineError::refine(stage, m),
        e => PipelineError::refine(stage, e),
    }
}

fn later_stages(
    config: &RunConfig,
    opts: &RunOptions,
    key: &str,
    art: &mut RunArtifacts,
    report: &mut ConleyReport,
    clock: &mut Clock,
    cache_hits: &mut Vec<Stage>,
) -> Result<(), PipelineError> {
    let field = art.field;
    let cov = &art.cov;
    let cached = opts.cache.as_ref().and_then(|c| c.load::<MaskCache>(key, "mask"));
    let mask = match cached {
        Some(m) => {
            cache_hits.push(Stage::Movability);
            let tubes = m.tubes.into_iter().map(|t| (t.cube, t.tube)).collect();
            MovabilityMask::from_tubes(cov, tubes, m.unvalidated)
        }
        None => {
            let m = movability_mask(cov, &art.model);
            if let Some(c) = &opts.cache {
                let stored = MaskCache {
                    tubes: m
                        .tubes
                        .iter()
                        .map(|(cube, tube)| TubeCertificate {
                            cube: *cube,
                            tube: tube.clone(),
                        })
                        .collect(),
                    unvalidated: m.unvalidated.clone(),
                };
                c.store(key, "mask", &stored);
            }
            m
        }
    };
    report.mask = Some(MaskStats {
        n_movable: mask.n_movable.len(),
        l_movable: mask.l_movable.len(),
        unvalidated: mask.unvalidated.len(),
        certificates: 0,
    });
    art.mask = Some(mask);
    clock.lap(Stage::Movability);

    let mask = art.mask.as_ref().expect("set above");
    let run = contiguity_witness(cov, mask, field).map_err(|e| PipelineError::from_contiguity(Stage::Contiguity, e))?;
    let systems = &run.slice.systems;
    report.solver = Some(SolverStats {
        unknowns: systems.iter().map(|(q, s)| (*q, s.unknowns())).collect(),
        equations: systems.iter().map(|(q, s)| (*q, s.equations())).collect(),
        kernel_dims: run.kernel_dims(),
        pivots_sha256: run.slice.pivot_hash(),
    });
    report.matrix_a = Some(run.witness.a.to_json());
    clock.lap(Stage::Contiguity);

    let violations = verify_witness(cov, &run.witness, &|c| mask.is_n_movable(c), &|c| mask.is_l_movable(c));
    if let Some(v) = violations.first() {
        return Err(PipelineError::mismatch(
            Stage::WitnessCheck,
            format!("{} witness violations, first {v:?}", violations.len()),
        ));
    }
    clock.lap(Stage::WitnessCheck);

    let leray = leray_reduce(&run.witness.a).map_err(|e| PipelineError::mismatch(Stage::Leray, e))?;
    report.leray = Some(LerayReport::new(&leray));
    match lefschetz_numbers(&leray, config.n_max) {
        Ok(l) => report.set_lefschetz(Some(&l)),
        Err(AlgebraError::LefschetzNeedsRationals(_)) => report.set_lefschetz(None),
        Err(e) => return Err(PipelineError::mismatch(Stage::Leray, e)),
    }
    clock.lap(Stage::Leray);
    art.contiguity = Some(run);

    if config.cross_check {
        let run = art.contiguity.as_ref().expect("set above");
        let mut tm = art.model.clone();
        tm.meter = EnclosureMeter::default();
        let result = corollary_transport(cov, &tm, &run.basis, field);
        art.instrumentation.transport_enclosures = tm.meter.count();
        art.instrumentation.transport_max_step = tm.meter.max_duration();
        report.cross_check = match result {
            Ok(t) => {
                let l = leray_reduce(&t).map_err(|e| PipelineError::mismatch(Stage::CrossCheck, e))?;
                let factors = factor_strings(&l.invariant_factors);
                art.transport = Some(t);
                let ours = &report.leray.as_ref().expect("set above").invariant_factors;
                if &factors != ours {
                    return Err(PipelineError::mismatch(
                        Stage::CrossCheck,
                        format!("transport gives invariant factors {factors:?}, contiguity gives {ours:?}"),
                    ));
                }
                CrossCheck::Matching {
                    invariant_factors: factors,
                }
            }
            Err(e) => CrossCheck::Unavailable { reason: e.to_string() },
        };
        clock.lap(Stage::CrossCheck);
    }
    if let (Some(b), Some(m)) = (art.bundle_certificate_count(), report.mask.as_mut()) {
        m.certificates = b;
    }
    Ok(())
}

impl RunArtifacts {
    fn bundle_certificate_count(&self) -> Option<usize> {
        self.bundle().map(|b| b.certificates.len())
    }
}

/// Invariant factors of the Leray reduction of `m`, as strings per degree.
pub fn leray_factors(m: &GradedMatrix) -> Result<BTreeMap<i32, Vec<String>>, AlgebraError> {
    leray_reduce(m).map(|l| factor_strings(&l.invariant_factors))
}

/// Cube-set dump in layers along the angular axis: a `layer k` line, then
/// one `N` or `L` line per cube whose angular base coordinate is `k`, giving
/// the base vector and extent bits.
pub fn dump_layers(pair: &crate::cubical::CubePair) -> String {
    use std::fmt::Write as _;
    let axis = pair.grid.angular_axis.unwrap_or(0);
    let mut layers: BTreeMap<i32, Vec<(char, &Cube)>> = BTreeMap::new();
    for c in &pair.n {
        let tag = if pair.l.contains(c) { 'L' } else { 'N' };
        layers.entry(c.base()[axis]).or_default().push((tag, c));
    }
    let mut s = format!(
        "# dim {} scale {} angular_axis {}\n",
        pair.grid.dim, pair.grid.scale, axis
    );
    for (k, cubes) in layers {
        let _ = writeln!(s, "layer {k}");
        for (tag, c) in cubes {
            let base: Vec<String> = c.base().iter().map(ToString::to_string).collect();
            let _ = writeln!(s, "{tag} {} {:b}", base.join(" "), c.extent());
        }
    }
    s
}
