use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::report::{factor_strings, ConleyReport};
use crate::algebra::{leray_reduce, Matrix};
use crate::contiguity::{
    verify_witness, ContiguityWitness, MovabilityMask, TubeCertificate, WitnessJson, WitnessViolation,
};
use crate::cubical::{lift_to_cover, CubePair, PairJson};
use crate::homology::relative_homology;

pub const BUNDLE_VERSION: u32 = 1;
const MAGIC: &str = "CONLEY-BUNDLE";

/// Everything needed to re-check a run without evaluating the flow: the
/// report, the base index pair, the witness, and the tube certificates of
/// every cube the witness supports touch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub report: ConleyReport,
    pub pair: PairJson,
    pub witness: WitnessJson,
    pub certificates: Vec<TubeCertificate>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BundleError {
    #[error("bundle format v{found} is not supported (this build reads v{expected}); re-run `conley run --save` to regenerate it")]
    Version { found: String, expected: u32 },
    #[error("checksum failure: {0}")]
    Checksum(String),
    #[error("malformed bundle: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Header line `CONLEY-BUNDLE v1 sha256=<hex> len=<bytes>` followed by the
/// canonical JSON body.
pub fn encode(b: &Bundle) -> String {
    let body = serde_json::to_string(b).expect("bundle serializes");
    let digest = hex::encode(Sha256::digest(body.as_bytes()));
    format!("{MAGIC} v{BUNDLE_VERSION} sha256={digest} len={}\n{body}", body.len())
}

pub fn decode(text: &str) -> Result<Bundle, BundleError> {
    let (header, body) = text
        .split_once('\n')
        .ok_or_else(|| BundleError::Checksum("missing header line".into()))?;
    let mut fields = header.split(' ');
    if fields.next() != Some(MAGIC) {
        return Err(BundleError::Malformed("not a bundle file".into()));
    }
    let version = fields.next().and_then(|v| v.strip_prefix('v')).unwrap_or("");
    if version != BUNDLE_VERSION.to_string() {
        return Err(BundleError::Version {
            found: version.into(),
            expected: BUNDLE_VERSION,
        });
    }
    let mut digest = None;
    let mut len = None;
    for f in fields {
        if let Some(d) = f.strip_prefix("sha256=") {
            digest = Some(d);
        } else if let Some(n) = f.strip_prefix("len=") {
            len = n.parse::<usize>().ok();
        }
    }
    let (Some(digest), Some(len)) = (digest, len) else {
        return Err(BundleError::Malformed("header lacks sha256 or len".into()));
    };
    if body.len() != len {
        return Err(BundleError::Checksum(format!(
            "body has {} bytes, header says {len}",
            body.len()
        )));
    }
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if actual != digest {
        return Err(BundleError::Checksum(format!(
            "sha256 {actual} does not match header {digest}"
        )));
    }
    serde_json::from_str(body).map_err(|e| BundleError::Malformed(e.to_string()))
}

pub fn save_state(path: &Path, b: &Bundle) -> Result<(), BundleError> {
    fs::write(path, encode(b)).map_err(|e| BundleError::Io(format!("{}: {e}", path.display())))
}

pub fn load_state(path: &Path) -> Result<Bundle, BundleError> {
    let bytes = fs::read(path).map_err(|e| BundleError::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes).map_err(|_| BundleError::Checksum("body is not UTF-8".into()))?;
    decode(&text)
}

/// Outcome of re-checking a bundle; `pass` iff nothing failed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BundleVerification {
    pub pass: bool,
    pub failures: Vec<String>,
    pub violations: Vec<WitnessViolation>,
}

impl BundleVerification {
    fn failed(msg: String) -> BundleVerification {
        BundleVerification {
            pass: false,
            failures: vec![msg],
            violations: Vec::new(),
        }
    }
}

pub fn verify_bundle(path: &Path) -> BundleVerification {
    match load_state(path) {
        Ok(b) => verify_loaded(&b),
        Err(e) => BundleVerification::failed(e.to_string()),
    }
}

/// Recomputes the witness identities, the movability flags from the stored
/// tubes, and the algebra reported for the witness.
pub fn verify_loaded(b: &Bundle) -> BundleVerification {
    let mut failures = Vec::new();
    let report = &b.report;
    let field = match report.config.coefficient_field() {
        Ok(f) => f,
        Err(e) => return BundleVerification::failed(e.to_string()),
    };
    let pair = match CubePair::from_json(&b.pair).and_then(|p| p.validate().map(|_| p)) {
        Ok(p) => p,
        Err(e) => return BundleVerification::failed(format!("stored pair: {e}")),
    };
    if report.index_pair.n_cubes != pair.n.len() || report.index_pair.l_cubes != pair.l.len() {
        failures.push("stored pair does not match the reported sizes".into());
    }
    let cov = match lift_to_cover(&pair) {
        Ok(c) => c,
        Err(e) => return BundleVerification::failed(format!("lift: {e}")),
    };
    let w = match ContiguityWitness::from_json(&b.witness) {
        Ok(w) => w,
        Err(e) => return BundleVerification::failed(format!("witness: {e}")),
    };
    if w.field != field {
        failures.push(format!(
            "witness field {} differs from the config field {}",
            w.field.name(),
            field.name()
        ));
    }
    if (w.from, w.to) != (0, cov.period) {
        failures.push(format!("witness spans [{}, {}], not one period", w.from, w.to));
    }
    let tubes: BTreeMap<_, _> = b.certificates.iter().map(|t| (t.cube, t.tube.clone())).collect();
    let mask = MovabilityMask::from_tubes(&cov, tubes, Vec::new());
    let violations = verify_witness(&cov, &w, &|c| mask.is_n_movable(c), &|c| mask.is_l_movable(c));
    for v in &violations {
        failures.push(format!("witness violation: {v:?}"));
    }

    // The basis must be a basis of H(N₀, L₀).
    match cov.section_at(0) {
        Ok(s0) => {
            let h = relative_homology(&s0, field);
            let dims: BTreeMap<usize, usize> = h.dims().into_iter().filter(|(_, n)| *n > 0).collect();
            let reported: BTreeMap<usize, usize> = report
                .homology_dims
                .iter()
                .filter(|(_, n)| **n > 0)
                .map(|(q, n)| (*q, *n))
                .collect();
            if dims != reported {
                failures.push(format!("H(N0, L0) has dims {dims:?}, report says {reported:?}"));
            }
            for (q, n) in &dims {
                let reps = w.basis.get(q).map(Vec::as_slice).unwrap_or(&[]);
                if reps.len() != *n {
                    failures.push(format!("degree {q}: {} basis cycles for dimension {n}", reps.len()));
                    continue;
                }
                let cols: Result<Vec<_>, _> = reps.iter().map(|z| h.coordinates(z)).collect();
                match cols {
                    Ok(cols) if Matrix::from_columns(field, *n, &cols).is_invertible() => {}
                    Ok(_) => failures.push(format!("degree {q}: basis cycles are dependent in homology")),
                    Err(e) => failures.push(format!("degree {q}: {e}")),
                }
            }
        }
        Err(e) => failures.push(format!("section: {e}")),
    }

    if report.matrix().as_ref() != Some(&w.a) {
        failures.push("matrix A differs from the report".into());
    }
    match leray_reduce(&w.a) {
        Ok(l) => {
            let factors = factor_strings(&l.invariant_factors);
            if report.leray.as_ref().map(|r| &r.invariant_factors) != Some(&factors) {
                failures.push(format!("invariant factors of A are {factors:?}, report disagrees"));
            }
        }
        Err(e) => failures.push(format!("Leray reduction: {e}")),
    }
    BundleVerification {
        pass: failures.is_empty(),
        failures,
        violations,
    }
}
