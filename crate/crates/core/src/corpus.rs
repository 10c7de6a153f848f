//! Flag-case files: schema, loader/validator, case runner, and a
//! floating-point quadrature oracle.
//!
//! A case file is UTF-8 JSON, schema tag `azflag/1`. Rationals are strings
//! `"p/q"` (or `"p"`), univariate polynomials in `u` are coefficient arrays
//! `[c0, c1, ...]`, the trilinear form is keyed by sorted basis-name
//! triples joined with `.` (`"E.E.H"`), and the surface pairing is a full
//! square matrix. Unknown fields are rejected.
//!
//! The oracle re-evaluates every integral by midpoint quadrature with its
//! own float implementation of the active-set decomposition; it shares
//! nothing with the chambered affine formulas beyond the cell geometry it
//! subdivides.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::azpipe::{Computation, FlagContext, FlagMode, MarkedPoint, PointValues, Witness};
use crate::exactnum::{ParamPoly, Rat};
use crate::lattices::{
    NamedClass, RestrictionMap, SurfaceClass, SurfaceLattice, ThreefoldClass, ThreefoldData,
};
use crate::zariski::{
    verify_threefold_decomposition, NegComponent, ThreefoldChamber, ThreefoldDecomposition,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid data at {path}: {message}")]
    Validation { path: String, message: String },
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CorpusError {
    CorpusError::Validation {
        path: path.into(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Raw (on-disk) schema
// ---------------------------------------------------------------------------

pub const SCHEMA: &str = "azflag/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    schema: String,
    name: String,
    mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hypotheses: Option<String>,
    threefold: RawThreefold,
    flag_divisor: RawFlagDivisor,
    threefold_decomposition: Vec<RawChamber>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flag_surface: Option<RawSurface>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    marked_points: Vec<RawPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expected: Option<RawExpected>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThreefold {
    basis: Vec<String>,
    triple_form: BTreeMap<String, String>,
    anticanonical: Vec<String>,
    anticanonical_cube: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    test_curves: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlagDivisor {
    name: String,
    class: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChamber {
    u_lo: String,
    u_hi: String,
    positive: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    negative: Vec<RawComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComponent {
    name: String,
    class: Vec<String>,
    coeff: Vec<String>,
    #[serde(default)]
    ord_along_flag_curve: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    ord_at_marked_point: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    restriction_class: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSurface {
    basis: Vec<String>,
    pairing: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    negative_candidates: Vec<RawNamed>,
    restriction: Vec<Vec<String>>,
    flag_curve: String,
    log_discrepancy: String,
    mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNamed {
    name: String,
    class: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    name: String,
    #[serde(default)]
    different_ord: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    local_mults: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpected {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s_x_y: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s_v_z: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    f_p: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    s_w_p: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta_bound: Option<String>,
}

// ---------------------------------------------------------------------------
// Validated case
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseMode {
    Point,
    Curve,
    Divisor,
}

/// Exact expected values carried by a case file; every present field must
/// match the computation exactly for the case to pass.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Expected {
    pub s_x_y: Option<Rat>,
    pub s_v_z: Option<Rat>,
    pub f_p: BTreeMap<String, Rat>,
    pub s_w_p: BTreeMap<String, Rat>,
    pub delta_bound: Option<Rat>,
}

/// A fully validated flag case.
#[derive(Debug, Clone)]
pub struct FlagCase {
    pub name: String,
    pub mode: CaseMode,
    pub hypotheses: Option<String>,
    pub threefold: ThreefoldData,
    pub flag_divisor_name: String,
    pub y: ThreefoldClass,
    pub dec3: ThreefoldDecomposition,
    /// Absent in divisor mode.
    pub flag: Option<FlagSurfaceData>,
    pub points: Vec<MarkedPoint>,
    pub expected: Expected,
    raw: RawCase,
}

#[derive(Debug, Clone)]
pub struct FlagSurfaceData {
    pub surface: SurfaceLattice,
    pub restriction: RestrictionMap,
    pub flag_curve: String,
    pub log_discrepancy: Rat,
    pub mode: FlagMode,
}

impl FlagCase {
    /// Canonical JSON form; reparsing it yields an identical case.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.raw).expect("raw case serializes")
    }

    pub fn raw_eq(&self, other: &FlagCase) -> bool {
        self.raw == other.raw
    }

    /// Assemble the pipeline context (point and curve modes only).
    pub fn context(&self) -> Option<FlagContext> {
        let flag = self.flag.as_ref()?;
        Some(FlagContext {
            threefold: self.threefold.clone(),
            y: self.y.clone(),
            dec3: self.dec3.clone(),
            surface: flag.surface.clone(),
            restriction: flag.restriction.clone(),
            flag_curve: flag.flag_curve.clone(),
            log_discrepancy: flag.log_discrepancy.clone(),
            mode: flag.mode,
        })
    }
}

// ---------------------------------------------------------------------------
// Loader
// ---------------------------------------------------------------------------

fn rat_at(s: &str, path: &str) -> Result<Rat, CorpusError> {
    s.parse()
        .map_err(|e| invalid(path, format!("bad rational {s:?}: {e}")))
}

fn rats_at(ss: &[String], path: &str) -> Result<Vec<Rat>, CorpusError> {
    ss.iter()
        .enumerate()
        .map(|(i, s)| rat_at(s, &format!("{path}[{i}]")))
        .collect()
}

fn upoly_at(ss: &[String], path: &str) -> Result<ParamPoly, CorpusError> {
    if ss.is_empty() {
        return Err(invalid(path, "empty coefficient array"));
    }
    Ok(ParamPoly::from_u_coeffs(&rats_at(ss, path)?))
}

pub fn load_flag(file: &Path) -> Result<FlagCase, CorpusError> {
    let display = file.display().to_string();
    let text = std::fs::read_to_string(file).map_err(|source| CorpusError::Io {
        path: display.clone(),
        source,
    })?;
    let raw: RawCase = serde_json::from_str(&text).map_err(|e| CorpusError::Parse {
        path: display,
        message: e.to_string(),
    })?;
    validate(raw)
}

pub fn load_flag_str(text: &str) -> Result<FlagCase, CorpusError> {
    let raw: RawCase = serde_json::from_str(text).map_err(|e| CorpusError::Parse {
        path: "<string>".into(),
        message: e.to_string(),
    })?;
    validate(raw)
}

fn validate(raw: RawCase) -> Result<FlagCase, CorpusError> {
    if raw.schema != SCHEMA {
        return Err(invalid("schema", format!("expected {SCHEMA:?}, got {:?}", raw.schema)));
    }
    let mode = match raw.mode.as_str() {
        "point" => CaseMode::Point,
        "curve" => CaseMode::Curve,
        "divisor" => CaseMode::Divisor,
        other => return Err(invalid("mode", format!("unknown mode {other:?}"))),
    };
    let threefold = validate_threefold(&raw.threefold)?;
    let n3 = threefold.rank();
    if raw.flag_divisor.class.len() != n3 {
        return Err(invalid(
            "flag_divisor.class",
            format!("{} entries for rank {n3}", raw.flag_divisor.class.len()),
        ));
    }
    let y = ThreefoldClass::from_rats(&rats_at(&raw.flag_divisor.class, "flag_divisor.class")?);

    // marked points first so component ord maps can be checked against them
    let mut point_names = BTreeSet::new();
    let mut points = Vec::new();
    for (i, p) in raw.marked_points.iter().enumerate() {
        let path = format!("marked_points[{i}]");
        if !point_names.insert(p.name.clone()) {
            return Err(invalid(path, format!("duplicate point name {:?}", p.name)));
        }
        let different_ord = match &p.different_ord {
            Some(s) => rat_at(s, &format!("{path}.different_ord"))?,
            None => Rat::zero(),
        };
        if different_ord.is_negative() || different_ord >= Rat::one() {
            return Err(invalid(
                format!("{path}.different_ord"),
                format!("{different_ord} outside [0, 1)"),
            ));
        }
        let mut local_mults = BTreeMap::new();
        for (curve, s) in &p.local_mults {
            let m = rat_at(s, &format!("{path}.local_mults.{curve}"))?;
            if m.is_negative() {
                return Err(invalid(
                    format!("{path}.local_mults.{curve}"),
                    format!("negative multiplicity {m}"),
                ));
            }
            local_mults.insert(curve.clone(), m);
        }
        points.push(MarkedPoint {
            name: p.name.clone(),
            different_ord,
            local_mults,
        });
    }

    let dec3 = validate_dec3(&raw.threefold_decomposition, n3, &point_names)?;

    let flag = match &raw.flag_surface {
        None => None,
        Some(rs) => Some(validate_surface(rs, n3, &points)?),
    };

    match (mode, &flag, points.len()) {
        (CaseMode::Divisor, Some(_), _) => {
            return Err(invalid("flag_surface", "divisor mode carries no flag surface"))
        }
        (CaseMode::Divisor, None, n) if n > 0 => {
            return Err(invalid("marked_points", "divisor mode carries no marked points"))
        }
        (CaseMode::Point, None, _) | (CaseMode::Curve, None, _) => {
            return Err(invalid("flag_surface", format!("{} mode requires a flag surface", raw.mode)))
        }
        (CaseMode::Point, Some(_), 0) => {
            return Err(invalid("marked_points", "point mode requires at least one marked point"))
        }
        (CaseMode::Curve, Some(_), n) if n > 0 => {
            return Err(invalid("marked_points", "curve mode carries no marked points"))
        }
        _ => {}
    }

    let expected = match &raw.expected {
        None => Expected::default(),
        Some(e) => {
            let opt = |s: &Option<String>, path: &str| -> Result<Option<Rat>, CorpusError> {
                s.as_deref().map(|x| rat_at(x, path)).transpose()
            };
            let map = |m: &BTreeMap<String, String>, path: &str| -> Result<BTreeMap<String, Rat>, CorpusError> {
                m.iter()
                    .map(|(k, v)| {
                        if !point_names.contains(k) {
                            return Err(invalid(
                                format!("{path}.{k}"),
                                "unknown marked point name",
                            ));
                        }
                        Ok((k.clone(), rat_at(v, &format!("{path}.{k}"))?))
                    })
                    .collect()
            };
            Expected {
                s_x_y: opt(&e.s_x_y, "expected.s_x_y")?,
                s_v_z: opt(&e.s_v_z, "expected.s_v_z")?,
                f_p: map(&e.f_p, "expected.f_p")?,
                s_w_p: map(&e.s_w_p, "expected.s_w_p")?,
                delta_bound: opt(&e.delta_bound, "expected.delta_bound")?,
            }
        }
    };

    Ok(FlagCase {
        name: raw.name.clone(),
        mode,
        hypotheses: raw.hypotheses.clone(),
        threefold,
        flag_divisor_name: raw.flag_divisor.name.clone(),
        y,
        dec3,
        flag,
        points,
        expected,
        raw,
    })
}

fn validate_threefold(raw: &RawThreefold) -> Result<ThreefoldData, CorpusError> {
    let n = raw.basis.len();
    if n == 0 {
        return Err(invalid("threefold.basis", "empty basis"));
    }
    if raw.basis.iter().collect::<BTreeSet<_>>().len() != n {
        return Err(invalid("threefold.basis", "duplicate basis names"));
    }
    // every sorted basis triple must be present, and nothing else
    let mut wanted: BTreeSet<String> = BTreeSet::new();
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                let mut names = [&raw.basis[i], &raw.basis[j], &raw.basis[k]];
                names.sort();
                wanted.insert(format!("{}.{}.{}", names[0], names[1], names[2]));
            }
        }
    }
    for key in raw.triple_form.keys() {
        if !wanted.contains(key) {
            return Err(invalid(
                format!("threefold.triple_form.{key}"),
                "not a sorted triple of basis names",
            ));
        }
    }
    for key in &wanted {
        if !raw.triple_form.contains_key(key) {
            return Err(invalid("threefold.triple_form", format!("missing entry {key:?}")));
        }
    }
    let idx: BTreeMap<&String, usize> = raw.basis.iter().zip(0..).collect();
    let mut form = vec![vec![vec![Rat::zero(); n]; n]; n];
    for (key, val) in &raw.triple_form {
        let v = rat_at(val, &format!("threefold.triple_form.{key}"))?;
        let parts: Vec<&str> = key.split('.').collect();
        let (a, b, c) = (
            idx[&parts[0].to_string()],
            idx[&parts[1].to_string()],
            idx[&parts[2].to_string()],
        );
        for (i, j, k) in [
            (a, b, c),
            (a, c, b),
            (b, a, c),
            (b, c, a),
            (c, a, b),
            (c, b, a),
        ] {
            form[i][j][k] = v.clone();
        }
    }
    if raw.anticanonical.len() != n {
        return Err(invalid("threefold.anticanonical", format!("{} entries for rank {n}", raw.anticanonical.len())));
    }
    let mut test_curves = BTreeMap::new();
    for (name, vec) in &raw.test_curves {
        if vec.len() != n {
            return Err(invalid(
                format!("threefold.test_curves.{name}"),
                format!("{} entries for rank {n}", vec.len()),
            ));
        }
        test_curves.insert(name.clone(), rats_at(vec, &format!("threefold.test_curves.{name}"))?);
    }
    Ok(ThreefoldData {
        basis: raw.basis.clone(),
        triple_form: form,
        anticanonical: rats_at(&raw.anticanonical, "threefold.anticanonical")?,
        anticanonical_cube: rat_at(&raw.anticanonical_cube, "threefold.anticanonical_cube")?,
        test_curves,
    })
}

fn validate_dec3(
    raws: &[RawChamber],
    n3: usize,
    point_names: &BTreeSet<String>,
) -> Result<ThreefoldDecomposition, CorpusError> {
    if raws.is_empty() {
        return Err(invalid("threefold_decomposition", "no chambers"));
    }
    let mut chambers = Vec::new();
    for (i, ch) in raws.iter().enumerate() {
        let path = format!("threefold_decomposition[{i}]");
        if ch.positive.len() != n3 {
            return Err(invalid(
                format!("{path}.positive"),
                format!("{} coefficient arrays for rank {n3}", ch.positive.len()),
            ));
        }
        let positive = ThreefoldClass {
            coeffs: ch
                .positive
                .iter()
                .enumerate()
                .map(|(j, c)| upoly_at(c, &format!("{path}.positive[{j}]")))
                .collect::<Result<_, _>>()?,
        };
        let mut negative = Vec::new();
        for (j, comp) in ch.negative.iter().enumerate() {
            let cpath = format!("{path}.negative[{j}]");
            if comp.class.len() != n3 {
                return Err(invalid(
                    format!("{cpath}.class"),
                    format!("{} entries for rank {n3}", comp.class.len()),
                ));
            }
            let mut ord_pt = BTreeMap::new();
            for (pt, s) in &comp.ord_at_marked_point {
                if !point_names.contains(pt) {
                    return Err(invalid(
                        format!("{cpath}.ord_at_marked_point.{pt}"),
                        "unknown marked point name",
                    ));
                }
                ord_pt.insert(pt.clone(), rat_at(s, &format!("{cpath}.ord_at_marked_point.{pt}"))?);
            }
            negative.push(NegComponent {
                name: comp.name.clone(),
                class: rats_at(&comp.class, &format!("{cpath}.class"))?,
                coeff: upoly_at(&comp.coeff, &format!("{cpath}.coeff"))?,
                ord_along_flag_curve: match &comp.ord_along_flag_curve {
                    Some(s) => rat_at(s, &format!("{cpath}.ord_along_flag_curve"))?,
                    None => Rat::zero(),
                },
                ord_at_marked_point: ord_pt,
                restriction_class: comp
                    .restriction_class
                    .as_ref()
                    .map(|c| rats_at(c, &format!("{cpath}.restriction_class")))
                    .transpose()?,
            });
        }
        chambers.push(ThreefoldChamber {
            u_lo: rat_at(&ch.u_lo, &format!("{path}.u_lo"))?,
            u_hi: rat_at(&ch.u_hi, &format!("{path}.u_hi"))?,
            positive,
            negative,
        });
    }
    Ok(ThreefoldDecomposition { chambers })
}

fn validate_surface(
    raw: &RawSurface,
    n3: usize,
    points: &[MarkedPoint],
) -> Result<FlagSurfaceData, CorpusError> {
    let rank = raw.basis.len();
    if rank == 0 {
        return Err(invalid("flag_surface.basis", "empty basis"));
    }
    if raw.basis.iter().collect::<BTreeSet<_>>().len() != rank {
        return Err(invalid("flag_surface.basis", "duplicate basis names"));
    }
    if raw.pairing.len() != rank {
        return Err(invalid(
            "flag_surface.pairing",
            format!("{} rows for rank {rank}", raw.pairing.len()),
        ));
    }
    let mut pairing = Vec::new();
    for (i, row) in raw.pairing.iter().enumerate() {
        if row.len() != rank {
            return Err(invalid(
                format!("flag_surface.pairing[{i}]"),
                format!("{} entries for rank {rank}", row.len()),
            ));
        }
        pairing.push(rats_at(row, &format!("flag_surface.pairing[{i}]"))?);
    }
    for i in 0..rank {
        for j in 0..i {
            if pairing[i][j] != pairing[j][i] {
                return Err(invalid(
                    format!("flag_surface.pairing[{i}][{j}]"),
                    format!("asymmetric: {} vs {}", pairing[i][j], pairing[j][i]),
                ));
            }
        }
    }
    let mut cand_names = BTreeSet::new();
    let mut negative_candidates = Vec::new();
    for (i, c) in raw.negative_candidates.iter().enumerate() {
        let path = format!("flag_surface.negative_candidates[{i}]");
        if !cand_names.insert(c.name.clone()) {
            return Err(invalid(path, format!("duplicate candidate name {:?}", c.name)));
        }
        if c.class.len() != rank {
            return Err(invalid(
                format!("{path}.class"),
                format!("{} entries for rank {rank}", c.class.len()),
            ));
        }
        negative_candidates.push(NamedClass {
            name: c.name.clone(),
            coeffs: rats_at(&c.class, &format!("{path}.class"))?,
        });
    }
    for p in points {
        for curve in p.local_mults.keys() {
            if !cand_names.contains(curve) {
                return Err(invalid(
                    format!("marked_points.{}.local_mults.{curve}", p.name),
                    "not a negative-candidate name",
                ));
            }
        }
    }
    if raw.restriction.len() != n3 {
        return Err(invalid(
            "flag_surface.restriction",
            format!("{} images for threefold rank {n3}", raw.restriction.len()),
        ));
    }
    let mut images = Vec::new();
    for (i, row) in raw.restriction.iter().enumerate() {
        if row.len() != rank {
            return Err(invalid(
                format!("flag_surface.restriction[{i}]"),
                format!("{} entries for rank {rank}", row.len()),
            ));
        }
        images.push(SurfaceClass::from_rats(&rats_at(
            row,
            &format!("flag_surface.restriction[{i}]"),
        )?));
    }
    if !raw.basis.contains(&raw.flag_curve) {
        return Err(invalid("flag_surface.flag_curve", format!("{:?} is not a basis name", raw.flag_curve)));
    }
    if cand_names.contains(&raw.flag_curve) {
        return Err(invalid("flag_surface.flag_curve", "flag curve is also a negative candidate"));
    }
    let log_discrepancy = rat_at(&raw.log_discrepancy, "flag_surface.log_discrepancy")?;
    if log_discrepancy < Rat::one() {
        return Err(invalid("flag_surface.log_discrepancy", format!("{log_discrepancy} < 1")));
    }
    let mode = match raw.mode.as_str() {
        "on-surface" => FlagMode::OnSurface,
        "pullback" => FlagMode::Pullback,
        other => return Err(invalid("flag_surface.mode", format!("unknown mode {other:?}"))),
    };
    Ok(FlagSurfaceData {
        surface: SurfaceLattice {
            basis: raw.basis.clone(),
            pairing,
            negative_candidates,
        },
        restriction: RestrictionMap { images },
        flag_curve: raw.flag_curve.clone(),
        log_discrepancy,
        mode,
    })
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

/// Computed values of one case: like `SReport` but with the curve part
/// optional so divisor-only cases fit.
#[derive(Debug, Clone, Serialize)]
pub struct CaseValues {
    pub s_x_y: Rat,
    pub s_v_z: Option<Rat>,
    pub points: Vec<PointValues>,
    pub delta_bound: Rat,
    pub witness: Witness,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub field: String,
    pub expected: String,
    pub computed: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub pass: bool,
    pub values: Option<CaseValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub comparisons: Vec<Comparison>,
    pub millis: u128,
}

/// Run one case end to end: verification, pipeline, exact comparison
/// against the stored expected values. Never panics; failures become
/// failing report entries.
pub fn run_case(case: &FlagCase) -> CaseReport {
    let start = std::time::Instant::now();
    let values = compute_values(case);
    let (values, error) = match values {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e)),
    };
    let mut comparisons = Vec::new();
    if let Some(v) = &values {
        let e = &case.expected;
        let mut cmp = |field: String, expected: Option<&Rat>, computed: Option<&Rat>| {
            if let Some(exp) = expected {
                let (computed_s, pass) = match computed {
                    Some(c) => (c.to_string(), c == exp),
                    None => ("<absent>".to_string(), false),
                };
                comparisons.push(Comparison {
                    field,
                    expected: exp.to_string(),
                    computed: computed_s,
                    pass,
                });
            }
        };
        cmp("s_x_y".into(), e.s_x_y.as_ref(), Some(&v.s_x_y));
        cmp("s_v_z".into(), e.s_v_z.as_ref(), v.s_v_z.as_ref());
        for (pt, exp) in &e.f_p {
            let got = v.points.iter().find(|p| &p.name == pt).map(|p| &p.f_p);
            cmp(format!("f_p.{pt}"), Some(exp), got);
        }
        for (pt, exp) in &e.s_w_p {
            let got = v.points.iter().find(|p| &p.name == pt).map(|p| &p.s_w);
            cmp(format!("s_w_p.{pt}"), Some(exp), got);
        }
        cmp("delta_bound".into(), e.delta_bound.as_ref(), Some(&v.delta_bound));
    }
    let pass = error.is_none() && comparisons.iter().all(|c| c.pass);
    CaseReport {
        name: case.name.clone(),
        pass,
        values,
        error,
        comparisons,
        millis: start.elapsed().as_millis(),
    }
}

fn compute_values(case: &FlagCase) -> Result<CaseValues, String> {
    match case.mode {
        CaseMode::Divisor => {
            let report = verify_threefold_decomposition(&case.threefold, &case.y, &case.dec3);
            if !report.pass() {
                let msg = report
                    .failures()
                    .map(|e| format!("{}: {}", e.check, e.detail))
                    .collect::<Vec<_>>()
                    .join("; ");
                return Err(format!("verification failed: {msg}"));
            }
            let cube = case.threefold.anticanonical_cube_computed();
            let mut acc = Rat::zero();
            for ch in &case.dec3.chambers {
                let p3 = case
                    .threefold
                    .triple(&ch.positive, &ch.positive, &ch.positive)
                    .map_err(|e| e.to_string())?;
                acc += &p3.integrate_u_interval(&ch.u_lo, &ch.u_hi);
            }
            let s_x_y = &acc / &cube;
            if !s_x_y.is_positive() {
                return Err(format!("S_X(Y) = {s_x_y} is not positive"));
            }
            Ok(CaseValues {
                delta_bound: &Rat::one() / &s_x_y,
                s_x_y,
                s_v_z: None,
                points: Vec::new(),
                witness: Witness::Divisor,
            })
        }
        CaseMode::Point | CaseMode::Curve => {
            let ctx = case.context().expect("validated non-divisor case");
            let comp = Computation::prepare(&ctx).map_err(|e| e.to_string())?;
            let report = comp.delta_bound(&case.points).map_err(|e| e.to_string())?;
            Ok(CaseValues {
                s_x_y: report.s_x_y,
                s_v_z: Some(report.s_v_z),
                points: report.points,
                delta_bound: report.delta_bound,
                witness: report.witness,
            })
        }
    }
}

/// Load and run every `*.json` case under a directory, reports sorted by
/// case name. `jobs` bounds the worker threads.
pub fn run_dir(dir: &Path, jobs: usize) -> Result<Vec<CaseReport>, CorpusError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map_err(|source| CorpusError::Io {
            path: dir.display().to_string(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(invalid(dir.display().to_string(), "no cases"));
    }
    let cases: Vec<FlagCase> = files
        .iter()
        .map(|f| load_flag(f))
        .collect::<Result<_, _>>()?;
    let jobs = jobs.max(1).min(cases.len());
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut reports: Vec<Option<CaseReport>> = vec![None; cases.len()];
    let slots = std::sync::Mutex::new(&mut reports);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= cases.len() {
                    break;
                }
                let report = run_case(&cases[i]);
                slots.lock().unwrap()[i] = Some(report);
            });
        }
    });
    let mut out: Vec<CaseReport> = reports.into_iter().map(|r| r.unwrap()).collect();
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

/// The bundled corpus directory: `AZFLAG_CORPUS_DIR` if set, else the
/// `corpus/` directory shipped with the sources.
pub fn default_corpus_dir() -> std::path::PathBuf {
    if let Ok(dir) = std::env::var("AZFLAG_CORPUS_DIR") {
        return dir.into();
    }
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join("corpus")
}

/// Regional summary of a corpus run: the smallest strictly-greater-than-1
/// bound among the point-mode cases, i.e. the bound certified on the
/// regions those flags cover.
pub fn regional_summary<'a>(
    cases: &[FlagCase],
    reports: &'a [CaseReport],
) -> Option<&'a Rat> {
    let point_names: BTreeSet<&String> = cases
        .iter()
        .filter(|c| c.mode == CaseMode::Point)
        .map(|c| &c.name)
        .collect();
    reports
        .iter()
        .filter(|r| point_names.contains(&r.name))
        .filter_map(|r| r.values.as_ref().map(|v| &v.delta_bound))
        .filter(|b| **b > Rat::one())
        .min()
}

// ---------------------------------------------------------------------------
// Floating-point oracle
// ---------------------------------------------------------------------------

/// Approximate values from midpoint quadrature; `None` entries are
/// quantities the case mode does not define.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub grid: u32,
    pub s_x_y: f64,
    pub s_v_z: Option<f64>,
    pub f_p: BTreeMap<String, f64>,
    pub s_w_p: BTreeMap<String, f64>,
}

/// Float active-set decomposition, written independently of the exact one.
mod floatdec {
    pub const EPS: f64 = 1e-9;

    /// Solve the dense system in place; returns None when singular.
    fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
        let n = b.len();
        for col in 0..n {
            let piv = (col..n).max_by(|&r, &s| {
                a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap()
            })?;
            if a[piv][col].abs() < EPS {
                return None;
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = vec![0.0; n];
        for col in (0..n).rev() {
            let mut acc = b[col];
            for c in col + 1..n {
                acc -= a[col][c] * x[c];
            }
            x[col] = acc / a[col][col];
        }
        Some(x)
    }

    pub fn pair(pairing: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, ai) in a.iter().enumerate() {
            if *ai == 0.0 {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                acc += ai * bj * pairing[i][j];
            }
        }
        acc
    }

    /// Positive part and per-candidate coefficients, or None when the
    /// point is outside the pseudoeffective region (within tolerance).
    pub fn decompose(
        pairing: &[Vec<f64>],
        candidates: &[Vec<f64>],
        divisor: &[f64],
    ) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut active: Vec<usize> = Vec::new();
        let mut coeffs = vec![0.0; candidates.len()];
        loop {
            let gram: Vec<Vec<f64>> = active
                .iter()
                .map(|&i| active.iter().map(|&j| pair(pairing, &candidates[i], &candidates[j])).collect())
                .collect();
            let rhs: Vec<f64> = active
                .iter()
                .map(|&i| pair(pairing, divisor, &candidates[i]))
                .collect();
            let x = if active.is_empty() {
                Vec::new()
            } else {
                solve(gram, rhs)?
            };
            let mut p = divisor.to_vec();
            for (&idx, c) in active.iter().zip(&x) {
                for (slot, cc) in p.iter_mut().zip(&candidates[idx]) {
                    *slot -= c * cc;
                }
            }
            let mut grew = false;
            for (j, cand) in candidates.iter().enumerate() {
                if !active.contains(&j) && pair(pairing, &p, cand) < -EPS {
                    active.push(j);
                    grew = true;
                }
            }
            if !grew {
                if x.iter().any(|c| *c < -EPS) || pair(pairing, &p, &p) < -1e-7 {
                    return None;
                }
                for (&idx, c) in active.iter().zip(&x) {
                    coeffs[idx] = c.max(0.0);
                }
                return Some((p, coeffs));
            }
            if active.len() > divisor.len() {
                return None;
            }
        }
    }
}

pub fn numeric_oracle(case: &FlagCase, grid: u32) -> Result<OracleReport, CorpusError> {
    if grid < 2 {
        return Err(invalid("grid", format!("grid {grid} < 2")));
    }
    let cube = case
        .threefold
        .anticanonical_cube_computed()
        .to_f64();
    // S_X by 1D midpoint quadrature of the supplied positive parts
    let mut s_x = 0.0;
    for ch in &case.dec3.chambers {
        let p3 = case
            .threefold
            .triple(&ch.positive, &ch.positive, &ch.positive)
            .map_err(|e| invalid("threefold_decomposition", e.to_string()))?;
        s_x += midpoint_u(&p3, &ch.u_lo, &ch.u_hi, grid);
    }
    s_x /= cube;
    let mut report = OracleReport {
        grid,
        s_x_y: s_x,
        s_v_z: None,
        f_p: BTreeMap::new(),
        s_w_p: BTreeMap::new(),
    };
    let Some(flag) = &case.flag else {
        return Ok(report);
    };
    let ctx = case.context().expect("non-divisor case");
    let comp = Computation::prepare(&ctx)
        .map_err(|e| invalid(case.name.clone(), e.to_string()))?;

    let rank = flag.surface.rank();
    let pairing_f: Vec<Vec<f64>> = flag
        .surface
        .pairing
        .iter()
        .map(|row| row.iter().map(Rat::to_f64).collect())
        .collect();
    let cands_f: Vec<Vec<f64>> = flag
        .surface
        .negative_candidates
        .iter()
        .map(|c| c.coeffs.iter().map(Rat::to_f64).collect())
        .collect();
    let z_index = flag
        .surface
        .basis_index(&flag.flag_curve)
        .expect("validated flag curve");
    let mut z_vec = vec![0.0; rank];
    z_vec[z_index] = 1.0;

    // linear part of S(V;Z): (P(u)^2·Y)·d(u)
    let mut s_v = 0.0;
    for ch in &case.dec3.chambers {
        let p_sq_y = case
            .threefold
            .triple(&ch.positive, &ch.positive, &case.y)
            .map_err(|e| invalid("threefold_decomposition", e.to_string()))?;
        let mut d_of_u = ParamPoly::zero();
        for compn in &ch.negative {
            d_of_u = &d_of_u + &compn.coeff.scale(&compn.ord_along_flag_curve);
        }
        let prod = &p_sq_y * &d_of_u;
        s_v += midpoint_u(&prod, &ch.u_lo, &ch.u_hi, grid);
    }

    let mut sw_main: BTreeMap<String, f64> = BTreeMap::new();
    let mut f_acc: BTreeMap<String, f64> = BTreeMap::new();
    for p in &case.points {
        sw_main.insert(p.name.clone(), 0.0);
        f_acc.insert(p.name.clone(), 0.0);
    }

    // double integrals over every cell, decomposing pointwise in floats
    for (chamber_idx, (_, _, complex)) in comp.complexes().enumerate() {
        let ch = &case.dec3.chambers[chamber_idx];
        // restricted family coefficients as exact polynomials
        let mut family = ctx.restriction.restrict(&ch.positive);
        family.coeffs[z_index] = &family.coeffs[z_index] - &ParamPoly::var_v();
        // per-point threefold ord polynomial
        let mut ord3: BTreeMap<String, ParamPoly> = BTreeMap::new();
        for compn in &ch.negative {
            for (pt, m) in &compn.ord_at_marked_point {
                let e = ord3.entry(pt.clone()).or_insert_with(ParamPoly::zero);
                *e = &*e + &compn.coeff.scale(m);
            }
        }
        for cell in &complex.cells {
            if cell.region.is_degenerate() {
                continue;
            }
            let u_lo = cell.u_lo.to_f64();
            let u_hi = cell.u_hi.to_f64();
            let du = (u_hi - u_lo) / f64::from(grid);
            for i in 0..grid {
                let u = u_lo + (f64::from(i) + 0.5) * du;
                let v_lo = eval_f(&cell.v_lo, u, 0.0);
                let v_hi = eval_f(&cell.v_hi, u, 0.0);
                let dv = (v_hi - v_lo) / f64::from(grid);
                if dv <= 0.0 {
                    continue;
                }
                for j in 0..grid {
                    let v = v_lo + (f64::from(j) + 0.5) * dv;
                    let d: Vec<f64> = family.coeffs.iter().map(|c| eval_f(c, u, v)).collect();
                    let Some((pos, ncoeffs)) = floatdec::decompose(&pairing_f, &cands_f, &d)
                    else {
                        continue;
                    };
                    let w = du * dv;
                    let vol = floatdec::pair(&pairing_f, &pos, &pos);
                    s_v += vol.max(0.0) * w;
                    let pz = floatdec::pair(&pairing_f, &pos, &z_vec);
                    for p in &case.points {
                        *sw_main.get_mut(&p.name).unwrap() += pz * pz * w;
                        let mut ord = ord3.get(&p.name).map_or(0.0, |q| eval_f(q, u, 0.0));
                        for (cand, c) in flag.surface.negative_candidates.iter().zip(&ncoeffs) {
                            if let Some(mu) = p.local_mults.get(&cand.name) {
                                ord += c * mu.to_f64();
                            }
                        }
                        *f_acc.get_mut(&p.name).unwrap() += pz * ord * w;
                    }
                }
            }
        }
    }
    report.s_v_z = Some(3.0 * s_v / cube);
    for p in &case.points {
        let f = 6.0 * f_acc[&p.name] / cube;
        let sw = 3.0 * sw_main[&p.name] / cube + f;
        report.f_p.insert(p.name.clone(), f);
        report.s_w_p.insert(p.name.clone(), sw);
    }
    Ok(report)
}

fn eval_f(p: &ParamPoly, u: f64, v: f64) -> f64 {
    let mut acc = 0.0;
    for (&(a, b), c) in p.terms() {
        acc += c.to_f64() * u.powi(a as i32) * v.powi(b as i32);
    }
    acc
}

fn midpoint_u(p: &ParamPoly, lo: &Rat, hi: &Rat, grid: u32) -> f64 {
    let a = lo.to_f64();
    let b = hi.to_f64();
    let h = (b - a) / f64::from(grid);
    let mut acc = 0.0;
    for i in 0..grid {
        let u = a + (f64::from(i) + 0.5) * h;
        acc += eval_f(p, u, 0.0);
    }
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn asymmetric_pairing_is_rejected() {
        let text = MINIMAL.replace(
            "[[\"0\", \"1\"], [\"1\", \"0\"]]",
            "[[\"0\", \"1\"], [\"2\", \"0\"]]",
        );
        let err = load_flag_str(&text).unwrap_err();
        assert!(matches!(err, CorpusError::Validation { ref path, .. } if path.contains("pairing")));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = MINIMAL.replace("\"name\": \"mini\",", "\"name\": \"mini\", \"extra\": 1,");
        assert!(matches!(
            load_flag_str(&text).unwrap_err(),
            CorpusError::Parse { .. }
        ));
    }

    #[test]
    fn unknown_local_mult_is_rejected() {
        let text = MINIMAL.replace(
            "\"local_mults\": {}",
            "\"local_mults\": {\"nosuch\": \"1\"}",
        );
        let err = load_flag_str(&text).unwrap_err();
        assert!(matches!(err, CorpusError::Validation { ref path, .. } if path.contains("local_mults")));
    }

    #[test]
    fn missing_triple_entry_is_rejected() {
        let text = MINIMAL.replace("\"E.E.H\": \"-5\",\n      ", "");
        let err = load_flag_str(&text).unwrap_err();
        assert!(matches!(err, CorpusError::Validation { ref path, .. } if path.contains("triple_form")));
    }

    #[test]
    fn minimal_case_loads_and_runs() {
        let case = load_flag_str(MINIMAL).unwrap();
        assert_eq!(case.mode, CaseMode::Point);
        let report = run_case(&case);
        assert!(report.pass, "{report:?}");
        let v = report.values.unwrap();
        assert_eq!(v.s_x_y, "10/13".parse().unwrap());
        assert_eq!(v.delta_bound, "13/12".parse().unwrap());
    }

    #[test]
    fn round_trip_is_identity() {
        let case = load_flag_str(MINIMAL).unwrap();
        let reloaded = load_flag_str(&case.to_json()).unwrap();
        assert!(case.raw_eq(&reloaded));
    }

    #[test]
    fn oracle_close_to_exact_on_minimal_case() {
        let case = load_flag_str(MINIMAL).unwrap();
        let oracle = numeric_oracle(&case, 200).unwrap();
        let rel = |approx: f64, exact: f64| ((approx - exact) / exact).abs();
        assert!(rel(oracle.s_x_y, 10.0 / 13.0) < 1e-5, "{}", oracle.s_x_y);
        assert!(rel(oracle.s_v_z.unwrap(), 12.0 / 13.0) < 1e-4);
        assert!(rel(oracle.s_w_p["p"], 10.0 / 13.0) < 1e-4);
    }

    #[test]
    fn bundled_corpus_all_pass() {
        let reports = run_dir(&default_corpus_dir(), 4).unwrap();
        assert_eq!(reports.len(), 11);
        for r in &reports {
            assert!(
                r.pass,
                "{}: error={:?} comparisons={:?}",
                r.name, r.error, r.comparisons
            );
        }
    }

    /// The quadric flag with m = 0, inlined for loader tests.
    const MINIMAL: &str = r#"{
  "schema": "azflag/1",
  "name": "mini",
  "mode": "point",
  "threefold": {
    "basis": ["E", "H"],
    "triple_form": {
      "H.H.H": "1",
      "E.H.H": "0",
      "E.E.H": "-5",
      "E.E.E": "-22"
    },
    "anticanonical": ["-1", "4"],
    "anticanonical_cube": "26",
    "test_curves": {
      "l1": ["3", "1"],
      "l2": ["2", "1"],
      "f": ["-1", "0"]
    }
  },
  "flag_divisor": { "name": "Qt", "class": ["-1", "2"] },
  "threefold_decomposition": [
    {
      "u_lo": "0",
      "u_hi": "1",
      "positive": [["-1", "1"], ["4", "-2"]]
    },
    {
      "u_lo": "1",
      "u_hi": "2",
      "positive": [["0"], ["4", "-2"]],
      "negative": [
        {
          "name": "E",
          "class": ["1", "0"],
          "coeff": ["-1", "1"],
          "ord_along_flag_curve": "0",
          "restriction_class": ["2", "3"]
        }
      ]
    }
  ],
  "flag_surface": {
    "basis": ["L1", "L2"],
    "pairing": [["0", "1"], ["1", "0"]],
    "restriction": [["2", "3"], ["1", "1"]],
    "flag_curve": "L1",
    "log_discrepancy": "1",
    "mode": "on-surface"
  },
  "marked_points": [
    { "name": "p", "different_ord": "0", "local_mults": {} }
  ],
  "expected": {
    "s_x_y": "10/13",
    "s_v_z": "12/13",
    "f_p": { "p": "0" },
    "s_w_p": { "p": "10/13" },
    "delta_bound": "13/12"
  }
}"#;
}
