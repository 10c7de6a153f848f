//! Zariski decomposition on surface lattices, pointwise and in families.
//!
//! The pointwise routine is the classical active-set iteration. The chamber
//! engine sweeps a divisor family affine in `(u, v)` upward in `v`,
//! extending each active set to its full validity region through the affine
//! inequalities, splitting in `u` whenever walls cross. Thresholds are
//! affine with rational data; anything else raises `IrrationalWall`.
//!
//! Threefold-level decompositions are input, verified not computed:
//! divisorial decompositions on threefolds need birational geometry beyond
//! numerical lattice data.

use serde::Serialize;

use crate::exactnum::{
    is_negative_definite, poly_integrate_region, rat_solve_symmetric, rational_roots, solve_poly,
    NumError, ParamPoly, Polygon, Rat,
};
use crate::lattices::{
    LatticeError, NamedClass, SurfaceClass, SurfaceLattice, ThreefoldClass, ThreefoldData,
    VerificationReport,
};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ZariskiError {
    #[error("divisor is not pseudoeffective: {0}")]
    NotPseudoeffective(String),
    #[error("active-set Gram matrix is not negative definite: {0}")]
    IndefiniteSupport(String),
    #[error("wall or threshold has no rational affine description: {0}")]
    IrrationalWall(String),
    #[error("volume does not vanish at the stated threshold: {0}")]
    VolumeNotVanishing(String),
    #[error("divisor family is not affine in (u, v): {0}")]
    NonAffineFamily(String),
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("chamber sweep failed: {0}")]
    Internal(String),
}

type Result<T> = std::result::Result<T, ZariskiError>;

/// Pointwise Zariski decomposition `D = P + N`.
#[derive(Debug, Clone)]
pub struct PointDecomposition {
    /// Indices into the lattice's candidate list.
    pub active: Vec<usize>,
    /// Coefficients of the active curves, parallel to `active`.
    pub n_coeffs: Vec<Rat>,
    /// Positive part over the lattice basis.
    pub positive: Vec<Rat>,
}

impl PointDecomposition {
    pub fn negative_class(&self, lattice: &SurfaceLattice) -> Vec<Rat> {
        let mut n = vec![Rat::zero(); lattice.rank()];
        for (&idx, coeff) in self.active.iter().zip(&self.n_coeffs) {
            for (slot, c) in n.iter_mut().zip(&lattice.negative_candidates[idx].coeffs) {
                *slot += &(coeff * c);
            }
        }
        n
    }
}

fn pair_vec(lattice: &SurfaceLattice, a: &[Rat], b: &[Rat]) -> Rat {
    lattice.pair_rat(a, b).expect("rank checked by caller")
}

/// Decompose a pseudoeffective divisor with rational coefficients.
///
/// Iteratively enlarges the active set with every candidate the current
/// positive part still meets negatively, then solves the Gram system
/// exactly. `NotPseudoeffective` signals a forced negative coefficient or
/// negative volume; `IndefiniteSupport` signals a wrong or incomplete
/// candidate list.
pub fn zariski_decompose_at(
    lattice: &SurfaceLattice,
    divisor: &[Rat],
) -> Result<PointDecomposition> {
    if divisor.len() != lattice.rank() {
        return Err(LatticeError::RankMismatch {
            expected: lattice.rank(),
            got: divisor.len(),
        }
        .into());
    }
    let cands = &lattice.negative_candidates;
    let mut active: Vec<usize> = Vec::new();
    let mut in_active = vec![false; cands.len()];
    let (n_coeffs, positive) = loop {
        let gram = lattice.gram(&active);
        let rhs: Vec<Rat> = active
            .iter()
            .map(|&i| pair_vec(lattice, divisor, &cands[i].coeffs))
            .collect();
        let x = rat_solve_symmetric(&gram, &rhs).map_err(|_| {
            ZariskiError::IndefiniteSupport(format!(
                "singular Gram matrix for active set {:?}",
                active_names(lattice, &active)
            ))
        })?;
        let mut p = divisor.to_vec();
        for (&idx, coeff) in active.iter().zip(&x) {
            for (slot, c) in p.iter_mut().zip(&cands[idx].coeffs) {
                *slot -= &(coeff * c);
            }
        }
        let mut grew = false;
        for (j, cand) in cands.iter().enumerate() {
            if !in_active[j] && pair_vec(lattice, &p, &cand.coeffs).is_negative() {
                active.push(j);
                in_active[j] = true;
                grew = true;
            }
        }
        if !grew {
            break (x, p);
        }
        if active.len() > lattice.rank() {
            return Err(ZariskiError::IndefiniteSupport(format!(
                "active set {:?} exceeds lattice rank",
                active_names(lattice, &active)
            )));
        }
    };
    if let Some((i, c)) = n_coeffs.iter().enumerate().find(|(_, c)| c.is_negative()) {
        return Err(ZariskiError::NotPseudoeffective(format!(
            "negative coefficient {} forced on {}",
            c, cands[active[i]].name
        )));
    }
    if !active.is_empty() && !is_negative_definite(&lattice.gram(&active)) {
        return Err(ZariskiError::IndefiniteSupport(format!(
            "active set {:?}",
            active_names(lattice, &active)
        )));
    }
    let vol = pair_vec(lattice, &positive, &positive);
    if vol.is_negative() {
        return Err(ZariskiError::NotPseudoeffective(format!(
            "positive part has negative self-intersection {vol}"
        )));
    }
    Ok(PointDecomposition {
        active,
        n_coeffs,
        positive,
    })
}

fn active_names(lattice: &SurfaceLattice, active: &[usize]) -> Vec<String> {
    active
        .iter()
        .map(|&i| lattice.negative_candidates[i].name.clone())
        .collect()
}

/// A divisor family affine in `(u, v)` over a `u`-interval, swept for
/// `v >= 0`.
#[derive(Debug, Clone)]
pub struct ParamDivisor {
    pub class: SurfaceClass,
    pub u_lo: Rat,
    pub u_hi: Rat,
}

impl ParamDivisor {
    pub fn eval(&self, u: &Rat, v: &Rat) -> Vec<Rat> {
        self.class.eval(u, v)
    }
}

/// One chamber of the `(u, v)` plane over which the active set is constant.
#[derive(Debug, Clone, Serialize)]
pub struct ZariskiCell {
    pub u_lo: Rat,
    pub u_hi: Rat,
    /// Affine-in-`u` lower and upper `v`-walls.
    pub v_lo: ParamPoly,
    pub v_hi: ParamPoly,
    pub region: Polygon,
    /// Names of the active candidate curves.
    pub active: Vec<String>,
    /// Candidate indices, parallel to `active`.
    #[serde(skip)]
    pub active_idx: Vec<usize>,
    /// Affine negative-part coefficients, parallel to `active`.
    pub n_coeffs: Vec<ParamPoly>,
    pub positive: SurfaceClass,
    pub vol: ParamPoly,
}

impl ZariskiCell {
    /// A rational point in the interior (or on the lower edge for
    /// degenerate cells).
    pub fn sample_point(&self) -> (Rat, Rat) {
        let u = &(&self.u_lo + &self.u_hi) / &Rat::int(2);
        let lo = self.v_lo.eval_u(&u);
        let hi = self.v_hi.eval_u(&u);
        let v = &(&lo + &hi) / &Rat::int(2);
        (u, v)
    }
}

/// Piece of the pseudoeffective threshold `t(u)`.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSeg {
    pub u_lo: Rat,
    pub u_hi: Rat,
    pub t: ParamPoly,
}

/// Chamber structure of one divisor family: cells tiling
/// `{(u, v) : 0 <= v <= t(u)}` plus the piecewise affine threshold.
#[derive(Debug, Clone, Serialize)]
pub struct ChamberedDecomposition {
    pub cells: Vec<ZariskiCell>,
    pub threshold: Vec<ThresholdSeg>,
}

impl ChamberedDecomposition {
    pub fn threshold_at(&self, u: &Rat) -> Option<Rat> {
        self.threshold
            .iter()
            .find(|s| &s.u_lo <= u && u <= &s.u_hi)
            .map(|s| s.t.eval_u(u))
    }

    /// Per-cell volume polynomials (`vol = P·P`), the piecewise volume
    /// function of the family.
    pub fn volume_function(&self) -> Vec<(&ZariskiCell, &ParamPoly)> {
        self.cells.iter().map(|c| (c, &c.vol)).collect()
    }
}

struct SymbolicCell {
    active: Vec<usize>,
    n_coeffs: Vec<ParamPoly>,
    positive: SurfaceClass,
    vol: ParamPoly,
    /// Affine inequalities that cut out the validity region:
    /// active-coefficient nonnegativity and nefness against the
    /// non-active candidates.
    constraints: Vec<(String, ParamPoly)>,
}

fn symbolic_cell(
    lattice: &SurfaceLattice,
    family: &ParamDivisor,
    active: &[usize],
) -> Result<SymbolicCell> {
    let cands = &lattice.negative_candidates;
    let gram = lattice.gram(active);
    let rhs: Vec<ParamPoly> = active
        .iter()
        .map(|&i| {
            lattice.pair(
                &family.class,
                &SurfaceClass::from_rats(&cands[i].coeffs),
            )
        })
        .collect::<std::result::Result<_, _>>()?;
    let n_coeffs = solve_poly(&gram, &rhs).map_err(|_| {
        ZariskiError::IndefiniteSupport(format!(
            "singular Gram matrix for active set {:?}",
            active_names(lattice, active)
        ))
    })?;
    let mut positive = family.class.clone();
    for (&idx, coeff) in active.iter().zip(&n_coeffs) {
        let c = SurfaceClass::from_rats(&cands[idx].coeffs).scale_poly(coeff);
        positive = positive.sub(&c);
    }
    let vol = lattice.pair(&positive, &positive)?;
    let mut constraints = Vec::new();
    for (&idx, coeff) in active.iter().zip(&n_coeffs) {
        constraints.push((format!("N[{}] >= 0", cands[idx].name), coeff.clone()));
    }
    for (j, cand) in cands.iter().enumerate() {
        if active.contains(&j) {
            continue;
        }
        let nef = lattice.pair(&positive, &SurfaceClass::from_rats(&cand.coeffs))?;
        constraints.push((format!("P·{} >= 0", cand.name), nef));
    }
    for (name, g) in &constraints {
        if !g.is_affine() {
            return Err(ZariskiError::NonAffineFamily(format!(
                "constraint {name} has degree > 1"
            )));
        }
    }
    Ok(SymbolicCell {
        active: active.to_vec(),
        n_coeffs,
        positive,
        vol,
        constraints,
    })
}

/// Compute the full chamber complex of an affine divisor family.
pub fn chamber_complex(
    lattice: &SurfaceLattice,
    family: &ParamDivisor,
) -> Result<ChamberedDecomposition> {
    for c in &family.class.coeffs {
        if !c.is_affine() {
            return Err(ZariskiError::NonAffineFamily(
                "family coefficients must be affine in (u, v)".into(),
            ));
        }
    }
    if family.u_lo >= family.u_hi {
        return Err(ZariskiError::Internal("empty u-interval".into()));
    }
    let mut cells = Vec::new();
    let mut thresholds = Vec::new();
    sweep(
        lattice,
        family,
        family.u_lo.clone(),
        family.u_hi.clone(),
        ParamPoly::zero(),
        true,
        &mut cells,
        &mut thresholds,
        0,
    )?;
    cells.sort_by(|a, b| {
        let (ua, va) = a.sample_point();
        let (ub, vb) = b.sample_point();
        (ua, va).cmp(&(ub, vb))
    });
    thresholds.sort_by(|a, b| a.u_lo.cmp(&b.u_lo));
    Ok(ChamberedDecomposition {
        cells,
        threshold: thresholds,
    })
}

/// Affine function of `u` through two sample points.
fn affine_through(u1: &Rat, r1: &Rat, u2: &Rat, r2: &Rat) -> ParamPoly {
    let slope = &(r2 - r1) / &(u2 - u1);
    let intercept = r1 - &(&slope * u1);
    ParamPoly::affine(intercept, slope, Rat::zero())
}

/// Crossing point of two affine-in-`u` functions, if any.
fn affine_crossing(p: &ParamPoly, q: &ParamPoly) -> Option<Rat> {
    let d = p - q;
    let c0 = d.coeff(0, 0);
    let c1 = d.coeff(1, 0);
    if c1.is_zero() {
        None
    } else {
        Some(&(-c0) / &c1)
    }
}

const MAX_DEPTH: u32 = 64;
const MAX_BANDS: u32 = 64;
const MAX_SAMPLE_HALVINGS: u32 = 80;

#[allow(clippy::too_many_arguments)]
fn sweep(
    lattice: &SurfaceLattice,
    family: &ParamDivisor,
    a: Rat,
    b: Rat,
    mut lo: ParamPoly,
    mut first_band: bool,
    cells: &mut Vec<ZariskiCell>,
    thresholds: &mut Vec<ThresholdSeg>,
    depth: u32,
) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(ZariskiError::Internal(
            "u-subdivision depth exceeded".into(),
        ));
    }
    if a >= b {
        return Ok(());
    }
    // split helper: rerun both halves from the current lower wall
    macro_rules! split_at {
        ($r:expr) => {{
            let r: Rat = $r;
            if !(a < r && r < b) {
                return Err(ZariskiError::Internal(format!(
                    "wall crossing at u = {r} outside ({a}, {b})"
                )));
            }
            sweep(
                lattice, family, a.clone(), r.clone(), lo.clone(), first_band,
                cells, thresholds, depth + 1,
            )?;
            sweep(
                lattice, family, r, b.clone(), lo.clone(), first_band,
                cells, thresholds, depth + 1,
            )?;
            return Ok(());
        }};
    }

    let mut bands = 0;
    loop {
        bands += 1;
        if bands > MAX_BANDS {
            return Err(ZariskiError::Internal("band count exceeded".into()));
        }
        let u_mid = &(&a + &b) / &Rat::int(2);
        let v0 = lo.eval_u(&u_mid);

        // Has the sweep reached the pseudoeffective boundary? Decompose on
        // the lower wall and test whether vol vanishes identically there.
        let pd0 = zariski_decompose_at(lattice, &family.eval(&u_mid, &v0))?;
        let sc0 = symbolic_cell(lattice, family, &pd0.active)?;
        let vol_on_lo = sc0.vol.substitute_v(&lo);
        if vol_on_lo.is_zero() {
            if first_band {
                // family already volume-zero at v = 0
                emit_cell(lattice, cells, &a, &b, &lo, &lo, &sc0)?;
            }
            thresholds.push(ThresholdSeg {
                u_lo: a,
                u_hi: b,
                t: lo,
            });
            return Ok(());
        }
        if vol_on_lo.eval_u(&u_mid).is_zero() {
            // threshold meets the wall transversally at the sample
            split_at!(u_mid);
        }

        // Sample strictly inside the next band.
        let mut delta = Rat::one();
        let sc = 'sample: {
            for _ in 0..MAX_SAMPLE_HALVINGS {
                let vs = &v0 + &delta;
                if let Ok(pd) = zariski_decompose_at(lattice, &family.eval(&u_mid, &vs)) {
                    let sc = symbolic_cell(lattice, family, &pd.active)?;
                    let bottom_ok = sc
                        .constraints
                        .iter()
                        .all(|(_, g)| !g.eval(&u_mid, &v0).is_negative());
                    let vol_at = sc.vol.eval(&u_mid, &vs);
                    let no_root_below = rational_roots(&sc.vol.restrict_u(&u_mid))
                        .into_iter()
                        .all(|r| r <= v0 || r >= vs);
                    if bottom_ok && vol_at.is_positive() && no_root_below {
                        break 'sample sc;
                    }
                }
                delta = &delta / &Rat::int(2);
            }
            return Err(ZariskiError::IrrationalWall(format!(
                "no interior sample above v = {v0} at u = {u_mid}"
            )));
        };

        if !sc.active.is_empty() && !is_negative_definite(&lattice.gram(&sc.active)) {
            return Err(ZariskiError::IndefiniteSupport(format!(
                "active set {:?}",
                active_names(lattice, &sc.active)
            )));
        }

        // Classify constraint walls.
        let mut upper_walls: Vec<ParamPoly> = Vec::new();
        for (_, g) in &sc.constraints {
            let c0 = g.coeff(0, 0);
            let cu = g.coeff(1, 0);
            let cv = g.coeff(0, 1);
            if cv.is_zero() {
                // pure-u constraint; must hold on all of [a, b]
                let at_a = g.eval(&a, &Rat::zero());
                let at_b = g.eval(&b, &Rat::zero());
                if at_a.is_negative() || at_b.is_negative() {
                    if cu.is_zero() {
                        return Err(ZariskiError::Internal(
                            "constant constraint violated".into(),
                        ));
                    }
                    split_at!(&(-&c0) / &cu);
                }
            } else {
                // wall line v = -(c0 + cu*u)/cv
                let w = ParamPoly::affine(&(-&c0) / &cv, &(-&cu) / &cv, Rat::zero());
                if cv.is_negative() {
                    upper_walls.push(w);
                } else {
                    // lower wall; it must stay at or below `lo` on [a, b]
                    if w.eval_u(&a) > lo.eval_u(&a) || w.eval_u(&b) > lo.eval_u(&b) {
                        match affine_crossing(&w, &lo) {
                            Some(r) => split_at!(r),
                            None => {
                                return Err(ZariskiError::Internal(
                                    "parallel lower wall above band bottom".into(),
                                ))
                            }
                        }
                    }
                }
            }
        }

        // Threshold candidate: smallest rational root of vol above the band
        // bottom at the sample abscissa.
        let r_mid = rational_roots(&sc.vol.restrict_u(&u_mid))
            .into_iter()
            .find(|r| r > &v0);
        let wall_mid = upper_walls
            .iter()
            .map(|w| w.eval_u(&u_mid))
            .min();
        let is_top = match (&r_mid, &wall_mid) {
            (None, None) => {
                return Err(ZariskiError::IrrationalWall(format!(
                    "volume never vanishes rationally above v = {v0} at u = {u_mid}"
                )))
            }
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(r), Some(w)) => r <= w,
        };

        if is_top {
            let r_mid = r_mid.unwrap();
            // fit the affine threshold through a second abscissa and verify
            // it as a polynomial identity
            let u2 = &(&a + &(&b * &Rat::int(3))) / &Rat::int(4);
            let lo2 = lo.eval_u(&u2);
            let r2 = rational_roots(&sc.vol.restrict_u(&u2))
                .into_iter()
                .find(|r| r >= &lo2)
                .ok_or_else(|| {
                    ZariskiError::IrrationalWall(format!(
                        "no rational volume root at u = {u2}"
                    ))
                })?;
            let t = if u_mid == u2 {
                ParamPoly::constant(r_mid.clone())
            } else {
                affine_through(&u_mid, &r_mid, &u2, &r2)
            };
            if !sc.vol.substitute_v(&t).is_zero() {
                return Err(ZariskiError::IrrationalWall(format!(
                    "volume boundary through ({u_mid}, {r_mid}) is not affine"
                )));
            }
            if t.eval_u(&a) < lo.eval_u(&a) || t.eval_u(&b) < lo.eval_u(&b) {
                match affine_crossing(&t, &lo) {
                    Some(r) => split_at!(r),
                    None => {
                        return Err(ZariskiError::Internal(
                            "threshold parallel below band bottom".into(),
                        ))
                    }
                }
            }
            for w in &upper_walls {
                if w.eval_u(&a) < t.eval_u(&a) || w.eval_u(&b) < t.eval_u(&b) {
                    match affine_crossing(w, &t) {
                        Some(r) => split_at!(r),
                        None => {
                            return Err(ZariskiError::Internal(
                                "wall parallel under threshold".into(),
                            ))
                        }
                    }
                }
            }
            emit_cell(lattice, cells, &a, &b, &lo, &t, &sc)?;
            thresholds.push(ThresholdSeg {
                u_lo: a,
                u_hi: b,
                t,
            });
            return Ok(());
        }

        // Interior band: the next wall is the upper wall minimal at u_mid.
        let wall_mid = wall_mid.unwrap();
        let mut w_best: Option<&ParamPoly> = None;
        for w in &upper_walls {
            if w.eval_u(&u_mid) == wall_mid {
                match w_best {
                    None => w_best = Some(w),
                    Some(cur) => {
                        if w.eval_u(&a) < cur.eval_u(&a) {
                            w_best = Some(w);
                        }
                    }
                }
            }
        }
        let w = w_best.expect("minimum exists").clone();
        for other in &upper_walls {
            if other.eval_u(&a) < w.eval_u(&a) || other.eval_u(&b) < w.eval_u(&b) {
                match affine_crossing(other, &w) {
                    Some(r) => split_at!(r),
                    None => {
                        return Err(ZariskiError::Internal(
                            "parallel walls in inconsistent order".into(),
                        ))
                    }
                }
            }
        }
        if w.eval_u(&a) < lo.eval_u(&a) || w.eval_u(&b) < lo.eval_u(&b) {
            match affine_crossing(&w, &lo) {
                Some(r) => split_at!(r),
                None => {
                    return Err(ZariskiError::Internal(
                        "wall parallel below band bottom".into(),
                    ))
                }
            }
        }
        // the volume must stay nonnegative up to the wall
        let vol_on_wall = sc.vol.substitute_v(&w);
        if vol_on_wall.eval_u(&a).is_negative() || vol_on_wall.eval_u(&b).is_negative() {
            // vol_on_wall is univariate in u
            let coeffs: Vec<Rat> = (0..=vol_on_wall.deg_u())
                .map(|i| vol_on_wall.coeff(i, 0))
                .collect();
            let r = rational_roots(&coeffs)
                .into_iter()
                .find(|r| &a < r && r < &b)
                .ok_or_else(|| {
                    ZariskiError::IrrationalWall(
                        "threshold crosses a wall at an irrational point".into(),
                    )
                })?;
            split_at!(r);
        }
        emit_cell(lattice, cells, &a, &b, &lo, &w, &sc)?;
        lo = w;
        first_band = false;
    }
}

fn emit_cell(
    lattice: &SurfaceLattice,
    cells: &mut Vec<ZariskiCell>,
    a: &Rat,
    b: &Rat,
    lo: &ParamPoly,
    hi: &ParamPoly,
    sc: &SymbolicCell,
) -> Result<()> {
    // construction-time invariants
    for &idx in &sc.active {
        let cand = SurfaceClass::from_rats(&lattice.negative_candidates[idx].coeffs);
        if !lattice.pair(&sc.positive, &cand)?.is_zero() {
            return Err(ZariskiError::Internal(format!(
                "P·{} != 0 on active set",
                lattice.negative_candidates[idx].name
            )));
        }
    }
    let vertices = vec![
        (a.clone(), lo.eval_u(a)),
        (b.clone(), lo.eval_u(b)),
        (b.clone(), hi.eval_u(b)),
        (a.clone(), hi.eval_u(a)),
    ];
    for (u, v) in &vertices {
        for (name, g) in &sc.constraints {
            if g.eval(u, v).is_negative() {
                return Err(ZariskiError::Internal(format!(
                    "constraint {name} negative at cell vertex ({u}, {v})"
                )));
            }
        }
    }
    let region = Polygon::new(vertices);
    cells.push(ZariskiCell {
        u_lo: a.clone(),
        u_hi: b.clone(),
        v_lo: lo.clone(),
        v_hi: hi.clone(),
        region,
        active: active_names(lattice, &sc.active),
        active_idx: sc.active.clone(),
        n_coeffs: sc.n_coeffs.clone(),
        positive: sc.positive.clone(),
        vol: sc.vol.clone(),
    });
    Ok(())
}

/// Exact integral of a polynomial over one cell.
pub fn integrate_over_cell(p: &ParamPoly, cell: &ZariskiCell) -> Result<Rat> {
    if cell.region.is_degenerate() {
        return Ok(Rat::zero());
    }
    Ok(poly_integrate_region(p, &cell.region)?)
}

// ---------------------------------------------------------------------------
// Threefold-level decompositions (supplied, verified)
// ---------------------------------------------------------------------------

/// One component of the supplied negative part `N(u)`, with the order data
/// the surface-level formulas need. The orders are per unit coefficient:
/// classes alone cannot determine them.
#[derive(Debug, Clone, Serialize)]
pub struct NegComponent {
    pub name: String,
    pub class: Vec<Rat>,
    /// Coefficient as a univariate polynomial in `u`.
    pub coeff: ParamPoly,
    /// `ord` along the flag curve of the (pulled-back) restriction, per
    /// unit coefficient.
    pub ord_along_flag_curve: Rat,
    /// Marked-point name -> `ord_p` of the restriction to the flag curve,
    /// per unit coefficient.
    pub ord_at_marked_point: std::collections::BTreeMap<String, Rat>,
    /// Informational: class of the restriction on the flag surface.
    pub restriction_class: Option<Vec<Rat>>,
}

/// One `u`-chamber of the supplied decomposition of `-K_X - u·Y`.
#[derive(Debug, Clone, Serialize)]
pub struct ThreefoldChamber {
    pub u_lo: Rat,
    pub u_hi: Rat,
    pub positive: ThreefoldClass,
    pub negative: Vec<NegComponent>,
}

/// Supplied chamberwise decomposition of `-K_X - u·Y` over `[0, τ]`.
#[derive(Debug, Clone, Serialize)]
pub struct ThreefoldDecomposition {
    pub chambers: Vec<ThreefoldChamber>,
}

impl ThreefoldDecomposition {
    pub fn tau(&self) -> Rat {
        self.chambers
            .last()
            .map(|c| c.u_hi.clone())
            .unwrap_or_else(Rat::zero)
    }
}

/// Check every numerical axiom of a supplied threefold decomposition.
///
/// Nefness of the positive parts is checked only against the supplied test
/// curves; the verdict trusts that they generate the Mori cone.
pub fn verify_threefold_decomposition(
    threefold: &ThreefoldData,
    y: &ThreefoldClass,
    dec: &ThreefoldDecomposition,
) -> VerificationReport {
    let mut report = VerificationReport::default();
    if dec.chambers.is_empty() {
        report.push_fail("dec3/nonempty", "no chambers supplied");
        return report;
    }
    if !dec.chambers[0].u_lo.is_zero() {
        report.push_fail(
            "dec3/starts-at-zero",
            format!("first chamber starts at u = {}", dec.chambers[0].u_lo),
        );
    }
    // -K - uY as a class with u-linear coefficients
    let minus_k = threefold.anticanonical_class();
    let u_poly = ParamPoly::var_u();
    let uy = ThreefoldClass {
        coeffs: y.coeffs.iter().map(|c| c * &u_poly).collect(),
    };
    let target = minus_k.sub(&uy);

    for (i, ch) in dec.chambers.iter().enumerate() {
        let tag = format!("dec3/chamber{}[{},{}]", i, ch.u_lo, ch.u_hi);
        if ch.u_lo >= ch.u_hi {
            report.push_fail(format!("{tag}/interval"), "empty u-interval");
            continue;
        }
        // P(u) + N(u) == -K - uY identically
        let mut total = ch.positive.clone();
        for comp in &ch.negative {
            let c = ThreefoldClass {
                coeffs: comp
                    .class
                    .iter()
                    .map(|r| comp.coeff.scale(r))
                    .collect(),
            };
            total = total.add(&c);
        }
        if total == target {
            report.push_ok(format!("{tag}/sum"), "P(u) + N(u) = -K - uY");
        } else {
            report.push_fail(
                format!("{tag}/sum"),
                format!("P(u) + N(u) != -K - uY ({:?} vs {:?})", total, target),
            );
        }
        // nefness against supplied test curves at chamber endpoints
        for (curve, _) in threefold.test_curves.iter() {
            let val = threefold
                .pair_curve(&ch.positive, curve)
                .expect("curve exists");
            for endpoint in [&ch.u_lo, &ch.u_hi] {
                let x = val.eval_u(endpoint);
                if x.is_negative() {
                    report.push_fail(
                        format!("{tag}/nef({curve})"),
                        format!("P({endpoint})·{curve} = {x} < 0"),
                    );
                } else {
                    report.push_ok(
                        format!("{tag}/nef({curve})@{endpoint}"),
                        format!("{x}"),
                    );
                }
            }
        }
        // negative-part coefficients nonnegative at endpoints
        for comp in &ch.negative {
            for endpoint in [&ch.u_lo, &ch.u_hi] {
                let x = comp.coeff.eval_u(endpoint);
                if x.is_negative() {
                    report.push_fail(
                        format!("{tag}/N({})", comp.name),
                        format!("coefficient {x} < 0 at u = {endpoint}"),
                    );
                } else {
                    report.push_ok(
                        format!("{tag}/N({})@{}", comp.name, endpoint),
                        format!("{x}"),
                    );
                }
            }
        }
        // continuity with the previous chamber
        if i > 0 {
            let prev = &dec.chambers[i - 1];
            if prev.u_hi != ch.u_lo {
                report.push_fail(
                    format!("{tag}/contiguous"),
                    format!("gap: previous chamber ends at {}", prev.u_hi),
                );
            } else {
                let at = &ch.u_lo;
                let same = prev
                    .positive
                    .coeffs
                    .iter()
                    .zip(&ch.positive.coeffs)
                    .all(|(p, q)| p.eval_u(at) == q.eval_u(at));
                if same {
                    report.push_ok(format!("{tag}/P-continuous"), format!("at u = {at}"));
                } else {
                    report.push_fail(
                        format!("{tag}/P-continuous"),
                        format!("P jumps at u = {at}"),
                    );
                }
                // vol continuity (follows from P-continuity, asserted directly)
                let vol_prev = chamber_volume(threefold, prev).eval_u(at);
                let vol_cur = chamber_volume(threefold, ch).eval_u(at);
                if vol_prev == vol_cur {
                    report.push_ok(format!("{tag}/vol-continuous"), format!("{vol_cur}"));
                } else {
                    report.push_fail(
                        format!("{tag}/vol-continuous"),
                        format!("{vol_prev} != {vol_cur} at u = {at}"),
                    );
                }
            }
        }
    }
    // anticanonical cube cross-check
    let cube = threefold.anticanonical_cube_computed();
    if cube.is_positive() && cube == threefold.anticanonical_cube {
        report.push_ok("dec3/anticanonical-cube", format!("{cube}"));
    } else {
        report.push_fail(
            "dec3/anticanonical-cube",
            format!(
                "computed {cube}, stored {}",
                threefold.anticanonical_cube
            ),
        );
    }
    report.push_ok(
        "dec3/mori-cone-disclaimer",
        "nefness checked only against the supplied test curves",
    );
    report
}

/// `vol(u) = P(u)^3` on one chamber.
pub fn chamber_volume(threefold: &ThreefoldData, ch: &ThreefoldChamber) -> ParamPoly {
    threefold
        .triple(&ch.positive, &ch.positive, &ch.positive)
        .expect("classes over threefold basis")
}

/// Pseudoeffective threshold of the supplied decomposition: the right
/// endpoint of the last chamber, with the vanishing of the volume there
/// asserted.
pub fn peff_threshold_u(
    threefold: &ThreefoldData,
    dec: &ThreefoldDecomposition,
) -> Result<Rat> {
    let tau = dec.tau();
    let last = dec
        .chambers
        .last()
        .ok_or_else(|| ZariskiError::Internal("no chambers".into()))?;
    let vol = chamber_volume(threefold, last).eval_u(&tau);
    if !vol.is_zero() {
        return Err(ZariskiError::VolumeNotVanishing(format!(
            "vol({tau}) = {vol}"
        )));
    }
    Ok(tau)
}

/// Make a `NamedClass` list from `(name, coeffs)` pairs; convenience for
/// tests and the corpus loader.
pub fn candidates(list: &[(&str, &[Rat])]) -> Vec<NamedClass> {
    list.iter()
        .map(|(name, coeffs)| NamedClass {
            name: (*name).to_string(),
            coeffs: coeffs.to_vec(),
        })
        .collect()
}
