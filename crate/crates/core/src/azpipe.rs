//! The invariant pipeline: expected vanishing orders along a flag
//! `p ∈ Z ⊂ Y ⊂ X` and the local stability bound they certify.
//!
//! Everything is driven by a [`FlagContext`]: intersection data, a supplied
//! decomposition of `-K_X - u·Y`, a flag-surface lattice with a restriction
//! map onto it, a flag curve, and the log discrepancy of the curve's
//! extraction. `prepare` verifies all of it and builds the chamber
//! complexes once; the `s_*` accessors are then pure integrals.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::exactnum::{ParamPoly, Rat};
use crate::lattices::{RestrictionMap, SurfaceClass, SurfaceLattice, ThreefoldClass, ThreefoldData};
use crate::zariski::{
    chamber_complex, integrate_over_cell, verify_threefold_decomposition, ChamberedDecomposition,
    ParamDivisor, ThreefoldDecomposition, ZariskiError,
};

#[derive(Debug, Clone, thiserror::Error)]
pub enum PipeError {
    #[error("input verification failed:\n{0}")]
    Verification(String),
    #[error(transparent)]
    Zariski(#[from] ZariskiError),
    #[error("invalid flag data: {0}")]
    Input(String),
}

type Result<T> = std::result::Result<T, PipeError>;

/// Whether the flag surface data lives on the surface itself or on a plt
/// blow-up of it. Numerically identical (the restriction map already
/// carries the pullback); kept as metadata for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlagMode {
    OnSurface,
    Pullback,
}

/// Full input data of one flag.
#[derive(Debug, Clone)]
pub struct FlagContext {
    pub threefold: ThreefoldData,
    /// Class of the flag divisor `Y`.
    pub y: ThreefoldClass,
    pub dec3: ThreefoldDecomposition,
    pub surface: SurfaceLattice,
    pub restriction: RestrictionMap,
    /// Basis name of the flag curve `Z` on the surface lattice.
    pub flag_curve: String,
    /// `A_Y(Z)` (or of its extraction in pullback mode); 1 when `Z` lies
    /// on `Y`.
    pub log_discrepancy: Rat,
    pub mode: FlagMode,
}

/// A marked point on the flag curve with its adjunction and local
/// intersection data.
#[derive(Debug, Clone, Serialize)]
pub struct MarkedPoint {
    pub name: String,
    /// `ord_p` of the different on `Z`; in `[0, 1)`.
    pub different_ord: Rat,
    /// Candidate-curve name -> local multiplicity against `Z` at `p`, per
    /// unit coefficient.
    pub local_mults: BTreeMap<String, Rat>,
}

/// Which term of the minimum attained the bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "point", rename_all = "kebab-case")]
pub enum Witness {
    Point(String),
    Curve,
    Divisor,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointValues {
    pub name: String,
    pub f_p: Rat,
    pub s_w: Rat,
}

/// All computed invariants of one flag.
#[derive(Debug, Clone, Serialize)]
pub struct SReport {
    pub s_x_y: Rat,
    pub s_v_z: Rat,
    pub points: Vec<PointValues>,
    pub delta_bound: Rat,
    pub witness: Witness,
}

struct ChamberData {
    u_lo: Rat,
    u_hi: Rat,
    /// `P(u)^3` on the threefold.
    p_cubed: ParamPoly,
    /// `P(u)^2 · Y`.
    p_sq_y: ParamPoly,
    /// `Σ coeff_j(u) · ord_Z` over the supplied negative components.
    ord_curve: ParamPoly,
    /// Per marked-point name: `Σ coeff_j(u) · ord_p` over the components.
    ord_point: BTreeMap<String, ParamPoly>,
    complex: ChamberedDecomposition,
}

/// A verified flag with its chamber complexes built.
pub struct Computation<'a> {
    ctx: &'a FlagContext,
    minus_k_cube: Rat,
    z_class: SurfaceClass,
    chambers: Vec<ChamberData>,
}

impl<'a> Computation<'a> {
    /// Verify every input invariant and build the chamber complex of the
    /// restricted family on each supplied `u`-chamber.
    pub fn prepare(ctx: &'a FlagContext) -> Result<Computation<'a>> {
        let mut report =
            crate::lattices::verify_restriction(&ctx.restriction, &ctx.threefold, &ctx.y, &ctx.surface);
        report.merge(verify_threefold_decomposition(&ctx.threefold, &ctx.y, &ctx.dec3));
        if !report.pass() {
            let msg = report
                .failures()
                .map(|e| format!("  {}: {}", e.check, e.detail))
                .collect::<Vec<_>>()
                .join("\n");
            return Err(PipeError::Verification(msg));
        }
        if ctx.log_discrepancy < Rat::one() {
            return Err(PipeError::Input(format!(
                "log discrepancy {} < 1",
                ctx.log_discrepancy
            )));
        }
        let z_index = ctx.surface.basis_index(&ctx.flag_curve).ok_or_else(|| {
            PipeError::Input(format!(
                "flag curve {} is not a basis name of the flag surface",
                ctx.flag_curve
            ))
        })?;
        if ctx
            .surface
            .negative_candidates
            .iter()
            .any(|c| c.name == ctx.flag_curve)
        {
            return Err(PipeError::Input(format!(
                "flag curve {} is also a negative-part candidate",
                ctx.flag_curve
            )));
        }
        let minus_k_cube = ctx.threefold.anticanonical_cube_computed();
        if !minus_k_cube.is_positive() {
            return Err(PipeError::Input(format!(
                "anticanonical cube {minus_k_cube} is not positive"
            )));
        }
        let z_class = SurfaceClass::basis_element(ctx.surface.rank(), z_index);
        let mut chambers = Vec::new();
        for ch in &ctx.dec3.chambers {
            let p_cubed = ctx
                .threefold
                .triple(&ch.positive, &ch.positive, &ch.positive)
                .map_err(|e| PipeError::Input(e.to_string()))?;
            let p_sq_y = ctx
                .threefold
                .triple(&ch.positive, &ch.positive, &ctx.y)
                .map_err(|e| PipeError::Input(e.to_string()))?;
            let mut ord_curve = ParamPoly::zero();
            let mut ord_point: BTreeMap<String, ParamPoly> = BTreeMap::new();
            for comp in &ch.negative {
                ord_curve = &ord_curve + &comp.coeff.scale(&comp.ord_along_flag_curve);
                for (pt, m) in &comp.ord_at_marked_point {
                    let acc = ord_point.entry(pt.clone()).or_insert_with(ParamPoly::zero);
                    *acc = &*acc + &comp.coeff.scale(m);
                }
            }
            // restricted family P(u)|_Y - v·Z
            let mut restricted = ctx.restriction.restrict(&ch.positive);
            restricted.coeffs[z_index] = &restricted.coeffs[z_index] - &ParamPoly::var_v();
            let family = ParamDivisor {
                class: restricted,
                u_lo: ch.u_lo.clone(),
                u_hi: ch.u_hi.clone(),
            };
            let complex = chamber_complex(&ctx.surface, &family)?;
            chambers.push(ChamberData {
                u_lo: ch.u_lo.clone(),
                u_hi: ch.u_hi.clone(),
                p_cubed,
                p_sq_y,
                ord_curve,
                ord_point,
                complex,
            });
        }
        Ok(Computation {
            ctx,
            minus_k_cube,
            z_class,
            chambers,
        })
    }

    pub fn context(&self) -> &FlagContext {
        self.ctx
    }

    pub fn minus_k_cube(&self) -> &Rat {
        &self.minus_k_cube
    }

    /// The chamber complexes, for trace output: one per supplied
    /// `u`-chamber, in order.
    pub fn complexes(&self) -> impl Iterator<Item = (&Rat, &Rat, &ChamberedDecomposition)> {
        self.chambers
            .iter()
            .map(|c| (&c.u_lo, &c.u_hi, &c.complex))
    }

    /// `S_X(Y) = (1/(-K)^3) ∫ P(u)^3 du` over the supplied chambers.
    pub fn s_divisor(&self) -> Rat {
        let mut acc = Rat::zero();
        for ch in &self.chambers {
            acc += &ch.p_cubed.integrate_u_interval(&ch.u_lo, &ch.u_hi);
        }
        &acc / &self.minus_k_cube
    }

    /// `S(V; Z) = (3/(-K)^3) [∫ (P(u)^2·Y)·d(u) du + ∫∫ vol dv du]` where
    /// `d(u)` is the order of the supplied negative part along the flag
    /// curve.
    pub fn s_curve(&self) -> Result<Rat> {
        let mut acc = Rat::zero();
        for ch in &self.chambers {
            let linear = &ch.p_sq_y * &ch.ord_curve;
            acc += &linear.integrate_u_interval(&ch.u_lo, &ch.u_hi);
            for cell in &ch.complex.cells {
                acc += &integrate_over_cell(&cell.vol, cell)?;
            }
        }
        Ok(&(&acc * &Rat::int(3)) / &self.minus_k_cube)
    }

    /// The correction term
    /// `F_p = (6/(-K)^3) ∫∫ (P(u,v)·Z) · ord_p(N'(u)|_Z + N(u,v)|_Z) dv du`.
    pub fn f_term(&self, p: &MarkedPoint) -> Result<Rat> {
        for name in p.local_mults.keys() {
            if !self
                .ctx
                .surface
                .negative_candidates
                .iter()
                .any(|c| &c.name == name)
            {
                return Err(PipeError::Input(format!(
                    "marked point {} references unknown candidate curve {}",
                    p.name, name
                )));
            }
        }
        let mut acc = Rat::zero();
        for ch in &self.chambers {
            let from_threefold = ch
                .ord_point
                .get(&p.name)
                .cloned()
                .unwrap_or_else(ParamPoly::zero);
            for cell in &ch.complex.cells {
                let pz = self
                    .ctx
                    .surface
                    .pair(&cell.positive, &self.z_class)
                    .map_err(|e| PipeError::Input(e.to_string()))?;
                let mut ord = from_threefold.clone();
                for (name, coeff) in cell.active.iter().zip(&cell.n_coeffs) {
                    if let Some(mu) = p.local_mults.get(name) {
                        ord = &ord + &coeff.scale(mu);
                    }
                }
                if ord.is_zero() {
                    continue;
                }
                let integrand = &pz * &ord;
                acc += &integrate_over_cell(&integrand, cell)?;
            }
        }
        Ok(&(&acc * &Rat::int(6)) / &self.minus_k_cube)
    }

    /// `S(W; p) = (3/(-K)^3) ∫∫ (P(u,v)·Z)^2 dv du + F_p`.
    pub fn s_point(&self, p: &MarkedPoint) -> Result<Rat> {
        let mut acc = Rat::zero();
        for ch in &self.chambers {
            for cell in &ch.complex.cells {
                let pz = self
                    .ctx
                    .surface
                    .pair(&cell.positive, &self.z_class)
                    .map_err(|e| PipeError::Input(e.to_string()))?;
                let sq = &pz * &pz;
                acc += &integrate_over_cell(&sq, cell)?;
            }
        }
        let main = &(&acc * &Rat::int(3)) / &self.minus_k_cube;
        Ok(&main + &self.f_term(p)?)
    }

    /// The local bound: minimum of `(1 - ord_p Δ)/S(W;p)` over the marked
    /// points, `A_Y(Z)/S(V;Z)`, and `1/S_X(Y)`. With no marked points
    /// (curve mode) the point terms are absent.
    pub fn delta_bound(&self, points: &[MarkedPoint]) -> Result<SReport> {
        let s_x_y = self.s_divisor();
        let s_v_z = self.s_curve()?;
        for (label, val) in [("S_X(Y)", &s_x_y), ("S(V;Z)", &s_v_z)] {
            if !val.is_positive() {
                return Err(PipeError::Input(format!("{label} = {val} is not positive")));
            }
        }
        let mut point_values = Vec::new();
        let mut best: Option<(Rat, Witness)> = None;
        let offer = |val: Rat, wit: Witness, best: &mut Option<(Rat, Witness)>| {
            match best {
                Some((cur, _)) if *cur <= val => {}
                _ => *best = Some((val, wit)),
            }
        };
        for p in points {
            if p.different_ord.is_negative() || p.different_ord >= Rat::one() {
                return Err(PipeError::Input(format!(
                    "different order {} of point {} outside [0, 1)",
                    p.different_ord, p.name
                )));
            }
            let f_p = self.f_term(p)?;
            let s_w = self.s_point(p)?;
            if !s_w.is_positive() {
                return Err(PipeError::Input(format!(
                    "S(W;{}) = {s_w} is not positive",
                    p.name
                )));
            }
            let q = &(&Rat::one() - &p.different_ord) / &s_w;
            offer(q, Witness::Point(p.name.clone()), &mut best);
            point_values.push(PointValues {
                name: p.name.clone(),
                f_p,
                s_w,
            });
        }
        offer(
            &self.ctx.log_discrepancy / &s_v_z,
            Witness::Curve,
            &mut best,
        );
        offer(&Rat::one() / &s_x_y, Witness::Divisor, &mut best);
        let (delta_bound, witness) = best.expect("divisor term always present");
        Ok(SReport {
            s_x_y,
            s_v_z,
            points: point_values,
            delta_bound,
            witness,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zariski::{candidates, NegComponent, ThreefoldChamber};

    fn rat(s: &str) -> Rat {
        s.parse().unwrap()
    }

    fn rats(ss: &[&str]) -> Vec<Rat> {
        ss.iter().map(|s| rat(s)).collect()
    }

    fn family_219() -> ThreefoldData {
        // basis (H, E): H^3 = 1, H^2·E = 0, H·E^2 = -5, E^3 = -22
        let vals = |h: usize| -> Rat {
            match h {
                3 => rat("1"),
                2 => rat("0"),
                1 => rat("-5"),
                0 => rat("-22"),
                _ => unreachable!(),
            }
        };
        let mut form = vec![vec![vec![Rat::zero(); 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let h_count = [i, j, k].iter().filter(|&&x| x == 0).count();
                    form[i][j][k] = vals(h_count);
                }
            }
        }
        let mut curves = BTreeMap::new();
        // pairing vectors (D·curve for D = H, E)
        curves.insert("l1".to_string(), rats(&["1", "3"]));
        curves.insert("l2".to_string(), rats(&["1", "2"]));
        curves.insert("f".to_string(), rats(&["0", "-1"]));
        ThreefoldData {
            basis: vec!["H".into(), "E".into()],
            triple_form: form,
            anticanonical: rats(&["4", "-1"]),
            anticanonical_cube: rat("26"),
            test_curves: curves,
        }
    }

    /// The flag through a point of the quadric: two chambers of
    /// `-K - u·(2H - E)` and the quadric lattice with no candidates except
    /// the two rulings (which never go negative here).
    fn quadric_flag_ctx(m: i64) -> (FlagContext, MarkedPoint) {
        let threefold = family_219();
        let y = ThreefoldClass::from_rats(&rats(&["2", "-1"]));
        let e_on_surface = rats(&["2", "3"]);
        let mut ord1 = BTreeMap::new();
        ord1.insert("p".to_string(), Rat::int(m));
        let dec3 = ThreefoldDecomposition {
            chambers: vec![
                ThreefoldChamber {
                    u_lo: Rat::zero(),
                    u_hi: Rat::one(),
                    positive: ThreefoldClass {
                        coeffs: vec![
                            ParamPoly::affine(rat("4"), rat("-2"), Rat::zero()),
                            ParamPoly::affine(rat("-1"), Rat::one(), Rat::zero()),
                        ],
                    },
                    negative: vec![],
                },
                ThreefoldChamber {
                    u_lo: Rat::one(),
                    u_hi: rat("2"),
                    positive: ThreefoldClass {
                        coeffs: vec![
                            ParamPoly::affine(rat("4"), rat("-2"), Rat::zero()),
                            ParamPoly::zero(),
                        ],
                    },
                    negative: vec![NegComponent {
                        name: "E".into(),
                        class: rats(&["0", "1"]),
                        coeff: ParamPoly::affine(rat("-1"), Rat::one(), Rat::zero()),
                        ord_along_flag_curve: Rat::zero(),
                        ord_at_marked_point: ord1,
                        restriction_class: Some(e_on_surface.clone()),
                    }],
                },
            ],
        };
        let surface = SurfaceLattice {
            basis: vec!["L1".into(), "L2".into()],
            pairing: vec![rats(&["0", "1"]), rats(&["1", "0"])],
            negative_candidates: candidates(&[]),
        };
        let restriction = RestrictionMap {
            images: vec![
                SurfaceClass::from_rats(&rats(&["1", "1"])),
                SurfaceClass::from_rats(&e_on_surface),
            ],
        };
        let ctx = FlagContext {
            threefold,
            y,
            dec3,
            surface,
            restriction,
            flag_curve: "L1".into(),
            log_discrepancy: Rat::one(),
            mode: FlagMode::OnSurface,
        };
        let point = MarkedPoint {
            name: "p".into(),
            different_ord: Rat::zero(),
            local_mults: BTreeMap::new(),
        };
        (ctx, point)
    }

    #[test]
    fn quadric_flag_invariants() {
        let (ctx, p) = quadric_flag_ctx(2);
        let comp = Computation::prepare(&ctx).unwrap();
        assert_eq!(comp.s_divisor(), rat("10/13"));
        assert_eq!(comp.s_curve().unwrap(), rat("12/13"));
        assert_eq!(comp.f_term(&p).unwrap(), rat("2/13"));
        assert_eq!(comp.s_point(&p).unwrap(), rat("12/13"));
        let report = comp.delta_bound(std::slice::from_ref(&p)).unwrap();
        assert_eq!(report.delta_bound, rat("13/12"));
    }

    #[test]
    fn quadric_flag_difference_identity() {
        // S(W;p) - F_p equals S_X(Y) on this flag for every m
        for m in 0..=3 {
            let (ctx, p) = quadric_flag_ctx(m);
            let comp = Computation::prepare(&ctx).unwrap();
            let diff = &comp.s_point(&p).unwrap() - &comp.f_term(&p).unwrap();
            assert_eq!(diff, comp.s_divisor());
        }
    }

    #[test]
    fn quadric_flag_degenerate_bound() {
        let (ctx, p) = quadric_flag_ctx(3);
        let comp = Computation::prepare(&ctx).unwrap();
        assert_eq!(comp.s_point(&p).unwrap(), Rat::one());
        let report = comp.delta_bound(std::slice::from_ref(&p)).unwrap();
        assert_eq!(report.delta_bound, Rat::one());
        assert_eq!(report.witness, Witness::Point("p".into()));
    }

    #[test]
    fn monotone_in_point_order() {
        let mut prev = Rat::zero();
        for m in 0..=3 {
            let (ctx, p) = quadric_flag_ctx(m);
            let comp = Computation::prepare(&ctx).unwrap();
            let s_w = comp.s_point(&p).unwrap();
            assert!(s_w > prev);
            prev = s_w;
        }
    }

    #[test]
    fn tampered_restriction_is_rejected() {
        let (mut ctx, _) = quadric_flag_ctx(0);
        ctx.restriction.images[1] = SurfaceClass::from_rats(&rats(&["2", "2"]));
        assert!(matches!(
            Computation::prepare(&ctx).err(),
            Some(PipeError::Verification(_))
        ));
    }

    #[test]
    fn unknown_flag_curve_is_rejected() {
        let (mut ctx, _) = quadric_flag_ctx(0);
        ctx.flag_curve = "L9".into();
        assert!(matches!(
            Computation::prepare(&ctx).err(),
            Some(PipeError::Input(_))
        ));
    }
}
