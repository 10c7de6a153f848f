//! Numerical intersection data: surface lattices with a rational symmetric
//! pairing, threefold divisor classes with a symmetric trilinear form, and
//! the restriction maps connecting them.
//!
//! Restriction maps are input data, not computed: how a divisor restricts to
//! a flag surface is geometric knowledge the lattice cannot infer. What the
//! engine owes is the numerical compatibility check in
//! [`verify_restriction`].

use std::collections::BTreeMap;

use serde::Serialize;

use crate::exactnum::{ParamPoly, Rat};

/// Errors from lattice arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
}

/// A curve class on the flag surface, as coefficients over the lattice
/// basis. Coefficients may depend on the parameters `(u, v)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceClass {
    pub coeffs: Vec<ParamPoly>,
}

impl SurfaceClass {
    pub fn zero(rank: usize) -> Self {
        SurfaceClass {
            coeffs: vec![ParamPoly::zero(); rank],
        }
    }

    pub fn from_rats(coeffs: &[Rat]) -> Self {
        SurfaceClass {
            coeffs: coeffs.iter().cloned().map(ParamPoly::constant).collect(),
        }
    }

    pub fn basis_element(rank: usize, idx: usize) -> Self {
        let mut c = Self::zero(rank);
        c.coeffs[idx] = ParamPoly::one();
        c
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn add(&self, other: &SurfaceClass) -> SurfaceClass {
        assert_eq!(self.rank(), other.rank());
        SurfaceClass {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SurfaceClass) -> SurfaceClass {
        assert_eq!(self.rank(), other.rank());
        SurfaceClass {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale_poly(&self, f: &ParamPoly) -> SurfaceClass {
        SurfaceClass {
            coeffs: self.coeffs.iter().map(|c| c * f).collect(),
        }
    }

    pub fn scale(&self, r: &Rat) -> SurfaceClass {
        SurfaceClass {
            coeffs: self.coeffs.iter().map(|c| c.scale(r)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(ParamPoly::is_zero)
    }

    /// Evaluate all coefficients at a parameter point.
    pub fn eval(&self, u: &Rat, v: &Rat) -> Vec<Rat> {
        self.coeffs.iter().map(|c| c.eval(u, v)).collect()
    }
}

/// A named curve class with constant rational coefficients, used for
/// negative-part candidates.
#[derive(Clone, Debug, Serialize)]
pub struct NamedClass {
    pub name: String,
    pub coeffs: Vec<Rat>,
}

/// Intersection lattice of a flag surface: named curve basis, symmetric
/// rational pairing, and the list of candidate curves allowed to appear in
/// negative parts. Self-intersections may be non-integral (weighted
/// blow-ups).
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceLattice {
    pub basis: Vec<String>,
    pub pairing: Vec<Vec<Rat>>,
    pub negative_candidates: Vec<NamedClass>,
}

impl SurfaceLattice {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_index(&self, name: &str) -> Option<usize> {
        self.basis.iter().position(|b| b == name)
    }

    /// Bilinear extension of the pairing matrix.
    pub fn pair(&self, a: &SurfaceClass, b: &SurfaceClass) -> Result<ParamPoly, LatticeError> {
        let n = self.rank();
        for c in [a, b] {
            if c.rank() != n {
                return Err(LatticeError::RankMismatch {
                    expected: n,
                    got: c.rank(),
                });
            }
        }
        let mut acc = ParamPoly::zero();
        for i in 0..n {
            if a.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if b.coeffs[j].is_zero() {
                    continue;
                }
                let prod = &a.coeffs[i] * &b.coeffs[j];
                acc = &acc + &prod.scale(&self.pairing[i][j]);
            }
        }
        Ok(acc)
    }

    /// Pairing of two constant classes, as a rational.
    pub fn pair_rat(&self, a: &[Rat], b: &[Rat]) -> Result<Rat, LatticeError> {
        let ac = SurfaceClass::from_rats(a);
        let bc = SurfaceClass::from_rats(b);
        Ok(self.pair(&ac, &bc)?.eval(&Rat::zero(), &Rat::zero()))
    }

    /// Gram matrix of a subset of candidate curves.
    pub fn gram(&self, candidate_indices: &[usize]) -> Vec<Vec<Rat>> {
        candidate_indices
            .iter()
            .map(|&i| {
                candidate_indices
                    .iter()
                    .map(|&j| {
                        self.pair_rat(
                            &self.negative_candidates[i].coeffs,
                            &self.negative_candidates[j].coeffs,
                        )
                        .expect("candidate rank checked at construction")
                    })
                    .collect()
            })
            .collect()
    }
}

/// A divisor class on the threefold, as (possibly `u`-dependent)
/// coefficients over the divisor basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreefoldClass {
    pub coeffs: Vec<ParamPoly>,
}

impl ThreefoldClass {
    pub fn from_rats(coeffs: &[Rat]) -> Self {
        ThreefoldClass {
            coeffs: coeffs.iter().cloned().map(ParamPoly::constant).collect(),
        }
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn sub(&self, other: &ThreefoldClass) -> ThreefoldClass {
        assert_eq!(self.rank(), other.rank());
        ThreefoldClass {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, other: &ThreefoldClass) -> ThreefoldClass {
        assert_eq!(self.rank(), other.rank());
        ThreefoldClass {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(ParamPoly::is_zero)
    }
}

/// Intersection data of the ambient threefold: a symmetric trilinear form
/// on divisor classes, the anticanonical class, and named test curves given
/// by their pairing vectors against the divisor basis.
#[derive(Clone, Debug, Serialize)]
pub struct ThreefoldData {
    pub basis: Vec<String>,
    /// `triple_form[i][j][k]`, symmetric under all index permutations.
    pub triple_form: Vec<Vec<Vec<Rat>>>,
    pub anticanonical: Vec<Rat>,
    /// Stored `(-K_X)^3`, used only as an input cross-check.
    pub anticanonical_cube: Rat,
    /// Curve name -> pairing vector against the divisor basis.
    pub test_curves: BTreeMap<String, Vec<Rat>>,
}

impl ThreefoldData {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn anticanonical_class(&self) -> ThreefoldClass {
        ThreefoldClass::from_rats(&self.anticanonical)
    }

    /// Trilinear extension of the triple form.
    pub fn triple(
        &self,
        a: &ThreefoldClass,
        b: &ThreefoldClass,
        c: &ThreefoldClass,
    ) -> Result<ParamPoly, LatticeError> {
        let n = self.rank();
        for x in [a, b, c] {
            if x.rank() != n {
                return Err(LatticeError::RankMismatch {
                    expected: n,
                    got: x.rank(),
                });
            }
        }
        let mut acc = ParamPoly::zero();
        for i in 0..n {
            if a.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if b.coeffs[j].is_zero() {
                    continue;
                }
                let ab = &a.coeffs[i] * &b.coeffs[j];
                for k in 0..n {
                    if c.coeffs[k].is_zero() {
                        continue;
                    }
                    let abc = &ab * &c.coeffs[k];
                    acc = &acc + &abc.scale(&self.triple_form[i][j][k]);
                }
            }
        }
        Ok(acc)
    }

    /// `(-K_X)^3` computed from the triple form; the stored field is only a
    /// cross-check.
    pub fn anticanonical_cube_computed(&self) -> Rat {
        let k = self.anticanonical_class();
        self.triple(&k, &k, &k)
            .expect("anticanonical over own basis")
            .eval(&Rat::zero(), &Rat::zero())
    }

    /// Pair a divisor class against a named test curve.
    pub fn pair_curve(&self, d: &ThreefoldClass, curve: &str) -> Option<ParamPoly> {
        let vec = self.test_curves.get(curve)?;
        let mut acc = ParamPoly::zero();
        for (c, p) in vec.iter().zip(&d.coeffs) {
            acc = &acc + &p.scale(c);
        }
        Some(acc)
    }
}

/// For each threefold basis divisor, its class on the flag surface: either
/// the honest restriction (on-surface mode) or the pullback of the
/// restriction under the plt blow-up (pullback mode). Pullback preserves
/// intersection numbers, so one compatibility check covers both modes.
#[derive(Clone, Debug, Serialize)]
pub struct RestrictionMap {
    pub images: Vec<SurfaceClass>,
}

impl RestrictionMap {
    /// Linear image of a threefold class on the flag surface.
    pub fn restrict(&self, d: &ThreefoldClass) -> SurfaceClass {
        assert_eq!(d.rank(), self.images.len(), "restriction rank mismatch");
        let rank = self.images[0].rank();
        let mut out = SurfaceClass::zero(rank);
        for (coeff, image) in d.coeffs.iter().zip(&self.images) {
            if coeff.is_zero() {
                continue;
            }
            out = out.add(&image.scale_poly(coeff));
        }
        out
    }
}

/// One entry of a verification report: a named check with exact witnesses
/// on failure.
#[derive(Clone, Debug, Serialize)]
pub struct CheckEntry {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

/// Collection of pass/fail entries; failures never panic, they are
/// reported with both exact values.
#[derive(Clone, Debug, Default, Serialize)]
pub struct VerificationReport {
    pub entries: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn push_ok(&mut self, check: impl Into<String>, detail: impl Into<String>) {
        self.entries.push(CheckEntry {
            check: check.into(),
            pass: true,
            detail: detail.into(),
        });
    }

    pub fn push_fail(&mut self, check: impl Into<String>, detail: impl Into<String>) {
        self.entries.push(CheckEntry {
            check: check.into(),
            pass: false,
            detail: detail.into(),
        });
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn merge(&mut self, other: VerificationReport) {
        self.entries.extend(other.entries);
    }
}

/// Check the compatibility invariant of a restriction map: for all basis
/// divisors `D_i, D_j`, the threefold number `D_i · D_j · Y` must equal the
/// surface pairing of the two images.
pub fn verify_restriction(
    map: &RestrictionMap,
    threefold: &ThreefoldData,
    y: &ThreefoldClass,
    surface: &SurfaceLattice,
) -> VerificationReport {
    let mut report = VerificationReport::default();
    let n = threefold.rank();
    if map.images.len() != n {
        report.push_fail(
            "restriction/arity",
            format!("{} images for {} basis divisors", map.images.len(), n),
        );
        return report;
    }
    for i in 0..n {
        for j in i..n {
            let di = ThreefoldClass::from_rats(&basis_vector(n, i));
            let dj = ThreefoldClass::from_rats(&basis_vector(n, j));
            let lhs = match threefold.triple(&di, &dj, y) {
                Ok(p) => p.eval(&Rat::zero(), &Rat::zero()),
                Err(e) => {
                    report.push_fail("restriction/triple", e.to_string());
                    continue;
                }
            };
            let rhs = match surface.pair(&map.images[i], &map.images[j]) {
                Ok(p) => p.eval(&Rat::zero(), &Rat::zero()),
                Err(e) => {
                    report.push_fail("restriction/pair", e.to_string());
                    continue;
                }
            };
            let name = format!(
                "restriction/compat({},{})",
                threefold.basis[i], threefold.basis[j]
            );
            if lhs == rhs {
                report.push_ok(name, format!("{lhs}"));
            } else {
                report.push_fail(name, format!("threefold side {lhs} != surface side {rhs}"));
            }
        }
    }
    report
}

fn basis_vector(n: usize, i: usize) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); n];
    v[i] = Rat::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(s: &str) -> Rat {
        s.parse().unwrap()
    }

    fn rats(ss: &[&str]) -> Vec<Rat> {
        ss.iter().map(|s| rat(s)).collect()
    }

    /// Quadric lattice: basis (L1, L2), L1^2 = L2^2 = 0, L1·L2 = 1.
    fn quadric() -> SurfaceLattice {
        SurfaceLattice {
            basis: vec!["L1".into(), "L2".into()],
            pairing: vec![rats(&["0", "1"]), rats(&["1", "0"])],
            negative_candidates: vec![],
        }
    }

    /// Threefold data for the genus-2 pencil blowup, over basis (H, E).
    fn family_219() -> ThreefoldData {
        let t = |h: usize| -> Rat {
            // value of H^h · E^(3-h)
            match h {
                3 => rat("1"),
                2 => rat("0"),
                1 => rat("-5"),
                0 => rat("-22"),
                _ => unreachable!(),
            }
        };
        let mut form = vec![vec![vec![Rat::zero(); 2]; 2]; 2];
        for (i, j, k) in itertools_triples() {
            let h_count = [i, j, k].iter().filter(|&&x| x == 0).count();
            form[i][j][k] = t(h_count);
        }
        ThreefoldData {
            basis: vec!["H".into(), "E".into()],
            triple_form: form,
            anticanonical: rats(&["4", "-1"]),
            anticanonical_cube: rat("26"),
            test_curves: BTreeMap::new(),
        }
    }

    fn itertools_triples() -> Vec<(usize, usize, usize)> {
        let mut v = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    v.push((i, j, k));
                }
            }
        }
        v
    }

    #[test]
    fn pair_on_quadric() {
        let l = quadric();
        // (2L1 + (1+u)L2) · L1 = 1+u
        let a = SurfaceClass {
            coeffs: vec![
                ParamPoly::constant(rat("2")),
                ParamPoly::affine(Rat::one(), Rat::one(), Rat::zero()),
            ],
        };
        let b = SurfaceClass::basis_element(2, 0);
        let expect = ParamPoly::affine(Rat::one(), Rat::one(), Rat::zero());
        assert_eq!(l.pair(&a, &b).unwrap(), expect);
        // zero class pairs to zero
        assert!(l.pair(&a, &SurfaceClass::zero(2)).unwrap().is_zero());
    }

    #[test]
    fn pair_on_ruled_surface() {
        // basis (s, f) with s^2 = -2, s·f = 1, f^2 = 0; Z = s + f has Z^2 = 0
        let e = SurfaceLattice {
            basis: vec!["s".into(), "f".into()],
            pairing: vec![rats(&["-2", "1"]), rats(&["1", "0"])],
            negative_candidates: vec![],
        };
        let z = SurfaceClass::from_rats(&rats(&["1", "1"]));
        assert!(e.pair(&z, &z).unwrap().is_zero());
    }

    #[test]
    fn pair_rank_mismatch() {
        let l = quadric();
        let bad = SurfaceClass::zero(3);
        assert!(matches!(
            l.pair(&bad, &bad),
            Err(LatticeError::RankMismatch { .. })
        ));
    }

    #[test]
    fn triple_on_family_219() {
        let t = family_219();
        // (-K)^3 = (4H - E)^3 = 26
        assert_eq!(t.anticanonical_cube_computed(), rat("26"));
        // H^3 = 1
        let h = ThreefoldClass::from_rats(&rats(&["1", "0"]));
        assert_eq!(
            t.triple(&h, &h, &h).unwrap().eval(&Rat::zero(), &Rat::zero()),
            rat("1")
        );
        // (3H - E)^2 · (2H - E) = 0
        let a = ThreefoldClass::from_rats(&rats(&["3", "-1"]));
        let q = ThreefoldClass::from_rats(&rats(&["2", "-1"]));
        assert!(t.triple(&a, &a, &q).unwrap().is_zero());
    }

    #[test]
    fn restriction_verification_on_quadric() {
        let t = family_219();
        let l = quadric();
        let y = ThreefoldClass::from_rats(&rats(&["2", "-1"])); // Q~ = 2H - E
        let map = RestrictionMap {
            images: vec![
                SurfaceClass::from_rats(&rats(&["1", "1"])), // H -> L1 + L2
                SurfaceClass::from_rats(&rats(&["2", "3"])), // E -> 2L1 + 3L2
            ],
        };
        let report = verify_restriction(&map, &t, &y, &l);
        assert!(report.pass(), "{:?}", report.failures().collect::<Vec<_>>());

        // a perturbed map must fail with witness pair (H, E)
        let bad = RestrictionMap {
            images: vec![
                SurfaceClass::from_rats(&rats(&["1", "1"])),
                SurfaceClass::from_rats(&rats(&["2", "2"])),
            ],
        };
        let report = verify_restriction(&bad, &t, &y, &l);
        assert!(!report.pass());
        assert!(report
            .failures()
            .any(|e| e.check.contains("H") && e.check.contains("E")));
    }

    #[test]
    fn restrict_p_of_u_to_quadric() {
        // (4-2u)H + (u-1)E restricts to 2L1 + (1+u)L2
        let map = RestrictionMap {
            images: vec![
                SurfaceClass::from_rats(&rats(&["1", "1"])),
                SurfaceClass::from_rats(&rats(&["2", "3"])),
            ],
        };
        let d = ThreefoldClass {
            coeffs: vec![
                ParamPoly::affine(rat("4"), rat("-2"), Rat::zero()),
                ParamPoly::affine(rat("-1"), Rat::one(), Rat::zero()),
            ],
        };
        let img = map.restrict(&d);
        assert_eq!(img.coeffs[0], ParamPoly::constant(rat("2")));
        assert_eq!(img.coeffs[1], ParamPoly::affine(Rat::one(), Rat::one(), Rat::zero()));
    }

    #[test]
    fn vacuous_verification_passes() {
        let t = ThreefoldData {
            basis: vec![],
            triple_form: vec![],
            anticanonical: vec![],
            anticanonical_cube: Rat::zero(),
            test_curves: BTreeMap::new(),
        };
        let l = SurfaceLattice {
            basis: vec![],
            pairing: vec![],
            negative_candidates: vec![],
        };
        let map = RestrictionMap { images: vec![] };
        let y = ThreefoldClass { coeffs: vec![] };
        assert!(verify_restriction(&map, &t, &y, &l).pass());
    }
}
