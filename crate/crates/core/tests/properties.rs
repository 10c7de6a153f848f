//! Randomized invariants of the decomposition engine, exercised over the
//! chamber complexes of every bundled case with a flag surface.

use proptest::prelude::*;

use azflag::corpus::{self, FlagCase};
use azflag::exactnum::{is_negative_definite, ParamPoly, Rat};
use azflag::lattices::SurfaceLattice;
use azflag::zariski::{chamber_complex, zariski_decompose_at, ChamberedDecomposition, ParamDivisor};

type Family = (String, SurfaceLattice, ParamDivisor, ChamberedDecomposition);

/// Every bundled case with a flag surface, expanded into per-chamber
/// `(lattice, family, complex)` triples. Built once.
fn corpus_families() -> &'static [Family] {
    static FAMILIES: std::sync::OnceLock<Vec<Family>> = std::sync::OnceLock::new();
    FAMILIES.get_or_init(build_families)
}

fn build_families() -> Vec<Family> {
    let dir = corpus::default_corpus_dir();
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for file in files {
        let case: FlagCase = corpus::load_flag(&file).unwrap();
        let Some(flag) = &case.flag else { continue };
        let z = flag.surface.basis_index(&flag.flag_curve).unwrap();
        for (i, ch) in case.dec3.chambers.iter().enumerate() {
            let mut class = flag.restriction.restrict(&ch.positive);
            class.coeffs[z] = &class.coeffs[z] - &ParamPoly::var_v();
            let family = ParamDivisor {
                class,
                u_lo: ch.u_lo.clone(),
                u_hi: ch.u_hi.clone(),
            };
            let complex = chamber_complex(&flag.surface, &family).unwrap();
            out.push((
                format!("{}#{}", case.name, i),
                flag.surface.clone(),
                family,
                complex,
            ));
        }
    }
    assert!(!out.is_empty());
    out
}

/// Rational in (0, 1) from a pair of bounded integers.
fn frac(num: u16, den_minus_2: u8) -> Rat {
    let den = i64::from(den_minus_2) + 2;
    let num = i64::from(num) % (den - 1) + 1;
    Rat::new(num, den)
}

/// A random interior point of a non-degenerate cell of one family.
fn interior_point(
    complex: &ChamberedDecomposition,
    cell_pick: usize,
    fu: &Rat,
    fv: &Rat,
) -> Option<(Rat, Rat)> {
    let cells: Vec<_> = complex
        .cells
        .iter()
        .filter(|c| !c.region.is_degenerate() && c.u_lo < c.u_hi)
        .collect();
    if cells.is_empty() {
        return None;
    }
    let cell = cells[cell_pick % cells.len()];
    let u = &cell.u_lo + &(fu * &(&cell.u_hi - &cell.u_lo));
    let lo = cell.v_lo.eval_u(&u);
    let hi = cell.v_hi.eval_u(&u);
    if lo >= hi {
        return None;
    }
    let v = &lo + &(fv * &(&hi - &lo));
    Some((u, v))
}

/// Symbolic cell answer at a concrete point.
fn chambered_at(
    complex: &ChamberedDecomposition,
    u: &Rat,
    v: &Rat,
) -> Option<(Vec<Rat>, Vec<(String, Rat)>)> {
    let cell = complex.cells.iter().find(|c| {
        &c.u_lo <= u && u <= &c.u_hi && c.v_lo.eval_u(u) <= *v && *v <= c.v_hi.eval_u(u)
    })?;
    let positive = cell.positive.eval(u, v);
    let coeffs = cell
        .active
        .iter()
        .cloned()
        .zip(cell.n_coeffs.iter().map(|p| p.eval(u, v)))
        .collect();
    Some((positive, coeffs))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// The affine per-cell formulas agree exactly with an independent
    /// pointwise decomposition at random interior points.
    #[test]
    fn pointwise_matches_chambered(
        family_pick in 0usize..64,
        cell_pick in 0usize..16,
        nu in any::<u16>(), du in any::<u8>(),
        nv in any::<u16>(), dv in any::<u8>(),
    ) {
        let families = corpus_families();
        let (name, lattice, family, complex) = &families[family_pick % families.len()];
        let Some((u, v)) = interior_point(complex, cell_pick, &frac(nu, du), &frac(nv, dv)) else {
            return Ok(());
        };
        let divisor = family.eval(&u, &v);
        let point = zariski_decompose_at(lattice, &divisor).unwrap();
        let (positive, coeffs) = chambered_at(complex, &u, &v)
            .unwrap_or_else(|| panic!("{name}: no cell contains ({u}, {v})"));
        prop_assert_eq!(&point.positive, &positive, "{} at ({}, {})", name, u, v);
        // nonzero negative coefficients must agree by curve name
        for (&idx, c) in point.active.iter().zip(&point.n_coeffs) {
            let cand = &lattice.negative_candidates[idx].name;
            let symbolic = coeffs
                .iter()
                .find(|(n, _)| n == cand)
                .map(|(_, x)| x.clone())
                .unwrap_or_else(Rat::zero);
            prop_assert_eq!(c, &symbolic, "{}[{}] at ({}, {})", name, cand, u, v);
        }
    }

    /// Decomposition commutes with positive rescaling.
    #[test]
    fn homogeneity(
        family_pick in 0usize..64,
        cell_pick in 0usize..16,
        nu in any::<u16>(), du in any::<u8>(),
        nv in any::<u16>(), dv in any::<u8>(),
        ln in 1i64..50, ld in 1i64..50,
    ) {
        let families = corpus_families();
        let (_, lattice, family, complex) = &families[family_pick % families.len()];
        let Some((u, v)) = interior_point(complex, cell_pick, &frac(nu, du), &frac(nv, dv)) else {
            return Ok(());
        };
        let lambda = Rat::new(ln, ld);
        let divisor = family.eval(&u, &v);
        let scaled: Vec<Rat> = divisor.iter().map(|c| c * &lambda).collect();
        let base = zariski_decompose_at(lattice, &divisor).unwrap();
        let big = zariski_decompose_at(lattice, &scaled).unwrap();
        let expect_p: Vec<Rat> = base.positive.iter().map(|c| c * &lambda).collect();
        prop_assert_eq!(&big.positive, &expect_p);
        prop_assert_eq!(&big.active, &base.active);
        let expect_n: Vec<Rat> = base.n_coeffs.iter().map(|c| c * &lambda).collect();
        prop_assert_eq!(&big.n_coeffs, &expect_n);
    }

    /// Decomposing a positive part again is the identity, and the positive
    /// part pairs to zero with every active curve.
    #[test]
    fn idempotence_and_orthogonality(
        family_pick in 0usize..64,
        cell_pick in 0usize..16,
        nu in any::<u16>(), du in any::<u8>(),
        nv in any::<u16>(), dv in any::<u8>(),
    ) {
        let families = corpus_families();
        let (_, lattice, family, complex) = &families[family_pick % families.len()];
        let Some((u, v)) = interior_point(complex, cell_pick, &frac(nu, du), &frac(nv, dv)) else {
            return Ok(());
        };
        let divisor = family.eval(&u, &v);
        let point = zariski_decompose_at(lattice, &divisor).unwrap();
        for &idx in &point.active {
            let pairing = lattice
                .pair_rat(&point.positive, &lattice.negative_candidates[idx].coeffs)
                .unwrap();
            prop_assert_eq!(pairing, Rat::zero());
        }
        let again = zariski_decompose_at(lattice, &point.positive).unwrap();
        prop_assert_eq!(&again.positive, &point.positive);
        prop_assert!(again.n_coeffs.iter().all(|c| c.is_zero()));
    }
}

#[test]
fn active_sets_are_negative_definite_on_all_cells() {
    for (name, lattice, _, complex) in corpus_families() {
        for cell in &complex.cells {
            if cell.active_idx.is_empty() {
                continue;
            }
            let gram = lattice.gram(&cell.active_idx);
            assert!(
                is_negative_definite(&gram),
                "{name}: active set {:?} not negative definite",
                cell.active
            );
        }
    }
}

#[test]
fn volume_is_continuous_across_walls() {
    for (name, _, _, complex) in corpus_families() {
        for a in &complex.cells {
            if a.region.is_degenerate() {
                continue;
            }
            let u = &(&a.u_lo + &a.u_hi) / &Rat::int(2);
            let top = a.v_hi.eval_u(&u);
            // neighbour above: shares the wall v = a.v_hi over the same u
            for b in &complex.cells {
                if b.region.is_degenerate() || (b.u_lo == a.u_lo && b.v_lo == a.v_lo && b.v_hi == a.v_hi) {
                    continue;
                }
                if b.u_lo <= u && u <= b.u_hi && b.v_lo.eval_u(&u) == top {
                    let va = a.vol.eval(&u, &top);
                    let vb = b.vol.eval(&u, &top);
                    assert_eq!(va, vb, "{name}: vol jump at ({u}, {top})");
                }
            }
        }
    }
}
