//! Convex polygons with rational vertices and exact integration of
//! bivariate polynomials over them.
//!
//! Integration maps each fan triangle affinely onto the standard simplex,
//! where `∫ s^a t^b ds dt = a! b! / (a+b+2)!`.

use serde::Serialize;

use super::poly::ParamPoly;
use super::rat::Rat;
use super::NumError;

/// Convex cell in the `(u, v)` plane. Vertices are kept in counterclockwise
/// order with consecutive duplicates removed; a cell of zero area is allowed
/// but marked degenerate.
#[derive(Clone, Debug, Serialize)]
pub struct Polygon {
    vertices: Vec<(Rat, Rat)>,
    degenerate: bool,
}

fn cross(o: &(Rat, Rat), a: &(Rat, Rat), b: &(Rat, Rat)) -> Rat {
    &(&a.0 - &o.0) * &(&b.1 - &o.1) - &(&a.1 - &o.1) * &(&b.0 - &o.0)
}

impl Polygon {
    /// Build a cell from vertices in cyclic order (either orientation).
    pub fn new(mut vertices: Vec<(Rat, Rat)>) -> Polygon {
        // drop consecutive duplicates (cyclically)
        vertices.dedup();
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let mut area2 = Rat::zero();
        let n = vertices.len();
        if n >= 3 {
            for i in 1..n - 1 {
                area2 += &cross(&vertices[0], &vertices[i], &vertices[i + 1]);
            }
        }
        if area2.is_negative() {
            vertices.reverse();
            area2 = -area2;
        }
        let degenerate = vertices.len() < 3 || area2.is_zero();
        Polygon {
            vertices,
            degenerate,
        }
    }

    pub fn vertices(&self) -> &[(Rat, Rat)] {
        &self.vertices
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Twice the signed area (nonnegative after normalization).
    pub fn double_area(&self) -> Rat {
        let n = self.vertices.len();
        let mut area2 = Rat::zero();
        if n >= 3 {
            for i in 1..n - 1 {
                area2 += &cross(&self.vertices[0], &self.vertices[i], &self.vertices[i + 1]);
            }
        }
        area2
    }
}

/// Exact double integral of `p(u, v)` over the polygon.
pub fn poly_integrate_region(p: &ParamPoly, cell: &Polygon) -> Result<Rat, NumError> {
    if cell.is_degenerate() {
        return Err(NumError::DegenerateCell);
    }
    let vs = cell.vertices();
    let mut total = Rat::zero();
    for i in 1..vs.len() - 1 {
        total += &integrate_triangle(p, &vs[0], &vs[i], &vs[i + 1]);
    }
    Ok(total)
}

fn integrate_triangle(p: &ParamPoly, a: &(Rat, Rat), b: &(Rat, Rat), c: &(Rat, Rat)) -> Rat {
    let det = cross(a, b, c);
    if det.is_zero() {
        return Rat::zero();
    }
    // u = a.0 + s*(b.0 - a.0) + t*(c.0 - a.0), same for v, over the simplex
    let u_st = ParamPoly::affine(a.0.clone(), &b.0 - &a.0, &c.0 - &a.0);
    let v_st = ParamPoly::affine(a.1.clone(), &b.1 - &a.1, &c.1 - &a.1);
    let composed = compose(p, &u_st, &v_st);
    let mut acc = Rat::zero();
    for (&(da, db), coef) in composed.terms() {
        acc += &(coef * &simplex_moment(da, db));
    }
    &acc * &det
}

/// `p(U(s,t), V(s,t))` as a polynomial in `(s, t)` (reusing the two slots of
/// `ParamPoly`).
fn compose(p: &ParamPoly, u_st: &ParamPoly, v_st: &ParamPoly) -> ParamPoly {
    let du = p.deg_u() as usize;
    let dv = p.deg_v() as usize;
    let mut u_pow = Vec::with_capacity(du + 1);
    u_pow.push(ParamPoly::one());
    for i in 1..=du {
        let next = &u_pow[i - 1] * u_st;
        u_pow.push(next);
    }
    let mut v_pow = Vec::with_capacity(dv + 1);
    v_pow.push(ParamPoly::one());
    for i in 1..=dv {
        let next = &v_pow[i - 1] * v_st;
        v_pow.push(next);
    }
    let mut out = ParamPoly::zero();
    for (&(a, b), coef) in p.terms() {
        let term = &u_pow[a as usize] * &v_pow[b as usize];
        out = &out + &term.scale(coef);
    }
    out
}

/// `∫∫_simplex s^a t^b ds dt = a! b! / (a+b+2)!`
fn simplex_moment(a: u32, b: u32) -> Rat {
    let mut num = Rat::one();
    for k in 1..=a {
        num = &num * &Rat::int(i64::from(k));
    }
    for k in 1..=b {
        num = &num * &Rat::int(i64::from(k));
    }
    let mut den = Rat::one();
    for k in 1..=(a + b + 2) {
        den = &den * &Rat::int(i64::from(k));
    }
    &num / &den
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(u: &str, v: &str) -> (Rat, Rat) {
        (u.parse().unwrap(), v.parse().unwrap())
    }

    fn rat(s: &str) -> Rat {
        s.parse().unwrap()
    }

    #[test]
    fn unit_triangle_area() {
        let tri = Polygon::new(vec![pt("0", "0"), pt("1", "0"), pt("0", "1")]);
        let one = ParamPoly::one();
        assert_eq!(poly_integrate_region(&one, &tri).unwrap(), rat("1/2"));
    }

    #[test]
    fn orientation_is_normalized() {
        // clockwise input gives the same positive integral
        let tri = Polygon::new(vec![pt("0", "0"), pt("0", "1"), pt("1", "0")]);
        let one = ParamPoly::one();
        assert_eq!(poly_integrate_region(&one, &tri).unwrap(), rat("1/2"));
    }

    #[test]
    fn rectangle_with_polynomial() {
        // ∫∫ (1+u)^2 over u∈[0,1], v∈[0,2] = 14/3
        let rect = Polygon::new(vec![pt("0", "0"), pt("1", "0"), pt("1", "2"), pt("0", "2")]);
        let q = ParamPoly::affine(Rat::one(), Rat::one(), Rat::zero());
        let sq = &q * &q;
        assert_eq!(poly_integrate_region(&sq, &rect).unwrap(), rat("14/3"));
    }

    #[test]
    fn triangle_with_affine_limit() {
        // ∫_1^2 ∫_0^{4-2u} (4-2u)^2 dv du = ∫_1^2 (4-2u)^3 du = 2
        let tri = Polygon::new(vec![pt("1", "0"), pt("2", "0"), pt("1", "2")]);
        let g = ParamPoly::affine(rat("4"), rat("-2"), Rat::zero());
        let sq = &g * &g;
        assert_eq!(poly_integrate_region(&sq, &tri).unwrap(), rat("2"));
    }

    #[test]
    fn degenerate_cell_errors() {
        let seg = Polygon::new(vec![pt("0", "0"), pt("1", "1")]);
        assert!(seg.is_degenerate());
        assert!(matches!(
            poly_integrate_region(&ParamPoly::one(), &seg),
            Err(NumError::DegenerateCell)
        ));
        let flat = Polygon::new(vec![pt("0", "0"), pt("1", "0"), pt("2", "0")]);
        assert!(flat.is_degenerate());
    }

    #[test]
    fn chord_subdivision_is_invariant() {
        let quad = Polygon::new(vec![pt("0", "0"), pt("2", "0"), pt("2", "1"), pt("0", "1")]);
        let left = Polygon::new(vec![pt("0", "0"), pt("1", "0"), pt("1", "1"), pt("0", "1")]);
        let right = Polygon::new(vec![pt("1", "0"), pt("2", "0"), pt("2", "1"), pt("1", "1")]);
        let p = {
            let uv = &ParamPoly::var_u() * &ParamPoly::var_v();
            &uv + &ParamPoly::affine(rat("1/3"), rat("2"), rat("-1"))
        };
        let whole = poly_integrate_region(&p, &quad).unwrap();
        let split = &poly_integrate_region(&p, &left).unwrap()
            + &poly_integrate_region(&p, &right).unwrap();
        assert_eq!(whole, split);
    }
}
