//! Exact rational linear algebra: small dense solves, definiteness tests,
//! and rational root extraction for univariate polynomials.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::poly::ParamPoly;
use super::rat::Rat;
use super::NumError;

/// Solve `M x = b` exactly by Gaussian elimination with partial pivoting.
/// The right-hand side may carry polynomial entries; pivots come from `M`
/// so no polynomial division is ever needed.
pub fn solve_poly(m: &[Vec<Rat>], b: &[ParamPoly]) -> Result<Vec<ParamPoly>, NumError> {
    let n = m.len();
    assert!(m.iter().all(|row| row.len() == n), "matrix not square");
    assert_eq!(b.len(), n, "rhs length mismatch");
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let mut rhs: Vec<ParamPoly> = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(NumError::SingularMatrix)?;
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        let pivot = a[col][col].clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pivot;
            for c in col..n {
                let t = &factor * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
            let t = rhs[col].scale(&factor);
            rhs[r] = &rhs[r] - &t;
        }
    }
    // back substitution
    let mut x = vec![ParamPoly::zero(); n];
    for col in (0..n).rev() {
        let mut acc = rhs[col].clone();
        for c in col + 1..n {
            let t = x[c].scale(&a[col][c]);
            acc = &acc - &t;
        }
        x[col] = acc.scale(&a[col][col].recip());
    }
    Ok(x)
}

/// Solve `M x = b` for a rational right-hand side.
pub fn rat_solve_symmetric(m: &[Vec<Rat>], b: &[Rat]) -> Result<Vec<Rat>, NumError> {
    let rhs: Vec<ParamPoly> = b.iter().cloned().map(ParamPoly::constant).collect();
    let x = solve_poly(m, &rhs)?;
    Ok(x.into_iter().map(|p| p.eval_u(&Rat::zero())).collect())
}

/// Leading-principal-minor test: a symmetric matrix is negative definite
/// iff the k-th leading minor has sign `(-1)^k` for every k.
pub fn is_negative_definite(m: &[Vec<Rat>]) -> bool {
    let n = m.len();
    for k in 1..=n {
        let minor = determinant(&submatrix(m, k));
        let want_negative = k % 2 == 1;
        if minor.is_zero() || minor.is_negative() != want_negative {
            return false;
        }
    }
    true
}

fn submatrix(m: &[Vec<Rat>], k: usize) -> Vec<Vec<Rat>> {
    m[..k].iter().map(|row| row[..k].to_vec()).collect()
}

pub fn determinant(m: &[Vec<Rat>]) -> Rat {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = Rat::one();
    for col in 0..n {
        let pivot_row = match (col..n).find(|&r| !a[r][col].is_zero()) {
            Some(r) => r,
            None => return Rat::zero(),
        };
        if pivot_row != col {
            a.swap(col, pivot_row);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det = &det * &pivot;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pivot;
            for c in col..n {
                let t = &factor * &a[col][c];
                a[r][c] = &a[r][c] - &t;
            }
        }
    }
    det
}

/// All rational roots, with multiplicity, of a nonzero univariate polynomial
/// given as coefficient list `[c0, c1, ...]`. Irrational roots are simply
/// absent.
pub fn rational_roots(coeffs: &[Rat]) -> Vec<Rat> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(Rat::is_zero) {
        c.pop();
    }
    assert!(!c.is_empty(), "rational_roots on the zero polynomial");
    let mut roots = Vec::new();
    // roots at zero
    while c.len() > 1 && c[0].is_zero() {
        roots.push(Rat::zero());
        c.remove(0);
    }
    if c.len() <= 1 {
        roots.sort();
        return roots;
    }
    // primitive integer form
    let mut ic = integer_form(&c);
    loop {
        if ic.len() <= 1 {
            break;
        }
        if ic.len() == 2 {
            // linear: a0 + a1 x
            roots.push(Rat::from_big(-ic[0].clone(), ic[1].clone()));
            break;
        }
        match find_rational_root(&ic) {
            Some(r) => {
                roots.push(r.clone());
                ic = deflate(&ic, &r);
            }
            None => break,
        }
    }
    roots.sort();
    roots
}

fn integer_form(c: &[Rat]) -> Vec<BigInt> {
    let mut lcm = BigInt::from(1);
    for x in c {
        lcm = lcm.lcm(x.denom());
    }
    let mut out: Vec<BigInt> = c
        .iter()
        .map(|x| x.numer() * (&lcm / x.denom()))
        .collect();
    let mut gcd = BigInt::zero();
    for x in &out {
        gcd = gcd.gcd(x);
    }
    if !gcd.is_zero() && gcd != BigInt::from(1) {
        for x in &mut out {
            *x /= &gcd;
        }
    }
    out
}

fn find_rational_root(ic: &[BigInt]) -> Option<Rat> {
    let a0 = &ic[0];
    let an = ic.last().unwrap();
    if a0.is_zero() {
        return Some(Rat::zero());
    }
    let ps = divisors(a0);
    let qs = divisors(an);
    for q in &qs {
        for p in &ps {
            for cand in [Rat::from_big(p.clone(), q.clone()), Rat::from_big(-p, q.clone())] {
                if eval_int_poly(ic, &cand).is_zero() {
                    return Some(cand);
                }
            }
        }
    }
    None
}

fn eval_int_poly(ic: &[BigInt], x: &Rat) -> Rat {
    let mut acc = Rat::zero();
    for c in ic.iter().rev() {
        acc = &(&acc * x) + &Rat::from_big(c.clone(), BigInt::from(1));
    }
    acc
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::from(1);
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            out.push(d.clone());
            let other = &n / &d;
            if other != d {
                out.push(other);
            }
        }
        d += 1;
    }
    out
}

/// Synthetic division of an integer polynomial by `(x - r)`, returned in
/// primitive integer form again.
fn deflate(ic: &[BigInt], r: &Rat) -> Vec<BigInt> {
    let rat_coeffs: Vec<Rat> = ic
        .iter()
        .map(|c| Rat::from_big(c.clone(), BigInt::from(1)))
        .collect();
    let n = rat_coeffs.len();
    let mut q = vec![Rat::zero(); n - 1];
    let mut carry = Rat::zero();
    for i in (0..n - 1).rev() {
        let c = &rat_coeffs[i + 1] + &(&carry * r);
        carry = c.clone();
        q[i] = c;
    }
    integer_form(&q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(s: &str) -> Rat {
        s.parse().unwrap()
    }

    fn mat(rows: &[&[&str]]) -> Vec<Vec<Rat>> {
        rows.iter()
            .map(|r| r.iter().map(|s| rat(s)).collect())
            .collect()
    }

    #[test]
    fn solve_one_by_one() {
        let m = mat(&[&["-1"]]);
        let x = rat_solve_symmetric(&m, &[rat("-3/4")]).unwrap();
        assert_eq!(x, vec![rat("3/4")]);
    }

    #[test]
    fn solve_diagonal_at_sample_point() {
        // negative-part system of the secant flag at v = 7/4
        let m = mat(&[&["-1", "0"], &["0", "-1"]]);
        let b = vec![rat("-3/4"), rat("-3/4")];
        let x = rat_solve_symmetric(&m, &b).unwrap();
        assert_eq!(x, vec![rat("3/4"), rat("3/4")]);
    }

    #[test]
    fn solve_needs_pivoting() {
        let m = mat(&[&["0", "1"], &["1", "0"]]);
        let x = rat_solve_symmetric(&m, &[rat("1"), rat("2")]).unwrap();
        assert_eq!(x, vec![rat("2"), rat("1")]);
    }

    #[test]
    fn singular_matrix_is_an_error() {
        let m = mat(&[&["1", "2"], &["2", "4"]]);
        assert!(matches!(
            rat_solve_symmetric(&m, &[rat("1"), rat("2")]),
            Err(NumError::SingularMatrix)
        ));
    }

    #[test]
    fn solve_reproduces_rhs() {
        let m = mat(&[&["-3", "1"], &["1", "-2"]]);
        let b = vec![rat("5/7"), rat("-1/3")];
        let x = rat_solve_symmetric(&m, &b).unwrap();
        for i in 0..2 {
            let mut acc = Rat::zero();
            for j in 0..2 {
                acc += &(&m[i][j] * &x[j]);
            }
            assert_eq!(acc, b[i]);
        }
    }

    #[test]
    fn negative_definite_cases() {
        assert!(is_negative_definite(&mat(&[&["-1"]])));
        // Gram of the two curves meeting the exceptional curve: determinant 0
        assert!(!is_negative_definite(&mat(&[
            &["-3", "1"],
            &["1", "-1/3"]
        ])));
        assert!(is_negative_definite(&mat(&[
            &["-3", "0"],
            &["0", "-1/3"]
        ])));
        assert!(!is_negative_definite(&mat(&[&["1"]])));
    }

    #[test]
    fn rational_roots_examples() {
        // 5 - 2u (the wall 5 - 2u - 2v at v = 0)
        assert_eq!(rational_roots(&[rat("5"), rat("-2")]), vec![rat("5/2")]);
        // u^2 - 2 has no rational roots
        assert!(rational_roots(&[rat("-2"), rat("0"), rat("1")]).is_empty());
        // (u-1)(3u-1) = 3u^2 - 4u + 1
        assert_eq!(
            rational_roots(&[rat("1"), rat("-4"), rat("3")]),
            vec![rat("1/3"), rat("1")]
        );
        // double root: (v-2)^2
        assert_eq!(
            rational_roots(&[rat("4"), rat("-4"), rat("1")]),
            vec![rat("2"), rat("2")]
        );
    }
}
