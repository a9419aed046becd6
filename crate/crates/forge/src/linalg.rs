//! Exact linear algebra over the rationals (and small generic pieces over
//! any coefficient ring): Gaussian elimination, canonical minimal-support
//! solves, and the skew-symmetric congruence normal form used to put a
//! Poisson matrix at the origin into standard Darboux blocks.

use crate::error::{Error, Result};
use crate::jetcore::scalar::{Rat, Scalar};

pub type RatMat = Vec<Vec<Rat>>;

fn q0() -> Rat {
    Rat::from_integer(0.into())
}

fn q1() -> Rat {
    Rat::from_integer(1.into())
}

pub fn mat_identity(n: usize) -> RatMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { q1() } else { q0() })
                .collect()
        })
        .collect()
}

pub fn mat_mul(a: &RatMat, b: &RatMat) -> RatMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![q0(); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] = &out[i][j] + &a[i][l] * &b[l][j];
            }
        }
    }
    out
}

pub fn mat_transpose(a: &RatMat) -> RatMat {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j].clone()).collect()).collect()
}

pub fn mat_eq(a: &RatMat, b: &RatMat) -> bool {
    a == b
}

pub fn mat_is_identity(a: &RatMat) -> bool {
    a.len() == a[0].len() && *a == mat_identity(a.len())
}

/// Congruence C P C^T for row-vector coordinate changes.
pub fn congruence(c: &RatMat, p: &RatMat) -> RatMat {
    mat_mul(&mat_mul(c, p), &mat_transpose(c))
}

/// Rank of a rational matrix by fraction-exact elimination.
pub fn mat_rank(a: &RatMat) -> usize {
    if a.is_empty() {
        return 0;
    }
    let mut m = a.to_vec();
    let rows = m.len();
    let cols = m[0].len();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pr) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pr);
        let pivot = m[rank][col].clone();
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let f = &m[r][col] / &pivot;
                for c in col..cols {
                    m[r][c] = &m[r][c] - &f * &m[rank][c];
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

pub fn mat_det(a: &RatMat) -> Rat {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = q1();
    for col in 0..n {
        let Some(pr) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return q0();
        };
        if pr != col {
            m.swap(col, pr);
            det = -det;
        }
        let pivot = m[col][col].clone();
        det = det * &pivot;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &pivot;
            for c in col..n {
                m[r][c] = &m[r][c] - &f * &m[col][c];
            }
        }
    }
    det
}

/// Invert a square matrix over any scalar ring by unit-pivot Gauss-Jordan.
/// Returns `None` when no unit pivot can be found for some column, which
/// over the rationals means the matrix is singular.
pub fn invert_scalar_matrix<R: Scalar>(a: &[Vec<R>]) -> Option<Vec<Vec<R>>> {
    let n = a.len();
    let mut m: Vec<Vec<R>> = a.to_vec();
    let mut inv: Vec<Vec<R>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { R::one() } else { R::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pr = (col..n).find(|&r| m[r][col].inv().is_some())?;
        m.swap(col, pr);
        inv.swap(col, pr);
        let pinv = m[col][col].inv()?;
        for j in 0..n {
            m[col][j] = m[col][j].mul(&pinv);
            inv[col][j] = inv[col][j].mul(&pinv);
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                m[r][j] = m[r][j].sub(&f.mul(&m[col][j]));
                inv[r][j] = inv[r][j].sub(&f.mul(&inv[col][j]));
            }
        }
    }
    Some(inv)
}

/// Solve `A x = b` where `A` is rational and `b` takes values in a module
/// over the rationals. Unknowns are eliminated in column order and free
/// unknowns are set to zero, so the solution is the canonical
/// minimal-support one for the caller's (graded-lex) column ordering.
/// Returns `Ok(None)` when the system is inconsistent.
pub fn solve_rational_system<M>(
    a: &[Vec<Rat>],
    b: &[M],
    mul_rat: impl Fn(&M, &Rat) -> M,
    sub: impl Fn(&M, &M) -> M,
    is_zero: impl Fn(&M) -> bool,
) -> Option<Vec<Option<M>>>
where
    M: Clone,
{
    let rows = a.len();
    if rows == 0 {
        return Some(vec![]);
    }
    let cols = a[0].len();
    let mut m = a.to_vec();
    let mut rhs = b.to_vec();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; cols];
    let mut rank = 0;
    for col in 0..cols {
        let Some(pr) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pr);
        rhs.swap(rank, pr);
        let pivot = m[rank][col].clone();
        for c in col..cols {
            m[rank][c] = &m[rank][c] / &pivot;
        }
        rhs[rank] = mul_rat(&rhs[rank], &pivot.recip());
        for r in 0..rows {
            if r != rank && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in col..cols {
                    m[r][c] = &m[r][c] - &f * &m[rank][c];
                }
                rhs[r] = sub(&rhs[r], &mul_rat(&rhs[rank], &f));
            }
        }
        pivot_of_col[col] = Some(rank);
        rank += 1;
        if rank == rows {
            break;
        }
    }
    // consistency: zero rows must have zero rhs
    for r in rank..rows {
        if !is_zero(&rhs[r]) {
            return None;
        }
    }
    let mut x: Vec<Option<M>> = vec![None; cols];
    for col in 0..cols {
        if let Some(r) = pivot_of_col[col] {
            x[col] = Some(rhs[r].clone());
        }
    }
    Some(x)
}

/// Normal form of an antisymmetric rational matrix under congruence:
/// returns `(C, k)` with `C P C^T = J ⊕ 0`, where `J` consists of k
/// interleaved 2x2 blocks `[[0,1],[-1,0]]`. Pivot pairs are chosen as the
/// lexicographically smallest `(i, j)` with a nonzero pairing, which makes
/// the reduction the identity on matrices already in normal form.
pub fn skew_normal_form(p: &RatMat) -> Result<(RatMat, usize)> {
    let n = p.len();
    for (i, row) in p.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Internal("skew normal form needs a square matrix".into()));
        }
        for (j, v) in row.iter().enumerate() {
            if *v != -p[j][i].clone() {
                return Err(Error::Internal(format!(
                    "matrix is not antisymmetric at ({i},{j})"
                )));
            }
        }
    }
    let pair = |u: &Vec<Rat>, v: &Vec<Rat>| -> Rat {
        let mut acc = q0();
        for i in 0..n {
            if u[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if !p[i][j].is_zero() && !v[j].is_zero() {
                    acc = acc + &u[i] * &p[i][j] * &v[j];
                }
            }
        }
        acc
    };
    let mut remaining: Vec<Vec<Rat>> = mat_identity(n);
    let mut pairs: Vec<(Vec<Rat>, Vec<Rat>)> = Vec::new();
    loop {
        let mut found: Option<(usize, usize)> = None;
        'outer: for a in 0..remaining.len() {
            for b in a + 1..remaining.len() {
                if !pair(&remaining[a], &remaining[b]).is_zero() {
                    found = Some((a, b));
                    break 'outer;
                }
            }
        }
        let Some((a, b)) = found else { break };
        let u = remaining[a].clone();
        let s = pair(&remaining[a], &remaining[b]);
        let v: Vec<Rat> = remaining[b].iter().map(|c| c / &s).collect();
        remaining.remove(b);
        remaining.remove(a);
        for w in remaining.iter_mut() {
            let fu = pair(&u, w); // u P w^T
            let fv = pair(&v, w); // v P w^T
            for i in 0..n {
                // w' = w + (v P w^T) u - (u P w^T) v
                w[i] = &w[i] + &fv * &u[i] - &fu * &v[i];
            }
        }
        pairs.push((u, v));
    }
    let k = pairs.len();
    let mut c = Vec::with_capacity(n);
    for (u, v) in pairs {
        c.push(u);
        c.push(v);
    }
    c.extend(remaining);
    Ok((c, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcore::scalar::{rat, rat_int};

    fn r(n: i64) -> Rat {
        rat_int(n)
    }

    #[test]
    fn rank_and_det() {
        let a = vec![vec![r(1), r(2)], vec![r(2), r(4)]];
        assert_eq!(mat_rank(&a), 1);
        assert_eq!(mat_det(&a), r(0));
        let b = vec![vec![r(0), r(1)], vec![r(-1), r(0)]];
        assert_eq!(mat_det(&b), r(1));
        assert_eq!(mat_rank(&b), 2);
    }

    #[test]
    fn inverse_round_trip() {
        let a = vec![
            vec![r(2), r(1), r(0)],
            vec![r(0), r(1), r(3)],
            vec![r(1), r(0), r(1)],
        ];
        let ai = invert_scalar_matrix(&a).unwrap();
        assert!(mat_is_identity(&mat_mul(&a, &ai)));
        let sing = vec![vec![r(1), r(2)], vec![r(2), r(4)]];
        assert!(invert_scalar_matrix(&sing).is_none());
    }

    #[test]
    fn canonical_solve() {
        // x + y = 3 with free y: canonical solution picks x = 3, y free -> None slot
        let a = vec![vec![r(1), r(1)]];
        let b = vec![r(3)];
        let x = solve_rational_system(&a, &b, |m, q| m * q, |m, n| m - n, |m| m.is_zero()).unwrap();
        assert_eq!(x[0], Some(r(3)));
        assert_eq!(x[1], None);
        // inconsistent system
        let a2 = vec![vec![r(1)], vec![r(1)]];
        let b2 = vec![r(1), r(2)];
        assert!(
            solve_rational_system(&a2, &b2, |m, q| m * q, |m, n| m - n, |m| m.is_zero()).is_none()
        );
    }

    #[test]
    fn skew_normalization() {
        // already standard: reduction is the identity
        let std4 = vec![
            vec![r(0), r(1), r(0), r(0)],
            vec![r(-1), r(0), r(0), r(0)],
            vec![r(0), r(0), r(0), r(0)],
            vec![r(0), r(0), r(0), r(0)],
        ];
        let (c, k) = skew_normal_form(&std4).unwrap();
        assert_eq!(k, 1);
        assert!(mat_is_identity(&c));

        // generic antisymmetric matrix normalizes by congruence
        let p = vec![
            vec![r(0), rat(3, 2), r(1), r(0)],
            vec![rat(-3, 2), r(0), r(2), r(1)],
            vec![r(-1), r(-2), r(0), r(5)],
            vec![r(0), r(-1), r(-5), r(0)],
        ];
        let (c, k) = skew_normal_form(&p).unwrap();
        assert_eq!(k, 2);
        let q = congruence(&c, &p);
        let expect = vec![
            vec![r(0), r(1), r(0), r(0)],
            vec![r(-1), r(0), r(0), r(0)],
            vec![r(0), r(0), r(0), r(1)],
            vec![r(0), r(0), r(-1), r(0)],
        ];
        assert_eq!(q, expect);
    }
}
