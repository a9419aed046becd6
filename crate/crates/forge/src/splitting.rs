//! Weinstein splitting at jet level: straighten one symplectic pair at a
//! time by a formal flow-box, peel it off, and recurse; plus the
//! verification of the split normal form and degree-by-degree formal
//! linearization for semisimple linear parts.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jetcore::jet::{Jet, Mono, OrderBound, Space};
use crate::jetcore::map::JetMap;
use crate::jetcore::scalar::{Rat, Scalar};
use crate::jetcore::tensor::{increasing_tuples, PolyVectorField, Skew};
use crate::liealg::LieAlgebraSC;
use crate::linalg::{self, RatMat};
use crate::poisson::{self, PoissonJet};

/// Canonical coordinate names for a split chart of rank 2k with m
/// transverse directions: x1, y1, ..., xk, yk, z1, ..., zm.
pub fn split_space(k: usize, m: usize) -> Arc<Space> {
    let mut vars = Vec::with_capacity(2 * k + m);
    for i in 1..=k {
        vars.push(format!("x{i}"));
        vars.push(format!("y{i}"));
    }
    for j in 1..=m {
        vars.push(format!("z{j}"));
    }
    Space::new(vars)
}

pub fn transverse_space(m: usize) -> Arc<Space> {
    Space::new((1..=m).map(|j| format!("z{j}")).collect::<Vec<_>>())
}

/// Result of the splitting algorithm.
#[derive(Clone, Debug)]
pub struct SplitResult<R: Scalar = Rat> {
    /// Chart from the input coordinates to the canonical split chart.
    pub chart: JetMap<R>,
    /// Rank 2k of the structure at the origin.
    pub symplectic_rank: usize,
    /// Transverse structure on the z-coordinates alone.
    pub transverse: PoissonJet<R>,
}

/// One offense against the split normal form.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitFormViolation {
    pub component: Vec<u8>,
    pub monomial: Vec<u16>,
    pub value: String,
    pub rule: &'static str,
}

#[derive(Clone, Debug)]
pub struct SplitFormReport {
    pub ok: bool,
    pub order: OrderBound,
    pub violations: Vec<SplitFormViolation>,
}

/// Check the three structural conditions of the split normal form
/// coefficient by coefficient: exact Darboux block on the first 2k
/// coordinates, vanishing mixed block, and transverse coefficients that
/// depend only on the z-variables and vanish at the origin.
pub fn verify_split_form<R: Scalar>(pi: &PolyVectorField<R>, k: usize) -> SplitFormReport {
    let mut violations = Vec::new();
    let n = pi.dim();
    let order = pi.order();
    let mut push = |idx: &[u8], m: &Mono, v: &R, rule: &'static str| {
        violations.push(SplitFormViolation {
            component: idx.to_vec(),
            monomial: m.0.clone(),
            value: v.render(),
            rule,
        });
    };
    for idx in increasing_tuples(n, 2) {
        let (i, j) = (idx[0] as usize, idx[1] as usize);
        let jet = pi.component(&idx);
        let is_pair = i < 2 * k && j == i + 1 && i % 2 == 0;
        if is_pair {
            // must be the constant 1
            let one = Jet::constant(pi.space(), R::one(), OrderBound::Exact);
            for (m, c) in jet.sub(&one).terms() {
                push(&idx, m, c, "darboux-block");
            }
        } else if i < 2 * k && j < 2 * k {
            for (m, c) in jet.terms() {
                push(&idx, m, c, "darboux-block");
            }
        } else if i < 2 * k {
            for (m, c) in jet.terms() {
                push(&idx, m, c, "mixed-block");
            }
        } else {
            for (m, c) in jet.terms() {
                let xy_degree: u32 = m.0[..2 * k].iter().map(|&e| e as u32).sum();
                if xy_degree > 0 {
                    push(&idx, m, c, "transverse-depends-only-on-z");
                } else if m.degree() == 0 {
                    push(&idx, m, c, "transverse-vanishes-at-origin");
                }
            }
        }
    }
    SplitFormReport {
        ok: violations.is_empty(),
        order,
        violations,
    }
}

/// Constant-term coefficient matrix over the rationals.
fn origin_matrix<R: Scalar>(pi: &PolyVectorField<R>) -> Result<RatMat> {
    let n = pi.dim();
    let mut m = vec![vec![Rat::from_integer(0.into()); n]; n];
    for (idx, jet) in pi.components() {
        let c = jet.constant_term().to_rat().ok_or_else(|| {
            Error::OneJetDrift("structure matrix at the origin is not constant in t".into())
        })?;
        m[idx[0] as usize][idx[1] as usize] = c.clone();
        m[idx[1] as usize][idx[0] as usize] = -c;
    }
    Ok(m)
}

/// Iterated Lie-series flow map `u -> exp(time(u) * field)(u)` for a time
/// function vanishing at the origin; exact on jets because every power of
/// the time function raises the degree.
fn flow_by_function<R: Scalar>(
    field: &PolyVectorField<R>,
    time: &Jet<R>,
    cap: u32,
) -> Result<JetMap<R>> {
    let space = field.space();
    let n = space.dim();
    let work = OrderBound::UpTo(cap);
    let mut comps: Vec<Jet<R>> = (0..n).map(|i| Jet::coordinate(space, i, work)).collect();
    // current = field^k(id) / k!, accumulated against time^k
    let mut current: Vec<Jet<R>> = comps.clone();
    let mut time_pow = Jet::constant(space, R::one(), work);
    for k in 1..=cap as usize {
        time_pow = time_pow.mul(time);
        if time_pow.is_zero() {
            break;
        }
        let factor = Rat::new(1.into(), (k as i64).into());
        current = current
            .iter()
            .map(|c| field.apply(c).mul_rat(&factor))
            .collect::<Vec<_>>();
        let mut done = true;
        for i in 0..n {
            let term = time_pow.mul(&current[i]).truncated(work);
            if !term.is_zero() {
                done = false;
                comps[i] = comps[i].add(&term);
            }
        }
        if done {
            break;
        }
    }
    JetMap::new(space.clone(), space.clone(), comps)
}

/// Solve the transport equation X(q) = 1 degree by degree, seeding with
/// the coordinate dual to X(0) and choosing at each degree the
/// antiderivative along that coordinate (all monomials of q contain it,
/// which keeps the zero fiber pointwise fixed).
fn transport_solve<R: Scalar>(x: &PolyVectorField<R>, dual: usize, cap: u32) -> Result<Jet<R>> {
    let space = x.space();
    let work = OrderBound::UpTo(cap);
    let one = Jet::constant(space, R::one(), work);
    let mut q = Jet::coordinate(space, dual, work);
    for d in 1..cap {
        let residual = one.sub(&x.apply(&q).truncated(work));
        let part = residual.homogeneous_part(d);
        if part.is_zero() {
            continue;
        }
        q = q.add(&part.antiderivative(dual).truncated(work));
    }
    Ok(q)
}

/// Straighten the symplectic pair at coordinates (a, a+1), assuming the
/// origin matrix is in standard form there. Returns the step chart.
fn pair_step<R: Scalar>(pi: &PolyVectorField<R>, a: usize, cap: u32) -> Result<JetMap<R>> {
    let space = pi.space();
    // one internal degree of headroom keeps the straightening identities
    // valid through the data order
    let icap = cap + 1;
    let work = OrderBound::UpTo(icap);
    let p = Jet::coordinate(space, a, work);
    let x_p = poisson::hamiltonian_of(pi, &p)?;
    let q = transport_solve(&x_p, a + 1, icap)?;
    let x_q = poisson::hamiltonian_of(pi, &q)?;
    // joint flow-box projection pi(u) = flow_A^{-q}(flow_B^{p}(u)) with
    // A = X_p, B = X_q; q is B-invariant so the time functions compose
    let theta = flow_by_function(&x_q, &p, icap)?;
    let xi = flow_by_function(&x_p, &q.neg(), icap)?;
    let proj = JetMap::compose(&xi, &theta)?;
    let mut comps: Vec<Jet<R>> = Vec::with_capacity(space.dim());
    for i in 0..space.dim() {
        if i == a {
            comps.push(p.clone());
        } else if i == a + 1 {
            comps.push(q.clone());
        } else if i < a {
            comps.push(Jet::coordinate(space, i, work));
        } else {
            comps.push(proj.component(i).clone());
        }
    }
    Ok(JetMap::new(space.clone(), space.clone(), comps)?.frozen_exact())
}

/// The Weinstein splitting algorithm: linear symplectic normalization of
/// the origin matrix, then one flow-box straightening per symplectic pair.
pub fn weinstein_split<R: Scalar>(pi: &PoissonJet<R>) -> Result<SplitResult<R>> {
    let field = pi.bivector();
    let jac = poisson::jacobiator(field)?;
    if !poisson::is_zero_upto(&jac) {
        return Err(Error::NotPoisson(
            "jacobiator does not vanish through the certified order".into(),
        ));
    }
    let n = field.dim();
    let p0 = origin_matrix(field)?;
    let (c, k) = linalg::skew_normal_form(&p0)?;
    if k == 0 {
        // rank zero: identity chart, the structure is its own transverse part
        let target = split_space(0, n);
        let chart = rename_target(&JetMap::identity(field.space(), OrderBound::Exact), &target);
        let trans = field.rename(&target).restrict(&target, &(0..n).collect::<Vec<_>>())?;
        return Ok(SplitResult {
            chart,
            symplectic_rank: 0,
            transverse: PoissonJet::new_deferred(trans)?,
        });
    }
    let cap = match field.order() {
        OrderBound::UpTo(c) => c,
        OrderBound::Exact => {
            return Err(Error::OrderMismatch(
                "truncate exact input to a session order before splitting".into(),
            ))
        }
    };
    let space = field.space();
    let lin: Vec<Vec<R>> = c
        .iter()
        .map(|row| row.iter().map(|v| R::from_rat(v.clone())).collect())
        .collect();
    let mut chart = JetMap::linear(space, space, &lin, OrderBound::Exact);
    let mut current = if linalg::mat_is_identity(&c) {
        field.clone()
    } else {
        field.pushforward(&chart)?
    };
    for pair in 0..k {
        let step = pair_step(&current, 2 * pair, cap)?;
        current = current.pushforward(&step)?;
        chart = JetMap::compose_truncated(&step, &chart, OrderBound::UpTo(cap + 1))?
            .frozen_exact();
        // structural sanity through the certified order
        let report = partial_split_check(&current, pair + 1);
        if let Some(v) = report {
            return Err(Error::Internal(format!(
                "splitting step {pair} left residue {v:?}"
            )));
        }
    }
    // move to canonical names and extract the transverse block
    let target = split_space(k, n - 2 * k);
    let chart = rename_target(&chart, &target);
    let current = current.rename(&target);
    let zspace = transverse_space(n - 2 * k);
    let keep: Vec<usize> = (2 * k..n).collect();
    let mut trans: PolyVectorField<R> = Skew::zero(&zspace, 2, current.order());
    for (idx, jet) in current.components() {
        if idx.iter().all(|&i| (i as usize) >= 2 * k) {
            let restricted = Skew::from_components(&target, 2, [(idx.clone(), jet.clone())])?
                .restrict(&zspace, &keep)?;
            trans = trans.add(&restricted);
        }
    }
    Ok(SplitResult {
        chart,
        symplectic_rank: 2 * k,
        transverse: PoissonJet::new_deferred(trans)?,
    })
}

fn rename_target<R: Scalar>(chart: &JetMap<R>, target: &Arc<Space>) -> JetMap<R> {
    JetMap::new(
        chart.source().clone(),
        target.clone(),
        chart.components().to_vec(),
    )
    .expect("rename preserves shape")
}

/// Check that the first `pairs` Darboux pairs are exactly split off the
/// rest through the certified order; `None` when clean.
fn partial_split_check<R: Scalar>(
    pi: &PolyVectorField<R>,
    pairs: usize,
) -> Option<SplitFormViolation> {
    let order = match pi.order() {
        OrderBound::Exact => u32::MAX,
        OrderBound::UpTo(c) => c,
    };
    for (idx, jet) in pi.components() {
        let (i, j) = (idx[0] as usize, idx[1] as usize);
        let inside = |v: usize| v < 2 * pairs;
        if inside(i) || inside(j) {
            let is_pair = inside(i) && j == i + 1 && i % 2 == 0;
            let target = if is_pair {
                jet.sub(&Jet::constant(pi.space(), R::one(), OrderBound::Exact))
            } else {
                jet.clone()
            };
            for (m, c) in target.terms() {
                if m.degree() <= order {
                    return Some(SplitFormViolation {
                        component: idx.clone(),
                        monomial: m.0.clone(),
                        value: c.render(),
                        rule: "pair-straightening",
                    });
                }
            }
        } else {
            // transverse coefficients must not involve the split pairs
            for (m, c) in jet.terms() {
                let deg_xy: u32 = m.0[..2 * pairs].iter().map(|&e| e as u32).sum();
                if deg_xy > 0 && m.degree() <= order {
                    return Some(SplitFormViolation {
                        component: idx.clone(),
                        monomial: m.0.clone(),
                        value: c.render(),
                        rule: "transverse-independence",
                    });
                }
            }
        }
    }
    None
}

/// Convenience projection: the transverse Poisson structure.
pub fn transverse_structure<R: Scalar>(pi: &PoissonJet<R>) -> Result<PoissonJet<R>> {
    Ok(weinstein_split(pi)?.transverse)
}

/// Solve `[V, pi_part] = rhs` for a homogeneous vector field V of
/// coefficient degree `v_degree`, where `pi_part` is a homogeneous
/// bivector with rational coefficients. The solution is the canonical
/// minimal-support one; when a finite group of linear symmetries is
/// supplied the solution is averaged over it (the equation is linear and
/// invariant, so the average still solves it).
pub(crate) fn solve_bracket_equation<R: Scalar>(
    pi_part: &PolyVectorField<Rat>,
    rhs: &PolyVectorField<R>,
    v_degree: u32,
    symmetrize: Option<&[RatMat]>,
) -> Result<PolyVectorField<R>> {
    let space = pi_part.space();
    let n = space.dim();
    // unknown basis: monomial (graded-lex ascending) x coordinate index
    let monos = all_monomials(n, v_degree);
    let mut columns: Vec<(Mono, usize)> = Vec::new();
    for m in &monos {
        for i in 0..n {
            columns.push((m.clone(), i));
        }
    }
    // image degree of [V, pi_part]
    let b_low = pi_part.low_degree().unwrap_or(0);
    let out_degree = v_degree + b_low - 1;
    let eq_monos = all_monomials(n, out_degree);
    let pairs = increasing_tuples(n, 2);
    let mut eq_index = std::collections::BTreeMap::new();
    for (pi_idx, pq) in pairs.iter().enumerate() {
        for (mi, m) in eq_monos.iter().enumerate() {
            eq_index.insert((pq.clone(), m.clone()), pi_idx * eq_monos.len() + mi);
        }
    }
    let nrows = pairs.len() * eq_monos.len();
    let mut rows = vec![vec![Rat::from_integer(0.into()); columns.len()]; nrows];
    let work = OrderBound::UpTo(out_degree + 1);
    for (cidx, (m, i)) in columns.iter().enumerate() {
        let basis_jet = Jet::from_terms(space, OrderBound::Exact, [(m.clone(), Rat::from_integer(1.into()))]);
        let basis: PolyVectorField<Rat> =
            Skew::from_components(space, 1, [(vec![*i as u8], basis_jet)])?;
        let bracket = basis.schouten(pi_part)?.truncated(work);
        for (idx, jet) in bracket.components() {
            for (mono, coeff) in jet.terms() {
                if let Some(&r) = eq_index.get(&(idx.clone(), mono.clone())) {
                    rows[r][cidx] = coeff.clone();
                }
            }
        }
    }
    let mut b: Vec<R> = vec![R::zero(); nrows];
    for (idx, jet) in rhs.components() {
        for (mono, coeff) in jet.terms() {
            match eq_index.get(&(idx.clone(), mono.clone())) {
                Some(&r) => b[r] = coeff.clone(),
                None => {
                    return Err(Error::HomologicalObstruction {
                        degree: v_degree,
                        detail: "right-hand side has terms outside the image grading".into(),
                    })
                }
            }
        }
    }
    let sol = linalg::solve_rational_system(
        &rows,
        &b,
        |m, q| m.mul_rat(q),
        |m, n| m.sub(n),
        |m| m.is_zero(),
    )
    .ok_or(Error::HomologicalObstruction {
        degree: v_degree,
        detail: "graded linear system is inconsistent".into(),
    })?;
    let mut v: PolyVectorField<R> = Skew::zero(space, 1, rhs.order().plus(1));
    for (cidx, (m, i)) in columns.iter().enumerate() {
        if let Some(Some(c)) = sol.get(cidx).cloned() {
            if c.is_zero() {
                continue;
            }
            let jet = Jet::from_terms(space, rhs.order().plus(1), [(m.clone(), c)]);
            v = v.add(&Skew::from_components(space, 1, [(vec![*i as u8], jet)])?);
        }
    }
    if let Some(mats) = symmetrize {
        let order_g = Rat::new(1.into(), (mats.len() as i64).into());
        let mut acc: PolyVectorField<R> = Skew::zero(space, 1, v.order());
        for g in mats {
            let lin: Vec<Vec<R>> = g
                .iter()
                .map(|row| row.iter().map(|x| R::from_rat(x.clone())).collect())
                .collect();
            let gmap = JetMap::linear(space, space, &lin, OrderBound::Exact);
            acc = acc.add(&v.pushforward(&gmap)?);
        }
        v = acc.map_jets(|j| j.mul_rat(&order_g));
    }
    Ok(v)
}

fn all_monomials(n: usize, d: u32) -> Vec<Mono> {
    fn rec(n: usize, d: u32, pos: usize, cur: &mut Vec<u16>, out: &mut Vec<Mono>) {
        if pos == n {
            if d == 0 {
                out.push(Mono(cur.clone()));
            }
            return;
        }
        for take in 0..=d {
            cur.push(take as u16);
            rec(n, d - take, pos + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, d, 0, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Formal linearization of a Poisson jet vanishing at the origin whose
/// linear part is the linear structure of a semisimple algebra: kill the
/// nonlinear terms degree by degree through the homological equation.
/// Solvability at every degree is guaranteed by semisimplicity, so an
/// inconsistent system reports a violated precondition.
pub fn formal_linearize(pi: &PoissonJet<Rat>, g: &LieAlgebraSC) -> Result<JetMap<Rat>> {
    linearize_with_symmetry(pi, g, None)
}

/// Linearization with per-degree averaging of the homological solutions
/// over a finite linear symmetry group, making the chart equivariant.
pub fn linearize_with_symmetry(
    pi: &PoissonJet<Rat>,
    g: &LieAlgebraSC,
    symmetrize: Option<&[RatMat]>,
) -> Result<JetMap<Rat>> {
    let field = pi.bivector();
    let jac = poisson::jacobiator(field)?;
    if !poisson::is_zero_upto(&jac) {
        return Err(Error::NotPoisson(
            "jacobiator does not vanish through the certified order".into(),
        ));
    }
    let space = field.space();
    if !g.is_semisimple() {
        return Err(Error::DegenerateKillingForm(
            "Killing form determinant vanishes".into(),
        ));
    }
    let cap = match field.order() {
        OrderBound::UpTo(c) => c,
        OrderBound::Exact => {
            return Err(Error::OrderMismatch(
                "truncate exact input to a session order before linearizing".into(),
            ))
        }
    };
    let model = g.linear_poisson(space, OrderBound::Exact)?;
    // linear part must match the model structure
    let lin_diff = field.homogeneous_part(0).add(&field.homogeneous_part(1).sub(&model));
    if !poisson::is_zero_upto(&lin_diff) {
        return Err(Error::LinearPartMismatch(
            "structure constants do not match the 1-jet of the input".into(),
        ));
    }
    let mut chart = JetMap::identity(space, OrderBound::Exact);
    let mut current = field.clone();
    for d in 2..=cap {
        let discrepancy = current.homogeneous_part(d);
        if discrepancy.is_zero() {
            continue;
        }
        let v = solve_bracket_equation(&model, &discrepancy, d, symmetrize)?;
        let step = JetMap::new(
            space.clone(),
            space.clone(),
            (0..space.dim())
                .map(|i| {
                    let mut c = Jet::coordinate(space, i, OrderBound::UpTo(cap));
                    let vi = v.component(&[i as u8]);
                    if !vi.is_zero() {
                        c = c.add(&vi);
                    }
                    c.frozen_exact()
                })
                .collect(),
        )?;
        current = current.pushforward(&step)?;
        let leftover = current.homogeneous_part(d);
        if !poisson::is_zero_upto(&leftover) && !leftover.is_zero() {
            return Err(Error::HomologicalObstruction {
                degree: d,
                detail: "degree was not removed by the homological step".into(),
            });
        }
        chart = JetMap::compose_truncated(&step, &chart, OrderBound::UpTo(cap + 1))?
            .frozen_exact();
    }
    Ok(chart)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcore::jet::space;
    use crate::jetcore::scalar::{rat, rat_int};
    use crate::liealg::Dim3Model;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn nb(c: u32) -> OrderBound {
        OrderBound::UpTo(c)
    }

    fn split_model_5d(order: OrderBound) -> PoissonJet<Rat> {
        // d/dx1 ^ d/dy1 + so3(z)
        let sp = split_space(1, 3);
        let one = Jet::constant(&sp, rat_int(1), order);
        let z1 = Jet::coordinate(&sp, 2, order);
        let z2 = Jet::coordinate(&sp, 3, order);
        let z3 = Jet::coordinate(&sp, 4, order);
        let field = Skew::from_components(
            &sp,
            2,
            [
                (vec![0, 1], one),
                (vec![3, 4], z1),
                (vec![2, 4], z2.neg()),
                (vec![2, 3], z3),
            ],
        )
        .unwrap();
        PoissonJet::new(field).unwrap()
    }

    #[test]
    fn verify_split_form_detects_planted_violations() {
        let pi = split_model_5d(nb(8));
        let ok = verify_split_form(pi.bivector(), 1);
        assert!(ok.ok);
        // x-dependent transverse coefficient
        let sp = pi.bivector().space().clone();
        let bad = pi.bivector().add(
            &Skew::from_components(&sp, 2, [(vec![2u8, 3], Jet::coordinate(&sp, 0, nb(8)))])
                .unwrap(),
        );
        let rep = verify_split_form(&bad, 1);
        assert!(!rep.ok);
        assert!(rep
            .violations
            .iter()
            .any(|v| v.rule == "transverse-depends-only-on-z"));
        // mixed-block violation
        let bad2 = pi.bivector().add(
            &Skew::from_components(
                &sp,
                2,
                [(vec![0u8, 2], Jet::constant(&sp, rat_int(1), nb(8)))],
            )
            .unwrap(),
        );
        let rep2 = verify_split_form(&bad2, 1);
        assert!(!rep2.ok);
        assert!(rep2.violations.iter().any(|v| v.rule == "mixed-block"));
    }

    #[test]
    fn split_fixed_points() {
        // an already-split structure splits with the identity chart
        let pi = split_model_5d(nb(8));
        let res = weinstein_split(&pi).unwrap();
        assert_eq!(res.symplectic_rank, 2);
        assert!(res.chart.is_identity_through(8));
        let so3 = Dim3Model::So3.linear_poisson(&transverse_space(3), nb(8));
        assert!(res.transverse.bivector().eq_through(&so3, 8));

        // the zero structure: rank 0, identity chart
        let sp = split_space(0, 3);
        let zero = PoissonJet::new(Skew::<Rat, _>::zero(&sp, 2, nb(8))).unwrap();
        let res0 = weinstein_split(&zero).unwrap();
        assert_eq!(res0.symplectic_rank, 0);
        assert!(res0.chart.is_identity_through(8));
        assert!(res0.transverse.bivector().is_zero());
    }

    #[test]
    fn split_recovers_pushforward_model() {
        // push the split model through y1 -> y1 + z1^2 and recover
        let pi = split_model_5d(nb(9));
        let sp = pi.bivector().space().clone();
        let y = Jet::coordinate(&sp, 1, nb(9));
        let z1 = Jet::coordinate(&sp, 2, nb(9));
        let psi = JetMap::new(
            sp.clone(),
            sp.clone(),
            (0..5)
                .map(|i| {
                    if i == 1 {
                        y.add(&z1.mul(&z1))
                    } else {
                        Jet::coordinate(&sp, i, nb(9))
                    }
                })
                .collect(),
        )
        .unwrap()
        .frozen_exact();
        let pushed = PoissonJet::new(pi.bivector().pushforward(&psi).unwrap()).unwrap();
        let res = weinstein_split(&pushed).unwrap();
        assert_eq!(res.symplectic_rank, 2);
        let recovered = pushed.bivector().pushforward(&res.chart).unwrap();
        let rep = verify_split_form(&recovered, 1);
        assert!(rep.ok, "violations: {:?}", rep.violations);
        // transverse is so(3) again (the pushforward fixed the fiber)
        let so3 = Dim3Model::So3.linear_poisson(res.transverse.bivector().space(), nb(8));
        assert!(res
            .transverse
            .bivector()
            .eq_through(&so3, rep.order.as_u32().unwrap_or(8).min(8)));
    }

    #[test]
    fn split_nondegenerate_4d() {
        // a fully symplectic structure has a dim-0 transverse part
        let sp = space(&["a", "b", "c", "d"]);
        let one = Jet::constant(&sp, rat_int(1), nb(8));
        let field = Skew::from_components(
            &sp,
            2,
            [(vec![0u8, 1], one.clone()), (vec![2u8, 3], one.clone())],
        )
        .unwrap();
        let pi = PoissonJet::new(field).unwrap();
        let res = weinstein_split(&pi).unwrap();
        assert_eq!(res.symplectic_rank, 4);
        assert_eq!(res.transverse.dim(), 0);

        // perturb with a nonlinear symplectic twist and re-split
        let a = Jet::coordinate(&sp, 0, nb(8));
        let c = Jet::coordinate(&sp, 2, nb(8));
        let psi = JetMap::new(
            sp.clone(),
            sp.clone(),
            vec![
                a.clone(),
                Jet::coordinate(&sp, 1, nb(8)).add(&c.mul(&c).mul(&a)),
                c.clone(),
                Jet::coordinate(&sp, 3, nb(8)).add(&a.mul(&a)),
            ],
        )
        .unwrap()
        .frozen_exact();
        let pushed = PoissonJet::new(pi.bivector().pushforward(&psi).unwrap()).unwrap();
        let res2 = weinstein_split(&pushed).unwrap();
        assert_eq!(res2.symplectic_rank, 4);
        let recovered = pushed.bivector().pushforward(&res2.chart).unwrap();
        let rep = verify_split_form(&recovered, 2);
        assert!(rep.ok, "violations: {:?}", rep.violations);
    }

    #[test]
    fn random_split_models_small() {
        let mut rng = StdRng::seed_from_u64(7);
        for round in 0..5 {
            let order = nb(7);
            let sp = split_space(1, 2);
            let one = Jet::constant(&sp, rat_int(1), order);
            // transverse: random 2D structure u(z) dz1^dz2 vanishing at 0
            let z1 = Jet::coordinate(&sp, 2, order);
            let z2 = Jet::coordinate(&sp, 3, order);
            let u = z1
                .mul_rat(&rat_int(rng.random_range(-2..=2)))
                .add(&z2.mul_rat(&rat_int(rng.random_range(-2..=2))))
                .add(&z1.mul(&z2).mul_rat(&rat_int(rng.random_range(-1..=1))));
            let field = Skew::from_components(
                &sp,
                2,
                [(vec![0u8, 1], one), (vec![2u8, 3], u)],
            )
            .unwrap();
            let pi = PoissonJet::new(field).unwrap();
            // random jet map: shear y1 by a polynomial in z, twist z
            let y = Jet::coordinate(&sp, 1, order);
            let shear = z1.mul(&z1).mul_rat(&rat_int(rng.random_range(-2..=2))).add(
                &z2.mul(&z1).mul_rat(&rat_int(rng.random_range(-2..=2))),
            );
            let psi = JetMap::new(
                sp.clone(),
                sp.clone(),
                vec![
                    Jet::coordinate(&sp, 0, order),
                    y.add(&shear),
                    z1.add(&z2.mul(&z2).mul_rat(&rat_int(rng.random_range(0..=2)))),
                    z2.clone(),
                ],
            )
            .unwrap()
            .frozen_exact();
            let pushed = PoissonJet::new(pi.bivector().pushforward(&psi).unwrap()).unwrap();
            let res = weinstein_split(&pushed).unwrap();
            assert_eq!(res.symplectic_rank, 2, "round {round}");
            let recovered = pushed.bivector().pushforward(&res.chart).unwrap();
            let rep = verify_split_form(&recovered, 1);
            assert!(rep.ok, "round {round}: {:?}", rep.violations);
        }
    }

    #[test]
    fn linearize_so3_perturbation() {
        // push so(3) through (x,y,z) -> (x + y^2, y, z) and linearize back
        let sp = space(&["x", "y", "z"]);
        let so3 = Dim3Model::So3.linear_poisson(&sp, nb(8));
        let x = Jet::coordinate(&sp, 0, nb(8));
        let y = Jet::coordinate(&sp, 1, nb(8));
        let z = Jet::coordinate(&sp, 2, nb(8));
        let m = JetMap::new(
            sp.clone(),
            sp.clone(),
            vec![x.add(&y.mul(&y)), y.clone(), z.clone()],
        )
        .unwrap()
        .frozen_exact();
        let pushed = PoissonJet::new(so3.pushforward(&m).unwrap()).unwrap();
        let chart = formal_linearize(&pushed, &Dim3Model::So3.structure_constants()).unwrap();
        let back = pushed.bivector().pushforward(&chart).unwrap();
        let order = back.order().as_u32().unwrap_or(8);
        assert!(order >= 6, "linearization lost too much order: {order}");
        assert!(back.eq_through(&so3, order));
        // chart agrees with the inverse of m at linear order up to a
        // linear Poisson automorphism: check the composite is linear
        let composite = JetMap::compose(&chart, &m).unwrap();
        let lp = composite.linear_part();
        let lin = JetMap::linear(&sp, &sp, &lp, nb(8));
        assert!(composite.eq_through(&lin, order));

        // already-linear input gives the identity
        let linear = PoissonJet::new(Dim3Model::So3.linear_poisson(&sp, nb(8))).unwrap();
        let id = formal_linearize(&linear, &Dim3Model::So3.structure_constants()).unwrap();
        assert!(id.is_identity_through(8));
    }

    #[test]
    fn linearize_rejects_non_semisimple() {
        let sp = space(&["x", "y"]);
        let ab = LieAlgebraSC::abelian(2);
        let zero = PoissonJet::new(Skew::<Rat, _>::zero(&sp, 2, nb(6))).unwrap();
        assert!(matches!(
            formal_linearize(&zero, &ab),
            Err(Error::DegenerateKillingForm(_))
        ));
    }

    #[test]
    fn linearize_rejects_wrong_linear_part() {
        let sp = space(&["x", "y", "z"]);
        let sl2 = PoissonJet::new(Dim3Model::Sl2.linear_poisson(&sp, nb(6))).unwrap();
        assert!(matches!(
            formal_linearize(&sl2, &Dim3Model::So3.structure_constants()),
            Err(Error::LinearPartMismatch(_))
        ));
    }

    #[test]
    fn splitting_is_deterministic() {
        let pi = split_model_5d(nb(7));
        let sp = pi.bivector().space().clone();
        let y = Jet::coordinate(&sp, 1, nb(7));
        let z1 = Jet::coordinate(&sp, 2, nb(7));
        let psi = JetMap::new(
            sp.clone(),
            sp.clone(),
            (0..5)
                .map(|i| {
                    if i == 1 {
                        y.add(&z1.mul(&z1).mul_rat(&rat(1, 2)))
                    } else {
                        Jet::coordinate(&sp, i, nb(7))
                    }
                })
                .collect(),
        )
        .unwrap()
        .frozen_exact();
        let pushed = PoissonJet::new(pi.bivector().pushforward(&psi).unwrap()).unwrap();
        let a = weinstein_split(&pushed).unwrap();
        let b = weinstein_split(&pushed).unwrap();
        assert!(a.chart.eq_through(&b.chart, 7));
        assert!(a.transverse.bivector().eq_through(b.transverse.bivector(), 7));
    }
}
