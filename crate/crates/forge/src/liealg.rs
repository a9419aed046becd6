//! Lie-algebra structure constants, linear Poisson structures, the
//! three-dimensional model algebras, and the division algorithm writing a
//! foliation-tangent field as a finite combination of Hamiltonian fields.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jetcore::jet::{Jet, Mono, OrderBound, Space};
use crate::jetcore::scalar::{rat_int, Rat, Scalar};
use crate::jetcore::tensor::{increasing_tuples, DifferentialFormField, PolyVectorField, Skew};
use crate::linalg::{self, RatMat};
use crate::poisson::{self, SplitPairingReport};

/// Structure constants of a finite-dimensional Lie algebra, stored on
/// ordered pairs i < j.
#[derive(Clone, Debug, PartialEq)]
pub struct LieAlgebraSC {
    dim: usize,
    c: BTreeMap<(usize, usize), Vec<Rat>>,
}

/// One violated identity: the triple and output component where the Jacobi
/// sum fails, with the offending value.
#[derive(Clone, Debug, PartialEq)]
pub struct JacobiViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub value: Rat,
}

impl LieAlgebraSC {
    /// Build from bracket rows `[e_i, e_j] = sum_k coeffs[k] e_k`, i < j.
    /// Entries with i > j are folded in with the sign flipped; conflicting
    /// duplicate entries are rejected.
    pub fn new(dim: usize, entries: Vec<(usize, usize, Vec<Rat>)>) -> Result<Self> {
        let mut c: BTreeMap<(usize, usize), Vec<Rat>> = BTreeMap::new();
        for (i, j, coeffs) in entries {
            if i >= dim || j >= dim || coeffs.len() != dim {
                return Err(Error::InvalidConstants(format!(
                    "bracket entry ({i},{j}) out of range for dimension {dim}"
                )));
            }
            if i == j {
                if coeffs.iter().any(|v| !v.is_zero()) {
                    return Err(Error::InvalidConstants(format!(
                        "[e_{i}, e_{i}] must vanish"
                    )));
                }
                continue;
            }
            let (key, row) = if i < j {
                ((i, j), coeffs)
            } else {
                ((j, i), coeffs.into_iter().map(|v| -v).collect())
            };
            if let Some(prev) = c.get(&key) {
                if *prev != row {
                    return Err(Error::InvalidConstants(format!(
                        "conflicting entries for bracket ({},{})",
                        key.0, key.1
                    )));
                }
            } else if row.iter().any(|v| !v.is_zero()) {
                c.insert(key, row);
            }
        }
        Ok(LieAlgebraSC { dim, c })
    }

    pub fn abelian(dim: usize) -> Self {
        LieAlgebraSC {
            dim,
            c: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Signed structure constants `c^._{ij}` for any index order.
    pub fn bracket(&self, i: usize, j: usize) -> Vec<Rat> {
        if i == j {
            return vec![Rat::from_integer(0.into()); self.dim];
        }
        let (key, flip) = if i < j { ((i, j), false) } else { ((j, i), true) };
        match self.c.get(&key) {
            None => vec![Rat::from_integer(0.into()); self.dim],
            Some(row) => {
                if flip {
                    row.iter().map(|v| -v).collect()
                } else {
                    row.clone()
                }
            }
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<Rat>)> {
        self.c.iter()
    }

    /// Brute-force Jacobi check; the certificate lists every violated
    /// (i, j, k, l) with the failing cyclic sum.
    pub fn validate(&self) -> Vec<JacobiViolation> {
        let mut out = Vec::new();
        let n = self.dim;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let cij = self.bracket(i, j);
                    let cjk = self.bracket(j, k);
                    let cki = self.bracket(k, i);
                    for l in 0..n {
                        let mut v = Rat::from_integer(0.into());
                        for m in 0..n {
                            v = v + &cij[m] * &self.bracket(m, k)[l]
                                + &cjk[m] * &self.bracket(m, i)[l]
                                + &cki[m] * &self.bracket(m, j)[l];
                        }
                        if !v.is_zero() {
                            out.push(JacobiViolation { i, j, k, l, value: v });
                        }
                    }
                }
            }
        }
        out
    }

    /// Killing form K_ij = sum_{a,b} c^a_{ib} c^b_{ja}.
    pub fn killing_form(&self) -> RatMat {
        let n = self.dim;
        let mut k = vec![vec![Rat::from_integer(0.into()); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Rat::from_integer(0.into());
                for b in 0..n {
                    let cib = self.bracket(i, b);
                    for (a, ca) in cib.iter().enumerate() {
                        if ca.is_zero() {
                            continue;
                        }
                        acc = acc + ca * &self.bracket(j, a)[b];
                    }
                }
                k[i][j] = acc;
            }
        }
        k
    }

    pub fn is_semisimple(&self) -> bool {
        self.dim > 0 && !linalg::mat_det(&self.killing_form()).is_zero()
    }

    /// The linear Poisson structure on the dual: {z_i, z_j} = sum c^k_ij z_k.
    pub fn linear_poisson(&self, space: &Arc<Space>, order: OrderBound) -> Result<PolyVectorField<Rat>> {
        if space.dim() != self.dim {
            return Err(Error::VarMismatch(format!(
                "space has dimension {}, constants have {}",
                space.dim(),
                self.dim
            )));
        }
        let violations = self.validate();
        if !violations.is_empty() {
            let v = &violations[0];
            return Err(Error::InvalidConstants(format!(
                "Jacobi fails at ({},{},{}) component {}: {}",
                v.i,
                v.j,
                v.k,
                v.l,
                crate::jetcore::scalar::render_rat(&v.value)
            )));
        }
        let mut comps = Vec::new();
        for ((i, j), row) in &self.c {
            let mut jet = Jet::zero(space, order);
            for (k, ck) in row.iter().enumerate() {
                if !ck.is_zero() {
                    jet = jet.add(&Jet::coordinate(space, k, order).mul_rat(ck));
                }
            }
            comps.push((vec![*i as u8, *j as u8], jet));
        }
        Skew::from_components(space, 2, comps)
    }
}

/// The three-dimensional model presentations from the classification of
/// real Lie algebras: the solvable family R x_A R^2 and the two simple
/// algebras in their standard bases.
#[derive(Clone, Debug, PartialEq)]
pub enum Dim3Model {
    /// Brackets [x,y] = a y + b z, [x,z] = c y + d z, [y,z] = 0 with
    /// A = [[a, b], [c, d]].
    SolvableA(RatMat),
    So3,
    Sl2,
}

impl Dim3Model {
    pub fn structure_constants(&self) -> LieAlgebraSC {
        match self {
            Dim3Model::SolvableA(a) => LieAlgebraSC::new(
                3,
                vec![
                    (0, 1, vec![rat_int(0), a[0][0].clone(), a[0][1].clone()]),
                    (0, 2, vec![rat_int(0), a[1][0].clone(), a[1][1].clone()]),
                ],
            )
            .expect("solvable table"),
            Dim3Model::So3 => LieAlgebraSC::new(
                3,
                vec![
                    (0, 1, vec![rat_int(0), rat_int(0), rat_int(1)]),
                    (1, 2, vec![rat_int(1), rat_int(0), rat_int(0)]),
                    (2, 0, vec![rat_int(0), rat_int(1), rat_int(0)]),
                ],
            )
            .expect("so3 table"),
            Dim3Model::Sl2 => LieAlgebraSC::new(
                3,
                vec![
                    (0, 1, vec![rat_int(0), rat_int(0), rat_int(1)]),
                    (2, 0, vec![rat_int(1), rat_int(0), rat_int(0)]),
                    (1, 2, vec![rat_int(0), rat_int(1), rat_int(0)]),
                ],
            )
            .expect("sl2 table"),
        }
    }

    pub fn linear_poisson(&self, space: &Arc<Space>, order: OrderBound) -> PolyVectorField<Rat> {
        self.structure_constants()
            .linear_poisson(space, order)
            .expect("model structures are Poisson")
    }

    pub fn name(&self) -> &'static str {
        match self {
            Dim3Model::SolvableA(_) => "solvableA",
            Dim3Model::So3 => "so3",
            Dim3Model::Sl2 => "sl2",
        }
    }
}

/// Match a bracket table against the model presentations. Inputs must
/// already be written in a model basis; two-dimensional algebras embed as
/// SolvableA tables with the third variable inert.
pub fn classify_dim3_model(g: &LieAlgebraSC) -> Result<Dim3Model> {
    let g = match g.dim() {
        3 => g.clone(),
        2 => {
            // zero-extend: [x,y] = a y (+ 0 z)
            let row = g.bracket(0, 1);
            if !row[0].is_zero() {
                return Err(Error::NotInModelBasis(
                    "2D bracket [x,y] must lie in span(y)".into(),
                ));
            }
            LieAlgebraSC::new(
                3,
                vec![(0, 1, vec![rat_int(0), row[1].clone(), rat_int(0)])],
            )?
        }
        d => {
            return Err(Error::NotInModelBasis(format!(
                "model classification needs dimension 2 or 3, got {d}"
            )))
        }
    };
    if !g.validate().is_empty() {
        return Err(Error::InvalidConstants(
            "bracket table violates the Jacobi identity".into(),
        ));
    }
    // solvable shape: [y,z] = 0 and [x,.] lands in span(y,z)
    let c01 = g.bracket(0, 1);
    let c02 = g.bracket(0, 2);
    let c12 = g.bracket(1, 2);
    if c12.iter().all(|v| v.is_zero()) && c01[0].is_zero() && c02[0].is_zero() {
        let a = vec![
            vec![c01[1].clone(), c01[2].clone()],
            vec![c02[1].clone(), c02[2].clone()],
        ];
        return Ok(Dim3Model::SolvableA(a));
    }
    for model in [Dim3Model::So3, Dim3Model::Sl2] {
        if model.structure_constants() == g {
            // cross-check the Killing sign pattern: negative definite for
            // so(3), indefinite for sl(2)
            let k = g.killing_form();
            let neg_def = negative_definite(&k);
            match model {
                Dim3Model::So3 if neg_def => return Ok(model),
                Dim3Model::Sl2 if !neg_def => return Ok(model),
                _ => {
                    return Err(Error::Internal(
                        "model table and Killing signature disagree".into(),
                    ))
                }
            }
        }
    }
    Err(Error::NotInModelBasis(
        "bracket table matches no model presentation".into(),
    ))
}

fn negative_definite(k: &RatMat) -> bool {
    let n = k.len();
    for size in 1..=n {
        let minor: RatMat = (0..size)
            .map(|i| (0..size).map(|j| k[i][j].clone()).collect())
            .collect();
        let d = linalg::mat_det(&minor);
        let expect_pos = size % 2 == 0;
        if d.is_zero() || (d > Rat::from_integer(0.into())) != expect_pos {
            return false;
        }
    }
    true
}

/// One summand of a division result: `coefficient * X_{generator}` where
/// the generator is a coordinate function.
pub type DivisionPair<R> = (Jet<R>, usize);

/// Write a foliation-tangent polynomial field on a model algebra as a
/// finite combination of Hamiltonian fields of coordinate functions.
/// Returns pairs (f_i, g_i) with the generator as a coordinate jet.
pub fn divide_tangent_field(
    model: &Dim3Model,
    z: &PolyVectorField<Rat>,
) -> Result<Vec<(Jet<Rat>, Jet<Rat>)>> {
    if z.dim() != 3 {
        return Err(Error::VarMismatch(
            "public division expects a field on three coordinates".into(),
        ));
    }
    if z.degree() != 1 {
        return Err(Error::DegreeMismatch("division expects a vector field".into()));
    }
    let pairs = divide_on_fiber(model, z, &[0, 1, 2])?;
    let order = z.order();
    Ok(pairs
        .into_iter()
        .map(|(f, g)| (f, Jet::coordinate(z.space(), g, order.plus(1))))
        .collect())
}

/// Division on a fiber inside a larger space; remaining variables ride
/// along as parameters. Generators are returned as fiber coordinate
/// indices (absolute indices into the ambient space).
pub(crate) fn divide_on_fiber<R: Scalar>(
    model: &Dim3Model,
    z: &PolyVectorField<R>,
    fiber: &[usize],
) -> Result<Vec<DivisionPair<R>>> {
    let space = z.space();
    let order = z.order();
    let pi = model
        .linear_poisson(&fiber_space_3(), OrderBound::Exact)
        .embed(space, fiber)
        .map_scalars(|c| R::from_rat(c.clone()));
    // tangency gate: Z ^ Pi = 0 through the certified order
    let w = z.wedge(&pi)?;
    if !poisson::is_zero_upto(&w) {
        return Err(Error::NotTangent(format!(
            "field wedge structure is nonzero: {:?}",
            w
        )));
    }
    let comp = |i: usize| -> Jet<R> {
        let c = z.component(&[i as u8]);
        if c.is_zero() {
            Jet::zero(space, order)
        } else {
            c
        }
    };
    match model {
        Dim3Model::SolvableA(a) => {
            let lin = |row: &[Rat]| -> Jet<R> {
                Jet::coordinate(space, fiber[1], order.plus(2))
                    .mul_rat(&row[0])
                    .add(&Jet::coordinate(space, fiber[2], order.plus(2)).mul_rat(&row[1]))
            };
            let yp = lin(&a[0]); // a y + b z
            let zp = lin(&a[1]); // c y + d z
            let det = &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0];
            let f = comp(fiber[0]);
            let u = comp(fiber[1]);
            let v = comp(fiber[2]);
            if !det.is_zero() {
                // Z = f dx + g (y' dy + z' dz); g from either division
                let g = match (u.is_zero(), v.is_zero()) {
                    (true, true) => Jet::zero(space, order),
                    _ => {
                        let g = if !u.is_zero() {
                            u.div_exact_poly(&yp)
                        } else {
                            v.div_exact_poly(&zp)
                        }
                        .ok_or_else(|| {
                            Error::NotTangent(
                                "rotational component is not a multiple of the model field".into(),
                            )
                        })?;
                        // consistency on both components
                        if !u.eq_upto_order(&g.mul(&yp)) || !v.eq_upto_order(&g.mul(&zp)) {
                            return Err(Error::NotTangent(
                                "components disagree with the model direction".into(),
                            ));
                        }
                        g
                    }
                };
                // f must lie in the ideal (y', z') = (y, z)
                let (f1, f2) = split_in_linear_ideal(&f, &yp, &zp, fiber)?;
                // f dx = -f1 X_y - f2 X_z, g W = g X_x
                Ok(vec![
                    (f1.neg(), fiber[1]),
                    (f2.neg(), fiber[2]),
                    (g, fiber[0]),
                ]
                .into_iter()
                .filter(|(j, _)| !j.is_zero())
                .collect())
            } else if a.iter().flatten().all(|v| v.is_zero()) {
                // abelian: only the zero field is tangent
                if comp(fiber[0]).is_zero() && u.is_zero() && v.is_zero() {
                    Ok(vec![])
                } else {
                    Err(Error::NotTangent(
                        "structure is trivial but the field is not zero".into(),
                    ))
                }
            } else {
                divide_solvable_degenerate(a, z, fiber)
            }
        }
        Dim3Model::So3 | Dim3Model::Sl2 => {
            // de Rham division: i_Z Omega = beta ^ i_Pi Omega, Z = -beta -| Pi
            let vol = fiber_volume(space, fiber, order.plus(1));
            let alpha = vol.interior(&pi)?;
            let omega = vol.interior(z)?;
            let beta = derham_divide_on_fiber(&omega, &alpha, fiber)?;
            let mut pairs = Vec::new();
            for &i in fiber {
                let b = beta.component(&[i as u8]);
                if !b.is_zero() {
                    pairs.push((b.neg(), i));
                }
            }
            // re-expansion must reproduce the field exactly
            let mut acc = Skew::zero(space, 1, order);
            for (f, g) in &pairs {
                let xg = poisson::hamiltonian_of(&pi, &Jet::coordinate(space, *g, order.plus(1)))?;
                acc = acc.add(&xg.mul_jet(f));
            }
            if !poisson::is_zero_upto(&acc.sub(z)) {
                return Err(Error::Internal(
                    "de Rham division re-expansion mismatch".into(),
                ));
            }
            Ok(pairs)
        }
    }
}

fn fiber_space_3() -> Arc<Space> {
    crate::jetcore::jet::space(&["y1", "y2", "y3"])
}

/// Volume form on the fiber coordinates inside the ambient space.
fn fiber_volume<R: Scalar>(
    space: &Arc<Space>,
    fiber: &[usize],
    order: OrderBound,
) -> DifferentialFormField<R> {
    let idx: Vec<u8> = fiber.iter().map(|&i| i as u8).collect();
    Skew::from_components(space, 3, [(idx, Jet::constant(space, R::one(), order))])
        .expect("fiber volume")
}

/// Degenerate solvable case: the model rows are proportional,
/// Pi = B d/dx ^ D for a linear form B and a constant direction D.
fn divide_solvable_degenerate<R: Scalar>(
    a: &RatMat,
    z: &PolyVectorField<R>,
    fiber: &[usize],
) -> Result<Vec<DivisionPair<R>>> {
    let space = z.space();
    let order = z.order();
    // rows (a b; c d) proportional and not both zero: D = d/dy + lambda d/dz
    // after swapping roles if the first row vanishes
    let (lead_down, lambda, brow) = if a[0].iter().any(|v| !v.is_zero()) {
        let lam = if !a[0][0].is_zero() {
            &a[1][0] / &a[0][0]
        } else {
            &a[1][1] / &a[0][1]
        };
        (false, lam, a[0].clone())
    } else {
        (true, Rat::from_integer(0.into()), a[1].clone())
    };
    // ybar direction index and complement index inside the fiber
    let (iy, iz) = if lead_down {
        (fiber[2], fiber[1])
    } else {
        (fiber[1], fiber[2])
    };
    let bbar = Jet::coordinate(space, fiber[1], order.plus(2))
        .mul_rat(&brow[0])
        .add(&Jet::coordinate(space, fiber[2], order.plus(2)).mul_rat(&brow[1]));
    let f = z.component(&[fiber[0] as u8]);
    // component along D in the (y, z) plane: u_y = g, u_z = lambda g
    let uy = z.component(&[iy as u8]);
    let uz = z.component(&[iz as u8]);
    let g = uy.clone();
    let expect_uz = if lead_down {
        Jet::zero(space, order)
    } else {
        uy.mul_rat(&lambda)
    };
    if !uz.eq_upto_order(&expect_uz) {
        return Err(Error::NotTangent(
            "field leaves the plane spanned by the degenerate model".into(),
        ));
    }
    // f and g must both be divisible by the linear form B
    let f1 = if f.is_zero() {
        Jet::zero(space, order)
    } else {
        f.div_exact_poly(&bbar).ok_or_else(|| {
            Error::NotTangent("x-component does not vanish on the singular plane".into())
        })?
    };
    let g1 = if g.is_zero() {
        Jet::zero(space, order)
    } else {
        g.div_exact_poly(&bbar).ok_or_else(|| {
            Error::NotTangent("leaf component does not vanish on the singular plane".into())
        })?
    };
    // With X_x = B(dy + lambda dz) and X_ybar = -B dx (ybar the leading
    // fiber coordinate of D): Z = -f1 X_ybar + g1 X_x. The generator of
    // the second pair must be ybar itself; for the normalized model the
    // bracket {x, ybar} is exactly B.
    Ok(vec![(f1.neg(), iy), (g1, fiber[0])]
        .into_iter()
        .filter(|(j, _)| !j.is_zero())
        .collect())
}

/// Split f in the ideal generated by two independent fiber-linear forms,
/// canonically: echelonize the pair to leading variables, divide in
/// graded-lex order, recombine.
fn split_in_linear_ideal<R: Scalar>(
    f: &Jet<R>,
    yp: &Jet<R>,
    zp: &Jet<R>,
    fiber: &[usize],
) -> Result<(Jet<R>, Jet<R>)> {
    let space = f.space();
    if f.is_zero() {
        return Ok((
            Jet::zero(space, f.order()),
            Jet::zero(space, f.order()),
        ));
    }
    // write yp = p e1 + q e2, zp = r e1 + s e2 where (e1, e2) is the
    // echelon basis of span(yp, zp) with distinct leading variables
    let coeff = |j: &Jet<R>, i: usize| -> Rat {
        // fiber-linear forms have rational coefficients by construction
        let c = j.linear_coeff(i);
        rat_scalar_to_rat::<R>(&c)
    };
    let m = vec![
        vec![coeff(yp, fiber[1]), coeff(yp, fiber[2])],
        vec![coeff(zp, fiber[1]), coeff(zp, fiber[2])],
    ];
    // echelon basis e1 = y + t z (or z), e2 = z
    let y1 = Jet::coordinate(space, fiber[1], f.order().plus(1));
    let z1 = Jet::coordinate(space, fiber[2], f.order().plus(1));
    let (e1, e2, change) = if !m[0][0].is_zero() || !m[1][0].is_zero() {
        // some form leads with y
        let lead = if m[0][0].is_zero() { 1 } else { 0 };
        let other = 1 - lead;
        let t = &m[lead][1] / &m[lead][0];
        let e1 = y1.add(&z1.mul_rat(&t));
        // reduce the other form by e1
        let rem_z = &m[other][1] - &m[other][0] * &t;
        let e2 = z1.clone();
        // yp/zp in terms of e1, e2
        let rows = if lead == 0 {
            vec![
                vec![m[0][0].clone(), Rat::from_integer(0.into())],
                vec![m[1][0].clone(), rem_z],
            ]
        } else {
            vec![
                vec![m[0][0].clone(), {
                    let r = &m[0][1] - &m[0][0] * &t;
                    r
                }],
                vec![m[1][0].clone(), {
                    let r = &m[1][1] - &m[1][0] * &t;
                    r
                }],
            ]
        };
        (e1, e2, rows)
    } else {
        // both forms are multiples of z; they cannot be independent
        return Err(Error::Internal("linear forms are not independent".into()));
    };
    // f = e1 h1 + e2 h2 by successive graded-lex division
    let h1 = f.div_partial(&e1);
    let rem = f.sub(&h1.mul(&e1));
    let h2 = rem.div_exact_poly(&e2).ok_or_else(|| {
        Error::NotTangent("x-component does not vanish on the singular set".into())
    })?;
    // recombine: (yp zp) = change (e1 e2) => (e1 e2) = change^{-1} (yp zp)
    let inv = linalg::invert_scalar_matrix(&change)
        .ok_or_else(|| Error::Internal("ideal basis change is singular".into()))?;
    // e1 = inv[0][0] yp + inv[0][1] zp, e2 = inv[1][0] yp + inv[1][1] zp
    let f1 = h1.mul_rat(&inv[0][0]).add(&h2.mul_rat(&inv[1][0]));
    let f2 = h1.mul_rat(&inv[0][1]).add(&h2.mul_rat(&inv[1][1]));
    Ok((f1, f2))
}

fn rat_scalar_to_rat<R: Scalar>(c: &R) -> Rat {
    // structure coefficients are rational by construction; reaching a
    // t-dependent value here is a caller bug
    c.to_rat().expect("rational structure coefficient")
}

/// De Rham division on the whole space (three variables).
pub fn derham_divide(
    omega: &DifferentialFormField<Rat>,
    alpha: &DifferentialFormField<Rat>,
) -> Result<DifferentialFormField<Rat>> {
    if omega.dim() != 3 {
        return Err(Error::VarMismatch("de Rham division expects three variables".into()));
    }
    derham_divide_on_fiber(omega, alpha, &[0, 1, 2])
}

/// Solve beta ^ alpha = omega degree-by-degree in the fiber variables,
/// with the remaining variables as parameters. The degree-d block of beta
/// is obtained from the linear part of alpha by a canonical minimal
/// support solve; inconsistency at some degree surfaces as NoSolution.
pub(crate) fn derham_divide_on_fiber<R: Scalar>(
    omega: &DifferentialFormField<R>,
    alpha: &DifferentialFormField<R>,
    fiber: &[usize],
) -> Result<DifferentialFormField<R>> {
    let space = omega.space();
    if omega.degree() != 2 || alpha.degree() != 1 {
        return Err(Error::DegreeMismatch(
            "division expects a 2-form and a 1-form".into(),
        ));
    }
    let annihilated = omega.wedge(alpha)?;
    if !poisson::is_zero_upto(&annihilated) {
        return Err(Error::NotAnnihilated(format!(
            "omega ^ alpha = {:?}",
            annihilated
        )));
    }
    let order = omega.order().min(alpha.order());
    if omega.is_zero() {
        return Ok(Skew::zero(space, 1, order));
    }
    // linear part of alpha on the fiber: matrix A[i][l] with
    // alpha_i = sum_l A[i][l] z_l + higher
    let mut amat = vec![vec![Rat::from_integer(0.into()); fiber.len()]; fiber.len()];
    for (fi, &i) in fiber.iter().enumerate() {
        let ai = alpha.component(&[i as u8]);
        for (fl, &l) in fiber.iter().enumerate() {
            amat[fi][fl] = rat_scalar_to_rat::<R>(&ai.linear_coeff(l));
        }
    }
    // homogeneous-linear isolation check: three independent forms
    let alpha_is_linear = alpha
        .components()
        .all(|(_, j)| j.terms().all(|(m, _)| m.degree_on(fiber) == 1 && m.degree() == 1));
    if alpha_is_linear && linalg::mat_rank(&amat) < fiber.len() {
        return Err(Error::NoSolution(
            "linear divisor does not have an algebraically isolated zero".into(),
        ));
    }
    let cap = match order {
        OrderBound::Exact => {
            let m = omega
                .components()
                .map(|(_, j)| j.max_degree())
                .max()
                .unwrap_or(0);
            m
        }
        OrderBound::UpTo(c) => c,
    };
    let alpha_higher = {
        // alpha minus its fiber-linear part
        let mut lin_comps = Vec::new();
        for (fi, &i) in fiber.iter().enumerate() {
            let mut jet: Jet<R> = Jet::zero(space, alpha.order());
            for (fl, &l) in fiber.iter().enumerate() {
                if !amat[fi][fl].is_zero() {
                    jet = jet.add(
                        &Jet::coordinate(space, l, alpha.order()).mul_rat(&amat[fi][fl]),
                    );
                }
            }
            lin_comps.push((vec![i as u8], jet));
        }
        let lin: DifferentialFormField<R> = Skew::from_components(space, 1, lin_comps)?;
        alpha.sub(&lin)
    };
    // pair index layout for equations: fiber pairs (i<j)
    let pairs = increasing_tuples(fiber.len(), 2);
    let mut beta: DifferentialFormField<R> = Skew::zero(space, 1, order);
    for d in 0..cap.max(1) {
        // right-hand side at fiber-degree d+1: omega minus contributions of
        // lower beta blocks against the nonlinear part of alpha
        let mut rhs_form = fiber_graded_part(omega, fiber, d + 1);
        if !beta.is_zero() && !alpha_higher.is_zero() {
            let corr = beta.wedge(&alpha_higher)?;
            rhs_form = rhs_form.sub(&fiber_graded_part(&corr, fiber, d + 1));
        }
        // unknown columns: (fiber monomial of degree d) x fiber coordinate
        let monos = fiber_monomials(fiber, space.dim(), d);
        let ncols = monos.len() * fiber.len();
        // equations: (fiber pair) x (fiber monomial of degree d+1)
        let eq_monos = fiber_monomials(fiber, space.dim(), d + 1);
        let mut rows: Vec<Vec<Rat>> = Vec::new();
        let mut rhs: Vec<Jet<R>> = Vec::new();
        for pq in &pairs {
            let (fp, fq) = (pq[0] as usize, pq[1] as usize);
            let (i, j) = (fiber[fp], fiber[fq]);
            for nu in &eq_monos {
                let mut row = vec![Rat::from_integer(0.into()); ncols];
                for (mc, mu) in monos.iter().enumerate() {
                    for (fl, _l) in fiber.iter().enumerate() {
                        // beta_i[mu] * alpha_j[l-linear] contributes to
                        // pair (i,j), monomial mu * z_l
                        let Some(diff) = mono_divide(nu, mu, fiber[fl]) else {
                            continue;
                        };
                        if !diff {
                            continue;
                        }
                        // columns: beta component index x monomial
                        let col_i = mc * fiber.len() + fp;
                        let col_j = mc * fiber.len() + fq;
                        row[col_i] = &row[col_i] + &amat[fq][fl];
                        row[col_j] = &row[col_j] - &amat[fp][fl];
                    }
                }
                // rhs coefficient: parameter-jet of omega at (i,j), nu
                let target = rhs_form.component(&[i as u8, j as u8]);
                rhs.push(param_coefficient(&target, nu, fiber));
                rows.push(row);
            }
        }
        let sol = linalg::solve_rational_system(
            &rows,
            &rhs,
            |m, q| m.mul_rat(q),
            |m, n| m.sub(n),
            |m| m.is_zero(),
        )
        .ok_or_else(|| {
            Error::NoSolution(format!(
                "division system inconsistent at fiber degree {d}"
            ))
        })?;
        // assemble this degree block of beta
        let mut block: DifferentialFormField<R> = Skew::zero(space, 1, order);
        for (mc, mu) in monos.iter().enumerate() {
            for (fl, &l) in fiber.iter().enumerate() {
                if let Some(Some(v)) = sol.get(mc * fiber.len() + fl).cloned() {
                    if v.is_zero() {
                        continue;
                    }
                    let mono_jet = mono_as_jet(space, mu, order.plus(1));
                    let comp = v.mul(&mono_jet);
                    block = block.add(&Skew::from_components(
                        space,
                        1,
                        [(vec![l as u8], comp)],
                    )?);
                }
            }
        }
        beta = beta.add(&block);
    }
    // final verification through the certified order
    let check = beta.wedge(alpha)?.sub(omega);
    if !poisson::is_zero_upto(&check) {
        return Err(Error::NoSolution(
            "assembled divisor does not reproduce the target".into(),
        ));
    }
    Ok(beta)
}

/// Keep coefficient terms whose fiber-degree is exactly d.
fn fiber_graded_part<R: Scalar, K>(
    t: &Skew<R, K>,
    fiber: &[usize],
    d: u32,
) -> Skew<R, K> {
    t.map_jets(|j| {
        Jet::from_terms(
            j.space(),
            j.order(),
            j.terms().filter_map(|(m, c)| {
                if m.degree_on(fiber) == d {
                    Some((m.clone(), c.clone()))
                } else {
                    None
                }
            }),
        )
    })
}

/// All monomials of the given degree in the fiber variables, embedded in
/// the full space, in ascending graded-lex order.
fn fiber_monomials(fiber: &[usize], dim: usize, d: u32) -> Vec<Mono> {
    fn rec(fiber: &[usize], dim: usize, d: u32, pos: usize, cur: &mut Vec<u16>, out: &mut Vec<Mono>) {
        if pos == fiber.len() {
            if d == 0 {
                let mut e = vec![0u16; dim];
                for (fi, &i) in fiber.iter().enumerate() {
                    e[i] = cur[fi];
                }
                out.push(Mono(e));
            }
            return;
        }
        for take in 0..=d {
            cur.push(take as u16);
            rec(fiber, dim, d - take, pos + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    let mut cur = Vec::new();
    rec(fiber, dim, d, 0, &mut cur, &mut out);
    out.sort();
    out
}

/// Does nu equal mu * z_l on the fiber coordinates?
fn mono_divide(nu: &Mono, mu: &Mono, l: usize) -> Option<bool> {
    let mut expected = mu.0.clone();
    expected[l] += 1;
    Some(expected == nu.0)
}

/// Parameter-jet coefficient of a full-space jet at the fiber monomial nu:
/// collect the terms whose fiber part equals nu and strip it off.
fn param_coefficient<R: Scalar>(j: &Jet<R>, nu: &Mono, fiber: &[usize]) -> Jet<R> {
    Jet::from_terms(
        j.space(),
        j.order(),
        j.terms().filter_map(|(m, c)| {
            let matches = fiber.iter().all(|&i| m.0[i] == nu.0[i]);
            if !matches {
                return None;
            }
            let mut e = m.0.clone();
            for &i in fiber {
                e[i] = 0;
            }
            Some((Mono(e), c.clone()))
        }),
    )
}

fn mono_as_jet<R: Scalar>(space: &Arc<Space>, m: &Mono, order: OrderBound) -> Jet<R> {
    Jet::from_terms(space, order, [(m.clone(), R::one())])
}

/// Vertical leafwise pairing through the division property: decompose the
/// first field as a combination of Hamiltonian fields and contract.
pub(crate) fn pairing_via_division<R: Scalar>(
    pi: &PolyVectorField<R>,
    x: &PolyVectorField<R>,
    y: &PolyVectorField<R>,
    fiber: &[usize],
) -> Result<SplitPairingReport<R>> {
    let space = pi.space();
    let order = pi.order().min(x.order()).min(y.order());
    // the fiber block must be linear in the fiber variables with rational
    // coefficients so it can be matched against a model table
    let mut entries = Vec::new();
    for (fi, &i) in fiber.iter().enumerate() {
        for (fj, &j) in fiber.iter().enumerate().skip(fi + 1) {
            let comp = pi.component(&[i as u8, j as u8]);
            let mut row = vec![Rat::from_integer(0.into()); fiber.len()];
            for (m, c) in comp.terms() {
                let fdeg = m.degree_on(fiber);
                if fdeg != 1 || m.degree() != 1 {
                    return Err(Error::UnsupportedPairing(
                        "vertical block is not linear in the fiber variables".into(),
                    ));
                }
                let l = fiber
                    .iter()
                    .position(|&f| m.0[f] == 1)
                    .expect("fiber-linear monomial");
                row[l] = rat_scalar_to_rat::<R>(c);
            }
            entries.push((fi, fj, row));
        }
    }
    let g = LieAlgebraSC::new(fiber.len(), entries)?;
    let model = classify_dim3_model(&g).map_err(|e| match e {
        Error::NotInModelBasis(m) => Error::UnsupportedPairing(m),
        other => other,
    })?;
    let keep_fiber = |f: &PolyVectorField<R>| -> Result<PolyVectorField<R>> {
        let mut out = Skew::zero(space, 1, order);
        for (idx, jet) in f.components() {
            if fiber.contains(&(idx[0] as usize)) {
                out = out.add(&Skew::from_components(space, 1, [(idx.clone(), jet.clone())])?);
            }
        }
        Ok(out)
    };
    let xv = keep_fiber(x)?;
    let yv = keep_fiber(y)?;
    let pairs = divide_on_fiber(&model, &xv, fiber)?;
    // Pi^{-1}(sum f_i X_{g_i}, Y) = - sum f_i Y(g_i)
    let mut acc = Jet::zero(space, order);
    for (f, gidx) in pairs {
        let ycomp = yv.component(&[gidx as u8]);
        acc = acc.add(&f.mul(&ycomp));
    }
    Ok(SplitPairingReport {
        horizontal: Jet::zero(space, order),
        vertical: poisson::PairingRatio::from_jet(acc.neg()),
    })
}

impl<R: Scalar> Jet<R> {
    /// Divide by the graded-lex leading term of `den` as far as possible,
    /// returning the quotient (the remainder is `self - q * den`).
    pub(crate) fn div_partial(&self, den: &Jet<R>) -> Jet<R> {
        let Some((lead_m, lead_c)) = den.terms().next_back().map(|(m, c)| (m.clone(), c.clone()))
        else {
            return Jet::zero(self.space(), self.order());
        };
        let mut rem = self.clone();
        let mut quot = Jet::zero(self.space(), self.order().min(den.order()));
        loop {
            let step = rem.terms().rev().find_map(|(m, c)| {
                if lead_m.divides(m) {
                    lead_c.inv().map(|ic| (m.div(&lead_m), c.mul(&ic)))
                } else {
                    None
                }
            });
            let Some((qm, qc)) = step else { break };
            let piece = Jet::from_terms(self.space(), OrderBound::Exact, [(qm, qc)]);
            rem = rem.sub(&piece.mul(den).truncated(rem.order()));
            quot = quot.add(&piece.truncated(quot.order()));
        }
        quot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcore::jet::space;
    use crate::jetcore::scalar::rat;
    use crate::poisson::hamiltonian_of;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn n8() -> OrderBound {
        OrderBound::UpTo(8)
    }

    fn zspace() -> Arc<Space> {
        space(&["x", "y", "z"])
    }

    #[test]
    fn validate_models() {
        assert!(Dim3Model::So3.structure_constants().validate().is_empty());
        assert!(Dim3Model::Sl2.structure_constants().validate().is_empty());
        let a = Dim3Model::SolvableA(vec![
            vec![rat_int(1), rat_int(2)],
            vec![rat_int(-3), rat_int(5)],
        ]);
        assert!(a.structure_constants().validate().is_empty());

        // a single perturbed entry breaks Jacobi with a certificate
        let bad = LieAlgebraSC::new(
            3,
            vec![
                (0, 1, vec![rat_int(0), rat_int(0), rat_int(1)]),
                (1, 2, vec![rat_int(1), rat_int(0), rat_int(0)]),
                (2, 0, vec![rat_int(0), rat_int(1), rat_int(1)]), // extra e3
            ],
        )
        .unwrap();
        let violations = bad.validate();
        assert!(!violations.is_empty());
        assert_eq!(violations[0].i, 0);
        assert_eq!(violations[0].j, 1);
        assert_eq!(violations[0].k, 2);
    }

    #[test]
    fn killing_and_classification() {
        let so3 = Dim3Model::So3.structure_constants();
        let k = so3.killing_form();
        assert_eq!(k[0][0], rat_int(-2));
        assert!(so3.is_semisimple());
        assert!(negative_definite(&k));
        assert!(matches!(classify_dim3_model(&so3), Ok(Dim3Model::So3)));

        let sl2 = Dim3Model::Sl2.structure_constants();
        assert!(sl2.is_semisimple());
        assert!(!negative_definite(&sl2.killing_form()));
        assert!(matches!(classify_dim3_model(&sl2), Ok(Dim3Model::Sl2)));

        let solv = Dim3Model::SolvableA(vec![
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(1)],
        ])
        .structure_constants();
        assert!(!solv.is_semisimple());
        assert!(matches!(
            classify_dim3_model(&solv),
            Ok(Dim3Model::SolvableA(_))
        ));

        // a rotated so(3) basis is rejected
        let rotated = LieAlgebraSC::new(
            3,
            vec![
                (0, 1, vec![rat_int(0), rat_int(0), rat_int(2)]),
                (1, 2, vec![rat(1, 2), rat_int(0), rat_int(0)]),
                (2, 0, vec![rat_int(0), rat_int(1), rat_int(0)]),
            ],
        )
        .unwrap();
        assert!(matches!(
            classify_dim3_model(&rotated),
            Err(Error::NotInModelBasis(_)) | Err(Error::InvalidConstants(_))
        ));
    }

    #[test]
    fn linear_poisson_tables() {
        let sp = zspace();
        // abelian gives the zero structure
        let ab = LieAlgebraSC::abelian(3);
        assert!(ab.linear_poisson(&sp, n8()).unwrap().is_zero());
        // A = identity gives d/dx ^ (y d/dy + z d/dz)
        let a = Dim3Model::SolvableA(vec![
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(1)],
        ]);
        let pi = a.linear_poisson(&sp, n8());
        let y = Jet::coordinate(&sp, 1, n8());
        let z = Jet::coordinate(&sp, 2, n8());
        assert!(pi.component(&[0, 1]).eq_through(&y, 8));
        assert!(pi.component(&[0, 2]).eq_through(&z, 8));
        assert!(pi.component(&[1, 2]).is_zero());
        // so(3) produces the displayed structure and it is Poisson
        let so3 = Dim3Model::So3.linear_poisson(&sp, n8());
        assert!(crate::poisson::jacobiator(&so3).unwrap().is_zero());
        let sl2 = Dim3Model::Sl2.linear_poisson(&sp, n8());
        assert!(crate::poisson::jacobiator(&sl2).unwrap().is_zero());
    }

    fn random_poly(rng: &mut StdRng, sp: &Arc<Space>, maxdeg: u16, terms: usize) -> Jet<Rat> {
        let mut j = Jet::zero(sp, OrderBound::Exact);
        for _ in 0..terms {
            let e: Vec<u16> = (0..3).map(|_| rng.random_range(0..=maxdeg / 2)).collect();
            if e.iter().map(|&v| v as u32).sum::<u32>() > maxdeg as u32 {
                continue;
            }
            let c = rat_int(rng.random_range(-4..=4));
            j = j.add(&Jet::from_terms(sp, OrderBound::Exact, [(Mono(e), c)]));
        }
        j
    }

    fn division_soundness(model: Dim3Model, seed: u64, rounds: usize) {
        let sp = zspace();
        let mut rng = StdRng::seed_from_u64(seed);
        let pi = model.linear_poisson(&sp, OrderBound::Exact);
        for _ in 0..rounds {
            // build a tangent field as a random combination of Hamiltonian
            // fields of coordinate functions
            let mut z: PolyVectorField<Rat> = Skew::zero(&sp, 1, OrderBound::Exact);
            for g in 0..3usize {
                if rng.random_bool(0.7) {
                    let f = random_poly(&mut rng, &sp, 3, 3);
                    let xg = hamiltonian_of(&pi, &Jet::coordinate(&sp, g, OrderBound::Exact))
                        .unwrap();
                    z = z.add(&xg.mul_jet(&f));
                }
            }
            let pairs = match divide_tangent_field(&model, &z) {
                Ok(p) => p,
                Err(e) => panic!("division failed for {model:?}: {e}"),
            };
            let mut acc: PolyVectorField<Rat> = Skew::zero(&sp, 1, OrderBound::Exact);
            for (f, g) in &pairs {
                let xg = hamiltonian_of(&pi, g).unwrap();
                acc = acc.add(&xg.mul_jet(f));
            }
            let diff = acc.sub(&z);
            assert!(diff.is_zero(), "re-expansion mismatch: {diff:?}");
        }
    }

    #[test]
    fn division_so3() {
        division_soundness(Dim3Model::So3, 11, 25);
    }

    #[test]
    fn division_sl2() {
        division_soundness(Dim3Model::Sl2, 12, 25);
    }

    #[test]
    fn division_solvable_invertible() {
        division_soundness(
            Dim3Model::SolvableA(vec![
                vec![rat_int(1), rat_int(2)],
                vec![rat_int(0), rat_int(3)],
            ]),
            13,
            25,
        );
        division_soundness(
            Dim3Model::SolvableA(vec![
                vec![rat_int(2), rat_int(1)],
                vec![rat_int(1), rat_int(1)],
            ]),
            14,
            25,
        );
    }

    #[test]
    fn division_solvable_degenerate() {
        division_soundness(
            Dim3Model::SolvableA(vec![
                vec![rat_int(1), rat_int(1)],
                vec![rat_int(2), rat_int(2)],
            ]),
            15,
            25,
        );
        division_soundness(
            Dim3Model::SolvableA(vec![
                vec![rat_int(0), rat_int(0)],
                vec![rat_int(1), rat_int(2)],
            ]),
            16,
            25,
        );
    }

    #[test]
    fn division_rejects_euler() {
        let sp = zspace();
        let euler: PolyVectorField<Rat> = Skew::from_components(
            &sp,
            1,
            (0..3).map(|i| (vec![i as u8], Jet::coordinate(&sp, i, n8()))),
        )
        .unwrap();
        assert!(matches!(
            divide_tangent_field(&Dim3Model::So3, &euler),
            Err(Error::NotTangent(_))
        ));
    }

    #[test]
    fn division_hamiltonian_input() {
        // Z = X_x for so(3) decomposes as {(1, x)}
        let sp = zspace();
        let pi = Dim3Model::So3.linear_poisson(&sp, OrderBound::Exact);
        let xx = hamiltonian_of(&pi, &Jet::coordinate(&sp, 0, OrderBound::Exact)).unwrap();
        let pairs = divide_tangent_field(&Dim3Model::So3, &xx).unwrap();
        assert_eq!(pairs.len(), 1);
        let one = Jet::constant(&sp, rat_int(1), OrderBound::Exact);
        assert!(pairs[0].0.eq_upto_order(&one));
        assert!(pairs[0].1.eq_upto_order(&Jet::coordinate(&sp, 0, n8())));
    }

    #[test]
    fn derham_division_chain() {
        // the three-step chain on so(3): tangency, division, re-contraction
        let sp = zspace();
        let pi = Dim3Model::So3.linear_poisson(&sp, OrderBound::Exact);
        let xx = hamiltonian_of(&pi, &Jet::coordinate(&sp, 0, OrderBound::Exact)).unwrap();
        let vol = crate::jetcore::tensor::volume_form::<Rat>(&sp, n8());
        let alpha = vol.interior(&pi).unwrap();
        let omega = vol.interior(&xx).unwrap();
        // i_X Omega ^ i_Pi Omega = 0
        assert!(omega.wedge(&alpha).unwrap().is_zero());
        let beta = derham_divide(&omega, &alpha).unwrap();
        // beta ^ alpha = omega exactly
        assert!(beta.wedge(&alpha).unwrap().eq_upto_order(&omega));
        // X = -(beta -| Pi) under the kernel's contraction conventions
        let recontracted = pi.contract_form(&beta).unwrap().neg();
        assert!(recontracted.eq_upto_order(&xx));
        // zero divides to zero
        let z2: DifferentialFormField<Rat> = Skew::zero(&sp, 2, n8());
        assert!(derham_divide(&z2, &alpha).unwrap().is_zero());
        // non-annihilated input is rejected
        let dx = DifferentialFormField::coordinate_form(&sp, 0, n8());
        let dy = DifferentialFormField::coordinate_form(&sp, 1, n8());
        let bad = dx.wedge(&dy).unwrap();
        assert!(matches!(
            derham_divide(&bad, &alpha),
            Err(Error::NotAnnihilated(_))
        ));
    }
}
