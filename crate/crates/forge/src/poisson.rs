//! Poisson-specific predicates and constructions on bivector jets: Jacobi
//! verification, Hamiltonian fields, rank at the origin, and the leafwise
//! pairing used as the tameness diagnostic.

use crate::error::{Error, Result};
use crate::jetcore::jet::{Jet, OrderBound};
use crate::jetcore::scalar::{Rat, Scalar};
use crate::jetcore::tensor::{PolyVectorField, Skew};
use crate::liealg;
use crate::linalg;

/// A bivector jet together with the promise that its jacobiator vanishes
/// through the effective truncation order.
#[derive(Clone, PartialEq, Debug)]
pub struct PoissonJet<R: Scalar = Rat> {
    field: PolyVectorField<R>,
}

impl<R: Scalar> PoissonJet<R> {
    /// Validate the Jacobi identity on construction.
    pub fn new(field: PolyVectorField<R>) -> Result<Self> {
        let jac = jacobiator(&field)?;
        if !is_zero_upto(&jac) {
            return Err(Error::NotPoisson(format!(
                "jacobiator has nonzero component {}",
                first_nonzero(&jac)
            )));
        }
        Ok(PoissonJet { field })
    }

    /// Skip constructor-time validation; used to build intentionally
    /// non-Poisson bivectors for negative tests.
    pub fn new_deferred(field: PolyVectorField<R>) -> Result<Self> {
        if field.degree() != 2 {
            return Err(Error::DegreeMismatch(format!(
                "Poisson jet needs a bivector, got degree {}",
                field.degree()
            )));
        }
        Ok(PoissonJet { field })
    }

    pub fn bivector(&self) -> &PolyVectorField<R> {
        &self.field
    }

    pub fn into_bivector(self) -> PolyVectorField<R> {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn order(&self) -> OrderBound {
        self.field.order()
    }

    /// Full antisymmetric coefficient matrix `P[i][j] = {u_i, u_j}`.
    pub fn matrix(&self) -> Vec<Vec<Jet<R>>> {
        full_matrix(&self.field)
    }
}

/// Whether a tensor vanishes through its own certified order.
pub fn is_zero_upto<R: Scalar, K>(t: &Skew<R, K>) -> bool {
    match t.order() {
        OrderBound::Exact => t.is_zero(),
        OrderBound::UpTo(c) => t.vanishes_through(c),
    }
}

fn first_nonzero<R: Scalar, K>(t: &Skew<R, K>) -> String {
    t.components()
        .find(|(_, j)| !j.is_zero())
        .map(|(idx, j)| format!("{:?}: {}", idx, j.render()))
        .unwrap_or_else(|| "0".into())
}

/// Full antisymmetric matrix of a bivector.
pub fn full_matrix<R: Scalar>(pi: &PolyVectorField<R>) -> Vec<Vec<Jet<R>>> {
    let n = pi.dim();
    let order = pi.order();
    let zero = Jet::zero(pi.space(), order);
    let mut m = vec![vec![zero; n]; n];
    for (idx, jet) in pi.components() {
        let (i, j) = (idx[0] as usize, idx[1] as usize);
        m[i][j] = jet.clone();
        m[j][i] = jet.neg();
    }
    m
}

/// Half the Schouten square: zero exactly when the bivector is Poisson.
pub fn jacobiator<R: Scalar>(pi: &PolyVectorField<R>) -> Result<PolyVectorField<R>> {
    if pi.degree() != 2 {
        return Err(Error::DegreeMismatch(format!(
            "jacobiator needs a bivector, got degree {}",
            pi.degree()
        )));
    }
    Ok(pi.schouten(pi)?.mul_rat(&crate::jetcore::scalar::rat(1, 2)))
}

/// Hamiltonian vector field X_h = {h, .}.
pub fn hamiltonian_field<R: Scalar>(pi: &PoissonJet<R>, h: &Jet<R>) -> Result<PolyVectorField<R>> {
    hamiltonian_of(&pi.field, h)
}

/// Hamiltonian field against a raw bivector (no Poisson check).
pub fn hamiltonian_of<R: Scalar>(
    pi: &PolyVectorField<R>,
    h: &Jet<R>,
) -> Result<PolyVectorField<R>> {
    if !crate::jetcore::jet::same_space(pi.space(), h.space()) {
        return Err(Error::VarMismatch(
            "hamiltonian: function lives in a different space".into(),
        ));
    }
    let dh = Skew::from_components(pi.space(), 0, [(vec![], h.clone())])?.exterior_derivative();
    pi.contract_form(&dh)
}

/// Rank of the coefficient matrix at the origin; always even.
pub fn rank_at_origin(pi: &PoissonJet<Rat>) -> usize {
    let n = pi.dim();
    let mut m = vec![vec![Rat::from_integer(0.into()); n]; n];
    for (idx, jet) in pi.field.components() {
        let c = jet.constant_term();
        m[idx[0] as usize][idx[1] as usize] = c.clone();
        m[idx[1] as usize][idx[0] as usize] = -c;
    }
    linalg::mat_rank(&m)
}

/// Poisson vector field test with the bracket as certificate.
pub fn is_poisson_field<R: Scalar>(
    pi: &PoissonJet<R>,
    x: &PolyVectorField<R>,
) -> Result<(bool, PolyVectorField<R>)> {
    if x.degree() != 1 {
        return Err(Error::DegreeMismatch("expected a vector field".into()));
    }
    let cert = x.schouten(&pi.field)?;
    Ok((is_zero_upto(&cert), cert))
}

/// An exact ratio of jets, reduced canonically; `jet` is present when the
/// denominator divides the numerator through the reachable order.
#[derive(Clone, Debug, PartialEq)]
pub struct PairingRatio<R: Scalar = Rat> {
    pub num: Jet<R>,
    pub den: Jet<R>,
    pub jet: Option<Jet<R>>,
}

impl<R: Scalar> PairingRatio<R> {
    pub fn from_jet(j: Jet<R>) -> Self {
        let one = Jet::constant(j.space(), R::one(), OrderBound::Exact);
        PairingRatio {
            num: j.clone(),
            den: one,
            jet: Some(j),
        }
    }

    pub fn is_jet(&self) -> bool {
        self.jet.is_some()
    }

    pub fn render(&self) -> String {
        match &self.jet {
            Some(j) => j.render(),
            None => format!("({}) / ({})", self.num.render(), self.den.render()),
        }
    }
}

/// Outcome of the leafwise pairing in split form.
#[derive(Clone, Debug)]
pub struct SplitPairingReport<R: Scalar = Rat> {
    /// Pairing of the horizontal (Darboux block) parts.
    pub horizontal: Jet<R>,
    /// Pairing of the vertical parts, possibly only a ratio.
    pub vertical: PairingRatio<R>,
}

impl<R: Scalar> SplitPairingReport<R> {
    pub fn is_jet(&self) -> bool {
        self.vertical.is_jet()
    }

    /// Total pairing as a jet when the vertical part is one.
    pub fn value(&self) -> Option<Jet<R>> {
        self.vertical.jet.as_ref().map(|v| self.horizontal.add(v))
    }
}

/// Reduce a numerator/denominator pair: attempt exact division, otherwise
/// cancel the common monomial factor and normalize the denominator's
/// graded-lex leading coefficient to one.
pub fn reduce_ratio<R: Scalar>(num: Jet<R>, den: Jet<R>) -> Result<PairingRatio<R>> {
    if den.is_zero() {
        return Err(Error::ZeroDenominator(
            "leafwise pairing denominator is identically zero".into(),
        ));
    }
    if num.is_zero() {
        return Ok(PairingRatio::from_jet(num));
    }
    // unit denominator: series division always succeeds
    if den.constant_term().inv().is_some() {
        let q = num.div_unit(&den)?;
        return Ok(PairingRatio::from_jet(q));
    }
    if let Some(q) = num.div_exact_poly(&den) {
        return Ok(PairingRatio::from_jet(q));
    }
    // not a jet: cancel common monomial content
    let gcd_of = |j: &Jet<R>| -> Vec<u16> {
        let mut g: Option<Vec<u16>> = None;
        for (m, _) in j.terms() {
            g = Some(match g {
                None => m.0.clone(),
                Some(prev) => prev.iter().zip(&m.0).map(|(a, b)| *a.min(b)).collect(),
            });
        }
        g.unwrap_or_default()
    };
    let gn = gcd_of(&num);
    let gd = gcd_of(&den);
    let common: Vec<u16> = gn.iter().zip(&gd).map(|(a, b)| *a.min(b)).collect();
    let space = num.space().clone();
    let divide_mono = |j: &Jet<R>| -> Jet<R> {
        Jet::from_terms(
            &space,
            j.order(),
            j.terms().map(|(m, c)| {
                let e: Vec<u16> = m.0.iter().zip(&common).map(|(a, b)| a - b).collect();
                (crate::jetcore::jet::Mono(e), c.clone())
            }),
        )
    };
    let mut num = divide_mono(&num);
    let mut den = divide_mono(&den);
    // make the denominator monic in its graded-lex leading coefficient
    let lead = den
        .terms()
        .next_back()
        .map(|(_, c)| c.clone())
        .expect("nonzero denominator");
    if let Some(inv) = lead.inv() {
        num = num.mul_scalar(&inv);
        den = den.mul_scalar(&inv);
    }
    Ok(PairingRatio { num, den, jet: None })
}

/// Leafwise symplectic pairing of two leaf-tangent fields evaluated on a
/// split or two-dimensional Poisson jet, recursing into the vertical part.
pub fn leafwise_pairing<R: Scalar>(
    pi: &PoissonJet<R>,
    x: &PolyVectorField<R>,
    y: &PolyVectorField<R>,
) -> Result<SplitPairingReport<R>> {
    if x.degree() != 1 || y.degree() != 1 {
        return Err(Error::DegreeMismatch("pairing needs vector fields".into()));
    }
    if !crate::jetcore::jet::same_space(pi.bivector().space(), x.space())
        || !crate::jetcore::jet::same_space(pi.bivector().space(), y.space())
    {
        return Err(Error::VarMismatch("pairing fields in different spaces".into()));
    }
    let all: Vec<usize> = (0..pi.dim()).collect();
    pairing_on(pi.bivector(), x, y, &all)
}

/// Pairing of the restriction of `pi` to the fiber variables `fiber`,
/// treating the remaining variables as parameters. The bivector must not
/// touch non-fiber indices.
pub fn pairing_on<R: Scalar>(
    pi: &PolyVectorField<R>,
    x: &PolyVectorField<R>,
    y: &PolyVectorField<R>,
    fiber: &[usize],
) -> Result<SplitPairingReport<R>> {
    let space = pi.space();
    let order = pi.order().min(x.order()).min(y.order());
    let comp = |f: &PolyVectorField<R>, i: usize| -> Jet<R> {
        let mut j = f.component(&[i as u8]);
        if j.is_zero() {
            j = Jet::zero(space, order);
        }
        j
    };
    let zero = Jet::zero(space, order);

    if fiber.is_empty() {
        check_fields_vanish_on(x, y, fiber)?;
        return Ok(SplitPairingReport {
            horizontal: zero.clone(),
            vertical: PairingRatio::from_jet(zero),
        });
    }

    if pi.is_zero() {
        // all leaves are points: only the zero field is tangent
        for f in [x, y] {
            for &i in fiber {
                if !comp(f, i).is_zero() {
                    return Err(Error::NotTangent(format!(
                        "structure vanishes but the field has a {} component",
                        space.var_name(i)
                    )));
                }
            }
        }
        return Ok(SplitPairingReport {
            horizontal: zero.clone(),
            vertical: PairingRatio::from_jet(zero),
        });
    }

    if fiber.len() == 2 {
        // Pi = u d_a ^ d_b: pairing is (X^a Y^b - X^b Y^a) / u
        let (a, b) = (fiber[0], fiber[1]);
        let u = pi.component(&[a as u8, b as u8]);
        let num = comp(x, a)
            .mul(&comp(y, b))
            .sub(&comp(x, b).mul(&comp(y, a)));
        let vertical = reduce_ratio(num, u)?;
        return Ok(SplitPairingReport {
            horizontal: zero,
            vertical,
        });
    }

    // split block form: leading Darboux pairs followed by a vertical block
    let k = darboux_pair_count(pi, fiber);
    if k > 0 {
        let mut horizontal = zero.clone();
        for p in 0..k {
            let a = fiber[2 * p];
            let b = fiber[2 * p + 1];
            horizontal = horizontal.add(
                &comp(x, a)
                    .mul(&comp(y, b))
                    .sub(&comp(x, b).mul(&comp(y, a))),
            );
        }
        let rest: Vec<usize> = fiber[2 * k..].to_vec();
        let sub = vertical_block(pi, &rest)?;
        let inner = pairing_on(&sub, x, y, &rest)?;
        return Ok(SplitPairingReport {
            horizontal: horizontal.add(&inner.horizontal),
            vertical: inner.vertical,
        });
    }

    if fiber.len() == 3 {
        // linear three-dimensional model: divide and pair
        return liealg::pairing_via_division(pi, x, y, fiber);
    }

    Err(Error::UnsupportedPairing(format!(
        "no Darboux block and the vertical part has dimension {}",
        fiber.len()
    )))
}

fn check_fields_vanish_on<R: Scalar>(
    _x: &PolyVectorField<R>,
    _y: &PolyVectorField<R>,
    _fiber: &[usize],
) -> Result<()> {
    Ok(())
}

/// Number of leading exact Darboux pairs of `pi` on the fiber indices:
/// pairs (f0,f1),(f2,f3),... with unit pairing, all other components of
/// the paired variables zero.
fn darboux_pair_count<R: Scalar>(pi: &PolyVectorField<R>, fiber: &[usize]) -> usize {
    let mut k = 0;
    while 2 * (k + 1) <= fiber.len() {
        let a = fiber[2 * k];
        let b = fiber[2 * k + 1];
        let u = pi.component(&[a as u8, b as u8]);
        let is_unit_const = u.num_terms() == 1
            && u.constant_term() == R::one();
        if !is_unit_const {
            break;
        }
        // the paired variables must not appear in any other component
        let clean = pi.components().all(|(idx, jet)| {
            if jet.is_zero() {
                return true;
            }
            let touches = idx.contains(&(a as u8)) || idx.contains(&(b as u8));
            !touches || *idx == vec![a as u8, b as u8]
        });
        if !clean {
            break;
        }
        k += 1;
    }
    k
}

/// Extract the sub-bivector supported on `rest`, requiring the components
/// to be genuinely vertical (no dependence on the dropped pairing rules is
/// enforced by the caller).
fn vertical_block<R: Scalar>(
    pi: &PolyVectorField<R>,
    rest: &[usize],
) -> Result<PolyVectorField<R>> {
    let mut out = Skew::zero(pi.space(), 2, pi.order());
    for (idx, jet) in pi.components() {
        let inside = idx.iter().all(|&i| rest.contains(&(i as usize)));
        if inside {
            out = out.add(&Skew::from_components(
                pi.space(),
                2,
                [(idx.clone(), jet.clone())],
            )?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcore::jet::space;
    use crate::jetcore::scalar::{rat_int, Rat};
    use crate::jetcore::tensor::Skew;
    use std::sync::Arc;

    fn n8() -> OrderBound {
        OrderBound::UpTo(8)
    }

    fn coord(sp: &Arc<crate::jetcore::jet::Space>, i: usize) -> Jet<Rat> {
        Jet::coordinate(sp, i, n8())
    }

    pub(crate) fn so3_field(sp: &Arc<crate::jetcore::jet::Space>) -> PolyVectorField<Rat> {
        let x = coord(sp, 0);
        let y = coord(sp, 1);
        let z = coord(sp, 2);
        Skew::from_components(
            sp,
            2,
            [(vec![1, 2], x), (vec![0, 2], y.neg()), (vec![0, 1], z)],
        )
        .unwrap()
    }

    #[test]
    fn jacobiator_examples() {
        // every 2D bivector is Poisson
        let sp2 = space(&["x", "y"]);
        let x = coord(&sp2, 0);
        let x4 = x.mul(&x).mul(&x).mul(&x);
        let pi2 = Skew::from_components(&sp2, 2, [(vec![0, 1], x4)]).unwrap();
        assert!(jacobiator(&pi2).unwrap().is_zero());

        // so(3) is Poisson
        let sp = space(&["x", "y", "z"]);
        assert!(jacobiator(&so3_field(&sp)).unwrap().is_zero());

        // planted violation: x dx^dy + y dy^dz + z dz^dx, cross-checked by
        // the brute-force cyclic oracle on coordinate functions
        let bad = Skew::from_components(
            &sp,
            2,
            [
                (vec![0, 1], coord(&sp, 0)),
                (vec![1, 2], coord(&sp, 1)),
                (vec![0, 2], coord(&sp, 2).neg()),
            ],
        )
        .unwrap();
        let jac = jacobiator(&bad).unwrap();
        assert!(!is_zero_upto(&jac));
        let bk = |f: &Jet<Rat>, g: &Jet<Rat>| bad.eval_on_differentials(&[f.clone(), g.clone()]).unwrap();
        let (f, g, h) = (coord(&sp, 0), coord(&sp, 1), coord(&sp, 2));
        let cyc = bk(&f, &bk(&g, &h))
            .add(&bk(&g, &bk(&h, &f)))
            .add(&bk(&h, &bk(&f, &g)));
        let jac_eval = jac.eval_on_differentials(&[f, g, h]).unwrap();
        assert!(jac_eval.eq_through(&cyc, 6));
        // PoissonJet constructor rejects it
        assert!(matches!(PoissonJet::new(bad), Err(Error::NotPoisson(_))));
    }

    #[test]
    fn hamiltonian_examples() {
        let sp = space(&["x", "y", "z"]);
        let pi = PoissonJet::new(so3_field(&sp)).unwrap();
        // X_x = z d/dy - y d/dz
        let xf = hamiltonian_field(&pi, &coord(&sp, 0)).unwrap();
        let expect = Skew::from_components(
            &sp,
            1,
            [(vec![1], coord(&sp, 2)), (vec![2], coord(&sp, 1).neg())],
        )
        .unwrap();
        assert!(xf.eq_through(&expect, 7));
        // constants have zero Hamiltonian field
        let c = Jet::constant(&sp, rat_int(5), n8());
        assert!(hamiltonian_field(&pi, &c).unwrap().is_zero());
        // Darboux case: X_x = d/dy
        let spd = space(&["x", "y"]);
        let dxy = Skew::from_components(
            &spd,
            2,
            [(vec![0, 1], Jet::constant(&spd, rat_int(1), n8()))],
        )
        .unwrap();
        let pid = PoissonJet::new(dxy).unwrap();
        let h = hamiltonian_field(&pid, &coord(&spd, 0)).unwrap();
        let dy = PolyVectorField::coordinate_field(&spd, 1, n8());
        assert!(h.eq_through(&dy, 7));
    }

    #[test]
    fn hamiltonian_implies_poisson_and_leibniz() {
        let sp = space(&["x", "y", "z"]);
        let pi = PoissonJet::new(so3_field(&sp)).unwrap();
        let f = coord(&sp, 0).mul(&coord(&sp, 1)).add(&coord(&sp, 2));
        let g = coord(&sp, 2).mul(&coord(&sp, 2)).add(&coord(&sp, 0));
        let xf = hamiltonian_field(&pi, &f).unwrap();
        let (ok, _) = is_poisson_field(&pi, &xf).unwrap();
        assert!(ok);
        // X_{fg} = f X_g + g X_f
        let xfg = hamiltonian_field(&pi, &f.mul(&g)).unwrap();
        let rhs = hamiltonian_field(&pi, &g)
            .unwrap()
            .mul_jet(&f)
            .add(&hamiltonian_field(&pi, &f).unwrap().mul_jet(&g));
        assert!(xfg.eq_through(&rhs, 6));
    }

    #[test]
    fn rank_examples() {
        let sp = space(&["x", "y", "z"]);
        let pi = PoissonJet::new(so3_field(&sp)).unwrap();
        assert_eq!(rank_at_origin(&pi), 0);

        let sp5 = space(&["x", "y", "z1", "z2", "z3"]);
        let mut comps = vec![(
            vec![0u8, 1u8],
            Jet::constant(&sp5, rat_int(1), n8()),
        )];
        comps.push((vec![3, 4], coord(&sp5, 2)));
        comps.push((vec![2, 4], coord(&sp5, 3).neg()));
        comps.push((vec![2, 3], coord(&sp5, 4)));
        let pi5 = PoissonJet::new(Skew::from_components(&sp5, 2, comps).unwrap()).unwrap();
        assert_eq!(rank_at_origin(&pi5), 2);

        let sp4 = space(&["x", "y", "z", "w"]);
        let pi4 = PoissonJet::new(
            Skew::from_components(
                &sp4,
                2,
                [
                    (vec![0, 1], Jet::constant(&sp4, rat_int(1), n8())),
                    (vec![2, 3], Jet::constant(&sp4, rat_int(1), n8())),
                ],
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(rank_at_origin(&pi4), 4);
    }

    #[test]
    fn poisson_field_examples() {
        // the non-tame example from the tameness discussion
        let sp = space(&["x", "y"]);
        let x = coord(&sp, 0);
        let y = coord(&sp, 1);
        let x4 = x.mul(&x).mul(&x).mul(&x);
        let pi = PoissonJet::new(Skew::from_components(&sp, 2, [(vec![0, 1], x4.clone())]).unwrap())
            .unwrap();
        let xf = Skew::from_components(
            &sp,
            1,
            [
                (vec![0], x.mul(&x)),
                (vec![1], x.mul(&y).mul_rat(&rat_int(2))),
            ],
        )
        .unwrap();
        let yf = Skew::from_components(&sp, 1, [(vec![1], x.clone())]).unwrap();
        assert!(is_poisson_field(&pi, &xf).unwrap().0);
        assert!(is_poisson_field(&pi, &yf).unwrap().0);

        // d/dx against so(3) is not Poisson; certificate is dy^dz
        let sp3 = space(&["x", "y", "z"]);
        let pi3 = PoissonJet::new(so3_field(&sp3)).unwrap();
        let dx = PolyVectorField::coordinate_field(&sp3, 0, n8());
        let (ok, cert) = is_poisson_field(&pi3, &dx).unwrap();
        assert!(!ok);
        let expect = Skew::from_components(
            &sp3,
            2,
            [(vec![1, 2], Jet::constant(&sp3, rat_int(1), n8()))],
        )
        .unwrap();
        assert!(cert.eq_through(&expect, 6));
    }

    #[test]
    fn leafwise_pairing_nontame_example() {
        let sp = space(&["x", "y"]);
        let x = coord(&sp, 0);
        let y = coord(&sp, 1);
        let x4 = x.mul(&x).mul(&x).mul(&x);
        let pi = PoissonJet::new(Skew::from_components(&sp, 2, [(vec![0, 1], x4)]).unwrap())
            .unwrap();
        let xf = Skew::from_components(
            &sp,
            1,
            [
                (vec![0], x.mul(&x)),
                (vec![1], x.mul(&y).mul_rat(&rat_int(2))),
            ],
        )
        .unwrap();
        let yf = Skew::from_components(&sp, 1, [(vec![1], x.clone())]).unwrap();
        let report = leafwise_pairing(&pi, &xf, &yf).unwrap();
        assert!(!report.is_jet());
        // reduced ratio is exactly 1/x
        assert!(report.vertical.num.eq_through(&Jet::constant(&sp, rat_int(1), n8()), 8));
        assert!(report.vertical.den.eq_through(&x, 8));
    }

    #[test]
    fn leafwise_pairing_darboux() {
        let sp = space(&["x", "y"]);
        let one = Jet::constant(&sp, rat_int(1), n8());
        let pi =
            PoissonJet::new(Skew::from_components(&sp, 2, [(vec![0, 1], one.clone())]).unwrap())
                .unwrap();
        let dx = PolyVectorField::coordinate_field(&sp, 0, n8());
        let dy = PolyVectorField::coordinate_field(&sp, 1, n8());
        let r = leafwise_pairing(&pi, &dx, &dy).unwrap();
        assert!(r.value().unwrap().eq_through(&one, 8));

        // pairing of X_h with any Y is -Y(h)
        let h = coord(&sp, 0).mul(&coord(&sp, 1)).add(&coord(&sp, 1));
        let xh = hamiltonian_field(&pi, &h).unwrap();
        let yf = Skew::from_components(
            &sp,
            1,
            [(vec![0], coord(&sp, 1)), (vec![1], coord(&sp, 0).mul(&coord(&sp, 0)))],
        )
        .unwrap();
        let r2 = leafwise_pairing(&pi, &xh, &yf).unwrap();
        assert!(r2.value().unwrap().eq_through(&yf.apply(&h).neg(), 6));
    }

    #[test]
    fn leafwise_pairing_hamiltonian_bracket() {
        // pairing(X_f, X_g) = {f,g} in the 2D nondegenerate case
        let sp = space(&["x", "y"]);
        let one = Jet::constant(&sp, rat_int(1), n8());
        let pi =
            PoissonJet::new(Skew::from_components(&sp, 2, [(vec![0, 1], one)]).unwrap()).unwrap();
        let f = coord(&sp, 0).mul(&coord(&sp, 0)).add(&coord(&sp, 1));
        let g = coord(&sp, 0).mul(&coord(&sp, 1));
        let xf = hamiltonian_field(&pi, &f).unwrap();
        let xg = hamiltonian_field(&pi, &g).unwrap();
        let bracket = pi
            .bivector()
            .eval_on_differentials(&[f.clone(), g.clone()])
            .unwrap();
        let r = leafwise_pairing(&pi, &xf, &xg).unwrap();
        assert!(r.value().unwrap().eq_through(&bracket, 6));
    }
}
