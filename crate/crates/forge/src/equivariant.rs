//! Finite-group machinery and the equivariant normalization pipeline:
//! action validation, Bochner linearization, foliation normalization, the
//! Moser field of an interpolating path, group averaging, time-1 flows,
//! and the end-to-end equivariant splitting and linearization drivers.

use std::sync::Arc;

use crate::coupling::{self, GeometricData};
use crate::error::{Error, Result};
use crate::jetcore::jet::{Jet, OrderBound, Space};
use crate::jetcore::map::JetMap;
use crate::jetcore::scalar::{Rat, Scalar, TPoly};
use crate::jetcore::tensor::{PolyVectorField, Skew};
use crate::liealg::LieAlgebraSC;
use crate::linalg::{self, RatMat};
use crate::poisson::{self, PoissonJet};
use crate::splitting::{self, SplitResult};

/// A vector field whose jet coefficients are polynomials in the formal
/// path parameter.
pub type TimePolyField = PolyVectorField<TPoly>;

/// One element of a finite action: a rational matrix or, before Bochner
/// linearization, a jet map fixing the origin.
#[derive(Clone, Debug)]
pub enum GroupElement {
    Matrix(RatMat),
    Map(JetMap<Rat>),
}

impl GroupElement {
    /// The element as a jet map on the given space.
    pub fn as_map(&self, space: &Arc<Space>) -> JetMap<Rat> {
        match self {
            GroupElement::Matrix(m) => JetMap::linear(space, space, &to_scalar(m), OrderBound::Exact),
            GroupElement::Map(f) => f.clone(),
        }
    }

    pub fn linear_part(&self) -> RatMat {
        match self {
            GroupElement::Matrix(m) => m.clone(),
            GroupElement::Map(f) => f.linear_part(),
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, GroupElement::Matrix(_))
    }
}

fn to_scalar(m: &RatMat) -> Vec<Vec<Rat>> {
    m.clone()
}

/// A finite set of invertible transformations fixing the origin, expected
/// to be closed under composition.
#[derive(Clone, Debug)]
pub struct FiniteGroupAction {
    dim: usize,
    elements: Vec<GroupElement>,
}

impl FiniteGroupAction {
    pub fn new(dim: usize, elements: Vec<GroupElement>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::NotAGroup("element set is empty".into()));
        }
        for e in &elements {
            let d = match e {
                GroupElement::Matrix(m) => m.len(),
                GroupElement::Map(f) => f.dim(),
            };
            if d != dim {
                return Err(Error::VarMismatch(format!(
                    "element dimension {d} does not match action dimension {dim}"
                )));
            }
        }
        Ok(FiniteGroupAction { dim, elements })
    }

    pub fn from_matrices(mats: Vec<RatMat>) -> Result<Self> {
        let dim = mats.first().map(|m| m.len()).unwrap_or(0);
        FiniteGroupAction::new(dim, mats.into_iter().map(GroupElement::Matrix).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn is_linear(&self) -> bool {
        self.elements.iter().all(GroupElement::is_linear)
    }

    /// The matrices of a linear action.
    pub fn matrices(&self) -> Result<Vec<RatMat>> {
        self.elements
            .iter()
            .map(|e| match e {
                GroupElement::Matrix(m) => Ok(m.clone()),
                GroupElement::Map(_) => Err(Error::NotAGroup(
                    "action contains a nonlinear element".into(),
                )),
            })
            .collect()
    }

    /// Conjugate a linear action by an invertible matrix: g -> C g C^{-1}.
    pub fn conjugate_linear(&self, c: &RatMat) -> Result<FiniteGroupAction> {
        let cinv = linalg::invert_scalar_matrix(c)
            .ok_or_else(|| Error::SingularLinearPart("conjugating matrix is singular".into()))?;
        let mats = self
            .matrices()?
            .iter()
            .map(|g| linalg::mat_mul(&linalg::mat_mul(c, g), &cinv))
            .collect();
        FiniteGroupAction::from_matrices(mats)
    }
}

/// One stage record of a pipeline report.
#[derive(Clone, Debug)]
pub struct Stage {
    pub name: String,
    pub ok: bool,
    pub detail: String,
    pub order: Option<u32>,
}

impl Stage {
    fn pass(name: &str, detail: impl Into<String>, order: Option<u32>) -> Self {
        Stage {
            name: name.into(),
            ok: true,
            detail: detail.into(),
            order,
        }
    }

    fn fail(name: &str, detail: impl Into<String>, order: Option<u32>) -> Self {
        Stage {
            name: name.into(),
            ok: false,
            detail: detail.into(),
            order,
        }
    }
}

/// Result of the action validation: group axioms plus invariance of the
/// structure under every element.
#[derive(Clone, Debug)]
pub struct ActionReport {
    pub group_ok: bool,
    pub invariant: bool,
    pub stages: Vec<Stage>,
}

impl ActionReport {
    pub fn all_pass(&self) -> bool {
        self.group_ok && self.invariant
    }
}

fn maps_eq_through(a: &JetMap<Rat>, b: &JetMap<Rat>, d: u32) -> bool {
    a.eq_through(b, d)
}

/// Check group axioms (identity, closure, inverses up to the working
/// order) and invariance of the structure under each element.
pub fn validate_action(g: &FiniteGroupAction, pi: &PoissonJet<Rat>) -> Result<ActionReport> {
    if g.dim() != pi.dim() {
        return Err(Error::VarMismatch(
            "action dimension does not match the structure".into(),
        ));
    }
    let space = pi.bivector().space();
    let cap = pi.order().as_u32().unwrap_or(8);
    let mut stages = Vec::new();
    let maps: Vec<JetMap<Rat>> = g.elements().iter().map(|e| e.as_map(space)).collect();
    let id = JetMap::identity(space, OrderBound::UpTo(cap));
    let mut group_ok = maps.iter().any(|m| maps_eq_through(m, &id, cap));
    if !group_ok {
        stages.push(Stage::fail("identity", "identity element missing", Some(cap)));
    } else {
        stages.push(Stage::pass("identity", "identity element present", Some(cap)));
    }
    let mut closure_ok = true;
    'outer: for (i, a) in maps.iter().enumerate() {
        for (j, b) in maps.iter().enumerate() {
            let prod = JetMap::compose(a, b)?.truncated(OrderBound::UpTo(cap));
            if !maps.iter().any(|m| maps_eq_through(m, &prod, cap)) {
                closure_ok = false;
                stages.push(Stage::fail(
                    "closure",
                    format!("product of elements {i} and {j} is not in the set"),
                    Some(cap),
                ));
                break 'outer;
            }
        }
    }
    if closure_ok {
        stages.push(Stage::pass("closure", "element set closed under composition", Some(cap)));
    }
    let mut inverses_ok = true;
    for (i, a) in maps.iter().enumerate() {
        let inv = match a.invert_to(cap) {
            Ok(v) => v,
            Err(_) => {
                inverses_ok = false;
                stages.push(Stage::fail(
                    "inverses",
                    format!("element {i} has a singular linear part"),
                    Some(cap),
                ));
                break;
            }
        };
        if !maps.iter().any(|m| maps_eq_through(m, &inv.truncated(OrderBound::UpTo(cap)), cap)) {
            inverses_ok = false;
            stages.push(Stage::fail(
                "inverses",
                format!("inverse of element {i} is not in the set"),
                Some(cap),
            ));
            break;
        }
    }
    if inverses_ok {
        stages.push(Stage::pass("inverses", "inverses present", Some(cap)));
    }
    group_ok = group_ok && closure_ok && inverses_ok;
    let mut invariant = true;
    for (i, m) in maps.iter().enumerate() {
        let pushed = pi.bivector().pushforward(m)?;
        let diff = pushed.sub(pi.bivector());
        if poisson::is_zero_upto(&diff) {
            stages.push(Stage::pass(
                "invariance",
                format!("element {i} preserves the structure"),
                diff.order().as_u32(),
            ));
        } else {
            invariant = false;
            stages.push(Stage::fail(
                "invariance",
                format!("element {i} moves the structure"),
                diff.order().as_u32(),
            ));
        }
    }
    Ok(ActionReport {
        group_ok,
        invariant,
        stages,
    })
}

/// Bochner linearization: conjugate a finite action of jet maps to its
/// linear parts by averaging the linearized elements.
pub fn bochner_linearize_action(
    g: &FiniteGroupAction,
    space: &Arc<Space>,
    cap: u32,
) -> Result<(JetMap<Rat>, FiniteGroupAction)> {
    let maps: Vec<JetMap<Rat>> = g.elements().iter().map(|e| e.as_map(space)).collect();
    // group axioms up to the working order
    let id = JetMap::identity(space, OrderBound::UpTo(cap));
    if !maps.iter().any(|m| maps_eq_through(m, &id, cap)) {
        return Err(Error::NotAGroup("identity element missing".into()));
    }
    for (i, a) in maps.iter().enumerate() {
        for (j, b) in maps.iter().enumerate() {
            let prod = JetMap::compose(a, b)?;
            if !maps.iter().any(|m| maps_eq_through(m, &prod.truncated(OrderBound::UpTo(cap)), cap)) {
                return Err(Error::NotAGroup(format!(
                    "product of elements {i} and {j} leaves the set"
                )));
            }
        }
    }
    let scale = Rat::new(1.into(), (maps.len() as i64).into());
    let n = space.dim();
    let mut comps: Vec<Jet<Rat>> = vec![Jet::zero(space, OrderBound::UpTo(cap)); n];
    for m in &maps {
        let lin = m.linear_part();
        let lin_inv = linalg::invert_scalar_matrix(&lin).ok_or_else(|| {
            Error::SingularLinearPart("group element has a singular linear part".into())
        })?;
        for (i, comp) in comps.iter_mut().enumerate() {
            let mut acc = Jet::zero(space, OrderBound::UpTo(cap));
            for (j, mj) in m.components().iter().enumerate() {
                if !lin_inv[i][j].is_zero() {
                    acc = acc.add(&mj.mul_rat(&lin_inv[i][j]));
                }
            }
            *comp = comp.add(&acc.mul_rat(&scale));
        }
    }
    let chart = JetMap::new(space.clone(), space.clone(), comps)?.frozen_exact();
    let linear = FiniteGroupAction::from_matrices(
        maps.iter().map(|m| m.linear_part()).collect(),
    )?;
    // conjugation property: chart o g = lin(g) o chart through the order
    for (m, lin) in maps.iter().zip(linear.matrices()?) {
        let lhs = JetMap::compose(&chart, m)?;
        let lmap = JetMap::linear(space, space, &lin, OrderBound::Exact);
        let rhs = JetMap::compose(&lmap, &chart)?;
        if !lhs.eq_through(&rhs, cap) {
            return Err(Error::Internal(
                "Bochner chart fails the conjugation identity".into(),
            ));
        }
    }
    Ok((chart, linear))
}

/// Average a time-dependent vector field over a finite linear action.
pub fn average_field<R: Scalar>(
    x: &PolyVectorField<R>,
    g: &FiniteGroupAction,
) -> Result<PolyVectorField<R>> {
    if x.dim() != g.dim() {
        return Err(Error::VarMismatch(
            "field dimension does not match the action".into(),
        ));
    }
    let space = x.space();
    let scale = Rat::new(1.into(), (g.len() as i64).into());
    let mut acc: PolyVectorField<R> = Skew::zero(space, 1, x.order());
    for e in g.elements() {
        let m = e.linear_part();
        let lin: Vec<Vec<R>> = m
            .iter()
            .map(|row| row.iter().map(|v| R::from_rat(v.clone())).collect())
            .collect();
        let gmap = JetMap::linear(space, space, &lin, OrderBound::Exact);
        acc = acc.add(&x.pushforward(&gmap)?);
    }
    Ok(acc.map_jets(|j| j.mul_rat(&scale)))
}

/// Time-1 map of a time-dependent vector field with spatial vanishing
/// order at least two, by Picard iteration with exact polynomial time
/// integrals; cap + 1 iterations suffice at truncation order cap.
pub fn flow_time1(x: &TimePolyField) -> Result<JetMap<Rat>> {
    if x.degree() != 1 {
        return Err(Error::DegreeMismatch("flow needs a vector field".into()));
    }
    let space = x.space();
    if let Some(low) = x.low_degree() {
        if low < 2 {
            return Err(Error::LinearPartNotZero(format!(
                "flow generator has spatial vanishing order {low}"
            )));
        }
    } else {
        return Ok(JetMap::identity(space, OrderBound::Exact));
    }
    let cap = match x.order() {
        OrderBound::UpTo(c) => c,
        OrderBound::Exact => x
            .components()
            .map(|(_, j)| j.max_degree())
            .max()
            .unwrap_or(2),
    };
    let work = OrderBound::UpTo(cap);
    let xt: Vec<Jet<TPoly>> = (0..space.dim())
        .map(|i| {
            let c = x.component(&[i as u8]);
            c.truncated(work)
        })
        .collect();
    let mut phi: Vec<Jet<TPoly>> = (0..space.dim())
        .map(|i| Jet::coordinate(space, i, work))
        .collect();
    for _ in 0..=cap {
        let mut next = Vec::with_capacity(space.dim());
        for (i, xi) in xt.iter().enumerate() {
            let pulled = xi.substitute(&phi)?;
            next.push(Jet::coordinate(space, i, work).add(&pulled.int_dt().truncated(work)));
        }
        phi = next;
    }
    let comps: Vec<Jet<Rat>> = phi
        .iter()
        .map(|c| c.eval_t(&Rat::from_integer(1.into())))
        .collect();
    Ok(JetMap::new(space.clone(), space.clone(), comps)?.frozen_exact())
}

/// The Moser field of a t-polynomial Poisson path: run the parametrized
/// splitting, set phi_t to the chart normalized by phi_0 = id, and return
/// d(phi_t)/dt composed with the inverse.
pub fn moser_field(pi_t: &PoissonJet<TPoly>) -> Result<TimePolyField> {
    let field = pi_t.bivector();
    let jac = poisson::jacobiator(field)?;
    if !poisson::is_zero_upto(&jac) {
        return Err(Error::NotPoissonPath(
            "jacobiator of the path is nonzero for formal t".into(),
        ));
    }
    // the 1-jet must not drift with t
    for (_, jet) in field.components() {
        for (m, c) in jet.terms() {
            if m.degree() <= 1 && !c.is_constant() {
                return Err(Error::OneJetDrift(format!(
                    "coefficient {} varies with t at degree {}",
                    c.render(),
                    m.degree()
                )));
            }
        }
    }
    let res_t = splitting::weinstein_split(pi_t)?;
    if !res_t.transverse.bivector().t_constant() {
        return Err(Error::Internal(
            "transverse part of the parametrized splitting varies with t".into(),
        ));
    }
    let cap = field.order().as_u32().unwrap_or(8);
    let psi_t = res_t.chart.clone();
    let psi_0 = psi_t.eval_t(&Rat::from_integer(0.into())).lift_t();
    let phi_t = JetMap::compose(&psi_t.invert_to(cap + 1)?, &psi_0)?
        .truncated(OrderBound::UpTo(cap + 1));
    // X_t = (d phi_t / dt) o phi_t^{-1}; keep one internal degree of
    // headroom so the time-1 flow supports pushforwards at the data order
    let dphi = phi_t.d_dt();
    let phi_inv = phi_t.invert_to(cap + 1)?;
    let space = field.space();
    let mut comps = Vec::new();
    for (i, d) in dphi.iter().enumerate() {
        let moved = phi_inv.pull_jet(&d.rename(phi_inv.target()))?;
        if !moved.is_zero() {
            comps.push((vec![i as u8], moved.rename(space)));
        }
    }
    let x_t: TimePolyField = Skew::from_components(space, 1, comps)?;
    if let Some(low) = x_t.low_degree() {
        if low < 2 {
            return Err(Error::OneJetDrift(format!(
                "Moser field has spatial vanishing order {low}"
            )));
        }
    }
    // the defining equation L_{X_t} Pi_t = -d Pi_t / dt must hold
    let lie = x_t.schouten(field)?;
    let residual = lie.add(&field.d_dt());
    if !poisson::is_zero_upto(&residual) {
        return Err(Error::Internal(format!(
            "Moser equation residual through order {}",
            residual.order()
        )));
    }
    Ok(x_t)
}

/// Lemma-3 normalization: make the symplectic foliation the product
/// foliation by transporting each point to the zero fiber along the
/// horizontal lift of the straight-line retraction of the base.
pub fn normalize_foliation(pi: &PoissonJet<Rat>, g: &FiniteGroupAction) -> Result<JetMap<Rat>> {
    let report = validate_action(g, pi)?;
    if !report.invariant {
        return Err(Error::NotInvariant(
            "action does not preserve the structure".into(),
        ));
    }
    if !report.group_ok {
        return Err(Error::NotAGroup("element set fails the group axioms".into()));
    }
    let base_dim = poisson::rank_at_origin(pi);
    foliation_chart(pi, base_dim)
}

/// The foliation-normalizing chart itself (no action checks); `base_dim`
/// columns are assumed to carry the standard Darboux block at the origin.
fn foliation_chart(pi: &PoissonJet<Rat>, base_dim: usize) -> Result<JetMap<Rat>> {
    let field = pi.bivector();
    let space = field.space();
    let cap = field.order().as_u32().ok_or_else(|| {
        Error::OrderMismatch("truncate exact input before normalizing".into())
    })?;
    let n = space.dim();
    let data = coupling::extract_geometric_data(pi, base_dim)?;
    // Picard iteration for c(t, x) with dc/dt = -sum_a x_a Hor_a(c)
    let work = OrderBound::UpTo(cap + 1);
    let hor: Vec<Vec<Jet<TPoly>>> = (0..base_dim)
        .map(|a| {
            (0..n)
                .map(|j| {
                    let mut comp = if j == a {
                        Jet::constant(space, Rat::from_integer(1.into()), work)
                    } else {
                        Jet::zero(space, work)
                    };
                    let gamma = data.connection()[a].component(&[j as u8]);
                    if !gamma.is_zero() {
                        comp = comp.add(&gamma);
                    }
                    comp.lift_t()
                })
                .collect()
        })
        .collect();
    let coords_t: Vec<Jet<TPoly>> = (0..n)
        .map(|i| Jet::<Rat>::coordinate(space, i, work).lift_t())
        .collect();
    let mut c = coords_t.clone();
    for _ in 0..=cap + 1 {
        let mut next = Vec::with_capacity(n);
        for j in 0..n {
            let mut rhs: Jet<TPoly> = Jet::zero(space, work);
            for (a, h) in hor.iter().enumerate() {
                if h[j].is_zero() {
                    continue;
                }
                let pulled = h[j].substitute(&c)?;
                rhs = rhs.add(&pulled.mul(&coords_t[a]));
            }
            next.push(coords_t[j].add(&rhs.neg().int_dt().truncated(work)));
        }
        c = next;
    }
    let one = Rat::from_integer(1.into());
    let mut comps: Vec<Jet<Rat>> = Vec::with_capacity(n);
    for (j, cj) in c.iter().enumerate() {
        if j < base_dim {
            comps.push(Jet::coordinate(space, j, work));
        } else {
            comps.push(cj.eval_t(&one));
        }
    }
    Ok(JetMap::new(space.clone(), space.clone(), comps)?.frozen_exact())
}

/// Output of the equivariant splitting pipeline.
#[derive(Clone, Debug)]
pub struct EquivariantSplit {
    /// Full chart from the input coordinates to the split coordinates.
    pub chart: JetMap<Rat>,
    pub split: SplitResult<Rat>,
    /// The (conjugated) linear action in the final coordinates.
    pub linear_action: FiniteGroupAction,
    pub stages: Vec<Stage>,
}

/// Equivariant splitting: Bochner linearization, invariant block
/// normalization, 1-jet normalization, foliation normalization, the
/// interpolating path, the averaged Moser flow.
pub fn equivariant_split(
    pi: &PoissonJet<Rat>,
    g: &FiniteGroupAction,
) -> Result<EquivariantSplit> {
    let mut stages = Vec::new();
    let space = pi.bivector().space().clone();
    let cap = pi.order().as_u32().ok_or_else(|| {
        Error::OrderMismatch("truncate exact input to a session order first".into())
    })?;
    // stage: Bochner linearization when needed
    let (mut current, mut action, mut chart) = if g.is_linear() {
        stages.push(Stage::pass("bochner", "action already linear", None));
        (
            pi.clone(),
            g.clone(),
            JetMap::identity(&space, OrderBound::Exact),
        )
    } else {
        let (h, lin) = bochner_linearize_action(g, &space, cap)?;
        let moved = pi.bivector().pushforward(&h)?;
        stages.push(Stage::pass(
            "bochner",
            "action conjugated to its linear parts",
            moved.order().as_u32(),
        ));
        (PoissonJet::new_deferred(moved)?, lin, h)
    };
    // stage: validation
    let report = validate_action(&action, &current)?;
    if !report.group_ok {
        return Err(Error::NotAGroup(
            "element set fails the group axioms".into(),
        ));
    }
    if !report.invariant {
        return Err(Error::NotInvariant(
            "action does not preserve the structure".into(),
        ));
    }
    stages.push(Stage::pass("validate-action", "group axioms and invariance hold", None));

    // stage: invariant linear block normalization
    let p0 = poisson_origin_matrix(&current)?;
    let k2 = linalg::mat_rank(&p0);
    let block = invariant_block_change(&p0, &action)?;
    let lin_chart = JetMap::linear(&space, &space, &to_scalar(&block), OrderBound::Exact);
    current = PoissonJet::new_deferred(current.bivector().pushforward(&lin_chart)?)?;
    action = action.conjugate_linear(&block)?;
    chart = JetMap::compose(&lin_chart, &chart)?.frozen_exact();
    stages.push(Stage::pass(
        "block-normalize",
        format!("rank {k2}; origin matrix in standard form"),
        current.order().as_u32(),
    ));

    // stage: equivariant 1-jet normalization
    current = one_jet_normalize(&mut chart, current, &action, k2, cap, &mut stages)?;

    // stage: foliation normalization
    let fol = foliation_chart(&current, k2)?;
    current = PoissonJet::new_deferred(current.bivector().pushforward(&fol)?)?;
    chart = JetMap::compose_truncated(&fol, &chart, OrderBound::UpTo(cap + 1))?.frozen_exact();
    let equivariance_ok = check_equivariance(&fol, &action, cap);
    stages.push(Stage {
        name: "normalize-foliation".into(),
        ok: equivariance_ok,
        detail: if equivariance_ok {
            "retraction transport chart is equivariant".into()
        } else {
            "retraction transport chart fails equivariance".into()
        },
        order: current.order().as_u32(),
    });
    if !equivariance_ok {
        return Err(Error::Internal(
            "foliation normalization lost equivariance".into(),
        ));
    }

    // stage: build the path data
    let data0 = coupling::extract_geometric_data(&current, k2)?;
    // the vertical part must be independent of the base coordinates
    for (_, jet) in data0.vertical().components() {
        for (m, _) in jet.terms() {
            if m.0[..k2].iter().any(|&e| e > 0) {
                return Err(Error::Internal(
                    "vertical part depends on base coordinates after normalization".into(),
                ));
            }
        }
    }
    let fiber: Vec<usize> = (k2..space.dim()).collect();
    let trivial = trivial_data_like(&data0)?;
    stages.push(Stage::pass(
        "path-data",
        "endpoint data share the vertical component",
        data0.order().as_u32(),
    ));

    // stage: formal interpolation and reconstruction
    let data_t = coupling::interpolate_path_formal(&data0, &trivial)?;
    let pi_t = coupling::reconstruct_bivector(&data_t)?;
    let jac_t = poisson::jacobiator(&pi_t)?;
    if !poisson::is_zero_upto(&jac_t) {
        return Err(Error::NotPoissonPath(
            "interpolated path is not Poisson for formal t".into(),
        ));
    }
    stages.push(Stage::pass(
        "interpolate",
        "path is Poisson for formal t",
        pi_t.order().as_u32(),
    ));

    // stage: Moser field, averaging, flow
    let x_t = moser_field(&PoissonJet::new_deferred(pi_t.clone())?)?;
    let x_g = average_field(&x_t, &action)?;
    // averaged field still solves the Moser equation
    let lie = x_g.schouten(&pi_t)?;
    let residual = lie.add(&pi_t.d_dt());
    if !poisson::is_zero_upto(&residual) {
        return Err(Error::Internal(
            "averaged field does not solve the Moser equation".into(),
        ));
    }
    // and is a fixed point of averaging
    let x_gg = average_field(&x_g, &action)?;
    if !poisson::is_zero_upto(&x_gg.sub(&x_g)) {
        return Err(Error::Internal("averaging is not idempotent".into()));
    }
    stages.push(Stage::pass(
        "moser-average",
        "averaged Moser field solves the isotopy equation",
        x_g.order().as_u32(),
    ));
    let flow = flow_time1(&x_g)?;
    current = PoissonJet::new_deferred(current.bivector().pushforward(&flow)?)?;
    chart = JetMap::compose_truncated(&flow, &chart, OrderBound::UpTo(cap + 1))?.frozen_exact();
    stages.push(Stage::pass(
        "flow",
        "time-1 flow of the averaged field applied",
        current.order().as_u32(),
    ));

    // final verification: split form and equivariance
    let target = splitting::split_space(k2 / 2, space.dim() - k2);
    let final_chart = JetMap::new(space.clone(), target.clone(), chart.components().to_vec())?;
    let final_field = current.bivector().rename(&target);
    let rep = splitting::verify_split_form(&final_field, k2 / 2);
    stages.push(Stage {
        name: "verify-split-form".into(),
        ok: rep.ok,
        detail: if rep.ok {
            "split normal form holds".into()
        } else {
            format!("{} violations", rep.violations.len())
        },
        order: rep.order.as_u32(),
    });
    if !rep.ok {
        return Err(Error::Internal(format!(
            "pipeline output is not in split form: {:?}",
            rep.violations.first()
        )));
    }
    let equi = check_equivariance(&chart, &action, cap);
    stages.push(Stage {
        name: "verify-equivariance".into(),
        ok: equi,
        detail: if equi {
            "final chart commutes with the linear action".into()
        } else {
            "final chart fails equivariance".into()
        },
        order: Some(cap),
    });
    if !equi {
        return Err(Error::Internal("final chart lost equivariance".into()));
    }
    // transverse structure on the z-coordinates
    let zspace = splitting::transverse_space(space.dim() - k2);
    let mut trans: PolyVectorField<Rat> = Skew::zero(&zspace, 2, final_field.order());
    for (idx, jet) in final_field.components() {
        if idx.iter().all(|&i| (i as usize) >= k2) {
            trans = trans.add(
                &Skew::from_components(&target, 2, [(idx.clone(), jet.clone())])?
                    .restrict(&zspace, &fiber)?,
            );
        }
    }
    let split = SplitResult {
        chart: final_chart.clone(),
        symplectic_rank: k2,
        transverse: PoissonJet::new_deferred(trans)?,
    };
    Ok(EquivariantSplit {
        chart: final_chart,
        split,
        linear_action: action,
        stages,
    })
}

fn poisson_origin_matrix(pi: &PoissonJet<Rat>) -> Result<RatMat> {
    let n = pi.dim();
    let mut m = vec![vec![Rat::from_integer(0.into()); n]; n];
    for (idx, jet) in pi.bivector().components() {
        let c = jet.constant_term();
        m[idx[0] as usize][idx[1] as usize] = c.clone();
        m[idx[1] as usize][idx[0] as usize] = -c;
    }
    Ok(m)
}

/// Whether a chart commutes with every element of a linear action through
/// degree `cap`.
pub fn check_equivariance(chart: &JetMap<Rat>, action: &FiniteGroupAction, cap: u32) -> bool {
    let Ok(mats) = action.matrices() else {
        return false;
    };
    let source = chart.source();
    for m in &mats {
        let lin_src = JetMap::linear(source, source, &to_scalar(m), OrderBound::Exact);
        let lin_tgt = JetMap::linear(chart.target(), chart.target(), &to_scalar(m), OrderBound::Exact);
        let lhs = match JetMap::compose(chart, &lin_src) {
            Ok(v) => v,
            Err(_) => return false,
        };
        let rhs = match JetMap::compose(&lin_tgt, chart) {
            Ok(v) => v,
            Err(_) => return false,
        };
        if !lhs.eq_through(&rhs, cap) {
            return false;
        }
    }
    true
}

/// Equivariant linear change that brings the origin matrix to standard
/// Darboux blocks on the leading coordinates while keeping the transverse
/// complement invariant under the action.
fn invariant_block_change(p0: &RatMat, action: &FiniteGroupAction) -> Result<RatMat> {
    let n = p0.len();
    let k2 = linalg::mat_rank(p0);
    // basis of the image of P0
    let image = column_space_basis(p0);
    debug_assert_eq!(image.len(), k2);
    // any projector onto the image, then averaged over the action
    let proj = projector_onto(&image, n)?;
    let mats = action.matrices()?;
    let scale = Rat::new(1.into(), (mats.len() as i64).into());
    let mut avg = vec![vec![Rat::from_integer(0.into()); n]; n];
    for m in &mats {
        let minv = linalg::invert_scalar_matrix(m)
            .ok_or_else(|| Error::SingularLinearPart("singular action matrix".into()))?;
        let term = linalg::mat_mul(&linalg::mat_mul(m, &proj), &minv);
        for i in 0..n {
            for j in 0..n {
                avg[i][j] = &avg[i][j] + &term[i][j] * &scale;
            }
        }
    }
    // columns: image basis followed by a kernel basis of the projector
    let kernel = kernel_basis(&avg);
    if kernel.len() != n - k2 {
        return Err(Error::Internal(
            "averaged projector has the wrong corank".into(),
        ));
    }
    let mut cols: Vec<Vec<Rat>> = image;
    cols.extend(kernel);
    // T maps new coordinates to old ones; coordinates transform by T^{-1}
    let t: RatMat = (0..n)
        .map(|i| (0..n).map(|j| cols[j][i].clone()).collect())
        .collect();
    let t_inv = linalg::invert_scalar_matrix(&t)
        .ok_or_else(|| Error::Internal("block basis is singular".into()))?;
    // the origin matrix in the new coordinates
    let p_new = linalg::congruence(&t_inv, p0);
    // skew-normalize inside the leading block
    let sub: RatMat = (0..k2)
        .map(|i| (0..k2).map(|j| p_new[i][j].clone()).collect())
        .collect();
    let (c_s, k) = linalg::skew_normal_form(&sub)?;
    if 2 * k != k2 {
        return Err(Error::Internal("block normalization changed the rank".into()));
    }
    let mut c_full = linalg::mat_identity(n);
    for i in 0..k2 {
        for j in 0..k2 {
            c_full[i][j] = c_s[i][j].clone();
        }
    }
    Ok(linalg::mat_mul(&c_full, &t_inv))
}

fn column_space_basis(p: &RatMat) -> Vec<Vec<Rat>> {
    let n = p.len();
    let mut basis: Vec<Vec<Rat>> = Vec::new();
    let mut work: Vec<Vec<Rat>> = Vec::new();
    for j in 0..n {
        let col: Vec<Rat> = (0..n).map(|i| p[i][j].clone()).collect();
        let mut v = col.clone();
        // reduce against current echelon
        for w in &work {
            if let Some(piv) = w.iter().position(|x| !x.is_zero()) {
                if !v[piv].is_zero() {
                    let f = &v[piv] / &w[piv];
                    for i in 0..n {
                        v[i] = &v[i] - &f * &w[i];
                    }
                }
            }
        }
        if v.iter().any(|x| !x.is_zero()) {
            work.push(v);
            basis.push(col);
        }
    }
    basis
}

fn projector_onto(basis: &[Vec<Rat>], n: usize) -> Result<RatMat> {
    // P = A (A^T A)^{-1} A^T for the column matrix A of the basis
    let k = basis.len();
    if k == 0 {
        return Ok(vec![vec![Rat::from_integer(0.into()); n]; n]);
    }
    let a: RatMat = (0..n)
        .map(|i| (0..k).map(|j| basis[j][i].clone()).collect())
        .collect();
    let at = linalg::mat_transpose(&a);
    let ata = linalg::mat_mul(&at, &a);
    let ata_inv = linalg::invert_scalar_matrix(&ata)
        .ok_or_else(|| Error::Internal("image basis is degenerate".into()))?;
    Ok(linalg::mat_mul(&linalg::mat_mul(&a, &ata_inv), &at))
}

fn kernel_basis(m: &RatMat) -> Vec<Vec<Rat>> {
    let n = m.len();
    let mut a = m.to_vec();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        let Some(pr) = (rank..n).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pr);
        let piv = a[rank][col].clone();
        for c in 0..n {
            a[rank][c] = &a[rank][c] / &piv;
        }
        for r in 0..n {
            if r != rank && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    a[r][c] = &a[r][c] - &f * &a[rank][c];
                }
            }
        }
        pivots.push((rank, col));
        rank += 1;
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let mut out = Vec::new();
    for free in 0..n {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![Rat::from_integer(0.into()); n];
        v[free] = Rat::from_integer(1.into());
        for &(r, c) in &pivots {
            v[c] = -a[r][free].clone();
        }
        out.push(v);
    }
    out
}

/// Equivariant 1-jet normalization: remove the degree-one discrepancy
/// against the product model by an averaged homological step.
fn one_jet_normalize(
    chart: &mut JetMap<Rat>,
    current: PoissonJet<Rat>,
    action: &FiniteGroupAction,
    k2: usize,
    cap: u32,
    stages: &mut Vec<Stage>,
) -> Result<PoissonJet<Rat>> {
    let field = current.bivector();
    let space = field.space();
    let lin_part = field.homogeneous_part(1);
    // target: only transverse components with transverse-variable coefficients
    let mut target: PolyVectorField<Rat> = Skew::zero(space, 2, lin_part.order());
    for (idx, jet) in lin_part.components() {
        if idx.iter().all(|&i| (i as usize) >= k2) {
            let kept = Jet::from_terms(
                space,
                jet.order(),
                jet.terms().filter_map(|(m, c)| {
                    if m.0[..k2].iter().all(|&e| e == 0) {
                        Some((m.clone(), c.clone()))
                    } else {
                        None
                    }
                }),
            );
            if !kept.is_zero() {
                target = target.add(&Skew::from_components(space, 2, [(idx.clone(), kept)])?);
            }
        }
    }
    let discrepancy = lin_part.sub(&target);
    if discrepancy.is_zero() {
        stages.push(Stage::pass("one-jet", "1-jet already in product form", None));
        return Ok(current);
    }
    let darboux = field.homogeneous_part(0);
    let darboux_rat = darboux.map_scalars(|c: &Rat| c.clone());
    let mats = action.matrices()?;
    let v = splitting::solve_bracket_equation(&darboux_rat, &discrepancy, 2, Some(&mats))?;
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
    let moved = field.pushforward(&step)?;
    let leftover = moved.homogeneous_part(1).sub(&target);
    if !poisson::is_zero_upto(&leftover) {
        return Err(Error::Internal("1-jet normalization left a residue".into()));
    }
    *chart = JetMap::compose_truncated(&step, chart, OrderBound::UpTo(cap + 1))?.frozen_exact();
    stages.push(Stage::pass(
        "one-jet",
        "degree-one discrepancy removed equivariantly",
        moved.order().as_u32(),
    ));
    Ok(PoissonJet::new_deferred(moved)?)
}

/// The product-model data with the same vertical part: zero connection and
/// the constant standard coupling form.
fn trivial_data_like(data: &GeometricData<Rat>) -> Result<GeometricData<Rat>> {
    let space = data.space().clone();
    let k2 = data.base_dim();
    let order = data.order();
    let connection = (0..k2)
        .map(|_| Skew::zero(&space, 1, order))
        .collect::<Vec<_>>();
    let mut coupling = vec![vec![Jet::zero(&space, OrderBound::Exact); k2]; k2];
    for p in 0..k2 / 2 {
        let one = Jet::constant(&space, Rat::from_integer(1.into()), OrderBound::Exact);
        coupling[2 * p][2 * p + 1] = one.clone();
        coupling[2 * p + 1][2 * p] = one.neg();
    }
    GeometricData::new(space, k2, data.vertical().clone(), connection, coupling)
}

/// Equivariant linearization: split equivariantly, then linearize the
/// transverse structure with per-degree averaged homological solutions.
pub fn equivariant_linearize(
    pi: &PoissonJet<Rat>,
    g: &FiniteGroupAction,
    algebra: &LieAlgebraSC,
) -> Result<(JetMap<Rat>, EquivariantSplit)> {
    let es = equivariant_split(pi, g)?;
    let k2 = es.split.symplectic_rank;
    let n = pi.dim();
    // the action restricted to the transverse block
    let zmats: Vec<RatMat> = es
        .linear_action
        .matrices()?
        .iter()
        .map(|m| {
            (k2..n)
                .map(|i| (k2..n).map(|j| m[i][j].clone()).collect())
                .collect()
        })
        .collect();
    let lam = splitting::linearize_with_symmetry(&es.split.transverse, algebra, Some(&zmats))?;
    // lift to the full split chart: identity on the symplectic block
    let target = es.chart.target().clone();
    let cap = pi.order().as_u32().unwrap_or(8);
    let zpos: Vec<usize> = (k2..n).collect();
    let mut comps: Vec<Jet<Rat>> = Vec::with_capacity(n);
    for i in 0..n {
        if i < k2 {
            comps.push(Jet::coordinate(&target, i, OrderBound::UpTo(cap + 1)));
        } else {
            comps.push(lam.component(i - k2).embed(&target, &zpos));
        }
    }
    let lift = JetMap::new(target.clone(), target.clone(), comps)?.frozen_exact();
    let chart =
        JetMap::compose_truncated(&lift, &es.chart, OrderBound::UpTo(cap + 1))?.frozen_exact();
    Ok((chart, es))
}
