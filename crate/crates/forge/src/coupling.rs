//! Geometric data on a product fibration: vertical Poisson structure,
//! Ehresmann connection, and coupling form. Extraction from a Poisson jet,
//! reconstruction, compatibility checking, and the interpolation that
//! connects two structures sharing a vertical component.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jetcore::jet::{same_space, Jet, OrderBound, Space};
use crate::jetcore::scalar::{Rat, Scalar, TPoly};
use crate::jetcore::tensor::{PolyVectorField, Skew};
use crate::poisson::{self, PoissonJet};

/// The coupling triple on the product fibration whose base is spanned by
/// the first `base_dim` coordinates.
#[derive(Clone, Debug)]
pub struct GeometricData<R: Scalar = Rat> {
    space: Arc<Space>,
    base_dim: usize,
    /// Vertical bivector: components only on fiber indices.
    vertical: PolyVectorField<R>,
    /// One vertical field per base coordinate: Hor(d/ds_a) = d/ds_a + connection[a].
    connection: Vec<PolyVectorField<R>>,
    /// Antisymmetric base-indexed coupling form F[a][b], jets on the whole space.
    coupling: Vec<Vec<Jet<R>>>,
}

impl<R: Scalar> GeometricData<R> {
    pub fn new(
        space: Arc<Space>,
        base_dim: usize,
        vertical: PolyVectorField<R>,
        connection: Vec<PolyVectorField<R>>,
        coupling: Vec<Vec<Jet<R>>>,
    ) -> Result<Self> {
        let n = space.dim();
        if base_dim % 2 != 0 || base_dim > n {
            return Err(Error::SchemaError(format!(
                "base dimension {base_dim} must be even and at most {n}"
            )));
        }
        if !same_space(vertical.space(), &space) || vertical.degree() != 2 {
            return Err(Error::VarMismatch("vertical bivector shape mismatch".into()));
        }
        for (idx, _) in vertical.components() {
            if idx.iter().any(|&i| (i as usize) < base_dim) {
                return Err(Error::SchemaError(
                    "vertical bivector touches a base coordinate".into(),
                ));
            }
        }
        if connection.len() != base_dim {
            return Err(Error::SchemaError(format!(
                "expected {base_dim} connection fields, got {}",
                connection.len()
            )));
        }
        for g in &connection {
            if g.degree() != 1 || !same_space(g.space(), &space) {
                return Err(Error::VarMismatch("connection field shape mismatch".into()));
            }
            for (idx, _) in g.components() {
                if (idx[0] as usize) < base_dim {
                    return Err(Error::SchemaError(
                        "connection field has a horizontal component".into(),
                    ));
                }
            }
        }
        if coupling.len() != base_dim || coupling.iter().any(|r| r.len() != base_dim) {
            return Err(Error::SchemaError("coupling form table shape mismatch".into()));
        }
        for a in 0..base_dim {
            for b in 0..base_dim {
                if !coupling[a][b].add(&coupling[b][a]).is_zero() {
                    return Err(Error::SchemaError(format!(
                        "coupling form is not antisymmetric at ({a},{b})"
                    )));
                }
            }
        }
        let data = GeometricData {
            space,
            base_dim,
            vertical,
            connection,
            coupling,
        };
        // nondegeneracy of the coupling form at the origin
        data.coupling_head()?;
        Ok(data)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.space.dim() - self.base_dim
    }

    pub fn fiber_indices(&self) -> Vec<usize> {
        (self.base_dim..self.space.dim()).collect()
    }

    pub fn vertical(&self) -> &PolyVectorField<R> {
        &self.vertical
    }

    pub fn connection(&self) -> &[PolyVectorField<R>] {
        &self.connection
    }

    pub fn coupling(&self) -> &[Vec<Jet<R>>] {
        &self.coupling
    }

    pub fn order(&self) -> OrderBound {
        let mut o = self.vertical.order();
        for g in &self.connection {
            o = o.min(g.order());
        }
        for row in &self.coupling {
            for j in row {
                o = o.min(j.order());
            }
        }
        o
    }

    /// Horizontal lift of d/ds_a.
    pub fn horizontal(&self, a: usize) -> PolyVectorField<R> {
        let mut h = PolyVectorField::coordinate_field(&self.space, a, self.order());
        h = h.add(&self.connection[a]);
        h
    }

    fn coupling_head(&self) -> Result<Vec<Vec<R>>> {
        let head: Vec<Vec<R>> = self
            .coupling
            .iter()
            .map(|row| row.iter().map(Jet::constant_term).collect())
            .collect();
        crate::linalg::invert_scalar_matrix(&head).ok_or_else(|| {
            Error::DegenerateCouplingForm(
                "coupling form is singular at the origin".into(),
            )
        })?;
        Ok(head)
    }

    pub fn map_scalars<S: Scalar>(&self, f: impl Fn(&R) -> S + Copy) -> GeometricData<S> {
        GeometricData {
            space: self.space.clone(),
            base_dim: self.base_dim,
            vertical: self.vertical.map_scalars(f),
            connection: self.connection.iter().map(|g| g.map_scalars(f)).collect(),
            coupling: self
                .coupling
                .iter()
                .map(|row| row.iter().map(|j| j.map_scalars(f)).collect())
                .collect(),
        }
    }
}

impl GeometricData<Rat> {
    pub fn lift_t(&self) -> GeometricData<TPoly> {
        self.map_scalars(|c| TPoly::constant(c.clone()))
    }
}

impl GeometricData<TPoly> {
    pub fn eval_t(&self, t: &Rat) -> GeometricData<Rat> {
        GeometricData {
            space: self.space.clone(),
            base_dim: self.base_dim,
            vertical: self.vertical.eval_t(t),
            connection: self.connection.iter().map(|g| g.eval_t(t)).collect(),
            coupling: self
                .coupling
                .iter()
                .map(|row| row.iter().map(|j| j.eval_t(t)).collect())
                .collect(),
        }
    }
}

/// Invert a square matrix of jets whose constant part is invertible, by a
/// Neumann expansion around the constant head.
pub fn invert_jet_matrix<R: Scalar>(m: &[Vec<Jet<R>>]) -> Result<Vec<Vec<Jet<R>>>> {
    let n = m.len();
    if n == 0 {
        return Ok(vec![]);
    }
    let space = m[0][0].space().clone();
    let order = m
        .iter()
        .flatten()
        .map(Jet::order)
        .fold(OrderBound::Exact, OrderBound::min);
    let head: Vec<Vec<R>> = m
        .iter()
        .map(|row| row.iter().map(Jet::constant_term).collect())
        .collect();
    let head_inv = crate::linalg::invert_scalar_matrix(&head).ok_or_else(|| {
        Error::DegenerateCouplingForm("matrix head is not invertible".into())
    })?;
    let cap = match order {
        OrderBound::UpTo(c) => c,
        OrderBound::Exact => m.iter().flatten().map(Jet::max_degree).max().unwrap_or(0),
    };
    // H = head^{-1} * (m - head), lowdeg >= 1
    let mut h = vec![vec![Jet::zero(&space, order); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Jet::zero(&space, order);
            for l in 0..n {
                let tail = m[l][j].sub(&Jet::constant(&space, head[l][j].clone(), OrderBound::Exact));
                acc = acc.add(&tail.mul_scalar(&head_inv[i][l]));
            }
            h[i][j] = acc;
        }
    }
    // inv = (sum_k (-H)^k) * head^{-1}
    let mut series: Vec<Vec<Jet<R>>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    Jet::constant(
                        &space,
                        if i == j { R::one() } else { R::zero() },
                        order,
                    )
                })
                .collect()
        })
        .collect();
    let mut power = series.clone();
    for _ in 0..cap {
        // power = -H * power
        let mut next = vec![vec![Jet::zero(&space, order); n]; n];
        let mut all_zero = true;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Jet::zero(&space, order);
                for l in 0..n {
                    acc = acc.add(&h[i][l].mul(&power[l][j]));
                }
                acc = acc.neg();
                if !acc.is_zero() {
                    all_zero = false;
                }
                next[i][j] = acc;
            }
        }
        if all_zero {
            break;
        }
        for i in 0..n {
            for j in 0..n {
                series[i][j] = series[i][j].add(&next[i][j]);
            }
        }
        power = next;
    }
    let mut inv = vec![vec![Jet::zero(&space, order); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Jet::zero(&space, order);
            for l in 0..n {
                acc = acc.add(&series[i][l].mul_scalar(&head_inv[l][j]));
            }
            inv[i][j] = acc;
        }
    }
    Ok(inv)
}

/// Read the geometric data off a Poisson jet whose first `base_dim`
/// coordinates span a symplectic factor direction at the origin.
pub fn extract_geometric_data<R: Scalar>(
    pi: &PoissonJet<R>,
    base_dim: usize,
) -> Result<GeometricData<R>> {
    let field = pi.bivector();
    let jac = poisson::jacobiator(field)?;
    if !poisson::is_zero_upto(&jac) {
        return Err(Error::NotPoisson(
            "jacobiator does not vanish through the certified order".into(),
        ));
    }
    let n = field.dim();
    if base_dim % 2 != 0 || base_dim > n {
        return Err(Error::SchemaError(format!(
            "base dimension {base_dim} must be even and at most {n}"
        )));
    }
    let space = field.space().clone();
    let order = field.order();
    let p = poisson::full_matrix(field);
    // base block and its exact inverse
    let b: Vec<Vec<Jet<R>>> = (0..base_dim)
        .map(|a| (0..base_dim).map(|c| p[a][c].clone()).collect())
        .collect();
    let b_inv = invert_jet_matrix(&b).map_err(|_| {
        Error::DegenerateBaseBlock("base block is singular at the origin".into())
    })?;
    let fiber: Vec<usize> = (base_dim..n).collect();
    // connection: gamma[a] = sum_b (B^{-1})_{ab} X_{s_b} restricted to the fiber
    let mut connection = Vec::with_capacity(base_dim);
    for a in 0..base_dim {
        let mut comps: Vec<(Vec<u8>, Jet<R>)> = Vec::new();
        for &j in &fiber {
            let mut acc = Jet::zero(&space, order);
            for c in 0..base_dim {
                acc = acc.add(&b_inv[a][c].mul(&p[c][j]));
            }
            if !acc.is_zero() {
                comps.push((vec![j as u8], acc));
            }
        }
        connection.push(Skew::from_components(&space, 1, comps)?);
    }
    // coupling form F = -B^{-1}
    let coupling: Vec<Vec<Jet<R>>> = (0..base_dim)
        .map(|a| (0..base_dim).map(|c| b_inv[a][c].neg()).collect())
        .collect();
    // vertical block V' = V + M^T B^{-1} M
    let mut vcomps: Vec<(Vec<u8>, Jet<R>)> = Vec::new();
    for (fi, &i) in fiber.iter().enumerate() {
        for &j in fiber.iter().skip(fi + 1) {
            let mut acc = p[i][j].clone();
            for a in 0..base_dim {
                for c in 0..base_dim {
                    // (M^T B^{-1} M)_{ij} = sum_{a,c} M_{ai} (B^{-1})_{ac} M_{cj}
                    let t = p[a][i].mul(&b_inv[a][c]).mul(&p[c][j]);
                    acc = acc.add(&t);
                }
            }
            if !acc.is_zero() {
                vcomps.push((vec![i as u8, j as u8], acc));
            }
        }
    }
    let vertical = Skew::from_components(&space, 2, vcomps)?;
    GeometricData::new(space, base_dim, vertical, connection, coupling)
}

/// Rebuild the bivector from geometric data: the inverse of the coupling
/// form on the horizontal frame plus the vertical part.
pub fn reconstruct_bivector<R: Scalar>(data: &GeometricData<R>) -> Result<PolyVectorField<R>> {
    let space = data.space.clone();
    let k2 = data.base_dim;
    let n = space.dim();
    let order = data.order();
    // B = -F^{-1}
    let f_inv = invert_jet_matrix(&data.coupling)?;
    let b: Vec<Vec<Jet<R>>> = (0..k2)
        .map(|a| (0..k2).map(|c| f_inv[a][c].neg()).collect())
        .collect();
    // M = B gamma
    let fiber = data.fiber_indices();
    let gamma: Vec<Vec<Jet<R>>> = (0..k2)
        .map(|a| {
            fiber
                .iter()
                .map(|&j| data.connection[a].component(&[j as u8]))
                .collect()
        })
        .collect();
    let mut m = vec![vec![Jet::zero(&space, order); fiber.len()]; k2];
    for a in 0..k2 {
        for (fj, _) in fiber.iter().enumerate() {
            let mut acc = Jet::zero(&space, order);
            for c in 0..k2 {
                acc = acc.add(&b[a][c].mul(&gamma[c][fj]));
            }
            m[a][fj] = acc;
        }
    }
    // V = V' - M^T B^{-1} M; here B^{-1} = -F
    let mut comps: Vec<(Vec<u8>, Jet<R>)> = Vec::new();
    for a in 0..k2 {
        for c in a + 1..k2 {
            if !b[a][c].is_zero() {
                comps.push((vec![a as u8, c as u8], b[a][c].clone()));
            }
        }
        for (fj, &j) in fiber.iter().enumerate() {
            if !m[a][fj].is_zero() {
                comps.push((vec![a as u8, j as u8], m[a][fj].clone()));
            }
        }
    }
    for (fi, &i) in fiber.iter().enumerate() {
        for (fj, &j) in fiber.iter().enumerate().skip(fi + 1) {
            let mut acc = data.vertical.component(&[i as u8, j as u8]);
            for a in 0..k2 {
                for c in 0..k2 {
                    // -(M^T B^{-1} M)_{ij} with B^{-1} = -F:
                    // + sum_{a,c} M_{ai} F_{ac} M_{cj}
                    let t = m[a][fi].mul(&data.coupling[a][c]).mul(&m[c][fj]);
                    acc = acc.add(&t);
                }
            }
            if !acc.is_zero() {
                comps.push((vec![i as u8, j as u8], acc));
            }
        }
    }
    let _ = n;
    Skew::from_components(&space, 2, comps)
}

/// Compatibility report for a geometric data triple.
#[derive(Clone, Debug)]
pub struct CompatibilityReport<R: Scalar = Rat> {
    /// `[vertical, vertical] = 0` through the certified order.
    pub vertical_poisson: bool,
    pub vertical_certificate: PolyVectorField<R>,
    /// `L_{Hor(a)} vertical = 0` for each base direction.
    pub invariance: Vec<bool>,
    pub invariance_certificates: Vec<PolyVectorField<R>>,
    /// Jacobiator of the reconstructed bivector (conditions 3 and 4).
    pub reconstruction_poisson: bool,
    pub reconstruction_certificate: PolyVectorField<R>,
    /// Diagnostic curvature fields [Hor(a), Hor(b)] for a < b.
    pub curvature: Vec<((usize, usize), PolyVectorField<R>)>,
}

impl<R: Scalar> CompatibilityReport<R> {
    pub fn all_pass(&self) -> bool {
        self.vertical_poisson && self.reconstruction_poisson && self.invariance.iter().all(|&b| b)
    }
}

/// Check the compatibility conditions: the first two directly, the last
/// two through reconstruction plus the Jacobi test, with the curvature
/// fields reported for diagnostics.
pub fn check_compatibility<R: Scalar>(data: &GeometricData<R>) -> Result<CompatibilityReport<R>> {
    let vcert = data.vertical.schouten(&data.vertical)?;
    let vertical_poisson = poisson::is_zero_upto(&vcert);
    let mut invariance = Vec::new();
    let mut certs = Vec::new();
    for a in 0..data.base_dim {
        let hor = data.horizontal(a);
        let cert = hor.schouten(&data.vertical)?;
        invariance.push(poisson::is_zero_upto(&cert));
        certs.push(cert);
    }
    let (reconstruction_poisson, rcert) = match reconstruct_bivector(data) {
        Ok(pi) => {
            let jac = poisson::jacobiator(&pi)?;
            (poisson::is_zero_upto(&jac), jac)
        }
        Err(_) => (false, Skew::zero(&data.space, 3, data.order())),
    };
    let mut curvature = Vec::new();
    for a in 0..data.base_dim {
        for b in a + 1..data.base_dim {
            let c = data.horizontal(a).schouten(&data.horizontal(b))?;
            curvature.push(((a, b), c));
        }
    }
    Ok(CompatibilityReport {
        vertical_poisson,
        vertical_certificate: vcert,
        invariance,
        invariance_certificates: certs,
        reconstruction_poisson,
        reconstruction_certificate: rcert,
        curvature,
    })
}

/// Interpolate two data triples sharing a vertical component at a scalar
/// time value: connections linearly, the coupling form by the three-term
/// formula whose cross term is the vertical pairing of the connection
/// differences.
pub fn interpolate_path<R: Scalar>(
    d0: &GeometricData<R>,
    d1: &GeometricData<R>,
    t: &R,
) -> Result<GeometricData<R>> {
    if !same_space(&d0.space, &d1.space) || d0.base_dim != d1.base_dim {
        return Err(Error::VarMismatch("interpolation endpoints disagree in shape".into()));
    }
    if !d0.vertical.eq_upto_order(&d1.vertical) {
        return Err(Error::VerticalMismatch(
            "endpoint vertical components differ".into(),
        ));
    }
    let k2 = d0.base_dim;
    let fiber = d0.fiber_indices();
    let one_minus_t = R::one().sub(t);
    let order = d0.order().min(d1.order());
    // connections: (1-t) gamma0 + t gamma1
    let connection: Vec<PolyVectorField<R>> = (0..k2)
        .map(|a| {
            d0.connection[a]
                .map_jets(|j| j.mul_scalar(&one_minus_t))
                .add(&d1.connection[a].map_jets(|j| j.mul_scalar(t)))
        })
        .collect();
    // connection differences and their vertical pairings
    let z: Vec<PolyVectorField<R>> = (0..k2)
        .map(|a| d0.connection[a].sub(&d1.connection[a]))
        .collect();
    let space = d0.space.clone();
    let mut q = vec![vec![Jet::zero(&space, order); k2]; k2];
    for a in 0..k2 {
        for b in a + 1..k2 {
            if z[a].is_zero() || z[b].is_zero() {
                continue;
            }
            let report = poisson::pairing_on(&d0.vertical, &z[a], &z[b], &fiber)
                .map_err(pairing_error_to_tameness)?;
            let value = report.vertical.jet.clone().ok_or_else(|| {
                Error::NotTame(format!(
                    "vertical pairing of connection differences ({a},{b}) is not a jet: {}",
                    report.vertical.render()
                ))
            })?;
            q[a][b] = value.clone();
            q[b][a] = value.neg();
        }
    }
    // F_t = t F1 + (1-t) F0 + t(1-t) Q
    let cross = t.mul(&one_minus_t);
    let coupling: Vec<Vec<Jet<R>>> = (0..k2)
        .map(|a| {
            (0..k2)
                .map(|b| {
                    d1.coupling[a][b]
                        .mul_scalar(t)
                        .add(&d0.coupling[a][b].mul_scalar(&one_minus_t))
                        .add(&q[a][b].mul_scalar(&cross))
                })
                .collect()
        })
        .collect();
    GeometricData::new(space, k2, d0.vertical.clone(), connection, coupling)
}

/// Interpolation with t as a formal parameter: the whole path as one exact
/// object over the polynomial coefficient ring.
pub fn interpolate_path_formal(
    d0: &GeometricData<Rat>,
    d1: &GeometricData<Rat>,
) -> Result<GeometricData<TPoly>> {
    interpolate_path(&d0.lift_t(), &d1.lift_t(), &TPoly::t())
}

fn pairing_error_to_tameness(e: Error) -> Error {
    match e {
        Error::ZeroDenominator(m) => Error::NotTame(m),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcore::jet::space;
    use crate::jetcore::scalar::{rat, rat_int};
    use crate::jetcore::map::JetMap;
    use crate::liealg::Dim3Model;

    fn nb(c: u32) -> OrderBound {
        OrderBound::UpTo(c)
    }

    fn model_5d(cap: u32) -> PoissonJet<Rat> {
        let sp = space(&["x", "y", "z1", "z2", "z3"]);
        let one = Jet::constant(&sp, rat_int(1), nb(cap));
        let z1 = Jet::coordinate(&sp, 2, nb(cap));
        let z2 = Jet::coordinate(&sp, 3, nb(cap));
        let z3 = Jet::coordinate(&sp, 4, nb(cap));
        PoissonJet::new(
            Skew::from_components(
                &sp,
                2,
                [
                    (vec![0, 1], one),
                    (vec![3, 4], z1),
                    (vec![2, 4], z2.neg()),
                    (vec![2, 3], z3),
                ],
            )
            .unwrap(),
        )
        .unwrap()
    }

    fn sheared_5d(cap: u32) -> PoissonJet<Rat> {
        // push the product model through y -> y + z1^2
        let pi = model_5d(cap);
        let sp = pi.bivector().space().clone();
        let y = Jet::coordinate(&sp, 1, nb(cap));
        let z1 = Jet::coordinate(&sp, 2, nb(cap));
        let psi = JetMap::new(
            sp.clone(),
            sp.clone(),
            (0..5)
                .map(|i| {
                    if i == 1 {
                        y.add(&z1.mul(&z1))
                    } else {
                        Jet::coordinate(&sp, i, nb(cap))
                    }
                })
                .collect(),
        )
        .unwrap()
        .frozen_exact();
        PoissonJet::new(pi.bivector().pushforward(&psi).unwrap()).unwrap()
    }

    #[test]
    fn extract_trivial_coupling() {
        let pi = model_5d(8);
        let data = extract_geometric_data(&pi, 2).unwrap();
        assert_eq!(data.base_dim(), 2);
        assert!(data.connection().iter().all(|g| g.is_zero()));
        // F = -B^{-1} with B the standard block: F_{01} = 1
        let one = Jet::constant(data.space(), rat_int(1), nb(8));
        assert!(data.coupling()[0][1].eq_through(&one, 8));
        // vertical recovers so(3)
        let so3 = Dim3Model::So3
            .linear_poisson(&space(&["y1", "y2", "y3"]), nb(8))
            .embed(data.space(), &[2, 3, 4]);
        assert!(data.vertical().eq_through(&so3, 8));
    }

    #[test]
    fn round_trip_extract_reconstruct() {
        for pi in [model_5d(8), sheared_5d(8)] {
            let data = extract_geometric_data(&pi, 2).unwrap();
            let back = reconstruct_bivector(&data).unwrap();
            assert!(back.eq_upto_order(pi.bivector()));
            // reconstruct then extract round-trips the data
            let again = extract_geometric_data(
                &PoissonJet::new_deferred(back).unwrap(),
                2,
            )
            .unwrap();
            assert!(again.vertical().eq_upto_order(data.vertical()));
            for a in 0..2 {
                assert!(again.connection()[a].eq_upto_order(&data.connection()[a]));
                for b in 0..2 {
                    assert!(again.coupling()[a][b].eq_upto_order(&data.coupling()[a][b]));
                }
            }
        }
    }

    #[test]
    fn sheared_model_has_nonzero_connection() {
        let data = extract_geometric_data(&sheared_5d(8), 2).unwrap();
        assert!(!data.connection().iter().all(|g| g.is_zero()));
        let rep = check_compatibility(&data).unwrap();
        assert!(rep.all_pass());
    }

    #[test]
    fn degenerate_base_block_rejected() {
        let sp = space(&["x", "y", "z"]);
        let z = Jet::<Rat>::coordinate(&sp, 2, nb(6));
        // {x,y} = z vanishes at the origin
        let field = Skew::from_components(&sp, 2, [(vec![0u8, 1], z)]).unwrap();
        let pi = PoissonJet::new(field).unwrap();
        assert!(matches!(
            extract_geometric_data(&pi, 2),
            Err(Error::DegenerateBaseBlock(_))
        ));
    }

    #[test]
    fn compatibility_detects_bad_vertical() {
        let pi = model_5d(7);
        let mut data = extract_geometric_data(&pi, 2).unwrap();
        // replace the vertical part by a non-Poisson bivector
        let sp = data.space().clone();
        let z1 = Jet::coordinate(&sp, 2, nb(7));
        let z2 = Jet::coordinate(&sp, 3, nb(7));
        let z3 = Jet::coordinate(&sp, 4, nb(7));
        let bad = Skew::from_components(
            &sp,
            2,
            [
                (vec![2, 3], z1),
                (vec![3, 4], z2),
                (vec![2, 4], z3.neg()),
            ],
        )
        .unwrap();
        data.vertical = bad;
        let rep = check_compatibility(&data).unwrap();
        assert!(!rep.vertical_poisson);
        assert!(!rep.all_pass());
        assert!(!rep.vertical_certificate.is_zero());
    }

    #[test]
    fn interpolation_endpoints_and_jacobi() {
        let d0 = extract_geometric_data(&sheared_5d(8), 2).unwrap();
        let d1 = extract_geometric_data(&model_5d(8), 2).unwrap();
        // endpoints reproduce the inputs exactly
        let at0 = interpolate_path(&d0, &d1, &rat_int(0)).unwrap();
        let at1 = interpolate_path(&d0, &d1, &rat_int(1)).unwrap();
        assert!(reconstruct_bivector(&at0)
            .unwrap()
            .eq_upto_order(&reconstruct_bivector(&d0).unwrap()));
        assert!(reconstruct_bivector(&at1)
            .unwrap()
            .eq_upto_order(&reconstruct_bivector(&d1).unwrap()));
        // interior rational samples reconstruct to Poisson structures
        for t in [rat(1, 4), rat(1, 2), rat(3, 4)] {
            let dt = interpolate_path(&d0, &d1, &t).unwrap();
            let pit = reconstruct_bivector(&dt).unwrap();
            let jac = crate::poisson::jacobiator(&pit).unwrap();
            assert!(crate::poisson::is_zero_upto(&jac), "t = {t}");
            assert!(dt.vertical().eq_upto_order(d0.vertical()));
        }
        // constant path when both ends agree
        let c = interpolate_path(&d0, &d0, &rat(1, 3)).unwrap();
        assert!(reconstruct_bivector(&c)
            .unwrap()
            .eq_upto_order(&reconstruct_bivector(&d0).unwrap()));
    }

    #[test]
    fn formal_interpolation_is_poisson_and_quadratic_in_t() {
        let d0 = extract_geometric_data(&sheared_5d(7), 2).unwrap();
        let d1 = extract_geometric_data(&model_5d(7), 2).unwrap();
        let dt = interpolate_path_formal(&d0, &d1).unwrap();
        let pit = reconstruct_bivector(&dt).unwrap();
        let jac = crate::poisson::jacobiator(&pit).unwrap();
        assert!(crate::poisson::is_zero_upto(&jac));
        // the coupling form is quadratic in t and its t(1-t) coefficient is
        // exactly the vertical pairing of the connection differences
        let fiber = d0.fiber_indices();
        for a in 0..2 {
            for b in 0..2 {
                let f_ab = &dt.coupling()[a][b];
                assert!(f_ab.terms().all(|(_, c)| c.degree() <= 2));
                let za = d0.connection()[a].sub(&d1.connection()[a]);
                let zb = d0.connection()[b].sub(&d1.connection()[b]);
                if a == b {
                    continue;
                }
                let pairing = crate::poisson::pairing_on(d0.vertical(), &za, &zb, &fiber)
                    .unwrap()
                    .vertical
                    .jet
                    .unwrap();
                // coefficient of t^2 equals -pairing (from t(1-t) Q)
                let t2 = f_ab.map_scalars(|c| c.coeff(2));
                assert!(t2.eq_upto_order(&pairing.neg()));
            }
        }
        // vertical mismatch is rejected
        let mut d2 = d1.clone();
        d2.vertical = d2.vertical.mul_rat(&rat_int(2));
        assert!(matches!(
            interpolate_path_formal(&d0, &d2),
            Err(Error::VerticalMismatch(_))
        ));
    }
}
