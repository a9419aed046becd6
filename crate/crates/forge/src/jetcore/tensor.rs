//! Graded antisymmetric tensors with jet coefficients: multivector fields
//! and differential forms, together with the exterior/Schouten calculus.
//!
//! Components are stored on strictly increasing index tuples. The Schouten
//! bracket is computed through the odd-coordinate representation of
//! multivector fields, normalized so that `[P,P](df,dg,dh)` equals twice
//! the cyclic Jacobi sum of the induced bracket.

use std::collections::BTreeMap;
use std::fmt;
use std::marker::PhantomData;
use std::sync::Arc;

use super::jet::{same_space, Jet, Mono, OrderBound, Space};
use super::map::JetMap;
use super::scalar::{Rat, Scalar, TPoly};
use crate::error::{Error, Result};

/// Marker for multivector fields.
#[derive(Debug, Clone, PartialEq)]
pub enum VecKind {}
/// Marker for differential forms.
#[derive(Debug, Clone, PartialEq)]
pub enum FormKind {}

/// Shared storage for skew tensors of either variance.
pub struct Skew<R: Scalar, K> {
    space: Arc<Space>,
    degree: usize,
    comps: BTreeMap<Vec<u8>, Jet<R>>,
    _kind: PhantomData<K>,
}

impl<R: Scalar, K> Clone for Skew<R, K> {
    fn clone(&self) -> Self {
        Skew {
            space: self.space.clone(),
            degree: self.degree,
            comps: self.comps.clone(),
            _kind: PhantomData,
        }
    }
}

impl<R: Scalar, K> PartialEq for Skew<R, K> {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
            && same_space(&self.space, &other.space)
            && self.comps == other.comps
    }
}

pub type PolyVectorField<R = Rat> = Skew<R, VecKind>;
pub type DifferentialFormField<R = Rat> = Skew<R, FormKind>;

/// Sign of merging two disjoint increasing tuples into one sorted tuple,
/// counting inversions between the blocks. `None` when they overlap.
fn merge_sign(a: &[u8], b: &[u8]) -> Option<(Vec<u8>, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut inversions = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            inversions += a.len() - i;
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    let sign = if inversions % 2 == 0 { 1 } else { -1 };
    Some((out, sign))
}

/// Sort a sequence, returning the permutation sign; `None` on duplicates.
fn sort_with_sign(mut seq: Vec<u8>) -> Option<(Vec<u8>, i32)> {
    let mut sign = 1;
    for i in 1..seq.len() {
        let mut j = i;
        while j > 0 && seq[j - 1] > seq[j] {
            seq.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
        if j > 0 && seq[j - 1] == seq[j] {
            return None;
        }
    }
    Some((seq, sign))
}

impl<R: Scalar, K> fmt::Debug for Skew<R, K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Skew(deg {})[", self.degree)?;
        for (idx, jet) in &self.comps {
            write!(f, " {:?}: {};", idx, jet.render())?;
        }
        write!(f, " ]")
    }
}

impl<R: Scalar, K> Skew<R, K> {
    pub fn zero(space: &Arc<Space>, degree: usize, _order: OrderBound) -> Self {
        Skew {
            space: space.clone(),
            degree,
            comps: BTreeMap::new(),
            _kind: PhantomData,
        }
    }

    pub fn from_components(
        space: &Arc<Space>,
        degree: usize,
        comps: impl IntoIterator<Item = (Vec<u8>, Jet<R>)>,
    ) -> Result<Self> {
        let mut out = Skew {
            space: space.clone(),
            degree,
            comps: BTreeMap::new(),
            _kind: PhantomData,
        };
        for (idx, jet) in comps {
            if idx.len() != degree {
                return Err(Error::DegreeMismatch(format!(
                    "component tuple {idx:?} does not have length {degree}"
                )));
            }
            if !idx.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::SchemaError(format!(
                    "component tuple {idx:?} is not strictly increasing"
                )));
            }
            if idx.iter().any(|&i| i as usize >= space.dim()) {
                return Err(Error::SchemaError(format!(
                    "component tuple {idx:?} out of range for dimension {}",
                    space.dim()
                )));
            }
            if !same_space(jet.space(), space) {
                return Err(Error::VarMismatch(
                    "component jet lives in a different space".into(),
                ));
            }
            if jet.is_zero() {
                continue;
            }
            out.add_comp(idx, jet);
        }
        Ok(out)
    }

    fn add_comp(&mut self, idx: Vec<u8>, jet: Jet<R>) {
        match self.comps.remove(&idx) {
            None => {
                if !jet.is_zero() {
                    self.comps.insert(idx, jet);
                }
            }
            Some(old) => {
                let s = old.add(&jet);
                if !s.is_zero() {
                    self.comps.insert(idx, s);
                }
            }
        }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<u8>, &Jet<R>)> {
        self.comps.iter()
    }

    pub fn component(&self, idx: &[u8]) -> Jet<R> {
        self.comps
            .get(idx)
            .cloned()
            .unwrap_or_else(|| Jet::zero(&self.space, self.order()))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }

    /// Weakest order bound among the components.
    pub fn order(&self) -> OrderBound {
        self.comps
            .values()
            .map(Jet::order)
            .fold(OrderBound::Exact, OrderBound::min)
    }

    pub fn truncated(&self, order: OrderBound) -> Self {
        self.map_jets(|j| j.truncated(order))
    }

    pub fn map_jets(&self, f: impl Fn(&Jet<R>) -> Jet<R>) -> Self {
        let mut comps = BTreeMap::new();
        for (idx, jet) in &self.comps {
            let v = f(jet);
            if !v.is_zero() {
                comps.insert(idx.clone(), v);
            }
        }
        Skew {
            space: self.space.clone(),
            degree: self.degree,
            comps,
            _kind: PhantomData,
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.degree, rhs.degree, "degree mismatch in tensor add");
        let mut out: Skew<R, K> = self.clone();
        for (idx, jet) in &rhs.comps {
            out.add_comp(idx.clone(), jet.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_jets(Jet::neg)
    }

    pub fn mul_jet(&self, f: &Jet<R>) -> Self {
        self.map_jets(|j| j.mul(f))
    }

    pub fn mul_rat(&self, c: &Rat) -> Self {
        self.map_jets(|j| j.mul_rat(c))
    }

    /// Smallest total degree among coefficient terms (spatial vanishing
    /// order); `None` for the zero tensor.
    pub fn low_degree(&self) -> Option<u32> {
        self.comps.values().filter_map(Jet::low_degree).min()
    }

    /// Keep only coefficient terms of the given homogeneous degree.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        self.map_jets(|j| j.homogeneous_part(d))
    }

    pub fn vanishes_through(&self, d: u32) -> bool {
        self.comps.values().all(|j| j.vanishes_through(d))
    }

    pub fn eq_through(&self, rhs: &Self, d: u32) -> bool {
        self.degree == rhs.degree && self.sub(rhs).vanishes_through(d)
    }

    /// Compare through the weakest order bound of the difference.
    pub fn eq_upto_order(&self, rhs: &Self) -> bool {
        let diff = self.sub(rhs);
        match diff.order() {
            OrderBound::Exact => diff.is_zero(),
            OrderBound::UpTo(c) => diff.vanishes_through(c),
        }
    }

    pub fn map_scalars<S: Scalar>(&self, f: impl Fn(&R) -> S) -> Skew<S, K> {
        let mut comps = BTreeMap::new();
        for (idx, jet) in &self.comps {
            let v = jet.map_scalars(&f);
            if !v.is_zero() {
                comps.insert(idx.clone(), v);
            }
        }
        Skew {
            space: self.space.clone(),
            degree: self.degree,
            comps,
            _kind: PhantomData,
        }
    }

    /// Move into a larger space; `positions[i]` is the new index of old
    /// variable `i`.
    pub fn embed(&self, target: &Arc<Space>, positions: &[usize]) -> Self {
        let mut comps = BTreeMap::new();
        for (idx, jet) in &self.comps {
            let seq: Vec<u8> = idx.iter().map(|&i| positions[i as usize] as u8).collect();
            let (sorted, sign) = sort_with_sign(seq).expect("embedding positions must be injective");
            let mut v = jet.embed(target, positions);
            if sign < 0 {
                v = v.neg();
            }
            comps.insert(sorted, v);
        }
        Skew {
            space: target.clone(),
            degree: self.degree,
            comps,
            _kind: PhantomData,
        }
    }

    /// Restrict to the subspace of the `keep` variables; errors when a
    /// component carries an index or a coefficient outside the subspace.
    pub fn restrict(&self, target: &Arc<Space>, keep: &[usize]) -> Result<Self> {
        let mut comps = BTreeMap::new();
        for (idx, jet) in &self.comps {
            let mut new_idx = Vec::with_capacity(idx.len());
            for &i in idx {
                match keep.iter().position(|&k| k == i as usize) {
                    Some(p) => new_idx.push(p as u8),
                    None => {
                        return Err(Error::Internal(format!(
                            "restriction drops component {idx:?}"
                        )))
                    }
                }
            }
            comps.insert(new_idx, jet.restrict(target, keep)?);
        }
        Ok(Skew {
            space: target.clone(),
            degree: self.degree,
            comps,
            _kind: PhantomData,
        })
    }

    pub fn rename(&self, target: &Arc<Space>) -> Self {
        let mut comps = BTreeMap::new();
        for (idx, jet) in &self.comps {
            comps.insert(idx.clone(), jet.rename(target));
        }
        Skew {
            space: target.clone(),
            degree: self.degree,
            comps,
            _kind: PhantomData,
        }
    }

    fn check_same(&self, rhs: &Skew<R, K>) -> Result<()> {
        if !same_space(&self.space, &rhs.space) {
            return Err(Error::VarMismatch(format!(
                "{:?} vs {:?}",
                self.space.vars(),
                rhs.space.vars()
            )));
        }
        Ok(())
    }

    /// Graded wedge product (same variance).
    pub fn wedge(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        let degree = self.degree + rhs.degree;
        let mut out = Skew::zero(&self.space, degree, self.order().min(rhs.order()));
        if degree > self.dim() {
            return Ok(out); // the zero tensor, not an error
        }
        for (ia, ja) in &self.comps {
            for (ib, jb) in &rhs.comps {
                if let Some((idx, sign)) = merge_sign(ia, ib) {
                    let mut v = ja.mul(jb);
                    if sign < 0 {
                        v = v.neg();
                    }
                    out.add_comp(idx, v);
                }
            }
        }
        Ok(out)
    }
}

impl<R: Scalar> PolyVectorField<R> {
    /// The coordinate vector field of variable `i`.
    pub fn coordinate_field(space: &Arc<Space>, i: usize, order: OrderBound) -> Self {
        Skew::from_components(
            space,
            1,
            [(vec![i as u8], Jet::constant(space, R::one(), order))],
        )
        .expect("coordinate field")
    }

    /// Apply a vector field to a function.
    pub fn apply(&self, f: &Jet<R>) -> Jet<R> {
        assert_eq!(self.degree, 1, "apply needs a vector field");
        let mut acc = Jet::zero(&self.space, f.order().minus(1));
        for (idx, coeff) in &self.comps {
            acc = acc.add(&coeff.mul(&f.derivative(idx[0] as usize)));
        }
        acc
    }

    /// Schouten-Nijenhuis bracket of multivector fields. On two vector
    /// fields it is the Lie bracket; on (vector field, anything) it is the
    /// Lie derivative; normalized so that `[P,P](df,dg,dh)` is twice the
    /// cyclic sum `{f,{g,h}}` of the bracket induced by a bivector P.
    pub fn schouten(&self, rhs: &Self) -> Result<Self> {
        self.check_same(rhs)?;
        let p = self.degree;
        let q = rhs.degree;
        if p + q == 0 {
            return Ok(Skew::zero(&self.space, 0, self.order().min(rhs.order())));
        }
        let degree = p + q - 1;
        let mut out = Skew::zero(&self.space, degree, self.order().min(rhs.order()));
        let one = Jet::constant(&self.space, R::one(), OrderBound::Exact);
        for (ia, fa) in &self.comps {
            for (ib, fb) in &rhs.comps {
                let term = bracket_decomposable(&self.space, fa, ia, fb, ib, &one)?;
                out = out.add(&term);
            }
        }
        Ok(out)
    }

    /// Evaluate a p-vector on the differentials of p functions.
    pub fn eval_on_differentials(&self, fs: &[Jet<R>]) -> Result<Jet<R>> {
        if fs.len() != self.degree {
            return Err(Error::DegreeMismatch(format!(
                "need {} functions, got {}",
                self.degree,
                fs.len()
            )));
        }
        let order = fs
            .iter()
            .map(|f| f.order().minus(1))
            .fold(self.order(), OrderBound::min);
        let mut acc = Jet::zero(&self.space, order);
        for (idx, coeff) in &self.comps {
            // det of the p x p matrix d f_a / d u_{idx[b]}
            let p = self.degree;
            let grads: Vec<Vec<Jet<R>>> = fs
                .iter()
                .map(|f| idx.iter().map(|&i| f.derivative(i as usize)).collect())
                .collect();
            let det = jet_det(&grads, p, &self.space, order);
            acc = acc.add(&coeff.mul(&det));
        }
        Ok(acc)
    }

    /// Contract a form into the leading slots of a multivector.
    pub fn contract_form(&self, beta: &DifferentialFormField<R>) -> Result<PolyVectorField<R>> {
        if !same_space(&self.space, &beta.space) {
            return Err(Error::VarMismatch("contraction spaces differ".into()));
        }
        if beta.degree > self.degree {
            return Err(Error::DegreeMismatch(format!(
                "cannot contract a {}-form into a {}-vector",
                beta.degree, self.degree
            )));
        }
        let degree = self.degree - beta.degree;
        let mut out = Skew::zero(&self.space, degree, self.order().min(beta.order()));
        for (ib, jb) in &beta.comps {
            for (ia, ja) in &self.comps {
                // component of A on merge(ib, k) pairs with beta on ib
                if !ib.iter().all(|i| ia.contains(i)) {
                    continue;
                }
                let k: Vec<u8> = ia.iter().copied().filter(|i| !ib.contains(i)).collect();
                let (_, sign) = merge_sign(ib, &k).expect("disjoint by construction");
                let mut v = jb.mul(ja);
                if sign < 0 {
                    v = v.neg();
                }
                out.add_comp(k, v);
            }
        }
        Ok(out)
    }

    /// Pushforward through an invertible map: transform components by the
    /// Jacobian minors and move to target coordinates.
    pub fn pushforward(&self, phi: &JetMap<R>) -> Result<PolyVectorField<R>> {
        if !same_space(&self.space, phi.source()) {
            return Err(Error::VarMismatch(
                "tensor does not live on the map source".into(),
            ));
        }
        let phi_is_linear = phi.components().iter().all(|c| c.max_degree() <= 1);
        let pre = self.order().min(phi.order().minus(1));
        let cap = match pre {
            OrderBound::UpTo(c) => c,
            OrderBound::Exact if phi_is_linear => self
                .comps
                .values()
                .map(Jet::max_degree)
                .max()
                .unwrap_or(0),
            OrderBound::Exact => {
                return Err(Error::OrderMismatch(
                    "pushforward of exact data through a nonlinear map needs a truncation".into(),
                ))
            }
        };
        let inv = phi.invert_to(cap)?;
        let n = phi.dim();
        let p = self.degree;
        // Jacobian rows: d phi^j / d u_i
        let jac: Vec<Vec<Jet<R>>> = (0..n)
            .map(|j| (0..n).map(|i| phi.component(j).derivative(i)).collect())
            .collect();
        let order = pre.min(inv.order());
        let mut out = Skew::zero(phi.target(), p, order);
        if p == 0 {
            let f = self.component(&[]);
            let moved = inv.pull_jet(&f)?;
            return Skew::from_components(phi.target(), 0, [(vec![], moved)]);
        }
        let tuples = increasing_tuples(n, p);
        let mut pending: Vec<(Vec<u8>, Jet<R>)> = Vec::new();
        for target_idx in tuples {
            let mut acc = Jet::zero(&self.space, order);
            for (src_idx, coeff) in &self.comps {
                // minor det of rows target_idx, cols src_idx
                let sub: Vec<Vec<Jet<R>>> = target_idx
                    .iter()
                    .map(|&j| {
                        src_idx
                            .iter()
                            .map(|&i| jac[j as usize][i as usize].clone())
                            .collect()
                    })
                    .collect();
                let det = jet_det(&sub, p, &self.space, order);
                acc = acc.add(&coeff.mul(&det));
            }
            if !acc.is_zero() {
                pending.push((target_idx, acc));
            }
        }
        let refs: Vec<&Jet<R>> = pending.iter().map(|(_, j)| j).collect();
        let moved = Jet::substitute_many(&refs, inv.components())?;
        for ((target_idx, _), jet) in pending.into_iter().zip(moved) {
            out.add_comp(target_idx, jet);
        }
        Ok(out)
    }

    /// Contraction into the volume form du_1 ^ ... ^ du_n.
    pub fn omega_flat(&self) -> DifferentialFormField<R> {
        let n = self.dim();
        let all: Vec<u8> = (0..n as u8).collect();
        let mut out = Skew::zero(&self.space, n - self.degree, self.order());
        for (idx, jet) in &self.comps {
            let comp: Vec<u8> = all.iter().copied().filter(|i| !idx.contains(i)).collect();
            let (_, sign) = merge_sign(idx, &comp).expect("complement is disjoint");
            let v = if sign < 0 { jet.neg() } else { jet.clone() };
            out.add_comp(comp, v);
        }
        out
    }
}

impl<R: Scalar> DifferentialFormField<R> {
    /// The coordinate one-form du_i.
    pub fn coordinate_form(space: &Arc<Space>, i: usize, order: OrderBound) -> Self {
        Skew::from_components(
            space,
            1,
            [(vec![i as u8], Jet::constant(space, R::one(), order))],
        )
        .expect("coordinate form")
    }

    /// Exterior derivative; the result order drops by one.
    pub fn exterior_derivative(&self) -> Self {
        let degree = self.degree + 1;
        let mut out = Skew::zero(&self.space, degree, self.order().minus(1));
        if degree > self.dim() {
            return out;
        }
        for (idx, jet) in &self.comps {
            for i in 0..self.dim() as u8 {
                if idx.contains(&i) {
                    continue;
                }
                let d = jet.derivative(i as usize);
                if d.is_zero() {
                    continue;
                }
                let (merged, sign) = merge_sign(&[i], idx).expect("checked disjoint");
                let v = if sign < 0 { d.neg() } else { d };
                out.add_comp(merged, v);
            }
        }
        out
    }

    /// Interior product by a multivector, filling the leading slots.
    pub fn interior(&self, a: &PolyVectorField<R>) -> Result<Self> {
        if !same_space(&self.space, &a.space) {
            return Err(Error::VarMismatch("interior product spaces differ".into()));
        }
        if a.degree > self.degree {
            return Err(Error::DegreeMismatch(format!(
                "cannot contract a {}-vector into a {}-form",
                a.degree, self.degree
            )));
        }
        let degree = self.degree - a.degree;
        let mut out = Skew::zero(&self.space, degree, self.order().min(a.order()));
        for (ia, ja) in &a.comps {
            for (iw, jw) in &self.comps {
                if !ia.iter().all(|i| iw.contains(i)) {
                    continue;
                }
                let k: Vec<u8> = iw.iter().copied().filter(|i| !ia.contains(i)).collect();
                let (_, sign) = merge_sign(ia, &k).expect("disjoint by construction");
                let mut v = ja.mul(jw);
                if sign < 0 {
                    v = v.neg();
                }
                out.add_comp(k, v);
            }
        }
        Ok(out)
    }

    /// Lie derivative along a vector field.
    pub fn lie_derivative(&self, x: &PolyVectorField<R>) -> Result<Self> {
        if x.degree != 1 {
            return Err(Error::DegreeMismatch(
                "Lie derivative needs a vector field".into(),
            ));
        }
        if !same_space(&self.space, &x.space) {
            return Err(Error::VarMismatch("Lie derivative spaces differ".into()));
        }
        let order = self.order().minus(1).min(x.order().minus(1));
        let mut out = Skew::zero(&self.space, self.degree, order);
        for (idx, jet) in &self.comps {
            out.add_comp(idx.clone(), x.apply(jet));
            // (L_X w)_K picks up (d_k X^m) w_{K[r -> m]}; distribute each
            // stored component w_I over the slots it can have come from
            for (s, &is) in idx.iter().enumerate() {
                let Some(xc) = x.comps.get(&vec![is]) else {
                    continue;
                };
                for k in 0..self.dim() as u8 {
                    let dxc = xc.derivative(k as usize);
                    if dxc.is_zero() {
                        continue;
                    }
                    let mut seq = idx.clone();
                    seq[s] = k;
                    if let Some((sorted, sign)) = sort_with_sign(seq) {
                        let mut v = dxc.mul(jet);
                        if sign < 0 {
                            v = v.neg();
                        }
                        out.add_comp(sorted, v);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Inverse of `omega_flat`: recover the multivector contracting into
    /// the volume form as this form.
    pub fn omega_sharp(&self) -> PolyVectorField<R> {
        let n = self.dim();
        let all: Vec<u8> = (0..n as u8).collect();
        let degree = n - self.degree;
        let mut out = Skew::zero(&self.space, degree, self.order());
        for (idx, jet) in &self.comps {
            let comp: Vec<u8> = all.iter().copied().filter(|i| !idx.contains(i)).collect();
            let (_, sign) = merge_sign(&comp, idx).expect("complement is disjoint");
            let v = if sign < 0 { jet.neg() } else { jet.clone() };
            out.add_comp(comp, v);
        }
        out
    }
}

/// Bracket of two decomposable multivectors `f d_I` and `g d_J`, reduced
/// structurally: peel the second argument with the graded Leibniz rule
/// `[A, B1 ^ B'] = [A,B1] ^ B' + (-1)^{deg A - 1} B1 ^ [A,B']`, use graded
/// antisymmetry to swap when only the first argument has degree >= 2, and
/// bottom out on `[X,Y] = Lie bracket`, `[X,g] = X(g)`, `[f,g] = 0`.
fn bracket_decomposable<R: Scalar>(
    space: &Arc<Space>,
    f: &Jet<R>,
    idx_a: &[u8],
    g: &Jet<R>,
    idx_b: &[u8],
    one: &Jet<R>,
) -> Result<PolyVectorField<R>> {
    let a = idx_a.len();
    let b = idx_b.len();
    let mk = |idx: &[u8], jet: Jet<R>| -> PolyVectorField<R> {
        Skew::from_components(space, idx.len(), [(idx.to_vec(), jet)])
            .expect("decomposable component")
    };
    if b >= 2 {
        // B = (g d_{j1}) ^ d_{J'}
        let b1 = &idx_b[..1];
        let bp = &idx_b[1..];
        let t1 = bracket_decomposable(space, f, idx_a, g, b1, one)?
            .wedge(&mk(bp, one.clone()))?;
        let t2 = mk(b1, g.clone()).wedge(&bracket_decomposable(space, f, idx_a, one, bp, one)?)?;
        let t2 = if (a as i64 - 1) % 2 == 0 { t2 } else { t2.neg() };
        return Ok(t1.add(&t2));
    }
    if a >= 2 {
        // [A,B] = -(-1)^{(a-1)(b-1)} [B,A]
        let s = bracket_decomposable(space, g, idx_b, f, idx_a, one)?;
        let sign_pos = ((a as i64 - 1) * (b as i64 - 1)) % 2 != 0;
        return Ok(if sign_pos { s } else { s.neg() });
    }
    // base cases with a, b <= 1
    let order = f.order().min(g.order());
    Ok(match (a, b) {
        (0, 0) => Skew::zero(space, 0, order),
        (1, 0) => {
            // [f d_i, g] = f d_i(g)
            let v = f.mul(&g.derivative(idx_a[0] as usize));
            Skew::from_components(space, 0, [(vec![], v)])?
        }
        (0, 1) => {
            // [f, g d_j] = -g d_j(f)
            let v = g.mul(&f.derivative(idx_b[0] as usize)).neg();
            Skew::from_components(space, 0, [(vec![], v)])?
        }
        (1, 1) => {
            let i = idx_a[0];
            let j = idx_b[0];
            let fwd = f.mul(&g.derivative(i as usize));
            let bwd = g.mul(&f.derivative(j as usize));
            let mut out = Skew::zero(space, 1, order);
            if !fwd.is_zero() {
                out = out.add(&mk(&[j], fwd));
            }
            if !bwd.is_zero() {
                out = out.add(&mk(&[i], bwd.neg()));
            }
            out
        }
        _ => unreachable!(),
    })
}

/// Determinant of a small square matrix of jets by permutation expansion.
fn jet_det<R: Scalar>(
    m: &[Vec<Jet<R>>],
    p: usize,
    space: &Arc<Space>,
    order: OrderBound,
) -> Jet<R> {
    match p {
        0 => Jet::constant(space, R::one(), order),
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        _ => {
            // Laplace expansion along the first row
            let mut acc = Jet::zero(space, order);
            for j in 0..p {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Vec<Vec<Jet<R>>> = (1..p)
                    .map(|r| (0..p).filter(|&c| c != j).map(|c| m[r][c].clone()).collect())
                    .collect();
                let d = jet_det(&minor, p - 1, space, order);
                let term = m[0][j].mul(&d);
                acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

/// All strictly increasing index tuples of length p drawn from 0..n.
pub fn increasing_tuples(n: usize, p: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    if p > n {
        return out;
    }
    let mut cur: Vec<u8> = (0..p as u8).collect();
    loop {
        out.push(cur.clone());
        // advance
        let mut i = p;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < (n - p + i) as u8 {
                cur[i] += 1;
                for j in i + 1..p {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

impl PolyVectorField<Rat> {
    pub fn lift_t(&self) -> PolyVectorField<TPoly> {
        self.map_scalars(|c| TPoly::constant(c.clone()))
    }
}

impl PolyVectorField<TPoly> {
    pub fn eval_t(&self, t: &Rat) -> PolyVectorField<Rat> {
        self.map_scalars(|c| c.eval(t))
    }

    pub fn d_dt(&self) -> Self {
        self.map_jets(|j| j.d_dt())
    }

    pub fn t_constant(&self) -> bool {
        self.comps.values().all(Jet::t_constant)
    }
}

/// Volume form on the whole space.
pub fn volume_form<R: Scalar>(space: &Arc<Space>, order: OrderBound) -> DifferentialFormField<R> {
    let n = space.dim();
    let all: Vec<u8> = (0..n as u8).collect();
    Skew::from_components(space, n, [(all, Jet::constant(space, R::one(), order))])
        .expect("volume form")
}

/// Monomial coefficient helper reused by tests and reports.
pub fn mono(space: &Arc<Space>, exps: &[u16]) -> Mono {
    assert_eq!(exps.len(), space.dim());
    Mono(exps.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcore::jet::space;
    use crate::jetcore::scalar::{rat, rat_int};

    fn n8() -> OrderBound {
        OrderBound::UpTo(8)
    }

    fn coord(sp: &Arc<Space>, i: usize) -> Jet<Rat> {
        Jet::coordinate(sp, i, n8())
    }

    fn vf(sp: &Arc<Space>, comps: &[(usize, Jet<Rat>)]) -> PolyVectorField<Rat> {
        Skew::from_components(
            sp,
            1,
            comps.iter().map(|(i, j)| (vec![*i as u8], j.clone())),
        )
        .unwrap()
    }

    fn so3(sp: &Arc<Space>) -> PolyVectorField<Rat> {
        // x d/dy ^ d/dz + y d/dz ^ d/dx + z d/dx ^ d/dy
        let x = coord(sp, 0);
        let y = coord(sp, 1);
        let z = coord(sp, 2);
        Skew::from_components(
            sp,
            2,
            [
                (vec![1, 2], x),
                (vec![0, 2], y.neg()), // y dz^dx = -y dx^dz
                (vec![0, 1], z),
            ],
        )
        .unwrap()
    }

    #[test]
    fn lie_bracket_of_vector_fields() {
        let sp = space(&["x", "y"]);
        let a = vf(&sp, &[(1, coord(&sp, 0))]); // x d/dy
        let b = vf(&sp, &[(0, coord(&sp, 1))]); // y d/dx
        let br = a.schouten(&b).unwrap();
        // [x dy, y dx] = x dx - y dy
        let expect = vf(&sp, &[(0, coord(&sp, 0)), (1, coord(&sp, 1).neg())]);
        assert!(br.eq_through(&expect, 7));
    }

    #[test]
    fn schouten_so3_is_poisson() {
        let sp = space(&["x", "y", "z"]);
        let pi = so3(&sp);
        let br = pi.schouten(&pi).unwrap();
        assert!(br.is_zero());
    }

    #[test]
    fn schouten_cyclic_normalization() {
        // [P,P](df,dg,dh) = 2 * cyclic sum {f,{g,h}} for a random bivector
        let sp = space(&["x", "y", "z"]);
        let x = coord(&sp, 0);
        let y = coord(&sp, 1);
        let z = coord(&sp, 2);
        let pi = Skew::from_components(
            &sp,
            2,
            [
                (vec![0, 1], x.mul(&x).add(&z)),
                (vec![0, 2], y.mul(&z)),
                (vec![1, 2], x.add(&y.mul(&y))),
            ],
        )
        .unwrap();
        let bracket = |f: &Jet<Rat>, g: &Jet<Rat>| -> Jet<Rat> {
            pi.eval_on_differentials(&[f.clone(), g.clone()]).unwrap()
        };
        let f = x.mul(&y);
        let g = z.clone();
        let h = y.add(&x.mul(&z));
        let cyc = bracket(&f, &bracket(&g, &h))
            .add(&bracket(&g, &bracket(&h, &f)))
            .add(&bracket(&h, &bracket(&f, &g)));
        let pp = pi.schouten(&pi).unwrap();
        let lhs = pp
            .eval_on_differentials(&[f.clone(), g.clone(), h.clone()])
            .unwrap();
        assert!(lhs.eq_through(&cyc.mul_rat(&rat_int(2)), 5));
    }

    #[test]
    fn graded_antisymmetry_and_degree_zero() {
        let sp = space(&["x", "y", "z"]);
        let pi = so3(&sp);
        let x_field = vf(&sp, &[(1, coord(&sp, 2)), (2, coord(&sp, 1).neg())]);
        let ab = x_field.schouten(&pi).unwrap();
        let ba = pi.schouten(&x_field).unwrap();
        // p=1, q=2: [A,B] = -(-1)^{0}[B,A] = -[B,A]
        assert!(ab.add(&ba).is_zero());
        // two functions bracket to zero
        let f = Skew::from_components(&sp, 0, [(vec![], coord(&sp, 0))]).unwrap();
        let g = Skew::from_components(&sp, 0, [(vec![], coord(&sp, 1))]).unwrap();
        assert!(f.schouten(&g).unwrap().is_zero());
    }

    #[test]
    fn wedge_and_volume() {
        let sp = space(&["x", "y", "z"]);
        let dx = DifferentialFormField::coordinate_form(&sp, 0, n8());
        let dy = DifferentialFormField::coordinate_form(&sp, 1, n8());
        let dz = DifferentialFormField::coordinate_form(&sp, 2, n8());
        let om = dx.wedge(&dy).unwrap().wedge(&dz).unwrap();
        assert!(om.eq_through(&volume_form(&sp, n8()), 8));
        // wedge with the unit scalar is the identity
        let one = Skew::from_components(&sp, 0, [(vec![], Jet::constant(&sp, rat_int(1), n8()))])
            .unwrap();
        assert!(one.wedge(&om).unwrap().eq_through(&om, 8));
        // degree overflow wedges to zero
        assert!(om.wedge(&om).unwrap().is_zero());
    }

    #[test]
    fn hamiltonian_tangency_wedge() {
        // (z dy - y dz) ^ Pi_so3 = 0
        let sp = space(&["x", "y", "z"]);
        let xf = vf(&sp, &[(1, coord(&sp, 2)), (2, coord(&sp, 1).neg())]);
        assert!(xf.wedge(&so3(&sp)).unwrap().is_zero());
        // Euler field is not tangent
        let euler = vf(
            &sp,
            &[(0, coord(&sp, 0)), (1, coord(&sp, 1)), (2, coord(&sp, 2))],
        );
        let w = euler.wedge(&so3(&sp)).unwrap();
        assert!(!w.is_zero());
    }

    #[test]
    fn exterior_derivative_basics() {
        let sp = space(&["x", "y", "z"]);
        let x = coord(&sp, 0);
        // d(x dy) = dx ^ dy
        let xdy = Skew::from_components(&sp, 1, [(vec![1], x.clone())]).unwrap();
        let d = xdy.exterior_derivative();
        let dxdy =
            Skew::from_components(&sp, 2, [(vec![0, 1], Jet::constant(&sp, rat_int(1), n8()))])
                .unwrap();
        assert!(d.eq_through(&dxdy, 7));
        // d^2 = 0 on a messy function
        let f = x.mul(&coord(&sp, 1)).add(&coord(&sp, 2).mul(&x).mul(&x));
        let f0: DifferentialFormField<Rat> =
            Skew::from_components(&sp, 0, [(vec![], f)]).unwrap();
        let ddf = f0.exterior_derivative().exterior_derivative();
        assert!(ddf.is_zero());
        // d(i_E omega) = 3 omega for the Euler field E
        let e2form = Skew::from_components(
            &sp,
            2,
            [
                (vec![1, 2], coord(&sp, 0)),
                (vec![0, 2], coord(&sp, 1).neg()),
                (vec![0, 1], coord(&sp, 2)),
            ],
        )
        .unwrap();
        let d3 = e2form.exterior_derivative();
        let vol: DifferentialFormField<Rat> = volume_form(&sp, n8());
        assert!(d3.eq_through(&vol.mul_rat(&rat_int(3)), 7));
    }

    #[test]
    fn interior_product_and_flat() {
        let sp = space(&["x", "y", "z"]);
        let dx = DifferentialFormField::<Rat>::coordinate_form(&sp, 0, n8());
        let dy = DifferentialFormField::coordinate_form(&sp, 1, n8());
        let dxdy = dx.wedge(&dy).unwrap();
        let ex = PolyVectorField::coordinate_field(&sp, 0, n8());
        let contracted = dxdy.interior(&ex).unwrap();
        assert!(contracted.eq_through(&dy, 8));
        // i_{Pi_so3} Omega = x dx + y dy + z dz
        let alpha = so3(&sp).omega_flat();
        let expect = Skew::from_components(
            &sp,
            1,
            [
                (vec![0], coord(&sp, 0)),
                (vec![1], coord(&sp, 1)),
                (vec![2], coord(&sp, 2)),
            ],
        )
        .unwrap();
        assert!(alpha.eq_through(&expect, 8));
        // flat then sharp round-trips
        assert!(alpha.omega_sharp().eq_through(&so3(&sp), 8));
        // degree mismatch errors: a trivector cannot contract into a 2-form
        let tri: PolyVectorField<Rat> =
            Skew::from_components(&sp, 3, [(vec![0, 1, 2], Jet::constant(&sp, rat_int(1), n8()))])
                .unwrap();
        assert!(dxdy.interior(&tri).is_err());
    }

    #[test]
    fn cartan_formula() {
        let sp = space(&["x", "y", "z"]);
        let x = coord(&sp, 0);
        let y = coord(&sp, 1);
        let z = coord(&sp, 2);
        let xfield = vf(&sp, &[(0, y.mul(&z)), (1, x.mul(&x)), (2, z.clone())]);
        let omega = Skew::from_components(
            &sp,
            2,
            [
                (vec![0, 1], z.mul(&z).add(&x)),
                (vec![1, 2], y.clone()),
            ],
        )
        .unwrap();
        let lhs = omega.lie_derivative(&xfield).unwrap();
        let rhs = omega
            .exterior_derivative()
            .interior(&xfield)
            .unwrap()
            .add(&omega.interior(&xfield).unwrap().exterior_derivative());
        assert!(lhs.eq_through(&rhs, 6));
    }

    #[test]
    fn pushforward_basics() {
        let sp = space(&["x", "y"]);
        let dxdy = Skew::from_components(
            &sp,
            2,
            [(vec![0, 1], Jet::constant(&sp, rat_int(1), n8()))],
        )
        .unwrap();
        // identity fixes the bivector
        let id = JetMap::<Rat>::identity(&sp, n8());
        assert!(dxdy.pushforward(&id).unwrap().eq_through(&dxdy, 8));
        // a linear map scales d/dx ^ d/dy by its determinant
        let m = vec![
            vec![rat_int(2), rat_int(1)],
            vec![rat_int(1), rat_int(1)],
        ];
        let lin = JetMap::linear(&sp, &sp, &m, n8());
        let pushed = dxdy.pushforward(&lin).unwrap();
        assert!(pushed.eq_through(&dxdy.mul_rat(&rat_int(1)), 8)); // det = 1
        let m2 = vec![
            vec![rat_int(3), rat_int(0)],
            vec![rat_int(0), rat(1, 2)],
        ];
        let lin2 = JetMap::linear(&sp, &sp, &m2, n8());
        let pushed2 = dxdy.pushforward(&lin2).unwrap();
        assert!(pushed2.eq_through(&dxdy.mul_rat(&rat(3, 2)), 8));
        // round-trip through a nonlinear map
        let xj = coord(&sp, 0);
        let yj = coord(&sp, 1);
        let phi = JetMap::new(
            sp.clone(),
            sp.clone(),
            vec![xj.add(&yj.mul(&yj)), yj.clone()],
        )
        .unwrap();
        let fwd = dxdy.pushforward(&phi).unwrap();
        let back = fwd.pushforward(&phi.invert().unwrap()).unwrap();
        assert!(back.eq_through(&dxdy, 6));
    }

    #[test]
    fn pushforward_respects_brackets() {
        let sp = space(&["x", "y", "z"]);
        let pi = so3(&sp);
        let xf = vf(&sp, &[(0, coord(&sp, 1)), (2, coord(&sp, 0).mul(&coord(&sp, 0)))]);
        let phi = JetMap::new(
            sp.clone(),
            sp.clone(),
            vec![
                coord(&sp, 0).add(&coord(&sp, 2).mul(&coord(&sp, 2))),
                coord(&sp, 1),
                coord(&sp, 2),
            ],
        )
        .unwrap();
        let lhs = xf.schouten(&pi).unwrap().pushforward(&phi).unwrap();
        let rhs = xf
            .pushforward(&phi)
            .unwrap()
            .schouten(&pi.pushforward(&phi).unwrap())
            .unwrap();
        assert!(lhs.eq_through(&rhs, 5));
    }
}
