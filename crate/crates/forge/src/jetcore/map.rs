//! Formal coordinate changes: tuples of jets fixing the origin.

use std::fmt;
use std::sync::Arc;

use super::jet::{same_space, Jet, OrderBound, Space};
use super::scalar::{Rat, Scalar, TPoly};
use crate::error::{Error, Result};
use crate::linalg::invert_scalar_matrix;

/// A formal map between coordinate charts. Components are jets in the
/// source variables, one per target coordinate, all vanishing at the
/// origin.
#[derive(Clone, PartialEq)]
pub struct JetMap<R: Scalar = Rat> {
    source: Arc<Space>,
    target: Arc<Space>,
    comps: Vec<Jet<R>>,
}

impl<R: Scalar> fmt::Debug for JetMap<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "JetMap {:?} -> {:?}", self.source.vars(), self.target.vars())?;
        for (i, c) in self.comps.iter().enumerate() {
            writeln!(f, "  {} = {}", self.target.var_name(i), c.render())?;
        }
        Ok(())
    }
}

impl<R: Scalar> JetMap<R> {
    pub fn new(source: Arc<Space>, target: Arc<Space>, comps: Vec<Jet<R>>) -> Result<Self> {
        if comps.len() != target.dim() {
            return Err(Error::VarMismatch(format!(
                "map needs {} components, got {}",
                target.dim(),
                comps.len()
            )));
        }
        for c in &comps {
            if !same_space(c.space(), &source) {
                return Err(Error::VarMismatch(
                    "map component not in the source space".into(),
                ));
            }
            if !c.constant_term().is_zero() {
                return Err(Error::SchemaError(
                    "map component does not fix the origin".into(),
                ));
            }
        }
        Ok(JetMap {
            source,
            target,
            comps,
        })
    }

    pub fn identity(space: &Arc<Space>, order: OrderBound) -> Self {
        let comps = (0..space.dim())
            .map(|i| Jet::coordinate(space, i, order))
            .collect();
        JetMap {
            source: space.clone(),
            target: space.clone(),
            comps,
        }
    }

    /// Linear map u -> M u between spaces of equal dimension.
    pub fn linear(source: &Arc<Space>, target: &Arc<Space>, m: &[Vec<R>], order: OrderBound) -> Self {
        let comps = m
            .iter()
            .map(|row| {
                let mut acc = Jet::zero(source, order);
                for (i, c) in row.iter().enumerate() {
                    acc = acc.add(&Jet::coordinate(source, i, order).mul_scalar(c));
                }
                acc
            })
            .collect();
        JetMap {
            source: source.clone(),
            target: target.clone(),
            comps,
        }
    }

    pub fn source(&self) -> &Arc<Space> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Space> {
        &self.target
    }

    pub fn components(&self) -> &[Jet<R>] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &Jet<R> {
        &self.comps[i]
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn order(&self) -> OrderBound {
        self.comps
            .iter()
            .map(Jet::order)
            .fold(OrderBound::Exact, OrderBound::min)
    }

    pub fn truncated(&self, order: OrderBound) -> Self {
        JetMap {
            source: self.source.clone(),
            target: self.target.clone(),
            comps: self.comps.iter().map(|c| c.truncated(order)).collect(),
        }
    }

    /// Jacobian at the origin as a matrix indexed `[target][source]`.
    pub fn linear_part(&self) -> Vec<Vec<R>> {
        self.comps
            .iter()
            .map(|c| (0..self.source.dim()).map(|i| c.linear_coeff(i)).collect())
            .collect()
    }

    /// Substitute this map into a jet on the target space.
    pub fn pull_jet(&self, f: &Jet<R>) -> Result<Jet<R>> {
        if !same_space(f.space(), &self.target) {
            return Err(Error::VarMismatch(
                "jet is not defined on the map target".into(),
            ));
        }
        f.substitute(&self.comps)
    }

    /// outer after inner: the map u -> outer(inner(u)).
    pub fn compose(outer: &JetMap<R>, inner: &JetMap<R>) -> Result<JetMap<R>> {
        JetMap::compose_truncated(outer, inner, OrderBound::Exact)
    }

    /// Composition truncated at an explicit order; use this when composing
    /// exact polynomial charts, whose full composite would otherwise be
    /// expanded before truncation.
    pub fn compose_truncated(
        outer: &JetMap<R>,
        inner: &JetMap<R>,
        cap: OrderBound,
    ) -> Result<JetMap<R>> {
        if !same_space(&inner.target, &outer.source) {
            return Err(Error::VarMismatch(format!(
                "compose: inner target {:?} != outer source {:?}",
                inner.target.vars(),
                outer.source.vars()
            )));
        }
        let refs: Vec<&Jet<R>> = outer.comps.iter().collect();
        let comps = Jet::substitute_many_capped(&refs, &inner.comps, cap)?;
        Ok(JetMap {
            source: inner.source.clone(),
            target: outer.target.clone(),
            comps,
        })
    }

    /// Degree-by-degree inverse; requires an invertible linear part. The
    /// inverse is computed through the map's own order (or through the
    /// stored degree for exact maps).
    pub fn invert(&self) -> Result<JetMap<R>> {
        let cap = match self.order() {
            OrderBound::UpTo(c) => c,
            OrderBound::Exact => {
                // a polynomial map generally has a non-polynomial inverse;
                // invert through the largest stored degree
                self.comps.iter().map(Jet::max_degree).max().unwrap_or(1).max(1)
            }
        };
        self.invert_to(cap)
    }

    /// Inverse computed through an explicit truncation degree.
    pub fn invert_to(&self, cap: u32) -> Result<JetMap<R>> {
        let lin = self.linear_part();
        let linv = invert_scalar_matrix(&lin).ok_or_else(|| {
            Error::SingularLinearPart("map linear part is not invertible".into())
        })?;
        let order = self.order();
        let work = order.min(OrderBound::UpTo(cap));
        let mut g = JetMap::linear(&self.target, &self.source, &linv, work);
        let id = JetMap::identity(&self.target, work);
        for _ in 0..=cap {
            // e = f(g) - id on the target space
            let fg = JetMap::compose(&self.truncated(work), &g)?;
            let mut done = true;
            let mut new_comps = Vec::with_capacity(g.dim());
            let errs: Vec<Jet<R>> = fg
                .comps
                .iter()
                .zip(id.comps.iter())
                .map(|(a, b)| a.sub(b))
                .collect();
            if errs.iter().any(|e| !e.is_zero()) {
                done = false;
            }
            for j in 0..g.dim() {
                let mut corr = Jet::zero(&self.target, work);
                for (i, e) in errs.iter().enumerate() {
                    corr = corr.add(&e.mul_scalar(&linv[j][i]));
                }
                new_comps.push(g.comps[j].sub(&corr));
            }
            g = JetMap {
                source: self.target.clone(),
                target: self.source.clone(),
                comps: new_comps,
            };
            if done {
                break;
            }
        }
        // the inverse of an exact linear map is itself exact
        if self.order() == OrderBound::Exact
            && self.comps.iter().all(|c| c.max_degree() <= 1)
        {
            g = g.frozen_exact();
        }
        Ok(g)
    }

    /// Declare the stored components to be the exact map; see
    /// [`Jet::frozen_exact`].
    pub fn frozen_exact(&self) -> Self {
        JetMap {
            source: self.source.clone(),
            target: self.target.clone(),
            comps: self.comps.iter().map(Jet::frozen_exact).collect(),
        }
    }

    pub fn is_identity_through(&self, d: u32) -> bool {
        if !same_space(&self.source, &self.target) {
            return false;
        }
        self.comps
            .iter()
            .enumerate()
            .all(|(i, c)| c.eq_through(&Jet::coordinate(&self.source, i, c.order()), d))
    }

    /// Componentwise equality through degree `d`.
    pub fn eq_through(&self, rhs: &JetMap<R>, d: u32) -> bool {
        self.comps.len() == rhs.comps.len()
            && self
                .comps
                .iter()
                .zip(&rhs.comps)
                .all(|(a, b)| a.eq_through(b, d))
    }

    pub fn map_scalars<S: Scalar>(&self, f: impl Fn(&R) -> S) -> JetMap<S> {
        JetMap {
            source: self.source.clone(),
            target: self.target.clone(),
            comps: self.comps.iter().map(|c| c.map_scalars(&f)).collect(),
        }
    }
}

impl JetMap<Rat> {
    pub fn lift_t(&self) -> JetMap<TPoly> {
        self.map_scalars(|c| TPoly::constant(c.clone()))
    }
}

impl JetMap<TPoly> {
    pub fn eval_t(&self, t: &Rat) -> JetMap<Rat> {
        self.map_scalars(|c| c.eval(t))
    }

    pub fn d_dt(&self) -> Vec<Jet<TPoly>> {
        self.comps.iter().map(Jet::d_dt).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcore::jet::{space, Mono};
    use crate::jetcore::scalar::rat_int;

    fn n(c: u32) -> OrderBound {
        OrderBound::UpTo(c)
    }

    #[test]
    fn compose_identity() {
        let sp = space(&["x", "y"]);
        let id = JetMap::<Rat>::identity(&sp, n(8));
        let x = Jet::coordinate(&sp, 0, n(8));
        let y = Jet::coordinate(&sp, 1, n(8));
        let f = JetMap::new(sp.clone(), sp.clone(), vec![x.add(&y.mul(&y)), y.clone()]).unwrap();
        assert!(JetMap::compose(&id, &f).unwrap().eq_through(&f, 8));
        assert!(JetMap::compose(&f, &id).unwrap().eq_through(&f, 8));
    }

    #[test]
    fn compose_var_mismatch() {
        let a = space(&["x"]);
        let b = space(&["u"]);
        let f = JetMap::<Rat>::identity(&a, n(4));
        let g = JetMap::<Rat>::identity(&b, n(4));
        assert!(matches!(
            JetMap::compose(&f, &g),
            Err(Error::VarMismatch(_))
        ));
    }

    #[test]
    fn invert_catalan() {
        let sp = space(&["x"]);
        let x = Jet::<Rat>::coordinate(&sp, 0, n(8));
        let f = JetMap::new(sp.clone(), sp.clone(), vec![x.add(&x.mul(&x))]).unwrap();
        let g = f.invert().unwrap();
        // inverse of x + x^2 has signed Catalan coefficients
        let expect = [1i64, -1, 2, -5, 14, -42, 132, -429];
        for (k, &c) in expect.iter().enumerate() {
            assert_eq!(g.component(0).coeff(&Mono(vec![(k + 1) as u16])), rat_int(c));
        }
        // round trip both ways
        assert!(JetMap::compose(&f, &g).unwrap().is_identity_through(8));
        assert!(JetMap::compose(&g, &f).unwrap().is_identity_through(8));
    }

    #[test]
    fn invert_singular() {
        let sp = space(&["x"]);
        let x = Jet::<Rat>::coordinate(&sp, 0, n(4));
        let f = JetMap::new(sp.clone(), sp.clone(), vec![x.mul(&x)]).unwrap();
        assert!(matches!(
            f.invert(),
            Err(Error::SingularLinearPart(_))
        ));
    }
}
