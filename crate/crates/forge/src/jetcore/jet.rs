//! Truncated multivariate formal power series with exact coefficients.
//!
//! A `Jet` stores the terms of a formal series through some total degree.
//! Every jet carries an order bound recording how far its coefficients can
//! be trusted: `Exact` means the value is the whole object (a polynomial),
//! `UpTo(c)` means coefficients of total degree <= c are correct and
//! nothing is stored above. Operations combine bounds with the standard
//! truncated-series rules, so a pipeline always knows the largest degree
//! through which its output is certified.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::scalar::{Rat, Scalar, TPoly};
use crate::error::{Error, Result};

/// Ordered list of coordinate names; shared between all values of one chart.
#[derive(Debug, PartialEq, Eq)]
pub struct Space {
    vars: Vec<String>,
}

impl Space {
    pub fn new<S: Into<String>>(vars: Vec<S>) -> Arc<Space> {
        Arc::new(Space {
            vars: vars.into_iter().map(Into::into).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_name(&self, i: usize) -> &str {
        &self.vars[i]
    }
}

/// Build a space from string slices.
pub fn space(vars: &[&str]) -> Arc<Space> {
    Space::new(vars.to_vec())
}

pub fn same_space(a: &Arc<Space>, b: &Arc<Space>) -> bool {
    Arc::ptr_eq(a, b) || a.vars == b.vars
}

/// Exponent multi-index ordered graded-lexicographically: total degree
/// first, then entry-wise comparison. This is the canonical ordering for
/// serialization and for pivot tie-breaking everywhere in the kernel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mono(pub Vec<u16>);

impl Mono {
    pub fn zero(dim: usize) -> Self {
        Mono(vec![0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Mono(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn mul(&self, rhs: &Mono) -> Mono {
        Mono(
            self.0
                .iter()
                .zip(&rhs.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// Degree counted over a subset of the variables.
    pub fn degree_on(&self, idx: &[usize]) -> u32 {
        idx.iter().map(|&i| self.0[i] as u32).sum()
    }

    pub fn divides(&self, rhs: &Mono) -> bool {
        self.0.iter().zip(&rhs.0).all(|(a, b)| a <= b)
    }

    pub fn div(&self, rhs: &Mono) -> Mono {
        Mono(
            self.0
                .iter()
                .zip(&rhs.0)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

/// Validity bound of a jet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderBound {
    /// The stored terms are the entire object.
    Exact,
    /// Coefficients of total degree <= c are correct.
    UpTo(u32),
}

impl OrderBound {
    pub fn min(self, other: OrderBound) -> OrderBound {
        use OrderBound::*;
        match (self, other) {
            (Exact, o) | (o, Exact) => o,
            (UpTo(a), UpTo(b)) => UpTo(a.min(b)),
        }
    }

    pub fn plus(self, d: u32) -> OrderBound {
        match self {
            OrderBound::Exact => OrderBound::Exact,
            OrderBound::UpTo(c) => OrderBound::UpTo(c + d),
        }
    }

    pub fn minus(self, d: u32) -> OrderBound {
        match self {
            OrderBound::Exact => OrderBound::Exact,
            OrderBound::UpTo(c) => OrderBound::UpTo(c.saturating_sub(d)),
        }
    }

    pub fn admits(self, degree: u32) -> bool {
        match self {
            OrderBound::Exact => true,
            OrderBound::UpTo(c) => degree <= c,
        }
    }

    /// Numeric order for reports; `None` for exact values.
    pub fn as_u32(self) -> Option<u32> {
        match self {
            OrderBound::Exact => None,
            OrderBound::UpTo(c) => Some(c),
        }
    }
}

impl fmt::Display for OrderBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderBound::Exact => write!(f, "exact"),
            OrderBound::UpTo(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct Jet<R: Scalar = Rat> {
    space: Arc<Space>,
    order: OrderBound,
    terms: BTreeMap<Mono, R>,
}

impl<R: Scalar> fmt::Debug for Jet<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet[{}; {}]", self.render(), self.order)
    }
}

impl<R: Scalar> Jet<R> {
    pub fn zero(space: &Arc<Space>, order: OrderBound) -> Self {
        Jet {
            space: space.clone(),
            order,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(space: &Arc<Space>, c: R, order: OrderBound) -> Self {
        let mut j = Jet::zero(space, order);
        if !c.is_zero() {
            j.terms.insert(Mono::zero(space.dim()), c);
        }
        j
    }

    /// The coordinate function of variable `i`.
    pub fn coordinate(space: &Arc<Space>, i: usize, order: OrderBound) -> Self {
        let mut j = Jet::zero(space, order);
        if order.admits(1) {
            j.terms.insert(Mono::unit(space.dim(), i), R::one());
        }
        j
    }

    pub fn from_terms(
        space: &Arc<Space>,
        order: OrderBound,
        terms: impl IntoIterator<Item = (Mono, R)>,
    ) -> Self {
        let mut j = Jet::zero(space, order);
        for (m, c) in terms {
            debug_assert_eq!(m.0.len(), space.dim());
            if !c.is_zero() && order.admits(m.degree()) {
                let entry = j.terms.entry(m).or_insert_with(R::zero);
                *entry = entry.add(&c);
            }
        }
        j.terms.retain(|_, c| !c.is_zero());
        j
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn order(&self) -> OrderBound {
        self.order
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Mono, &R)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Mono) -> R {
        self.terms.get(m).cloned().unwrap_or_else(R::zero)
    }

    pub fn constant_term(&self) -> R {
        self.coeff(&Mono::zero(self.dim()))
    }

    /// Coefficient of the linear monomial in variable `i`.
    pub fn linear_coeff(&self, i: usize) -> R {
        self.coeff(&Mono::unit(self.dim(), i))
    }

    /// Smallest total degree of a stored term, or `None` for the zero jet.
    pub fn low_degree(&self) -> Option<u32> {
        self.terms.keys().next().map(Mono::degree)
    }

    pub fn max_degree(&self) -> u32 {
        self.terms.keys().next_back().map_or(0, Mono::degree)
    }

    /// Effective low degree for order bookkeeping: the unknown tail of an
    /// `UpTo(c)` jet starts at degree c+1.
    fn eff_low(&self) -> OrderBound {
        match (self.low_degree(), self.order) {
            (Some(l), OrderBound::UpTo(c)) => OrderBound::UpTo(l.min(c + 1)),
            (Some(l), OrderBound::Exact) => OrderBound::UpTo(l),
            (None, OrderBound::UpTo(c)) => OrderBound::UpTo(c + 1),
            (None, OrderBound::Exact) => OrderBound::Exact, // exactly zero
        }
    }

    /// Declare the stored terms to be the entire object. Only meaningful
    /// for values the caller constructs by choice (charts, models); never
    /// apply it to data computed from truncated inputs.
    pub fn frozen_exact(&self) -> Self {
        Jet {
            space: self.space.clone(),
            order: OrderBound::Exact,
            terms: self.terms.clone(),
        }
    }

    pub fn truncated(&self, order: OrderBound) -> Self {
        let order = self.order.min(order);
        let mut j = Jet::zero(&self.space, order);
        for (m, c) in &self.terms {
            if order.admits(m.degree()) {
                j.terms.insert(m.clone(), c.clone());
            }
        }
        j
    }

    /// Keep only the homogeneous part of the given total degree.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        let mut j = Jet::zero(&self.space, self.order);
        for (m, c) in &self.terms {
            if m.degree() == d {
                j.terms.insert(m.clone(), c.clone());
            }
        }
        j
    }

    fn check_space(&self, rhs: &Self) -> Result<()> {
        if !same_space(&self.space, &rhs.space) {
            return Err(Error::VarMismatch(format!(
                "{:?} vs {:?}",
                self.space.vars(),
                rhs.space.vars()
            )));
        }
        Ok(())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.check_space(rhs).expect("jet add: var mismatch");
        let order = self.order.min(rhs.order);
        let mut terms = self.truncated(order).terms;
        for (m, c) in &rhs.terms {
            if !order.admits(m.degree()) {
                continue;
            }
            let e = terms.entry(m.clone()).or_insert_with(R::zero);
            *e = e.add(c);
            if e.is_zero() {
                terms.remove(m);
            }
        }
        Jet {
            space: self.space.clone(),
            order,
            terms,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.neg())
    }

    pub fn neg(&self) -> Self {
        Jet {
            space: self.space.clone(),
            order: self.order,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect(),
        }
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        self.check_space(rhs).expect("jet mul: var mismatch");
        // error in A enters at deg >= ord(A)+1 + low(B), and symmetrically
        let order = self
            .order
            .plus_low(rhs.eff_low())
            .min(rhs.order.plus_low(self.eff_low()));
        // collect products, then sort-merge; much cheaper than per-pair
        // tree inserts on dense inputs
        let rhs_terms: Vec<(u32, &Mono, &R)> = rhs
            .terms
            .iter()
            .map(|(m, c)| (m.degree(), m, c))
            .collect();
        let mut prods: Vec<(u32, Mono, R)> = Vec::new();
        for (ma, ca) in &self.terms {
            let da = ma.degree();
            for (db, mb, cb) in &rhs_terms {
                let d = da + db;
                if !order.admits(d) {
                    continue;
                }
                let c = ca.mul(cb);
                if c.is_zero() {
                    continue;
                }
                prods.push((d, ma.mul(mb), c));
            }
        }
        prods.sort_unstable_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1 .0.cmp(&b.1 .0)));
        let mut terms: BTreeMap<Mono, R> = BTreeMap::new();
        let mut it = prods.into_iter();
        if let Some((_, mut cur_m, mut cur_c)) = it.next() {
            for (_, m, c) in it {
                if m == cur_m {
                    cur_c = cur_c.add(&c);
                } else {
                    if !cur_c.is_zero() {
                        terms.insert(cur_m, cur_c);
                    }
                    cur_m = m;
                    cur_c = c;
                }
            }
            if !cur_c.is_zero() {
                terms.insert(cur_m, cur_c);
            }
        }
        Jet {
            space: self.space.clone(),
            order,
            terms,
        }
    }

    pub fn mul_scalar(&self, c: &R) -> Self {
        if c.is_zero() {
            return Jet::zero(&self.space, self.order);
        }
        let mut terms = BTreeMap::new();
        for (m, a) in &self.terms {
            let v = a.mul(c);
            if !v.is_zero() {
                terms.insert(m.clone(), v);
            }
        }
        Jet {
            space: self.space.clone(),
            order: self.order,
            terms,
        }
    }

    pub fn mul_rat(&self, c: &Rat) -> Self {
        self.mul_scalar(&R::from_rat(c.clone()))
    }

    /// Partial derivative with respect to variable `i`.
    pub fn derivative(&self, i: usize) -> Self {
        let order = self.order.minus(1);
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.0[i];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[i] = e - 1;
            if !order.admits(m2.degree()) {
                continue;
            }
            terms.insert(m2, c.mul_rat(&Rat::from_integer(e.into())));
        }
        Jet {
            space: self.space.clone(),
            order,
            terms,
        }
    }

    /// Antiderivative in variable `i` with no constant of integration.
    pub fn antiderivative(&self, i: usize) -> Self {
        let order = self.order.plus(1);
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut m2 = m.clone();
            m2.0[i] += 1;
            let e = m2.0[i];
            terms.insert(m2, c.mul_rat(&Rat::new(1.into(), e.into())));
        }
        Jet {
            space: self.space.clone(),
            order,
            terms,
        }
    }

    /// Substitute `args[i]` for variable `i`. Arguments live in a common
    /// target space and must fix the origin unless `self` is exact.
    pub fn substitute(&self, args: &[Jet<R>]) -> Result<Jet<R>> {
        Ok(Jet::substitute_many(&[self], args)?.remove(0))
    }

    /// Substitute the same arguments into a batch of jets, sharing the
    /// power cache of the arguments across the whole batch.
    pub fn substitute_many(jets: &[&Jet<R>], args: &[Jet<R>]) -> Result<Vec<Jet<R>>> {
        Jet::substitute_many_capped(jets, args, OrderBound::Exact)
    }

    /// Batched substitution with an explicit output truncation; prevents
    /// exact-through-exact compositions from expanding the full
    /// polynomial composite before truncating.
    pub fn substitute_many_capped(
        jets: &[&Jet<R>],
        args: &[Jet<R>],
        cap: OrderBound,
    ) -> Result<Vec<Jet<R>>> {
        let Some(first) = jets.first() else {
            return Ok(vec![]);
        };
        let dim = first.dim();
        if args.len() != dim {
            return Err(Error::VarMismatch(format!(
                "substitution needs {dim} arguments, got {}",
                args.len()
            )));
        }
        let tspace = if args.is_empty() {
            first.space.clone()
        } else {
            args[0].space.clone()
        };
        for a in args {
            if !same_space(&a.space, &tspace) {
                return Err(Error::VarMismatch(
                    "substitution arguments in different spaces".into(),
                ));
            }
        }
        // shared cache of monomial products: each distinct monomial costs
        // one multiplication, built up from its divisors
        let mut cache: BTreeMap<Mono, Jet<R>> = BTreeMap::new();
        cache.insert(
            Mono::zero(dim),
            Jet::constant(&tspace, R::one(), OrderBound::Exact),
        );
        let mut out = Vec::with_capacity(jets.len());
        for jet in jets {
            if jet.dim() != dim || !same_space(&jet.space, &first.space) {
                return Err(Error::VarMismatch(
                    "batch substitution needs a common source space".into(),
                ));
            }
            let mut order = jet.order.min(cap);
            for (i, a) in args.iter().enumerate() {
                let used = jet.terms.keys().any(|m| m.0[i] > 0);
                if !used {
                    continue;
                }
                if !a.constant_term().is_zero() && jet.order != OrderBound::Exact {
                    return Err(Error::OrderMismatch(
                        "substituting a jet with nonzero constant term into a truncated series"
                            .into(),
                    ));
                }
                order = order.min(a.order);
            }
            let mut acc = Jet::zero(&tspace, order);
            for (m, c) in &jet.terms {
                let p = Self::monomial_product(&mut cache, m, args, cap);
                let term = p.mul_scalar(c).truncated(order);
                acc = acc.add(&term);
            }
            out.push(acc.truncated(order));
        }
        Ok(out)
    }

    fn monomial_product(
        cache: &mut BTreeMap<Mono, Jet<R>>,
        m: &Mono,
        args: &[Jet<R>],
        cap: OrderBound,
    ) -> Jet<R> {
        if let Some(p) = cache.get(m) {
            return p.clone();
        }
        let i = m
            .0
            .iter()
            .position(|&e| e > 0)
            .expect("degree-zero monomials are pre-seeded");
        let mut sub = m.clone();
        sub.0[i] -= 1;
        let lower = Self::monomial_product(cache, &sub, args, cap);
        let p = lower.mul(&args[i]).truncated_keeping_order(cap);
        cache.insert(m.clone(), p.clone());
        p
    }

    /// Drop stored terms above `cap` without weakening the order claim
    /// beyond it; internal helper for capped substitution.
    fn truncated_keeping_order(&self, cap: OrderBound) -> Self {
        match cap {
            OrderBound::Exact => self.clone(),
            OrderBound::UpTo(_) => self.truncated(cap),
        }
    }

    /// Series division by a jet whose constant term is a unit.
    pub fn div_unit(&self, den: &Self) -> Result<Self> {
        self.check_space(den)?;
        let c0 = den.constant_term();
        let inv0 = c0.inv().ok_or_else(|| {
            Error::ZeroDenominator("denominator constant term is not a unit".into())
        })?;
        let order = self.order.min(den.order);
        let cap = match order {
            OrderBound::UpTo(c) => c,
            OrderBound::Exact => self.max_degree().max(den.max_degree()) + 1,
        };
        // q is built degree by degree from q*den = self
        let den_pos = {
            let mut d = den.truncated(order);
            d.terms.remove(&Mono::zero(self.dim()));
            d
        };
        let mut q = Jet::zero(&self.space, order);
        for d in 0..=cap {
            let mut rhs = self.homogeneous_part(d);
            if !q.is_zero() && !den_pos.is_zero() {
                let prod = q.mul(&den_pos).homogeneous_part(d);
                rhs = rhs.sub(&prod);
            }
            let part = rhs.mul_scalar(&inv0);
            q = q.add(&part.with_order(order));
        }
        Ok(q)
    }

    fn with_order(mut self, order: OrderBound) -> Self {
        self.order = order;
        self.terms.retain(|m, _| order.admits(m.degree()));
        self
    }

    /// Exact polynomial division by graded-lex leading-term reduction.
    /// Returns the quotient when `den` divides the stored part of `self`
    /// through the reachable order; `None` if a reduction step fails.
    pub fn div_exact_poly(&self, den: &Self) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Jet::zero(&self.space, self.order.min(den.order)));
        }
        let low = den.low_degree().unwrap_or(0);
        let order = self.order.min(den.order).minus(low);
        let (lead_m, lead_c) = den.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone()))?;
        let mut rem = self.clone();
        let mut quot = Jet::zero(&self.space, order);
        while let Some((m, c)) = rem.terms.iter().next_back().map(|(m, c)| (m.clone(), c.clone())) {
            if !lead_m.divides(&m) {
                return None;
            }
            let qc = c.div_exact(&lead_c)?;
            let qm = m.div(&lead_m);
            let mut step = Jet::zero(&self.space, OrderBound::Exact);
            step.terms.insert(qm, qc);
            rem = rem.sub(&step.mul(den).with_order(rem.order));
            quot = quot.add(&step.with_order(order));
        }
        Some(quot)
    }

    /// True when all stored coefficients through `d` vanish.
    pub fn vanishes_through(&self, d: u32) -> bool {
        self.terms.keys().all(|m| m.degree() > d)
    }

    /// Equality of coefficients through total degree `d`.
    pub fn eq_through(&self, rhs: &Self, d: u32) -> bool {
        same_space(&self.space, &rhs.space) && self.sub(rhs).vanishes_through(d)
    }

    /// Largest degree through which both jets are certified, then compare.
    pub fn eq_upto_order(&self, rhs: &Self) -> bool {
        let diff = self.sub(rhs);
        match diff.order {
            OrderBound::Exact => diff.is_zero(),
            OrderBound::UpTo(c) => diff.vanishes_through(c),
        }
    }

    /// Map coefficients into another scalar ring.
    pub fn map_scalars<S: Scalar>(&self, f: impl Fn(&R) -> S) -> Jet<S> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let v = f(c);
            if !v.is_zero() {
                terms.insert(m.clone(), v);
            }
        }
        Jet {
            space: self.space.clone(),
            order: self.order,
            terms,
        }
    }

    /// Move the jet into a larger space, sending variable `i` of the source
    /// to variable `positions[i]` of the target.
    pub fn embed(&self, target: &Arc<Space>, positions: &[usize]) -> Jet<R> {
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut e = vec![0u16; target.dim()];
            for (i, &x) in m.0.iter().enumerate() {
                e[positions[i]] = x;
            }
            terms.insert(Mono(e), c.clone());
        }
        Jet {
            space: target.clone(),
            order: self.order,
            terms,
        }
    }

    /// Restrict to the subspace spanned by `keep` (indices into the current
    /// space). Errors if a stored term involves a dropped variable.
    pub fn restrict(&self, target: &Arc<Space>, keep: &[usize]) -> Result<Jet<R>> {
        let dropped: Vec<usize> = (0..self.dim()).filter(|i| !keep.contains(i)).collect();
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            if dropped.iter().any(|&i| m.0[i] > 0) {
                return Err(Error::Internal(format!(
                    "restriction drops nonzero coefficient on {:?}",
                    self.space.vars()
                )));
            }
            let e: Vec<u16> = keep.iter().map(|&i| m.0[i]).collect();
            terms.insert(Mono(e), c.clone());
        }
        Ok(Jet {
            space: target.clone(),
            order: self.order,
            terms,
        })
    }

    /// Rebind to a space with identical dimension (variable renaming).
    pub fn rename(&self, target: &Arc<Space>) -> Jet<R> {
        assert_eq!(self.dim(), target.dim());
        Jet {
            space: target.clone(),
            order: self.order,
            terms: self.terms.clone(),
        }
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in &self.terms {
            let mut mono = String::new();
            for (i, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !mono.is_empty() {
                    mono.push('*');
                }
                mono.push_str(self.space.var_name(i));
                if e > 1 {
                    mono.push_str(&format!("^{e}"));
                }
            }
            let cs = c.render();
            let part = if mono.is_empty() {
                format!("({cs})")
            } else if cs == "1" {
                mono
            } else if cs == "-1" {
                format!("-{mono}")
            } else {
                format!("({cs})*{mono}")
            };
            parts.push(part);
        }
        let mut out = String::new();
        for (i, p) in parts.iter().enumerate() {
            if i > 0 && !p.starts_with('-') {
                out.push('+');
            }
            out.push_str(p);
        }
        out
    }
}

impl OrderBound {
    /// ord(self) + low(other), the degree where an unknown tail of one
    /// factor first contaminates a product.
    fn plus_low(self, low: OrderBound) -> OrderBound {
        match (self, low) {
            (OrderBound::Exact, _) | (_, OrderBound::Exact) => OrderBound::Exact,
            (OrderBound::UpTo(c), OrderBound::UpTo(l)) => OrderBound::UpTo(c + l),
        }
    }
}

impl Jet<Rat> {
    /// Lift rational coefficients into the t-polynomial ring.
    pub fn lift_t(&self) -> Jet<TPoly> {
        self.map_scalars(|c| TPoly::constant(c.clone()))
    }
}

impl Jet<TPoly> {
    /// Evaluate the t-polynomial coefficients at a rational time.
    pub fn eval_t(&self, t: &Rat) -> Jet<Rat> {
        self.map_scalars(|c| c.eval(t))
    }

    /// Coefficient-wise d/dt.
    pub fn d_dt(&self) -> Jet<TPoly> {
        self.map_scalars(|c| c.d_dt())
    }

    /// Coefficient-wise t-antiderivative with zero value at t = 0.
    pub fn int_dt(&self) -> Jet<TPoly> {
        self.map_scalars(|c| c.int_dt())
    }

    /// Largest t-degree appearing in any coefficient.
    pub fn t_degree(&self) -> usize {
        self.terms.values().map(|c| c.degree()).max().unwrap_or(0)
    }

    /// True when every coefficient is constant in t.
    pub fn t_constant(&self) -> bool {
        self.terms.values().all(|c| c.is_constant())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcore::scalar::{rat, rat_int};

    fn n8() -> OrderBound {
        OrderBound::UpTo(8)
    }

    #[test]
    fn graded_lex_ordering() {
        // degree first, then lexicographic on exponents
        let a = Mono(vec![2, 0]);
        let b = Mono(vec![1, 1]);
        let c = Mono(vec![0, 2]);
        let d = Mono(vec![0, 1]);
        assert!(d < c && c < b && b < a);
    }

    #[test]
    fn arithmetic_and_truncation() {
        let sp = space(&["x", "y"]);
        let x = Jet::<Rat>::coordinate(&sp, 0, n8());
        let y = Jet::<Rat>::coordinate(&sp, 1, n8());
        let p = x.add(&y).mul(&x.sub(&y));
        assert_eq!(p.coeff(&Mono(vec![2, 0])), rat_int(1));
        assert_eq!(p.coeff(&Mono(vec![0, 2])), rat_int(-1));
        assert_eq!(p.coeff(&Mono(vec![1, 1])), rat_int(0));

        // truncation: (1+x)*(1-x+x^2-...) = 1 through the working order
        let one = Jet::constant(&sp, rat_int(1), n8());
        let geom = {
            let mut acc = Jet::zero(&sp, n8());
            let mut sign = rat_int(1);
            for k in 0..=8u16 {
                let mut m = Mono::zero(2);
                m.0[0] = k;
                acc = acc.add(&Jet::from_terms(&sp, n8(), [(m, sign.clone())]));
                sign = -sign;
            }
            acc
        };
        let prod = one.add(&x).mul(&geom);
        assert!(prod.sub(&one).vanishes_through(8));
    }

    #[test]
    fn order_bookkeeping() {
        let sp = space(&["x"]);
        let x = Jet::<Rat>::coordinate(&sp, 0, n8());
        // derivative loses one order, antiderivative gains one
        assert_eq!(x.derivative(0).order(), OrderBound::UpTo(7));
        assert_eq!(x.antiderivative(0).order(), OrderBound::UpTo(9));
        // a low-degree factor shields a product from the weaker bound
        let weak = Jet::<Rat>::coordinate(&sp, 0, OrderBound::UpTo(3));
        let x5 = x.mul(&x).mul(&x).mul(&x).mul(&x);
        let p = weak.mul(&x5);
        assert_eq!(p.order(), OrderBound::UpTo(8));
    }

    #[test]
    fn series_division() {
        let sp = space(&["x"]);
        let x = Jet::<Rat>::coordinate(&sp, 0, n8());
        let one = Jet::constant(&sp, rat_int(1), n8());
        let inv = one.div_unit(&one.sub(&x)).unwrap();
        for k in 0..=8u16 {
            assert_eq!(inv.coeff(&Mono(vec![k])), rat_int(1));
        }
        assert!(one.div_unit(&x).is_err());
    }

    #[test]
    fn exact_polynomial_division() {
        let sp = space(&["x", "y"]);
        let x = Jet::<Rat>::coordinate(&sp, 0, n8());
        let y = Jet::<Rat>::coordinate(&sp, 1, n8());
        let num = x.mul(&x).mul(&y).add(&x.mul(&y).mul(&y)); // xy(x+y)
        let den = x.add(&y);
        let q = num.div_exact_poly(&den).unwrap();
        assert!(q.eq_through(&x.mul(&y), 6));
        // x^3 not divisible by x^4
        let x3 = x.mul(&x).mul(&x);
        let x4 = x3.mul(&x);
        assert!(x3.div_exact_poly(&x4).is_none());
        assert!(x4.div_exact_poly(&x3).unwrap().eq_through(&x, 4));
    }

    #[test]
    fn substitution() {
        let sp = space(&["x"]);
        let x = Jet::<Rat>::coordinate(&sp, 0, n8());
        let f = x.add(&x.mul(&x)); // x + x^2
        let g = f.substitute(std::slice::from_ref(&f)).unwrap();
        // x + 2x^2 + 2x^3 + x^4
        assert_eq!(g.coeff(&Mono(vec![1])), rat_int(1));
        assert_eq!(g.coeff(&Mono(vec![2])), rat_int(2));
        assert_eq!(g.coeff(&Mono(vec![3])), rat_int(2));
        assert_eq!(g.coeff(&Mono(vec![4])), rat_int(1));
        assert_eq!(g.coeff(&Mono(vec![5])), rat_int(0));
    }

    #[test]
    fn lift_and_eval_t() {
        let sp = space(&["x"]);
        let x = Jet::<Rat>::coordinate(&sp, 0, n8());
        let xt = x.lift_t().mul_scalar(&TPoly::t());
        assert_eq!(xt.eval_t(&rat(1, 2)), x.mul_rat(&rat(1, 2)));
        assert_eq!(xt.d_dt(), x.lift_t());
    }
}
