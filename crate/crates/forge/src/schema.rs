//! Canonical JSON encoding of the kernel's value types. Serialization is
//! deterministic: struct field order is fixed, terms are emitted in
//! graded-lex order, and coefficients are decimal-free rational strings.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coupling::GeometricData;
use crate::equivariant::{FiniteGroupAction, GroupElement};
use crate::error::{Error, Result};
use crate::jetcore::jet::{Jet, Mono, OrderBound, Space};
use crate::jetcore::map::JetMap;
use crate::jetcore::scalar::{parse_rat, render_rat, Rat};
use crate::jetcore::tensor::{DifferentialFormField, PolyVectorField, Skew};
use crate::liealg::{Dim3Model, LieAlgebraSC};
use crate::linalg::RatMat;
use crate::splitting::SplitResult;

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
pub enum OrderDoc {
    UpTo(u32),
    Exact(String),
}

impl OrderDoc {
    fn to_bound(&self) -> Result<OrderBound> {
        match self {
            OrderDoc::UpTo(c) => Ok(OrderBound::UpTo(*c)),
            OrderDoc::Exact(s) if s == "exact" => Ok(OrderBound::Exact),
            OrderDoc::Exact(s) => Err(Error::SchemaError(format!(
                "order must be a number or \"exact\", got {s:?}"
            ))),
        }
    }

    fn from_bound(b: OrderBound) -> Self {
        match b {
            OrderBound::UpTo(c) => OrderDoc::UpTo(c),
            OrderBound::Exact => OrderDoc::Exact("exact".into()),
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub mono: Vec<u16>,
    pub coeff: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct JetDoc {
    pub vars: Vec<String>,
    pub order: OrderDoc,
    pub terms: Vec<TermDoc>,
}

impl JetDoc {
    pub fn from_jet(j: &Jet<Rat>) -> Self {
        JetDoc {
            vars: j.space().vars().to_vec(),
            order: OrderDoc::from_bound(j.order()),
            terms: j
                .terms()
                .map(|(m, c)| TermDoc {
                    mono: m.0.clone(),
                    coeff: render_rat(c),
                })
                .collect(),
        }
    }

    pub fn to_jet(&self, space: &Arc<Space>) -> Result<Jet<Rat>> {
        if space.vars() != self.vars.as_slice() {
            return Err(Error::SchemaError(format!(
                "jet variables {:?} do not match {:?}",
                self.vars,
                space.vars()
            )));
        }
        let order = self.order.to_bound()?;
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if t.mono.len() != space.dim() {
                return Err(Error::SchemaError(format!(
                    "monomial {:?} has wrong arity",
                    t.mono
                )));
            }
            terms.push((Mono(t.mono.clone()), parse_rat(&t.coeff)?));
        }
        Ok(Jet::from_terms(space, order, terms))
    }

    pub fn space(&self) -> Arc<Space> {
        Space::new(self.vars.clone())
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    pub idx: Vec<u8>,
    pub jet: JetDoc,
}

/// Multivector fields and differential forms share this document shape;
/// `kind` distinguishes them.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct TensorDoc {
    pub vars: Vec<String>,
    pub order: OrderDoc,
    pub degree: usize,
    pub components: Vec<ComponentDoc>,
}

impl TensorDoc {
    pub fn from_multivector(t: &PolyVectorField<Rat>) -> Self {
        TensorDoc {
            vars: t.space().vars().to_vec(),
            order: OrderDoc::from_bound(t.order()),
            degree: t.degree(),
            components: t
                .components()
                .map(|(idx, jet)| ComponentDoc {
                    idx: idx.clone(),
                    jet: JetDoc::from_jet(jet),
                })
                .collect(),
        }
    }

    pub fn from_form(t: &DifferentialFormField<Rat>) -> Self {
        TensorDoc {
            vars: t.space().vars().to_vec(),
            order: OrderDoc::from_bound(t.order()),
            degree: t.degree(),
            components: t
                .components()
                .map(|(idx, jet)| ComponentDoc {
                    idx: idx.clone(),
                    jet: JetDoc::from_jet(jet),
                })
                .collect(),
        }
    }

    pub fn space(&self) -> Arc<Space> {
        Space::new(self.vars.clone())
    }

    pub fn to_multivector(&self) -> Result<PolyVectorField<Rat>> {
        let space = self.space();
        let comps = self
            .components
            .iter()
            .map(|c| Ok((c.idx.clone(), c.jet.to_jet(&space)?)))
            .collect::<Result<Vec<_>>>()?;
        Skew::from_components(&space, self.degree, comps)
    }

    pub fn to_form(&self) -> Result<DifferentialFormField<Rat>> {
        let space = self.space();
        let comps = self
            .components
            .iter()
            .map(|c| Ok((c.idx.clone(), c.jet.to_jet(&space)?)))
            .collect::<Result<Vec<_>>>()?;
        Skew::from_components(&space, self.degree, comps)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct JetMapDoc {
    pub source_vars: Vec<String>,
    pub target_vars: Vec<String>,
    pub components: Vec<JetDoc>,
}

impl JetMapDoc {
    pub fn from_map(m: &JetMap<Rat>) -> Self {
        JetMapDoc {
            source_vars: m.source().vars().to_vec(),
            target_vars: m.target().vars().to_vec(),
            components: m.components().iter().map(JetDoc::from_jet).collect(),
        }
    }

    pub fn to_map(&self) -> Result<JetMap<Rat>> {
        let source = Space::new(self.source_vars.clone());
        let target = Space::new(self.target_vars.clone());
        let comps = self
            .components
            .iter()
            .map(|c| c.to_jet(&source))
            .collect::<Result<Vec<_>>>()?;
        JetMap::new(source, target, comps)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct GroupElementDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jetmap: Option<JetMapDoc>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct GroupDoc {
    pub dim: usize,
    pub elements: Vec<GroupElementDoc>,
}

impl GroupDoc {
    pub fn from_action(g: &FiniteGroupAction) -> Self {
        GroupDoc {
            dim: g.dim(),
            elements: g
                .elements()
                .iter()
                .map(|e| match e {
                    GroupElement::Matrix(m) => GroupElementDoc {
                        matrix: Some(
                            m.iter()
                                .map(|row| row.iter().map(render_rat).collect())
                                .collect(),
                        ),
                        jetmap: None,
                    },
                    GroupElement::Map(f) => GroupElementDoc {
                        matrix: None,
                        jetmap: Some(JetMapDoc::from_map(f)),
                    },
                })
                .collect(),
        }
    }

    pub fn to_action(&self) -> Result<FiniteGroupAction> {
        let mut elements = Vec::with_capacity(self.elements.len());
        for e in &self.elements {
            match (&e.matrix, &e.jetmap) {
                (Some(m), None) => {
                    let mat: RatMat = m
                        .iter()
                        .map(|row| row.iter().map(|s| parse_rat(s)).collect())
                        .collect::<Result<Vec<_>>>()?;
                    if mat.len() != self.dim || mat.iter().any(|r| r.len() != self.dim) {
                        return Err(Error::SchemaError(
                            "group matrix has the wrong shape".into(),
                        ));
                    }
                    elements.push(GroupElement::Matrix(mat));
                }
                (None, Some(j)) => elements.push(GroupElement::Map(j.to_map()?)),
                _ => {
                    return Err(Error::SchemaError(
                        "group element needs exactly one of matrix or jetmap".into(),
                    ))
                }
            }
        }
        FiniteGroupAction::new(self.dim, elements)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct BracketDoc {
    pub i: usize,
    pub j: usize,
    pub c: Vec<String>,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct LieAlgebraDoc {
    pub dim: usize,
    pub brackets: Vec<BracketDoc>,
}

impl LieAlgebraDoc {
    pub fn from_algebra(g: &LieAlgebraSC) -> Self {
        LieAlgebraDoc {
            dim: g.dim(),
            brackets: g
                .entries()
                .map(|((i, j), row)| BracketDoc {
                    i: *i,
                    j: *j,
                    c: row.iter().map(render_rat).collect(),
                })
                .collect(),
        }
    }

    pub fn to_algebra(&self) -> Result<LieAlgebraSC> {
        let entries = self
            .brackets
            .iter()
            .map(|b| {
                Ok((
                    b.i,
                    b.j,
                    b.c.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>>>()?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        LieAlgebraSC::new(self.dim, entries)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub model: String,
    #[serde(skip_serializing_if = "Option::is_none", rename = "A")]
    pub a: Option<Vec<Vec<String>>>,
}

impl ModelDoc {
    pub fn from_model(m: &Dim3Model) -> Self {
        match m {
            Dim3Model::SolvableA(a) => ModelDoc {
                model: "solvableA".into(),
                a: Some(
                    a.iter()
                        .map(|row| row.iter().map(render_rat).collect())
                        .collect(),
                ),
            },
            Dim3Model::So3 => ModelDoc {
                model: "so3".into(),
                a: None,
            },
            Dim3Model::Sl2 => ModelDoc {
                model: "sl2".into(),
                a: None,
            },
        }
    }

    pub fn to_model(&self) -> Result<Dim3Model> {
        match self.model.as_str() {
            "so3" => Ok(Dim3Model::So3),
            "sl2" => Ok(Dim3Model::Sl2),
            "solvableA" => {
                let a = self.a.as_ref().ok_or_else(|| {
                    Error::SchemaError("solvableA model needs the matrix A".into())
                })?;
                if a.len() != 2 || a.iter().any(|r| r.len() != 2) {
                    return Err(Error::SchemaError("A must be a 2x2 matrix".into()));
                }
                let mat = a
                    .iter()
                    .map(|row| row.iter().map(|s| parse_rat(s)).collect())
                    .collect::<Result<Vec<_>>>()?;
                Ok(Dim3Model::SolvableA(mat))
            }
            other => Err(Error::SchemaError(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntryDoc {
    pub a: usize,
    pub b: usize,
    pub jet: JetDoc,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct GeometricDataDoc {
    pub base_dim: usize,
    pub vertical: TensorDoc,
    pub connection: Vec<TensorDoc>,
    /// Strict upper-triangular part of the coupling form.
    pub coupling_form: Vec<CouplingEntryDoc>,
}

impl GeometricDataDoc {
    pub fn from_data(d: &GeometricData<Rat>) -> Self {
        let mut coupling_form = Vec::new();
        for a in 0..d.base_dim() {
            for b in a + 1..d.base_dim() {
                coupling_form.push(CouplingEntryDoc {
                    a,
                    b,
                    jet: JetDoc::from_jet(&d.coupling()[a][b]),
                });
            }
        }
        GeometricDataDoc {
            base_dim: d.base_dim(),
            vertical: TensorDoc::from_multivector(d.vertical()),
            connection: d
                .connection()
                .iter()
                .map(TensorDoc::from_multivector)
                .collect(),
            coupling_form,
        }
    }

    pub fn to_data(&self) -> Result<GeometricData<Rat>> {
        let vertical = self.vertical.to_multivector()?;
        let space = vertical.space().clone();
        let connection = self
            .connection
            .iter()
            .map(|t| t.to_multivector())
            .collect::<Result<Vec<_>>>()?;
        let k2 = self.base_dim;
        let mut coupling =
            vec![vec![Jet::zero(&space, OrderBound::Exact); k2]; k2];
        for e in &self.coupling_form {
            if e.a >= e.b || e.b >= k2 {
                return Err(Error::SchemaError(format!(
                    "coupling entry ({},{}) is not strict upper-triangular",
                    e.a, e.b
                )));
            }
            let jet = e.jet.to_jet(&space)?;
            coupling[e.a][e.b] = jet.clone();
            coupling[e.b][e.a] = jet.neg();
        }
        GeometricData::new(space, k2, vertical, connection, coupling)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct SplitResultDoc {
    pub chart: JetMapDoc,
    pub symplectic_rank: usize,
    pub transverse: TensorDoc,
}

impl SplitResultDoc {
    pub fn from_result(r: &SplitResult<Rat>) -> Self {
        SplitResultDoc {
            chart: JetMapDoc::from_map(&r.chart),
            symplectic_rank: r.symplectic_rank,
            transverse: TensorDoc::from_multivector(r.transverse.bivector()),
        }
    }
}

/// Canonical pretty serialization used everywhere the kernel emits JSON.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serialization cannot fail")
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::SchemaError(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetcore::jet::space;
    use crate::jetcore::scalar::rat;

    #[test]
    fn jet_round_trip() {
        let sp = space(&["x", "y"]);
        let x = Jet::<Rat>::coordinate(&sp, 0, OrderBound::UpTo(8));
        let j = x.mul(&x).mul_rat(&rat(1, 3)).add(&Jet::coordinate(&sp, 1, OrderBound::UpTo(8)));
        let doc = JetDoc::from_jet(&j);
        let text = to_canonical_json(&doc);
        assert!(text.contains("\"1/3\""));
        let back: JetDoc = parse_json(&text).unwrap();
        assert_eq!(back.to_jet(&sp).unwrap(), j);
    }

    #[test]
    fn bad_coefficient_rejected() {
        let text = r#"{"vars":["x"],"order":4,"terms":[{"mono":[1],"coeff":"1/0"}]}"#;
        let doc: JetDoc = parse_json(text).unwrap();
        assert!(matches!(
            doc.to_jet(&space(&["x"])),
            Err(Error::SchemaError(_))
        ));
    }

    #[test]
    fn unknown_field_rejected() {
        let text = r#"{"vars":["x"],"order":4,"terms":[],"unknown_field":1}"#;
        let err = parse_json::<JetDoc>(text).unwrap_err();
        match err {
            Error::SchemaError(m) => assert!(m.contains("unknown_field")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn model_round_trip() {
        for m in [
            Dim3Model::So3,
            Dim3Model::Sl2,
            Dim3Model::SolvableA(vec![
                vec![rat(1, 1), rat(0, 1)],
                vec![rat(0, 1), rat(1, 1)],
            ]),
        ] {
            let doc = ModelDoc::from_model(&m);
            let back = parse_json::<ModelDoc>(&to_canonical_json(&doc))
                .unwrap()
                .to_model()
                .unwrap();
            assert_eq!(back, m);
        }
    }
}
