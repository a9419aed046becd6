//! Error type shared by every module of the kernel.
//!
//! Each variant carries a human-readable message; `kind()` returns the
//! stable identifier that reports and the CLI print, so scripts can match
//! on it without parsing prose.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("variable mismatch: {0}")]
    VarMismatch(String),
    #[error("truncation order mismatch: {0}")]
    OrderMismatch(String),
    #[error("linear part is singular: {0}")]
    SingularLinearPart(String),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("bivector is not Poisson: {0}")]
    NotPoisson(String),
    #[error("field is not tangent to the symplectic foliation: {0}")]
    NotTangent(String),
    #[error("zero denominator in leafwise pairing: {0}")]
    ZeroDenominator(String),
    #[error("pairing has no jet representative: {0}")]
    NotTame(String),
    #[error("base block degenerate at the origin: {0}")]
    DegenerateBaseBlock(String),
    #[error("coupling form degenerate at the origin: {0}")]
    DegenerateCouplingForm(String),
    #[error("vertical components disagree: {0}")]
    VerticalMismatch(String),
    #[error("element set is not a group: {0}")]
    NotAGroup(String),
    #[error("action does not preserve the structure: {0}")]
    NotInvariant(String),
    #[error("path is not Poisson for formal t: {0}")]
    NotPoissonPath(String),
    #[error("1-jet of the path varies with t: {0}")]
    OneJetDrift(String),
    #[error("flow generator has nonzero linear part: {0}")]
    LinearPartNotZero(String),
    #[error("linear part does not match the model: {0}")]
    LinearPartMismatch(String),
    #[error("Killing form is degenerate: {0}")]
    DegenerateKillingForm(String),
    #[error("homological equation unsolvable at degree {degree}: {detail}")]
    HomologicalObstruction { degree: u32, detail: String },
    #[error("structure constants invalid: {0}")]
    InvalidConstants(String),
    #[error("bracket table not in a recognized model basis: {0}")]
    NotInModelBasis(String),
    #[error("division system inconsistent: {0}")]
    NoSolution(String),
    #[error("wedge with divisor is nonzero: {0}")]
    NotAnnihilated(String),
    #[error("pairing shape unsupported: {0}")]
    UnsupportedPairing(String),
    #[error("parse error: {0}")]
    ParseError(String),
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    /// Stable machine-readable identifier for this error kind.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            VarMismatch(_) => "VarMismatch",
            OrderMismatch(_) => "OrderMismatch",
            SingularLinearPart(_) => "SingularLinearPart",
            DegreeMismatch(_) => "DegreeMismatch",
            NotPoisson(_) => "NotPoisson",
            NotTangent(_) => "NotTangent",
            ZeroDenominator(_) => "ZeroDenominator",
            NotTame(_) => "NotTame",
            DegenerateBaseBlock(_) => "DegenerateBaseBlock",
            DegenerateCouplingForm(_) => "DegenerateCouplingForm",
            VerticalMismatch(_) => "VerticalMismatch",
            NotAGroup(_) => "NotAGroup",
            NotInvariant(_) => "NotInvariant",
            NotPoissonPath(_) => "NotPoissonPath",
            OneJetDrift(_) => "OneJetDrift",
            LinearPartNotZero(_) => "LinearPartNotZero",
            LinearPartMismatch(_) => "LinearPartMismatch",
            DegenerateKillingForm(_) => "DegenerateKillingForm",
            HomologicalObstruction { .. } => "HomologicalObstruction",
            InvalidConstants(_) => "InvalidConstants",
            NotInModelBasis(_) => "NotInModelBasis",
            NoSolution(_) => "NoSolution",
            NotAnnihilated(_) => "NotAnnihilated",
            UnsupportedPairing(_) => "UnsupportedPairing",
            ParseError(_) => "ParseError",
            SchemaError(_) => "SchemaError",
            Usage(_) => "Usage",
            Internal(_) => "Internal",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
