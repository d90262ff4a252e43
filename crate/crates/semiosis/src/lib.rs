//! Evaluation engine for multi-valued relational specifications.
//!
//! Everything in this crate is parameterized by a *truth algebra* — a bounded
//! commutative residuated lattice `(Ω, ⊗, ⇒, ∨, ∧, ⊥, ⊤)` — so "relation"
//! means an Ω-valued tensor over named attribute domains rather than a set of
//! rows, and "diagram" means a multi-graph of such relations whose limit is
//! again a relation. The modules stack roughly bottom-up:
//!
//! * [`algebra`] — the truth algebras themselves: the three classical t-norms
//!   on `[0,1]`, explicit finite chains, and finite products of algebras,
//!   plus a law-checking harness for the residuation and divisibility laws.
//! * [`omega`] — finite supports carrying Ω-valued similarity relations,
//!   their products, extents, and observable (sup-projected) views.
//! * [`relation`] — multi-morphisms: Ω-tensors with designated source and
//!   target attribute lists, composed by named sup-⊗ joins, classified as
//!   total/faithful/epi/mono/iso.
//! * [`diagram`] — multi-graphs whose vertices carry similarity spaces and
//!   whose hyper-arrows carry multi-morphisms; limits, colimits, specialized
//!   (co)equalizers/pullbacks/pushouts, and commutativity degrees.
//! * [`bayes`] — residuated conditioning in divisible algebras: classifiers,
//!   chaining, and independent combination.
//! * [`grammar`] — the syntactic layer: polarized sign ontologies, word
//!   gluing, component libraries, configuration validation against a
//!   library, diagram gluing, and refinement to normal form.
//! * [`semiotic`] — sign systems and their models: constraint validation,
//!   interpretation of configurations as (co)limits, logic builtins,
//!   connective lifting, and integration of several systems into one.
//! * [`consistency`] — graded consistency of concept descriptions against
//!   interpreted diagrams, answer sets, modal interior/closure operators,
//!   and the consequence relation, all over finite hypothesis pools.
//! * [`io`] — JSON/CSV spec loading and the named workspace the CLI runs on.
//!
//! Evaluation is exact: supports are finite and explicitly enumerated, and
//! aggregations (sup-⊗ joins, limit folds) stream over index spaces with
//! lattice short-circuiting instead of approximating. Continuous examples are
//! handled by caller-supplied grids — the engine never discretizes on its own.

pub mod algebra;
pub mod bayes;
pub mod consistency;
pub mod diagram;
pub mod grammar;
pub mod io;
pub mod omega;
pub mod relation;
pub mod report;
pub mod semiotic;
pub mod tensor;

pub use algebra::{Connective, MLAlgebra, Padding, TruthValue};
pub use omega::OmegaSet;
pub use relation::MultiMorphism;
pub use report::Report;
pub use tensor::Tensor;

/// Absolute tolerance for comparing unit-interval truth values.
///
/// Order comparisons stay exact; only *equality* of computed reals is
/// tolerance-aware, since sup-⊗ folds accumulate rounding in the last bits.
pub const EPS: f64 = 1e-9;

/// Default ceiling on evaluation work for limit/colimit folds: the number of
/// index-space nodes an evaluation may visit (and the number of cells an
/// output tensor may hold) before aborting with [`Error::CellBudget`].
pub const DEFAULT_CELL_BUDGET: usize = 10_000_000;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the whole engine.
///
/// The split that matters downstream: `CellBudget` and validation-flavored
/// variants describe *properties that failed to hold*, while the rest are
/// malformed-input errors. The CLI maps the former to exit code 1 and the
/// latter to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("value {value} is not in the carrier of the {algebra} algebra")]
    CarrierMismatch { algebra: String, value: String },
    #[error("a product algebra needs at least one component")]
    EmptyProduct,
    #[error("component index {index} out of range for arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },
    #[error("{0} is not a product algebra")]
    NotAProductAlgebra(String),
    #[error("malformed algebra: {0}")]
    InvalidAlgebra(String),

    #[error("malformed Ω-set `{set}`: {reason}")]
    InvalidOmegaSet { set: String, reason: String },
    #[error("unknown element `{element}` in Ω-set `{set}`")]
    UnknownElement { set: String, element: String },
    #[error("Ω-sets `{left}` and `{right}` belong to different algebras")]
    AlgebraMismatch { left: String, right: String },
    #[error("Ω-set `{0}` is not a declared attribute product")]
    NotAProduct(String),
    #[error("Ω-set `{set}` violates {law} at {witness}")]
    SimilarityViolation {
        set: String,
        law: &'static str,
        witness: String,
    },

    #[error("malformed relation `{relation}`: {reason}")]
    InvalidRelation { relation: String, reason: String },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("cannot compose: {0}")]
    CompositionMismatch(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("malformed diagram: {0}")]
    InvalidDiagram(String),
    #[error("evaluation visited {visited} nodes, over the budget of {budget}")]
    CellBudget { visited: usize, budget: usize },
    #[error("the diagram declares no source vertices")]
    EmptySources,
    #[error("decomposition needs g ≤ diagonal; violated at {witness}")]
    DecomposePrecondition { witness: String },

    #[error("operation requires a divisible algebra, but {algebra} is not")]
    NotDivisible { algebra: String },

    #[error("unknown sign `{0}`")]
    UnknownSign(String),
    #[error("malformed ontology: {0}")]
    InvalidOntology(String),
    #[error("malformed library: {0}")]
    InvalidLibrary(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("invalid refinement rule for `{label}`: {reason}")]
    InvalidRefinement { label: String, reason: String },

    #[error("sign `{0}` has no interpretation")]
    MissingInterpretation(String),
    #[error("integration clash: sign `{0}` has conflicting interpretations")]
    InterpretationClash(String),
    #[error("integration clash: component `{0}` has conflicting arities")]
    ArityClash(String),

    #[error("concept signatures are incomparable: {0}")]
    SignatureMismatch(String),
    #[error("malformed hypothesis pool: {0}")]
    InvalidPool(String),
    #[error("formula atom `{0}` does not resolve in the pool")]
    UnknownAtom(String),
    #[error("cannot parse formula: {0}")]
    FormulaSyntax(String),

    #[error("unknown {kind} `{name}`")]
    UnknownReference { kind: &'static str, name: String },
    #[error("malformed spec {path}: {reason}")]
    Spec { path: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that report a *failed property* on well-formed input,
    /// as opposed to malformed input.
    pub fn is_property_failure(&self) -> bool {
        matches!(
            self,
            Error::CellBudget { .. }
                | Error::SimilarityViolation { .. }
                | Error::DecomposePrecondition { .. }
                | Error::InterpretationClash(..)
                | Error::ArityClash(..)
        )
    }
}
