//! Truth algebras: bounded commutative residuated lattices.
//!
//! An algebra here is a carrier `Ω` with a commutative monoidal product `⊗`
//! (unit `⊤`), its residuum `⇒` (the right adjoint: `x⊗y ≤ z ⟺ x ≤ y⇒z`),
//! and lattice meet/join under the carrier order. Three carriers are
//! supported: the unit interval under the Łukasiewicz, Gödel, or product
//! t-norm (plus the two-element Boolean sub-case), explicit finite chains
//! with user-supplied `⊗`/`⇒` tables, and finite products of algebras with
//! everything computed componentwise.
//!
//! *Divisible* algebras additionally satisfy `x ⊗ (x ⇒ y) = x ∧ y`; the
//! three t-norms all qualify, finite chains are checked exhaustively at
//! construction, and a product is divisible iff every component is. The
//! residuated-conditioning module refuses to run on anything else.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::report::Report;
use crate::{Error, Result, EPS};

/// A value of some truth algebra.
///
/// `Real` carries unit-interval algebras (including Boolean, whose carrier is
/// `{0.0, 1.0}`), `Fin` a labelled element of a finite chain, and `Tuple` an
/// element of a product algebra, one entry per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TruthValue {
    Real(f64),
    Fin(String),
    Tuple(Vec<TruthValue>),
}

impl TruthValue {
    /// Equality with absolute tolerance [`EPS`] on reals; labels compare
    /// exactly and tuples componentwise.
    pub fn approx_eq(&self, other: &TruthValue) -> bool {
        match (self, other) {
            (TruthValue::Real(a), TruthValue::Real(b)) => (a - b).abs() <= EPS,
            (TruthValue::Fin(a), TruthValue::Fin(b)) => a == b,
            (TruthValue::Tuple(a), TruthValue::Tuple(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.approx_eq(y))
            }
            _ => false,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            TruthValue::Real(v) => Some(*v),
            _ => None,
        }
    }
}

/// Reports render reals with exactly six decimals so identical inputs always
/// produce byte-identical output.
impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthValue::Real(v) => write!(f, "{v:.6}"),
            TruthValue::Fin(label) => write!(f, "{label}"),
            TruthValue::Tuple(parts) => {
                write!(f, "(")?;
                for (i, part) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{part}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// The binary connectives every algebra evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Connective {
    /// Monoidal product `⊗`.
    Tensor,
    /// Residuum `⇒`.
    Implies,
    /// Lattice meet `∧`.
    Meet,
    /// Lattice join `∨`.
    Join,
    /// Biimplication `⇔`, computed as `(x⇒y) ⊗ (y⇒x)`.
    Iff,
}

impl Connective {
    pub const ALL: [Connective; 5] = [
        Connective::Tensor,
        Connective::Implies,
        Connective::Meet,
        Connective::Join,
        Connective::Iff,
    ];
}

impl fmt::Display for Connective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let symbol = match self {
            Connective::Tensor => "⊗",
            Connective::Implies => "⇒",
            Connective::Meet => "∧",
            Connective::Join => "∨",
            Connective::Iff => "⇔",
        };
        write!(f, "{symbol}")
    }
}

/// Which padding [`MLAlgebra::embed`] uses for the foreign components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// `⊥` everywhere except the embedded component.
    BotPadded,
    /// `⊤` everywhere except the embedded component; this is the embedding
    /// integration uses, since `⊤` padding makes foreign constraints vacuous.
    TopPadded,
}

/// An explicit finite chain with user-supplied operation tables.
///
/// Elements are ordered by their position in `labels` (`⊥` first, `⊤` last);
/// meet and join derive from that order, while `⊗` and `⇒` are table lookups.
/// Nothing forces the tables to satisfy the residuated-lattice laws — that is
/// what [`MLAlgebra::check_laws`] is for — but divisibility is computed once
/// here because it gates the conditioning module.
#[derive(Debug, Clone)]
pub struct FiniteChain {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    tensor: Vec<usize>,
    implies: Vec<usize>,
    divisible: bool,
}

impl PartialEq for FiniteChain {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.tensor == other.tensor && self.implies == other.implies
    }
}

impl FiniteChain {
    /// Build a chain from labels (in ascending order) and label-valued
    /// operation tables, `table[x][y]` row-indexed by the left operand.
    pub fn new(
        labels: Vec<String>,
        tensor: Vec<Vec<String>>,
        implies: Vec<Vec<String>>,
    ) -> Result<FiniteChain> {
        if labels.is_empty() {
            return Err(Error::InvalidAlgebra("a chain needs at least one element".into()));
        }
        let mut index = HashMap::new();
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::InvalidAlgebra(format!(
                    "duplicate chain element `{label}`"
                )));
            }
        }
        let n = labels.len();
        let flatten = |name: &str, table: Vec<Vec<String>>| -> Result<Vec<usize>> {
            if table.len() != n || table.iter().any(|row| row.len() != n) {
                return Err(Error::InvalidAlgebra(format!(
                    "{name} table must be {n}×{n}"
                )));
            }
            table
                .into_iter()
                .flatten()
                .map(|label| {
                    index.get(&label).copied().ok_or_else(|| {
                        Error::InvalidAlgebra(format!("{name} table mentions unknown element `{label}`"))
                    })
                })
                .collect()
        };
        let tensor = flatten("tensor", tensor)?;
        let implies = flatten("implies", implies)?;
        let divisible = (0..n).all(|x| {
            (0..n).all(|y| tensor[x * n + implies[x * n + y]] == x.min(y))
        });
        Ok(FiniteChain {
            labels,
            index,
            tensor,
            implies,
            divisible,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }
}

/// A bounded commutative residuated lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum MLAlgebra {
    /// The two-element chain `{0.0, 1.0}`; all three t-norms coincide here.
    Boolean,
    /// `[0,1]` with `x⊗y = min(x,y)`.
    Goedel,
    /// `[0,1]` with `x⊗y = x·y`.
    Product,
    /// `[0,1]` with `x⊗y = max(0, x+y−1)`.
    Lukasiewicz,
    FiniteChain(FiniteChain),
    /// Componentwise product of algebras; carrier is the tuple space.
    ProductOf(Vec<MLAlgebra>),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum RealKind {
    Boolean,
    Goedel,
    Product,
    Lukasiewicz,
}

impl MLAlgebra {
    pub fn product_algebra(components: Vec<MLAlgebra>) -> Result<MLAlgebra> {
        if components.is_empty() {
            return Err(Error::EmptyProduct);
        }
        Ok(MLAlgebra::ProductOf(components))
    }

    /// Short human-readable name used in errors and reports.
    pub fn name(&self) -> String {
        match self {
            MLAlgebra::Boolean => "boolean".into(),
            MLAlgebra::Goedel => "goedel".into(),
            MLAlgebra::Product => "product_tnorm".into(),
            MLAlgebra::Lukasiewicz => "lukasiewicz".into(),
            MLAlgebra::FiniteChain(chain) => format!("finite_chain({})", chain.labels.len()),
            MLAlgebra::ProductOf(parts) => {
                let names: Vec<String> = parts.iter().map(MLAlgebra::name).collect();
                format!("product_of({})", names.join(","))
            }
        }
    }

    fn real_kind(&self) -> Option<RealKind> {
        match self {
            MLAlgebra::Boolean => Some(RealKind::Boolean),
            MLAlgebra::Goedel => Some(RealKind::Goedel),
            MLAlgebra::Product => Some(RealKind::Product),
            MLAlgebra::Lukasiewicz => Some(RealKind::Lukasiewicz),
            _ => None,
        }
    }

    pub fn bot(&self) -> TruthValue {
        match self {
            MLAlgebra::FiniteChain(chain) => TruthValue::Fin(chain.labels[0].clone()),
            MLAlgebra::ProductOf(parts) => {
                TruthValue::Tuple(parts.iter().map(MLAlgebra::bot).collect())
            }
            _ => TruthValue::Real(0.0),
        }
    }

    pub fn top(&self) -> TruthValue {
        match self {
            MLAlgebra::FiniteChain(chain) => {
                TruthValue::Fin(chain.labels[chain.labels.len() - 1].clone())
            }
            MLAlgebra::ProductOf(parts) => {
                TruthValue::Tuple(parts.iter().map(MLAlgebra::top).collect())
            }
            _ => TruthValue::Real(1.0),
        }
    }

    pub fn is_bot(&self, v: &TruthValue) -> bool {
        v.approx_eq(&self.bot())
    }

    pub fn is_top(&self, v: &TruthValue) -> bool {
        v.approx_eq(&self.top())
    }

    /// Whether `x ⊗ (x ⇒ y) = x ∧ y` holds.
    pub fn divisible(&self) -> bool {
        match self {
            MLAlgebra::FiniteChain(chain) => chain.divisible,
            MLAlgebra::ProductOf(parts) => parts.iter().all(MLAlgebra::divisible),
            _ => true,
        }
    }

    pub fn contains(&self, v: &TruthValue) -> bool {
        match (self, v) {
            (MLAlgebra::Boolean, TruthValue::Real(x)) => *x == 0.0 || *x == 1.0,
            (MLAlgebra::Goedel | MLAlgebra::Product | MLAlgebra::Lukasiewicz, TruthValue::Real(x)) => {
                (0.0..=1.0).contains(x)
            }
            (MLAlgebra::FiniteChain(chain), TruthValue::Fin(label)) => {
                chain.position(label).is_some()
            }
            (MLAlgebra::ProductOf(parts), TruthValue::Tuple(vs)) => {
                parts.len() == vs.len()
                    && parts.iter().zip(vs).all(|(alg, v)| alg.contains(v))
            }
            _ => false,
        }
    }

    fn expect(&self, v: &TruthValue) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::CarrierMismatch {
                algebra: self.name(),
                value: v.to_string(),
            })
        }
    }

    fn real_tensor(kind: RealKind, x: f64, y: f64) -> f64 {
        match kind {
            RealKind::Boolean | RealKind::Goedel => x.min(y),
            RealKind::Product => x * y,
            RealKind::Lukasiewicz => (x + y - 1.0).max(0.0),
        }
    }

    fn real_implies(kind: RealKind, x: f64, y: f64) -> f64 {
        if x <= y {
            return 1.0;
        }
        match kind {
            RealKind::Boolean | RealKind::Goedel => y,
            RealKind::Product => y / x,
            RealKind::Lukasiewicz => (1.0 - x + y).min(1.0),
        }
    }

    /// Evaluate a binary connective. Both operands must lie in the carrier.
    pub fn eval(&self, conn: Connective, x: &TruthValue, y: &TruthValue) -> Result<TruthValue> {
        self.expect(x)?;
        self.expect(y)?;
        Ok(self.eval_unchecked(conn, x, y))
    }

    /// Internal fast path: carrier membership is the caller's promise.
    ///
    /// Every tensor/limit fold funnels through here, so this avoids the
    /// membership scan that `eval` performs per call.
    pub(crate) fn eval_unchecked(&self, conn: Connective, x: &TruthValue, y: &TruthValue) -> TruthValue {
        if let Connective::Iff = conn {
            let forward = self.eval_unchecked(Connective::Implies, x, y);
            let backward = self.eval_unchecked(Connective::Implies, y, x);
            return self.eval_unchecked(Connective::Tensor, &forward, &backward);
        }
        match self {
            MLAlgebra::ProductOf(parts) => {
                let (TruthValue::Tuple(xs), TruthValue::Tuple(ys)) = (x, y) else {
                    unreachable!("carrier checked");
                };
                TruthValue::Tuple(
                    parts
                        .iter()
                        .zip(xs.iter().zip(ys))
                        .map(|(alg, (a, b))| alg.eval_unchecked(conn, a, b))
                        .collect(),
                )
            }
            MLAlgebra::FiniteChain(chain) => {
                let (TruthValue::Fin(a), TruthValue::Fin(b)) = (x, y) else {
                    unreachable!("carrier checked");
                };
                let (i, j) = (chain.position(a).unwrap(), chain.position(b).unwrap());
                let n = chain.labels.len();
                let k = match conn {
                    Connective::Tensor => chain.tensor[i * n + j],
                    Connective::Implies => chain.implies[i * n + j],
                    Connective::Meet => i.min(j),
                    Connective::Join => i.max(j),
                    Connective::Iff => unreachable!("handled above"),
                };
                TruthValue::Fin(chain.labels[k].clone())
            }
            _ => {
                let kind = self.real_kind().expect("remaining algebras are real");
                let (TruthValue::Real(a), TruthValue::Real(b)) = (x, y) else {
                    unreachable!("carrier checked");
                };
                let v = match conn {
                    Connective::Tensor => Self::real_tensor(kind, *a, *b),
                    Connective::Implies => Self::real_implies(kind, *a, *b),
                    Connective::Meet => a.min(*b),
                    Connective::Join => a.max(*b),
                    Connective::Iff => unreachable!("handled above"),
                };
                TruthValue::Real(v)
            }
        }
    }

    pub fn tensor(&self, x: &TruthValue, y: &TruthValue) -> Result<TruthValue> {
        self.eval(Connective::Tensor, x, y)
    }

    pub fn implies(&self, x: &TruthValue, y: &TruthValue) -> Result<TruthValue> {
        self.eval(Connective::Implies, x, y)
    }

    pub fn meet(&self, x: &TruthValue, y: &TruthValue) -> Result<TruthValue> {
        self.eval(Connective::Meet, x, y)
    }

    pub fn join(&self, x: &TruthValue, y: &TruthValue) -> Result<TruthValue> {
        self.eval(Connective::Join, x, y)
    }

    pub fn iff(&self, x: &TruthValue, y: &TruthValue) -> Result<TruthValue> {
        self.eval(Connective::Iff, x, y)
    }

    /// Negation `x ⇒ ⊥`.
    pub fn neg(&self, x: &TruthValue) -> Result<TruthValue> {
        self.implies(x, &self.bot())
    }

    /// Lattice order. Reals compare exactly (no tolerance), chain elements by
    /// position, tuples componentwise.
    pub fn leq(&self, x: &TruthValue, y: &TruthValue) -> Result<bool> {
        self.expect(x)?;
        self.expect(y)?;
        Ok(self.leq_unchecked(x, y))
    }

    pub(crate) fn leq_unchecked(&self, x: &TruthValue, y: &TruthValue) -> bool {
        match (x, y) {
            (TruthValue::Real(a), TruthValue::Real(b)) => a <= b,
            (TruthValue::Fin(a), TruthValue::Fin(b)) => {
                let MLAlgebra::FiniteChain(chain) = self else {
                    unreachable!("carrier checked");
                };
                chain.position(a).unwrap() <= chain.position(b).unwrap()
            }
            (TruthValue::Tuple(xs), TruthValue::Tuple(ys)) => {
                let MLAlgebra::ProductOf(parts) = self else {
                    unreachable!("carrier checked");
                };
                parts
                    .iter()
                    .zip(xs.iter().zip(ys))
                    .all(|(alg, (a, b))| alg.leq_unchecked(a, b))
            }
            _ => unreachable!("carrier checked"),
        }
    }

    /// Order with [`EPS`] slack on reals: `x ≤ y` or `x ≈ y` componentwise.
    /// Law checks use this so float rounding does not fail an honest law.
    pub fn leq_within(&self, x: &TruthValue, y: &TruthValue) -> Result<bool> {
        self.expect(x)?;
        self.expect(y)?;
        Ok(self.leq_within_unchecked(x, y))
    }

    pub(crate) fn leq_within_unchecked(&self, x: &TruthValue, y: &TruthValue) -> bool {
        match (x, y) {
            (TruthValue::Real(a), TruthValue::Real(b)) => *a <= b + EPS,
            (TruthValue::Tuple(xs), TruthValue::Tuple(ys)) => {
                let MLAlgebra::ProductOf(parts) = self else {
                    unreachable!("carrier checked");
                };
                parts
                    .iter()
                    .zip(xs.iter().zip(ys))
                    .all(|(alg, (a, b))| alg.leq_within_unchecked(a, b))
            }
            _ => self.leq_unchecked(x, y),
        }
    }

    /// Arity of a product algebra; `None` for the base algebras.
    pub fn arity(&self) -> Option<usize> {
        match self {
            MLAlgebra::ProductOf(parts) => Some(parts.len()),
            _ => None,
        }
    }

    pub fn components(&self) -> Option<&[MLAlgebra]> {
        match self {
            MLAlgebra::ProductOf(parts) => Some(parts),
            _ => None,
        }
    }

    /// Embed a component value into this product algebra's tuple space, with
    /// the other components padded by `⊥` or `⊤`. The top-padded form is the
    /// right inverse of [`MLAlgebra::project`] that integration relies on.
    pub fn embed(&self, component_index: usize, x: &TruthValue, mode: Padding) -> Result<TruthValue> {
        let MLAlgebra::ProductOf(parts) = self else {
            return Err(Error::NotAProductAlgebra(self.name()));
        };
        if component_index >= parts.len() {
            return Err(Error::IndexOutOfRange {
                index: component_index,
                arity: parts.len(),
            });
        }
        parts[component_index].expect(x)?;
        Ok(TruthValue::Tuple(
            parts
                .iter()
                .enumerate()
                .map(|(i, alg)| {
                    if i == component_index {
                        x.clone()
                    } else {
                        match mode {
                            Padding::BotPadded => alg.bot(),
                            Padding::TopPadded => alg.top(),
                        }
                    }
                })
                .collect(),
        ))
    }

    /// Projection of a product-algebra value onto one component.
    pub fn project(&self, component_index: usize, v: &TruthValue) -> Result<TruthValue> {
        let MLAlgebra::ProductOf(parts) = self else {
            return Err(Error::NotAProductAlgebra(self.name()));
        };
        if component_index >= parts.len() {
            return Err(Error::IndexOutOfRange {
                index: component_index,
                arity: parts.len(),
            });
        }
        self.expect(v)?;
        let TruthValue::Tuple(vs) = v else {
            unreachable!("carrier checked");
        };
        Ok(vs[component_index].clone())
    }

    /// Every element of a finite carrier, in lattice-compatible order;
    /// `None` when the carrier is the whole interval.
    pub fn enumerate(&self) -> Option<Vec<TruthValue>> {
        match self {
            MLAlgebra::Boolean => Some(vec![TruthValue::Real(0.0), TruthValue::Real(1.0)]),
            MLAlgebra::Goedel | MLAlgebra::Product | MLAlgebra::Lukasiewicz => None,
            MLAlgebra::FiniteChain(chain) => Some(
                chain
                    .labels
                    .iter()
                    .map(|label| TruthValue::Fin(label.clone()))
                    .collect(),
            ),
            MLAlgebra::ProductOf(parts) => {
                let per: Vec<Vec<TruthValue>> =
                    parts.iter().map(MLAlgebra::enumerate).collect::<Option<_>>()?;
                let mut out = vec![Vec::new()];
                for axis in &per {
                    let mut next = Vec::with_capacity(out.len() * axis.len());
                    for prefix in &out {
                        for v in axis {
                            let mut tuple = prefix.clone();
                            tuple.push(v.clone());
                            next.push(tuple);
                        }
                    }
                    out = next;
                }
                Some(out.into_iter().map(TruthValue::Tuple).collect())
            }
        }
    }

    /// Uniform sample from the carrier.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> TruthValue {
        match self {
            MLAlgebra::Boolean => TruthValue::Real(if rng.gen::<bool>() { 1.0 } else { 0.0 }),
            MLAlgebra::Goedel | MLAlgebra::Product | MLAlgebra::Lukasiewicz => {
                TruthValue::Real(rng.gen::<f64>())
            }
            MLAlgebra::FiniteChain(chain) => {
                let i = rng.gen_range(0..chain.labels.len());
                TruthValue::Fin(chain.labels[i].clone())
            }
            MLAlgebra::ProductOf(parts) => {
                TruthValue::Tuple(parts.iter().map(|alg| alg.sample(rng)).collect())
            }
        }
    }

    /// Check the residuated-lattice laws and report per-law outcomes.
    ///
    /// Finite carriers (up to 64 elements) are checked exhaustively over all
    /// triples; interval carriers use `sample_budget` seeded random triples
    /// plus every triple over the boundary `{0, 1}`. Failures carry a witness
    /// triple; nothing here returns an error — a corrupted table is a failing
    /// report, not a malformed input.
    pub fn check_laws(&self, sample_budget: usize) -> Report {
        let mut report = Report::new(format!("algebra laws: {}", self.name()));
        let triples = self.law_triples(sample_budget);
        let cases = triples.len();

        self.law(&mut report, "commutativity", &triples, cases, |alg, (x, y, _)| {
            let lhs = alg.eval_unchecked(Connective::Tensor, x, y);
            let rhs = alg.eval_unchecked(Connective::Tensor, y, x);
            lhs.approx_eq(&rhs)
                .then_some(())
                .ok_or_else(|| format!("x⊗y={lhs} but y⊗x={rhs}"))
        });
        self.law(&mut report, "associativity", &triples, cases, |alg, (x, y, z)| {
            let xy = alg.eval_unchecked(Connective::Tensor, x, y);
            let lhs = alg.eval_unchecked(Connective::Tensor, &xy, z);
            let yz = alg.eval_unchecked(Connective::Tensor, y, z);
            let rhs = alg.eval_unchecked(Connective::Tensor, x, &yz);
            lhs.approx_eq(&rhs)
                .then_some(())
                .ok_or_else(|| format!("(x⊗y)⊗z={lhs} but x⊗(y⊗z)={rhs}"))
        });
        self.law(&mut report, "unit", &triples, cases, |alg, (x, _, _)| {
            let lhs = alg.eval_unchecked(Connective::Tensor, &alg.top(), x);
            lhs.approx_eq(x)
                .then_some(())
                .ok_or_else(|| format!("⊤⊗x={lhs} but x={x}"))
        });
        self.law(&mut report, "monotonicity", &triples, cases, |alg, (x, y, z)| {
            if !alg.leq_unchecked(x, y) {
                return Ok(());
            }
            let xz = alg.eval_unchecked(Connective::Tensor, x, z);
            let yz = alg.eval_unchecked(Connective::Tensor, y, z);
            alg.leq_within_unchecked(&xz, &yz)
                .then_some(())
                .ok_or_else(|| format!("x≤y but x⊗z={xz} ⊄ y⊗z={yz}"))
        });
        self.law(&mut report, "residuation", &triples, cases, |alg, (x, y, z)| {
            let xy = alg.eval_unchecked(Connective::Tensor, x, y);
            let res = alg.eval_unchecked(Connective::Implies, y, z);
            let forward = alg.leq_within_unchecked(&xy, z);
            let backward = alg.leq_within_unchecked(x, &res);
            (forward == backward).then_some(()).ok_or_else(|| {
                format!("x⊗y≤z is {forward} but x≤(y⇒z) is {backward} (x⊗y={xy}, y⇒z={res})")
            })
        });
        self.law(&mut report, "tensor-below-meet", &triples, cases, |alg, (x, y, _)| {
            let lhs = alg.eval_unchecked(
                Connective::Tensor,
                x,
                &alg.eval_unchecked(Connective::Implies, x, y),
            );
            let meet = alg.eval_unchecked(Connective::Meet, x, y);
            alg.leq_within_unchecked(&lhs, &meet)
                .then_some(())
                .ok_or_else(|| format!("x⊗(x⇒y)={lhs} exceeds x∧y={meet}"))
        });
        self.law(&mut report, "implication-chain", &triples, cases, |alg, (x, y, z)| {
            let lhs = alg.eval_unchecked(
                Connective::Tensor,
                &alg.eval_unchecked(Connective::Implies, x, y),
                &alg.eval_unchecked(Connective::Implies, y, z),
            );
            let rhs = alg.eval_unchecked(Connective::Implies, x, z);
            alg.leq_within_unchecked(&lhs, &rhs)
                .then_some(())
                .ok_or_else(|| format!("(x⇒y)⊗(y⇒z)={lhs} exceeds x⇒z={rhs}"))
        });
        if self.divisible() {
            self.law(&mut report, "divisibility", &triples, cases, |alg, (x, y, _)| {
                let lhs = alg.eval_unchecked(
                    Connective::Tensor,
                    x,
                    &alg.eval_unchecked(Connective::Implies, x, y),
                );
                let meet = alg.eval_unchecked(Connective::Meet, x, y);
                lhs.approx_eq(&meet)
                    .then_some(())
                    .ok_or_else(|| format!("x⊗(x⇒y)={lhs} but x∧y={meet}"))
            });
        }
        report
    }

    fn law(
        &self,
        report: &mut Report,
        name: &str,
        triples: &[(TruthValue, TruthValue, TruthValue)],
        cases: usize,
        check: impl Fn(&MLAlgebra, (&TruthValue, &TruthValue, &TruthValue)) -> std::result::Result<(), String>,
    ) {
        for (x, y, z) in triples {
            if let Err(detail) = check(self, (x, y, z)) {
                report.push_fail(name, cases, format!("at x={x}, y={y}, z={z}: {detail}"));
                return;
            }
        }
        report.push_pass(name, cases);
    }

    fn law_triples(&self, sample_budget: usize) -> Vec<(TruthValue, TruthValue, TruthValue)> {
        // Exhaustive triples stay tractable up to 64 carrier elements; larger
        // finite products fall back to sampling like the interval carriers.
        if let Some(carrier) = self.enumerate().filter(|c| c.len() <= 64) {
            let mut triples = Vec::with_capacity(carrier.len().pow(3));
            for x in &carrier {
                for y in &carrier {
                    for z in &carrier {
                        triples.push((x.clone(), y.clone(), z.clone()));
                    }
                }
            }
            return triples;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_1A77);
        let mut triples: Vec<_> = (0..sample_budget)
            .map(|_| (self.sample(&mut rng), self.sample(&mut rng), self.sample(&mut rng)))
            .collect();
        let bot = self.bot();
        let top = self.top();
        for x in [&bot, &top] {
            for y in [&bot, &top] {
                for z in [&bot, &top] {
                    triples.push((x.clone(), y.clone(), z.clone()));
                }
            }
        }
        triples
    }
}

impl fmt::Display for MLAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(v: f64) -> TruthValue {
        TruthValue::Real(v)
    }

    // Hand-evaluated connective values, frozen before the implementation:
    // max(0, 0.7+0.5−1) = 0.2; Gödel 0.6⇒0.4 falls in the x>y branch; the
    // product residuum saturates at 1 when x ≤ y.
    #[test]
    fn frozen_connective_values() {
        let luk = MLAlgebra::Lukasiewicz;
        assert!(luk.tensor(&real(0.7), &real(0.5)).unwrap().approx_eq(&real(0.2)));

        let goedel = MLAlgebra::Goedel;
        assert!(goedel.implies(&real(0.6), &real(0.4)).unwrap().approx_eq(&real(0.4)));

        let product = MLAlgebra::Product;
        assert!(product.implies(&real(0.3), &real(0.9)).unwrap().approx_eq(&real(1.0)));

        let boolean = MLAlgebra::Boolean;
        assert!(boolean.tensor(&real(1.0), &real(0.0)).unwrap().approx_eq(&real(0.0)));
    }

    #[test]
    fn iff_is_symmetric_tensor_of_residua() {
        let luk = MLAlgebra::Lukasiewicz;
        // (0.7⇒0.4)⊗(0.4⇒0.7) = 0.7⊗1.0 = 0.7
        assert!(luk.iff(&real(0.7), &real(0.4)).unwrap().approx_eq(&real(0.7)));
        assert!(luk.iff(&real(0.4), &real(0.7)).unwrap().approx_eq(&real(0.7)));
    }

    #[test]
    fn order_is_exact_and_componentwise() {
        let product = MLAlgebra::Product;
        assert!(product.leq(&real(0.2), &real(0.7)).unwrap());
        assert!(product.leq(&real(0.7), &real(0.7)).unwrap());

        let pair =
            MLAlgebra::product_algebra(vec![MLAlgebra::Boolean, MLAlgebra::Lukasiewicz]).unwrap();
        let x = TruthValue::Tuple(vec![real(1.0), real(0.3)]);
        let y = TruthValue::Tuple(vec![real(1.0), real(0.2)]);
        assert!(!pair.leq(&x, &y).unwrap());
        assert!(pair.leq(&y, &x).unwrap());
    }

    #[test]
    fn product_connectives_are_componentwise() {
        let pair =
            MLAlgebra::product_algebra(vec![MLAlgebra::Lukasiewicz, MLAlgebra::Goedel]).unwrap();
        let x = TruthValue::Tuple(vec![real(0.7), real(0.6)]);
        let y = TruthValue::Tuple(vec![real(0.5), real(0.4)]);
        let got = pair.tensor(&x, &y).unwrap();
        assert!(got.approx_eq(&TruthValue::Tuple(vec![real(0.2), real(0.4)])));

        let top = MLAlgebra::product_algebra(vec![MLAlgebra::Product, MLAlgebra::Boolean])
            .unwrap()
            .top();
        assert!(top.approx_eq(&TruthValue::Tuple(vec![real(1.0), real(1.0)])));
    }

    #[test]
    fn unary_product_wraps_component() {
        let unary = MLAlgebra::product_algebra(vec![MLAlgebra::Boolean]).unwrap();
        let x = TruthValue::Tuple(vec![real(1.0)]);
        let y = TruthValue::Tuple(vec![real(0.0)]);
        let got = unary.tensor(&x, &y).unwrap();
        assert!(got.approx_eq(&TruthValue::Tuple(vec![real(0.0)])));
    }

    #[test]
    fn carrier_mismatch_is_a_typed_error() {
        let boolean = MLAlgebra::Boolean;
        assert!(matches!(
            boolean.tensor(&real(0.5), &real(1.0)),
            Err(Error::CarrierMismatch { .. })
        ));
        let luk = MLAlgebra::Lukasiewicz;
        assert!(matches!(
            luk.tensor(&TruthValue::Fin("x".into()), &real(1.0)),
            Err(Error::CarrierMismatch { .. })
        ));
    }

    #[test]
    fn embed_pads_and_projects_back() {
        let triple = MLAlgebra::product_algebra(vec![
            MLAlgebra::Product,
            MLAlgebra::Goedel,
            MLAlgebra::Lukasiewicz,
        ])
        .unwrap();
        let embedded = triple.embed(0, &real(0.4), Padding::TopPadded).unwrap();
        assert!(embedded.approx_eq(&TruthValue::Tuple(vec![real(0.4), real(1.0), real(1.0)])));
        assert!(triple
            .project(0, &embedded)
            .unwrap()
            .approx_eq(&real(0.4)));

        let pair =
            MLAlgebra::product_algebra(vec![MLAlgebra::Boolean, MLAlgebra::Lukasiewicz]).unwrap();
        let embedded = pair.embed(1, &real(0.0), Padding::BotPadded).unwrap();
        assert!(embedded.approx_eq(&TruthValue::Tuple(vec![real(0.0), real(0.0)])));

        assert!(matches!(
            pair.embed(5, &real(0.0), Padding::TopPadded),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            MLAlgebra::Goedel.embed(0, &real(0.0), Padding::TopPadded),
            Err(Error::NotAProductAlgebra(_))
        ));
    }

    #[test]
    fn projection_of_embedding_is_identity_for_random_values() {
        use rand::SeedableRng;
        let pair =
            MLAlgebra::product_algebra(vec![MLAlgebra::Lukasiewicz, MLAlgebra::Product]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let v = MLAlgebra::Lukasiewicz.sample(&mut rng);
            for mode in [Padding::BotPadded, Padding::TopPadded] {
                let embedded = pair.embed(0, &v, mode).unwrap();
                assert!(pair.project(0, &embedded).unwrap().approx_eq(&v));
            }
        }
    }

    #[test]
    fn finite_chain_lookup_and_divisibility() {
        // Łukasiewicz structure on {bot, half, top}.
        let chain = FiniteChain::new(
            vec!["bot".into(), "half".into(), "top".into()],
            vec![
                vec!["bot".into(), "bot".into(), "bot".into()],
                vec!["bot".into(), "bot".into(), "half".into()],
                vec!["bot".into(), "half".into(), "top".into()],
            ],
            vec![
                vec!["top".into(), "top".into(), "top".into()],
                vec!["half".into(), "top".into(), "top".into()],
                vec!["bot".into(), "half".into(), "top".into()],
            ],
        )
        .unwrap();
        let alg = MLAlgebra::FiniteChain(chain);
        assert!(alg.divisible());
        let half = TruthValue::Fin("half".into());
        let got = alg.tensor(&half, &half).unwrap();
        assert!(got.approx_eq(&TruthValue::Fin("bot".into())));
        assert!(alg.leq(&half, &alg.top()).unwrap());
        assert!(alg.check_laws(0).passed());
    }

    #[test]
    fn corrupted_implication_table_fails_residuation_with_witness() {
        // Gödel ⊗ on a 3-chain, but half⇒bot is corrupted upward to top.
        let chain = FiniteChain::new(
            vec!["bot".into(), "half".into(), "top".into()],
            vec![
                vec!["bot".into(), "bot".into(), "bot".into()],
                vec!["bot".into(), "half".into(), "half".into()],
                vec!["bot".into(), "half".into(), "top".into()],
            ],
            vec![
                vec!["top".into(), "top".into(), "top".into()],
                vec!["top".into(), "top".into(), "top".into()],
                vec!["bot".into(), "half".into(), "top".into()],
            ],
        )
        .unwrap();
        let report = MLAlgebra::FiniteChain(chain).check_laws(0);
        assert!(!report.passed());
        let failed = report.item("residuation").unwrap();
        assert!(!failed.pass);
        assert!(failed.detail.as_deref().unwrap().contains("x="));
    }

    #[test]
    fn law_suite_passes_for_standard_algebras() {
        for alg in [
            MLAlgebra::Boolean,
            MLAlgebra::Goedel,
            MLAlgebra::Product,
            MLAlgebra::Lukasiewicz,
        ] {
            let report = alg.check_laws(2_000);
            assert!(report.passed(), "{report}");
        }
    }

    #[test]
    fn empty_product_is_rejected() {
        assert!(matches!(
            MLAlgebra::product_algebra(vec![]),
            Err(Error::EmptyProduct)
        ));
    }

    #[test]
    fn enumerate_products_of_finite_carriers() {
        let pair =
            MLAlgebra::product_algebra(vec![MLAlgebra::Boolean, MLAlgebra::Boolean]).unwrap();
        let carrier = pair.enumerate().unwrap();
        assert_eq!(carrier.len(), 4);
        assert!(MLAlgebra::Lukasiewicz.enumerate().is_none());
        assert!(MLAlgebra::product_algebra(vec![MLAlgebra::Lukasiewicz])
            .unwrap()
            .enumerate()
            .is_none());
    }

    #[test]
    fn report_rendering_is_stable() {
        let report = MLAlgebra::Boolean.check_laws(0);
        let text = report.to_string();
        assert!(text.contains("residuation: pass"));
        assert!(text.contains("divisibility: pass"));
    }
}
