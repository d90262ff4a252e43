//! Sign systems and their models.
//!
//! A [`SignSystem`] pairs a component library with three families of
//! constraints: configurations whose interpretation must be total (`E`),
//! and components pinned to the limit (`U`) or colimit (`coU`) of a
//! configuration. A [`Model`] assigns an Ω-set to every sign and a
//! multi-morphism to every component label, all over one algebra.
//!
//! The functions here bind configurations to diagrams ([`interpret`]),
//! generate the logical builtin components a library merely names
//! ([`builtin_logic_components`]), check the model laws ([`validate_model`]),
//! classify configurations as relations/equations ([`classify_word`]),
//! combine relations with a connective ([`lift_connective`]), and merge
//! whole systems over a product algebra ([`integrate`]).

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::algebra::{Connective, MLAlgebra, TruthValue};
use crate::diagram::{Arrow, MultiDiagram, MultiGraph};
use crate::grammar::{validate_configuration, Library, PolarizedOntology, Refinement, Word};
use crate::omega::OmegaSet;
use crate::relation::{compose, Attribute, MultiMorphism, Role};
use crate::report::Report;
use crate::tensor::{for_each_index, try_for_each_index, Tensor};
use crate::{Error, Result, DEFAULT_CELL_BUDGET};

/// Structural role of a generated component, used by [`classify_word`] to
/// recognize equation-shaped configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    /// `◁ⁿ`: one input duplicated onto n outputs.
    Diagonal,
    /// `▷ⁿ`: n inputs collapsed onto one output.
    Codiagonal,
    /// `[· = ·]` reified as an Ω-valued component.
    Equality,
    /// Identity between a sign and an alias denoting the same Ω-set.
    Rename,
    /// A binary algebra operation on truth values.
    Connective,
    /// `⊤` or `⊥` as a point of Ω.
    Constant,
}

/// Strip the output marker from a polarized sign.
fn base_sign(sign: &str) -> &str {
    sign.strip_suffix('+').unwrap_or(sign)
}

/// Interpretation of a sign system: Ω-sets for signs, multi-morphisms for
/// component labels, all over the same algebra.
#[derive(Debug, Clone)]
pub struct Model {
    algebra: MLAlgebra,
    signs: IndexMap<String, OmegaSet>,
    components: IndexMap<String, MultiMorphism>,
    kinds: HashMap<String, BuiltinKind>,
}

impl Model {
    pub fn new(algebra: MLAlgebra) -> Model {
        Model {
            algebra,
            signs: IndexMap::new(),
            components: IndexMap::new(),
            kinds: HashMap::new(),
        }
    }

    pub fn algebra(&self) -> &MLAlgebra {
        &self.algebra
    }

    pub fn assign_sign(&mut self, sign: impl Into<String>, set: OmegaSet) -> Result<()> {
        if set.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch {
                left: self.algebra.name(),
                right: set.algebra().name(),
            });
        }
        self.signs.insert(sign.into(), set);
        Ok(())
    }

    pub fn assign_component(
        &mut self,
        label: impl Into<String>,
        morphism: MultiMorphism,
    ) -> Result<()> {
        if morphism.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch {
                left: self.algebra.name(),
                right: morphism.algebra().name(),
            });
        }
        self.components.insert(label.into(), morphism);
        Ok(())
    }

    pub fn register_kind(&mut self, label: impl Into<String>, kind: BuiltinKind) {
        self.kinds.insert(label.into(), kind);
    }

    /// The Ω-set of a sign; output signs resolve to their input form.
    pub fn sign(&self, sign: &str) -> Result<&OmegaSet> {
        self.signs
            .get(base_sign(sign))
            .ok_or_else(|| Error::MissingInterpretation(base_sign(sign).to_string()))
    }

    pub fn has_sign(&self, sign: &str) -> bool {
        self.signs.contains_key(base_sign(sign))
    }

    pub fn component(&self, label: &str) -> Result<&MultiMorphism> {
        self.components
            .get(label)
            .ok_or_else(|| Error::MissingInterpretation(label.to_string()))
    }

    pub fn has_component(&self, label: &str) -> bool {
        self.components.contains_key(label)
    }

    pub fn kind(&self, label: &str) -> Option<BuiltinKind> {
        self.kinds.get(label).copied()
    }

    pub fn signs(&self) -> impl Iterator<Item = (&str, &OmegaSet)> {
        self.signs.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn components(&self) -> impl Iterator<Item = (&str, &MultiMorphism)> {
        self.components.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// The product Ω-set of a word's signs (output markers ignored).
    pub fn word_set(&self, word: &Word, name: &str) -> Result<OmegaSet> {
        let attributes: Vec<(String, OmegaSet)> = word
            .signs()
            .iter()
            .enumerate()
            .map(|(k, s)| Ok((format!("p{k}"), self.sign(s)?.clone())))
            .collect::<Result<_>>()?;
        OmegaSet::product(name, attributes)
    }
}

/// The set of truth values as an Ω-set: support labels denote algebra
/// elements and similarity is the biresiduum `a ⇔ b`.
///
/// This is the canonical interpretation of the Ω sign — similarity between
/// truth values is how interchangeable they are, not mere coincidence.
pub fn omega_object(name: &str, algebra: &MLAlgebra, values: &[TruthValue]) -> Result<OmegaSet> {
    omega_set_with(name, algebra, values, |a, b| algebra.iff(a, b))
}

/// Like [`omega_object`] but with crisp (identity) similarity.
pub fn omega_object_crisp(
    name: &str,
    algebra: &MLAlgebra,
    values: &[TruthValue],
) -> Result<OmegaSet> {
    omega_set_with(name, algebra, values, |a, b| {
        Ok(if a.approx_eq(b) {
            algebra.top()
        } else {
            algebra.bot()
        })
    })
}

fn omega_set_with(
    name: &str,
    algebra: &MLAlgebra,
    values: &[TruthValue],
    mut sim: impl FnMut(&TruthValue, &TruthValue) -> Result<TruthValue>,
) -> Result<OmegaSet> {
    if values.is_empty() {
        return Err(Error::InvalidOmegaSet {
            set: name.to_string(),
            reason: "a truth-value support needs at least one element".into(),
        });
    }
    for v in values {
        if !algebra.contains(v) {
            return Err(Error::CarrierMismatch {
                algebra: algebra.name(),
                value: v.to_string(),
            });
        }
    }
    let support: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    let rows: Vec<Vec<TruthValue>> = values
        .iter()
        .map(|a| values.iter().map(|b| sim(a, b)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    OmegaSet::new(name, algebra.clone(), support, rows)
}

/// Split `a,b,(c,d)` into `["a", "b", "(c,d)"]` — commas at paren depth 0.
fn split_top_level(body: &str) -> Vec<&str> {
    let mut pieces = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, ch) in body.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                pieces.push(&body[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    pieces.push(&body[start..]);
    pieces
}

/// Read a support label back as the algebra element it denotes.
fn parse_truth_label(label: &str, algebra: &MLAlgebra) -> Option<TruthValue> {
    if let Some(parts) = algebra.components() {
        let inner = label
            .strip_prefix('(')
            .and_then(|rest| rest.strip_suffix(')'));
        return match inner {
            Some(body) => {
                let pieces = split_top_level(body);
                if pieces.len() != parts.len() {
                    return None;
                }
                let values = pieces
                    .iter()
                    .zip(parts)
                    .map(|(piece, part)| parse_truth_label(piece, part))
                    .collect::<Option<Vec<_>>>()?;
                Some(TruthValue::Tuple(values))
            }
            // 1-ary products keep the component's own labels.
            None if parts.len() == 1 => Some(TruthValue::Tuple(vec![parse_truth_label(
                label, &parts[0],
            )?])),
            None => None,
        };
    }
    let value = match algebra {
        MLAlgebra::FiniteChain(_) => TruthValue::Fin(label.to_string()),
        _ => TruthValue::Real(label.parse::<f64>().ok()?),
    };
    algebra.contains(&value).then_some(value)
}

/// The algebra elements denoted by an Ω-object's support, in support order.
pub fn omega_values(set: &OmegaSet) -> Result<Vec<TruthValue>> {
    set.support()
        .iter()
        .map(|label| {
            parse_truth_label(label, set.algebra()).ok_or_else(|| Error::InvalidOmegaSet {
                set: set.name().to_string(),
                reason: format!(
                    "support label `{label}` does not denote an element of {}",
                    set.algebra().name()
                ),
            })
        })
        .collect()
}

/// χ-graph of a truth value: how strongly the Ω-object's element `j`
/// coincides with `t`. Values off the enumerated support get `⊥`.
fn chi(
    omega: &OmegaSet,
    values: &[TruthValue],
    t: &TruthValue,
    j: usize,
    algebra: &MLAlgebra,
) -> TruthValue {
    match values.iter().position(|v| v.approx_eq(t)) {
        Some(p) => omega.similarity_at(p, j).clone(),
        None => algebra.bot(),
    }
}

/// A recognized builtin label, decoded from its name.
#[derive(Debug, Clone, PartialEq, Eq)]
enum BuiltinSpec {
    Diagonal { n: usize, sign: String },
    Codiagonal { n: usize, sign: String },
    Equality { sign: String },
    Rename { from: String, to: String },
    Connective(Connective),
    Constant(bool),
}

impl BuiltinSpec {
    fn kind(&self) -> BuiltinKind {
        match self {
            BuiltinSpec::Diagonal { .. } => BuiltinKind::Diagonal,
            BuiltinSpec::Codiagonal { .. } => BuiltinKind::Codiagonal,
            BuiltinSpec::Equality { .. } => BuiltinKind::Equality,
            BuiltinSpec::Rename { .. } => BuiltinKind::Rename,
            BuiltinSpec::Connective(_) => BuiltinKind::Connective,
            BuiltinSpec::Constant(_) => BuiltinKind::Constant,
        }
    }

    /// The word a label with this spec must declare.
    fn word(&self, omega: &str) -> Vec<String> {
        let out = |s: &str| format!("{s}+");
        match self {
            BuiltinSpec::Diagonal { n, sign } => {
                let mut w = vec![sign.clone()];
                w.extend(std::iter::repeat_with(|| out(sign)).take(*n));
                w
            }
            BuiltinSpec::Codiagonal { n, sign } => {
                let mut w = vec![sign.clone(); *n];
                w.push(out(sign));
                w
            }
            BuiltinSpec::Equality { sign } => vec![sign.clone(), sign.clone(), out(omega)],
            BuiltinSpec::Rename { from, to } => vec![from.clone(), out(to)],
            BuiltinSpec::Connective(_) => vec![omega.to_string(), omega.to_string(), out(omega)],
            BuiltinSpec::Constant(_) => vec![out(omega)],
        }
    }
}

fn parse_arity_sign(rest: &str) -> Option<(usize, String)> {
    let underscore = rest.find('_')?;
    let n: usize = rest[..underscore].parse().ok()?;
    let sign = &rest[underscore + 1..];
    (n >= 1 && !sign.is_empty()).then(|| (n, sign.to_string()))
}

/// Decode a builtin label; `None` for ordinary component names.
fn parse_builtin(label: &str) -> Option<BuiltinSpec> {
    match label {
        "tensor" => return Some(BuiltinSpec::Connective(Connective::Tensor)),
        "implies" => return Some(BuiltinSpec::Connective(Connective::Implies)),
        "meet" => return Some(BuiltinSpec::Connective(Connective::Meet)),
        "join" => return Some(BuiltinSpec::Connective(Connective::Join)),
        "iff" => return Some(BuiltinSpec::Connective(Connective::Iff)),
        "top" => return Some(BuiltinSpec::Constant(true)),
        "bot" => return Some(BuiltinSpec::Constant(false)),
        _ => {}
    }
    if let Some(rest) = label.strip_prefix("codia") {
        let (n, sign) = parse_arity_sign(rest)?;
        return Some(BuiltinSpec::Codiagonal { n, sign });
    }
    if let Some(rest) = label.strip_prefix("dia") {
        let (n, sign) = parse_arity_sign(rest)?;
        return Some(BuiltinSpec::Diagonal { n, sign });
    }
    if let Some(rest) = label.strip_prefix("eq_") {
        if !rest.is_empty() {
            return Some(BuiltinSpec::Equality {
                sign: rest.to_string(),
            });
        }
    }
    if let Some(body) = label.strip_prefix("r(").and_then(|r| r.strip_suffix(')')) {
        let pieces = split_top_level(body);
        if pieces.len() == 2 && !pieces[0].is_empty() && !pieces[1].is_empty() {
            return Some(BuiltinSpec::Rename {
                from: pieces[0].to_string(),
                to: pieces[1].to_string(),
            });
        }
    }
    None
}

/// The library label for a connective arrow.
pub fn connective_label(connective: Connective) -> &'static str {
    match connective {
        Connective::Tensor => "tensor",
        Connective::Implies => "implies",
        Connective::Meet => "meet",
        Connective::Join => "join",
        Connective::Iff => "iff",
    }
}

/// `(label, word)` pairs for the logical builtins over the given signs:
/// diagonals and codiagonals up to arity `cap`, sign equalities, the binary
/// connectives, and the two constants. Feed these into a library alongside
/// the domain components.
pub fn builtin_words(signs: &[String], omega_sign: &str, cap: usize) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut all: Vec<&str> = signs.iter().map(String::as_str).collect();
    if !all.contains(&omega_sign) {
        all.push(omega_sign);
    }
    for sign in &all {
        for n in 2..=cap.max(2) {
            let dia = BuiltinSpec::Diagonal {
                n,
                sign: sign.to_string(),
            };
            out.push((format!("dia{n}_{sign}"), dia.word(omega_sign).join(" ")));
            let codia = BuiltinSpec::Codiagonal {
                n,
                sign: sign.to_string(),
            };
            out.push((format!("codia{n}_{sign}"), codia.word(omega_sign).join(" ")));
        }
        let eq = BuiltinSpec::Equality {
            sign: sign.to_string(),
        };
        out.push((format!("eq_{sign}"), eq.word(omega_sign).join(" ")));
    }
    for connective in [
        Connective::Tensor,
        Connective::Implies,
        Connective::Meet,
        Connective::Join,
        Connective::Iff,
    ] {
        let spec = BuiltinSpec::Connective(connective);
        out.push((
            connective_label(connective).to_string(),
            spec.word(omega_sign).join(" "),
        ));
    }
    out.push(("top".to_string(), format!("{omega_sign}+")));
    out.push(("bot".to_string(), format!("{omega_sign}+")));
    out
}

/// `[x̄ = ȳ] ⊗-folded over the coordinates`, reified as an Ω-valued
/// component: sources `x0..`, `y0..`, target `v`.
pub fn equality_component(
    name: &str,
    sets: &[OmegaSet],
    omega: &OmegaSet,
) -> Result<MultiMorphism> {
    if sets.is_empty() {
        return Err(Error::InvalidRelation {
            relation: name.to_string(),
            reason: "an equality needs at least one coordinate".into(),
        });
    }
    let algebra = omega.algebra().clone();
    let values = omega_values(omega)?;
    let n = sets.len();
    let mut attributes = Vec::with_capacity(2 * n + 1);
    for (k, set) in sets.iter().enumerate() {
        attributes.push(Attribute::source(format!("x{k}"), set.clone()));
    }
    for (k, set) in sets.iter().enumerate() {
        attributes.push(Attribute::source(format!("y{k}"), set.clone()));
    }
    attributes.push(Attribute::target("v", omega.clone()));
    let mut data = Vec::new();
    let shape: Vec<usize> = attributes.iter().map(|a| a.set.len()).collect();
    try_for_each_index(&shape, |idx| {
        let mut t = algebra.top();
        for k in 0..n {
            t = algebra.tensor(&t, sets[k].similarity_at(idx[k], idx[n + k]))?;
        }
        data.push(chi(omega, &values, &t, idx[2 * n], &algebra));
        Ok(())
    })?;
    MultiMorphism::new(name, attributes, Tensor::from_data(shape, data)?)
}

/// Generate interpretations for every builtin label the library declares and
/// the model has not already assigned. Rename targets inherit the renamed
/// sign's Ω-set. Labels that parse as builtins but declare a different word
/// are rejected rather than silently reinterpreted.
pub fn builtin_logic_components(system: &SignSystem, model: &Model) -> Result<Model> {
    let library = system.library();
    let mut out = model.clone();
    let omega_sign = system.omega_sign();

    // Renames first: they introduce sign interpretations the other builtins
    // may depend on.
    for label in library.labels() {
        let Some(BuiltinSpec::Rename { from, to }) = parse_builtin(label) else {
            continue;
        };
        let source = out.sign(&from)?.clone();
        if out.has_sign(&to) {
            if out.sign(&to)? != &source {
                return Err(Error::InvalidLibrary(format!(
                    "rename `{label}` joins signs with different interpretations"
                )));
            }
        } else {
            out.assign_sign(to.clone(), source.clone().with_name(&to))?;
        }
    }

    let labels: Vec<String> = library.labels().map(str::to_string).collect();
    for label in &labels {
        let Some(spec) = parse_builtin(label) else {
            continue;
        };
        out.register_kind(label.clone(), spec.kind());
        if out.has_component(label) {
            continue;
        }
        let omega_name = match &spec {
            BuiltinSpec::Diagonal { .. }
            | BuiltinSpec::Codiagonal { .. }
            | BuiltinSpec::Rename { .. } => omega_sign.unwrap_or(""),
            _ => omega_sign.ok_or_else(|| {
                Error::InvalidLibrary(format!(
                    "builtin `{label}` needs a declared Ω sign in the sign system"
                ))
            })?,
        };
        let declared = library.component(label)?;
        let expected = spec.word(omega_name);
        if declared.signs() != expected.as_slice() {
            return Err(Error::InvalidLibrary(format!(
                "builtin `{label}` declares word `{declared}`, expected `{}`",
                expected.join(" ")
            )));
        }
        let morphism = match &spec {
            BuiltinSpec::Diagonal { n, sign } => {
                let set = out.sign(sign)?.clone();
                let algebra = out.algebra.clone();
                let mut attributes = vec![Attribute::source("x", set.clone())];
                for k in 0..*n {
                    attributes.push(Attribute::target(format!("y{k}"), set.clone()));
                }
                let copies = *n;
                MultiMorphism::from_fn(label.clone(), attributes, |idx| {
                    let mut t = algebra.top();
                    for k in 0..copies {
                        t = algebra
                            .tensor(&t, set.similarity_at(idx[0], idx[1 + k]))
                            .expect("carrier-closed tensor");
                    }
                    t
                })?
            }
            BuiltinSpec::Codiagonal { n, sign } => {
                let set = out.sign(sign)?.clone();
                let algebra = out.algebra.clone();
                let mut attributes = Vec::with_capacity(n + 1);
                for k in 0..*n {
                    attributes.push(Attribute::source(format!("x{k}"), set.clone()));
                }
                attributes.push(Attribute::target("y", set.clone()));
                let copies = *n;
                MultiMorphism::from_fn(label.clone(), attributes, |idx| {
                    let mut t = algebra.top();
                    for k in 0..copies {
                        t = algebra
                            .tensor(&t, set.similarity_at(idx[k], idx[copies]))
                            .expect("carrier-closed tensor");
                    }
                    t
                })?
            }
            BuiltinSpec::Equality { sign } => {
                let set = out.sign(sign)?.clone();
                let omega = out.sign(omega_name)?.clone();
                equality_component(label, &[set], &omega)?
            }
            BuiltinSpec::Rename { from, .. } => {
                MultiMorphism::identity(label.clone(), out.sign(from)?, "x", "y")?
            }
            BuiltinSpec::Connective(connective) => {
                let omega = out.sign(omega_name)?.clone();
                let values = omega_values(&omega)?;
                let algebra = out.algebra.clone();
                let attributes = vec![
                    Attribute::source("a", omega.clone()),
                    Attribute::source("b", omega.clone()),
                    Attribute::target("c", omega.clone()),
                ];
                let op = *connective;
                MultiMorphism::from_fn(label.clone(), attributes, |idx| {
                    let t = algebra
                        .eval(op, &values[idx[0]], &values[idx[1]])
                        .expect("carrier-closed connective");
                    chi(&omega, &values, &t, idx[2], &algebra)
                })?
            }
            BuiltinSpec::Constant(is_top) => {
                let omega = out.sign(omega_name)?.clone();
                let values = omega_values(&omega)?;
                let algebra = out.algebra.clone();
                let point = if *is_top {
                    algebra.top()
                } else {
                    algebra.bot()
                };
                let attributes = vec![Attribute::target("c", omega.clone())];
                MultiMorphism::from_fn(label.clone(), attributes, |idx| {
                    chi(&omega, &values, &point, idx[0], &algebra)
                })?
            }
        };
        out.assign_component(label.clone(), morphism)?;
    }
    Ok(out)
}

/// A configuration whose interpretation must be a total multi-morphism,
/// with an explicit source designation.
#[derive(Debug, Clone)]
pub struct EConstraint {
    pub name: String,
    pub graph: MultiGraph,
    /// Vertex ids read as the morphism's source side.
    pub sources: Vec<String>,
}

/// A component pinned to the (co)limit of a configuration, with the
/// boundary vertices ordered to match the component's word.
#[derive(Debug, Clone)]
pub struct UConstraint {
    pub name: String,
    pub component: String,
    pub graph: MultiGraph,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

/// A library plus the constraint families a model must satisfy.
#[derive(Debug, Clone)]
pub struct SignSystem {
    library: Library,
    omega_sign: Option<String>,
    e: Vec<EConstraint>,
    u: Vec<UConstraint>,
    cou: Vec<UConstraint>,
}

/// Boundary vertex ids of a configuration: `(untargeted, unsourced)` in
/// declaration order. An isolated vertex appears in both lists.
fn boundary_ids(graph: &MultiGraph) -> (Vec<String>, Vec<String>) {
    let mut targeted: HashSet<&str> = HashSet::new();
    let mut sourced: HashSet<&str> = HashSet::new();
    for arrow in graph.arrows() {
        targeted.extend(arrow.targets.iter().map(String::as_str));
        sourced.extend(arrow.sources.iter().map(String::as_str));
    }
    let untargeted = graph
        .vertices()
        .iter()
        .filter(|(id, _)| !targeted.contains(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    let unsourced = graph
        .vertices()
        .iter()
        .filter(|(id, _)| !sourced.contains(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    (untargeted, unsourced)
}

fn vertex_sign<'g>(graph: &'g MultiGraph, id: &str) -> Option<&'g str> {
    graph
        .vertices()
        .iter()
        .find(|(v, _)| v == id)
        .map(|(_, sign)| sign.as_str())
}

fn check_configuration(name: &str, graph: &MultiGraph, library: &Library) -> Result<()> {
    let check = validate_configuration(graph, library)?;
    if let Some(first) = check.report.failures().next() {
        let detail = first.detail.clone().unwrap_or_default();
        return Err(Error::InvalidConfiguration(format!(
            "{name}: {} — {detail}",
            first.name
        )));
    }
    Ok(())
}

impl SignSystem {
    /// Validates every constraint's configuration against the library, the
    /// source designations, and the U/coU boundary orderings against the
    /// named component's word.
    pub fn new(
        library: Library,
        omega_sign: Option<String>,
        e: Vec<EConstraint>,
        u: Vec<UConstraint>,
        cou: Vec<UConstraint>,
    ) -> Result<SignSystem> {
        if let Some(omega) = &omega_sign {
            if !library.ontology().inputs().contains(omega) {
                return Err(Error::UnknownSign(omega.clone()));
            }
        }
        for entry in &e {
            let scope = format!("E `{}`", entry.name);
            check_configuration(&scope, &entry.graph, &library)?;
            if entry.sources.is_empty() {
                return Err(Error::InvalidConfiguration(format!(
                    "{scope}: no source vertices designated"
                )));
            }
            let mut seen = HashSet::new();
            for id in &entry.sources {
                if vertex_sign(&entry.graph, id).is_none() {
                    return Err(Error::InvalidConfiguration(format!(
                        "{scope}: source `{id}` is not a vertex"
                    )));
                }
                if !seen.insert(id.as_str()) {
                    return Err(Error::InvalidConfiguration(format!(
                        "{scope}: source `{id}` designated twice"
                    )));
                }
            }
        }
        for (family, entries) in [("U", &u), ("coU", &cou)] {
            for entry in entries {
                let scope = format!("{family} `{}`", entry.name);
                check_configuration(&scope, &entry.graph, &library)?;
                let word = library.component(&entry.component)?;
                let (word_in, word_out) = word.io();
                let (untargeted, unsourced) = boundary_ids(&entry.graph);
                let untargeted: HashSet<&str> =
                    untargeted.iter().map(String::as_str).collect();
                let unsourced: HashSet<&str> = unsourced.iter().map(String::as_str).collect();
                let mut boundary: HashSet<&str> = untargeted.clone();
                boundary.extend(&unsourced);
                let mut claimed: HashSet<&str> = HashSet::new();
                for id in entry.inputs.iter().chain(&entry.outputs) {
                    if !claimed.insert(id.as_str()) {
                        return Err(Error::InvalidConfiguration(format!(
                            "{scope}: vertex `{id}` claimed twice"
                        )));
                    }
                }
                for id in &entry.inputs {
                    if !untargeted.contains(id.as_str()) {
                        return Err(Error::InvalidConfiguration(format!(
                            "{scope}: input `{id}` is not an untargeted vertex"
                        )));
                    }
                }
                for id in &entry.outputs {
                    if !unsourced.contains(id.as_str()) {
                        return Err(Error::InvalidConfiguration(format!(
                            "{scope}: output `{id}` is not an unsourced vertex"
                        )));
                    }
                }
                if let Some(missing) = boundary.iter().find(|id| !claimed.contains(*id)) {
                    return Err(Error::InvalidConfiguration(format!(
                        "{scope}: boundary vertex `{missing}` is neither an input nor an output"
                    )));
                }
                if entry.inputs.len() != word_in.len() || entry.outputs.len() != word_out.len() {
                    return Err(Error::InvalidConfiguration(format!(
                        "{scope}: boundary is {}→{} vertices but `{}` has word {}→{}",
                        entry.inputs.len(),
                        entry.outputs.len(),
                        entry.component,
                        word_in.len(),
                        word_out.len()
                    )));
                }
                for (k, id) in entry.inputs.iter().enumerate() {
                    let sign = vertex_sign(&entry.graph, id).unwrap_or_default();
                    if sign != word_in.signs()[k] {
                        return Err(Error::InvalidConfiguration(format!(
                            "{scope}: input `{id}` has sign `{sign}`, word expects `{}`",
                            word_in.signs()[k]
                        )));
                    }
                }
                for (k, id) in entry.outputs.iter().enumerate() {
                    let sign = vertex_sign(&entry.graph, id).unwrap_or_default();
                    let dual = library.ontology().dual(sign)?;
                    if dual != word_out.signs()[k] {
                        return Err(Error::InvalidConfiguration(format!(
                            "{scope}: output `{id}` has sign `{sign}`, word expects `{}`",
                            word_out.signs()[k]
                        )));
                    }
                }
            }
        }
        Ok(SignSystem {
            library,
            omega_sign,
            e,
            u,
            cou,
        })
    }

    pub fn library(&self) -> &Library {
        &self.library
    }

    pub fn omega_sign(&self) -> Option<&str> {
        self.omega_sign.as_deref()
    }

    pub fn e_constraints(&self) -> &[EConstraint] {
        &self.e
    }

    pub fn u_constraints(&self) -> &[UConstraint] {
        &self.u
    }

    pub fn cou_constraints(&self) -> &[UConstraint] {
        &self.cou
    }
}

/// A sign system together with a model of it.
#[derive(Debug, Clone)]
pub struct Semiotic {
    pub system: SignSystem,
    pub model: Model,
}

/// Bind a configuration to the model: vertices become their sign's Ω-set,
/// arrows their component's multi-morphism. Untargeted vertices are the
/// diagram's sources; an isolated vertex counts as a source, not a target.
pub fn bind_configuration(
    graph: &MultiGraph,
    library: &Library,
    model: &Model,
) -> Result<MultiDiagram> {
    check_configuration("configuration", graph, library)?;
    let vertex_sets: Vec<(String, OmegaSet)> = graph
        .vertices()
        .iter()
        .map(|(id, sign)| Ok((id.clone(), model.sign(sign)?.clone())))
        .collect::<Result<_>>()?;
    let arrow_maps: Vec<(String, MultiMorphism)> = graph
        .arrows()
        .iter()
        .map(|arrow| Ok((arrow.id.clone(), model.component(&arrow.component)?.clone())))
        .collect::<Result<_>>()?;
    let (untargeted, unsourced) = boundary_ids(graph);
    let sources = untargeted.clone();
    let targets: Vec<String> = unsourced
        .into_iter()
        .filter(|id| !untargeted.contains(id))
        .collect();
    MultiDiagram::new(graph.clone(), vertex_sets, arrow_maps, sources, targets)
}

/// Interpret a configuration as the multi-morphism its limit induces on the
/// boundary: sources are the untargeted vertices, targets the unsourced.
pub fn interpret(graph: &MultiGraph, library: &Library, model: &Model) -> Result<MultiMorphism> {
    interpret_budgeted(graph, library, model, false, DEFAULT_CELL_BUDGET)
}

/// Like [`interpret`], but folding with the colimit.
pub fn interpret_colimit(
    graph: &MultiGraph,
    library: &Library,
    model: &Model,
) -> Result<MultiMorphism> {
    interpret_budgeted(graph, library, model, true, DEFAULT_CELL_BUDGET)
}

pub fn interpret_budgeted(
    graph: &MultiGraph,
    library: &Library,
    model: &Model,
    colimit: bool,
    budget: usize,
) -> Result<MultiMorphism> {
    let diagram = bind_configuration(graph, library, model)?;
    let mut keep: Vec<String> = diagram.sources().to_vec();
    keep.extend_from_slice(diagram.targets());
    if keep.is_empty() {
        // Closed configuration: the interpretation is the scalar fold.
        let full = if colimit {
            diagram.colimit_with_budget(budget)?
        } else {
            diagram.limit_with_budget(budget)?
        };
        let algebra = full.algebra().clone();
        let mut sup = algebra.bot();
        for v in full.values().data() {
            sup = algebra.join(&sup, v)?;
        }
        return MultiMorphism::scalar("interpretation", algebra, sup);
    }
    if colimit {
        diagram.colimit_projected(&keep, budget)
    } else {
        diagram.limit_projected(&keep, budget)
    }
}

/// Compose a linear configuration body arrow-by-arrow, joining on shared
/// vertices. This is composition in the relational sense — no vertex
/// extents are multiplied in — so it computes the canonical interpretation
/// of a component from the interpretations of its refinement body.
///
/// The body must be sequential: no vertex may feed two arrows or be fed by
/// two arrows, and no arrow may loop.
pub fn compose_body(graph: &MultiGraph, model: &Model) -> Result<MultiMorphism> {
    let mut source_seen: HashSet<&str> = HashSet::new();
    let mut target_seen: HashSet<&str> = HashSet::new();
    for arrow in graph.arrows() {
        for v in &arrow.sources {
            if arrow.targets.contains(v) {
                return Err(Error::InvalidConfiguration(format!(
                    "arrow `{}` loops on vertex `{v}`; sequential composition cannot express it",
                    arrow.id
                )));
            }
            if !source_seen.insert(v) {
                return Err(Error::InvalidConfiguration(format!(
                    "vertex `{v}` feeds two arrows; sequential composition cannot express it"
                )));
            }
        }
        for v in &arrow.targets {
            if !target_seen.insert(v) {
                return Err(Error::InvalidConfiguration(format!(
                    "vertex `{v}` is fed by two arrows; sequential composition cannot express it"
                )));
            }
        }
    }

    // Rename each arrow's attributes to its endpoint vertex ids so shared
    // vertices become join names.
    let mut remaining: Vec<&Arrow> = graph.arrows().iter().collect();
    if remaining.is_empty() {
        return Err(Error::InvalidConfiguration(
            "the body has no arrows to compose".into(),
        ));
    }
    let (untargeted, _) = boundary_ids(graph);
    let mut available: HashSet<String> = untargeted.into_iter().collect();
    let mut acc: Option<MultiMorphism> = None;
    while !remaining.is_empty() {
        let next = remaining
            .iter()
            .position(|arrow| arrow.sources.iter().all(|v| available.contains(v)));
        let Some(at) = next else {
            return Err(Error::InvalidConfiguration(
                "the body has a cycle; no sequential composition order exists".into(),
            ));
        };
        let arrow = remaining.remove(at);
        let morphism = model.component(&arrow.component)?;
        let mut renames: Vec<(String, String)> = Vec::new();
        let src_attrs: Vec<&Attribute> = morphism
            .attributes()
            .iter()
            .filter(|a| a.role == Role::Source)
            .collect();
        let tgt_attrs: Vec<&Attribute> = morphism
            .attributes()
            .iter()
            .filter(|a| a.role == Role::Target)
            .collect();
        if src_attrs.len() != arrow.sources.len() || tgt_attrs.len() != arrow.targets.len() {
            return Err(Error::InvalidConfiguration(format!(
                "arrow `{}` has {}→{} endpoints but `{}` is {}→{}",
                arrow.id,
                arrow.sources.len(),
                arrow.targets.len(),
                arrow.component,
                src_attrs.len(),
                tgt_attrs.len()
            )));
        }
        for (attr, vertex) in src_attrs.iter().zip(&arrow.sources) {
            renames.push((attr.name.clone(), vertex.clone()));
        }
        for (attr, vertex) in tgt_attrs.iter().zip(&arrow.targets) {
            renames.push((attr.name.clone(), vertex.clone()));
        }
        let renamed = morphism.renamed(&renames)?;
        acc = Some(match acc {
            None => renamed,
            Some(prev) => compose(&prev, &renamed)?,
        });
        available.extend(arrow.targets.iter().cloned());
    }
    Ok(acc.expect("at least one arrow composed"))
}

/// Extend a model that interprets the atomic components to the decomposable
/// ones: each label with a refinement rule gets the relational composite of
/// its normal-form body. Labels already interpreted are left alone.
pub fn extend_model(
    model: &Model,
    library: &Library,
    refinement: &Refinement,
) -> Result<Model> {
    let mut out = model.clone();
    let labels: Vec<String> = library.labels().map(str::to_string).collect();
    for label in &labels {
        if !refinement.has_rule(label) || out.has_component(label) {
            continue;
        }
        let word = library.component(label)?;
        let graph = single_component_graph(label, word, library)?;
        let body = refinement.normal_form(&graph)?;
        let composite = compose_body(&body, &out)?.with_name(label.clone());
        out.assign_component(label.clone(), composite)?;
    }
    Ok(out)
}

/// The one-arrow configuration of a component: fresh boundary vertices wired
/// to a single arrow labelled by the component itself.
pub fn single_component_graph(
    label: &str,
    word: &Word,
    library: &Library,
) -> Result<MultiGraph> {
    let (word_in, word_out) = word.io();
    let mut vertices: Vec<(String, String)> = Vec::new();
    let mut sources = Vec::new();
    let mut targets = Vec::new();
    for (k, sign) in word_in.signs().iter().enumerate() {
        let id = format!("in{k}");
        vertices.push((id.clone(), sign.clone()));
        sources.push(id);
    }
    for (k, sign) in word_out.signs().iter().enumerate() {
        let id = format!("out{k}");
        vertices.push((id.clone(), library.ontology().dual(sign)?.to_string()));
        targets.push(id);
    }
    MultiGraph::new(
        vertices,
        vec![Arrow {
            id: label.to_string(),
            component: label.to_string(),
            sources,
            targets,
        }],
    )
}

/// Positional equality of two multi-morphisms: same roles, same Ω-sets,
/// same values — attribute names ignored.
fn same_morphism(f: &MultiMorphism, g: &MultiMorphism) -> bool {
    f.attributes().len() == g.attributes().len()
        && f.attributes()
            .iter()
            .zip(g.attributes())
            .all(|(a, b)| a.role == b.role && a.set == b.set)
        && f.values().approx_eq(g.values())
}

/// First violation of `f° ⊗ α ⊗ f = β` over the component's own source and
/// target products, as a printable witness.
fn epi_defect(f: &MultiMorphism, algebra: &MLAlgebra) -> Result<Option<String>> {
    let src_positions: Vec<usize> = f
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.role == Role::Source)
        .map(|(k, _)| k)
        .collect();
    let tgt_positions: Vec<usize> = f
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.role == Role::Target)
        .map(|(k, _)| k)
        .collect();
    let src_shape: Vec<usize> = src_positions
        .iter()
        .map(|&k| f.attributes()[k].set.len())
        .collect();
    let tgt_shape: Vec<usize> = tgt_positions
        .iter()
        .map(|&k| f.attributes()[k].set.len())
        .collect();
    let mut src_tuples: Vec<Vec<usize>> = Vec::new();
    for_each_index(&src_shape, |idx| src_tuples.push(idx.to_vec()));
    let mut tgt_tuples: Vec<Vec<usize>> = Vec::new();
    for_each_index(&tgt_shape, |idx| tgt_tuples.push(idx.to_vec()));

    let side_sim = |positions: &[usize], a: &[usize], b: &[usize]| -> Result<TruthValue> {
        let mut t = algebra.top();
        for (axis, &p) in positions.iter().enumerate() {
            t = algebra.tensor(&t, f.attributes()[p].set.similarity_at(a[axis], b[axis]))?;
        }
        Ok(t)
    };
    let mut full = vec![0usize; f.attributes().len()];
    let mut cell = |src: &[usize], tgt: &[usize], full: &mut Vec<usize>| -> TruthValue {
        for (axis, &p) in src_positions.iter().enumerate() {
            full[p] = src[axis];
        }
        for (axis, &p) in tgt_positions.iter().enumerate() {
            full[p] = tgt[axis];
        }
        f.values().get(full).clone()
    };

    for b in &tgt_tuples {
        for b2 in &tgt_tuples {
            let mut lhs = algebra.bot();
            for a in &src_tuples {
                for a2 in &src_tuples {
                    let term = algebra.tensor(
                        &algebra.tensor(&cell(a, b, &mut full), &side_sim(&src_positions, a, a2)?)?,
                        &cell(a2, b2, &mut full),
                    )?;
                    lhs = algebra.join(&lhs, &term)?;
                }
            }
            let rhs = side_sim(&tgt_positions, b, b2)?;
            if !lhs.approx_eq(&rhs) {
                let labels = |tuple: &[usize]| -> String {
                    tuple
                        .iter()
                        .enumerate()
                        .map(|(axis, &i)| {
                            f.attributes()[tgt_positions[axis]].set.label(i).to_string()
                        })
                        .collect::<Vec<_>>()
                        .join(",")
                };
                return Ok(Some(format!(
                    "at outputs ({}),({}) : composite {} ≠ similarity {}",
                    labels(b),
                    labels(b2),
                    lhs,
                    rhs
                )));
            }
        }
    }
    Ok(None)
}

/// Check a model against its sign system.
///
/// Structural problems (unresolved references, unbindable configurations)
/// are errors; law violations become failing report items. The requirement
/// that every component's composite reproduce the target similarity is
/// reported as a warning unless `strict` — the interesting domain tables
/// routinely violate it while every other law holds.
pub fn validate_model(
    system: &SignSystem,
    model: &Model,
    strict: bool,
    budget: usize,
) -> Result<Report> {
    let library = system.library();
    let ontology = library.ontology();
    let mut report = Report::new("model");

    for sign in ontology.inputs() {
        model.sign(sign)?;
    }
    let labels: Vec<&str> = library.labels().collect();
    for label in &labels {
        model.component(label)?;
    }

    // Component shapes against their words.
    let mut shape_failures = Vec::new();
    for label in &labels {
        let word = library.component(label)?;
        let (word_in, word_out) = word.io();
        let m = model.component(label)?;
        let sources: Vec<&Attribute> = m
            .attributes()
            .iter()
            .filter(|a| a.role == Role::Source)
            .collect();
        let targets: Vec<&Attribute> = m
            .attributes()
            .iter()
            .filter(|a| a.role == Role::Target)
            .collect();
        if sources.len() != word_in.len() || targets.len() != word_out.len() {
            shape_failures.push(format!(
                "`{label}` is {}→{} but its word is {}→{}",
                sources.len(),
                targets.len(),
                word_in.len(),
                word_out.len()
            ));
            continue;
        }
        for (k, attr) in sources.iter().enumerate() {
            if &attr.set != model.sign(word_in.signs()[k].as_str())? {
                shape_failures.push(format!(
                    "`{label}` source {k} does not carry M(`{}`)",
                    word_in.signs()[k]
                ));
            }
        }
        for (k, attr) in targets.iter().enumerate() {
            if &attr.set != model.sign(word_out.signs()[k].as_str())? {
                shape_failures.push(format!(
                    "`{label}` target {k} does not carry M(`{}`)",
                    word_out.signs()[k]
                ));
            }
        }
    }
    match shape_failures.first() {
        None => report.push_pass("component words are interpreted productwise", labels.len()),
        Some(first) => report.push_fail(
            "component words are interpreted productwise",
            labels.len(),
            first.clone(),
        ),
    }

    // Equivalent labels must agree.
    let mut pairs = 0usize;
    let mut equiv_failure = None;
    for (i, a) in labels.iter().enumerate() {
        for b in labels.iter().skip(i + 1) {
            if !library.equivalent_labels(a, b) {
                continue;
            }
            pairs += 1;
            if equiv_failure.is_none()
                && !same_morphism(model.component(a)?, model.component(b)?)
            {
                equiv_failure = Some(format!("`{a}` and `{b}` differ"));
            }
        }
    }
    report.push(
        "equivalent components coincide",
        equiv_failure.is_none(),
        pairs,
        equiv_failure,
    );

    // The sign order must be monotone under interpretation.
    let mut ordered = 0usize;
    let mut order_failure = None;
    for a in ontology.inputs() {
        for b in ontology.inputs() {
            if a == b || !ontology.leq(a, b)? {
                continue;
            }
            ordered += 1;
            if order_failure.is_some() {
                continue;
            }
            let ma = model.sign(a)?;
            let mb = model.sign(b)?;
            for (i, label_i) in ma.support().iter().enumerate() {
                let Ok(bi) = mb.index_of(label_i) else {
                    order_failure = Some(format!(
                        "`{a}` ≤ `{b}` but M(`{b}`) lacks element `{label_i}`"
                    ));
                    break;
                };
                for (j, label_j) in ma.support().iter().enumerate() {
                    let Ok(bj) = mb.index_of(label_j) else {
                        continue;
                    };
                    let lo = ma.similarity_at(i, j);
                    let hi = mb.similarity_at(bi, bj);
                    if !model.algebra().leq(lo, hi)? {
                        order_failure = Some(format!(
                            "`{a}` ≤ `{b}` but [{label_i}={label_j}] drops from {lo} to {hi}"
                        ));
                        break;
                    }
                }
                if order_failure.is_some() {
                    break;
                }
            }
        }
    }
    report.push(
        "the sign order is monotone under interpretation",
        order_failure.is_none(),
        ordered,
        order_failure,
    );

    // Requirement preservation: f° ⊗ α ⊗ f = β per component.
    let mut epi_failures = Vec::new();
    for label in &labels {
        if let Some(defect) = epi_defect(model.component(label)?, model.algebra())? {
            epi_failures.push(format!("`{label}` {defect}"));
        }
    }
    if epi_failures.is_empty() {
        report.push_pass("components reproduce target similarity", labels.len());
    } else if strict {
        report.push_fail(
            "components reproduce target similarity",
            labels.len(),
            epi_failures.join("; "),
        );
    } else {
        report.push_pass("components reproduce target similarity", labels.len());
        for failure in epi_failures {
            report.warn(format!("requirement not preserved: {failure}"));
        }
    }

    // Equivalent words must denote one Ω-set.
    let mut words: Vec<Word> = Vec::new();
    for label in &labels {
        let w = library.component(label)?;
        if !w.is_empty() && !words.contains(w) {
            words.push(w.clone());
        }
    }
    for (a, b) in library.word_equivalences() {
        for w in [a, b] {
            if !w.is_empty() && !words.contains(w) {
                words.push(w.clone());
            }
        }
    }
    let mut word_pairs = 0usize;
    let mut word_failure = None;
    for (i, a) in words.iter().enumerate() {
        for b in words.iter().skip(i + 1) {
            if !library.equivalent_words(a, b) {
                continue;
            }
            word_pairs += 1;
            if word_failure.is_none()
                && model.word_set(a, "lhs")? != model.word_set(b, "rhs")?
            {
                word_failure = Some(format!("`{a}` and `{b}` denote different Ω-sets"));
            }
        }
    }
    report.push(
        "equivalent words denote one Ω-set",
        word_failure.is_none(),
        word_pairs,
        word_failure,
    );

    for entry in system.e_constraints() {
        let diagram = bind_configuration(&entry.graph, library, model)?;
        let projected = diagram.limit_projected(&entry.sources, budget)?;
        let sets: Vec<&OmegaSet> = entry
            .sources
            .iter()
            .map(|id| diagram.vertex_set(id).expect("validated source vertex"))
            .collect();
        let shape: Vec<usize> = sets.iter().map(|s| s.len()).collect();
        let mut failure = None;
        let mut cases = 0usize;
        try_for_each_index(&shape, |idx| {
            cases += 1;
            let mut want = model.algebra().top();
            for (axis, set) in sets.iter().enumerate() {
                want = model.algebra().tensor(&want, set.extent_at(idx[axis]))?;
            }
            let got = projected.values().get(idx);
            if failure.is_none() && !got.approx_eq(&want) {
                let at: Vec<&str> = idx
                    .iter()
                    .enumerate()
                    .map(|(axis, &i)| sets[axis].label(i))
                    .collect();
                failure = Some(format!(
                    "at ({}): reachable degree {got}, extent {want}",
                    at.join(",")
                ));
            }
            Ok(())
        })?;
        report.push(
            format!("E `{}` is total", entry.name),
            failure.is_none(),
            cases,
            failure,
        );
    }

    for (family, entries, colimit) in [
        ("U", system.u_constraints(), false),
        ("coU", system.cou_constraints(), true),
    ] {
        for entry in entries {
            let diagram = bind_configuration(&entry.graph, library, model)?;
            let mut keep = entry.inputs.clone();
            keep.extend_from_slice(&entry.outputs);
            let got = if colimit {
                diagram.colimit_projected(&keep, budget)?
            } else {
                diagram.limit_projected(&keep, budget)?
            };
            let want = model.component(&entry.component)?;
            let (pass, detail) = match want.values().first_difference(got.values()) {
                None => (true, None),
                Some((idx, w, g)) => {
                    let at: Vec<&str> = idx
                        .iter()
                        .enumerate()
                        .map(|(axis, &i)| want.attributes()[axis].set.label(i))
                        .collect();
                    (
                        false,
                        Some(format!(
                            "cell ({}): M(`{}`) = {w}, fold gives {g}",
                            at.join(","),
                            entry.component
                        )),
                    )
                }
            };
            report.push(
                format!("{family} `{}` pins `{}`", entry.name, entry.component),
                pass,
                want.values().len(),
                detail,
            );
        }
    }

    Ok(report)
}

/// What a configuration's interpretation is, structurally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordClass {
    /// The output is a single vertex denoting the set of truth values.
    pub relation: bool,
    /// The relation is assembled from equalities (and constants) folded by
    /// codiagonals — the shape of an equation.
    pub equation: bool,
    /// For relations: whether the truth-wrapped interpretation is total.
    pub truth: Option<bool>,
}

/// Classify a configuration as a relation and/or equation, and decide
/// whether it holds ("is true") by wrapping its output with `⊤` and a
/// codiagonal and checking totality over the inputs.
pub fn classify_word(
    graph: &MultiGraph,
    system: &SignSystem,
    model: &Model,
    budget: usize,
) -> Result<WordClass> {
    check_configuration("configuration", graph, system.library())?;
    let not_a_relation = WordClass {
        relation: false,
        equation: false,
        truth: None,
    };
    let Some(omega_sign) = system.omega_sign() else {
        return Ok(not_a_relation);
    };
    let omega = model.sign(omega_sign)?;
    let (untargeted, unsourced) = boundary_ids(graph);
    let outputs: Vec<&String> = unsourced
        .iter()
        .filter(|id| !untargeted.contains(*id))
        .collect();
    if outputs.len() != 1 {
        return Ok(not_a_relation);
    }
    let out_sign = vertex_sign(graph, outputs[0]).expect("boundary vertex");
    if model.sign(out_sign)? != omega {
        return Ok(not_a_relation);
    }

    let is_omega_vertex = |id: &str| -> Result<bool> {
        let sign = vertex_sign(graph, id).expect("arrow endpoints are vertices");
        Ok(model.sign(sign)? == omega)
    };
    let mut has_equality = false;
    let mut shape_ok = true;
    for arrow in graph.arrows() {
        let kind = model.kind(&arrow.component);
        for target in &arrow.targets {
            if is_omega_vertex(target)? {
                match kind {
                    Some(BuiltinKind::Equality) => has_equality = true,
                    Some(BuiltinKind::Constant) | Some(BuiltinKind::Codiagonal) => {}
                    _ => shape_ok = false,
                }
            }
        }
        for source in &arrow.sources {
            if is_omega_vertex(source)? && kind != Some(BuiltinKind::Codiagonal) {
                shape_ok = false;
            }
        }
    }

    let wrapped = truth_graph(graph, system)?;
    let diagram = bind_configuration(&wrapped, system.library(), model)?;
    let total = if untargeted.is_empty() {
        let algebra = model.algebra();
        let full = diagram.limit_with_budget(budget)?;
        let mut sup = algebra.bot();
        for v in full.values().data() {
            sup = algebra.join(&sup, v)?;
        }
        sup.approx_eq(&algebra.top())
    } else {
        let projected = diagram.limit_projected(&untargeted, budget)?;
        let sets: Vec<&OmegaSet> = untargeted
            .iter()
            .map(|id| diagram.vertex_set(id).expect("boundary vertex"))
            .collect();
        let shape: Vec<usize> = sets.iter().map(|s| s.len()).collect();
        let mut all = true;
        try_for_each_index(&shape, |idx| {
            let mut want = model.algebra().top();
            for (axis, set) in sets.iter().enumerate() {
                want = model.algebra().tensor(&want, set.extent_at(idx[axis]))?;
            }
            if !projected.values().get(idx).approx_eq(&want) {
                all = false;
            }
            Ok(())
        })?;
        all
    };

    Ok(WordClass {
        relation: true,
        equation: has_equality && shape_ok,
        truth: Some(total),
    })
}

fn fresh_name(candidate: &str, taken: &mut HashSet<String>) -> String {
    let mut name = candidate.to_string();
    while !taken.insert(name.clone()) {
        name.push('\'');
    }
    name
}

/// Wrap a relation configuration so its truth becomes a totality question:
/// add a `⊤` point and fold it with the outputs through a codiagonal.
pub fn truth_graph(graph: &MultiGraph, system: &SignSystem) -> Result<MultiGraph> {
    let omega_sign = system
        .omega_sign()
        .ok_or_else(|| Error::InvalidConfiguration("the sign system declares no Ω sign".into()))?;
    let (untargeted, unsourced) = boundary_ids(graph);
    let outputs: Vec<String> = unsourced
        .into_iter()
        .filter(|id| !untargeted.contains(id))
        .collect();
    if outputs.is_empty() {
        return Err(Error::InvalidConfiguration(
            "the configuration has no output vertices to wrap".into(),
        ));
    }
    let codia = format!("codia{}_{omega_sign}", outputs.len() + 1);
    for label in [codia.as_str(), "top"] {
        if !system.library().contains(label) {
            return Err(Error::UnknownComponent(label.to_string()));
        }
    }
    let mut vertices = graph.vertices().to_vec();
    let mut taken: HashSet<String> = vertices.iter().map(|(id, _)| id.clone()).collect();
    let t = fresh_name("t", &mut taken);
    let r = fresh_name("r", &mut taken);
    vertices.push((t.clone(), omega_sign.to_string()));
    vertices.push((r.clone(), omega_sign.to_string()));
    let mut arrows = graph.arrows().to_vec();
    let mut arrow_ids: HashSet<String> = arrows.iter().map(|a| a.id.clone()).collect();
    arrows.push(Arrow {
        id: fresh_name("truth.top", &mut arrow_ids),
        component: "top".into(),
        sources: vec![],
        targets: vec![t.clone()],
    });
    let mut fold_sources = outputs;
    fold_sources.push(t);
    arrows.push(Arrow {
        id: fresh_name("truth.fold", &mut arrow_ids),
        component: codia,
        sources: fold_sources,
        targets: vec![r],
    });
    MultiGraph::new(vertices, arrows)
}

/// Combine two relation configurations with a binary connective: shared
/// inputs listed in `links` are identified through diagonals, the two
/// outputs feed the connective, and its result is the new output.
pub fn lift_connective(
    d0: &MultiGraph,
    d1: &MultiGraph,
    connective: Connective,
    links: &[(String, String)],
    system: &SignSystem,
) -> Result<MultiGraph> {
    let library = system.library();
    let omega_sign = system
        .omega_sign()
        .ok_or_else(|| Error::InvalidConfiguration("the sign system declares no Ω sign".into()))?;
    check_configuration("left configuration", d0, library)?;
    check_configuration("right configuration", d1, library)?;

    let relation_output = |graph: &MultiGraph, side: &str| -> Result<String> {
        let (untargeted, unsourced) = boundary_ids(graph);
        let outputs: Vec<String> = unsourced
            .into_iter()
            .filter(|id| !untargeted.contains(id))
            .collect();
        match outputs.as_slice() {
            [only] if vertex_sign(graph, only) == Some(omega_sign) => Ok(only.clone()),
            _ => Err(Error::InvalidConfiguration(format!(
                "{side} configuration is not a relation: it needs exactly one Ω-sign output"
            ))),
        }
    };
    let q0 = relation_output(d0, "left")?;
    let q1 = relation_output(d1, "right")?;

    let (in0, _) = boundary_ids(d0);
    let (in1, _) = boundary_ids(d1);

    let mut vertices = d0.vertices().to_vec();
    let mut taken: HashSet<String> = vertices.iter().map(|(id, _)| id.clone()).collect();
    let mut map1: HashMap<&str, String> = HashMap::new();
    for (id, sign) in d1.vertices() {
        let fresh = fresh_name(id, &mut taken);
        map1.insert(id.as_str(), fresh.clone());
        vertices.push((fresh, sign.clone()));
    }
    let mut arrows = d0.arrows().to_vec();
    let mut arrow_ids: HashSet<String> = arrows.iter().map(|a| a.id.clone()).collect();
    for arrow in d1.arrows() {
        arrows.push(Arrow {
            id: fresh_name(&arrow.id, &mut arrow_ids),
            component: arrow.component.clone(),
            sources: arrow.sources.iter().map(|v| map1[v.as_str()].clone()).collect(),
            targets: arrow.targets.iter().map(|v| map1[v.as_str()].clone()).collect(),
        });
    }

    for (k, (a, b)) in links.iter().enumerate() {
        if !in0.contains(a) {
            return Err(Error::InvalidConfiguration(format!(
                "link source `{a}` is not an input of the left configuration"
            )));
        }
        if !in1.contains(b) {
            return Err(Error::InvalidConfiguration(format!(
                "link target `{b}` is not an input of the right configuration"
            )));
        }
        let sign_a = vertex_sign(d0, a).expect("checked input").to_string();
        let sign_b = vertex_sign(d1, b).expect("checked input");
        if sign_a != sign_b {
            return Err(Error::InvalidConfiguration(format!(
                "link `{a}`~`{b}` joins signs `{sign_a}` and `{sign_b}`"
            )));
        }
        let dia = format!("dia2_{sign_a}");
        if !library.contains(&dia) {
            return Err(Error::UnknownComponent(dia));
        }
        let shared = fresh_name(&format!("{a}.{b}"), &mut taken);
        vertices.push((shared.clone(), sign_a));
        arrows.push(Arrow {
            id: fresh_name(&format!("share{k}"), &mut arrow_ids),
            component: dia,
            sources: vec![shared],
            targets: vec![a.clone(), map1[b.as_str()].clone()],
        });
    }

    let conn = connective_label(connective);
    if !library.contains(conn) {
        return Err(Error::UnknownComponent(conn.to_string()));
    }
    let result = fresh_name("v", &mut taken);
    vertices.push((result.clone(), omega_sign.to_string()));
    arrows.push(Arrow {
        id: fresh_name("conn", &mut arrow_ids),
        component: conn.to_string(),
        sources: vec![q0, map1[q1.as_str()].clone()],
        targets: vec![result],
    });

    let combined = MultiGraph::new(vertices, arrows)?;
    check_configuration("combined configuration", &combined, library)?;
    Ok(combined)
}

/// Numeric equality of two Ω-sets that may live over different algebras:
/// same support, same similarity values.
fn numerically_equal_set(a: &OmegaSet, b: &OmegaSet) -> bool {
    a.support() == b.support() && a.similarity_matrix().approx_eq(b.similarity_matrix())
}

fn numerically_equal_morphism(f: &MultiMorphism, g: &MultiMorphism) -> bool {
    f.attributes().len() == g.attributes().len()
        && f.attributes()
            .iter()
            .zip(g.attributes())
            .all(|(a, b)| a.role == b.role && numerically_equal_set(&a.set, &b.set))
        && f.values().approx_eq(g.values())
}

/// The truth-value sign of an integrated system: the product of the input
/// systems' truth-value Ω-sets, with componentwise similarity.
fn integration_omega(
    name: &str,
    algebra: &MLAlgebra,
    sets: &[&OmegaSet],
) -> Result<OmegaSet> {
    let sizes: Vec<usize> = sets.iter().map(|s| s.len()).collect();
    let mut digits: Vec<Vec<usize>> = Vec::new();
    for_each_index(&sizes, |idx| digits.push(idx.to_vec()));
    let support: Vec<String> = digits
        .iter()
        .map(|idx| {
            if sets.len() == 1 {
                sets[0].label(idx[0]).to_string()
            } else {
                let parts: Vec<&str> = idx
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| sets[k].label(i))
                    .collect();
                format!("({})", parts.join(","))
            }
        })
        .collect();
    let rows: Vec<Vec<TruthValue>> = digits
        .iter()
        .map(|a| {
            digits
                .iter()
                .map(|b| {
                    TruthValue::Tuple(
                        (0..sets.len())
                            .map(|k| sets[k].similarity_at(a[k], b[k]).clone())
                            .collect(),
                    )
                })
                .collect()
        })
        .collect();
    OmegaSet::new(name, algebra.clone(), support, rows)
}

/// One input system's slice of an integration, precomputed.
struct IntegrationSlice<'a> {
    semiotic: &'a Semiotic,
    omega_size: usize,
}

/// Lift one system's component into the integrated model. Non-Ω axes keep
/// their supports; Ω axes widen to the integrated truth-value sign, with
/// the original values carried through the Ω-projections (the value at a
/// widened index is the sup over the original axis weighted by similarity
/// to that index's own-system coordinate). Foreign slots read `⊤`.
#[allow(clippy::too_many_arguments)]
fn integrate_component(
    label: &str,
    word: &Word,
    owners: &[usize],
    slices: &[IntegrationSlice<'_>],
    merged_signs: &IndexMap<String, OmegaSet>,
    omega_sign: Option<&str>,
    algebra: &MLAlgebra,
) -> Result<MultiMorphism> {
    let first_owner = owners[0];
    let f0 = slices[first_owner].semiotic.model.component(label)?;
    let (word_in, word_out) = word.io();
    let mut in_iter = word_in.signs().iter();
    let mut out_iter = word_out.signs().iter();
    let axis_signs: Vec<String> = f0
        .attributes()
        .iter()
        .map(|attr| {
            let sign = match attr.role {
                Role::Source => in_iter.next(),
                Role::Target => out_iter.next(),
            };
            base_sign(sign.expect("word length was validated")).to_string()
        })
        .collect();
    let omega_axes: Vec<bool> = axis_signs
        .iter()
        .map(|s| omega_sign == Some(s.as_str()))
        .collect();

    let attributes: Vec<Attribute> = f0
        .attributes()
        .iter()
        .zip(&axis_signs)
        .map(|(attr, sign)| {
            let set = merged_signs
                .get(sign)
                .cloned()
                .ok_or_else(|| Error::MissingInterpretation(sign.clone()))?;
            Ok(Attribute {
                name: attr.name.clone(),
                set,
                role: attr.role,
            })
        })
        .collect::<Result<_>>()?;
    let shape: Vec<usize> = attributes.iter().map(|a| a.set.len()).collect();

    // Digit layout of the merged Ω support: system k's coordinate of merged
    // index m is (m / stride[k]) % size[k].
    let omega_sizes: Vec<usize> = slices.iter().map(|s| s.omega_size).collect();
    let mut strides = vec![1usize; slices.len()];
    for k in (0..slices.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * omega_sizes[k + 1];
    }
    let omega_positions: Vec<usize> = omega_axes
        .iter()
        .enumerate()
        .filter(|(_, &is)| is)
        .map(|(p, _)| p)
        .collect();

    let owner_data: Vec<(usize, &MultiMorphism, &MLAlgebra, Option<&OmegaSet>)> = owners
        .iter()
        .map(|&k| {
            let model = &slices[k].semiotic.model;
            let morphism = model.component(label)?;
            let omega = match omega_sign {
                Some(om) => Some(model.sign(om)?),
                None => None,
            };
            Ok((k, morphism, model.algebra(), omega))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut data = Vec::new();
    try_for_each_index(&shape, |idx| {
        let mut slots: Vec<TruthValue> = Vec::with_capacity(slices.len());
        for (k, slice) in slices.iter().enumerate() {
            let Some((_, fk, alg_k, omega_k)) =
                owner_data.iter().find(|(owner, ..)| *owner == k)
            else {
                slots.push(slice.semiotic.model.algebra().top());
                continue;
            };
            if omega_positions.is_empty() {
                slots.push(fk.values().get(idx).clone());
                continue;
            }
            let omega_k = omega_k.expect("Ω axes imply an Ω interpretation");
            // Sup over the original Ω coordinates, weighted by similarity to
            // this system's digit of the merged coordinate.
            let own: Vec<usize> = omega_positions
                .iter()
                .map(|&p| (idx[p] / strides[k]) % omega_sizes[k])
                .collect();
            let local_shape = vec![omega_k.len(); omega_positions.len()];
            let mut original = idx.to_vec();
            let mut acc = alg_k.bot();
            let mut fold_err = None;
            for_each_index(&local_shape, |assignment| {
                if fold_err.is_some() {
                    return;
                }
                let mut weight = alg_k.top();
                for (axis, &p) in omega_positions.iter().enumerate() {
                    original[p] = assignment[axis];
                    weight = match alg_k
                        .tensor(&weight, omega_k.similarity_at(assignment[axis], own[axis]))
                    {
                        Ok(w) => w,
                        Err(e) => {
                            fold_err = Some(e);
                            return;
                        }
                    };
                }
                let term = match alg_k.tensor(fk.values().get(&original), &weight) {
                    Ok(t) => t,
                    Err(e) => {
                        fold_err = Some(e);
                        return;
                    }
                };
                acc = match alg_k.join(&acc, &term) {
                    Ok(a) => a,
                    Err(e) => {
                        fold_err = Some(e);
                        return;
                    }
                };
            });
            if let Some(e) = fold_err {
                return Err(e);
            }
            slots.push(acc);
        }
        data.push(TruthValue::Tuple(slots));
        Ok(())
    })?;
    MultiMorphism::new(label, attributes, Tensor::from_data(shape, data)?)
}

/// Merge sign systems and their models over the product of their algebras.
///
/// Ontologies, libraries, and constraint families union; shared signs and
/// labels must agree numerically across systems and embed with `⊤` at the
/// foreign coordinates. When the systems declare a truth-value sign it must
/// be the same name everywhere, and it widens to the product of the
/// truth-value Ω-sets.
pub fn integrate(inputs: &[Semiotic]) -> Result<Semiotic> {
    if inputs.is_empty() {
        return Err(Error::EmptyProduct);
    }

    // A common Ω sign, or none anywhere.
    let mut omega_sign: Option<String> = None;
    let mut omega_count = 0usize;
    for semiotic in inputs {
        if let Some(om) = semiotic.system.omega_sign() {
            omega_count += 1;
            match &omega_sign {
                None => omega_sign = Some(om.to_string()),
                Some(existing) if existing != om => {
                    return Err(Error::InvalidLibrary(format!(
                        "integration needs a common Ω sign, found `{existing}` and `{om}`"
                    )));
                }
                _ => {}
            }
        }
    }
    if omega_count != 0 && omega_count != inputs.len() {
        return Err(Error::InvalidLibrary(
            "integration needs every system to declare the Ω sign, or none".into(),
        ));
    }

    // Union ontology: input signs in first-seen order, order pairs replayed.
    let mut signs: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for semiotic in inputs {
        for sign in semiotic.system.library().ontology().inputs() {
            if seen.insert(sign.clone()) {
                signs.push(sign.clone());
            }
        }
    }
    let mut order: Vec<(String, String)> = Vec::new();
    for semiotic in inputs {
        let ontology = semiotic.system.library().ontology();
        for a in ontology.inputs() {
            for b in ontology.inputs() {
                if a != b && ontology.leq(a, b)? {
                    let pair = (a.clone(), b.clone());
                    if !order.contains(&pair) {
                        order.push(pair);
                    }
                }
            }
        }
    }
    let ontology = PolarizedOntology::new(signs.clone(), &order)?;

    // Union library: shared labels need the same word.
    let mut components: IndexMap<String, (Word, Vec<usize>)> = IndexMap::new();
    for (k, semiotic) in inputs.iter().enumerate() {
        let library = semiotic.system.library();
        for label in library.labels() {
            let word = library.component(label)?;
            match components.get_mut(label) {
                None => {
                    components.insert(label.to_string(), (word.clone(), vec![k]));
                }
                Some((existing, owners)) => {
                    if existing.signs() != word.signs() {
                        return Err(Error::ArityClash(label.to_string()));
                    }
                    owners.push(k);
                }
            }
        }
    }
    let mut equiv_labels: Vec<(String, String)> = Vec::new();
    let mut equiv_words: Vec<(Word, Word)> = Vec::new();
    for semiotic in inputs {
        for pair in semiotic.system.library().label_equivalences() {
            if !equiv_labels.contains(pair) {
                equiv_labels.push(pair.clone());
            }
        }
        for pair in semiotic.system.library().word_equivalences() {
            if !equiv_words.contains(pair) {
                equiv_words.push(pair.clone());
            }
        }
    }
    let library = Library::new(
        ontology,
        components
            .iter()
            .map(|(label, (word, _))| (label.clone(), word.clone()))
            .collect(),
        equiv_labels,
        equiv_words,
    )?;

    let algebra = MLAlgebra::product_algebra(
        inputs
            .iter()
            .map(|s| s.model.algebra().clone())
            .collect(),
    )?;
    let slices: Vec<IntegrationSlice<'_>> = inputs
        .iter()
        .map(|semiotic| {
            let omega_size = match &omega_sign {
                Some(om) => semiotic.model.sign(om)?.len(),
                None => 1,
            };
            Ok(IntegrationSlice {
                semiotic,
                omega_size,
            })
        })
        .collect::<Result<_>>()?;

    // Merged sign interpretations.
    let mut merged_signs: IndexMap<String, OmegaSet> = IndexMap::new();
    for sign in &signs {
        if Some(sign.as_str()) == omega_sign.as_deref() {
            let sets: Vec<&OmegaSet> = inputs
                .iter()
                .map(|s| s.model.sign(sign))
                .collect::<Result<_>>()?;
            merged_signs.insert(sign.clone(), integration_omega(sign, &algebra, &sets)?);
            continue;
        }
        let mut owners: Vec<(usize, &OmegaSet)> = Vec::new();
        for (k, semiotic) in inputs.iter().enumerate() {
            if semiotic.model.has_sign(sign) {
                owners.push((k, semiotic.model.sign(sign)?));
            }
        }
        let Some((_, first)) = owners.first() else {
            return Err(Error::MissingInterpretation(sign.clone()));
        };
        for (_, other) in owners.iter().skip(1) {
            if !numerically_equal_set(first, other) {
                return Err(Error::InterpretationClash(sign.clone()));
            }
        }
        let tops: Vec<TruthValue> = inputs.iter().map(|s| s.model.algebra().top()).collect();
        let size = first.len();
        let rows: Vec<Vec<TruthValue>> = (0..size)
            .map(|i| {
                (0..size)
                    .map(|j| {
                        TruthValue::Tuple(
                            (0..inputs.len())
                                .map(|k| match owners.iter().find(|(o, _)| *o == k) {
                                    Some((_, set)) => set.similarity_at(i, j).clone(),
                                    None => tops[k].clone(),
                                })
                                .collect(),
                        )
                    })
                    .collect()
            })
            .collect();
        merged_signs.insert(
            sign.clone(),
            OmegaSet::new(sign, algebra.clone(), first.support().to_vec(), rows)?,
        );
    }

    // Merged component interpretations.
    let mut merged_components: IndexMap<String, MultiMorphism> = IndexMap::new();
    let mut kinds: HashMap<String, BuiltinKind> = HashMap::new();
    for (label, (word, owners)) in &components {
        let first = inputs[owners[0]].model.component(label)?;
        for &k in owners.iter().skip(1) {
            if !numerically_equal_morphism(first, inputs[k].model.component(label)?) {
                return Err(Error::InterpretationClash(label.clone()));
            }
        }
        for &k in owners {
            if let Some(kind) = inputs[k].model.kind(label) {
                kinds.insert(label.clone(), kind);
            }
        }
        merged_components.insert(
            label.clone(),
            integrate_component(
                label,
                word,
                owners,
                &slices,
                &merged_signs,
                omega_sign.as_deref(),
                &algebra,
            )?,
        );
    }

    // Constraint families union, names freshened on collision.
    let mut e: Vec<EConstraint> = Vec::new();
    let mut u: Vec<UConstraint> = Vec::new();
    let mut cou: Vec<UConstraint> = Vec::new();
    let mut e_names: HashSet<String> = HashSet::new();
    let mut u_names: HashSet<String> = HashSet::new();
    let mut cou_names: HashSet<String> = HashSet::new();
    for semiotic in inputs {
        for entry in semiotic.system.e_constraints() {
            let mut entry = entry.clone();
            entry.name = fresh_name(&entry.name, &mut e_names);
            e.push(entry);
        }
        for entry in semiotic.system.u_constraints() {
            let mut entry = entry.clone();
            entry.name = fresh_name(&entry.name, &mut u_names);
            u.push(entry);
        }
        for entry in semiotic.system.cou_constraints() {
            let mut entry = entry.clone();
            entry.name = fresh_name(&entry.name, &mut cou_names);
            cou.push(entry);
        }
    }
    let system = SignSystem::new(library, omega_sign, e, u, cou)?;

    let mut model = Model::new(algebra);
    for (sign, set) in merged_signs {
        model.assign_sign(sign, set)?;
    }
    for (label, morphism) in merged_components {
        model.assign_component(label, morphism)?;
    }
    for (label, kind) in kinds {
        model.register_kind(label, kind);
    }
    Ok(Semiotic { system, model })
}

/// Colimit of an integration schema: interpretations at the vertices,
/// multi-morphisms between their supports on the arrows. The result ranges
/// over the concatenated supports and holds `⊗` of the vertex values times
/// the join of the arrow values (`⊤` when there are no arrows).
pub fn integration_schema_colimit(
    vertices: &[MultiMorphism],
    arrows: &[(usize, usize, MultiMorphism)],
) -> Result<MultiMorphism> {
    let Some(first) = vertices.first() else {
        return Err(Error::InvalidDiagram("the schema has no vertices".into()));
    };
    let algebra = first.algebra().clone();
    for v in vertices {
        if v.algebra() != &algebra {
            return Err(Error::AlgebraMismatch {
                left: algebra.name(),
                right: v.algebra().name(),
            });
        }
    }

    // Per-arrow axis plan: result coordinates feeding each of f's axes.
    struct ArrowPlan<'f> {
        f: &'f MultiMorphism,
        axis_from: Vec<usize>,
    }
    let offsets: Vec<usize> = {
        let mut at = 0;
        let mut offs = Vec::with_capacity(vertices.len());
        for v in vertices {
            offs.push(at);
            at += v.attributes().len();
        }
        offs
    };
    let mut plans: Vec<ArrowPlan<'_>> = Vec::new();
    for (i, j, f) in arrows {
        for (&v, side) in [(*i, "source"), (*j, "target")].iter() {
            if v >= vertices.len() {
                return Err(Error::InvalidDiagram(format!(
                    "arrow `{}` names schema vertex {v}, but there are {}",
                    f.name(),
                    vertices.len()
                )));
            }
            let _ = side;
        }
        if f.algebra() != &algebra {
            return Err(Error::AlgebraMismatch {
                left: algebra.name(),
                right: f.algebra().name(),
            });
        }
        let src: Vec<usize> = f
            .attributes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == Role::Source)
            .map(|(k, _)| k)
            .collect();
        let tgt: Vec<usize> = f
            .attributes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == Role::Target)
            .map(|(k, _)| k)
            .collect();
        for (positions, v, side) in [(&src, *i, "source"), (&tgt, *j, "target")] {
            let want = vertices[v].attributes();
            if positions.len() != want.len() {
                return Err(Error::ShapeMismatch(format!(
                    "arrow `{}` has {} {side} axes but vertex {v} has {}",
                    f.name(),
                    positions.len(),
                    want.len()
                )));
            }
            for (axis, &p) in positions.iter().enumerate() {
                if f.attributes()[p].set != want[axis].set {
                    return Err(Error::ShapeMismatch(format!(
                        "arrow `{}` {side} axis {axis} does not match vertex {v}",
                        f.name()
                    )));
                }
            }
        }
        let mut axis_from = vec![0usize; f.attributes().len()];
        for (axis, &p) in src.iter().enumerate() {
            axis_from[p] = offsets[*i] + axis;
        }
        for (axis, &p) in tgt.iter().enumerate() {
            axis_from[p] = offsets[*j] + axis;
        }
        plans.push(ArrowPlan { f, axis_from });
    }

    let mut attributes: Vec<Attribute> = Vec::new();
    for (k, v) in vertices.iter().enumerate() {
        for attr in v.attributes() {
            attributes.push(Attribute {
                name: format!("d{k}.{}", attr.name),
                set: attr.set.clone(),
                role: attr.role,
            });
        }
    }
    let shape: Vec<usize> = attributes.iter().map(|a| a.set.len()).collect();
    let mut data = Vec::new();
    let mut scratch: Vec<usize> = Vec::new();
    try_for_each_index(&shape, |idx| {
        let mut base = algebra.top();
        for (k, v) in vertices.iter().enumerate() {
            let sub = &idx[offsets[k]..offsets[k] + v.attributes().len()];
            base = algebra.tensor(&base, v.values().get(sub))?;
        }
        let combined = if plans.is_empty() {
            base
        } else {
            let mut sup = algebra.bot();
            for plan in &plans {
                scratch.clear();
                scratch.extend(plan.axis_from.iter().map(|&from| idx[from]));
                sup = algebra.join(&sup, plan.f.values().get(&scratch))?;
            }
            algebra.tensor(&base, &sup)?
        };
        data.push(combined);
        Ok(())
    })?;
    MultiMorphism::new("colim(schema)", attributes, Tensor::from_data(shape, data)?)
}
