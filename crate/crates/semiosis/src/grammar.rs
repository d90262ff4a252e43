//! The syntactic layer: polarized sign ontologies, words, string gluing,
//! component libraries, parser graphs, configuration validation, diagram
//! gluing, and refinement rewriting.
//!
//! Signs come in dual pairs: an input sign `s` and its output `s+`. A word
//! is a sequence of signs; a library maps component labels to words; a
//! configuration is a multi-graph whose vertices carry input signs and whose
//! arrows carry component labels. Gluing — of words or of diagrams — cancels
//! an output sign against a matching input, where "matching" means the exact
//! dual first, then any strict generalization of it in the declared sign
//! order.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;

use crate::diagram::{Arrow, MultiGraph};
use crate::report::Report;
use crate::{Error, Result};

/// Does this sign have output polarity (trailing `+`)?
pub fn is_output_sign(sign: &str) -> bool {
    sign.ends_with('+')
}

/// A finite set of input signs, their output duals, and a partial order.
///
/// The order is stored closed: reflexive, transitive, and dual-compatible
/// (`a ≤ b` implies `a+ ≤ b+`), with antisymmetry verified after closure.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedOntology {
    inputs: Vec<String>,
    /// All signs: inputs `0..n`, outputs `n..2n` (dual of `i` is `i±n`).
    signs: Vec<String>,
    index: HashMap<String, usize>,
    leq: Vec<Vec<bool>>,
}

impl PolarizedOntology {
    /// `order` pairs read `(lower, higher)`; they may mention inputs or
    /// outputs and are closed under duality either way.
    pub fn new(inputs: Vec<String>, order: &[(String, String)]) -> Result<PolarizedOntology> {
        if inputs.is_empty() {
            return Err(Error::InvalidOntology("no input signs declared".into()));
        }
        for (i, sign) in inputs.iter().enumerate() {
            if sign.is_empty() || is_output_sign(sign) {
                return Err(Error::InvalidOntology(format!(
                    "input sign `{sign}` must be non-empty and must not end in `+`"
                )));
            }
            if inputs[..i].contains(sign) {
                return Err(Error::InvalidOntology(format!("duplicate sign `{sign}`")));
            }
        }
        let n = inputs.len();
        let mut signs = inputs.clone();
        signs.extend(inputs.iter().map(|s| format!("{s}+")));
        let index: HashMap<String, usize> = signs
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();

        let mut leq = vec![vec![false; 2 * n]; 2 * n];
        for (k, row) in leq.iter_mut().enumerate() {
            row[k] = true;
        }
        let dual_of = |k: usize| if k < n { k + n } else { k - n };
        for (lo, hi) in order {
            let (Some(&a), Some(&b)) = (index.get(lo), index.get(hi)) else {
                return Err(Error::UnknownSign(if index.contains_key(lo) {
                    hi.clone()
                } else {
                    lo.clone()
                }));
            };
            leq[a][b] = true;
            leq[dual_of(a)][dual_of(b)] = true;
        }
        for k in 0..2 * n {
            for i in 0..2 * n {
                if !leq[i][k] {
                    continue;
                }
                for j in 0..2 * n {
                    if leq[k][j] {
                        leq[i][j] = true;
                    }
                }
            }
        }
        for i in 0..2 * n {
            for j in (i + 1)..2 * n {
                if leq[i][j] && leq[j][i] {
                    return Err(Error::InvalidOntology(format!(
                        "`{}` and `{}` order each other; the sign order must be antisymmetric",
                        signs[i], signs[j]
                    )));
                }
            }
        }
        Ok(PolarizedOntology {
            inputs,
            signs,
            index,
            leq,
        })
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn contains(&self, sign: &str) -> bool {
        self.index.contains_key(sign)
    }

    pub fn is_input(&self, sign: &str) -> bool {
        self.index.get(sign).is_some_and(|&k| k < self.inputs.len())
    }

    fn position(&self, sign: &str) -> Result<usize> {
        self.index
            .get(sign)
            .copied()
            .ok_or_else(|| Error::UnknownSign(sign.to_string()))
    }

    pub fn dual(&self, sign: &str) -> Result<&str> {
        let k = self.position(sign)?;
        let n = self.inputs.len();
        Ok(&self.signs[if k < n { k + n } else { k - n }])
    }

    /// `a ≤ b` in the closed order: `b` is `a` or a generalization of it.
    pub fn leq(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.leq[self.position(a)?][self.position(b)?])
    }
}

/// An ordered sequence of signs. The empty word is the gluing unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    signs: Vec<String>,
}

impl Word {
    pub fn empty() -> Word {
        Word::default()
    }

    /// Whitespace-separated sign labels, all of which must exist.
    pub fn parse(text: &str, ontology: &PolarizedOntology) -> Result<Word> {
        let signs: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        for sign in &signs {
            if !ontology.contains(sign) {
                return Err(Error::UnknownSign(sign.clone()));
            }
        }
        Ok(Word { signs })
    }

    pub(crate) fn from_signs(signs: Vec<String>) -> Word {
        Word { signs }
    }

    pub fn signs(&self) -> &[String] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// Splits into the input and output subsequences, each order-preserving.
    pub fn io(&self) -> (Word, Word) {
        let (outputs, inputs): (Vec<String>, Vec<String>) =
            self.signs.iter().cloned().partition(|s| is_output_sign(s));
        (Word { signs: inputs }, Word { signs: outputs })
    }

    /// Concatenation without cancellation.
    pub fn concat(&self, other: &Word) -> Word {
        let mut signs = self.signs.clone();
        signs.extend_from_slice(&other.signs);
        Word { signs }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.signs.join(" "))
    }
}

/// In `right`, find the occurrence that cancels output sign `lambda`: the
/// exact dual first, else the leftmost strict generalization of the dual.
fn find_cancellation(
    ontology: &PolarizedOntology,
    lambda: &str,
    right: &[Option<String>],
) -> Result<Option<usize>> {
    let want = ontology.dual(lambda)?.to_string();
    for (j, slot) in right.iter().enumerate() {
        if slot.as_deref() == Some(want.as_str()) {
            return Ok(Some(j));
        }
    }
    for (j, slot) in right.iter().enumerate() {
        if let Some(mu) = slot {
            if mu != &want && ontology.leq(&want, mu)? {
                return Ok(Some(j));
            }
        }
    }
    Ok(None)
}

/// String gluing: repeatedly cancel the first cancellable output sign of `w`
/// against its dual (or a strict generalization of the dual) in `w_prime`,
/// then concatenate the residues.
pub fn glue_words(w: &Word, w_prime: &Word, ontology: &PolarizedOntology) -> Result<Word> {
    let mut left: Vec<Option<String>> = w.signs.iter().cloned().map(Some).collect();
    let mut right: Vec<Option<String>> = w_prime.signs.iter().cloned().map(Some).collect();
    loop {
        let mut cancelled = false;
        for i in 0..left.len() {
            let Some(sign) = left[i].clone() else {
                continue;
            };
            if !is_output_sign(&sign) {
                continue;
            }
            if let Some(j) = find_cancellation(ontology, &sign, &right)? {
                left[i] = None;
                right[j] = None;
                cancelled = true;
                break;
            }
        }
        if !cancelled {
            break;
        }
    }
    let signs: Vec<String> = left.into_iter().chain(right).flatten().collect();
    Ok(Word { signs })
}

/// Component labels mapped to words, with declared label and word
/// equivalences (closed reflexively/symmetrically/transitively on demand).
#[derive(Debug, Clone)]
pub struct Library {
    ontology: PolarizedOntology,
    components: IndexMap<String, Word>,
    equiv_labels: Vec<(String, String)>,
    equiv_words: Vec<(Word, Word)>,
}

/// Union-find closure over an enumerated universe.
fn connected<T: PartialEq>(universe: &[T], pairs: &[(usize, usize)], a: usize, b: usize) -> bool {
    let mut class: Vec<usize> = (0..universe.len()).collect();
    fn root(class: &mut Vec<usize>, mut k: usize) -> usize {
        while class[k] != k {
            class[k] = class[class[k]];
            k = class[k];
        }
        k
    }
    for &(x, y) in pairs {
        let (rx, ry) = (root(&mut class, x), root(&mut class, y));
        class[rx] = ry;
    }
    root(&mut class, a) == root(&mut class, b)
}

impl Library {
    pub fn new(
        ontology: PolarizedOntology,
        components: Vec<(String, Word)>,
        equiv_labels: Vec<(String, String)>,
        equiv_words: Vec<(Word, Word)>,
    ) -> Result<Library> {
        let mut map = IndexMap::new();
        for (label, word) in components {
            if map.insert(label.clone(), word).is_some() {
                return Err(Error::InvalidLibrary(format!(
                    "component `{label}` declared twice"
                )));
            }
        }
        let lib = Library {
            ontology,
            components: map,
            equiv_labels,
            equiv_words,
        };
        for (l0, l1) in &lib.equiv_labels {
            let w0 = lib.component(l0)?;
            let w1 = lib.component(l1)?;
            if !lib.equivalent_words(w0, w1) {
                return Err(Error::InvalidLibrary(format!(
                    "labels `{l0}` ≡ `{l1}` but their words `{w0}` and `{w1}` are not equivalent"
                )));
            }
        }
        Ok(lib)
    }

    pub fn ontology(&self) -> &PolarizedOntology {
        &self.ontology
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.components.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, label: &str) -> Result<&Word> {
        self.components
            .get(label)
            .ok_or_else(|| Error::UnknownComponent(label.to_string()))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.components.contains_key(label)
    }

    /// The declared label equivalences, before closure.
    pub fn label_equivalences(&self) -> &[(String, String)] {
        &self.equiv_labels
    }

    /// The declared word equivalences, before closure.
    pub fn word_equivalences(&self) -> &[(Word, Word)] {
        &self.equiv_words
    }

    pub fn equivalent_labels(&self, a: &str, b: &str) -> bool {
        if a == b {
            return self.components.contains_key(a);
        }
        let universe: Vec<&str> = self.components.keys().map(String::as_str).collect();
        let pos = |l: &str| universe.iter().position(|u| *u == l);
        let (Some(pa), Some(pb)) = (pos(a), pos(b)) else {
            return false;
        };
        let pairs: Vec<(usize, usize)> = self
            .equiv_labels
            .iter()
            .filter_map(|(x, y)| Some((pos(x)?, pos(y)?)))
            .collect();
        connected(&universe, &pairs, pa, pb)
    }

    pub fn equivalent_words(&self, a: &Word, b: &Word) -> bool {
        if a == b {
            return true;
        }
        let mut distinct: Vec<Word> = Vec::new();
        let slot = |w: &Word, distinct: &mut Vec<Word>| -> usize {
            match distinct.iter().position(|d| d == w) {
                Some(k) => k,
                None => {
                    distinct.push(w.clone());
                    distinct.len() - 1
                }
            }
        };
        let pa = slot(a, &mut distinct);
        let pb = slot(b, &mut distinct);
        let pairs: Vec<(usize, usize)> = self
            .equiv_words
            .iter()
            .map(|(x, y)| (slot(x, &mut distinct), slot(y, &mut distinct)))
            .collect();
        connected(&distinct, &pairs, pa, pb)
    }
}

/// Parser multi-graph of a library: one vertex per used input sign, one
/// multi-arrow per component, sources `i(w)` and targets the duals of `o(w)`.
pub fn parser_graph(library: &Library) -> Result<MultiGraph> {
    let ontology = library.ontology();
    let mut vertex_order: Vec<String> = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut arrows = Vec::new();
    for label in library.labels() {
        let word = library.component(label)?;
        let mut sources = Vec::new();
        let mut targets = Vec::new();
        for sign in word.signs() {
            let input = if is_output_sign(sign) {
                ontology.dual(sign)?.to_string()
            } else {
                sign.clone()
            };
            if seen.insert(input.clone()) {
                vertex_order.push(input.clone());
            }
            if is_output_sign(sign) {
                targets.push(input);
            } else {
                sources.push(input);
            }
        }
        arrows.push(Arrow {
            id: label.to_string(),
            component: label.to_string(),
            sources,
            targets,
        });
    }
    MultiGraph::new(
        vertex_order.into_iter().map(|s| (s.clone(), s)).collect(),
        arrows,
    )
}

/// Outcome of configuration validation: the report plus, when valid, the
/// boundary words.
#[derive(Debug, Clone)]
pub struct ConfigCheck {
    pub report: Report,
    /// `i(D)`: signs of vertices no arrow targets, in declaration order.
    pub inputs: Option<Word>,
    /// `o(D)`: duals of signs of vertices no arrow sources.
    pub outputs: Option<Word>,
}

/// Boundary vertex positions of a configuration graph: `(untargeted,
/// unsourced)`, each in vertex declaration order.
fn boundary_positions(graph: &MultiGraph) -> (Vec<usize>, Vec<usize>) {
    let mut targeted: HashSet<&str> = HashSet::new();
    let mut sourced: HashSet<&str> = HashSet::new();
    for arrow in graph.arrows() {
        for v in &arrow.sources {
            sourced.insert(v);
        }
        for v in &arrow.targets {
            targeted.insert(v);
        }
    }
    let untargeted = graph
        .vertices()
        .iter()
        .enumerate()
        .filter(|(_, (id, _))| !targeted.contains(id.as_str()))
        .map(|(k, _)| k)
        .collect();
    let unsourced = graph
        .vertices()
        .iter()
        .enumerate()
        .filter(|(_, (id, _))| !sourced.contains(id.as_str()))
        .map(|(k, _)| k)
        .collect();
    (untargeted, unsourced)
}

/// Check that a labeled multi-graph is a configuration of `library`: vertex
/// signs are input signs, arrow labels are components, and every tentacle
/// lands on a vertex whose sign is the required sign or a generalization of
/// it.
pub fn validate_configuration(graph: &MultiGraph, library: &Library) -> Result<ConfigCheck> {
    let ontology = library.ontology();
    let mut report = Report::new("configuration");
    let mut checked = 0usize;
    for (id, sign) in graph.vertices() {
        checked += 1;
        if !ontology.is_input(sign) {
            report.push_fail(
                format!("vertex `{id}`"),
                1,
                format!("sign `{sign}` is not an input sign of the ontology"),
            );
        }
    }

    let sign_of: HashMap<&str, &str> = graph
        .vertices()
        .iter()
        .map(|(id, sign)| (id.as_str(), sign.as_str()))
        .collect();
    for arrow in graph.arrows() {
        checked += 1;
        let word = match library.component(&arrow.component) {
            Ok(word) => word,
            Err(_) => {
                report.push_fail(
                    format!("arrow `{}`", arrow.id),
                    1,
                    format!("component `{}` is not in the library", arrow.component),
                );
                continue;
            }
        };
        let (inputs, outputs) = word.io();
        if inputs.len() != arrow.sources.len() || outputs.len() != arrow.targets.len() {
            report.push_fail(
                format!("arrow `{}`", arrow.id),
                1,
                format!(
                    "component `{}` needs {} source and {} target tentacles, found {} and {}",
                    arrow.component,
                    inputs.len(),
                    outputs.len(),
                    arrow.sources.len(),
                    arrow.targets.len()
                ),
            );
            continue;
        }
        let mut ok = true;
        for (required, vertex) in inputs.signs().iter().zip(&arrow.sources) {
            let sign = sign_of[vertex.as_str()];
            if !ontology.leq(required, sign)? {
                report.push_fail(
                    format!("arrow `{}`", arrow.id),
                    1,
                    format!(
                        "source tentacle on `{vertex}` has sign `{sign}`, which does not generalize `{required}`"
                    ),
                );
                ok = false;
            }
        }
        for (required_out, vertex) in outputs.signs().iter().zip(&arrow.targets) {
            let required = ontology.dual(required_out)?;
            let sign = sign_of[vertex.as_str()];
            if !ontology.leq(required, sign)? {
                report.push_fail(
                    format!("arrow `{}`", arrow.id),
                    1,
                    format!(
                        "target tentacle on `{vertex}` has sign `{sign}`, which does not generalize `{required}`"
                    ),
                );
                ok = false;
            }
        }
        let _ = ok;
    }

    if report.passed() {
        report.push_pass("configuration is a multi-graph over the library", checked);
        let (untargeted, unsourced) = boundary_positions(graph);
        let inputs = Word::from_signs(
            untargeted
                .iter()
                .map(|&k| graph.vertices()[k].1.clone())
                .collect(),
        );
        let outputs: Result<Vec<String>> = unsourced
            .iter()
            .map(|&k| Ok(ontology.dual(&graph.vertices()[k].1)?.to_string()))
            .collect();
        Ok(ConfigCheck {
            report,
            inputs: Some(inputs),
            outputs: Some(Word::from_signs(outputs?)),
        })
    } else {
        Ok(ConfigCheck {
            report,
            inputs: None,
            outputs: None,
        })
    }
}

/// Make `candidate` unique against `taken` by priming, then record it.
fn fresh_id(candidate: &str, taken: &mut HashSet<String>) -> String {
    let mut id = candidate.to_string();
    while taken.contains(&id) {
        id.push('\'');
    }
    taken.insert(id.clone());
    id
}

/// Glue two configurations: cancel output boundary vertices of `d` against
/// input boundary vertices of `d_prime` exactly as string gluing cancels
/// signs, identifying each cancelled pair of vertices. The merged vertex
/// keeps the `d`-side id and the more general of the two signs.
pub fn glue_diagrams(
    d: &MultiGraph,
    d_prime: &MultiGraph,
    library: &Library,
) -> Result<MultiGraph> {
    let ontology = library.ontology();
    let (_, d_unsourced) = boundary_positions(d);
    let (dp_untargeted, _) = boundary_positions(d_prime);

    // The gluing loop over (o(D), i(D′)), tracking vertex positions.
    let mut left: Vec<Option<(usize, String)>> = d_unsourced
        .iter()
        .map(|&k| {
            let sign = &d.vertices()[k].1;
            Ok(Some((k, ontology.dual(sign)?.to_string())))
        })
        .collect::<Result<_>>()?;
    let mut right: Vec<Option<(usize, String)>> = dp_untargeted
        .iter()
        .map(|&k| Some((k, d_prime.vertices()[k].1.clone())))
        .collect();
    // Identified pairs: d′ vertex position → d vertex position.
    let mut glued: HashMap<usize, usize> = HashMap::new();
    loop {
        let mut cancelled = false;
        for i in 0..left.len() {
            let Some((dpos, lambda)) = left[i].clone() else {
                continue;
            };
            let right_signs: Vec<Option<String>> = right
                .iter()
                .map(|slot| slot.as_ref().map(|(_, s)| s.clone()))
                .collect();
            if let Some(j) = find_cancellation(ontology, &lambda, &right_signs)? {
                let (ppos, _) = right[j].clone().unwrap();
                glued.insert(ppos, dpos);
                left[i] = None;
                right[j] = None;
                cancelled = true;
                break;
            }
        }
        if !cancelled {
            break;
        }
    }

    // Merged vertex set: d's vertices (glued ones adopt the more general
    // sign), then d′'s unglued vertices under collision-free ids.
    let mut taken: HashSet<String> =
        d.vertices().iter().map(|(id, _)| id.clone()).collect();
    let mut vertices: Vec<(String, String)> = d.vertices().to_vec();
    for (&ppos, &dpos) in &glued {
        let d_sign = &d.vertices()[dpos].1;
        let p_sign = &d_prime.vertices()[ppos].1;
        if d_sign != p_sign && ontology.leq(d_sign, p_sign)? {
            vertices[dpos].1 = p_sign.clone();
        }
    }
    let mut rename: HashMap<&str, String> = HashMap::new();
    for (ppos, (id, sign)) in d_prime.vertices().iter().enumerate() {
        if let Some(&dpos) = glued.get(&ppos) {
            rename.insert(id.as_str(), vertices[dpos].0.clone());
        } else {
            let fresh = fresh_id(id, &mut taken);
            rename.insert(id.as_str(), fresh.clone());
            vertices.push((fresh, sign.clone()));
        }
    }

    let mut arrow_ids: HashSet<String> =
        d.arrows().iter().map(|a| a.id.clone()).collect();
    let mut arrows: Vec<Arrow> = d.arrows().to_vec();
    for arrow in d_prime.arrows() {
        arrows.push(Arrow {
            id: fresh_id(&arrow.id, &mut arrow_ids),
            component: arrow.component.clone(),
            sources: arrow.sources.iter().map(|v| rename[v.as_str()].clone()).collect(),
            targets: arrow.targets.iter().map(|v| rename[v.as_str()].clone()).collect(),
        });
    }
    MultiGraph::new(vertices, arrows)
}

/// Validated refinement rules: label → replacement configuration.
#[derive(Debug, Clone)]
pub struct Refinement {
    rules: IndexMap<String, MultiGraph>,
}

impl Refinement {
    /// Each rule must name a library component, its body must contain only
    /// atomic (rule-free) arrows and no isolated vertices, and the body's
    /// boundary words must equal the component word's input/output split.
    pub fn new(rules: Vec<(String, MultiGraph)>, library: &Library) -> Result<Refinement> {
        let labels: HashSet<String> = rules.iter().map(|(l, _)| l.clone()).collect();
        let mut map = IndexMap::new();
        for (label, body) in rules {
            let word = library.component(&label).map_err(|_| Error::InvalidRefinement {
                label: label.clone(),
                reason: "label is not a library component".into(),
            })?;
            let (want_in, want_out) = word.io();
            for arrow in body.arrows() {
                if !library.contains(&arrow.component) {
                    return Err(Error::InvalidRefinement {
                        label: label.clone(),
                        reason: format!("body arrow `{}` uses unknown component `{}`", arrow.id, arrow.component),
                    });
                }
                if labels.contains(&arrow.component) {
                    return Err(Error::InvalidRefinement {
                        label: label.clone(),
                        reason: format!(
                            "body arrow `{}` uses decomposable component `{}`; rule bodies must be atomic",
                            arrow.id, arrow.component
                        ),
                    });
                }
            }
            let (untargeted, unsourced) = boundary_positions(&body);
            if untargeted.iter().any(|k| unsourced.contains(k)) {
                return Err(Error::InvalidRefinement {
                    label: label.clone(),
                    reason: "body has an isolated vertex; boundaries must be disjoint".into(),
                });
            }
            let body_in = Word::from_signs(
                untargeted.iter().map(|&k| body.vertices()[k].1.clone()).collect(),
            );
            let body_out: Vec<String> = unsourced
                .iter()
                .map(|&k| {
                    Ok(library.ontology().dual(&body.vertices()[k].1)?.to_string())
                })
                .collect::<Result<_>>()?;
            let body_out = Word::from_signs(body_out);
            if body_in != want_in || body_out != want_out {
                return Err(Error::InvalidRefinement {
                    label: label.clone(),
                    reason: format!(
                        "body boundary ({body_in} | {body_out}) does not match the component word ({want_in} | {want_out})"
                    ),
                });
            }
            if map.insert(label.clone(), body).is_some() {
                return Err(Error::InvalidRefinement {
                    label,
                    reason: "rule declared twice".into(),
                });
            }
        }
        Ok(Refinement { rules: map })
    }

    pub fn has_rule(&self, label: &str) -> bool {
        self.rules.contains_key(label)
    }

    /// One parallel rewrite step: every arrow with a rule is replaced by a
    /// copy of its body, boundary vertices identified with the arrow's
    /// endpoints and internal vertices freshly named.
    pub fn apply(&self, graph: &MultiGraph) -> Result<MultiGraph> {
        let mut vertices: Vec<(String, String)> = graph.vertices().to_vec();
        let mut taken: HashSet<String> =
            vertices.iter().map(|(id, _)| id.clone()).collect();
        let mut arrow_ids: HashSet<String> =
            graph.arrows().iter().map(|a| a.id.clone()).collect();
        let mut arrows: Vec<Arrow> = Vec::new();
        for arrow in graph.arrows() {
            let Some(body) = self.rules.get(&arrow.component) else {
                arrows.push(arrow.clone());
                continue;
            };
            let (untargeted, unsourced) = boundary_positions(body);
            // Body vertex id → outer vertex id.
            let mut attach: HashMap<&str, String> = HashMap::new();
            for (&k, outer) in untargeted.iter().zip(&arrow.sources) {
                attach.insert(body.vertices()[k].0.as_str(), outer.clone());
            }
            for (&k, outer) in unsourced.iter().zip(&arrow.targets) {
                attach.insert(body.vertices()[k].0.as_str(), outer.clone());
            }
            for (id, sign) in body.vertices() {
                if !attach.contains_key(id.as_str()) {
                    let fresh = fresh_id(&format!("{}.{id}", arrow.id), &mut taken);
                    attach.insert(id.as_str(), fresh.clone());
                    vertices.push((fresh, sign.clone()));
                }
            }
            for inner in body.arrows() {
                arrows.push(Arrow {
                    id: fresh_id(&format!("{}.{}", arrow.id, inner.id), &mut arrow_ids),
                    component: inner.component.clone(),
                    sources: inner.sources.iter().map(|v| attach[v.as_str()].clone()).collect(),
                    targets: inner.targets.iter().map(|v| attach[v.as_str()].clone()).collect(),
                });
            }
        }
        MultiGraph::new(vertices, arrows)
    }

    /// Iterate [`Refinement::apply`] to the rule-free fixpoint. Rule bodies
    /// are atomic, so this needs at most one step, but the loop re-checks.
    pub fn normal_form(&self, graph: &MultiGraph) -> Result<MultiGraph> {
        let mut current = graph.clone();
        while current.arrows().iter().any(|a| self.has_rule(&a.component)) {
            current = self.apply(&current)?;
        }
        Ok(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_ontology(signs: &[&str]) -> PolarizedOntology {
        PolarizedOntology::new(signs.iter().map(|s| s.to_string()).collect(), &[]).unwrap()
    }

    fn ontology_with_order(signs: &[&str], order: &[(&str, &str)]) -> PolarizedOntology {
        PolarizedOntology::new(
            signs.iter().map(|s| s.to_string()).collect(),
            &order
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    fn word(text: &str, ont: &PolarizedOntology) -> Word {
        Word::parse(text, ont).unwrap()
    }

    fn library(ont: &PolarizedOntology, components: &[(&str, &str)]) -> Library {
        Library::new(
            ont.clone(),
            components
                .iter()
                .map(|(l, w)| (l.to_string(), word(w, ont)))
                .collect(),
            vec![],
            vec![],
        )
        .unwrap()
    }

    fn arrow(id: &str, component: &str, sources: &[&str], targets: &[&str]) -> Arrow {
        Arrow {
            id: id.into(),
            component: component.into(),
            sources: sources.iter().map(|s| s.to_string()).collect(),
            targets: targets.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn graph(vertices: &[(&str, &str)], arrows: Vec<Arrow>) -> MultiGraph {
        MultiGraph::new(
            vertices
                .iter()
                .map(|(id, sign)| (id.to_string(), sign.to_string()))
                .collect(),
            arrows,
        )
        .unwrap()
    }

    #[test]
    fn order_closure_is_reflexive_transitive_and_dual_compatible() {
        let ont = ontology_with_order(&["s0", "s1", "s"], &[("s0", "s1"), ("s1", "s")]);
        assert!(ont.leq("s0", "s0").unwrap());
        assert!(ont.leq("s0", "s").unwrap());
        assert!(ont.leq("s0+", "s+").unwrap());
        assert!(!ont.leq("s", "s0").unwrap());
        assert_eq!(ont.dual("s0").unwrap(), "s0+");
        assert_eq!(ont.dual("s0+").unwrap(), "s0");
    }

    #[test]
    fn cyclic_order_is_rejected() {
        let result = PolarizedOntology::new(
            vec!["a".into(), "b".into()],
            &[("a".into(), "b".into()), ("b".into(), "a".into())],
        );
        assert!(matches!(result, Err(Error::InvalidOntology(_))));
    }

    #[test]
    fn words_parse_and_split_by_polarity() {
        let ont = flat_ontology(&["a", "b", "c"]);
        let w = word("a b+ c b+", &ont);
        let (i, o) = w.io();
        assert_eq!(i.to_string(), "a c");
        assert_eq!(o.to_string(), "b+ b+");
        assert!(Word::parse("a d", &ont).is_err());
        let all_inputs = word("a b c", &ont);
        assert!(all_inputs.io().1.is_empty());
    }

    #[test]
    fn gluing_cancels_dual_pairs() {
        let ont = flat_ontology(&["a", "b", "c"]);
        let w = word("a b+", &ont);
        let w2 = word("b c+", &ont);
        assert_eq!(glue_words(&w, &w2, &ont).unwrap().to_string(), "a c+");
    }

    #[test]
    fn empty_word_is_the_gluing_unit() {
        let ont = flat_ontology(&["a", "b"]);
        let w = word("a b+ b+", &ont);
        let empty = Word::empty();
        assert_eq!(glue_words(&w, &empty, &ont).unwrap(), w);
        assert_eq!(glue_words(&empty, &w, &ont).unwrap(), w);
    }

    #[test]
    fn gluing_prefers_exact_duals_over_generalizations() {
        let ont = ontology_with_order(&["s0", "s", "x", "y"], &[("s0", "s")]);
        // Exact dual available: cancel s0 (position 2), not the more general s.
        let w = word("x s0+", &ont);
        let w2 = word("s s0 y+", &ont);
        assert_eq!(glue_words(&w, &w2, &ont).unwrap().to_string(), "x s y+");
        // Only the generalization available: cancel against s.
        let w2 = word("s y+", &ont);
        assert_eq!(glue_words(&w, &w2, &ont).unwrap().to_string(), "x y+");
        // No generalization the other way: s+ does not cancel against s0.
        let w = word("x s+", &ont);
        let w2 = word("s0 y+", &ont);
        assert_eq!(glue_words(&w, &w2, &ont).unwrap().to_string(), "x s+ s0 y+");
    }

    #[test]
    fn gluing_disjoint_words_concatenates() {
        let ont = flat_ontology(&["a", "b", "c", "d"]);
        let w = word("a b+", &ont);
        let w2 = word("c d+", &ont);
        let forward = glue_words(&w, &w2, &ont).unwrap();
        let backward = glue_words(&w2, &w, &ont).unwrap();
        assert_eq!(forward.to_string(), "a b+ c d+");
        let mut f: Vec<&String> = forward.signs().iter().collect();
        let mut b: Vec<&String> = backward.signs().iter().collect();
        f.sort();
        b.sort();
        assert_eq!(f, b);
    }

    #[test]
    fn library_checks_label_equivalences_against_word_equivalences() {
        let ont = flat_ontology(&["s"]);
        let w1 = word("s s+", &ont);
        let w2 = word("s s s+", &ont);
        // Declared label equivalence with non-equivalent words is refused.
        let bad = Library::new(
            ont.clone(),
            vec![("f".into(), w1.clone()), ("g".into(), w2.clone())],
            vec![("f".into(), "g".into())],
            vec![],
        );
        assert!(matches!(bad, Err(Error::InvalidLibrary(_))));
        // With the word pair declared equivalent it is accepted.
        let ok = Library::new(
            ont,
            vec![("f".into(), w1.clone()), ("g".into(), w2.clone())],
            vec![("f".into(), "g".into())],
            vec![(w1, w2)],
        )
        .unwrap();
        assert!(ok.equivalent_labels("f", "g"));
        assert!(!ok.equivalent_labels("f", "missing"));
    }

    #[test]
    fn parser_graph_shapes_follow_component_words() {
        let ont = flat_ontology(&["s"]);
        let lib = library(&ont, &[("plus", "s s s+")]);
        let g = parser_graph(&lib).unwrap();
        assert_eq!(g.vertices(), &[("s".to_string(), "s".to_string())]);
        assert_eq!(g.arrows().len(), 1);
        assert_eq!(g.arrows()[0].sources, vec!["s", "s"]);
        assert_eq!(g.arrows()[0].targets, vec!["s"]);

        let ont = flat_ontology(&["a", "b", "e"]);
        let lib = library(&ont, &[("f", "b e a+")]);
        let g = parser_graph(&lib).unwrap();
        assert_eq!(g.arrows()[0].sources, vec!["b", "e"]);
        assert_eq!(g.arrows()[0].targets, vec!["a"]);

        let empty = Library::new(flat_ontology(&["s"]), vec![], vec![], vec![]).unwrap();
        let g = parser_graph(&empty).unwrap();
        assert!(g.vertices().is_empty());
        assert!(g.arrows().is_empty());
    }

    /// The two-level term f(x:b, g(y:c, z:d):e):a as a configuration.
    fn term_fixture() -> (Library, MultiGraph) {
        let ont = flat_ontology(&["a", "b", "c", "d", "e"]);
        let lib = library(&ont, &[("f", "b e a+"), ("g", "c d e+")]);
        let graph = graph(
            &[("x", "b"), ("y", "c"), ("z", "d"), ("v", "e"), ("r", "a")],
            vec![
                arrow("g0", "g", &["y", "z"], &["v"]),
                arrow("f0", "f", &["x", "v"], &["r"]),
            ],
        );
        (lib, graph)
    }

    #[test]
    fn term_configuration_is_valid_with_expected_boundary() {
        let (lib, graph) = term_fixture();
        let check = validate_configuration(&graph, &lib).unwrap();
        assert!(check.report.passed(), "{}", check.report);
        assert_eq!(check.inputs.unwrap().to_string(), "b c d");
        assert_eq!(check.outputs.unwrap().to_string(), "a+");
    }

    #[test]
    fn unknown_component_is_cited_by_arrow_id() {
        let (lib, _) = term_fixture();
        let g = graph(
            &[("x", "b"), ("r", "a")],
            vec![arrow("bad", "nope", &["x"], &["r"])],
        );
        let check = validate_configuration(&g, &lib).unwrap();
        assert!(!check.report.passed());
        assert!(check.inputs.is_none());
        let failure = check.report.failures().next().unwrap();
        assert!(failure.name.contains("bad"));
        assert!(failure.detail.as_ref().unwrap().contains("nope"));
    }

    #[test]
    fn generalized_vertex_signs_are_accepted() {
        let ont = ontology_with_order(&["s0", "s", "t"], &[("s0", "s")]);
        let lib = library(&ont, &[("take", "s0 t+")]);
        // Vertex sign s generalizes the required s0.
        let ok = graph(
            &[("v", "s"), ("w", "t")],
            vec![arrow("a0", "take", &["v"], &["w"])],
        );
        assert!(validate_configuration(&ok, &lib).unwrap().report.passed());
        // The other direction is not allowed: required s, vertex s0.
        let lib2 = library(&ont, &[("take", "s t+")]);
        let bad = graph(
            &[("v", "s0"), ("w", "t")],
            vec![arrow("a0", "take", &["v"], &["w"])],
        );
        let check = validate_configuration(&bad, &lib2).unwrap();
        assert!(!check.report.passed());
    }

    #[test]
    fn diagram_gluing_identifies_boundary_vertices() {
        let ont = flat_ontology(&["a", "b", "c"]);
        let lib = library(&ont, &[("f", "b a+"), ("g", "a c+")]);
        let d = graph(
            &[("x", "b"), ("m", "a")],
            vec![arrow("f0", "f", &["x"], &["m"])],
        );
        let d2 = graph(
            &[("m", "a"), ("y", "c")],
            vec![arrow("g0", "g", &["m"], &["y"])],
        );
        let glued = glue_diagrams(&d, &d2, &lib).unwrap();
        // Shared vertex: d-side "m"; d′'s "y" kept; ids stay unique.
        assert_eq!(glued.vertices().len(), 3);
        assert_eq!(glued.arrows().len(), 2);
        let check = validate_configuration(&glued, &lib).unwrap();
        assert!(check.report.passed());
        assert_eq!(check.inputs.unwrap().to_string(), "b");
        assert_eq!(check.outputs.unwrap().to_string(), "c+");
        // Cross-check against word gluing.
        let w = word("b a+", &ont);
        let w2 = word("a c+", &ont);
        let glued_word = glue_words(&w, &w2, &ont).unwrap();
        assert_eq!(glued_word.to_string(), "b c+");
    }

    #[test]
    fn gluing_with_the_empty_diagram_is_identity() {
        let ont = flat_ontology(&["a", "b"]);
        let lib = library(&ont, &[("f", "b a+")]);
        let d = graph(
            &[("x", "b"), ("m", "a")],
            vec![arrow("f0", "f", &["x"], &["m"])],
        );
        let empty = MultiGraph::new(vec![], vec![]).unwrap();
        assert_eq!(glue_diagrams(&d, &empty, &lib).unwrap(), d);
        assert_eq!(glue_diagrams(&empty, &d, &lib).unwrap(), d);
    }

    #[test]
    fn refinement_expands_to_the_body_and_reaches_normal_form() {
        let ont = flat_ontology(&["a", "c", "e"]);
        let lib = library(
            &ont,
            &[("comp", "c a+"), ("g", "c e+"), ("h", "e a+")],
        );
        let body = graph(
            &[("bc", "c"), ("be", "e"), ("ba", "a")],
            vec![
                arrow("g1", "g", &["bc"], &["be"]),
                arrow("h1", "h", &["be"], &["ba"]),
            ],
        );
        let rules = Refinement::new(vec![("comp".into(), body)], &lib).unwrap();
        let d = graph(
            &[("x", "c"), ("y", "a")],
            vec![arrow("u", "comp", &["x"], &["y"])],
        );
        let expanded = rules.normal_form(&d).unwrap();
        assert_eq!(expanded.vertices().len(), 3);
        assert_eq!(expanded.arrows().len(), 2);
        assert_eq!(expanded.arrows()[0].component, "g");
        assert_eq!(expanded.arrows()[0].sources, vec!["x"]);
        assert_eq!(expanded.arrows()[1].targets, vec!["y"]);
        // The boundary is preserved.
        let check = validate_configuration(&expanded, &lib).unwrap();
        assert!(check.report.passed());
        assert_eq!(check.inputs.unwrap().to_string(), "c");
        assert_eq!(check.outputs.unwrap().to_string(), "a+");
        // An atomic configuration is already normal.
        assert_eq!(rules.normal_form(&expanded).unwrap(), expanded);
    }

    #[test]
    fn refinement_rejects_mismatched_boundaries() {
        let ont = flat_ontology(&["a", "c", "e"]);
        let lib = library(&ont, &[("comp", "c a+"), ("g", "c e+")]);
        let body = graph(
            &[("bc", "c"), ("be", "e")],
            vec![arrow("g1", "g", &["bc"], &["be"])],
        );
        match Refinement::new(vec![("comp".into(), body)], &lib) {
            Err(Error::InvalidRefinement { label, reason }) => {
                assert_eq!(label, "comp");
                assert!(reason.contains("does not match"), "{reason}");
            }
            other => panic!("expected boundary mismatch, got {other:?}"),
        }
    }

    #[test]
    fn refinement_bodies_must_be_atomic() {
        let ont = flat_ontology(&["a", "c"]);
        let lib = library(&ont, &[("comp", "c a+")]);
        let body = graph(
            &[("bc", "c"), ("ba", "a")],
            vec![arrow("c1", "comp", &["bc"], &["ba"])],
        );
        assert!(matches!(
            Refinement::new(vec![("comp".into(), body)], &lib),
            Err(Error::InvalidRefinement { .. })
        ));
    }
}
