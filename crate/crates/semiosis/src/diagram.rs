//! Multi-diagrams and their limit/colimit evaluation.
//!
//! A multi-graph has vertices and multi-arrows (an arrow may have several
//! source and several target vertices, repeats allowed). A multi-diagram
//! binds each vertex to an Ω-set and each arrow to a multi-morphism whose
//! attribute signature matches, positionally, the Ω-sets at its endpoints.
//!
//! The limit is the Ω-map over the full vertex product
//!
//! `(Lim D)(x̄) = (⊗_v [x_v]) ⊗ (⊗_a D(a)(x̄|endpoints))`
//!
//! and the colimit replaces the arrow aggregation by the lattice join (a
//! diagram with no arrows has colimit equal to its limit — the join over an
//! empty arrow set would otherwise be `⊥`, so that case is special-cased to
//! the extents product).
//!
//! Evaluation is exact and exhaustive, organized as a depth-first descent
//! over vertex assignments: projected ("kept") vertices are assigned first so
//! each output cell owns one subtree, hidden vertices follow in a greedy
//! order that completes arrows as early as possible, a `⊥` partial product
//! prunes the subtree below it, and an output cell that reaches `⊤` prunes
//! all remaining completions. The `budget` caps the number of visited
//! assignment nodes plus the output tensor size; exceeding it is an error,
//! never an approximation.

use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use crate::algebra::{Connective, MLAlgebra, TruthValue};
use crate::omega::OmegaSet;
use crate::relation::{Attribute, MultiMorphism, Role};
use crate::tensor::{checked_volume, for_each_index, Tensor};
use crate::{Error, Result, DEFAULT_CELL_BUDGET};

/// A multi-arrow declaration: ordered source and target vertex ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrow {
    pub id: String,
    /// Label naming the component this arrow is interpreted by.
    pub component: String,
    pub sources: Vec<String>,
    pub targets: Vec<String>,
}

/// Vertices and multi-arrows; the shape a diagram fills in.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiGraph {
    vertices: Vec<(String, String)>,
    arrows: Vec<Arrow>,
}

impl MultiGraph {
    /// `vertices` are `(id, sign label)` pairs. Arrow endpoints must name
    /// declared vertices; ids must be unique per kind.
    pub fn new(vertices: Vec<(String, String)>, arrows: Vec<Arrow>) -> Result<MultiGraph> {
        for (i, (id, _)) in vertices.iter().enumerate() {
            if vertices[..i].iter().any(|(other, _)| other == id) {
                return Err(Error::InvalidDiagram(format!("duplicate vertex id `{id}`")));
            }
        }
        for (i, arrow) in arrows.iter().enumerate() {
            if arrows[..i].iter().any(|other| other.id == arrow.id) {
                return Err(Error::InvalidDiagram(format!(
                    "duplicate arrow id `{}`",
                    arrow.id
                )));
            }
            for endpoint in arrow.sources.iter().chain(&arrow.targets) {
                if !vertices.iter().any(|(id, _)| id == endpoint) {
                    return Err(Error::InvalidDiagram(format!(
                        "arrow `{}` references unknown vertex `{endpoint}`",
                        arrow.id
                    )));
                }
            }
        }
        Ok(MultiGraph { vertices, arrows })
    }

    pub fn vertices(&self) -> &[(String, String)] {
        &self.vertices
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn vertex_position(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|(v, _)| v == id)
    }
}

/// An arrow bound to its multi-morphism, with the attribute→vertex wiring
/// resolved once at construction.
#[derive(Debug, Clone)]
struct BoundArrow {
    morphism: MultiMorphism,
    /// Morphism attribute position → vertex position in the diagram.
    attr_to_vertex: Vec<usize>,
}

/// A multi-graph with every vertex assigned an Ω-set and every arrow a
/// multi-morphism, plus declared source/target vertex subsets.
#[derive(Debug, Clone)]
pub struct MultiDiagram {
    graph: MultiGraph,
    vertex_sets: Vec<OmegaSet>,
    arrows: Vec<BoundArrow>,
    sources: Vec<String>,
    targets: Vec<String>,
    algebra: MLAlgebra,
}

/// Result of [`MultiDiagram::commutativity`].
#[derive(Debug, Clone, Serialize)]
pub struct Commutativity {
    /// Degree equals `⊤`.
    pub commutative: bool,
    /// `⋀_{s̄} L(s̄) ⇔ P(s̄)` — how close the projected limit comes to the
    /// projected discrete limit over the declared sources.
    pub degree: TruthValue,
    /// `degree ≥ λ`, when a λ was supplied.
    pub meets_lambda: Option<bool>,
    /// A source tuple where the equivalence is weakest, if below `⊤`.
    pub witness: Option<String>,
}

impl MultiDiagram {
    pub fn new(
        graph: MultiGraph,
        vertex_sets: Vec<(String, OmegaSet)>,
        arrow_maps: Vec<(String, MultiMorphism)>,
        sources: Vec<String>,
        targets: Vec<String>,
    ) -> Result<MultiDiagram> {
        if graph.vertices.is_empty() {
            return Err(Error::InvalidDiagram("diagram needs at least one vertex".into()));
        }
        let mut sets: Vec<Option<OmegaSet>> = vec![None; graph.vertices.len()];
        for (id, set) in vertex_sets {
            let Some(pos) = graph.vertex_position(&id) else {
                return Err(Error::InvalidDiagram(format!(
                    "assignment for unknown vertex `{id}`"
                )));
            };
            if sets[pos].replace(set).is_some() {
                return Err(Error::InvalidDiagram(format!(
                    "vertex `{id}` assigned twice"
                )));
            }
        }
        let vertex_sets: Vec<OmegaSet> = sets
            .into_iter()
            .zip(&graph.vertices)
            .map(|(set, (id, _))| {
                set.ok_or_else(|| Error::InvalidDiagram(format!("vertex `{id}` has no Ω-set")))
            })
            .collect::<Result<_>>()?;
        let algebra = vertex_sets[0].algebra().clone();
        for (set, (id, _)) in vertex_sets.iter().zip(&graph.vertices) {
            if set.algebra() != &algebra {
                return Err(Error::InvalidDiagram(format!(
                    "vertex `{id}` lives in algebra {}, expected {}",
                    set.algebra().name(),
                    algebra.name()
                )));
            }
        }

        let mut morphisms: Vec<Option<MultiMorphism>> = vec![None; graph.arrows.len()];
        for (id, m) in arrow_maps {
            let Some(pos) = graph.arrows.iter().position(|a| a.id == id) else {
                return Err(Error::InvalidDiagram(format!(
                    "assignment for unknown arrow `{id}`"
                )));
            };
            if morphisms[pos].replace(m).is_some() {
                return Err(Error::InvalidDiagram(format!("arrow `{id}` assigned twice")));
            }
        }

        let mut arrows = Vec::with_capacity(graph.arrows.len());
        for (decl, morphism) in graph.arrows.iter().zip(morphisms) {
            let morphism = morphism.ok_or_else(|| {
                Error::InvalidDiagram(format!("arrow `{}` has no multi-morphism", decl.id))
            })?;
            if morphism.algebra() != &algebra {
                return Err(Error::InvalidDiagram(format!(
                    "arrow `{}` lives in algebra {}, expected {}",
                    decl.id,
                    morphism.algebra().name(),
                    algebra.name()
                )));
            }
            let n_src = morphism.source_attributes().len();
            let n_tgt = morphism.target_attributes().len();
            if n_src != decl.sources.len() || n_tgt != decl.targets.len() {
                return Err(Error::InvalidDiagram(format!(
                    "arrow `{}` has {} source and {} target vertices but `{}` has {n_src} and {n_tgt} attributes",
                    decl.id,
                    decl.sources.len(),
                    decl.targets.len(),
                    morphism.name()
                )));
            }
            // Attribute k (declared order) binds to the next unused endpoint
            // of its role.
            let mut attr_to_vertex = Vec::with_capacity(morphism.attributes().len());
            let mut next = [0usize; 2];
            for attr in morphism.attributes() {
                let (list, slot) = match attr.role {
                    Role::Source => (&decl.sources, 0),
                    Role::Target => (&decl.targets, 1),
                };
                let vertex_id = &list[next[slot]];
                next[slot] += 1;
                let vpos = graph.vertex_position(vertex_id).unwrap();
                if attr.set != vertex_sets[vpos] {
                    return Err(Error::InvalidDiagram(format!(
                        "arrow `{}`: attribute `{}` does not match the Ω-set at vertex `{vertex_id}`",
                        decl.id, attr.name
                    )));
                }
                attr_to_vertex.push(vpos);
            }
            arrows.push(BoundArrow {
                morphism,
                attr_to_vertex,
            });
        }

        for id in sources.iter().chain(&targets) {
            if graph.vertex_position(id).is_none() {
                return Err(Error::InvalidDiagram(format!(
                    "declared source/target `{id}` is not a vertex"
                )));
            }
        }
        if let Some(id) = sources.iter().find(|id| targets.contains(id)) {
            return Err(Error::InvalidDiagram(format!(
                "vertex `{id}` is declared both source and target"
            )));
        }

        Ok(MultiDiagram {
            graph,
            vertex_sets,
            arrows,
            sources,
            targets,
            algebra,
        })
    }

    pub fn graph(&self) -> &MultiGraph {
        &self.graph
    }

    pub fn algebra(&self) -> &MLAlgebra {
        &self.algebra
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn vertex_ids(&self) -> Vec<&str> {
        self.graph.vertices.iter().map(|(id, _)| id.as_str()).collect()
    }

    pub fn vertex_set(&self, id: &str) -> Option<&OmegaSet> {
        self.graph.vertex_position(id).map(|pos| &self.vertex_sets[pos])
    }

    pub fn arrow_morphism(&self, id: &str) -> Option<&MultiMorphism> {
        self.graph
            .arrows
            .iter()
            .position(|a| a.id == id)
            .map(|pos| &self.arrows[pos].morphism)
    }

    fn role_of(&self, id: &str) -> Role {
        if self.sources.iter().any(|s| s == id) {
            Role::Source
        } else {
            Role::Target
        }
    }

    /// Limit over the full vertex product.
    pub fn limit(&self) -> Result<MultiMorphism> {
        self.limit_with_budget(DEFAULT_CELL_BUDGET)
    }

    pub fn limit_with_budget(&self, budget: usize) -> Result<MultiMorphism> {
        let all: Vec<String> = self.graph.vertices.iter().map(|(id, _)| id.clone()).collect();
        self.eval_projected(&all, false, budget)
    }

    /// Limit marginalized onto `keep`: the join over all hidden-vertex
    /// completions, computed without materializing the full tensor.
    pub fn limit_projected(&self, keep: &[String], budget: usize) -> Result<MultiMorphism> {
        self.eval_projected(keep, false, budget)
    }

    /// Colimit over the full vertex product.
    pub fn colimit(&self) -> Result<MultiMorphism> {
        self.colimit_with_budget(DEFAULT_CELL_BUDGET)
    }

    pub fn colimit_with_budget(&self, budget: usize) -> Result<MultiMorphism> {
        let all: Vec<String> = self.graph.vertices.iter().map(|(id, _)| id.clone()).collect();
        self.eval_projected(&all, true, budget)
    }

    pub fn colimit_projected(&self, keep: &[String], budget: usize) -> Result<MultiMorphism> {
        self.eval_projected(keep, true, budget)
    }

    fn eval_projected(
        &self,
        keep: &[String],
        colimit: bool,
        budget: usize,
    ) -> Result<MultiMorphism> {
        let mut kept_positions = Vec::with_capacity(keep.len());
        for id in keep {
            let Some(pos) = self.graph.vertex_position(id) else {
                return Err(Error::InvalidDiagram(format!(
                    "projection keeps unknown vertex `{id}`"
                )));
            };
            if kept_positions.contains(&pos) {
                return Err(Error::InvalidDiagram(format!(
                    "projection keeps vertex `{id}` twice"
                )));
            }
            kept_positions.push(pos);
        }

        let out_shape: Vec<usize> = kept_positions
            .iter()
            .map(|&pos| self.vertex_sets[pos].len())
            .collect();
        let out_volume = checked_volume(&out_shape)?;
        if out_volume > budget {
            return Err(Error::CellBudget {
                visited: out_volume,
                budget,
            });
        }

        // Hidden vertices: greedy order completing arrows as early as
        // possible, declaration order breaking ties.
        let mut order = kept_positions.clone();
        let mut placed: HashSet<usize> = order.iter().copied().collect();
        while placed.len() < self.graph.vertices.len() {
            let mut best: Option<(usize, usize)> = None;
            for pos in 0..self.graph.vertices.len() {
                if placed.contains(&pos) {
                    continue;
                }
                let completed = self
                    .arrows
                    .iter()
                    .filter(|a| {
                        a.attr_to_vertex.iter().any(|&v| v == pos)
                            && a.attr_to_vertex
                                .iter()
                                .all(|&v| v == pos || placed.contains(&v))
                    })
                    .count();
                if best.map_or(true, |(_, score)| completed > score) {
                    best = Some((pos, completed));
                }
            }
            let (pos, _) = best.unwrap();
            order.push(pos);
            placed.insert(pos);
        }

        let depth_of: Vec<usize> = {
            let mut d = vec![0usize; order.len()];
            for (depth, &pos) in order.iter().enumerate() {
                d[pos] = depth;
            }
            d
        };
        let mut ready: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
        for (a, arrow) in self.arrows.iter().enumerate() {
            let last = arrow
                .attr_to_vertex
                .iter()
                .map(|&v| depth_of[v])
                .max()
                .expect("arrows have at least one endpoint");
            ready[last].push(a);
        }

        let extents: Vec<Vec<TruthValue>> = order
            .iter()
            .map(|&pos| {
                let set = &self.vertex_sets[pos];
                (0..set.len()).map(|i| set.extent_at(i).clone()).collect()
            })
            .collect();

        let mut eval = Eval {
            diagram: self,
            order: &order,
            sizes: order.iter().map(|&pos| self.vertex_sets[pos].len()).collect(),
            extents,
            ready,
            kept: kept_positions.len(),
            out_shape: &out_shape,
            colimit,
            budget,
            visited: 0,
            assignment: vec![0; self.graph.vertices.len()],
            arrow_idx: self
                .arrows
                .iter()
                .map(|a| vec![0usize; a.attr_to_vertex.len()])
                .collect(),
            out: vec![self.algebra.bot(); out_volume],
            bot: self.algebra.bot(),
            top: self.algebra.top(),
        };
        eval.descend(0, self.algebra.top(), 0)?;
        let Eval { out, .. } = eval;

        let name = format!(
            "{}({})",
            if colimit { "colim" } else { "lim" },
            keep.join(",")
        );
        if kept_positions.is_empty() {
            return MultiMorphism::scalar(name, self.algebra.clone(), out.into_iter().next().unwrap());
        }
        let attributes: Vec<Attribute> = kept_positions
            .iter()
            .map(|&pos| {
                let (id, _) = &self.graph.vertices[pos];
                Attribute {
                    name: id.clone(),
                    set: self.vertex_sets[pos].clone(),
                    role: self.role_of(id),
                }
            })
            .collect();
        MultiMorphism::new(name, attributes, Tensor::from_data(out_shape, out)?)
    }

    /// Commutativity for the declared sources: compare the limit and the
    /// discrete (arrow-free) limit, both marginalized onto `s(D)`, and take
    /// the meet of the pointwise equivalences.
    pub fn commutativity(
        &self,
        lambda: Option<&TruthValue>,
        budget: usize,
    ) -> Result<Commutativity> {
        if self.sources.is_empty() {
            return Err(Error::EmptySources);
        }
        if let Some(lambda) = lambda {
            if !self.algebra.contains(lambda) {
                return Err(Error::CarrierMismatch {
                    algebra: self.algebra.name(),
                    value: lambda.to_string(),
                });
            }
        }
        let limit = self.limit_projected(&self.sources.clone(), budget)?;

        // The discrete limit is the extents product, so its marginal onto the
        // sources factorizes: ⊗ source extents ⊗ ∏_hidden (⋁ extents).
        let source_positions: Vec<usize> = self
            .sources
            .iter()
            .map(|id| self.graph.vertex_position(id).unwrap())
            .collect();
        let mut hidden_factor = self.algebra.top();
        for (pos, set) in self.vertex_sets.iter().enumerate() {
            if source_positions.contains(&pos) {
                continue;
            }
            let mut sup = self.algebra.bot();
            for i in 0..set.len() {
                sup = self
                    .algebra
                    .eval_unchecked(Connective::Join, &sup, set.extent_at(i));
            }
            hidden_factor = self
                .algebra
                .eval_unchecked(Connective::Tensor, &hidden_factor, &sup);
        }

        let shape: Vec<usize> = source_positions
            .iter()
            .map(|&pos| self.vertex_sets[pos].len())
            .collect();
        let mut degree = self.algebra.top();
        let mut witness: Option<(Vec<usize>, TruthValue)> = None;
        let mut flat = 0usize;
        for_each_index(&shape, |idx| {
            let mut p = hidden_factor.clone();
            for (&pos, &i) in source_positions.iter().zip(idx) {
                p = self.algebra.eval_unchecked(
                    Connective::Tensor,
                    &p,
                    self.vertex_sets[pos].extent_at(i),
                );
            }
            let l = limit.values().get_flat(flat);
            flat += 1;
            let agreement = self.algebra.eval_unchecked(Connective::Iff, l, &p);
            match &witness {
                Some((_, weakest)) if self.algebra.leq_unchecked(weakest, &agreement) => {}
                _ => witness = Some((idx.to_vec(), agreement.clone())),
            }
            degree = self
                .algebra
                .eval_unchecked(Connective::Meet, &degree, &agreement);
        });

        let commutative = degree.approx_eq(&self.algebra.top());
        let witness = if commutative {
            None
        } else {
            witness.map(|(idx, _)| {
                let labels: Vec<&str> = idx
                    .iter()
                    .zip(&source_positions)
                    .map(|(&i, &pos)| self.vertex_sets[pos].label(i))
                    .collect();
                format!("({})", labels.join(","))
            })
        };
        let meets_lambda = match lambda {
            Some(lambda) => Some(self.algebra.leq_within(lambda, &degree)?),
            None => None,
        };
        Ok(Commutativity {
            commutative,
            degree,
            meets_lambda,
            witness,
        })
    }
}

impl fmt::Display for MultiDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "diagram: {} vertices, {} arrows",
            self.graph.vertices.len(),
            self.arrows.len()
        )
    }
}

struct Eval<'d> {
    diagram: &'d MultiDiagram,
    order: &'d [usize],
    sizes: Vec<usize>,
    extents: Vec<Vec<TruthValue>>,
    ready: Vec<Vec<usize>>,
    kept: usize,
    out_shape: &'d [usize],
    colimit: bool,
    budget: usize,
    visited: usize,
    assignment: Vec<usize>,
    arrow_idx: Vec<Vec<usize>>,
    out: Vec<TruthValue>,
    bot: TruthValue,
    top: TruthValue,
}

impl Eval<'_> {
    fn arrow_value(&mut self, a: usize) -> TruthValue {
        let arrow = &self.diagram.arrows[a];
        for (k, &vpos) in arrow.attr_to_vertex.iter().enumerate() {
            self.arrow_idx[a][k] = self.assignment[vpos];
        }
        arrow.morphism.values().get(&self.arrow_idx[a]).clone()
    }

    fn descend(&mut self, depth: usize, partial: TruthValue, cell: usize) -> Result<()> {
        let algebra = &self.diagram.algebra;
        if depth == self.order.len() {
            let value = if self.colimit {
                let arrows = self.diagram.arrows.len();
                if arrows == 0 {
                    partial
                } else {
                    let mut sup = self.bot.clone();
                    for a in 0..arrows {
                        let v = self.arrow_value(a);
                        sup = algebra.eval_unchecked(Connective::Join, &sup, &v);
                        if sup.approx_eq(&self.top) {
                            break;
                        }
                    }
                    algebra.eval_unchecked(Connective::Tensor, &partial, &sup)
                }
            } else {
                partial
            };
            self.out[cell] = algebra.eval_unchecked(Connective::Join, &self.out[cell], &value);
            return Ok(());
        }
        if depth >= self.kept && self.out[cell].approx_eq(&self.top) {
            return Ok(());
        }
        let vpos = self.order[depth];
        for value in 0..self.sizes[depth] {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::CellBudget {
                    visited: self.visited,
                    budget: self.budget,
                });
            }
            self.assignment[vpos] = value;
            let mut factor = self.extents[depth][value].clone();
            if !self.colimit {
                for k in 0..self.ready[depth].len() {
                    let a = self.ready[depth][k];
                    if factor.approx_eq(&self.bot) {
                        break;
                    }
                    let v = self.arrow_value(a);
                    factor = algebra.eval_unchecked(Connective::Tensor, &factor, &v);
                }
            }
            if factor.approx_eq(&self.bot) {
                continue;
            }
            let next = algebra.eval_unchecked(Connective::Tensor, &partial, &factor);
            if next.approx_eq(&self.bot) {
                continue;
            }
            let next_cell = if depth < self.kept {
                cell * self.out_shape[depth] + value
            } else {
                cell
            };
            self.descend(depth + 1, next, next_cell)?;
        }
        Ok(())
    }
}

fn extent_prefactor(
    algebra: &MLAlgebra,
    attrs: &[&Attribute],
    idx: &[usize],
) -> TruthValue {
    let mut v = algebra.top();
    for (attr, &i) in attrs.iter().zip(idx) {
        v = algebra.eval_unchecked(Connective::Tensor, &v, attr.set.extent_at(i));
    }
    v
}

fn check_parallel(r: &MultiMorphism, s: &MultiMorphism) -> Result<()> {
    if r.algebra() != s.algebra() {
        return Err(Error::AlgebraMismatch {
            left: r.algebra().name(),
            right: s.algebra().name(),
        });
    }
    let compatible = r.attributes().len() == s.attributes().len()
        && r.attributes()
            .iter()
            .zip(s.attributes())
            .all(|(a, b)| a.role == b.role && a.set == b.set);
    if !compatible {
        return Err(Error::ShapeMismatch(format!(
            "`{}` and `{}` are not a parallel pair",
            r.name(),
            s.name()
        )));
    }
    Ok(())
}

/// `Lim(R = S)(x̄) = [x̄] ⊗ R(x̄) ⊗ S(x̄)` for a parallel pair.
pub fn equalizer(r: &MultiMorphism, s: &MultiMorphism) -> Result<MultiMorphism> {
    check_parallel(r, s)?;
    let algebra = r.algebra().clone();
    let attrs: Vec<&Attribute> = r.attributes().iter().collect();
    MultiMorphism::from_fn(
        format!("eq({},{})", r.name(), s.name()),
        r.attributes().to_vec(),
        |idx| {
            let pre = extent_prefactor(&algebra, &attrs, idx);
            let rs = algebra.eval_unchecked(Connective::Tensor, r.get(idx), s.get(idx));
            algebra.eval_unchecked(Connective::Tensor, &pre, &rs)
        },
    )
}

/// `coLim(R = S)(x̄) = [x̄] ⊗ (R(x̄) ∨ S(x̄))`.
pub fn coequalizer(r: &MultiMorphism, s: &MultiMorphism) -> Result<MultiMorphism> {
    check_parallel(r, s)?;
    let algebra = r.algebra().clone();
    let attrs: Vec<&Attribute> = r.attributes().iter().collect();
    MultiMorphism::from_fn(
        format!("coeq({},{})", r.name(), s.name()),
        r.attributes().to_vec(),
        |idx| {
            let pre = extent_prefactor(&algebra, &attrs, idx);
            let rs = algebra.eval_unchecked(Connective::Join, r.get(idx), s.get(idx));
            algebra.eval_unchecked(Connective::Tensor, &pre, &rs)
        },
    )
}

/// Shared scaffolding for pullback/pushout over a common target block `Ū`:
/// `R: X̄ ⇀ Ū` and `S: Ȳ ⇀ Ū` combine into an Ω-map over `(x̄, ū, ȳ)`.
fn span_combine(
    name: String,
    r: &MultiMorphism,
    s: &MultiMorphism,
    include_u_extents: bool,
    arrow_conn: Connective,
) -> Result<MultiMorphism> {
    if r.algebra() != s.algebra() {
        return Err(Error::AlgebraMismatch {
            left: r.algebra().name(),
            right: s.algebra().name(),
        });
    }
    let r_tgt = r.target_attributes();
    let s_tgt = s.target_attributes();
    let shared = r_tgt.len() == s_tgt.len()
        && r_tgt.iter().zip(&s_tgt).all(|(a, b)| a.set == b.set);
    if !shared {
        return Err(Error::ShapeMismatch(format!(
            "`{}` and `{}` do not share a target block",
            r.name(),
            s.name()
        )));
    }
    let algebra = r.algebra().clone();

    // Result attributes: x̄ (sources), ū (targets, named from R), ȳ (sources),
    // later names primed on collision.
    let mut attrs: Vec<Attribute> = Vec::new();
    let mut push = |attrs: &mut Vec<Attribute>, attr: &Attribute, role: Role| {
        let mut name = attr.name.clone();
        while attrs.iter().any(|a| a.name == name) {
            name.push('\'');
        }
        attrs.push(Attribute {
            name,
            set: attr.set.clone(),
            role,
        });
    };
    for a in r.source_attributes() {
        push(&mut attrs, a, Role::Source);
    }
    let x_len = attrs.len();
    for &a in &r_tgt {
        push(&mut attrs, a, Role::Target);
    }
    let u_len = r_tgt.len();
    for b in s.source_attributes() {
        push(&mut attrs, b, Role::Source);
    }

    // Map result coordinates into R and S index buffers (declared order).
    let r_order: Vec<usize> = {
        let mut src = 0;
        let mut tgt = 0;
        r.attributes()
            .iter()
            .map(|a| match a.role {
                Role::Source => {
                    src += 1;
                    src - 1
                }
                Role::Target => {
                    tgt += 1;
                    x_len + tgt - 1
                }
            })
            .collect()
    };
    let s_order: Vec<usize> = {
        let mut src = 0;
        let mut tgt = 0;
        s.attributes()
            .iter()
            .map(|b| match b.role {
                Role::Source => {
                    src += 1;
                    x_len + u_len + src - 1
                }
                Role::Target => {
                    tgt += 1;
                    x_len + tgt - 1
                }
            })
            .collect()
    };

    let mut r_idx = vec![0usize; r.attributes().len()];
    let mut s_idx = vec![0usize; s.attributes().len()];
    // `attrs` is moved into from_fn below; precompute what the closure needs.
    let extent_sets: Vec<(usize, OmegaSet)> = attrs
        .iter()
        .enumerate()
        .filter(|(k, _)| include_u_extents || *k < x_len || *k >= x_len + u_len)
        .map(|(k, a)| (k, a.set.clone()))
        .collect();

    MultiMorphism::from_fn(name, attrs.clone(), |idx| {
        let mut pre = algebra.top();
        for (k, set) in &extent_sets {
            pre = algebra.eval_unchecked(Connective::Tensor, &pre, set.extent_at(idx[*k]));
        }
        for (pos, &slot) in r_order.iter().enumerate() {
            r_idx[pos] = idx[slot];
        }
        for (pos, &slot) in s_order.iter().enumerate() {
            s_idx[pos] = idx[slot];
        }
        let rs = algebra.eval_unchecked(arrow_conn, r.get(&r_idx), s.get(&s_idx));
        algebra.eval_unchecked(Connective::Tensor, &pre, &rs)
    })
}

/// `Lim(R ⊗_U S)(x̄, ū, ȳ) = [x̄, ū, ȳ] ⊗ R(x̄, ū) ⊗ S(ȳ, ū)` — the pullback
/// of a cospan sharing its target block.
pub fn pullback(r: &MultiMorphism, s: &MultiMorphism) -> Result<MultiMorphism> {
    span_combine(
        format!("pb({},{})", r.name(), s.name()),
        r,
        s,
        true,
        Connective::Tensor,
    )
}

/// `coLim(R ⊕_U S)(x̄, ū, ȳ) = [x̄, ȳ] ⊗ (R(x̄, ū) ∨ S(ȳ, ū))`. The shared
/// block's extents are *not* part of the prefactor.
pub fn pushout(r: &MultiMorphism, s: &MultiMorphism) -> Result<MultiMorphism> {
    span_combine(
        format!("po({},{})", r.name(), s.name()),
        r,
        s,
        false,
        Connective::Join,
    )
}

/// Factor an Ω-map lying below its diagonal through a single-arrow diagram:
/// the arrow is `f(x̄) = [x̄] ⇒ g(x̄)`, and divisibility gives
/// `Lim = [x̄] ⊗ ([x̄] ⇒ g) = [x̄] ∧ g = g`.
pub fn divisible_decompose(g: &MultiMorphism) -> Result<MultiDiagram> {
    let algebra = g.algebra().clone();
    if !algebra.divisible() {
        return Err(Error::NotDivisible {
            algebra: algebra.name(),
        });
    }
    if g.attributes().is_empty() {
        return Err(Error::InvalidDiagram(
            "decomposition needs at least one attribute".into(),
        ));
    }
    let attrs: Vec<&Attribute> = g.attributes().iter().collect();
    let shape: Vec<usize> = attrs.iter().map(|a| a.set.len()).collect();
    let mut violation = None;
    for_each_index(&shape, |idx| {
        if violation.is_some() {
            return;
        }
        let diag = extent_prefactor(&algebra, &attrs, idx);
        if !algebra.leq_within_unchecked(g.get(idx), &diag) {
            let labels: Vec<&str> = idx
                .iter()
                .zip(&attrs)
                .map(|(&i, a)| a.set.label(i))
                .collect();
            violation = Some(format!(
                "g({}) = {} exceeds the diagonal {diag}",
                labels.join(","),
                g.get(idx)
            ));
        }
    });
    if let Some(witness) = violation {
        return Err(Error::DecomposePrecondition { witness });
    }

    let arrow_table = MultiMorphism::from_fn(
        format!("{}~arrow", g.name()),
        g.attributes().to_vec(),
        |idx| {
            let diag = extent_prefactor(&algebra, &attrs, idx);
            algebra.eval_unchecked(Connective::Implies, &diag, g.get(idx))
        },
    )?;

    let vertices: Vec<(String, String)> = g
        .attributes()
        .iter()
        .map(|a| (a.name.clone(), a.set.name().to_string()))
        .collect();
    let source_ids: Vec<String> = g.source_names().iter().map(|s| s.to_string()).collect();
    let target_ids: Vec<String> = g.target_names().iter().map(|s| s.to_string()).collect();
    let graph = MultiGraph::new(
        vertices,
        vec![Arrow {
            id: "f".into(),
            component: arrow_table.name().to_string(),
            sources: source_ids.clone(),
            targets: target_ids.clone(),
        }],
    )?;
    MultiDiagram::new(
        graph,
        g.attributes()
            .iter()
            .map(|a| (a.name.clone(), a.set.clone()))
            .collect(),
        vec![("f".into(), arrow_table)],
        source_ids,
        target_ids,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(v: f64) -> TruthValue {
        TruthValue::Real(v)
    }

    /// Two-element set with extents (1, e) and ⊥ off-diagonal.
    fn weighted(name: &str, algebra: MLAlgebra, e: f64) -> OmegaSet {
        OmegaSet::new(
            name,
            algebra,
            vec!["0".into(), "1".into()],
            vec![
                vec![real(1.0), real(0.0)],
                vec![real(0.0), real(e)],
            ],
        )
        .unwrap()
    }

    fn seeded_table(dims: usize, seed: u64) -> impl Fn(&[usize]) -> TruthValue {
        move |idx: &[usize]| {
            let mut h = seed;
            for &i in idx {
                h = h.wrapping_mul(6364136223846793005).wrapping_add(i as u64 + 1);
            }
            let _ = dims;
            real(((h >> 33) % 1000) as f64 / 1000.0)
        }
    }

    #[test]
    fn discrete_diagram_limit_is_extent_product() {
        let algebra = MLAlgebra::Product;
        let a = weighted("A", algebra.clone(), 0.8);
        let b = weighted("B", algebra, 0.5);
        let graph = MultiGraph::new(
            vec![("x".into(), "A".into()), ("y".into(), "B".into())],
            vec![],
        )
        .unwrap();
        let d = MultiDiagram::new(
            graph,
            vec![("x".into(), a), ("y".into(), b)],
            vec![],
            vec!["x".into()],
            vec!["y".into()],
        )
        .unwrap();
        let lim = d.limit().unwrap();
        assert!(lim.get(&[0, 0]).approx_eq(&real(1.0)));
        assert!(lim.get(&[1, 1]).approx_eq(&real(0.4)));
        assert!(lim.get(&[1, 0]).approx_eq(&real(0.8)));
        let colim = d.colimit().unwrap();
        assert!(colim.values().approx_eq(lim.values()));
        assert_eq!(lim.source_names(), vec!["x"]);
        assert_eq!(lim.target_names(), vec!["y"]);
    }

    #[test]
    fn single_arrow_crisp_limit_reproduces_the_arrow() {
        let algebra = MLAlgebra::Lukasiewicz;
        let a = OmegaSet::crisp("A", algebra.clone(), vec!["0".into(), "1".into()]).unwrap();
        let b = OmegaSet::crisp("B", algebra, vec!["0".into(), "1".into()]).unwrap();
        let f = MultiMorphism::from_fn(
            "f",
            vec![
                Attribute::source("p", a.clone()),
                Attribute::target("q", b.clone()),
            ],
            seeded_table(2, 11),
        )
        .unwrap();
        let graph = MultiGraph::new(
            vec![("x".into(), "A".into()), ("y".into(), "B".into())],
            vec![Arrow {
                id: "a".into(),
                component: "f".into(),
                sources: vec!["x".into()],
                targets: vec!["y".into()],
            }],
        )
        .unwrap();
        let d = MultiDiagram::new(
            graph,
            vec![("x".into(), a), ("y".into(), b)],
            vec![("a".into(), f.clone())],
            vec!["x".into()],
            vec!["y".into()],
        )
        .unwrap();
        let lim = d.limit().unwrap();
        assert!(lim.values().approx_eq(f.values()));
        let colim = d.colimit().unwrap();
        assert!(colim.values().approx_eq(f.values()));
    }

    /// Three arrows over six vertices; the limit value at each tuple is the
    /// extent product times the three arrow values at their coordinates.
    fn three_arrow_diagram() -> (MultiDiagram, Vec<OmegaSet>) {
        let algebra = MLAlgebra::Product;
        let sets: Vec<OmegaSet> = (0..6)
            .map(|k| {
                weighted(
                    &format!("S{k}"),
                    algebra.clone(),
                    [1.0, 0.9, 0.8, 0.7, 0.6, 0.5][k],
                )
            })
            .collect();
        let f = MultiMorphism::from_fn(
            "f",
            vec![
                Attribute::source("p0", sets[0].clone()),
                Attribute::source("p1", sets[1].clone()),
                Attribute::source("p3", sets[3].clone()),
                Attribute::target("p4", sets[4].clone()),
                Attribute::target("p5", sets[5].clone()),
            ],
            seeded_table(5, 101),
        )
        .unwrap();
        let g = MultiMorphism::from_fn(
            "g",
            vec![
                Attribute::source("q1", sets[1].clone()),
                Attribute::source("q2", sets[2].clone()),
                Attribute::target("q4", sets[4].clone()),
                Attribute::target("q5", sets[5].clone()),
            ],
            seeded_table(4, 202),
        )
        .unwrap();
        let h = MultiMorphism::from_fn(
            "h",
            vec![
                Attribute::source("r2", sets[2].clone()),
                Attribute::target("r3", sets[3].clone()),
            ],
            seeded_table(2, 303),
        )
        .unwrap();
        let graph = MultiGraph::new(
            (0..6).map(|k| (format!("a{k}"), format!("S{k}"))).collect(),
            vec![
                Arrow {
                    id: "f".into(),
                    component: "f".into(),
                    sources: vec!["a0".into(), "a1".into(), "a3".into()],
                    targets: vec!["a4".into(), "a5".into()],
                },
                Arrow {
                    id: "g".into(),
                    component: "g".into(),
                    sources: vec!["a1".into(), "a2".into()],
                    targets: vec!["a4".into(), "a5".into()],
                },
                Arrow {
                    id: "h".into(),
                    component: "h".into(),
                    sources: vec!["a2".into()],
                    targets: vec!["a3".into()],
                },
            ],
        )
        .unwrap();
        let d = MultiDiagram::new(
            graph,
            (0..6).map(|k| (format!("a{k}"), sets[k].clone())).collect(),
            vec![("f".into(), f), ("g".into(), g), ("h".into(), h)],
            vec!["a0".into()],
            vec!["a5".into()],
        )
        .unwrap();
        (d, sets)
    }

    #[test]
    fn three_arrow_limit_matches_cellwise_formula() {
        let (d, sets) = three_arrow_diagram();
        let algebra = d.algebra().clone();
        let lim = d.limit().unwrap();
        let colim = d.colimit().unwrap();
        let f = d.arrow_morphism("f").unwrap().clone();
        let g = d.arrow_morphism("g").unwrap().clone();
        let h = d.arrow_morphism("h").unwrap().clone();
        for_each_index(&[2, 2, 2, 2, 2, 2], |x| {
            let mut extents = algebra.top();
            for (k, set) in sets.iter().enumerate() {
                extents = algebra
                    .eval_unchecked(Connective::Tensor, &extents, set.extent_at(x[k]));
            }
            let fv = f.get(&[x[0], x[1], x[3], x[4], x[5]]);
            let gv = g.get(&[x[1], x[2], x[4], x[5]]);
            let hv = h.get(&[x[2], x[3]]);
            let arrows_tensor = algebra.eval_unchecked(
                Connective::Tensor,
                &algebra.eval_unchecked(Connective::Tensor, fv, gv),
                hv,
            );
            let expected = algebra.eval_unchecked(Connective::Tensor, &extents, &arrows_tensor);
            assert!(
                lim.get(x).approx_eq(&expected),
                "limit at {x:?}: {} vs {expected}",
                lim.get(x)
            );
            let arrows_join = algebra.eval_unchecked(
                Connective::Join,
                &algebra.eval_unchecked(Connective::Join, fv, gv),
                hv,
            );
            let expected = algebra.eval_unchecked(Connective::Tensor, &extents, &arrows_join);
            assert!(colim.get(x).approx_eq(&expected));
        });
    }

    #[test]
    fn projected_limit_equals_marginal_of_full_limit() {
        let (d, _) = three_arrow_diagram();
        let algebra = d.algebra().clone();
        let full = d.limit().unwrap();
        let projected = d
            .limit_projected(&["a0".into(), "a2".into()], DEFAULT_CELL_BUDGET)
            .unwrap();
        for_each_index(&[2, 2], |kept| {
            let mut sup = algebra.bot();
            for_each_index(&[2, 2, 2, 2], |hidden| {
                let x = [kept[0], hidden[0], kept[1], hidden[1], hidden[2], hidden[3]];
                sup = algebra.eval_unchecked(Connective::Join, &sup, full.get(&x));
            });
            assert!(
                projected.get(kept).approx_eq(&sup),
                "marginal at {kept:?}: {} vs {sup}",
                projected.get(kept)
            );
        });
    }

    #[test]
    fn limit_stays_below_extent_product() {
        let (d, sets) = three_arrow_diagram();
        let algebra = d.algebra().clone();
        let lim = d.limit().unwrap();
        for_each_index(&[2, 2, 2, 2, 2, 2], |x| {
            let mut extents = algebra.top();
            for (k, set) in sets.iter().enumerate() {
                extents = algebra
                    .eval_unchecked(Connective::Tensor, &extents, set.extent_at(x[k]));
            }
            assert!(algebra.leq_within_unchecked(lim.get(x), &extents));
        });
    }

    #[test]
    fn budget_is_enforced() {
        let (d, _) = three_arrow_diagram();
        assert!(matches!(
            d.limit_with_budget(10),
            Err(Error::CellBudget { .. })
        ));
    }

    #[test]
    fn total_limit_means_commutative() {
        // χ of a total map into a crisp target: L(a) = ⋁_b f(a,b) = ⊤ = P(a).
        let algebra = MLAlgebra::Goedel;
        let a = OmegaSet::crisp("A", algebra.clone(), vec!["0".into(), "1".into()]).unwrap();
        let b = OmegaSet::crisp("B", algebra, vec!["0".into(), "1".into()]).unwrap();
        let f = MultiMorphism::from_fn(
            "f",
            vec![
                Attribute::source("p", a.clone()),
                Attribute::target("q", b.clone()),
            ],
            |idx| real(if idx[1] == idx[0] { 1.0 } else { 0.0 }),
        )
        .unwrap();
        let graph = MultiGraph::new(
            vec![("x".into(), "A".into()), ("y".into(), "B".into())],
            vec![Arrow {
                id: "a".into(),
                component: "f".into(),
                sources: vec!["x".into()],
                targets: vec!["y".into()],
            }],
        )
        .unwrap();
        let d = MultiDiagram::new(
            graph,
            vec![("x".into(), a), ("y".into(), b)],
            vec![("a".into(), f)],
            vec!["x".into()],
            vec!["y".into()],
        )
        .unwrap();
        let c = d.commutativity(None, DEFAULT_CELL_BUDGET).unwrap();
        assert!(c.commutative);
        assert!(c.degree.approx_eq(&real(1.0)));
        assert!(c.witness.is_none());

        let c = d.commutativity(Some(&real(0.5)), DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(c.meets_lambda, Some(true));
    }

    #[test]
    fn bottom_arrow_blocks_commutativity() {
        let algebra = MLAlgebra::Goedel;
        let a = OmegaSet::crisp("A", algebra.clone(), vec!["0".into(), "1".into()]).unwrap();
        let b = OmegaSet::crisp("B", algebra, vec!["0".into(), "1".into()]).unwrap();
        let f = MultiMorphism::from_fn(
            "f",
            vec![
                Attribute::source("p", a.clone()),
                Attribute::target("q", b.clone()),
            ],
            |_| real(0.0),
        )
        .unwrap();
        let graph = MultiGraph::new(
            vec![("x".into(), "A".into()), ("y".into(), "B".into())],
            vec![Arrow {
                id: "a".into(),
                component: "f".into(),
                sources: vec!["x".into()],
                targets: vec!["y".into()],
            }],
        )
        .unwrap();
        let d = MultiDiagram::new(
            graph,
            vec![("x".into(), a), ("y".into(), b)],
            vec![("a".into(), f)],
            vec!["x".into()],
            vec!["y".into()],
        )
        .unwrap();
        let c = d.commutativity(Some(&real(0.5)), DEFAULT_CELL_BUDGET).unwrap();
        assert!(!c.commutative);
        assert!(c.degree.approx_eq(&real(0.0)));
        assert_eq!(c.meets_lambda, Some(false));
        assert_eq!(c.witness.as_deref(), Some("(0)"));
    }

    #[test]
    fn equalizer_of_a_pair_with_itself_squares_it() {
        let algebra = MLAlgebra::Product;
        let a = OmegaSet::crisp("A", algebra.clone(), vec!["0".into(), "1".into()]).unwrap();
        let b = OmegaSet::crisp("B", algebra, vec!["0".into(), "1".into()]).unwrap();
        let f = MultiMorphism::from_fn(
            "f",
            vec![
                Attribute::source("x", a),
                Attribute::target("y", b),
            ],
            seeded_table(2, 5),
        )
        .unwrap();
        let eq = equalizer(&f, &f).unwrap();
        for_each_index(&[2, 2], |idx| {
            let v = f.get(idx);
            let expected = f
                .algebra()
                .eval_unchecked(Connective::Tensor, v, v);
            assert!(eq.get(idx).approx_eq(&expected));
        });
        // Coequalizer of f with itself: [x̄] ⊗ (f ∨ f) = f over crisp sets.
        let coeq = coequalizer(&f, &f).unwrap();
        assert!(coeq.values().approx_eq(f.values()));
    }

    #[test]
    fn boolean_pullback_is_the_classical_one() {
        let algebra = MLAlgebra::Boolean;
        let x = OmegaSet::crisp("X", algebra.clone(), vec!["0".into(), "1".into()]).unwrap();
        let y = OmegaSet::crisp("Y", algebra.clone(), vec!["0".into(), "1".into()]).unwrap();
        let u = OmegaSet::crisp("U", algebra, vec!["0".into(), "1".into()]).unwrap();
        // r = χ(identity), s = χ(swap).
        let r = MultiMorphism::from_fn(
            "r",
            vec![Attribute::source("x", x), Attribute::target("u", u.clone())],
            |idx| real(if idx[1] == idx[0] { 1.0 } else { 0.0 }),
        )
        .unwrap();
        let s = MultiMorphism::from_fn(
            "s",
            vec![Attribute::source("y", y), Attribute::target("u", u)],
            |idx| real(if idx[1] == 1 - idx[0] { 1.0 } else { 0.0 }),
        )
        .unwrap();
        let pb = pullback(&r, &s).unwrap();
        assert_eq!(pb.shape(), &[2, 2, 2]);
        for_each_index(&[2, 2, 2], |idx| {
            let (xv, uv, yv) = (idx[0], idx[1], idx[2]);
            let classical = uv == xv && yv == 1 - uv;
            let expected = real(if classical { 1.0 } else { 0.0 });
            assert!(pb.get(idx).approx_eq(&expected), "at {idx:?}");
        });
    }

    #[test]
    fn pushout_prefactor_skips_the_shared_block() {
        let algebra = MLAlgebra::Product;
        let x = weighted("X", algebra.clone(), 0.9);
        let y = weighted("Y", algebra.clone(), 0.8);
        let u = weighted("U", algebra, 0.5);
        let r = MultiMorphism::from_fn(
            "r",
            vec![Attribute::source("x", x.clone()), Attribute::target("u", u.clone())],
            seeded_table(2, 41),
        )
        .unwrap();
        let s = MultiMorphism::from_fn(
            "s",
            vec![Attribute::source("y", y.clone()), Attribute::target("u", u.clone())],
            seeded_table(2, 42),
        )
        .unwrap();
        let po = pushout(&r, &s).unwrap();
        let algebra = r.algebra().clone();
        for_each_index(&[2, 2, 2], |idx| {
            let (xi, ui, yi) = (idx[0], idx[1], idx[2]);
            let pre = algebra.eval_unchecked(
                Connective::Tensor,
                x.extent_at(xi),
                y.extent_at(yi),
            );
            let arrows = algebra.eval_unchecked(
                Connective::Join,
                r.get(&[xi, ui]),
                s.get(&[yi, ui]),
            );
            let expected = algebra.eval_unchecked(Connective::Tensor, &pre, &arrows);
            assert!(po.get(idx).approx_eq(&expected), "at {idx:?}");
        });
        // And the pullback of the same span does include [u].
        let pb = pullback(&r, &s).unwrap();
        let idx = [1, 1, 1];
        let pre = algebra.eval_unchecked(
            Connective::Tensor,
            &algebra.eval_unchecked(
                Connective::Tensor,
                x.extent_at(1),
                y.extent_at(1),
            ),
            u.extent_at(1),
        );
        let arrows = algebra.eval_unchecked(
            Connective::Tensor,
            r.get(&[1, 1]),
            s.get(&[1, 1]),
        );
        let expected = algebra.eval_unchecked(Connective::Tensor, &pre, &arrows);
        assert!(pb.get(&idx).approx_eq(&expected));
    }

    #[test]
    fn decompose_round_trips_an_admissible_map() {
        let algebra = MLAlgebra::Product;
        let a = OmegaSet::new(
            "A",
            algebra.clone(),
            vec!["0".into(), "1".into(), "2".into()],
            vec![
                vec![real(1.0), real(0.4), real(0.2)],
                vec![real(0.4), real(0.8), real(0.3)],
                vec![real(0.2), real(0.3), real(0.5)],
            ],
        )
        .unwrap();
        let g = MultiMorphism::from_fn(
            "g",
            vec![
                Attribute::source("x", a.clone()),
                Attribute::target("y", a.clone()),
            ],
            |idx| {
                let ex = a.extent_at(idx[0]).as_real().unwrap();
                let ey = a.extent_at(idx[1]).as_real().unwrap();
                real(0.5 * ex * ey)
            },
        )
        .unwrap();
        let d = divisible_decompose(&g).unwrap();
        let lim = d.limit().unwrap();
        assert!(lim.values().approx_eq(g.values()));
        assert_eq!(lim.source_names(), vec!["x"]);
        assert_eq!(lim.target_names(), vec!["y"]);
    }

    #[test]
    fn decompose_rejects_values_above_the_diagonal() {
        let algebra = MLAlgebra::Product;
        let a = weighted("A", algebra, 0.5);
        let g = MultiMorphism::from_fn(
            "g",
            vec![
                Attribute::source("x", a.clone()),
                Attribute::target("y", a),
            ],
            |_| real(0.6),
        )
        .unwrap();
        match divisible_decompose(&g) {
            Err(Error::DecomposePrecondition { witness }) => {
                assert!(witness.contains("g(0,1)"), "{witness}");
            }
            other => panic!("expected a precondition failure, got {other:?}"),
        }
    }

    #[test]
    fn decompose_requires_divisibility() {
        // Drastic product on a 4-chain: residuated but not divisible.
        use crate::algebra::FiniteChain;
        let labels = ["0", "a", "b", "1"];
        let tensor: Vec<Vec<String>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        let k = if i == 3 { j } else if j == 3 { i } else { 0 };
                        labels[k].to_string()
                    })
                    .collect()
            })
            .collect();
        let implies: Vec<Vec<String>> = (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| {
                        let k = if i <= j { 3 } else if i < 3 { 2 } else { j };
                        labels[k].to_string()
                    })
                    .collect()
            })
            .collect();
        let chain = FiniteChain::new(
            labels.iter().map(|s| s.to_string()).collect(),
            tensor,
            implies,
        )
        .unwrap();
        let algebra = MLAlgebra::FiniteChain(chain);
        assert!(!algebra.divisible());
        assert!(algebra.check_laws(0).passed());
        let a = OmegaSet::crisp("A", algebra.clone(), vec!["x".into()]).unwrap();
        let g = MultiMorphism::from_fn(
            "g",
            vec![Attribute::target("x", a)],
            |_| TruthValue::Fin("0".into()),
        )
        .unwrap();
        assert!(matches!(
            divisible_decompose(&g),
            Err(Error::NotDivisible { .. })
        ));
    }

    #[test]
    fn diagram_construction_catches_signature_mismatch() {
        let algebra = MLAlgebra::Goedel;
        let a = OmegaSet::crisp("A", algebra.clone(), vec!["0".into(), "1".into()]).unwrap();
        let b3 = OmegaSet::crisp("B", algebra, vec!["0".into(), "1".into(), "2".into()]).unwrap();
        let f = MultiMorphism::from_fn(
            "f",
            vec![
                Attribute::source("p", b3.clone()),
                Attribute::target("q", b3),
            ],
            |_| real(1.0),
        )
        .unwrap();
        let graph = MultiGraph::new(
            vec![("x".into(), "A".into()), ("y".into(), "A".into())],
            vec![Arrow {
                id: "a".into(),
                component: "f".into(),
                sources: vec!["x".into()],
                targets: vec!["y".into()],
            }],
        )
        .unwrap();
        assert!(matches!(
            MultiDiagram::new(
                graph,
                vec![("x".into(), a.clone()), ("y".into(), a)],
                vec![("a".into(), f)],
                vec![],
                vec![],
            ),
            Err(Error::InvalidDiagram(_))
        ));
    }
}
