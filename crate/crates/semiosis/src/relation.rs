//! Multi-morphisms: Ω-valued tensors over named attribute products.
//!
//! A multi-morphism `f: A ⇀ B` is a dense tensor indexed by the supports of
//! its attributes, each attribute designated as a source or a target. All
//! structure — composition, transpose, totality, the epi/mono/iso zoo — is
//! computed from the tensor, exactly.
//!
//! Composition follows the matrix-multiplication pattern generalized to
//! attribute products: the *join attributes* are the targets of `f` that are
//! also sources of `g`, matched **by name**; the composite sups the `⊗` of
//! both cells over all join-attribute values. Attribute names are the
//! identification mechanism, so reusing a name across two multi-morphisms is
//! a claim that they range over the same Ω-set, and chaining `f` with itself
//! is expressed by renaming one copy first (see [`MultiMorphism::renamed`]).
//! Two collision rules keep joins auditable:
//!
//! - a non-join name appearing on the *same* side of both operands (source
//!   of each, or target of each) is refused — the intent is ambiguous;
//! - a source-of-`f` name recurring as a target-of-`g` is legal (that is the
//!   shape of cyclic composites like `f ⊗ f°`), and the target occurrence is
//!   deterministically primed (`x` → `x'`) in the result.

use std::fmt;

use serde::Serialize;

use crate::algebra::{Connective, MLAlgebra, TruthValue};
use crate::omega::OmegaSet;
use crate::tensor::{checked_volume, for_each_index, step, Tensor};
use crate::{Error, Result};

/// Whether an attribute is a source or a target of its multi-morphism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Target,
}

impl Role {
    fn word(self) -> &'static str {
        match self {
            Role::Source => "source",
            Role::Target => "target",
        }
    }
}

/// One named, role-designated leg of a multi-morphism.
#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub set: OmegaSet,
    pub role: Role,
}

impl Attribute {
    pub fn source(name: impl Into<String>, set: OmegaSet) -> Attribute {
        Attribute {
            name: name.into(),
            set,
            role: Role::Source,
        }
    }

    pub fn target(name: impl Into<String>, set: OmegaSet) -> Attribute {
        Attribute {
            name: name.into(),
            set,
            role: Role::Target,
        }
    }
}

/// An Ω-valued relation between attribute products.
///
/// Zero-attribute (scalar) multi-morphisms are allowed — they arise when a
/// composition joins away every attribute — and hold exactly one value.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiMorphism {
    name: String,
    algebra: MLAlgebra,
    attributes: Vec<Attribute>,
    values: Tensor,
}

/// Outcome of [`MultiMorphism::classify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    /// `f° ⊗ α ⊗ f = β`.
    pub epi: bool,
    /// `α = f ⊗ β ⊗ f°`.
    pub mono: bool,
    /// Both of the above.
    pub iso: bool,
    /// `f ⊗ f° = 1` and `f° ⊗ f = 1` against the crisp similarities.
    pub orthogonal: bool,
}

fn distinct_names(attributes: &[Attribute], relation: &str) -> Result<()> {
    for (i, a) in attributes.iter().enumerate() {
        if attributes[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::InvalidRelation {
                relation: relation.to_string(),
                reason: format!("attribute name `{}` is used twice", a.name),
            });
        }
    }
    Ok(())
}

impl MultiMorphism {
    /// Build from an explicit tensor; shape must match the attribute supports
    /// in declared order, every value inside the carrier.
    pub fn new(
        name: impl Into<String>,
        attributes: Vec<Attribute>,
        values: Tensor,
    ) -> Result<MultiMorphism> {
        let name = name.into();
        if attributes.is_empty() {
            return Err(Error::InvalidRelation {
                relation: name,
                reason: "needs at least one attribute (use `scalar` for rank-0)".into(),
            });
        }
        distinct_names(&attributes, &name)?;
        let algebra = attributes[0].set.algebra().clone();
        for attr in &attributes {
            if attr.set.algebra() != &algebra {
                return Err(Error::AlgebraMismatch {
                    left: algebra.name(),
                    right: attr.set.algebra().name(),
                });
            }
        }
        let shape: Vec<usize> = attributes.iter().map(|a| a.set.len()).collect();
        if values.shape() != shape.as_slice() {
            return Err(Error::ShapeMismatch(format!(
                "`{name}` expects shape {shape:?}, got {:?}",
                values.shape()
            )));
        }
        for v in values.data() {
            if !algebra.contains(v) {
                return Err(Error::CarrierMismatch {
                    algebra: algebra.name(),
                    value: v.to_string(),
                });
            }
        }
        Ok(MultiMorphism {
            name,
            algebra,
            attributes,
            values,
        })
    }

    /// Rank-0 multi-morphism holding a single value.
    pub fn scalar(
        name: impl Into<String>,
        algebra: MLAlgebra,
        value: TruthValue,
    ) -> Result<MultiMorphism> {
        let name = name.into();
        if !algebra.contains(&value) {
            return Err(Error::CarrierMismatch {
                algebra: algebra.name(),
                value: value.to_string(),
            });
        }
        Ok(MultiMorphism {
            name,
            algebra,
            attributes: Vec::new(),
            values: Tensor::from_data(Vec::new(), vec![value])?,
        })
    }

    /// Build by evaluating `cell` at every index tuple (declared attribute
    /// order).
    pub fn from_fn(
        name: impl Into<String>,
        attributes: Vec<Attribute>,
        mut cell: impl FnMut(&[usize]) -> TruthValue,
    ) -> Result<MultiMorphism> {
        let shape: Vec<usize> = attributes.iter().map(|a| a.set.len()).collect();
        let mut data = Vec::with_capacity(checked_volume(&shape)?);
        for_each_index(&shape, |idx| data.push(cell(idx)));
        MultiMorphism::new(name, attributes, Tensor::from_data(shape, data)?)
    }

    /// Build from sparse `(labels, value)` rows; unspecified cells are `⊥`.
    pub fn from_rows(
        name: impl Into<String>,
        attributes: Vec<Attribute>,
        rows: &[(Vec<String>, TruthValue)],
    ) -> Result<MultiMorphism> {
        let name = name.into();
        let shape: Vec<usize> = attributes.iter().map(|a| a.set.len()).collect();
        let bot = if attributes.is_empty() {
            return Err(Error::InvalidRelation {
                relation: name,
                reason: "needs at least one attribute (use `scalar` for rank-0)".into(),
            });
        } else {
            attributes[0].set.algebra().bot()
        };
        let mut values = Tensor::filled(shape, bot)?;
        for (labels, value) in rows {
            if labels.len() != attributes.len() {
                return Err(Error::InvalidRelation {
                    relation: name,
                    reason: format!(
                        "row {labels:?} has {} coordinates, expected {}",
                        labels.len(),
                        attributes.len()
                    ),
                });
            }
            let idx: Vec<usize> = labels
                .iter()
                .zip(&attributes)
                .map(|(label, attr)| attr.set.index_of(label))
                .collect::<Result<_>>()?;
            values.set(&idx, value.clone());
        }
        MultiMorphism::new(name, attributes, values)
    }

    /// The identity on an Ω-set: the similarity itself, read as a
    /// multi-morphism from `source_attr` to `target_attr`.
    pub fn identity(
        name: impl Into<String>,
        set: &OmegaSet,
        source_attr: impl Into<String>,
        target_attr: impl Into<String>,
    ) -> Result<MultiMorphism> {
        MultiMorphism::new(
            name,
            vec![
                Attribute::source(source_attr, set.clone()),
                Attribute::target(target_attr, set.clone()),
            ],
            set.similarity_matrix().clone(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> MultiMorphism {
        self.name = name.into();
        self
    }

    pub fn algebra(&self) -> &MLAlgebra {
        &self.algebra
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn values(&self) -> &Tensor {
        &self.values
    }

    pub fn shape(&self) -> &[usize] {
        self.values.shape()
    }

    pub fn get(&self, index: &[usize]) -> &TruthValue {
        self.values.get(index)
    }

    fn positions(&self, role: Role) -> Vec<usize> {
        self.attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.role == role)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn source_attributes(&self) -> Vec<&Attribute> {
        self.attributes.iter().filter(|a| a.role == Role::Source).collect()
    }

    pub fn target_attributes(&self) -> Vec<&Attribute> {
        self.attributes.iter().filter(|a| a.role == Role::Target).collect()
    }

    pub fn source_names(&self) -> Vec<&str> {
        self.source_attributes().iter().map(|a| a.name.as_str()).collect()
    }

    pub fn target_names(&self) -> Vec<&str> {
        self.target_attributes().iter().map(|a| a.name.as_str()).collect()
    }

    /// Simultaneous attribute renaming; every `old` must exist and the
    /// result's names must stay distinct.
    pub fn renamed(&self, renames: &[(String, String)]) -> Result<MultiMorphism> {
        for (old, _) in renames {
            if self.attribute(old).is_none() {
                return Err(Error::UnknownAttribute(format!(
                    "`{old}` is not an attribute of {}",
                    self.name
                )));
            }
        }
        let mut out = self.clone();
        for attr in &mut out.attributes {
            if let Some((_, new)) = renames.iter().find(|(old, _)| *old == attr.name) {
                attr.name = new.clone();
            }
        }
        distinct_names(&out.attributes, &out.name)?;
        Ok(out)
    }

    /// Swap every attribute's designation; the tensor is untouched, so
    /// `f°(b,a) = f(a,b)` holds by construction and `(f°)° = f`.
    pub fn transpose(&self) -> MultiMorphism {
        let mut out = self.clone();
        out.name = format!("{}°", self.name);
        for attr in &mut out.attributes {
            attr.role = match attr.role {
                Role::Source => Role::Target,
                Role::Target => Role::Source,
            };
        }
        out
    }

    /// Offsets into the flat tensor contributed by each flat index over the
    /// attributes at `positions` (row-major in that order).
    fn flat_offsets(&self, positions: &[usize]) -> Vec<usize> {
        let full_shape = self.values.shape();
        let mut strides = vec![0usize; full_shape.len()];
        let mut acc = 1;
        for k in (0..full_shape.len()).rev() {
            strides[k] = acc;
            acc *= full_shape[k];
        }
        let shape: Vec<usize> = positions.iter().map(|&k| full_shape[k]).collect();
        let volume = shape.iter().product::<usize>().max(1);
        let mut offsets = Vec::with_capacity(volume);
        if positions.is_empty() {
            offsets.push(0);
            return offsets;
        }
        for_each_index(&shape, |idx| {
            offsets.push(
                idx.iter()
                    .zip(positions)
                    .map(|(&digit, &k)| digit * strides[k])
                    .sum(),
            );
        });
        offsets
    }

    /// Product Ω-set of the source attributes, in declared order.
    pub fn source_product(&self) -> Result<OmegaSet> {
        OmegaSet::product(
            format!("{}.sources", self.name),
            self.source_attributes()
                .into_iter()
                .map(|a| (a.name.clone(), a.set.clone()))
                .collect(),
        )
    }

    /// Product Ω-set of the target attributes, in declared order.
    pub fn target_product(&self) -> Result<OmegaSet> {
        OmegaSet::product(
            format!("{}.targets", self.name),
            self.target_attributes()
                .into_iter()
                .map(|a| (a.name.clone(), a.set.clone()))
                .collect(),
        )
    }

    fn check_side_similarity(&self, side: &OmegaSet, role: Role) -> Result<()> {
        if side.algebra() != &self.algebra {
            return Err(Error::AlgebraMismatch {
                left: self.algebra.name(),
                right: side.algebra().name(),
            });
        }
        let volume: usize = self
            .positions(role)
            .iter()
            .map(|&k| self.values.shape()[k])
            .product();
        if side.len() != volume {
            return Err(Error::ShapeMismatch(format!(
                "similarity `{}` has {} elements but the {} product of `{}` has {volume}",
                side.name(),
                side.len(),
                role.word(),
                self.name
            )));
        }
        Ok(())
    }

    /// Is `[ā]_α = ⋁_b f(ā, b)` at every source tuple? `alpha` must enumerate
    /// the source product row-major in declared attribute order.
    pub fn is_total(&self, alpha: &OmegaSet) -> Result<bool> {
        self.check_side_similarity(alpha, Role::Source)?;
        let sups = self.side_sups(Role::Source);
        Ok((0..sups.len()).all(|s| sups[s].approx_eq(alpha.extent_at(s))))
    }

    /// Is `[b]_β = ⋁_a f(a, b̄)` at every target tuple?
    pub fn is_faithful(&self, beta: &OmegaSet) -> Result<bool> {
        self.check_side_similarity(beta, Role::Target)?;
        let sups = self.side_sups(Role::Target);
        Ok((0..sups.len()).all(|t| sups[t].approx_eq(beta.extent_at(t))))
    }

    /// Supremum of the tensor over all completions of the other side, per
    /// flat index of `role`'s attribute product.
    fn side_sups(&self, role: Role) -> Vec<TruthValue> {
        let kept = self.positions(role);
        let kept_offsets = self.flat_offsets(&kept);
        let other: Vec<usize> = (0..self.attributes.len())
            .filter(|k| !kept.contains(k))
            .collect();
        let other_offsets = self.flat_offsets(&other);
        let bot = self.algebra.bot();
        let top = self.algebra.top();
        kept_offsets
            .iter()
            .map(|&base| {
                let mut acc = bot.clone();
                for &off in &other_offsets {
                    acc = self.algebra.eval_unchecked(
                        Connective::Join,
                        &acc,
                        self.values.get_flat(base + off),
                    );
                    if acc.approx_eq(&top) {
                        break;
                    }
                }
                acc
            })
            .collect()
    }

    /// Evaluate the defining equations of epi / mono / iso / orthogonal
    /// against similarities on the source and target products.
    pub fn classify(&self, alpha: &OmegaSet, beta: &OmegaSet) -> Result<Classification> {
        self.check_side_similarity(alpha, Role::Source)?;
        self.check_side_similarity(beta, Role::Target)?;
        let src_offsets = self.flat_offsets(&self.positions(Role::Source));
        let tgt_offsets = self.flat_offsets(&self.positions(Role::Target));
        let ns = src_offsets.len();
        let nt = tgt_offsets.len();
        let alg = &self.algebra;
        let bot = alg.bot();
        let top = alg.top();
        let cell = |s: usize, t: usize| self.values.get_flat(src_offsets[s] + tgt_offsets[t]);

        // epi: ⋁_{a,a'} f(a,b) ⊗ α(a,a') ⊗ f(a',b')  =  β(b,b')
        let mut epi = true;
        'epi: for t in 0..nt {
            for t2 in 0..nt {
                let mut acc = bot.clone();
                'sup: for s in 0..ns {
                    for s2 in 0..ns {
                        let v = alg.eval_unchecked(
                            Connective::Tensor,
                            &alg.eval_unchecked(Connective::Tensor, cell(s, t), alpha.similarity_at(s, s2)),
                            cell(s2, t2),
                        );
                        acc = alg.eval_unchecked(Connective::Join, &acc, &v);
                        if acc.approx_eq(&top) {
                            break 'sup;
                        }
                    }
                }
                if !acc.approx_eq(beta.similarity_at(t, t2)) {
                    epi = false;
                    break 'epi;
                }
            }
        }

        // mono: α(a,a')  =  ⋁_{b,b'} f(a,b) ⊗ β(b,b') ⊗ f(a',b')
        let mut mono = true;
        'mono: for s in 0..ns {
            for s2 in 0..ns {
                let mut acc = bot.clone();
                'sup2: for t in 0..nt {
                    for t2 in 0..nt {
                        let v = alg.eval_unchecked(
                            Connective::Tensor,
                            &alg.eval_unchecked(Connective::Tensor, cell(s, t), beta.similarity_at(t, t2)),
                            cell(s2, t2),
                        );
                        acc = alg.eval_unchecked(Connective::Join, &acc, &v);
                        if acc.approx_eq(&top) {
                            break 'sup2;
                        }
                    }
                }
                if !acc.approx_eq(alpha.similarity_at(s, s2)) {
                    mono = false;
                    break 'mono;
                }
            }
        }

        // orthogonal: f⊗f° and f°⊗f are the crisp identities.
        let mut orthogonal = true;
        'ortho_a: for s in 0..ns {
            for s2 in 0..ns {
                let mut acc = bot.clone();
                for t in 0..nt {
                    let v = alg.eval_unchecked(Connective::Tensor, cell(s, t), cell(s2, t));
                    acc = alg.eval_unchecked(Connective::Join, &acc, &v);
                    if acc.approx_eq(&top) {
                        break;
                    }
                }
                let expected = if s == s2 { &top } else { &bot };
                if !acc.approx_eq(expected) {
                    orthogonal = false;
                    break 'ortho_a;
                }
            }
        }
        if orthogonal {
            'ortho_b: for t in 0..nt {
                for t2 in 0..nt {
                    let mut acc = bot.clone();
                    for s in 0..ns {
                        let v = alg.eval_unchecked(Connective::Tensor, cell(s, t), cell(s, t2));
                        acc = alg.eval_unchecked(Connective::Join, &acc, &v);
                        if acc.approx_eq(&top) {
                            break;
                        }
                    }
                    let expected = if t == t2 { &top } else { &bot };
                    if !acc.approx_eq(expected) {
                        orthogonal = false;
                        break 'ortho_b;
                    }
                }
            }
        }

        Ok(Classification {
            epi,
            mono,
            iso: epi && mono,
            orthogonal,
        })
    }

    /// Same attributes (name, Ω-set, role) up to order, and tensors that
    /// agree after permuting the other's axes into this declared order.
    pub fn equivalent(&self, other: &MultiMorphism) -> bool {
        if self.attributes.len() != other.attributes.len() {
            return false;
        }
        let mut perm = Vec::with_capacity(self.attributes.len());
        for a in &self.attributes {
            match other
                .attributes
                .iter()
                .position(|b| b.name == a.name && b.role == a.role && b.set == a.set)
            {
                Some(k) => perm.push(k),
                None => return false,
            }
        }
        self.values.approx_eq(&other.values.permute(&perm))
    }

    /// `f ⊗ g = g ⊗ f`, comparing the two composites by attribute name when
    /// the names line up, positionally (source list against source list,
    /// target list against target list) when they do not.
    pub fn independent(&self, other: &MultiMorphism) -> Result<bool> {
        if self == other {
            return Ok(true);
        }
        let fg = compose(self, other)?;
        let gf = compose(other, self)?;
        if fg.equivalent(&gf) {
            return Ok(true);
        }
        let same_names = fg.attributes.len() == gf.attributes.len()
            && fg.attributes.iter().all(|a| {
                gf.attributes
                    .iter()
                    .any(|b| b.name == a.name && b.role == a.role && b.set == a.set)
            });
        if same_names {
            // Comparable by name, and `equivalent` already said no.
            return Ok(false);
        }
        // Positional comparison: the role-filtered set lists must agree.
        fn positional(x: &MultiMorphism, role: Role) -> Vec<&OmegaSet> {
            x.attributes
                .iter()
                .filter(|a| a.role == role)
                .map(|a| &a.set)
                .collect()
        }
        for role in [Role::Source, Role::Target] {
            if positional(&fg, role) != positional(&gf, role) {
                return Err(Error::ShapeMismatch(format!(
                    "`{}` and `{}` compose to incomparable shapes",
                    self.name, other.name
                )));
            }
        }
        Ok(fg.values.approx_eq(&gf.values))
    }
}

impl fmt::Display for MultiMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: [{}] ⇀ [{}]",
            self.name,
            self.source_names().join(","),
            self.target_names().join(",")
        )
    }
}

#[derive(Clone, Copy)]
enum Slot {
    /// Value comes from the result index at this position.
    Result(usize),
    /// Value comes from the join index at this position.
    Join(usize),
}

/// Relational composition over the name-matched join attributes
/// `T(f) ∩ S(g)`:
///
/// `(f ⊗ g)(x̄, ȳ) = ⋁_{z̄} f(…, z̄, …) ⊗ g(z̄, …)`
///
/// The result's sources are the sources of `f` then the non-join sources of
/// `g`; its targets are the non-join targets of `f` then the targets of `g`.
/// With no shared attributes the join space is a single empty tuple and the
/// composite is the pointwise tensor product.
pub fn compose(f: &MultiMorphism, g: &MultiMorphism) -> Result<MultiMorphism> {
    if f.algebra != g.algebra {
        return Err(Error::AlgebraMismatch {
            left: f.algebra.name(),
            right: g.algebra.name(),
        });
    }
    let join_names: Vec<String> = f
        .attributes
        .iter()
        .filter(|a| {
            a.role == Role::Target
                && g.attributes
                    .iter()
                    .any(|b| b.role == Role::Source && b.name == a.name)
        })
        .map(|a| a.name.clone())
        .collect();
    for name in &join_names {
        let fa = f.attribute(name).unwrap();
        let ga = g.attribute(name).unwrap();
        if fa.set != ga.set {
            return Err(Error::CompositionMismatch(format!(
                "join attribute `{name}` is bound to different Ω-sets (`{}` vs `{}`)",
                fa.set.name(),
                ga.set.name()
            )));
        }
    }
    for a in &f.attributes {
        if join_names.contains(&a.name) {
            continue;
        }
        if let Some(b) = g.attribute(&a.name) {
            if a.role == b.role {
                return Err(Error::CompositionMismatch(format!(
                    "attribute `{}` is a {} of both operands but not a join attribute",
                    a.name,
                    a.role.word()
                )));
            }
        }
    }

    let mut f_slots: Vec<Option<Slot>> = vec![None; f.attributes.len()];
    let mut g_slots: Vec<Option<Slot>> = vec![None; g.attributes.len()];
    let mut join_shape = Vec::with_capacity(join_names.len());
    for (j, name) in join_names.iter().enumerate() {
        let fk = f.attributes.iter().position(|a| &a.name == name).unwrap();
        let gk = g.attributes.iter().position(|a| &a.name == name).unwrap();
        f_slots[fk] = Some(Slot::Join(j));
        g_slots[gk] = Some(Slot::Join(j));
        join_shape.push(f.attributes[fk].set.len());
    }

    let mut result_attrs: Vec<Attribute> = Vec::new();
    let push_attr = |attrs: &mut Vec<Attribute>, attr: &Attribute, role: Role| -> usize {
        let mut name = attr.name.clone();
        while attrs.iter().any(|a| a.name == name) {
            name.push('\'');
        }
        attrs.push(Attribute {
            name,
            set: attr.set.clone(),
            role,
        });
        attrs.len() - 1
    };
    for (k, a) in f.attributes.iter().enumerate() {
        if a.role == Role::Source {
            let r = push_attr(&mut result_attrs, a, Role::Source);
            f_slots[k] = Some(Slot::Result(r));
        }
    }
    for (k, b) in g.attributes.iter().enumerate() {
        if b.role == Role::Source && !join_names.contains(&b.name) {
            let r = push_attr(&mut result_attrs, b, Role::Source);
            g_slots[k] = Some(Slot::Result(r));
        }
    }
    for (k, a) in f.attributes.iter().enumerate() {
        if a.role == Role::Target && !join_names.contains(&a.name) {
            let r = push_attr(&mut result_attrs, a, Role::Target);
            f_slots[k] = Some(Slot::Result(r));
        }
    }
    for (k, b) in g.attributes.iter().enumerate() {
        if b.role == Role::Target {
            let r = push_attr(&mut result_attrs, b, Role::Target);
            g_slots[k] = Some(Slot::Result(r));
        }
    }
    let f_slots: Vec<Slot> = f_slots.into_iter().map(Option::unwrap).collect();
    let g_slots: Vec<Slot> = g_slots.into_iter().map(Option::unwrap).collect();

    let result_shape: Vec<usize> = result_attrs.iter().map(|a| a.set.len()).collect();
    let volume = checked_volume(&result_shape)?;
    let algebra = f.algebra.clone();
    let bot = algebra.bot();
    let top = algebra.top();

    let mut data = Vec::with_capacity(volume);
    let mut f_idx = vec![0usize; f.attributes.len()];
    let mut g_idx = vec![0usize; g.attributes.len()];
    for_each_index(&result_shape, |ridx| {
        for (k, slot) in f_slots.iter().enumerate() {
            if let Slot::Result(r) = slot {
                f_idx[k] = ridx[*r];
            }
        }
        for (k, slot) in g_slots.iter().enumerate() {
            if let Slot::Result(r) = slot {
                g_idx[k] = ridx[*r];
            }
        }
        let mut acc = bot.clone();
        let mut jidx = vec![0usize; join_shape.len()];
        loop {
            for (k, slot) in f_slots.iter().enumerate() {
                if let Slot::Join(j) = slot {
                    f_idx[k] = jidx[*j];
                }
            }
            let f_val = f.values.get(&f_idx);
            if !f_val.approx_eq(&bot) {
                for (k, slot) in g_slots.iter().enumerate() {
                    if let Slot::Join(j) = slot {
                        g_idx[k] = jidx[*j];
                    }
                }
                let v = algebra.eval_unchecked(Connective::Tensor, f_val, g.values.get(&g_idx));
                acc = algebra.eval_unchecked(Connective::Join, &acc, &v);
                if acc.approx_eq(&top) {
                    break;
                }
            }
            if !step(&mut jidx, &join_shape) {
                break;
            }
        }
        data.push(acc);
    });

    let name = format!("{}⊗{}", f.name, g.name);
    if result_attrs.is_empty() {
        return MultiMorphism::scalar(name, algebra, data.pop().unwrap());
    }
    MultiMorphism::new(name, result_attrs, Tensor::from_data(result_shape, data)?)
}

/// Iterated composition over declared key attributes:
/// `D₀ ⊗_{K₁} D₁ ⊗_{K₂} …`, left-folded.
///
/// Every key must be a target of the accumulated left side and a source of
/// the next operand, and every name the composition *would* join on must be
/// declared — silent joins are refused. An empty key list therefore demands
/// attribute-disjoint operands and yields the independent product.
pub fn indexed_join(
    d0: &MultiMorphism,
    steps: &[(&MultiMorphism, Vec<String>)],
) -> Result<MultiMorphism> {
    let mut acc = d0.clone();
    for (d, keys) in steps {
        for key in keys {
            let in_left = acc
                .attributes
                .iter()
                .any(|a| a.role == Role::Target && &a.name == key);
            let in_right = d
                .attributes
                .iter()
                .any(|b| b.role == Role::Source && &b.name == key);
            if !in_left || !in_right {
                return Err(Error::UnknownAttribute(format!(
                    "key `{key}` must be a target of `{}` and a source of `{}`",
                    acc.name(),
                    d.name()
                )));
            }
        }
        for a in &acc.attributes {
            if a.role != Role::Target || keys.contains(&a.name) {
                continue;
            }
            if d
                .attributes
                .iter()
                .any(|b| b.role == Role::Source && b.name == a.name)
            {
                return Err(Error::CompositionMismatch(format!(
                    "attribute `{}` would join but is not a declared key",
                    a.name
                )));
            }
        }
        acc = compose(&acc, d)?;
    }
    Ok(acc)
}

/// A total single-valued map between supports, used to lift classical
/// functions into multi-morphisms via their characteristic relation.
#[derive(Debug, Clone)]
pub struct SetMap {
    source: OmegaSet,
    target: OmegaSet,
    graph: Vec<usize>,
}

impl SetMap {
    pub fn new(source: OmegaSet, target: OmegaSet, pairs: &[(String, String)]) -> Result<SetMap> {
        if source.algebra() != target.algebra() {
            return Err(Error::AlgebraMismatch {
                left: source.algebra().name(),
                right: target.algebra().name(),
            });
        }
        let mut graph = vec![usize::MAX; source.len()];
        for (a, b) in pairs {
            let i = source.index_of(a)?;
            let j = target.index_of(b)?;
            if graph[i] != usize::MAX {
                return Err(Error::InvalidRelation {
                    relation: format!("{}→{}", source.name(), target.name()),
                    reason: format!("`{a}` is mapped twice"),
                });
            }
            graph[i] = j;
        }
        if let Some(i) = graph.iter().position(|&j| j == usize::MAX) {
            return Err(Error::InvalidRelation {
                relation: format!("{}→{}", source.name(), target.name()),
                reason: format!("`{}` has no image", source.label(i)),
            });
        }
        Ok(SetMap {
            source,
            target,
            graph,
        })
    }

    pub fn apply(&self, a: &str) -> Result<&str> {
        Ok(self.target.label(self.graph[self.source.index_of(a)?]))
    }

    /// The characteristic multi-morphism: `⊤` exactly on the graph.
    pub fn chi(
        &self,
        name: impl Into<String>,
        source_attr: impl Into<String>,
        target_attr: impl Into<String>,
    ) -> Result<MultiMorphism> {
        let algebra = self.source.algebra().clone();
        let top = algebra.top();
        let bot = algebra.bot();
        MultiMorphism::from_fn(
            name,
            vec![
                Attribute::source(source_attr, self.source.clone()),
                Attribute::target(target_attr, self.target.clone()),
            ],
            |idx| {
                if self.graph[idx[0]] == idx[1] {
                    top.clone()
                } else {
                    bot.clone()
                }
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(v: f64) -> TruthValue {
        TruthValue::Real(v)
    }

    fn two(name: &str, algebra: MLAlgebra) -> OmegaSet {
        OmegaSet::crisp(name, algebra, vec!["0".into(), "1".into()]).unwrap()
    }

    fn table2(
        name: &str,
        algebra: MLAlgebra,
        src: (&str, &OmegaSet),
        tgt: (&str, &OmegaSet),
        rows: [[f64; 2]; 2],
    ) -> MultiMorphism {
        let _ = algebra;
        MultiMorphism::from_fn(
            name,
            vec![
                Attribute::source(src.0, src.1.clone()),
                Attribute::target(tgt.0, tgt.1.clone()),
            ],
            |idx| real(rows[idx[0]][idx[1]]),
        )
        .unwrap()
    }

    #[test]
    fn boolean_composition_is_relational_product() {
        let a = two("A", MLAlgebra::Boolean);
        let b = two("B", MLAlgebra::Boolean);
        let c = two("C", MLAlgebra::Boolean);
        let f = table2("f", MLAlgebra::Boolean, ("x", &a), ("y", &b), [[1.0, 0.0], [1.0, 1.0]]);
        let g = table2("g", MLAlgebra::Boolean, ("y", &b), ("z", &c), [[0.0, 1.0], [1.0, 0.0]]);
        let fg = compose(&f, &g).unwrap();
        assert_eq!(fg.source_names(), vec!["x"]);
        assert_eq!(fg.target_names(), vec!["z"]);
        let expected = [[0.0, 1.0], [1.0, 1.0]];
        for x in 0..2 {
            for z in 0..2 {
                assert!(fg.get(&[x, z]).approx_eq(&real(expected[x][z])));
            }
        }
    }

    #[test]
    fn lukasiewicz_composition_matches_hand_computation() {
        let a = two("A", MLAlgebra::Lukasiewicz);
        let b = two("B", MLAlgebra::Lukasiewicz);
        let c = two("C", MLAlgebra::Lukasiewicz);
        let f = table2("f", MLAlgebra::Lukasiewicz, ("x", &a), ("y", &b), [[0.9, 0.3], [0.4, 0.8]]);
        let g = table2("g", MLAlgebra::Lukasiewicz, ("y", &b), ("z", &c), [[0.7, 0.2], [0.5, 1.0]]);
        let fg = compose(&f, &g).unwrap();
        let expected = [[0.6, 0.3], [0.3, 0.8]];
        for x in 0..2 {
            for z in 0..2 {
                assert!(
                    fg.get(&[x, z]).approx_eq(&real(expected[x][z])),
                    "cell ({x},{z}) = {}",
                    fg.get(&[x, z])
                );
            }
        }
    }

    #[test]
    fn disjoint_composition_is_pointwise_tensor() {
        let a = two("A", MLAlgebra::Lukasiewicz);
        let f = table2("f", MLAlgebra::Lukasiewicz, ("x", &a), ("y", &a), [[0.9, 0.3], [0.4, 0.8]]);
        let g = table2("g", MLAlgebra::Lukasiewicz, ("u", &a), ("v", &a), [[0.7, 0.2], [0.5, 1.0]]);
        let fg = compose(&f, &g).unwrap();
        // Declared order: sources [x, u], targets [y, v].
        assert_eq!(fg.source_names(), vec!["x", "u"]);
        assert_eq!(fg.target_names(), vec!["y", "v"]);
        // f(1,0) ⊗ g(0,1) = max(0, 0.4+0.2−1) = 0.
        assert!(fg.get(&[1, 0, 0, 1]).approx_eq(&real(0.0)));
        // f(0,0) ⊗ g(1,1) = max(0, 0.9+1.0−1) = 0.9.
        assert!(fg.get(&[0, 1, 0, 1]).approx_eq(&real(0.9)));
    }

    #[test]
    fn identity_on_a_crisp_set_is_neutral() {
        let a = two("A", MLAlgebra::Goedel);
        let b = two("B", MLAlgebra::Goedel);
        let f = table2("f", MLAlgebra::Goedel, ("x", &a), ("y", &b), [[0.9, 0.3], [0.4, 0.8]]);
        let one = MultiMorphism::identity("1A", &a, "x0", "x").unwrap();
        let lhs = compose(&one, &f).unwrap();
        assert_eq!(lhs.shape(), f.shape());
        assert!(lhs.values().approx_eq(f.values()));

        let one_b = MultiMorphism::identity("1B", &b, "y", "y1").unwrap();
        let rhs = compose(&f, &one_b).unwrap();
        assert!(rhs.values().approx_eq(f.values()));
    }

    #[test]
    fn set_map_composition_relocates_rows() {
        // (χ_f ⊗ s)(a, c) = s(f(a), c) for the swap map f.
        let a = two("A", MLAlgebra::Product);
        let b = two("B", MLAlgebra::Product);
        let c = two("C", MLAlgebra::Product);
        let f = SetMap::new(
            a.clone(),
            b.clone(),
            &[("0".into(), "1".into()), ("1".into(), "0".into())],
        )
        .unwrap();
        let chi = f.chi("f", "x", "y").unwrap();
        let s = table2("s", MLAlgebra::Product, ("y", &b), ("z", &c), [[0.9, 0.3], [0.4, 0.8]]);
        let fs = compose(&chi, &s).unwrap();
        for x in 0..2 {
            let fx = 1 - x;
            for z in 0..2 {
                assert!(fs.get(&[x, z]).approx_eq(s.get(&[fx, z])));
            }
        }
    }

    #[test]
    fn transpose_flips_designations_only() {
        let a = two("A", MLAlgebra::Goedel);
        let b = two("B", MLAlgebra::Goedel);
        let f = table2("f", MLAlgebra::Goedel, ("x", &a), ("y", &b), [[0.9, 0.3], [0.4, 0.8]]);
        let t = f.transpose();
        assert_eq!(t.source_names(), vec!["y"]);
        assert_eq!(t.target_names(), vec!["x"]);
        assert!(t.values().approx_eq(f.values()));
        assert!(t.transpose().equivalent(&f));
    }

    #[test]
    fn transpose_antidistributes_over_composition() {
        let a = two("A", MLAlgebra::Lukasiewicz);
        let b = two("B", MLAlgebra::Lukasiewicz);
        let c = two("C", MLAlgebra::Lukasiewicz);
        let f = table2("f", MLAlgebra::Lukasiewicz, ("x", &a), ("y", &b), [[0.9, 0.3], [0.4, 0.8]]);
        let g = table2("g", MLAlgebra::Lukasiewicz, ("y", &b), ("z", &c), [[0.7, 0.2], [0.5, 1.0]]);
        let lhs = compose(&f, &g).unwrap().transpose();
        let rhs = compose(&g.transpose(), &f.transpose()).unwrap();
        assert!(lhs.equivalent(&rhs));
    }

    #[test]
    fn cyclic_composite_primes_the_repeated_name() {
        let a = two("A", MLAlgebra::Goedel);
        let f = table2("f", MLAlgebra::Goedel, ("x", &a), ("y", &a), [[1.0, 0.5], [0.0, 1.0]]);
        let ff = compose(&f, &f.transpose()).unwrap();
        assert_eq!(ff.source_names(), vec!["x"]);
        assert_eq!(ff.target_names(), vec!["x'"]);
        // (f⊗f°)(a,a') = ⋁_b min(f(a,b), f(a',b)).
        assert!(ff.get(&[0, 0]).approx_eq(&real(1.0)));
        assert!(ff.get(&[0, 1]).approx_eq(&real(0.5)));
        assert!(ff.get(&[1, 0]).approx_eq(&real(0.5)));
    }

    #[test]
    fn same_side_name_reuse_is_refused() {
        let a = two("A", MLAlgebra::Goedel);
        let f = table2("f", MLAlgebra::Goedel, ("x", &a), ("y", &a), [[1.0, 0.0], [0.0, 1.0]]);
        let g = table2("g", MLAlgebra::Goedel, ("x", &a), ("z", &a), [[1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(
            compose(&f, &g),
            Err(Error::CompositionMismatch(_))
        ));
    }

    #[test]
    fn join_attribute_must_bind_one_set() {
        let a = two("A", MLAlgebra::Goedel);
        let b3 = OmegaSet::crisp(
            "B",
            MLAlgebra::Goedel,
            vec!["0".into(), "1".into(), "2".into()],
        )
        .unwrap();
        let f = table2("f", MLAlgebra::Goedel, ("x", &a), ("y", &a), [[1.0, 0.0], [0.0, 1.0]]);
        let g = MultiMorphism::from_fn(
            "g",
            vec![
                Attribute::source("y", b3.clone()),
                Attribute::target("z", b3),
            ],
            |_| real(1.0),
        )
        .unwrap();
        assert!(matches!(
            compose(&f, &g),
            Err(Error::CompositionMismatch(_))
        ));
    }

    #[test]
    fn totality_and_faithfulness_against_crisp_sides() {
        let a = two("A", MLAlgebra::Goedel);
        let b = two("B", MLAlgebra::Goedel);
        let swap = SetMap::new(
            a.clone(),
            b.clone(),
            &[("0".into(), "1".into()), ("1".into(), "0".into())],
        )
        .unwrap();
        let chi = swap.chi("f", "x", "y").unwrap();
        assert!(chi.is_total(&chi.source_product().unwrap()).unwrap());
        assert!(chi.is_faithful(&chi.target_product().unwrap()).unwrap());

        let dark = MultiMorphism::from_fn(
            "dark",
            vec![Attribute::source("x", a.clone()), Attribute::target("y", b)],
            |_| real(0.0),
        )
        .unwrap();
        assert!(!dark.is_total(&dark.source_product().unwrap()).unwrap());
    }

    #[test]
    fn permutation_maps_are_orthogonal_isos() {
        let a = two("A", MLAlgebra::Product);
        let b = two("B", MLAlgebra::Product);
        let swap = SetMap::new(
            a.clone(),
            b.clone(),
            &[("0".into(), "1".into()), ("1".into(), "0".into())],
        )
        .unwrap();
        let chi = swap.chi("f", "x", "y").unwrap();
        let alpha = chi.source_product().unwrap();
        let beta = chi.target_product().unwrap();
        let class = chi.classify(&alpha, &beta).unwrap();
        assert!(class.epi && class.mono && class.iso && class.orthogonal);
    }

    #[test]
    fn blurred_identity_is_epi_but_not_orthogonal() {
        // The similarity [[⊤, λ], [λ, ⊤]] read as an endo-morphism of its own
        // Ω-set: an epimorphism, but f⊗f° never returns to the crisp identity.
        let algebra = MLAlgebra::Goedel;
        let sigma = OmegaSet::new(
            "S",
            algebra,
            vec!["0".into(), "1".into()],
            vec![
                vec![real(1.0), real(0.5)],
                vec![real(0.5), real(1.0)],
            ],
        )
        .unwrap();
        let f = MultiMorphism::identity("σ", &sigma, "x", "y").unwrap();
        let class = f.classify(&sigma, &sigma).unwrap();
        assert!(class.epi);
        assert!(class.mono);
        assert!(class.iso);
        assert!(!class.orthogonal);
    }

    #[test]
    fn indexed_join_with_no_keys_is_independent_product() {
        let a = two("A", MLAlgebra::Product);
        let f = table2("f", MLAlgebra::Product, ("x", &a), ("y", &a), [[0.9, 0.3], [0.4, 0.8]]);
        let g = table2("g", MLAlgebra::Product, ("u", &a), ("v", &a), [[0.7, 0.2], [0.5, 1.0]]);
        let joined = indexed_join(&f, &[(&g, vec![])]).unwrap();
        let product = compose(&f, &g).unwrap();
        assert!(joined.equivalent(&product));
    }

    #[test]
    fn indexed_join_requires_declared_keys() {
        let a = two("A", MLAlgebra::Product);
        let f = table2("f", MLAlgebra::Product, ("x", &a), ("k", &a), [[0.9, 0.3], [0.4, 0.8]]);
        let g = table2("g", MLAlgebra::Product, ("k", &a), ("v", &a), [[0.7, 0.2], [0.5, 1.0]]);
        assert!(matches!(
            indexed_join(&f, &[(&g, vec![])]),
            Err(Error::CompositionMismatch(_))
        ));
        assert!(matches!(
            indexed_join(&f, &[(&g, vec!["z".into()])]),
            Err(Error::UnknownAttribute(_))
        ));
        let joined = indexed_join(&f, &[(&g, vec!["k".into()])]).unwrap();
        assert!(joined.equivalent(&compose(&f, &g).unwrap()));
    }

    #[test]
    fn independence_of_disjoint_operands() {
        let a = two("A", MLAlgebra::Lukasiewicz);
        let f = table2("f", MLAlgebra::Lukasiewicz, ("x", &a), ("y", &a), [[0.9, 0.3], [0.4, 0.8]]);
        let g = table2("g", MLAlgebra::Lukasiewicz, ("u", &a), ("v", &a), [[0.7, 0.2], [0.5, 1.0]]);
        assert!(f.independent(&g).unwrap());
        assert!(f.independent(&f).unwrap());
    }

    #[test]
    fn asymmetric_endomorphism_is_not_independent_of_its_transpose() {
        // g⊗g° compares rows of g, g°⊗g compares columns; attribute names
        // differ, so the comparison falls back to the positional rule.
        let a = two("A", MLAlgebra::Goedel);
        let g = table2("g", MLAlgebra::Goedel, ("x", &a), ("y", &a), [[0.2, 0.9], [0.1, 0.3]]);
        let gg = compose(&g, &g.transpose()).unwrap();
        let gg2 = compose(&g.transpose(), &g).unwrap();
        // (g⊗g°)(0,0) = ⋁_b g(0,b)∧g(0,b) = 0.9; (g°⊗g)(0,0) = ⋁_a g(a,0) = 0.2.
        assert!(gg.get(&[0, 0]).approx_eq(&real(0.9)));
        assert!(gg2.get(&[0, 0]).approx_eq(&real(0.2)));
        assert!(!g.independent(&g.transpose()).unwrap());
    }

    #[test]
    fn scalar_composites_are_allowed() {
        let a = two("A", MLAlgebra::Product);
        let point = MultiMorphism::from_fn(
            "p",
            vec![Attribute::target("x", a.clone())],
            |idx| real(if idx[0] == 0 { 1.0 } else { 0.5 }),
        )
        .unwrap();
        let copoint = MultiMorphism::from_fn(
            "q",
            vec![Attribute::source("x", a)],
            |idx| real(if idx[0] == 0 { 0.25 } else { 1.0 }),
        )
        .unwrap();
        let s = compose(&point, &copoint).unwrap();
        assert!(s.attributes().is_empty());
        // ⋁(1.0·0.25, 0.5·1.0) = 0.5.
        assert!(s.get(&[]).approx_eq(&real(0.5)));
    }

    #[test]
    fn renaming_is_simultaneous_and_validated() {
        let a = two("A", MLAlgebra::Goedel);
        let f = table2("f", MLAlgebra::Goedel, ("x", &a), ("y", &a), [[1.0, 0.5], [0.0, 1.0]]);
        let swapped = f
            .renamed(&[("x".into(), "y".into()), ("y".into(), "x".into())])
            .unwrap();
        assert_eq!(swapped.source_names(), vec!["y"]);
        assert_eq!(swapped.target_names(), vec!["x"]);
        assert!(matches!(
            f.renamed(&[("x".into(), "y".into())]),
            Err(Error::InvalidRelation { .. })
        ));
        assert!(matches!(
            f.renamed(&[("zz".into(), "w".into())]),
            Err(Error::UnknownAttribute(_))
        ));
    }

    #[test]
    fn chained_self_composition_via_renaming() {
        let a = two("A", MLAlgebra::Goedel);
        let f = table2("f", MLAlgebra::Goedel, ("x", &a), ("y", &a), [[1.0, 0.5], [0.2, 1.0]]);
        let shifted = f
            .renamed(&[("x".into(), "y".into()), ("y".into(), "z".into())])
            .unwrap();
        let ff = compose(&f, &shifted).unwrap();
        assert_eq!(ff.source_names(), vec!["x"]);
        assert_eq!(ff.target_names(), vec!["z"]);
        // (f⊗f)(0,1) = ⋁_b min(f(0,b), f(b,1)) = ⋁(min(1,.5), min(.5,1)) = 0.5.
        assert!(ff.get(&[0, 1]).approx_eq(&real(0.5)));
    }

    #[test]
    fn set_maps_must_be_total_and_single_valued() {
        let a = two("A", MLAlgebra::Goedel);
        let b = two("B", MLAlgebra::Goedel);
        assert!(matches!(
            SetMap::new(a.clone(), b.clone(), &[("0".into(), "0".into())]),
            Err(Error::InvalidRelation { .. })
        ));
        assert!(matches!(
            SetMap::new(
                a.clone(),
                b.clone(),
                &[
                    ("0".into(), "0".into()),
                    ("0".into(), "1".into()),
                    ("1".into(), "0".into())
                ]
            ),
            Err(Error::InvalidRelation { .. })
        ));
        let ok = SetMap::new(
            a,
            b,
            &[("0".into(), "0".into()), ("1".into(), "0".into())],
        )
        .unwrap();
        assert_eq!(ok.apply("1").unwrap(), "0");
    }
}
