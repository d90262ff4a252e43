//! Conditioning in divisible algebras.
//!
//! For a multi-morphism `f : A ⇀ B` and a description `a` of its source, the
//! conditional classifier is the residuum row
//!
//! `f(β|a)(b) = [a] ⇒ f(a, b)`
//!
//! which, by divisibility, is the largest solution of the defining equation
//! `[a] ⊗ f(β|a)(b) = f(a, b)`. Without divisibility the residuum still
//! exists but no longer solves the equation, so construction is refused
//! outright for non-divisible algebras.
//!
//! Descriptions may be partial: unfixed source attributes are marginalized by
//! the lattice join, both in the conditioning weight `[a]` and in the row
//! `f(a, ·)`. Totality and faithfulness are advisory — their absence weakens
//! the interpretation, not the arithmetic — so violations are reported as
//! warnings rather than errors.

use std::fmt;

use crate::algebra::{Connective, MLAlgebra, TruthValue};
use crate::relation::{compose, Attribute, MultiMorphism, Role};
use crate::report::Report;
use crate::tensor::{for_each_index, Tensor};
use crate::{Error, Result};

/// A conditional Ω-map over a morphism's targets, together with the
/// description that produced it.
#[derive(Debug, Clone)]
pub struct Classifier {
    /// The conditioned morphism, kept for independence checks downstream.
    /// `None` when the classifier arose from an operation whose composite
    /// could not be named (positional chaining with unaligned names).
    origin: Option<MultiMorphism>,
    given: Vec<(String, String)>,
    weight: TruthValue,
    values: MultiMorphism,
    report: Report,
}

impl Classifier {
    /// The conditioning weight `[a]` — the extent of the description in the
    /// source product, partial attributes marginalized by join.
    pub fn weight(&self) -> &TruthValue {
        &self.weight
    }

    /// The conditional values as a target-only multi-morphism.
    pub fn values(&self) -> &MultiMorphism {
        &self.values
    }

    pub fn given(&self) -> &[(String, String)] {
        &self.given
    }

    pub fn report(&self) -> &Report {
        &self.report
    }

    pub fn origin(&self) -> Option<&MultiMorphism> {
        self.origin.as_ref()
    }

    pub fn algebra(&self) -> &MLAlgebra {
        self.values.algebra()
    }

    pub fn get(&self, index: &[usize]) -> &TruthValue {
        self.values.get(index)
    }
}

impl fmt::Display for Classifier {
    /// One `label → value` line per target tuple.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let attrs = self.values.attributes();
        let shape: Vec<usize> = attrs.iter().map(|a| a.set.len()).collect();
        let mut flat = 0usize;
        let mut out = Ok(());
        for_each_index(&shape, |idx| {
            if out.is_err() {
                return;
            }
            let labels: Vec<&str> = idx
                .iter()
                .zip(attrs)
                .map(|(&i, a)| a.set.label(i))
                .collect();
            out = writeln!(
                f,
                "{} -> {}",
                labels.join(","),
                self.values.values().get_flat(flat)
            );
            flat += 1;
        });
        out
    }
}

/// Join of extents over a whole Ω-set — the weight contribution of an
/// unspecified attribute.
fn extent_sup(algebra: &MLAlgebra, set: &crate::omega::OmegaSet) -> TruthValue {
    let mut sup = algebra.bot();
    for i in 0..set.len() {
        sup = algebra.eval_unchecked(Connective::Join, &sup, set.extent_at(i));
        if sup.approx_eq(&algebra.top()) {
            break;
        }
    }
    sup
}

/// Condition `f` on a (possibly partial) source description, producing the
/// classifier `b ↦ [a] ⇒ f(a, b)`.
pub fn condition(f: &MultiMorphism, given: &[(String, String)]) -> Result<Classifier> {
    let algebra = f.algebra().clone();
    if !algebra.divisible() {
        return Err(Error::NotDivisible {
            algebra: algebra.name(),
        });
    }
    let sources = f.source_attributes();
    let targets = f.target_attributes();
    if sources.is_empty() || targets.is_empty() {
        return Err(Error::InvalidRelation {
            relation: f.name().to_string(),
            reason: "conditioning needs both source and target attributes".into(),
        });
    }

    let mut fixed: Vec<Option<usize>> = vec![None; sources.len()];
    for (name, label) in given {
        let Some(k) = sources.iter().position(|a| &a.name == name) else {
            return Err(Error::UnknownAttribute(name.clone()));
        };
        if fixed[k].is_some() {
            return Err(Error::InvalidRelation {
                relation: f.name().to_string(),
                reason: format!("attribute `{name}` conditioned twice"),
            });
        }
        fixed[k] = Some(sources[k].set.index_of(label)?);
    }

    let mut weight = algebra.top();
    for (attr, slot) in sources.iter().zip(&fixed) {
        let contribution = match slot {
            Some(i) => attr.set.extent_at(*i).clone(),
            None => extent_sup(&algebra, &attr.set),
        };
        weight = algebra.eval_unchecked(Connective::Tensor, &weight, &contribution);
    }

    // Row extraction: one pass over f's cells, joining into the target slot
    // whenever the fixed source coordinates match.
    let mut role_of = Vec::new(); // attribute position → source slot, if a source
    {
        let mut s = 0usize;
        for attr in f.attributes() {
            match attr.role {
                Role::Source => {
                    role_of.push(Some(s));
                    s += 1;
                }
                Role::Target => role_of.push(None),
            }
        }
    }
    let target_positions: Vec<usize> = f
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.role == Role::Target)
        .map(|(k, _)| k)
        .collect();
    let target_shape: Vec<usize> = target_positions
        .iter()
        .map(|&k| f.shape()[k])
        .collect();
    let mut row = Tensor::filled(target_shape.clone(), algebra.bot())?;
    let mut flat = 0usize;
    for_each_index(f.shape(), |idx| {
        let cell = f.values().get_flat(flat);
        flat += 1;
        let matches = idx.iter().zip(&role_of).all(|(&i, role)| match role {
            Some(s) => fixed[*s].map_or(true, |want| want == i),
            None => true,
        });
        if !matches {
            return;
        }
        let mut t = 0usize;
        for &k in &target_positions {
            t = t * f.shape()[k] + idx[k];
        }
        let joined = algebra.eval_unchecked(Connective::Join, row.get_flat(t), cell);
        row.set_flat(t, joined);
    });

    let mut report = Report::new(format!("{}|given", f.name()));
    if !f.is_total(&f.source_product()?)? {
        report.warn(format!("`{}` is not total; conditioning is advisory", f.name()));
    }
    if !f.is_faithful(&f.target_product()?)? {
        report.warn(format!(
            "`{}` is not faithful; conditioning is advisory",
            f.name()
        ));
    }
    if row.data().iter().all(|v| v.approx_eq(&algebra.bot())) {
        report.warn("conditioning row is empty (all ⊥); the description is incompatible with the relation".to_string());
    }

    let given_desc: Vec<String> = given.iter().map(|(n, l)| format!("{n}={l}")).collect();
    let values = MultiMorphism::from_fn(
        format!("{}({})", f.name(), given_desc.join(",")),
        targets.into_iter().cloned().collect::<Vec<Attribute>>(),
        |idx| {
            let mut t = 0usize;
            for (d, &i) in idx.iter().enumerate() {
                t = t * target_shape[d] + i;
            }
            algebra.eval_unchecked(Connective::Implies, &weight, row.get_flat(t))
        },
    )?;

    Ok(Classifier {
        origin: Some(f.clone()),
        given: given.to_vec(),
        weight,
        values,
        report,
    })
}

/// Chain a classifier through a further relation: the conditional over `g`'s
/// targets, `c'(c̄) = ⋁_b̄ c(b̄) ⊗ g(b̄, c̄)`. Alignment is positional: `c`'s
/// target attributes must carry the same Ω-sets as `g`'s source attributes.
pub fn chain(c: &Classifier, g: &MultiMorphism) -> Result<Classifier> {
    let algebra = c.algebra().clone();
    if g.algebra() != &algebra {
        return Err(Error::AlgebraMismatch {
            left: algebra.name(),
            right: g.algebra().name(),
        });
    }
    if !algebra.divisible() {
        return Err(Error::NotDivisible {
            algebra: algebra.name(),
        });
    }
    let mid = c.values.attributes();
    let g_src = g.source_attributes();
    let aligned = mid.len() == g_src.len()
        && mid.iter().zip(&g_src).all(|(a, b)| a.set == b.set);
    if !aligned {
        return Err(Error::ShapeMismatch(format!(
            "classifier targets do not align with the sources of `{}`",
            g.name()
        )));
    }
    let g_tgt: Vec<Attribute> = g.target_attributes().into_iter().cloned().collect();
    if g_tgt.is_empty() {
        return Err(Error::InvalidRelation {
            relation: g.name().to_string(),
            reason: "chaining needs target attributes".into(),
        });
    }

    let mid_shape: Vec<usize> = mid.iter().map(|a| a.set.len()).collect();
    let g_src_positions: Vec<usize> = g
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.role == Role::Source)
        .map(|(k, _)| k)
        .collect();
    let g_tgt_positions: Vec<usize> = g
        .attributes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.role == Role::Target)
        .map(|(k, _)| k)
        .collect();

    let mut g_idx = vec![0usize; g.attributes().len()];
    let values = MultiMorphism::from_fn(
        format!("{}⊗{}", c.values.name(), g.name()),
        g_tgt,
        |tgt_idx| {
            for (&k, &i) in g_tgt_positions.iter().zip(tgt_idx) {
                g_idx[k] = i;
            }
            let mut sup = algebra.bot();
            let mut mid_flat = 0usize;
            for_each_index(&mid_shape, |mid_idx| {
                let cv = c.values.values().get_flat(mid_flat);
                mid_flat += 1;
                if cv.approx_eq(&algebra.bot()) {
                    return;
                }
                for (&k, &i) in g_src_positions.iter().zip(mid_idx) {
                    g_idx[k] = i;
                }
                let term = algebra.eval_unchecked(Connective::Tensor, cv, g.get(&g_idx));
                sup = algebra.eval_unchecked(Connective::Join, &sup, &term);
            });
            sup
        },
    )?;

    // The chained origin is the name-based composite when the attribute names
    // happen to align; otherwise independence downstream is unverifiable.
    let origin = c.origin.as_ref().and_then(|f| compose(f, g).ok());
    let mut report = Report::new(values.name().to_string());
    if origin.is_none() {
        report.warn("chained composite could not be formed by name; independence checks unavailable".to_string());
    }
    Ok(Classifier {
        origin,
        given: c.given.clone(),
        weight: c.weight.clone(),
        values,
        report,
    })
}

/// Tensor two classifiers together. Distinct target blocks produce the joint
/// `(c̄, d̄) ↦ c1(c̄) ⊗ c2(d̄)`; identical blocks (same Ω-sets positionally)
/// restrict to the diagonal `d̄ ↦ c1(d̄) ⊗ c2(d̄)`. Independence of the
/// underlying relations is advisory: violations warn, never refuse.
pub fn combine_independent(c1: &Classifier, c2: &Classifier) -> Result<Classifier> {
    let algebra = c1.algebra().clone();
    if c2.algebra() != &algebra {
        return Err(Error::AlgebraMismatch {
            left: algebra.name(),
            right: c2.algebra().name(),
        });
    }
    let mut report = Report::new(format!(
        "{}⊗{}",
        c1.values.name(),
        c2.values.name()
    ));
    match (&c1.origin, &c2.origin) {
        (Some(f), Some(g)) => {
            if !f.independent(g).unwrap_or(false) {
                report.warn(format!(
                    "`{}` and `{}` are not independent; the combination misstates their joint",
                    f.name(),
                    g.name()
                ));
            }
        }
        _ => report.warn("independence of the underlying relations could not be checked".to_string()),
    }

    let a1 = c1.values.attributes();
    let a2 = c2.values.attributes();
    let weight = algebra.eval_unchecked(Connective::Tensor, &c1.weight, &c2.weight);
    let mut given = c1.given.clone();
    given.extend(c2.given.iter().cloned());

    // "The same targets" means the same named Ω-sets, not merely isomorphic
    // tables — two distinct crisp two-point sets must not collapse.
    let coincide = a1.len() == a2.len()
        && a1
            .iter()
            .zip(a2)
            .all(|(a, b)| a.set == b.set && a.set.name() == b.set.name());
    let values = if coincide {
        MultiMorphism::from_fn(
            format!("{}∧{}", c1.values.name(), c2.values.name()),
            a1.to_vec(),
            |idx| {
                algebra.eval_unchecked(Connective::Tensor, c1.values.get(idx), c2.values.get(idx))
            },
        )?
    } else {
        let mut attrs: Vec<Attribute> = Vec::with_capacity(a1.len() + a2.len());
        for a in a1.iter().chain(a2) {
            let mut name = a.name.clone();
            while attrs.iter().any(|b| b.name == name) {
                name.push('\'');
            }
            attrs.push(Attribute {
                name,
                set: a.set.clone(),
                role: a.role,
            });
        }
        let split = a1.len();
        MultiMorphism::from_fn(
            format!("{}⊗{}", c1.values.name(), c2.values.name()),
            attrs,
            |idx| {
                algebra.eval_unchecked(
                    Connective::Tensor,
                    c1.values.get(&idx[..split]),
                    c2.values.get(&idx[split..]),
                )
            },
        )?
    };

    Ok(Classifier {
        origin: None,
        given,
        weight,
        values,
        report,
    })
}
