//! Ω-sets: finite supports carrying an Ω-valued similarity relation.
//!
//! A similarity assigns every pair of elements a truth value `[a=b]`,
//! symmetric and ⊗-transitive (`[a=b] ⊗ [b=c] ≤ [a=c]`). The diagonal
//! `[a] = [a=a]` is the *extent* of `a` — how much the element exists — and
//! need not be `⊤`. Crisp sets are the classical case: identity matrix over
//! `{⊥, ⊤}`.
//!
//! Loading is deliberately lenient: [`OmegaSet::new`] only enforces shape and
//! carrier membership, while the similarity axioms are checked by
//! [`OmegaSet::validate`]. Known source tables violate ⊗-transitivity under
//! the very logic they are stated in (see the validate tests), and they must
//! still load so the results built on them can be reproduced; in lenient mode
//! such violations become report warnings rather than failures.

use std::collections::HashMap;
use std::fmt;

use crate::algebra::{Connective, MLAlgebra, TruthValue};
use crate::report::Report;
use crate::tensor::{checked_volume, for_each_index, Tensor};
use crate::{Error, Result};

/// A finite support with an Ω-valued similarity matrix.
///
/// Equality compares algebra, support, and similarity table exactly — two
/// sets are interchangeable precisely when their tables agree — and ignores
/// the display name and any recorded product structure.
#[derive(Debug, Clone)]
pub struct OmegaSet {
    name: String,
    algebra: MLAlgebra,
    support: Vec<String>,
    index: HashMap<String, usize>,
    similarity: Tensor,
    /// Present when this set was built as a named attribute product; required
    /// by [`OmegaSet::observable_projection`].
    factors: Option<Vec<(String, OmegaSet)>>,
}

impl PartialEq for OmegaSet {
    fn eq(&self, other: &Self) -> bool {
        self.algebra == other.algebra
            && self.support == other.support
            && self.similarity == other.similarity
    }
}

fn tuple_label(parts: &[&str]) -> String {
    format!("({})", parts.join(","))
}

impl OmegaSet {
    /// Build an Ω-set from an explicit similarity matrix, `rows[i][j] = [i=j]`.
    ///
    /// Enforces structure only (distinct labels, square shape, carrier
    /// membership); the similarity axioms are [`OmegaSet::validate`]'s job.
    pub fn new(
        name: impl Into<String>,
        algebra: MLAlgebra,
        support: Vec<String>,
        rows: Vec<Vec<TruthValue>>,
    ) -> Result<OmegaSet> {
        let name = name.into();
        let n = support.len();
        if n == 0 {
            return Err(Error::InvalidOmegaSet {
                set: name,
                reason: "support must be non-empty".into(),
            });
        }
        let mut index = HashMap::new();
        for (i, label) in support.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::InvalidOmegaSet {
                    set: name,
                    reason: format!("duplicate support label `{label}`"),
                });
            }
        }
        if rows.len() != n || rows.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidOmegaSet {
                set: name,
                reason: format!("similarity must be a {n}×{n} matrix"),
            });
        }
        let flat: Vec<TruthValue> = rows.into_iter().flatten().collect();
        for (k, v) in flat.iter().enumerate() {
            if !algebra.contains(v) {
                return Err(Error::InvalidOmegaSet {
                    set: name,
                    reason: format!(
                        "similarity[{}][{}] = {v} is outside the carrier of {algebra}",
                        k / n,
                        k % n
                    ),
                });
            }
        }
        Ok(OmegaSet {
            name,
            algebra,
            support,
            index,
            similarity: Tensor::from_data(vec![n, n], flat)?,
            factors: None,
        })
    }

    /// The crisp similarity: identity matrix over `{⊥, ⊤}`.
    pub fn crisp(
        name: impl Into<String>,
        algebra: MLAlgebra,
        support: Vec<String>,
    ) -> Result<OmegaSet> {
        let n = support.len();
        let bot = algebra.bot();
        let top = algebra.top();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { top.clone() } else { bot.clone() })
                    .collect()
            })
            .collect();
        OmegaSet::new(name, algebra, support, rows)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn algebra(&self) -> &MLAlgebra {
        &self.algebra
    }

    pub fn support(&self) -> &[String] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.support[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index.get(label).copied().ok_or_else(|| Error::UnknownElement {
            set: self.name.clone(),
            element: label.to_string(),
        })
    }

    pub fn similarity_at(&self, i: usize, j: usize) -> &TruthValue {
        self.similarity.get(&[i, j])
    }

    pub fn similarity(&self, a: &str, b: &str) -> Result<TruthValue> {
        Ok(self
            .similarity_at(self.index_of(a)?, self.index_of(b)?)
            .clone())
    }

    pub fn similarity_matrix(&self) -> &Tensor {
        &self.similarity
    }

    /// The extent `[a] = [a=a]`.
    pub fn extent(&self, a: &str) -> Result<TruthValue> {
        Ok(self.extent_at(self.index_of(a)?).clone())
    }

    pub fn extent_at(&self, i: usize) -> &TruthValue {
        self.similarity.get(&[i, i])
    }

    /// Identity matrix over `{⊥, ⊤}`?
    pub fn is_crisp(&self) -> bool {
        let top = self.algebra.top();
        let bot = self.algebra.bot();
        (0..self.len()).all(|i| {
            (0..self.len()).all(|j| {
                let expected = if i == j { &top } else { &bot };
                self.similarity_at(i, j).approx_eq(expected)
            })
        })
    }

    /// Check symmetry and ⊗-transitivity.
    ///
    /// Strict mode returns the first violation as a typed error. Lenient mode
    /// returns a passing report that downgrades every violation to a warning
    /// with its witness — the caller chose to proceed, the record remains.
    pub fn validate(&self, strict: bool) -> Result<Report> {
        let mut report = Report::new(format!("omega-set: {}", self.name));
        let n = self.len();

        let mut symmetry_violations = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let ij = self.similarity_at(i, j);
                let ji = self.similarity_at(j, i);
                if !ij.approx_eq(ji) {
                    symmetry_violations.push(format!(
                        "({},{}): {ij} ≠ {ji}",
                        self.support[i], self.support[j]
                    ));
                }
            }
        }
        let mut transitivity_violations = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let through = self.algebra.eval_unchecked(
                        Connective::Tensor,
                        self.similarity_at(i, j),
                        self.similarity_at(j, k),
                    );
                    let direct = self.similarity_at(i, k);
                    if !self.algebra.leq_within(&through, direct)? {
                        transitivity_violations.push(format!(
                            "({},{},{}): {through} > {direct}",
                            self.support[i], self.support[j], self.support[k]
                        ));
                    }
                }
            }
        }

        if strict {
            if let Some(witness) = symmetry_violations.first() {
                return Err(Error::SimilarityViolation {
                    set: self.name.clone(),
                    law: "symmetry",
                    witness: witness.clone(),
                });
            }
            if let Some(witness) = transitivity_violations.first() {
                return Err(Error::SimilarityViolation {
                    set: self.name.clone(),
                    law: "transitivity",
                    witness: witness.clone(),
                });
            }
        }

        for (law, cases, violations) in [
            ("symmetry", n * n, symmetry_violations),
            ("transitivity", n * n * n, transitivity_violations),
        ] {
            if violations.is_empty() {
                report.push_pass(law, cases);
            } else {
                report.push(
                    law,
                    true,
                    cases,
                    Some(format!("{} violation(s) downgraded to warnings", violations.len())),
                );
                for witness in violations {
                    report.warn(format!("{law} violated at {witness}"));
                }
            }
        }
        Ok(report)
    }

    /// Named attribute product: support is the Cartesian product of the
    /// component supports (row-major in attribute order, labels
    /// `(a,b,…)`), similarity the componentwise `⊗`. A unary product is the
    /// component itself, with the product structure recorded.
    pub fn product(
        name: impl Into<String>,
        attributes: Vec<(String, OmegaSet)>,
    ) -> Result<OmegaSet> {
        let name = name.into();
        if attributes.is_empty() {
            return Err(Error::EmptyProduct);
        }
        let algebra = attributes[0].1.algebra.clone();
        for (_, set) in &attributes {
            if set.algebra != algebra {
                return Err(Error::AlgebraMismatch {
                    left: algebra.name(),
                    right: set.algebra.name(),
                });
            }
        }
        {
            let mut seen = HashMap::new();
            for (attr, _) in &attributes {
                if seen.insert(attr.clone(), ()).is_some() {
                    return Err(Error::InvalidOmegaSet {
                        set: name,
                        reason: format!("duplicate attribute name `{attr}`"),
                    });
                }
            }
        }
        if attributes.len() == 1 {
            let (attr, set) = attributes.into_iter().next().unwrap();
            return Ok(OmegaSet {
                name,
                algebra,
                support: set.support.clone(),
                index: set.index.clone(),
                similarity: set.similarity.clone(),
                factors: Some(vec![(attr, set)]),
            });
        }

        let sizes: Vec<usize> = attributes.iter().map(|(_, set)| set.len()).collect();
        let volume = checked_volume(&sizes)?;

        let mut support = Vec::with_capacity(volume);
        let mut digits = Vec::with_capacity(volume);
        for_each_index(&sizes, |idx| {
            let parts: Vec<&str> = idx
                .iter()
                .zip(&attributes)
                .map(|(&i, (_, set))| set.label(i))
                .collect();
            support.push(tuple_label(&parts));
            digits.push(idx.to_vec());
        });

        let bot = algebra.bot();
        let mut data = Vec::with_capacity(volume * volume);
        for p in 0..volume {
            for q in 0..volume {
                let mut v = algebra.top();
                for (k, (_, set)) in attributes.iter().enumerate() {
                    v = algebra.eval_unchecked(
                        Connective::Tensor,
                        &v,
                        set.similarity_at(digits[p][k], digits[q][k]),
                    );
                    if v.approx_eq(&bot) {
                        v = bot.clone();
                        break;
                    }
                }
                data.push(v);
            }
        }

        let index = support
            .iter()
            .enumerate()
            .map(|(i, label)| (label.clone(), i))
            .collect();
        Ok(OmegaSet {
            name,
            algebra,
            support,
            index,
            similarity: Tensor::from_data(vec![volume, volume], data)?,
            factors: Some(attributes),
        })
    }

    /// The recorded product structure, if this set was built as one.
    pub fn factors(&self) -> Option<&[(String, OmegaSet)]> {
        self.factors.as_deref()
    }

    /// Project a product similarity onto a subset of its attributes: each
    /// kept-pair entry is the supremum of the full similarity over all
    /// completions of the hidden coordinates — on *both* sides independently.
    ///
    /// Kept attributes stay in declared product order regardless of the order
    /// of `keep`.
    pub fn observable_projection(&self, keep: &[String]) -> Result<OmegaSet> {
        let Some(factors) = self.factors.as_ref() else {
            return Err(Error::InvalidOmegaSet {
                set: self.name.clone(),
                reason: "observable projection needs a declared attribute product".into(),
            });
        };
        for attr in keep {
            if !factors.iter().any(|(name, _)| name == attr) {
                return Err(Error::UnknownAttribute(format!(
                    "`{attr}` is not an attribute of {}",
                    self.name
                )));
            }
        }
        if keep.is_empty() {
            return Err(Error::InvalidOmegaSet {
                set: self.name.clone(),
                reason: "observable projection needs at least one kept attribute".into(),
            });
        }

        let kept: Vec<(String, OmegaSet)> = factors
            .iter()
            .filter(|(name, _)| keep.contains(name))
            .cloned()
            .collect();
        let sizes: Vec<usize> = factors.iter().map(|(_, set)| set.len()).collect();
        let kept_positions: Vec<usize> = factors
            .iter()
            .enumerate()
            .filter(|(_, (name, _))| keep.contains(name))
            .map(|(k, _)| k)
            .collect();
        let kept_sizes: Vec<usize> = kept_positions.iter().map(|&k| sizes[k]).collect();
        let kept_volume = checked_volume(&kept_sizes)?;

        // Flat map from full support index to kept support index.
        let mut kept_flat = Vec::with_capacity(self.len());
        for_each_index(&sizes, |idx| {
            let mut flat = 0;
            for (&k, &size) in kept_positions.iter().zip(&kept_sizes) {
                flat = flat * size + idx[k];
            }
            kept_flat.push(flat);
        });

        let bot = self.algebra.bot();
        let top = self.algebra.top();
        let mut data = vec![bot; kept_volume * kept_volume];
        for p in 0..self.len() {
            for q in 0..self.len() {
                let cell = &mut data[kept_flat[p] * kept_volume + kept_flat[q]];
                if cell.approx_eq(&top) {
                    continue;
                }
                *cell =
                    self.algebra
                        .eval_unchecked(Connective::Join, cell, self.similarity_at(p, q));
            }
        }

        let rows: Vec<Vec<TruthValue>> = data
            .chunks(kept_volume)
            .map(|chunk| chunk.to_vec())
            .collect();
        let kept_names: Vec<&str> = kept.iter().map(|(name, _)| name.as_str()).collect();
        let projected_name = format!("{}[{}]", self.name, kept_names.join(","));
        if kept.len() == 1 {
            let mut set = OmegaSet::new(
                projected_name,
                self.algebra.clone(),
                kept[0].1.support.clone(),
                rows,
            )?;
            set.factors = Some(kept);
            Ok(set)
        } else {
            let mut support = Vec::with_capacity(kept_volume);
            for_each_index(&kept_sizes, |idx| {
                let parts: Vec<&str> = idx
                    .iter()
                    .zip(&kept)
                    .map(|(&i, (_, set))| set.label(i))
                    .collect();
                support.push(tuple_label(&parts));
            });
            let mut set = OmegaSet::new(projected_name, self.algebra.clone(), support, rows)?;
            set.factors = Some(kept);
            Ok(set)
        }
    }
}

impl fmt::Display for OmegaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({} elements)", self.name, self.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(v: f64) -> TruthValue {
        TruthValue::Real(v)
    }

    /// The three-point similarity table used throughout the additive
    /// examples: neighbours at 0.5, endpoints at 0.
    fn three_point(algebra: MLAlgebra) -> OmegaSet {
        OmegaSet::new(
            "A",
            algebra,
            vec!["0".into(), "1".into(), "2".into()],
            vec![
                vec![real(1.0), real(0.5), real(0.0)],
                vec![real(0.5), real(1.0), real(0.5)],
                vec![real(0.0), real(0.5), real(1.0)],
            ],
        )
        .unwrap()
    }

    #[test]
    fn crisp_set_is_valid_and_has_full_extents() {
        let a = OmegaSet::crisp("A", MLAlgebra::Goedel, vec!["x".into(), "y".into()]).unwrap();
        assert!(a.is_crisp());
        assert!(a.extent("x").unwrap().approx_eq(&real(1.0)));
        assert!(a.similarity("x", "y").unwrap().approx_eq(&real(0.0)));
        let report = a.validate(true).unwrap();
        assert!(report.passed());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn three_point_table_is_transitive_under_lukasiewicz() {
        // max(0, 0.5+0.5−1) = 0 ≤ [0=2] = 0, the tight case.
        let a = three_point(MLAlgebra::Lukasiewicz);
        let report = a.validate(true).unwrap();
        assert!(report.passed());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn three_point_table_warns_under_product_tnorm() {
        // 0.5·0.5 = 0.25 exceeds [0=2] = 0, so lenient mode must warn and
        // strict mode must refuse.
        let a = three_point(MLAlgebra::Product);
        let report = a.validate(false).unwrap();
        assert!(report.passed());
        let warned = report.warnings.join("\n");
        assert!(warned.contains("(0,1,2)"), "{warned}");
        assert!(warned.contains("0.250000 > 0.000000"), "{warned}");

        match a.validate(true) {
            Err(Error::SimilarityViolation { law, witness, .. }) => {
                assert_eq!(law, "transitivity");
                assert!(witness.contains("(0,1,2)"));
            }
            other => panic!("expected a similarity violation, got {other:?}"),
        }
    }

    #[test]
    fn asymmetry_is_reported_with_the_pair() {
        let a = OmegaSet::new(
            "A",
            MLAlgebra::Goedel,
            vec!["x".into(), "y".into()],
            vec![
                vec![real(1.0), real(0.3)],
                vec![real(0.7), real(1.0)],
            ],
        )
        .unwrap();
        match a.validate(true) {
            Err(Error::SimilarityViolation { law, .. }) => assert_eq!(law, "symmetry"),
            other => panic!("expected a similarity violation, got {other:?}"),
        }
        let report = a.validate(false).unwrap();
        assert!(report.warnings[0].contains("(x,y)"));
    }

    #[test]
    fn construction_rejects_bad_shapes_and_labels() {
        let rows = vec![vec![real(1.0)]];
        assert!(matches!(
            OmegaSet::new("A", MLAlgebra::Goedel, vec!["x".into(), "x".into()], rows.clone()),
            Err(Error::InvalidOmegaSet { .. })
        ));
        assert!(matches!(
            OmegaSet::new("A", MLAlgebra::Goedel, vec!["x".into(), "y".into()], rows),
            Err(Error::InvalidOmegaSet { .. })
        ));
        assert!(matches!(
            OmegaSet::new(
                "A",
                MLAlgebra::Boolean,
                vec!["x".into()],
                vec![vec![real(0.5)]],
            ),
            Err(Error::InvalidOmegaSet { .. })
        ));
        let a = OmegaSet::crisp("A", MLAlgebra::Goedel, vec!["x".into()]).unwrap();
        assert!(matches!(
            a.extent("missing"),
            Err(Error::UnknownElement { .. })
        ));
    }

    #[test]
    fn unary_product_is_the_component_itself() {
        let a = three_point(MLAlgebra::Lukasiewicz);
        let p = OmegaSet::product("P", vec![("a".into(), a.clone())]).unwrap();
        assert_eq!(p, a);
        assert_eq!(p.factors().unwrap().len(), 1);
    }

    #[test]
    fn product_similarity_is_componentwise_tensor() {
        let a = three_point(MLAlgebra::Product);
        let p = OmegaSet::product("A²", vec![("l".into(), a.clone()), ("r".into(), a)]).unwrap();
        assert_eq!(p.len(), 9);
        // [(0,0)=(1,1)] = 0.5 ⊗ 0.5 under the product t-norm.
        assert!(p
            .similarity("(0,0)", "(1,1)")
            .unwrap()
            .approx_eq(&real(0.25)));
        // Extents multiply componentwise.
        assert!(p.extent("(0,1)").unwrap().approx_eq(&real(1.0)));
    }

    #[test]
    fn product_requires_one_algebra() {
        let a = OmegaSet::crisp("A", MLAlgebra::Goedel, vec!["x".into()]).unwrap();
        let b = OmegaSet::crisp("B", MLAlgebra::Product, vec!["y".into()]).unwrap();
        assert!(matches!(
            OmegaSet::product("P", vec![("a".into(), a), ("b".into(), b)]),
            Err(Error::AlgebraMismatch { .. })
        ));
    }

    #[test]
    fn projection_of_crisp_product_is_crisp() {
        let a = OmegaSet::crisp("A", MLAlgebra::Goedel, vec!["x".into(), "y".into()]).unwrap();
        let b = OmegaSet::crisp("B", MLAlgebra::Goedel, vec!["u".into(), "v".into(), "w".into()])
            .unwrap();
        let p = OmegaSet::product("P", vec![("a".into(), a.clone()), ("b".into(), b)]).unwrap();
        let projected = p.observable_projection(&["a".into()]).unwrap();
        assert_eq!(projected, a);
    }

    #[test]
    fn projection_keeping_everything_is_identity() {
        let a = three_point(MLAlgebra::Lukasiewicz);
        let p = OmegaSet::product("P", vec![("l".into(), a.clone()), ("r".into(), a)]).unwrap();
        let projected = p
            .observable_projection(&["l".into(), "r".into()])
            .unwrap();
        assert_eq!(projected, p);
        // And the kept order is the declared order even if `keep` is reversed.
        let reversed = p
            .observable_projection(&["r".into(), "l".into()])
            .unwrap();
        assert_eq!(reversed, p);
    }

    #[test]
    fn projection_requires_known_attributes_and_a_product() {
        let a = three_point(MLAlgebra::Lukasiewicz);
        assert!(matches!(
            a.observable_projection(&["l".into()]),
            Err(Error::InvalidOmegaSet { .. })
        ));
        let p = OmegaSet::product("P", vec![("l".into(), a.clone()), ("r".into(), a)]).unwrap();
        assert!(matches!(
            p.observable_projection(&["z".into()]),
            Err(Error::UnknownAttribute(_))
        ));
    }

    #[test]
    fn projection_takes_suprema_over_both_sides() {
        // Non-crisp second factor: hidden completions on either side may
        // differ, so [x=y] after projection can exceed every aligned entry.
        let a = OmegaSet::crisp("A", MLAlgebra::Goedel, vec!["x".into(), "y".into()]).unwrap();
        let b = OmegaSet::new(
            "B",
            MLAlgebra::Goedel,
            vec!["u".into(), "v".into()],
            vec![
                vec![real(1.0), real(0.2)],
                vec![real(0.2), real(0.4)],
            ],
        )
        .unwrap();
        let p = OmegaSet::product("P", vec![("a".into(), a), ("b".into(), b)]).unwrap();
        let projected = p.observable_projection(&["a".into()]).unwrap();
        // [(x,·)=(x,·)] sweeps both hidden slots: best completion is (u,u) → 1.
        assert!(projected.similarity("x", "x").unwrap().approx_eq(&real(1.0)));
        assert!(projected.similarity("x", "y").unwrap().approx_eq(&real(0.0)));
    }
}
