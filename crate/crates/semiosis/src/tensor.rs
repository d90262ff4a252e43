//! Dense row-major tensors of truth values, indexed by multi-indices.
//!
//! Index spaces here are products of small finite supports, so the layout is
//! the obvious one: `offset = Σ idx[k] · stride[k]` with the last axis
//! contiguous. The odometer helpers iterate multi-indices without allocating
//! per step, which is what the limit/colimit folds and sup-⊗ joins run on.

use crate::algebra::TruthValue;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<TruthValue>,
}

impl Tensor {
    /// A tensor with every cell set to `fill`.
    ///
    /// Errors when the shape's cell count overflows or a zero-length axis is
    /// given — empty supports are rejected upstream, so a zero axis is a bug.
    pub fn filled(shape: Vec<usize>, fill: TruthValue) -> Result<Tensor> {
        let len = checked_volume(&shape)?;
        Ok(Tensor {
            shape,
            data: vec![fill; len],
        })
    }

    pub fn from_data(shape: Vec<usize>, data: Vec<TruthValue>) -> Result<Tensor> {
        let len = checked_volume(&shape)?;
        if data.len() != len {
            return Err(Error::ShapeMismatch(format!(
                "tensor data has {} cells but shape {:?} needs {}",
                data.len(),
                shape,
                len
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[TruthValue] {
        &self.data
    }

    /// Flat offset of a multi-index (row-major).
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.shape.len());
        let mut flat = 0;
        for (i, &ix) in index.iter().enumerate() {
            debug_assert!(ix < self.shape[i]);
            flat = flat * self.shape[i] + ix;
        }
        flat
    }

    /// Multi-index of a flat offset; inverse of [`Tensor::offset`].
    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut index = vec![0; self.shape.len()];
        for axis in (0..self.shape.len()).rev() {
            index[axis] = flat % self.shape[axis];
            flat /= self.shape[axis];
        }
        index
    }

    pub fn get(&self, index: &[usize]) -> &TruthValue {
        &self.data[self.offset(index)]
    }

    pub fn get_flat(&self, flat: usize) -> &TruthValue {
        &self.data[flat]
    }

    pub fn set(&mut self, index: &[usize], value: TruthValue) {
        let at = self.offset(index);
        self.data[at] = value;
    }

    pub fn set_flat(&mut self, flat: usize, value: TruthValue) {
        self.data[flat] = value;
    }

    /// Cellwise equality within the crate tolerance.
    pub fn approx_eq(&self, other: &Tensor) -> bool {
        self.shape == other.shape
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.approx_eq(b))
    }

    /// First cell where the two tensors differ beyond tolerance.
    pub fn first_difference(&self, other: &Tensor) -> Option<(Vec<usize>, TruthValue, TruthValue)> {
        if self.shape != other.shape {
            return Some((vec![], self.data[0].clone(), other.data[0].clone()));
        }
        self.data
            .iter()
            .zip(&other.data)
            .position(|(a, b)| !a.approx_eq(b))
            .map(|flat| {
                (
                    self.unravel(flat),
                    self.data[flat].clone(),
                    other.data[flat].clone(),
                )
            })
    }

    /// Re-axis the tensor: `perm[k]` is the axis of `self` that becomes axis
    /// `k` of the result.
    pub fn permute(&self, perm: &[usize]) -> Tensor {
        assert_eq!(perm.len(), self.shape.len());
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let mut out = Vec::with_capacity(self.data.len());
        let mut index = vec![0usize; shape.len()];
        let mut src = vec![0usize; shape.len()];
        loop {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = index[k];
            }
            out.push(self.get(&src).clone());
            if !step(&mut index, &shape) {
                break;
            }
        }
        Tensor { shape, data: out }
    }
}

/// Product of the axis sizes, rejecting zero axes and overflow.
pub fn checked_volume(shape: &[usize]) -> Result<usize> {
    let mut volume: usize = 1;
    for &axis in shape {
        if axis == 0 {
            return Err(Error::ShapeMismatch("tensor axis of size zero".into()));
        }
        volume = volume
            .checked_mul(axis)
            .ok_or_else(|| Error::ShapeMismatch("tensor volume overflows".into()))?;
    }
    Ok(volume)
}

/// Advance `index` one step through the row-major odometer over `shape`.
/// Returns false once the space is exhausted.
pub fn step(index: &mut [usize], shape: &[usize]) -> bool {
    for axis in (0..shape.len()).rev() {
        index[axis] += 1;
        if index[axis] < shape[axis] {
            return true;
        }
        index[axis] = 0;
    }
    false
}

/// Run `visit` on every multi-index of `shape` in row-major order.
pub fn for_each_index(shape: &[usize], mut visit: impl FnMut(&[usize])) {
    if shape.iter().any(|&n| n == 0) {
        return;
    }
    let mut index = vec![0usize; shape.len()];
    loop {
        visit(&index);
        if !step(&mut index, shape) {
            break;
        }
    }
}

/// Fallible variant of [`for_each_index`]; stops at the first error.
pub fn try_for_each_index(
    shape: &[usize],
    mut visit: impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if shape.iter().any(|&n| n == 0) {
        return Ok(());
    }
    let mut index = vec![0usize; shape.len()];
    loop {
        visit(&index)?;
        if !step(&mut index, shape) {
            return Ok(());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::TruthValue::Real;

    #[test]
    fn offsets_roundtrip() {
        let t = Tensor::filled(vec![2, 3, 4], Real(0.0)).unwrap();
        for flat in 0..t.len() {
            assert_eq!(t.offset(&t.unravel(flat)), flat);
        }
    }

    #[test]
    fn odometer_is_row_major() {
        let mut seen = Vec::new();
        for_each_index(&[2, 2], |ix| seen.push(ix.to_vec()));
        assert_eq!(
            seen,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
        );
    }

    #[test]
    fn permute_moves_axes() {
        let t = Tensor::from_data(
            vec![2, 3],
            (0..6).map(|i| Real(i as f64)).collect(),
        )
        .unwrap();
        let p = t.permute(&[1, 0]);
        assert_eq!(p.shape(), &[3, 2]);
        assert_eq!(p.get(&[2, 1]), t.get(&[1, 2]));
    }

    #[test]
    fn zero_axis_is_rejected() {
        assert!(Tensor::filled(vec![2, 0], Real(0.0)).is_err());
    }
}
