use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Mixed-radix little-endian index over a product space.
///
/// Digit 0 is the least significant: `index = d_0 + r_0 * (d_1 + r_1 * (d_2 + ...))`.
/// This ordering is part of the model file format and must not change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateIndexer {
    radices: Vec<usize>,
    places: Vec<usize>,
    size: usize,
}

impl StateIndexer {
    pub fn new(radices: Vec<usize>) -> Result<Self> {
        if radices.contains(&0) {
            return domain("every radix must be at least 1");
        }
        let mut places = Vec::with_capacity(radices.len());
        let mut size: usize = 1;
        for &r in &radices {
            places.push(size);
            size = size
                .checked_mul(r)
                .ok_or_else(|| Error::Overflow("product space size exceeds usize".into()))?;
        }
        Ok(Self {
            radices,
            places,
            size,
        })
    }

    /// Indexer over `digits` positions each with radix `radix`.
    pub fn uniform(radix: usize, digits: usize) -> Result<Self> {
        Self::new(vec![radix; digits])
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn places(&self) -> &[usize] {
        &self.places
    }

    pub fn digits(&self) -> usize {
        self.radices.len()
    }

    /// Number of points in the product space.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn encode(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.radices.len() {
            return domain(format!(
                "expected {} digits, got {}",
                self.radices.len(),
                digits.len()
            ));
        }
        let mut index = 0;
        for (pos, (&d, &r)) in digits.iter().zip(&self.radices).enumerate() {
            if d >= r {
                return domain(format!("digit {pos} is {d}, radix is {r}"));
            }
            index += d * self.places[pos];
        }
        Ok(index)
    }

    pub fn decode(&self, index: usize) -> Result<Vec<usize>> {
        if index >= self.size {
            return domain(format!("index {index} out of range 0..{}", self.size));
        }
        let mut out = vec![0; self.radices.len()];
        self.decode_into(index, &mut out);
        Ok(out)
    }

    /// Unchecked decode into a caller-provided buffer.
    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        for (slot, &r) in out.iter_mut().zip(&self.radices) {
            *slot = index % r;
            index /= r;
        }
    }

    /// Digit at position `pos` of `index`.
    #[inline]
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.places[pos]) % self.radices[pos]
    }

    /// `index` with digit `pos` replaced by `value`.
    #[inline]
    pub fn with_digit(&self, index: usize, pos: usize, value: usize) -> usize {
        let old = self.digit(index, pos);
        index - old * self.places[pos] + value * self.places[pos]
    }
}
