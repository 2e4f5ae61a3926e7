use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: Tensor,
    grad: Vec<f64>,
}

/// Named parameters with matching gradient accumulators, iterated in name
/// order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterSet {
    entries: BTreeMap<String, Entry>,
}

impl ParameterSet {
    pub fn new() -> Self {
        ParameterSet::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        let grad = vec![0.0; value.len()];
        self.entries.insert(name.into(), Entry { value, grad });
    }

    /// Uniform weights in `[-bound, bound]`.
    pub fn insert_uniform(&mut self, name: impl Into<String>, shape: Vec<usize>, bound: f64, rng: &mut impl Rng) {
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
        self.insert(name, Tensor::from_parts(shape, data));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn value(&self, name: &str) -> Option<&Tensor> {
        self.entries.get(name).map(|e| &e.value)
    }

    pub fn value_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries.get_mut(name).map(|e| &mut e.value)
    }

    pub fn grad(&self, name: &str) -> Option<&[f64]> {
        self.entries.get(name).map(|e| e.grad.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn n_scalars(&self) -> usize {
        self.entries.values().map(|e| e.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for e in self.entries.values_mut() {
            e.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub(crate) fn accumulate(&mut self, name: &str, g: &[f64]) -> Result<()> {
        let e = self
            .entries
            .get_mut(name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown parameter `{name}`")))?;
        if e.grad.len() != g.len() {
            return Err(Error::LengthMismatch {
                left: e.grad.len(),
                right: g.len(),
            });
        }
        e.grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// `(value, grad)` for every parameter, name order.
    pub(crate) fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut [f64], &[f64])> {
        self.entries
            .iter_mut()
            .map(|(k, e)| (k.as_str(), e.value.data_mut(), e.grad.as_slice()))
    }

    pub fn to_serialized(&self) -> BTreeMap<String, SerializedTensor> {
        self.entries
            .iter()
            .map(|(k, e)| (k.clone(), SerializedTensor::from(&e.value)))
            .collect()
    }

    pub fn from_serialized(map: &BTreeMap<String, SerializedTensor>) -> Result<Self> {
        let mut out = ParameterSet::new();
        for (k, t) in map {
            out.insert(k.clone(), t.to_tensor()?);
        }
        Ok(out)
    }
}

/// Decimal with 17 significant digits; parses back to the identical `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::InvalidArgument(format!("bad decimal `{s}`")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerializedTensor {
    pub shape: Vec<usize>,
    pub data: Vec<String>,
}

impl From<&Tensor> for SerializedTensor {
    fn from(t: &Tensor) -> Self {
        SerializedTensor {
            shape: t.shape().to_vec(),
            data: t.data().iter().map(|&v| format_f64(v)).collect(),
        }
    }
}

impl SerializedTensor {
    pub fn to_tensor(&self) -> Result<Tensor> {
        let data = self.data.iter().map(|s| parse_f64(s)).collect::<Result<Vec<_>>>()?;
        Tensor::new(self.shape.clone(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back = parse_f64(&format_f64(v)).unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn accumulate_checks_length() {
        let mut p = ParameterSet::new();
        p.insert("w", Tensor::zeros(vec![2]));
        assert!(p.accumulate("w", &[1.0]).is_err());
        p.accumulate("w", &[1.0, 2.0]).unwrap();
        p.accumulate("w", &[1.0, 2.0]).unwrap();
        assert_eq!(p.grad("w").unwrap(), &[2.0, 4.0]);
        p.zero_grads();
        assert_eq!(p.grad("w").unwrap(), &[0.0, 0.0]);
    }
}
