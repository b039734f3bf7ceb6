//! Mean pooling of a clip's descriptors into one signature.

use crate::sift3d::Descriptor;
use crate::{Error, Result};

/// A clip-level feature vector with unit L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub clip_id: String,
    pub values: Vec<f64>,
}

/// Element-wise mean of `descriptors`, L2-normalized.
pub fn pool_signature(descriptors: &[Descriptor], clip_id: &str) -> Result<Signature> {
    let first = descriptors
        .first()
        .ok_or_else(|| Error::NoFeatures(clip_id.to_string()))?;
    let dim = first.len();
    let mut sum = vec![0.0; dim];
    for d in descriptors {
        if d.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "descriptor of length {} among length {dim}",
                d.len()
            )));
        }
        for (s, v) in sum.iter_mut().zip(d.values()) {
            *s += v;
        }
    }
    // The 1/n of the mean cancels in the normalization.
    let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::NoFeatures(clip_id.to_string()));
    }
    Ok(Signature {
        clip_id: clip_id.to_string(),
        values: sum.into_iter().map(|x| x / norm).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(v: Vec<f64>) -> Descriptor {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        Descriptor(v.into_iter().map(|x| x / n).collect())
    }

    #[test]
    fn single_descriptor_passes_through() {
        let d = unit(vec![0.6, 0.8, 0.0]);
        let s = pool_signature(std::slice::from_ref(&d), "c").unwrap();
        for (a, b) in s.values.iter().zip(d.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(s.clip_id, "c");
    }

    #[test]
    fn identical_descriptors_idempotent() {
        let d = unit(vec![0.1, 0.2, 0.3, 0.4]);
        let s = pool_signature(&[d.clone(), d.clone()], "c").unwrap();
        for (a, b) in s.values.iter().zip(d.values()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn orthogonal_pair() {
        let d1 = Descriptor(vec![1.0, 0.0, 0.0]);
        let d2 = Descriptor(vec![0.0, 0.0, 1.0]);
        let s = pool_signature(&[d1, d2], "c").unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((s.values[0] - r).abs() < 1e-15);
        assert_eq!(s.values[1], 0.0);
        assert!((s.values[2] - r).abs() < 1e-15);
    }

    #[test]
    fn empty_is_no_features() {
        assert!(matches!(pool_signature(&[], "x"), Err(Error::NoFeatures(id)) if id == "x"));
    }

    fn descriptors() -> impl Strategy<Value = Vec<Descriptor>> {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, 8), 1..12).prop_map(|rows| {
            rows.into_iter()
                .map(|mut r| {
                    r[0] += 0.01;
                    unit(r)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn unit_norm_and_order_free(ds in descriptors(), k in 1usize..4) {
            let s = pool_signature(&ds, "p").unwrap();
            let norm = s.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);

            let mut rev = ds.clone();
            rev.reverse();
            let r = pool_signature(&rev, "p").unwrap();
            for (a, b) in s.values.iter().zip(&r.values) {
                prop_assert!((a - b).abs() < 1e-12);
            }

            let repeated: Vec<Descriptor> = (0..k).flat_map(|_| ds.iter().cloned()).collect();
            let d = pool_signature(&repeated, "p").unwrap();
            for (a, b) in s.values.iter().zip(&d.values) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
