//! Overlap scores between binary masks.

use serde::Serialize;

use crate::error::Result;
use crate::raster::Mask;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaskScore {
    pub dice: f64,
    pub jaccard: f64,
    /// Pixels where the two masks disagree.
    pub flipped_pixels: usize,
}

fn counts(a: &Mask, b: &Mask) -> Result<(usize, usize, usize)> {
    a.ensure_same_dims(b)?;
    let inter = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .filter(|(p, q)| **p && **q)
        .count();
    Ok((inter, a.count(), b.count()))
}

/// `2|a ∩ b| / (|a| + |b|)`, 1 for two empty masks.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    let (inter, na, nb) = counts(a, b)?;
    Ok(if na + nb == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (na + nb) as f64
    })
}

/// `|a ∩ b| / |a ∪ b|`, 1 for two empty masks.
pub fn jaccard(a: &Mask, b: &Mask) -> Result<f64> {
    let (inter, na, nb) = counts(a, b)?;
    let union = na + nb - inter;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

pub fn score(a: &Mask, b: &Mask) -> Result<MaskScore> {
    Ok(MaskScore {
        dice: dice(a, b)?,
        jaccard: jaccard(a, b)?,
        flipped_pixels: a.hamming(b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, f: impl Fn(usize) -> bool) -> Mask {
        Mask::from_fn(w, h, |x, y| f(y * w + x)).unwrap()
    }

    #[test]
    fn reference_values() {
        let a = mask(20, 10, |i| i < 100);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(jaccard(&a, &a).unwrap(), 1.0);
        let b = mask(20, 10, |i| i >= 100);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        assert_eq!(jaccard(&a, &b).unwrap(), 0.0);
        let c = mask(20, 10, |i| (50..150).contains(&i));
        assert_eq!(dice(&a, &c).unwrap(), 0.5);
        assert!((jaccard(&a, &c).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(score(&a, &c).unwrap().flipped_pixels, 100);
        let e = Mask::empty(20, 10);
        assert_eq!(dice(&e, &e).unwrap(), 1.0);
        assert_eq!(jaccard(&e, &e).unwrap(), 1.0);
        assert!(dice(&a, &Mask::empty(10, 20)).is_err());
    }

    fn pair() -> impl Strategy<Value = (Mask, Mask)> {
        (3usize..9, 3usize..9).prop_flat_map(|(w, h)| {
            (
                proptest::collection::vec(any::<bool>(), w * h),
                proptest::collection::vec(any::<bool>(), w * h),
            )
                .prop_map(move |(a, b)| (Mask::new(w, h, a).unwrap(), Mask::new(w, h, b).unwrap()))
        })
    }

    proptest! {
        #[test]
        fn symmetric_and_consistent((a, b) in pair()) {
            let s = score(&a, &b).unwrap();
            let t = score(&b, &a).unwrap();
            prop_assert_eq!(s, t);
            prop_assert!(s.jaccard <= s.dice);
            prop_assert!((s.dice - 2.0 * s.jaccard / (1.0 + s.jaccard)).abs() < 1e-12);
        }

        #[test]
        fn moving_a_pixel_into_the_overlap_helps((a, b) in pair()) {
            // swap one pixel of b from outside a to inside a, keeping |b| fixed
            let out = (0..b.len()).find(|&i| b.as_slice()[i] && !a.as_slice()[i]);
            let spot = (0..b.len()).find(|&i| !b.as_slice()[i] && a.as_slice()[i]);
            if let (Some(o), Some(s)) = (out, spot) {
                let w = b.width();
                let mut c = b.clone();
                c.set(o % w, o / w, false);
                c.set(s % w, s / w, true);
                prop_assert!(dice(&a, &c).unwrap() >= dice(&a, &b).unwrap());
                prop_assert!(jaccard(&a, &c).unwrap() >= jaccard(&a, &b).unwrap());
            }
        }
    }
}
