use std::fmt::Display;

use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};

use crate::error::{Error, Result};

/// Leaf weights that support the domination arithmetic: `f64` and exact
/// rationals alike.
pub trait Weight: Clone + PartialOrd + Zero + One + std::ops::Div<Output = Self> + Display {}

impl<W: Clone + PartialOrd + Zero + One + std::ops::Div<Output = Self> + Display> Weight for W {}

/// Density `f` with `S = f T` leafwise: `f_i = s_i / t_i` where `t_i > 0`
/// and 0 elsewhere. Requires `0 <= s_i <= t_i`.
pub fn radon_nikodym<W: Weight>(s: &[W], t: &[W]) -> Result<Vec<W>> {
    if s.len() != t.len() {
        return Err(Error::validation(format!("S has {} leaves, T has {}", s.len(), t.len())));
    }
    let zero = W::zero();
    let mut out = Vec::with_capacity(s.len());
    for (i, (si, ti)) in s.iter().zip(t).enumerate() {
        if !(*si >= zero && *ti >= zero) {
            return Err(Error::validation(format!("weights of leaf {i} must be >= 0 (got {si}, {ti})")));
        }
        if !(*si <= *ti) {
            return Err(Error::DominationViolated { leaf: i, s: si.to_string(), t: ti.to_string() });
        }
        out.push(if *ti > zero { si.clone() / ti.clone() } else { zero.clone() });
    }
    Ok(out)
}

/// `f T`, leafwise.
pub fn reconstruct<W: Weight + std::ops::Mul<Output = W>>(f: &[W], t: &[W]) -> Vec<W> {
    f.iter().zip(t).map(|(a, b)| a.clone() * b.clone()).collect()
}

/// Exact rational value of a finite float.
pub fn to_exact(x: f64) -> Result<BigRational> {
    BigRational::from_f64(x).ok_or_else(|| Error::validation(format!("weight {x} is not finite")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn ratio_example() {
        let f = radon_nikodym(&[1.0, 3.0], &[2.0, 3.0]).unwrap();
        assert_eq!(f, vec![0.5, 1.0]);
        let t = [ratio(2, 1), ratio(3, 1)];
        assert_eq!(radon_nikodym(&t, &t).unwrap(), vec![BigRational::one(); 2]);
        match radon_nikodym(&[3.0, 1.0], &[2.0, 3.0]) {
            Err(Error::DominationViolated { leaf, .. }) => assert_eq!(leaf, 0),
            other => panic!("{other:?}"),
        }
        assert_eq!(radon_nikodym(&[0.0], &[0.0]).unwrap(), vec![0.0]);
        assert!(radon_nikodym(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn exact_reconstruction_with_thirds() {
        let s = [ratio(1, 3), ratio(0, 1), ratio(5, 7)];
        let t = [ratio(1, 1), ratio(2, 9), ratio(5, 7)];
        let f = radon_nikodym(&s, &t).unwrap();
        assert_eq!(reconstruct(&f, &t), s.to_vec());
        assert_eq!(to_exact(0.1).unwrap() * BigRational::from_integer(10.into()) == BigRational::one(), false);
    }
}
