//! Elementary symmetric polynomials via Newton–Girard.

use crate::scalar::{Compensated, Scalar};
use num_traits::{FromPrimitive, Num};

/// Power sums `p_1..=p_r` (index 0 holds `p_0 = len`).
pub fn power_sums<T: Num + Clone + FromPrimitive>(xs: &[T], r: usize) -> Vec<T> {
    let mut p = vec![T::zero(); r + 1];
    p[0] = T::from_usize(xs.len()).expect("length representable");
    for x in xs {
        let mut pw = x.clone();
        for k in 1..=r {
            p[k] = p[k].clone() + pw.clone();
            pw = pw * x.clone();
        }
    }
    p
}

/// Power sums with compensated accumulation.
pub fn power_sums_compensated<T: Scalar>(xs: &[T], r: usize) -> Vec<T> {
    let mut acc = vec![Compensated::<T>::default(); r + 1];
    for &x in xs {
        let mut pw = x;
        for a in acc.iter_mut().skip(1) {
            a.add(pw);
            pw *= x;
        }
    }
    let mut p: Vec<T> = acc.iter().map(|a| a.value()).collect();
    p[0] = T::from_usize(xs.len()).unwrap();
    p
}

/// `e_0..=e_r` from power sums: `k e_k = Σ_{i=1..k} (−1)^{i−1} e_{k−i} p_i`.
pub fn newton_girard<T: Num + Clone + FromPrimitive>(p: &[T]) -> Vec<T> {
    let r = p.len() - 1;
    let mut e = vec![T::zero(); r + 1];
    e[0] = T::one();
    for k in 1..=r {
        let mut acc = T::zero();
        for i in 1..=k {
            let term = e[k - i].clone() * p[i].clone();
            acc = if i % 2 == 1 { acc + term } else { acc - term };
        }
        e[k] = acc / T::from_usize(k).expect("k representable");
    }
    e
}

/// `e_r(xs)` through compensated power sums and Newton–Girard.
pub fn esp<T: Scalar>(xs: &[T], r: usize) -> T {
    newton_girard(&power_sums_compensated(xs, r))[r]
}

/// `e_0..=e_r` by the product recurrence `e_k ← e_k + x e_{k−1}`.
pub fn esp_recurrence<T: Num + Clone>(xs: &[T], r: usize) -> Vec<T> {
    let mut e = vec![T::zero(); r + 1];
    e[0] = T::one();
    for x in xs {
        for k in (1..=r).rev() {
            e[k] = e[k].clone() + x.clone() * e[k - 1].clone();
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn exact_rational_identity() {
        let xs: Vec<Ratio<i64>> = [3, -1, 4, 1, -5, 9, 2].iter().map(|&v| Ratio::new(v, 2)).collect();
        for r in 0..=4 {
            let a = newton_girard(&power_sums(&xs, r));
            let b = esp_recurrence(&xs, r);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn ones_give_binomials() {
        let xs = vec![1.0f64; 12];
        assert_eq!(esp(&xs, 3), 220.0);
        assert_eq!(esp(&xs, 4), 495.0);
    }
}
