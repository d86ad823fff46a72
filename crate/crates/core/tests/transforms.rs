use std::f64::consts::PI;

use ndarray::Array3;
use nlcast::transform::wht_in_place;
use nlcast::{dct3_forward, dct3_inverse, signed_power, wht_block, GopTensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn basis(k: usize, n: usize, len: usize) -> f64 {
    let s = if k == 0 {
        (1.0 / len as f64).sqrt()
    } else {
        (2.0 / len as f64).sqrt()
    };
    s * (PI * (2 * n + 1) as f64 * k as f64 / (2 * len) as f64).cos()
}

/// Direct triple sum over the separable basis, no factoring.
fn dct3_brute(x: &Array3<f64>) -> Array3<f64> {
    let (t, h, w) = x.dim();
    Array3::from_shape_fn((t, h, w), |(kt, kh, kw)| {
        let mut acc = 0.0;
        for ((nt, nh, nw), v) in x.indexed_iter() {
            acc += v * basis(kt, nt, t) * basis(kh, nh, h) * basis(kw, nw, w);
        }
        acc
    })
}

/// Sylvester construction, scaled by 1/sqrt(n).
fn hadamard(n: usize) -> Vec<Vec<f64>> {
    let mut m = vec![vec![1.0]];
    while m.len() < n {
        let k = m.len();
        let mut next = vec![vec![0.0; 2 * k]; 2 * k];
        for i in 0..k {
            for j in 0..k {
                next[i][j] = m[i][j];
                next[i][j + k] = m[i][j];
                next[i + k][j] = m[i][j];
                next[i + k][j + k] = -m[i][j];
            }
        }
        m = next;
    }
    let s = 1.0 / (n as f64).sqrt();
    m.into_iter()
        .map(|r| r.into_iter().map(|v| v * s).collect())
        .collect()
}

fn random_gop(rng: &mut ChaCha8Rng, shape: (usize, usize, usize)) -> GopTensor {
    GopTensor::new(
        Array3::from_shape_fn(shape, |_| rng.random_range(-128.0..128.0)),
        0,
    )
    .unwrap()
}

#[test]
fn dct_matches_basis_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for shape in [
        (1, 1, 1),
        (2, 3, 5),
        (4, 4, 4),
        (4, 8, 8),
        (3, 8, 2),
        (1, 8, 8),
    ] {
        let gop = random_gop(&mut rng, shape);
        let fast = dct3_forward(&gop);
        let slow = dct3_brute(&gop.data);
        for (a, b) in fast.data.iter().zip(slow.iter()) {
            assert!((a - b).abs() < 1e-9, "{shape:?}: {a} vs {b}");
        }
    }
}

#[test]
fn wht_matches_hadamard_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [1, 2, 4, 8, 16, 64, 256] {
        let h = hadamard(n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let y = wht_block(&x).unwrap();
        for (row, yi) in h.iter().zip(&y) {
            let expect: f64 = row.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((expect - yi).abs() < 1e-9);
        }
    }
}

#[test]
fn wht_rejects_non_power_of_two() {
    for n in [0, 3, 6, 12, 100] {
        let mut v = vec![1.0; n];
        assert!(wht_in_place(&mut v).is_err(), "length {n}");
    }
}

fn shape_strategy() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=4, 1usize..=8, 1usize..=8)
}

proptest! {
    #[test]
    fn dct_parseval_and_round_trip(shape in shape_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gop = random_gop(&mut rng, shape);
        let c = dct3_forward(&gop);
        let e0: f64 = gop.data.iter().map(|v| v * v).sum();
        prop_assert!((c.energy() - e0).abs() <= 1e-9 * e0.max(1.0));
        let back = dct3_inverse(&c, 7).unwrap();
        prop_assert_eq!(back.origin_index, 7);
        for (a, b) in back.data.iter().zip(gop.data.iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn wht_parseval_and_involution(log_n in 0u32..=10, seed in any::<u64>()) {
        let n = 1usize << log_n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let y = wht_block(&x).unwrap();
        let ex: f64 = x.iter().map(|v| v * v).sum();
        let ey: f64 = y.iter().map(|v| v * v).sum();
        prop_assert!((ex - ey).abs() <= 1e-9 * ex.max(1.0));
        let z = wht_block(&y).unwrap();
        for (a, b) in z.iter().zip(&x) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn signed_power_is_odd_and_invertible(x in -1e4f64..1e4, p in 0.05f64..4.0) {
        let y = signed_power(x, p).unwrap();
        prop_assert_eq!(signed_power(-x, p).unwrap(), -y);
        let back = signed_power(y, 1.0 / p).unwrap();
        prop_assert!((back - x).abs() <= 1e-9 * x.abs().max(1.0));
    }
}
