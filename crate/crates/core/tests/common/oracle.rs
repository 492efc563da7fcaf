//! Brute-force reference implementations used as test oracles.
//!
//! Everything here recomputes each output from scratch with the most direct
//! formula, sharing no code with the library kernels.

#![allow(dead_code)]

use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Percentile of a sorted slice at position `p * (m - 1)`, linearly interpolated.
pub fn percentile_sorted(s: &[f64], p: f64) -> f64 {
    let pos = p * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    if lo + 1 >= s.len() {
        return s[s.len() - 1];
    }
    let frac = pos - lo as f64;
    if frac == 0.0 {
        s[lo]
    } else {
        s[lo] + frac * (s[lo + 1] - s[lo])
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

pub fn median(v: &[f64]) -> f64 {
    percentile_sorted(&sorted(v), 0.5)
}

/// `[lo, hi)` of a centered window of `w` samples, extra sample on the right.
pub fn window(i: usize, w: usize, n: usize) -> (usize, usize) {
    let left = (w - 1) / 2;
    let right = w - 1 - left;
    (i.saturating_sub(left), (i + right + 1).min(n))
}

pub fn hampel_pass(x: &[f64], h: usize, k: f64, floor: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let (lo, hi) = window(i, 2 * h + 1, x.len());
            let w = &x[lo..hi];
            let med = median(w);
            let dev: Vec<f64> = w.iter().map(|v| (v - med).abs()).collect();
            let scale = (1.4826 * median(&dev)).max(floor);
            if (x[i] - med).abs() > k * scale {
                med
            } else {
                x[i]
            }
        })
        .collect()
}

/// Full passes repeated until the output stops changing.
pub fn hampel_fixed_point(x: &[f64], h: usize, k: f64, floor: f64) -> Vec<f64> {
    let mut cur = x.to_vec();
    for _ in 0..10_000 {
        let next = hampel_pass(&cur, h, k, floor);
        if next == cur {
            return cur;
        }
        cur = next;
    }
    panic!("oracle Hampel did not converge");
}

pub fn rolling_percentile(x: &[f64], w: usize, p: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let (lo, hi) = window(i, w, x.len());
            percentile_sorted(&sorted(&x[lo..hi]), p)
        })
        .collect()
}

pub fn rolling_rms(x: &[f64], w: usize) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let (lo, hi) = window(i, w, x.len());
            let mut acc = 0.0;
            for v in &x[lo..hi] {
                acc += v * v;
            }
            (acc / (hi - lo) as f64).sqrt()
        })
        .collect()
}

/// Gaussian convolution truncated at `ceil(4 sigma)` and renormalized over in-range taps.
pub fn gaussian_smooth(x: &[f64], sigma: f64) -> Vec<f64> {
    let r = (4.0 * sigma).ceil() as i64;
    let n = x.len() as i64;
    (0..n)
        .map(|i| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for j in (i - r).max(0)..(i + r + 1).min(n) {
                let d = (j - i) as f64;
                let w = (-d * d / (2.0 * sigma * sigma)).exp();
                acc += w * x[j as usize];
                wsum += w;
            }
            acc / wsum
        })
        .collect()
}

/// Random test sequences of several shapes; `family` picks the shape.
pub fn random_sequence(rng: &mut ChaCha8Rng, family: usize, n: usize) -> Vec<f64> {
    match family % 5 {
        0 => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        1 => (0..n)
            .map(|i| {
                let spike = if rng.random_bool(0.02) { rng.random_range(5.0..20.0) } else { 0.0 };
                (i as f64 * 0.05).sin() + 0.1 * rng.random_range(-1.0..1.0) + spike
            })
            .collect(),
        2 => (0..n).map(|_| f64::from(rng.random_range(0..5u8))).collect(),
        3 => {
            let mut acc = 0.0;
            (0..n)
                .map(|_| {
                    acc += rng.random_range(-1.0..1.0);
                    acc
                })
                .collect()
        }
        _ => (0..n).map(|_| (rng.random_range(0.0..1023.0f64)).round()).collect(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ------------------------------------------------------------------ geometry

pub fn skew(t: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -t[2], t[1], t[2], 0.0, -t[0], -t[1], t[0], 0.0)
}

pub fn intrinsics(fx: f64, fy: f64, cx: f64, cy: f64) -> Matrix3<f64> {
    Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0)
}

/// 4x4 world-from-camera matrix.
pub fn pose(r: &Matrix3<f64>, t: &Vector3<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
    m
}

/// F mapping pixels of view 1 to epipolar lines of view 2, built from the
/// camera-from-world matrices by explicit 4x4 inversion.
pub fn fundamental(
    k1: &Matrix3<f64>,
    w_from_c1: &Matrix4<f64>,
    k2: &Matrix3<f64>,
    w_from_c2: &Matrix4<f64>,
) -> Matrix3<f64> {
    let c2_from_w = w_from_c2.try_inverse().unwrap();
    let c2_from_c1 = c2_from_w * w_from_c1;
    let r = c2_from_c1.fixed_view::<3, 3>(0, 0).into_owned();
    let t = c2_from_c1.fixed_view::<3, 1>(0, 3).into_owned();
    let e = skew(&t) * r;
    let f = k2.try_inverse().unwrap().transpose() * e * k1.try_inverse().unwrap();
    f / f.norm()
}

/// Sampson error `(x2' F x1)^2 / ((F x1)_1^2 + (F x1)_2^2 + (F' x2)_1^2 + (F' x2)_2^2)`.
pub fn sampson(f: &Matrix3<f64>, p1: [f64; 2], p2: [f64; 2]) -> f64 {
    let x1 = Vector3::new(p1[0], p1[1], 1.0);
    let x2 = Vector3::new(p2[0], p2[1], 1.0);
    let fx1 = f * x1;
    let ftx2 = f.transpose() * x2;
    let r = x2.dot(&fx1);
    r * r / (fx1[0].powi(2) + fx1[1].powi(2) + ftx2[0].powi(2) + ftx2[1].powi(2))
}

/// Pinhole projection of a world point into a camera given world-from-camera.
pub fn project(k: &Matrix3<f64>, w_from_c: &Matrix4<f64>, p: &Vector3<f64>) -> [f64; 2] {
    let c_from_w = w_from_c.try_inverse().unwrap();
    let q = c_from_w * p.push(1.0);
    let uvw = k * Vector3::new(q[0], q[1], q[2]);
    [uvw[0] / uvw[2], uvw[1] / uvw[2]]
}

// ---------------------------------------------------------------- evaluation

/// Contact F1 over frames labeled in both prediction and truth
/// (Contact/NoContact on both sides).
pub fn contact_f1<S: PartialEq + Copy>(pred: &[S], truth: &[S], contact: S, no_contact: S) -> f64 {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (p, t) in pred.iter().zip(truth) {
        let labeled = |s: &S| *s == contact || *s == no_contact;
        if !labeled(p) || !labeled(t) {
            continue;
        }
        match (*p == contact, *t == contact) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    if tp + fp + fneg == 0 {
        return 1.0;
    }
    2.0 * tp as f64 / (2.0 * tp as f64 + fp as f64 + fneg as f64)
}
