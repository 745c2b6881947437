//! Exponentials of small Metzler matrices (nonnegative off-diagonals).
//!
//! All branches are written so the result is entrywise nonnegative in
//! floating point, which the positivity of the reaction substep relies on.

/// `exp(m)` for a row-major `n × n` Metzler matrix.
pub fn expm_metzler(m: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(m.len(), n * n);
    match n {
        1 => vec![m[0].exp()],
        2 => expm2(m[0], m[1], m[2], m[3]).to_vec(),
        _ => expm_shifted_taylor(m, n),
    }
}

/// Closed form for `[[a, b], [c, d]]` with `b, c ≥ 0`.
pub fn expm2(a: f64, b: f64, c: f64, d: f64) -> [f64; 4] {
    let s = 0.5 * (a + d);
    let delta = 0.5 * (a - d);
    let q = (delta * delta + b * c).sqrt();
    let es = s.exp();
    let (e11, e22, sinhc) = if q < 1e-4 {
        let q2 = q * q;
        let cosh = 1.0 + 0.5 * q2;
        let sinhc = 1.0 + q2 / 6.0;
        (cosh + delta * sinhc, cosh - delta * sinhc, sinhc)
    } else {
        let r = (delta / q).clamp(-1.0, 1.0);
        let (ep, em) = (q.exp(), (-q).exp());
        (
            0.5 * (ep * (1.0 + r) + em * (1.0 - r)),
            0.5 * (ep * (1.0 - r) + em * (1.0 + r)),
            0.5 * (ep - em) / q,
        )
    };
    [es * e11, es * b * sinhc, es * c * sinhc, es * e22]
}

fn expm_shifted_taylor(m: &[f64], n: usize) -> Vec<f64> {
    let shift = (0..n).map(|i| -m[i * n + i]).fold(0.0, f64::max);
    let mut a: Vec<f64> = m.to_vec();
    for i in 0..n {
        a[i * n + i] += shift;
    }
    let norm = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    a.iter_mut().for_each(|v| *v *= scale);

    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=20 {
        term = matmul(&term, &a, n);
        term.iter_mut().for_each(|v| *v /= k as f64);
        result.iter_mut().zip(&term).for_each(|(r, t)| *r += t);
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, n);
    }
    let f = (-shift).exp();
    result.iter_mut().for_each(|v| *v *= f);
    result
}

fn identity(n: usize) -> Vec<f64> {
    let mut id = vec![0.0; n * n];
    (0..n).for_each(|i| id[i * n + i] = 1.0);
    id
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

/// `(1 - exp(-q dt)) / q`, equal to `dt` at `q = 0`.
pub fn phi1(q: f64, dt: f64) -> f64 {
    if q == 0.0 {
        dt
    } else {
        -(-q * dt).exp_m1() / q
    }
}

/// Exact flow of `w' = a w - mu w²` over `dt` for `w ≥ 0`, `mu ≥ 0`.
pub fn logistic_flow(w: f64, a: f64, mu: f64, dt: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let growth = if a == 0.0 { dt } else { (a * dt).exp_m1() / a };
    w * (a * dt).exp() / (1.0 + mu * w * growth)
}
