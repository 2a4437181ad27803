//! Independent oracles for the acceptance suite. Nothing here calls the
//! kernel's integration or bisection paths: Simpson sums and multiplicative
//! ascent only.

use varlex::Func;

/// Composite Simpson on [lo, hi] with 2n+1 points.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / (2 * n) as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..2 * n {
        let t = lo + i as f64 * h;
        acc += f(t) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Classical L^q norm of a piecewise function by piece-wise Simpson:
/// (int |f|^q)^(1/q), independent of the kernel quadrature.
pub fn classical_lq_norm(f: &Func, q: f64) -> f64 {
    let pieces = f.resolve();
    let mut total = 0.0;
    for fp in pieces {
        if fp.local.is_zero() {
            continue;
        }
        let g = |t: f64| fp.local.eval(t).abs().powf(q);
        total += simpson(&g, fp.iv.lo, fp.iv.hi, 8192);
    }
    total.powf(1.0 / q)
}

/// Discrete dual-norm oracle: maximize sum_i v_i x_i w_i subject to
/// sum_i |x_i|^(p_i) w_i <= 1.
///
/// Substituting y_i = |x_i|^(p_i) w_i turns the feasible set into the simplex
/// and the objective into the concave separable function
/// sum_i a_i y_i^(1/p_i), a_i = |v_i| w_i^(1 - 1/p_i). Maximized by
/// multiplicative-weights (mirror) ascent on the simplex; plain radial
/// projection has wrong fixed points for heterogeneous exponents.
pub fn discrete_dual_norm_oracle(v: &[f64], p: &[f64], w: &[f64]) -> f64 {
    let n = v.len();
    assert!(n > 0 && p.len() == n && w.len() == n);
    let a: Vec<f64> = (0..n)
        .map(|i| v[i].abs() * w[i].powf(1.0 - 1.0 / p[i]))
        .collect();
    if a.iter().all(|&ai| ai == 0.0) {
        return 0.0;
    }
    let value = |y: &[f64]| -> f64 {
        (0..n)
            .map(|i| {
                if a[i] == 0.0 {
                    0.0
                } else {
                    a[i] * y[i].powf(1.0 / p[i])
                }
            })
            .sum()
    };
    let mut y: Vec<f64> = vec![1.0 / n as f64; n];
    let mut best = value(&y);
    let mut eta = 1.0;
    let mut stale = 0u32;
    for _ in 0..200_000 {
        // gradient of the concave objective on the simplex
        let mut g = vec![0.0f64; n];
        for i in 0..n {
            if a[i] > 0.0 {
                g[i] = a[i] / p[i] * y[i].powf(1.0 / p[i] - 1.0);
            }
        }
        let gmax = g.iter().cloned().fold(0.0f64, f64::max);
        if gmax == 0.0 {
            break;
        }
        let mut z: Vec<f64> = (0..n).map(|i| y[i] * (eta * g[i] / gmax).exp()).collect();
        let s: f64 = z.iter().sum();
        for zi in &mut z {
            *zi /= s;
        }
        let val = value(&z);
        if val > best {
            best = val;
            y = z;
            stale = 0;
        } else {
            stale += 1;
            if stale > 8 {
                eta *= 0.5;
                stale = 0;
                if eta < 1e-10 {
                    break;
                }
            }
        }
    }
    best
}

#[allow(dead_code)]
pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: {actual} vs {expected} (tol {tol})"
    );
}
