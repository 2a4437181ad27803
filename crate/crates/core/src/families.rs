//! Seeded sample families for the closedness and separation experiments.
//!
//! All randomness flows through `ChaCha8Rng` seeded from a single `u64`, so
//! every family is bit-reproducible across runs and platforms.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exponent::Exponent;
use crate::func::{Func, Poly};
use crate::modular::QuadConfig;
use crate::norms::{luxemburg_norm, NORM_TOL};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Continuous piecewise-linear function with at most `max_breaks` interior
/// breakpoints and node values in [-1, 1].
pub fn piecewise_linear(rng: &mut ChaCha8Rng, max_breaks: usize) -> Func {
    let k = rng.random_range(2..=max_breaks.max(2));
    let mut ts: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..0.99)).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-4);
    let mut nodes = Vec::with_capacity(ts.len() + 2);
    nodes.push((0.0, rng.random_range(-1.0..1.0)));
    for t in ts {
        nodes.push((t, rng.random_range(-1.0..1.0)));
    }
    nodes.push((1.0, rng.random_range(-1.0..1.0)));
    Func::piecewise_linear(&nodes).expect("nodes are sorted and span [0,1]")
}

/// Piecewise cubic with a handful of pieces, coefficients in [-1, 1].
pub fn piecewise_cubic(rng: &mut ChaCha8Rng, max_pieces: usize) -> Func {
    let k = rng.random_range(1..=max_pieces.max(1));
    let mut breaks: Vec<f64> = (0..k - 1).map(|_| rng.random_range(0.05..0.95)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let mut all_breaks = vec![0.0];
    all_breaks.extend(breaks);
    all_breaks.push(1.0);
    let pieces: Vec<Poly> = (0..all_breaks.len() - 1)
        .map(|_| {
            Poly::new([
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ])
        })
        .collect();
    Func::piecewise_poly(all_breaks, pieces, false).expect("breaks are sorted and span [0,1]")
}

/// Scale to unit sup norm (exact for piecewise polynomials).
pub fn sup_normalized(f: &Func) -> Result<Func> {
    let sup = f.sup_norm_argmax()?;
    debug_assert!(sup.value > 0.0, "cannot normalize the zero function");
    Ok(Func::scaled(1.0 / sup.value, f.clone()))
}

/// Scale to unit Luxemburg norm under the given exponent.
pub fn lux_normalized(f: &Func, p: &Exponent, cfg: &QuadConfig) -> Result<Func> {
    let n = luxemburg_norm(f, p, NORM_TOL, cfg)?;
    debug_assert!(n.value > 0.0, "cannot normalize the zero function");
    Ok(Func::scaled(1.0 / n.value, f.clone()))
}

/// Bounded simple function supported on a sublevel set Omega_n, n <= 64:
/// a member of the family dense in the order-continuous part. Returns the
/// function together with the level used.
pub fn simple_on_level_set(rng: &mut ChaCha8Rng, p: &Exponent) -> Result<(Func, u32)> {
    let n = *[2u32, 4, 8, 16, 32, 64]
        .get(rng.random_range(0..6))
        .expect("index in range");
    let depth = rng.random_range(2..=5u32);
    let cells = 1usize << depth;
    let h = 1.0 / cells as f64;
    let mut breaks = Vec::with_capacity(cells + 1);
    for i in 0..=cells {
        breaks.push(i as f64 * h);
    }
    let pieces: Vec<Poly> = (0..cells)
        .map(|_| {
            if rng.random_range(0.0..1.0) < 0.3 {
                Poly::constant(0.0)
            } else {
                Poly::constant(rng.random_range(-2.0..2.0))
            }
        })
        .collect();
    let simple = Func::piecewise_poly(breaks, pieces, false).expect("dyadic breaks");
    Ok((Func::masked(simple, p.level_set(n)?), n))
}
