use varlex::families::{piecewise_cubic, rng_from_seed};
use varlex::Exponent;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    const XGK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144838258730,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.0,
    ];
    const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];
    const WGK: [f64; 8] = [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ];
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_gauss = WG[3] * fc;
    let mut res_kronrod = WGK[7] * fc;
    let mut res_abs = res_kronrod.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let result = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0f64.min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err, res_abs)
}

fn main() {
    let log = Exponent::log_family();
    let dual = log.dual();
    let mut rng = rng_from_seed(700);
    let v = piecewise_cubic(&mut rng, 4);
    let c1 = v.eval(1.0).unwrap().abs();
    let lambda = c1 * (1.0 - 1e-4);
    let g = move |t: f64| {
        let p = dual.eval(t).unwrap_or(1.0);
        (v.eval(t).unwrap_or(0.0).abs() / lambda).powf(p)
    };
    struct Seg { a: f64, b: f64, val: f64, err: f64 }
    let (abs_tol, rel_tol): (f64, f64) = (2.5e-11, 1e-13);
    // run on the last v-piece cell ending at 1, like the real cell split
    let a0 = 0.8f64;
    let (val, err, _) = gk15(&g, a0, 1.0);
    let mut segs = vec![Seg { a: a0, b: 1.0, val, err }];
    let mut total_err = err;
    let mut total_val = val;
    let mut iters = 0u64;
    while total_err > abs_tol.max(rel_tol * total_val.abs()) {
        iters += 1;
        if iters % 20_000 == 0 {
            let worst = segs.iter().max_by(|x, y| x.err.total_cmp(&y.err)).unwrap();
            eprintln!(
                "iters={iters}, segs={}, total_val={total_val:.6e}, total_err={total_err:.6e}, target={:.3e}, worst=[{:.17},{:.17}] err={:.3e} val={:.3e}",
                segs.len(), abs_tol.max(rel_tol * total_val.abs()), worst.a, worst.b, worst.err, worst.val
            );
        }
        if iters > 100_000 {
            eprintln!("giving up");
            break;
        }
        let (wi, _) = segs.iter().enumerate().max_by(|x, y| x.1.err.total_cmp(&y.1.err)).unwrap();
        let seg = segs.swap_remove(wi);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            total_err -= seg.err;
            segs.push(Seg { err: 0.0, ..seg });
            if segs.iter().all(|s| s.err == 0.0) {
                break;
            }
            continue;
        }
        total_err -= seg.err;
        total_val -= seg.val;
        let (v1, e1, _) = gk15(&g, seg.a, mid);
        let (v2, e2, _) = gk15(&g, mid, seg.b);
        total_err += e1 + e2;
        total_val += v1 + v2;
        segs.push(Seg { a: seg.a, b: mid, val: v1, err: e1 });
        segs.push(Seg { a: mid, b: seg.b, val: v2, err: e2 });
        if !total_err.is_finite() {
            break;
        }
    }
    eprintln!("done iters={iters}, segs={}, total_val={total_val:.6e}, total_err={total_err:.3e}", segs.len());
}
