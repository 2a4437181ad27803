use varlex::families::{piecewise_cubic, rng_from_seed};
use varlex::modular::{modular_scaled, QuadConfig};
use varlex::norms::luxemburg_norm;
use varlex::Exponent;

fn main() {
    eprintln!("fresh build marker 1234");
    let log = Exponent::log_family();
    let dual = log.dual();
    let mut rng = rng_from_seed(700);
    let v = piecewise_cubic(&mut rng, 4);
    let c1 = v.eval(1.0).unwrap().abs();
    let cfg = QuadConfig::default();
    for delta in [1e-6f64, 1e-5, 1e-4, 3e-4] {
        let lambda = c1 * (1.0 - delta);
        let t0 = std::time::Instant::now();
        let r = modular_scaled(&v, &dual, lambda, &cfg);
        eprintln!("delta={delta:.1e}: {:?} in {:.3}s", r.map(|m| m.value()).map_err(|e| e.to_string()), t0.elapsed().as_secs_f64());
    }
    let t0 = std::time::Instant::now();
    let n = luxemburg_norm(&v, &dual, 1e-9, &cfg);
    eprintln!("norm: {:?} in {:.3}s", n.map(|n| n.value).map_err(|e| e.to_string()), t0.elapsed().as_secs_f64());
}
