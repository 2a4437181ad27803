use varlex::families::{piecewise_cubic, rng_from_seed};
use varlex::modular::{modular_scaled, QuadConfig};
use varlex::norms::luxemburg_norm;
use varlex::Exponent;

fn main() {
    let log = Exponent::log_family();
    let dual = log.dual();
    let cfg = QuadConfig::default();
    let mut rng = rng_from_seed(700);
    for i in 0..5 {
        let v = piecewise_cubic(&mut rng, 4);
        eprintln!("sample {i}: v(1) = {:?}", v.eval(1.0));
        for lambda in [2.0, 1.0, 0.5, 0.25] {
            let t0 = std::time::Instant::now();
            let r = modular_scaled(&v, &dual, lambda, &cfg);
            eprintln!(
                "  lambda={lambda}: {:?} in {:.3}s",
                r.map(|m| m.value()),
                t0.elapsed().as_secs_f64()
            );
        }
        let t0 = std::time::Instant::now();
        let n = luxemburg_norm(&v, &dual, 1e-9, &cfg);
        eprintln!(
            "  norm: {:?} in {:.3}s",
            n.map(|n| n.value),
            t0.elapsed().as_secs_f64()
        );
    }
}
