fn main() {
    let sp = varlex::Exponent::spiked(10, 4.0, 2.0).unwrap();
    let cfg = varlex::QuadConfig::default();
    let rep = varlex::closedness_constants(&sp, 10, 4, 42, &cfg).unwrap();
    for (k, c) in &rep.depth_series {
        println!("depth {k}: c = {c}");
    }
}
