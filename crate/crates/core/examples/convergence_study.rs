use roundcap_core::solver::*;
use std::f64::consts::PI;

fn main() {
    for n in [3usize, 4] {
        let rho = PI / 3.0;
        let mut errs = Vec::new();
        for cells in [1024usize, 2048, 4096] {
            let spec = BvpSpec::for_cap(n, rho, 1.0, cells).unwrap();
            let sub = spec.constant_subsolution();
            let sup = spec.bubble_field();
            let (f, _) = monotone_iterate(&spec, &sub, &sup, &MonotoneOptions::default()).unwrap();
            errs.push(f.sup_distance(&spec.bubble_field()));
        }
        let o1 = (errs[0] / errs[1]).log2();
        let o2 = (errs[1] / errs[2]).log2();
        println!("n={n}: errors {:?} orders {:.3} {:.3}", errs, o1, o2);
    }
}
