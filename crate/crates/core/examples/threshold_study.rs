use roundcap_core::solver::*;
use std::f64::consts::PI;
use std::time::Instant;

fn main() {
    for n in [3usize, 4] {
        for (name, rho) in [("pi/4", PI / 4.0), ("pi/3", PI / 3.0), ("pi/2", PI / 2.0)] {
            let spec = BvpSpec::for_cap(n, rho, 1.0, 4096).unwrap();
            let sub = spec.constant_subsolution();
            let sup = spec.bubble_field();
            let w = spec.bubble_field();
            for dir in [IterationDirection::FromSupersolution, IterationDirection::FromSubsolution] {
                let opts = MonotoneOptions { direction: dir, ..Default::default() };
                let t0 = Instant::now();
                match monotone_iterate(&spec, &sub, &sup, &opts) {
                    Ok((f, d)) => println!(
                        "n={} rho={:5} {:?}: iters={:3} stop={:?} gap={:.3e} change={:.2e} resid={:.2e} dt={:?}",
                        n, name, dir, d.iterations, d.stopped_on, f.sup_distance(&w),
                        d.final_change, d.final_residual, t0.elapsed()
                    ),
                    Err(e) => println!("n={} rho={:5} {:?}: ERROR {} dt={:?}", n, name, dir, e, t0.elapsed()),
                }
            }
        }
    }
}
