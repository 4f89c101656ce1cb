//! Run the optimizer on a two-peak function and show the memory.

use ellipse_cab::bench::{match_optima, TestFunction};
use ellipse_cab::cab::{Cab, CabConfig, FnObjective};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let f = TestFunction::Bimodal;
    let bounds = f.bounds();
    let objective = FnObjective::new(bounds.clone(), |x: &[f64]| f.evaluate(x));
    let config = CabConfig {
        rho: Some(0.02),
        ..CabConfig::default()
    };
    let cab = Cab::new(&bounds, &config, &objective).expect("valid config");
    let Ok(memory) = cab.run(&mut ChaCha8Rng::seed_from_u64(7));

    for m in &memory {
        println!(
            "({:.4}, {:.4})  f = {:.5}",
            m.position[0], m.position[1], m.fitness
        );
    }
    for o in match_optima(f, &memory, 0.05) {
        println!(
            "optimum {:?}: distance {:.4} found {}",
            o.optimum, o.distance, o.found
        );
    }
}
