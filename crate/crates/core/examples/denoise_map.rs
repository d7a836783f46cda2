//! Sparse denoising of a noisy gradient field and its objective trace.
//!
//!     cargo run --example denoise_map -- [lambda]

use gridloc::denoise::{fista_denoise_traced, DenoiseConfig};
use gridloc::grid::{gradient, GridGeometry, MaskedGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> gridloc::Result<()> {
    let lambda: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let geom = GridGeometry::new(64, 64, 0.1, 0.0, 0.0)?;
    // a painted stripe on flat asphalt plus sensor noise
    let clean = MaskedGrid::from_fn(geom, |i, _| Some(if (28..32).contains(&i) { 90.0 } else { 25.0 }));
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noisy = clean.map(|v| v + 2.0 * rng.sample::<f64, _>(StandardNormal));

    let truth = gradient(&clean);
    let field = gradient(&noisy);
    let (den, trace) = fista_denoise_traced(&field, &DenoiseConfig::new(lambda))?;

    let err = |g: &MaskedGrid| {
        g.iter_available()
            .map(|(n, v)| (v - truth.dx.get_index(n).unwrap()).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let nonzero = |g: &MaskedGrid| g.iter_available().filter(|(_, v)| *v != 0.0).count();
    println!("lambda {lambda}");
    println!("dx error: noisy {:.2}, denoised {:.2}", err(&field.dx), err(&den.dx));
    println!("nonzero dx cells: noisy {}, denoised {}", nonzero(&field.dx), nonzero(&den.dx));
    for (k, f) in trace.objective_x.iter().enumerate().take(6) {
        println!("  iter {k}: objective {f:.3}");
    }
    Ok(())
}
