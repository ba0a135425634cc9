//! Regenerates the sample inputs under `data/`.
//!
//! ```text
//! cargo run -p evostoch-core --example sample_data
//! ```
//!
//! `paths200.csv`: 200 paths of a lognormal random walk started at 1.0 with
//! 10% volatility per stage, T = 3. `assets5.csv`: 60 joint return scenarios
//! for five assets with increasing mean and volatility. Both use seed 2010.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SEED: u64 = 2010;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let step = Normal::new(0.0, 0.1).unwrap();
    let mut paths = String::from("stage2,stage3\n");
    for _ in 0..200 {
        let s2 = f64::exp(step.sample(&mut rng));
        let s3 = s2 * f64::exp(step.sample(&mut rng));
        writeln!(paths, "{s2:.6},{s3:.6}").unwrap();
    }
    std::fs::write(dir.join("paths200.csv"), paths)?;

    let mut assets = String::from("a1,a2,a3,a4,a5\n");
    let market = Normal::new(0.0, 1.0).unwrap();
    for _ in 0..60 {
        let common = market.sample(&mut rng);
        let row: Vec<String> = (0..5)
            .map(|i| {
                let mean = 0.002 + 0.002 * i as f64;
                let vol = 0.01 + 0.01 * i as f64;
                let r = mean + vol * (0.5 * common + 0.85 * market.sample(&mut rng));
                format!("{r:.6}")
            })
            .collect();
        writeln!(assets, "{}", row.join(",")).unwrap();
    }
    std::fs::write(dir.join("assets5.csv"), assets)?;
    Ok(())
}
