//! Random search for flagged states whose log-negativity exceeds log2 |X|
//! when the flag-free marginal is product. A locking control shows what a
//! violation looks like.
//!
//!     cargo run --release --example conj5_campaign [trials]

use mutind::conjectures::{conj5_search, Conj5Params, Generator};
use mutind::tensor::RngSeed;

fn main() -> mutind::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|t| t.parse().ok()).unwrap_or(500);
    let params = Conj5Params::new(2, 2, 2);
    let s = conj5_search(&params, trials, RngSeed(0), false)?;
    println!("{trials} trials, min slack {:.4e} at trial {}", s.min_slack, s.argmin.trial);
    for b in &s.histogram {
        println!("  [{:>8.4}, {:>8.4})  {}", b.lo, b.hi, b.count);
    }
    println!("violations: {}", s.violations.len());

    let control = Conj5Params { generator: Generator::LockingControl, ..Conj5Params::new(2, 4, 4) };
    let c = conj5_search(&control, 3, RngSeed(0), false)?;
    println!("\nlocking control: {} violations, min slack {:.4}", c.violations.len(), c.min_slack);
    if let Some(v) = c.violations.first() {
        println!("  replay: {}", v.reproduce);
    }
    Ok(())
}
