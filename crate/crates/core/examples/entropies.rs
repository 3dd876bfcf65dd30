//! Entropic quantities of a few standard states.
//!
//!     cargo run --example entropies

use mutind::entropy::{cond_mutual_info, entropic_report, multi_info, mutual_info};
use mutind::states;
use mutind::tensor::random::random_state_with;
use mutind::tensor::RngSeed;

fn main() -> mutind::Result<()> {
    let phi = states::phi_plus("A", "B");
    for (k, v) in &entropic_report(&phi)?.0 {
        println!("phi+  {k:<10} {v:.6}");
    }

    // GHZ: every pair is classically correlated, the triple carries 2 bits of total correlation.
    let ghz = states::ghz(&["A", "B", "C"], 2);
    println!("ghz   I(A:B)     {:.6}", mutual_info(&ghz, &["A"], &["B"])?);
    println!("ghz   I(A:B|C)   {:.6}", cond_mutual_info(&ghz, &["A"], &["B"], &["C"])?);
    println!("ghz   I(A:B:C)   {:.6}", multi_info(&ghz, &[&["A"], &["B"], &["C"]])?);

    let mut rng = RngSeed(3).rng();
    let s = random_state_with(&[("A", 2), ("B", 3), ("C", 2)], 4, &mut rng)?;
    let cmi = cond_mutual_info(&s, &["A"], &["C"], &["B"])?;
    println!("random rank-4 I(A:C|B) = {cmi:.6} (strong subadditivity: >= 0)");
    Ok(())
}
