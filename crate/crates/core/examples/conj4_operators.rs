//! Local operator pairs with A ⊗ 1 |psi> = 1 ⊗ B |psi> on a maximally
//! correlated state. A generic full-rank state admits only
//! trivial pairs.
//!
//!     cargo run --release --example conj4_operators

use mutind::conjectures::{conj4_check, conj4_search};
use mutind::measures::Cut;
use mutind::states;
use mutind::tensor::linalg::c;
use mutind::tensor::random::random_state_with;
use mutind::tensor::{CMat, CVec, RngSeed};

fn main() -> mutind::Result<()> {
    let cut = Cut::new(&["A"], &["B"]);
    let mc = states::bell_mixture("A", "B", 0.25)?;
    let z = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]));
    let chk = conj4_check(&mc, &cut, &z, &z, 1e-8)?;
    println!("Z, Z on Bell mixture: holds {} c {:.4} residual {:.2e}", chk.holds, chk.c, chk.residual);

    match conj4_search(&mc, &cut, RngSeed(0), 4)? {
        Some(p) => println!("search found a pair, residual {:.2e}", p.residual),
        None => println!("search found nothing"),
    }

    let mut rng = RngSeed(5).rng();
    let generic = random_state_with(&[("A", 2), ("B", 2)], 4, &mut rng)?;
    let found = conj4_search(&generic, &cut, RngSeed(0), 4)?;
    println!("generic full-rank state: pair found = {}", found.is_some());
    Ok(())
}
