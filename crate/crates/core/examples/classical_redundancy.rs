//! Classical side information: redundant decomposition of P(x,y,z),
//! optimal rate H(LJ) against Slepian-Wolf, local maps and hashing.
//!
//!     cargo run --release --example classical_redundancy

use mutind::classical::{
    classical_mindep_rate, hash_sim, Alphabet, JointDistribution, ki_decompose, make_corr_anticorr, slepian_wolf_sum, StochasticMap,
};
use mutind::tensor::RngSeed;

fn main() -> mutind::Result<()> {
    let p = make_corr_anticorr(0.75)?;
    let d = ki_decompose(&p)?;
    println!("H(XY)      {:.6}", d.h_xy);
    println!("H(LJ)      {:.6}", d.h_lj);
    println!("SW sum     {:.6}", slepian_wolf_sum(&p)?);
    println!("redundant  {}  (reconstruction {:.1e})", d.has_redundancy(), d.reconstruction_error);
    print!("{}", d.tau_csv());

    let id = StochasticMap::identity(2);
    let m = classical_mindep_rate(&p, &id, &id)?;
    println!("\nidentity maps: I(F:G) {:.6}, protocol value {:.6}", m.mi_fg, m.protocol_value);

    // Here X xor Y is a function of Z, so a shared linear hash leaks Z.
    // Hashing works when X = Y and Z is a noisy copy: H(X|Z) = h(1/4) = 0.811.
    let noisy = JointDistribution::from_fn(
        vec![Alphabet::new("X", 2), Alphabet::new("Y", 2), Alphabet::new("Z", 2)],
        |i| match (i[0] == i[1], i[2] == i[0]) {
            (false, _) => 0.0,
            (true, true) => 0.375,
            (true, false) => 0.125,
        },
    )?;
    println!("\nhashing X = Y at rate 1/4, TV distance from product with Z:");
    for n in [8, 12, 16] {
        let h = hash_sim(&noisy, n, n / 4, 2000, RngSeed(0))?;
        println!(
            "  n = {n:>2}  {:.4} ± {:.4}",
            h.empirical_tv_from_product_with_z, h.standard_error
        );
    }
    Ok(())
}
