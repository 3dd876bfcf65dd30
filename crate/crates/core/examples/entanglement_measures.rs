//! Log-negativity, PPT relative entropy, squashed-entanglement upper bound
//! and the hashing bound on isotropic and maximally correlated states.
//!
//!     cargo run --release --example entanglement_measures

use mutind::entropy::binary_entropy;
use mutind::measures::{esq_upper, isotropic_on, log_negativity, rel_ent_ppt, Cut, IsotropicParams, PptOptions};
use mutind::mindep::maxcorr_hashing_bound;
use mutind::states;
use mutind::tensor::RngSeed;

fn main() -> mutind::Result<()> {
    let cut = Cut::new(&["A"], &["B"]);

    println!("isotropic states, d = 3");
    println!("{:>6} {:>10} {:>10}", "F", "E_N", "log2(dF)");
    for f in [0.2, 0.4, 0.6, 0.8, 1.0] {
        let s = isotropic_on("A", "B", IsotropicParams::new(f, 3)?);
        let closed = if f > 1.0 / 3.0 { (3.0 * f).log2() } else { 0.0 };
        println!("{f:>6.2} {:>10.6} {:>10.6}", log_negativity(&s, &cut)?, closed);
    }

    let iso = isotropic_on("A", "B", IsotropicParams::new(0.9, 2)?);
    let opts = PptOptions { restarts: 2, ..PptOptions::default() };
    let er = rel_ent_ppt(&iso, &cut, &opts)?;
    println!("\nE_r^PPT(iso F=0.9, d=2) = {:.8}  closed form {:.8}", er.value, 1.0 - binary_entropy(0.9));
    if let Some(c) = &er.certificate {
        println!("  converged: {}", c.converged);
    }

    let eps = 0.25;
    let mc = states::bell_mixture("A", "B", eps)?;
    let hb = maxcorr_hashing_bound(&mc)?;
    let esq = esq_upper(&mc, &cut, 2, 16, RngSeed(1))?;
    println!("\nBell mixture eps = {eps}");
    println!("  E_N           {:.6}", log_negativity(&mc, &cut)?);
    println!("  I(A>B)        {:.6}", hb.coherent_info);
    println!("  hashing bound {:.6}", hb.value);
    println!("  E_sq upper    {:.6} ({})", esq.value, esq.method);
    Ok(())
}
