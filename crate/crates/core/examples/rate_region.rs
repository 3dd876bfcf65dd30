//! Rate region for entanglement-assisted distributed compression of a
//! private bit: corner points, converse and the optimal sum.
//!
//!     cargo run --release --example rate_region

use mutind::compression::{rate_region, RateInputs};
use mutind::measures::Cut;
use mutind::mindep::{make_pbit, SplitDims, SubsystemSplit};
use mutind::tensor::MultipartiteState;

fn main() -> mutind::Result<()> {
    let noise = MultipartiteState::maximally_mixed("D", 2);
    let pbit = make_pbit(None, Some(&noise))?;
    let cut = Cut::new(&["A", "A'"], &["B", "B'"]);
    let split = SubsystemSplit::identity(&pbit, cut.clone(), SplitDims { alpha: 2, beta: 2 })?;
    let report = rate_region(
        &pbit,
        &cut,
        &RateInputs {
            split: Some(&split),
            iind: Some((0.5, "exact split".into())),
            esq_value: 0.5,
        },
    )?;
    println!("{:>8} {:>8}  formula", "R_A", "R_B");
    for p in &report.achievable {
        println!("{:>8.4} {:>8.4}  {}", p.r_a, p.r_b, p.formula);
    }
    let c = &report.converse;
    println!("converse: R_A >= {:.4}, R_B >= {:.4}, sum >= {:.4}", c.r_a_min, c.r_b_min, c.sum_min);
    if let Some(s) = report.optimal_sum {
        println!("optimal sum {s:.4}");
    }
    if let Some(chk) = report.identity_check {
        println!("sum identity gap {:.2e}", chk.gap);
    }
    Ok(())
}
