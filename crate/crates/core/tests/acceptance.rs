//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs without the libtest harness so the lines always reach the output.

use std::time::Instant;

use mutind::classical::{
    ki_decompose, make_corr_anticorr, optimal_rate_hlj, slepian_wolf_sum, Alphabet,
    JointDistribution,
};
use mutind::compression::{rate_pair_exact, rate_sum_identity_check, rate_sum_theorem};
use mutind::conjectures::{conj4_search, conj5_trial, Conj5Params, VIOLATION_TOL};
use mutind::entropy::{
    binary_entropy, cond_mutual_info, multi_info, mutual_info, relative_entropy,
};
use mutind::measures::{
    isotropic_on, log_negativity, rel_ent_ppt, Cut, IsotropicParams, PptOptions,
};
use mutind::mindep::{
    controlled_twist, ebit_key, extract_twisting, make_pbit, make_pdit, maxcorr_hashing_bound,
    mi_bounds, plant_exact_mi, MiBoundsOptions, SplitDims, SubsystemSplit,
};
use mutind::states;
use mutind::tensor::linalg::{c, CMat};
use mutind::tensor::random::{random_density_with, random_state_with};
use mutind::tensor::{haar_unitary, trace_distance, MultipartiteState, RngSeed};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ab() -> Cut {
    Cut::new(&["A"], &["B"])
}

fn isotropic_negativity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for d in [2usize, 3, 4] {
        for k in 0..=20 {
            let f = k as f64 * 0.05;
            let e = log_negativity(&isotropic_on("A", "B", IsotropicParams::new(f, d).unwrap()), &ab())
                .unwrap();
            let target = if f >= 1.0 / d as f64 - 1e-12 { (f * d as f64).log2() } else { 0.0 };
            let err = if f >= 1.0 / d as f64 - 1e-12 { (e - target).abs() } else { e.max(0.0) };
            worst = worst.max(err);
            count += 1;
        }
    }
    outcome(worst <= 1e-9, format!("{count} grid points, worst deviation {worst:.2e}"))
}

fn maxcorr_bound() -> Outcome {
    let mut worst_v: f64 = 0.0;
    let mut worst_audit: f64 = 0.0;
    for eps in [0.0, 0.1, 0.25, 0.5] {
        let s = states::bell_mixture("A", "B", eps).unwrap();
        let h = maxcorr_hashing_bound(&s).unwrap();
        worst_v = worst_v.max((h.value - 0.5 * (1.0 - binary_entropy(eps))).abs());
        let coh = mutind::entropy::entropy(&s, &["B"]).unwrap() - mutind::entropy::vn_entropy(&s);
        worst_audit = worst_audit.max((h.audit - coh).abs());
    }
    outcome(
        worst_v <= 1e-9 && worst_audit <= 1e-9,
        format!("bound deviation {worst_v:.2e}, audit deviation {worst_audit:.2e}"),
    )
}

fn haar(d: usize, seed: u64) -> CMat {
    haar_unitary(d, RngSeed(seed)).unwrap()
}

fn noise(d: usize, seed: u64) -> MultipartiteState {
    let mut rng = RngSeed(seed).rng();
    let rank = rng.random_range(1..=d);
    random_density_with("D", d, rank, &mut rng).unwrap()
}

/// Fifty states with exact mutual independence on the keys `A, B`.
fn planted_states() -> Vec<(String, MultipartiteState)> {
    let mut out = Vec::new();
    for k in 0..12u64 {
        let dd = 1 + (k as usize % 3);
        let t = controlled_twist(&[haar(dd, 100 + 2 * k), haar(dd, 101 + 2 * k)]).unwrap();
        out.push((format!("pbit {k}"), make_pbit(Some(&t), Some(&noise(dd, 200 + k))).unwrap()));
    }
    for k in 0..12u64 {
        let d = 2 + (k as usize % 2);
        let dd = 1 + (k as usize % 2);
        let blocks: Vec<CMat> = (0..d as u64).map(|i| haar(dd, 300 + 10 * k + i)).collect();
        let t = controlled_twist(&blocks).unwrap();
        out.push((format!("pdit d={d} {k}"), make_pdit(d, Some(&t), Some(&noise(dd, 400 + k))).unwrap()));
    }
    for k in 0..12u64 {
        let dd = 1 + (k as usize % 4);
        let t = haar(dd, 500 + k);
        out.push((
            format!("ebit+junk {k}"),
            plant_exact_mi(&ebit_key(), &noise(dd, 600 + k), Some(&t), None).unwrap(),
        ));
    }
    for k in 0..14u64 {
        let d = 2 + (k as usize % 2);
        let dd = 2;
        let key = states::ghz(&["A", "B", "C"], d);
        let t = haar(d * dd, 700 + k);
        out.push((
            format!("random twist d={d} {k}"),
            plant_exact_mi(&key, &noise(dd, 800 + k), Some(&t), None).unwrap(),
        ));
    }
    out
}

fn key_split(s: &MultipartiteState) -> SubsystemSplit {
    let split = SplitDims {
        alpha: s.dim_of("A").unwrap(),
        beta: s.dim_of("B").unwrap(),
    };
    SubsystemSplit::identity(s, Cut::new(&["A", "A'"], &["B", "B'"]), split).unwrap()
}

fn rate_algebra(planted: &[(String, MultipartiteState)]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for (name, s) in planted {
        match rate_sum_identity_check(s, &key_split(s)) {
            Ok(chk) => worst = worst.max(chk.gap),
            Err(e) => failed.push(format!("{name}: {e}")),
        }
    }
    let phi = states::phi_plus("A", "B");
    let sp = SubsystemSplit::identity(&phi, ab(), SplitDims { alpha: 2, beta: 2 }).unwrap();
    let pair = rate_pair_exact(&phi, &sp).unwrap().sum();
    let theorem = rate_sum_theorem(&phi, &ab(), 1.0).unwrap();
    let pass = failed.is_empty() && worst <= 1e-8 && pair.abs() <= 1e-8 && theorem.abs() <= 1e-8;
    outcome(
        pass,
        format!(
            "{} states, worst gap {worst:.2e}, Phi+ rate sum {pair:.1e} (formula {theorem:.1e}){}",
            planted.len(),
            if failed.is_empty() { String::new() } else { format!(", errors: {failed:?}") }
        ),
    )
}

fn twisting(planted: &[(String, MultipartiteState)]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failed = Vec::new();
    for (name, s) in planted {
        match extract_twisting(s) {
            Ok(t) => worst = worst.max(t.reconstruction_error),
            Err(e) => failed.push(format!("{name}: {e}")),
        }
    }
    outcome(
        failed.is_empty() && worst <= 1e-7,
        format!(
            "{} states, worst reconstruction error {worst:.2e}{}",
            planted.len(),
            if failed.is_empty() { String::new() } else { format!(", errors: {failed:?}") }
        ),
    )
}

fn sandwich() -> Outcome {
    let mut worst_order = f64::NEG_INFINITY;
    let mut worst_esq = f64::NEG_INFINITY;
    for k in 0..200u64 {
        let mut rng = RngSeed(9000 + k).rng();
        let (da, db) = (rng.random_range(2..=3), rng.random_range(2..=3));
        let rank = rng.random_range(1..=da * db);
        let s = random_state_with(&[("A", da), ("B", db)], rank, &mut rng).unwrap();
        let opts = MiBoundsOptions {
            seed: RngSeed(k),
            ppt: None,
            ..MiBoundsOptions::default()
        };
        let r = mi_bounds(&s, &opts).unwrap();
        let half = 0.5 * mutual_info(&s, &["A"], &["B"]).unwrap();
        worst_order = worst_order.max(r.lower_bound - r.upper_esq);
        worst_esq = worst_esq.max(r.upper_esq - half);
    }
    let phi = mi_bounds(
        &states::phi_plus("A", "B"),
        &MiBoundsOptions {
            ppt: None,
            ..MiBoundsOptions::default()
        },
    )
    .unwrap();
    let tight = (phi.lower_bound - 1.0).abs() <= 1e-6 && (phi.upper_esq - 1.0).abs() <= 1e-6;
    outcome(
        worst_order <= 1e-6 && worst_esq <= 1e-9 && tight,
        format!(
            "200 states, max(lower - E_sq) {worst_order:.2e}, max(E_sq - I/2) {worst_esq:.2e}, Phi+ [{:.9}, {:.9}]",
            phi.lower_bound, phi.upper_esq
        ),
    )
}

/// `min_{F' <= 1/d} S(iso(F) || iso(F'))` by golden-section search.
fn isotropic_re_oracle(f: f64, d: usize) -> f64 {
    let rest = (d * d - 1) as f64;
    let obj = |g: f64| {
        f * (f / g).log2() + (1.0 - f) * (((1.0 - f) / rest) / ((1.0 - g) / rest)).log2()
    };
    let (mut lo, mut hi) = (1e-9, 1.0 / d as f64);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if obj(m1) < obj(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    obj(0.5 * (lo + hi))
}

fn ppt_oracle() -> Outcome {
    let opts = PptOptions::default();
    let phi = rel_ent_ppt(&states::phi_plus("A", "B"), &ab(), &opts).unwrap().value;
    let iso = rel_ent_ppt(&isotropic_on("A", "B", IsotropicParams::new(0.9, 2).unwrap()), &ab(), &opts)
        .unwrap()
        .value;
    let oracle = isotropic_re_oracle(0.9, 2);
    outcome(
        (phi - 1.0).abs() <= 1e-4 && (iso - oracle).abs() <= 1e-4,
        format!("Phi+ {phi:.8}, iso(0.9,2) {iso:.8} vs oracle {oracle:.8}"),
    )
}

fn conj5_campaign() -> Outcome {
    let dims = [(2, 2), (2, 3), (3, 2), (3, 3)];
    let seed = RngSeed(2024);
    let mut min_slack = f64::INFINITY;
    let mut irreproducible = 0;
    let mut generator_failures = 0;
    let mut trials = 0;
    let mut optimized = 0;
    let mut run = |params: &Conj5Params, s: RngSeed, optimize: bool| match conj5_trial(params, s, optimize) {
        Ok(r) => {
            min_slack = min_slack.min(r.slack);
            let again = conj5_trial(params, s, optimize).unwrap();
            if (again.e_n - r.e_n).abs() > 1e-12 {
                irreproducible += 1;
            }
        }
        Err(_) => generator_failures += 1,
    };
    for k in 0..10_000u64 {
        let (a, b) = dims[k as usize % dims.len()];
        run(&Conj5Params::new(2, a, b), seed.derive(k), false);
        trials += 1;
    }
    for k in 0..100u64 {
        let (a, b) = dims[k as usize % dims.len()];
        run(&Conj5Params::new(2, a, b), seed.derive(1_000_000 + k), true);
        optimized += 1;
    }
    outcome(
        min_slack >= VIOLATION_TOL && irreproducible == 0 && generator_failures == 0,
        format!(
            "{trials} random + {optimized} optimized trials, min slack {min_slack:.3e}, \
             irreproducible {irreproducible}, generator failures {generator_failures}"
        ),
    )
}

fn conj4_checker() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    let mut maxcorr = Vec::new();
    for eps in [0.0, 0.1, 0.25] {
        maxcorr.push(states::bell_mixture("A", "B", eps).unwrap());
    }
    for (k, d) in [(0u64, 2usize), (1, 3), (2, 3)] {
        let mut rng = RngSeed(50 + k).rng();
        let g = CMat::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let a = &g * g.adjoint() + CMat::identity(d, d) * c(0.1, 0.0);
        let a = &a / a.trace();
        maxcorr.push(states::maximally_correlated("A", "B", &a).unwrap());
    }
    for (k, s) in maxcorr.iter().enumerate() {
        match conj4_search(s, &ab(), RngSeed(k as u64), 8).unwrap() {
            Some(p) => worst = worst.max(p.residual),
            None => missing += 1,
        }
    }
    let mut spurious = 0;
    for k in 0..100u64 {
        let mut rng = RngSeed(7000 + k).rng();
        let s = random_state_with(&[("A", 2), ("B", 2)], 4, &mut rng).unwrap();
        if conj4_search(&s, &ab(), RngSeed(k), 8).unwrap().is_some() {
            spurious += 1;
        }
    }
    outcome(
        missing == 0 && worst <= 1e-8 && spurious == 0,
        format!(
            "{} maximally correlated: missing {missing}, worst residual {worst:.2e}; \
             100 generic states: spurious {spurious}",
            maxcorr.len()
        ),
    )
}

fn classical_example() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut recon: f64 = 0.0;
    for p in [0.5, 0.75, 0.9] {
        let d = make_corr_anticorr(p).unwrap();
        let h = binary_entropy(p);
        worst = worst.max((slepian_wolf_sum(&d).unwrap() - 1.0 - h).abs());
        recon = recon.max(ki_decompose(&d).unwrap().reconstruction_error);
        worst = worst.max((optimal_rate_hlj(&d).unwrap() - h).abs());
    }
    let probs = [0.1, 0.15, 0.3, 0.45];
    let full = JointDistribution::from_fn(
        vec![Alphabet::new("X", 2), Alphabet::new("Y", 2), Alphabet::new("Z", 4)],
        |i| if i[2] == 2 * i[0] + i[1] { probs[i[2]] } else { 0.0 },
    )
    .unwrap();
    let full_gap = (optimal_rate_hlj(&full).unwrap() - slepian_wolf_sum(&full).unwrap()).abs();
    outcome(
        worst <= 1e-9 && recon <= 1e-9 && full_gap <= 1e-9,
        format!("worst deviation {worst:.2e}, reconstruction {recon:.2e}, Z=XY gap {full_gap:.2e}"),
    )
}

fn entropy_suite() -> Outcome {
    let mut ssa = f64::INFINITY;
    let mut pinsker = f64::INFINITY;
    let mut mono = f64::INFINITY;
    let mut consistency: f64 = 0.0;
    for k in 0..200u64 {
        let mut rng = RngSeed(30_000 + k).rng();
        let dims = [("A", rng.random_range(2..=3)), ("B", 2), ("C", rng.random_range(2..=3))];
        let n: usize = dims.iter().map(|d| d.1).product();
        let rank = rng.random_range(1..=n);
        let s = random_state_with(&dims, rank, &mut rng).unwrap();
        ssa = ssa.min(cond_mutual_info(&s, &["A"], &["C"], &["B"]).unwrap());
        mono = mono.min(
            mutual_info(&s, &["A"], &["B", "C"]).unwrap() - mutual_info(&s, &["A"], &["B"]).unwrap(),
        );
        let mi = mutual_info(&s, &["A"], &["B"]).unwrap();
        let parts: [&[&str]; 2] = [&["A"], &["B"]];
        let rho_ab = s.partial_trace(&["A", "B"]).unwrap();
        consistency = consistency.max((multi_info(&rho_ab, &parts).unwrap() - mi).abs());

        let d = rng.random_range(2..=4);
        let r1 = random_density_with("A", d, rng.random_range(1..=d), &mut rng).unwrap();
        let r2 = random_density_with("A", d, d, &mut rng).unwrap();
        let t = 2.0 * trace_distance(&r1, &r2).unwrap();
        let rel = relative_entropy(&r1, &r2).unwrap();
        pinsker = pinsker.min(rel - t * t / (2.0 * std::f64::consts::LN_2));
    }
    outcome(
        ssa >= -1e-9 && mono >= -1e-9 && pinsker >= -1e-9 && consistency <= 1e-9,
        format!(
            "min I(A:C|B) {ssa:.2e}, min Pinsker slack {pinsker:.2e}, min monotonicity slack {mono:.2e}, \
             multi/mutual gap {consistency:.2e}"
        ),
    )
}

fn main() {
    let planted = planted_states();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("isotropic log-negativity identity", Box::new(isotropic_negativity)),
        ("maximally correlated hashing bound", Box::new(maxcorr_bound)),
        ("rate-sum identity on planted states", Box::new(|| rate_algebra(&planted))),
        ("constructive twisting on planted states", Box::new(|| twisting(&planted))),
        ("lower/upper sandwich consistency", Box::new(sandwich)),
        ("PPT relative entropy oracle agreement", Box::new(ppt_oracle)),
        ("log-negativity campaign on product-marginal extensions", Box::new(conj5_campaign)),
        ("local operator pair checker", Box::new(conj4_checker)),
        ("classical correlated/anticorrelated example", Box::new(classical_example)),
        ("entropy property suite", Box::new(entropy_suite)),
    ];
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} ({:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
