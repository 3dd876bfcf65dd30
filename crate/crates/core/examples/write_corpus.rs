//! Regenerate the shipped example files in `data/`.
//!
//! Each file carries an `expected` map of closed-form reference values that
//! `mutind selftest` recomputes.
//!
//!     cargo run --example write_corpus [-- <out-dir>]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mutind::classical::{make_corr_anticorr, shannon};
use mutind::conjectures::build_local_eve_state;
use mutind::entropy::binary_entropy;
use mutind::measures::{isotropic_on, Cut, IsotropicParams};
use mutind::mindep::{controlled_twist, make_pbit, make_pdit, SplitDims, SubsystemSplit};
use mutind::states;
use mutind::tensor::io::StateFile;
use mutind::tensor::{haar_unitary, MultipartiteState, RngSeed};

fn write_state(dir: &Path, name: &str, s: &MultipartiteState, expected: &[(&str, f64)]) {
    let mut f = StateFile::from_state(s);
    f.expected = expected.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&f).unwrap() + "\n").unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&dir).unwrap();

    let phi = states::phi_plus("A", "B");
    write_state(
        &dir,
        "phi_plus",
        &phi,
        &[
            ("S(A)", 1.0),
            ("I(A:B)", 2.0),
            ("E_N", 1.0),
            ("E_r_ppt", 1.0),
            ("hashing_bound", 0.5),
            ("iind_lower", 1.0),
        ],
    );

    // Private bit: twisted GHZ key, one bit of noise on Bob's shield.
    let twist = controlled_twist(&[
        haar_unitary(2, RngSeed(11)).unwrap(),
        haar_unitary(2, RngSeed(12)).unwrap(),
    ])
    .unwrap();
    let noise = MultipartiteState::maximally_mixed("D", 2);
    let pbit = make_pbit(Some(&twist), Some(&noise)).unwrap();
    write_state(
        &dir,
        "pbit_d2",
        &pbit,
        &[
            ("S(A)", 1.0),
            ("exact_mi_residual", 0.0),
            ("iind_lower", 0.5),
            ("rate_gap", 0.0),
        ],
    );
    let split = SubsystemSplit::identity(
        &pbit,
        Cut::new(&["A", "A'"], &["B", "B'"]),
        SplitDims { alpha: 2, beta: 2 },
    )
    .unwrap();
    let path = dir.join("pbit_d2.split.json");
    std::fs::write(&path, serde_json::to_string_pretty(&split.to_file()).unwrap() + "\n").unwrap();
    println!("wrote {}", path.display());

    let blocks: Vec<_> = (0..3)
        .map(|k| haar_unitary(2, RngSeed(20 + k)).unwrap())
        .collect();
    let pdit = make_pdit(3, Some(&controlled_twist(&blocks).unwrap()), Some(&noise)).unwrap();
    let l3 = 3f64.log2();
    write_state(
        &dir,
        "pdit_d3",
        &pdit,
        &[
            ("S(A)", l3),
            ("exact_mi_residual", 0.0),
            ("iind_lower", 0.5 * l3),
        ],
    );

    let eps = 0.25;
    let maxcorr = states::bell_mixture("A", "B", eps).unwrap();
    write_state(
        &dir,
        "maxcorr_eps025",
        &maxcorr,
        &[
            ("S(A)", 1.0),
            ("E_N", (2.0 - 2.0 * eps).log2()),
            ("E_r_ppt", 1.0 - binary_entropy(eps)),
            ("hashing_bound", 0.5 * (1.0 - binary_entropy(eps))),
        ],
    );

    let f = 0.9;
    let iso = isotropic_on("A", "B", IsotropicParams::new(f, 2).unwrap());
    write_state(
        &dir,
        "iso_F09_d2",
        &iso,
        &[("E_N", (2.0 * f).log2()), ("E_r_ppt", 1.0 - binary_entropy(f))],
    );

    // Eve holds independent noisy copies of A and B; here A = B.
    let p = 0.5;
    let pm = vec![vec![0.5, 0.0], vec![0.0, 0.5]];
    let eve = build_local_eve_state(&pm, p).unwrap();
    let err = (1.0 - p) / 2.0;
    let same = 0.5 * ((1.0 - err).powi(2) + err.powi(2));
    let diff = (1.0 - err) * err;
    let i_xe = shannon([same, same, diff, diff]) - 2.0 * binary_entropy(err);
    write_state(
        &dir,
        "local_eve",
        &eve,
        &[
            ("S(A)", 1.0),
            ("I(A:B)", 1.0),
            ("I(A:E1)", 1.0 - binary_entropy(err)),
            ("protocol_value", (1.0 - 2.0 * i_xe).max(0.0)),
        ],
    );

    let pc = 0.75;
    let dist = make_corr_anticorr(pc).unwrap();
    let mut value = serde_json::to_value(&dist).unwrap();
    let expected: BTreeMap<&str, f64> = [
        ("slepian_wolf_sum", 1.0 + binary_entropy(pc)),
        ("optimal_rate_hlj", binary_entropy(pc)),
        ("I(X:Y)", 1.0 - binary_entropy(pc)),
    ]
    .into_iter()
    .collect();
    value["expected"] = serde_json::to_value(expected).unwrap();
    let path = dir.join("corr_anticorr_p075.json");
    std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap() + "\n").unwrap();
    println!("wrote {}", path.display());
}
