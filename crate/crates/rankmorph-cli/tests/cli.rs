//! End-to-end checks of the `rankmorph` binary: every subcommand, the
//! documented exit codes, and artifact reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RECORD_BYTES: usize = 3073;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rankmorph"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn assert_success(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// CIFAR-format batch whose images draw from small palettes, keeping the
/// debug-profile transport solver fast.
fn write_batch(path: &Path, records: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(records * RECORD_BYTES);
    for _ in 0..records {
        data.push(rng.random_range(0..10u8));
        let palette: Vec<[u8; 3]> = (0..24)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let picks: Vec<usize> = (0..1024).map(|_| rng.random_range(0..palette.len())).collect();
        for channel in 0..3 {
            for &p in &picks {
                data.push(palette[p][channel]);
            }
        }
    }
    fs::write(path, data).unwrap();
}

fn write_five_voter_profile(path: &Path) {
    fs::write(path, "# five voters\n0,1,2\n0,1,2\n0,1,2\n2,0,1\n2,0,1\n").unwrap();
}

fn checkerboard_ppm(path: &Path) {
    let mut data = b"P6\n4 4\n255\n".to_vec();
    for i in 0..16 {
        if (i / 4 + i % 4) % 2 == 0 {
            data.extend_from_slice(&[0, 0, 0]);
        } else {
            data.extend_from_slice(&[255, 255, 255]);
        }
    }
    fs::write(path, data).unwrap();
}

#[test]
fn vote_subcommands_reproduce_the_golden_profile() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("profile.txt");
    write_five_voter_profile(&profile);
    let profile = profile.to_str().unwrap();

    let stdout = assert_success(&run(&["vote", "borda", "--profile", profile]));
    assert!(stdout.contains("0,0.2"));
    assert!(stdout.contains("1,0.7"));
    assert!(stdout.contains("2,0.6"));
    assert!(stdout.contains("order: 0,2,1"));

    let stdout = assert_success(&run(&["vote", "kemeny-exact", "--profile", profile]));
    assert!(stdout.contains("order: 0,1,2"));

    let stdout = assert_success(&run(&["vote", "margins", "--profile", profile]));
    let first_row: Vec<&str> = stdout.lines().next().unwrap().split(',').collect();
    assert_eq!(first_row, vec!["0", "1", "0.2"]);
}

#[test]
fn rank_orders_colors_and_writes_a_strip() {
    let dir = tempfile::tempdir().unwrap();
    let strip = dir.path().join("strip.ppm");
    let stdout = assert_success(&run(&[
        "rank",
        "--order",
        "lex-rgb",
        "--colors",
        "255,0,0;0,255,0;0,0,255",
        "--strip",
        strip.to_str().unwrap(),
    ]));
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines, vec!["0,0,255", "0,255,0", "255,0,0"]);
    assert!(strip.exists());
}

#[test]
fn morph_roundtrip_and_learned_order() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.bin");
    write_batch(&batch, 4, 3);
    let model = dir.path().join("model.json");

    assert_success(&run(&[
        "train",
        "--data",
        batch.to_str().unwrap(),
        "--train-start",
        "0",
        "--train-count",
        "2",
        "--val-start",
        "2",
        "--val-count",
        "2",
        "--epochs",
        "2",
        "--batch-size",
        "256",
        "--model-out",
        model.to_str().unwrap(),
    ]));
    assert!(model.exists());

    let input = dir.path().join("in.ppm");
    checkerboard_ppm(&input);
    let output = dir.path().join("out.ppm");
    let learned = format!("learned:{}", model.display());
    for order in ["lex-rgb", "borda", learned.as_str()] {
        assert_success(&run(&[
            "morph",
            "--op",
            "dilate",
            "--se",
            "square:3",
            "--order",
            order,
            "--in",
            input.to_str().unwrap(),
            "--out",
            output.to_str().unwrap(),
        ]));
        let bytes = fs::read(&output).unwrap();
        // Flat morphology on a two-color image keeps the two colors.
        let raster = &bytes[bytes.len() - 48..];
        assert!(raster.iter().all(|&b| b == 0 || b == 255));
    }
}

#[test]
fn irregularity_of_identity_and_swap() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ppm");
    let b = dir.path().join("b.ppm");
    fs::write(&a, [b"P6\n2 1\n255\n".as_slice(), &[0, 0, 0, 200, 10, 30]].concat()).unwrap();
    fs::write(&b, [b"P6\n2 1\n255\n".as_slice(), &[200, 10, 30, 0, 0, 0]].concat()).unwrap();

    let stdout = assert_success(&run(&[
        "irregularity",
        "--original",
        a.to_str().unwrap(),
        "--processed",
        a.to_str().unwrap(),
    ]));
    assert_eq!(stdout.trim(), "0");

    let stdout = assert_success(&run(&[
        "irregularity",
        "--original",
        a.to_str().unwrap(),
        "--processed",
        b.to_str().unwrap(),
    ]));
    assert_eq!(stdout.trim(), "1");
}

#[test]
fn compare_emits_tables_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("phi.csv");
    let mut text = String::from("image,method,phi\n");
    for i in 0..12 {
        text.push_str(&format!("{i},low,{}\n", 0.1 + i as f64 * 0.01));
        text.push_str(&format!("{i},high,{}\n", 0.5 + i as f64 * 0.01));
    }
    fs::write(&csv, text).unwrap();

    let wilcoxon = dir.path().join("w.csv");
    let hasse = dir.path().join("h.dot");
    assert_success(&run(&[
        "compare",
        "--input",
        csv.to_str().unwrap(),
        "--alpha",
        "0.01",
        "--wilcoxon-out",
        wilcoxon.to_str().unwrap(),
        "--hasse-out",
        hasse.to_str().unwrap(),
    ]));
    let table = fs::read_to_string(&wilcoxon).unwrap();
    assert!(table.starts_with("method_a,method_b,"));
    assert!(table.contains("high,low"));
    let dot = fs::read_to_string(&hasse).unwrap();
    assert!(dot.contains("\"low\" -> \"high\";"));
}

fn experiment_dir(tempdir: &Path, tag: &str, batch: &Path) -> PathBuf {
    let out = tempdir.join(format!("artifacts_{tag}"));
    let config = tempdir.join(format!("cfg_{tag}.toml"));
    fs::write(
        &config,
        format!(
            "dataset = {:?}\noutput_dir = {:?}\ntrain_start = 0\ntrain_count = 4\n\
             val_start = 4\nval_count = 10\neval_count = 10\nshowcase_count = 2\n\
             se = \"square:3\"\nop = \"open\"\nseed = 5\n\n\
             [soft]\nepochs = 3\nbatch_size = 256\n",
            batch.to_str().unwrap(),
            out.to_str().unwrap(),
        ),
    )
    .unwrap();
    assert_success(&run(&["experiment", "--config", config.to_str().unwrap()]));
    out
}

#[test]
fn experiment_produces_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.bin");
    write_batch(&batch, 14, 9);

    let first = experiment_dir(dir.path(), "a", &batch);
    for artifact in [
        "model.json",
        "loss.csv",
        "irregularity.csv",
        "quantiles.csv",
        "wilcoxon.csv",
        "hasse.dot",
    ] {
        assert!(first.join(artifact).exists(), "{artifact} missing");
    }
    for method in ["lex-rgb", "lex-gbr", "lex-brg", "borda", "learned"] {
        assert!(first.join("ramps").join(format!("{method}.ppm")).exists());
        assert!(first
            .join("images")
            .join(format!("img000_open_{method}.ppm"))
            .exists());
    }
    assert!(first.join("images/img000_original.ppm").exists());
    let phi_rows = fs::read_to_string(first.join("irregularity.csv")).unwrap();
    assert_eq!(phi_rows.lines().count(), 1 + 10 * 5);

    // Same config and seed: byte-identical artifacts.
    let second = experiment_dir(dir.path(), "b", &batch);
    for artifact in ["model.json", "loss.csv", "irregularity.csv", "hasse.dot"] {
        assert_eq!(
            fs::read(first.join(artifact)).unwrap(),
            fs::read(second.join(artifact)).unwrap(),
            "{artifact} differs between identical runs"
        );
    }
    assert_eq!(
        fs::read(first.join("images/img000_open_learned.ppm")).unwrap(),
        fs::read(second.join("images/img000_open_learned.ppm")).unwrap()
    );
}

#[test]
fn exit_codes_follow_error_categories() {
    let dir = tempfile::tempdir().unwrap();

    // Missing dataset file: data-format / io error.
    let out = run(&[
        "train",
        "--data",
        dir.path().join("nope.bin").to_str().unwrap(),
        "--model-out",
        dir.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Overlapping ranges: configuration error.
    let batch = dir.path().join("batch.bin");
    write_batch(&batch, 6, 1);
    let config = dir.path().join("bad.toml");
    fs::write(
        &config,
        format!(
            "dataset = {:?}\noutput_dir = {:?}\ntrain_start = 0\ntrain_count = 4\nval_start = 2\nval_count = 2\n",
            batch.to_str().unwrap(),
            dir.path().join("out").to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(&["experiment", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // Truncated image raster: data-format error.
    let bad_ppm = dir.path().join("bad.ppm");
    fs::write(&bad_ppm, b"P6\n4 4\n255\n\0\0").unwrap();
    let out = run(&[
        "morph",
        "--op",
        "erode",
        "--in",
        bad_ppm.to_str().unwrap(),
        "--out",
        dir.path().join("o.ppm").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn failed_experiment_cleans_up_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("batch.bin");
    // Too few records for the requested validation range.
    write_batch(&batch, 6, 2);
    let out_dir = dir.path().join("artifacts");
    let config = dir.path().join("cfg.toml");
    fs::write(
        &config,
        format!(
            "dataset = {:?}\noutput_dir = {:?}\ntrain_start = 0\ntrain_count = 4\n\
             val_start = 4\nval_count = 10\neval_count = 10\n\n[soft]\nepochs = 1\nbatch_size = 256\n",
            batch.to_str().unwrap(),
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = run(&["experiment", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out_dir.exists(), "partial artifacts were left behind");
}
