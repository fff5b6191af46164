use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kernel_tv::io::{load, save};
use kernel_tv::{Image, PixelVec};
use tempfile::TempDir;

fn ktv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktv"))
        .args(args)
        .output()
        .expect("ktv runs")
}

fn ok(args: &[&str]) -> Output {
    let out = ktv(args);
    assert!(
        out.status.success(),
        "ktv {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A 32x32 crop of a bundled fixture.
fn crop(rel: &str, dir: &Path, name: &str) -> PathBuf {
    let src = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(rel);
    let img = load(&src).unwrap();
    let c = img.channels();
    let mut data = Vec::with_capacity(32 * 32 * c);
    for y in 100..132 {
        for x in 100..132 {
            for ch in 0..c {
                data.push(img.sample(x, y, ch));
            }
        }
    }
    let path = dir.join(name);
    save(&path, &Image::new(32, 32, c, data).unwrap()).unwrap();
    path
}

fn setup() -> (TempDir, PathBuf, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let clean = crop("gray/camera.pgm", dir.path(), "clean.pgm");
    let noisy = dir.path().join("noisy.pgm");
    ok(&[
        "noise",
        s(&clean),
        s(&noisy),
        "--sigma",
        "20",
        "--seed",
        "3",
    ]);
    (dir, clean, noisy)
}

#[test]
fn unit_degree_polynomial_matches_gtv() {
    let (dir, _, noisy) = setup();
    let a = dir.path().join("a.pgm");
    let b = dir.path().join("b.pgm");
    ok(&["denoise", s(&noisy), s(&a), "--method", "gtv"]);
    ok(&[
        "denoise",
        s(&noisy),
        s(&b),
        "--method",
        "pk-gtv",
        "--degree",
        "1.0",
        "--couple-level",
        "1",
    ]);
    assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
}

#[test]
fn reference_prints_one_psnr_line() {
    let (dir, clean, noisy) = setup();
    let out_img = dir.path().join("out.pgm");
    let diag = dir.path().join("diag.csv");
    let out = ok(&[
        "denoise",
        "--method",
        "gk-gtv",
        "--delta",
        "0.5",
        "--lambda",
        "10",
        "--iters",
        "50",
        s(&noisy),
        s(&out_img),
        "--ref",
        s(&clean),
        "--diagnostics",
        s(&diag),
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "{text}");
    assert!(lines[0].starts_with("PSNR ") && lines[0].ends_with(" dB"));
    let diag = fs::read_to_string(diag).unwrap();
    assert_eq!(diag.lines().count(), 51);
}

#[test]
fn config_errors_exit_with_two() {
    let (dir, _, noisy) = setup();
    let out_img = dir.path().join("out.pgm");
    let out = ktv(&["denoise", s(&noisy), s(&out_img), "--method", "gk-gtv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert!(!out_img.exists());

    let out = ktv(&["denoise", s(&noisy), s(&out_img), "--method", "nope"]);
    assert_eq!(out.status.code(), Some(2));

    let missing = dir.path().join("missing.pgm");
    let out = ktv(&["denoise", s(&missing), s(&out_img)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn enhance_exports_kernel_images() {
    let dir = tempfile::tempdir().unwrap();
    let black = dir.path().join("black.pgm");
    save(&black, &Image::constant(8, 8, PixelVec::gray(0.0))).unwrap();
    let neg = dir.path().join("neg.pgm");
    ok(&[
        "enhance",
        s(&black),
        s(&neg),
        "--method",
        "gk-gtv",
        "--delta",
        "0.5",
        "--couple-level",
        "0",
    ]);
    assert!(load(&neg).unwrap().data().iter().all(|&v| v == 0.0));

    let clean = crop("gray/coffee.pgm", dir.path(), "c.pgm");
    let same = dir.path().join("same.pgm");
    ok(&[
        "enhance",
        s(&clean),
        s(&same),
        "--method",
        "pk-gtv",
        "--degree",
        "1",
        "--couple-level",
        "1",
        "--iters",
        "0",
    ]);
    assert_eq!(fs::read(&clean).unwrap(), fs::read(&same).unwrap());
}

#[test]
fn enhance_picks_the_lowest_score() {
    let dir = tempfile::tempdir().unwrap();
    let clean = crop("gray/coffee.pgm", dir.path(), "c.pgm");
    let scores = dir.path().join("scores.csv");
    fs::write(&scores, "id,score\n0.3,3.1\n0.5,2.9\n").unwrap();
    let picked = dir.path().join("picked.pgm");
    let out = ok(&[
        "enhance",
        s(&clean),
        s(&picked),
        "--method",
        "gk-gtv",
        "--scores",
        s(&scores),
        "--iters",
        "0",
    ]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("selected parameter 0.5"));
    let direct = dir.path().join("direct.pgm");
    ok(&[
        "enhance",
        s(&clean),
        s(&direct),
        "--method",
        "gk-gtv",
        "--delta",
        "0.5",
        "--iters",
        "0",
    ]);
    assert_eq!(fs::read(picked).unwrap(), fs::read(direct).unwrap());

    let cands = dir.path().join("cands");
    let out_img = dir.path().join("o.pgm");
    ok(&[
        "enhance",
        s(&clean),
        s(&out_img),
        "--method",
        "pk-gtv",
        "--degree",
        "1.5",
        "--iters",
        "0",
        "--candidates-dir",
        s(&cands),
        "--grid",
        "1.1,1.2",
    ]);
    assert!(cands.join("1.1.pgm").exists() && cands.join("1.2.pgm").exists());
}

#[test]
fn sweep_emits_one_row_per_parameter() {
    // the polynomial trend needs mostly mid-to-bright content, so use the whole image
    let dir = tempfile::tempdir().unwrap();
    let clean = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/gray/camera.pgm");
    for (family, increasing) in [("polynomial", true), ("gaussian", false)] {
        let csv = dir.path().join(format!("{family}.csv"));
        ok(&[
            "sweep",
            s(&clean),
            "--sigma",
            "20",
            "--family",
            family,
            "--iters",
            "1",
            "--out",
            s(&csv),
        ]);
        let text = fs::read_to_string(&csv).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("param,ratio,psnr_db"));
        let ratios: Vec<f64> = lines
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(ratios.len(), 10);
        for w in ratios.windows(2) {
            assert!(
                if increasing { w[1] > w[0] } else { w[1] < w[0] },
                "{family}: {ratios:?}"
            );
        }
    }
}

#[test]
fn bench_table_has_expected_shape_and_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let images = dir.path().join("images");
    fs::create_dir(&images).unwrap();
    crop("gray/camera.pgm", &images, "camera.pgm");
    crop("gray/coffee.pgm", &images, "coffee.pgm");
    let run = |name: &str| {
        let csv = dir.path().join(name);
        ok(&["bench", s(&images), "--iters", "5", "--out", s(&csv)]);
        fs::read_to_string(csv).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(first, run("b.csv"));
    let lines: Vec<&str> = first.lines().collect();
    assert_eq!(
        lines[0],
        "image,sigma,method,param,psnr_db,iters,wall_ms,best"
    );
    assert_eq!(lines.len(), 1 + 2 * 2 * 6);
    for group in lines[1..].chunks(6) {
        assert!(group.iter().any(|l| l.ends_with(",*")));
    }
}

#[test]
fn help_documents_the_noise_convention() {
    for sub in [
        vec!["--help"],
        vec!["denoise", "--help"],
        vec!["enhance", "--help"],
        vec!["noise", "--help"],
        vec!["sweep", "--help"],
        vec!["bench", "--help"],
    ] {
        let out = ok(&sub);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("1 + n"), "{sub:?} help lacks the noise model");
    }
}

#[test]
fn noise_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let clean = crop("color/rocket.ppm", dir.path(), "r.ppm");
    let a = dir.path().join("a.ppm");
    let b = dir.path().join("b.ppm");
    ok(&["noise", s(&clean), s(&a), "--sigma", "30", "--seed", "9"]);
    ok(&["noise", s(&clean), s(&b), "--sigma", "30", "--seed", "9"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&clean).unwrap());
}
