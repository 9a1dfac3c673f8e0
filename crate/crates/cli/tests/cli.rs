use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seedcheck::trainer::{save_checkpoint, Checkpoint};
use seedcheck::{Model, ModelConfig};

fn seedcheck(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seedcheck"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL_COUNTS: &str = "6,6,4,4,3,3";

fn generate_small(cwd: &Path, out: &str) {
    let o = seedcheck(
        &[
            "generate",
            "--out",
            out,
            "--counts",
            SMALL_COUNTS,
            "--seed",
            "42",
            "--size",
            "32",
        ],
        cwd,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn help_lists_every_flag_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let expected: [(&str, &[&str]); 5] = [
        ("generate", &["--out", "--counts", "--seed", "--size"]),
        (
            "train",
            &[
                "--data",
                "--model",
                "--report",
                "--epochs",
                "--lr",
                "--batch",
                "--optimizer",
                "--size",
                "--augment",
                "--seed",
            ],
        ),
        ("eval", &["--model", "--data", "--report"]),
        ("predict", &["--model", "--image"]),
        (
            "inspect",
            &["--model", "--image", "--out", "--report", "--min-area"],
        ),
    ];
    for (cmd, flags) in expected {
        let o = seedcheck(&[cmd, "--help"], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}");
        let text = stdout(&o);
        for flag in flags {
            assert!(text.contains(flag), "{cmd} help lacks {flag}:\n{text}");
        }
        assert!(text.contains("default"), "{cmd} help shows no defaults");
    }
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        vec!["generate", "--bogus"],
        vec!["generate", "--out", "d"],
        vec!["train", "--data", "d"],
        vec!["generate", "--seed", "1", "--counts", "1,2,3"],
        vec!["frobnicate"],
    ] {
        let o = seedcheck(&args, tmp.path());
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn generate_is_deterministic_and_laid_out() {
    let tmp = tempfile::tempdir().unwrap();
    generate_small(tmp.path(), "a");
    generate_small(tmp.path(), "b");
    let a = tree_bytes(&tmp.path().join("a"));
    assert_eq!(a, tree_bytes(&tmp.path().join("b")));
    let pngs = a.iter().filter(|(p, _)| p.contains("normal")).count();
    assert_eq!(pngs, 26);
    assert_eq!(
        fs::read_dir(tmp.path().join("a/train/abnormal"))
            .unwrap()
            .count(),
        6
    );
    let manifest = fs::read_to_string(tmp.path().join("a/manifest.jsonl")).unwrap();
    assert_eq!(manifest.lines().count(), 27);
    assert!(tmp.path().join("a/scene.png").is_file());
}

#[test]
fn generate_zero_counts_creates_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let o = seedcheck(
        &[
            "generate",
            "--out",
            "z",
            "--counts",
            "0,0,0,0,0,0",
            "--seed",
            "1",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("generate images=0"));
    for split in ["train", "validate", "test"] {
        for class in ["normal", "abnormal"] {
            assert!(tmp.path().join("z").join(split).join(class).is_dir());
        }
    }
}

#[test]
fn eval_with_missing_model_is_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = seedcheck(
        &["eval", "--model", "nowhere.ckpt", "--data", "d"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("nowhere.ckpt"), "{}", stderr(&o));
}

#[test]
fn train_eval_predict_inspect_round() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate_small(dir, "data");

    let train_args = [
        "train", "--data", "data", "--model", "m.ckpt", "--report", "m.csv", "--epochs", "2",
        "--size", "16", "--batch", "4", "--seed", "3",
    ];
    let o = seedcheck(&train_args, dir);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = stdout(&o);
    assert_eq!(summary.lines().count(), 1);
    assert!(summary.starts_with("train epochs=2"), "{summary}");
    let metrics = fs::read_to_string(dir.join("m.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 3);

    // Same flags, same bytes.
    let again = [
        &train_args[..4],
        &["m2.ckpt", "--report", "m2.csv"],
        &train_args[7..],
    ]
    .concat();
    assert_eq!(seedcheck(&again, dir).status.code(), Some(0));
    assert_eq!(
        fs::read(dir.join("m.ckpt")).unwrap(),
        fs::read(dir.join("m2.ckpt")).unwrap()
    );
    assert_eq!(metrics, fs::read_to_string(dir.join("m2.csv")).unwrap());

    let o = seedcheck(
        &[
            "eval", "--model", "m.ckpt", "--data", "data", "--report", "r.json",
        ],
        dir,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("eval accuracy="));
    let report = fs::read_to_string(dir.join("r.json")).unwrap();
    assert!(report.contains("\"accuracy\""));

    let image = "data/test/normal/test_normal_0001.png";
    let o = seedcheck(&["predict", "--model", "m.ckpt", "--image", image], dir);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o);
    let fields: Vec<&str> = line.split_whitespace().collect();
    assert_eq!(fields.len(), 3, "{line}");
    assert_eq!(fields[0], image);
    assert_eq!(fields[1].len(), 5);
    assert!(fields[2] == "Normal" || fields[2] == "Abnormal");

    let o = seedcheck(
        &[
            "inspect",
            "--model",
            "m.ckpt",
            "--image",
            "data/scene.png",
            "--out",
            "a.png",
            "--report",
            "i.json",
        ],
        dir,
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stdout(&o).starts_with("inspect detections=25 "),
        "{}",
        stdout(&o)
    );
    assert!(dir.join("a.png").is_file());
    assert!(fs::read_to_string(dir.join("i.json"))
        .unwrap()
        .contains("Z-25"));
}

#[test]
fn zero_score_predicts_abnormal() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    generate_small(dir, "data");
    let mut model = Model::build(ModelConfig::with_size(16)).unwrap();
    model
        .params_mut()
        .get_mut("dense2.bias")
        .unwrap()
        .data_mut()[0] = -100.0;
    for w in model
        .params_mut()
        .get_mut("dense2.weight")
        .unwrap()
        .data_mut()
    {
        *w = 0.0;
    }
    save_checkpoint(
        &Checkpoint::from_model(&model, None, 0),
        &dir.join("z.ckpt"),
    )
    .unwrap();
    let image = "data/test/normal/test_normal_0001.png";
    let o = seedcheck(&["predict", "--model", "z.ckpt", "--image", image], dir);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), format!("{image} 0.000 Abnormal"));
}

#[test]
fn undecodable_image_is_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let model = Model::build(ModelConfig::with_size(16)).unwrap();
    save_checkpoint(
        &Checkpoint::from_model(&model, None, 0),
        &dir.join("m.ckpt"),
    )
    .unwrap();
    fs::write(dir.join("bad.png"), b"not an image").unwrap();
    let o = seedcheck(&["predict", "--model", "m.ckpt", "--image", "bad.png"], dir);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.png"));
    let o = seedcheck(
        &["predict", "--model", "m.ckpt", "--image", "gone.png"],
        dir,
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("gone.png"));
}
