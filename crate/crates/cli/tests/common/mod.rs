#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn sreds(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sreds")).args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Renders a dataset and returns its manifest path.
pub fn synth(dir: &Path, subjects: usize, per_subject: usize, seed: u64) -> PathBuf {
    let out = sreds(&[
        "synth",
        "--out",
        p(dir),
        "--subjects",
        &subjects.to_string(),
        "--images-per-subject",
        &per_subject.to_string(),
        "--seed",
        &seed.to_string(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir.join("manifest.csv")
}

/// Relative path -> bytes for every file under `dir`.
pub fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

pub fn data_rows(csv: &Path) -> Vec<String> {
    std::fs::read_to_string(csv)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_string)
        .collect()
}
