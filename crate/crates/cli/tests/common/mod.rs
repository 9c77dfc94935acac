#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn wtgv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wtgv")).args(args).output().expect("failed to launch wtgv")
}

/// Runs the binary and panics with its stderr unless it exits with 0.
pub fn ok(args: &[&str]) -> String {
    let out = wtgv(args);
    assert!(
        out.status.success(),
        "wtgv {args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn code(args: &[&str]) -> i32 {
    wtgv(args).status.code().expect("terminated by signal")
}

pub fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}
