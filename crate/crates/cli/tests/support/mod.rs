#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

pub fn netmo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netmo"))
        .arg("--dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("netmo binary runs")
}

/// Runs a command that must succeed and returns its stdout.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = netmo(dir, args);
    assert!(
        out.status.success(),
        "netmo {args:?} exited with {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("utf-8 output")
}

/// `n × n` lattice with `spacing` meters between nodes. Every row is one
/// two-way route named `Row<i>`, every column one named `Col<j>`.
pub fn grid_edges(n: usize, spacing: f64) -> String {
    let mut s = String::from("name,kind,wkt\n");
    for i in 0..n {
        let y = i as f64 * spacing;
        for j in 0..n - 1 {
            let (x1, x2) = (j as f64 * spacing, (j + 1) as f64 * spacing);
            writeln!(s, "Row{i},2,\"LINESTRING({x1} {y}, {x2} {y})\"").unwrap();
        }
    }
    for j in 0..n {
        let x = j as f64 * spacing;
        for i in 0..n - 1 {
            let (y1, y2) = (i as f64 * spacing, (i + 1) as f64 * spacing);
            writeln!(s, "Col{j},2,\"LINESTRING({x} {y1}, {x} {y2})\"").unwrap();
        }
    }
    s
}

/// Two-way route A from (0,0) to (1000,0) in two pieces and route B from
/// (600,0) up to (600,500).
pub const T1_EDGES: &str = "name,kind,wkt
A,2,\"LINESTRING(0 0, 600 0)\"
A,2,\"LINESTRING(600 0, 1000 0)\"
B,2,\"LINESTRING(600 0, 600 500)\"
";

/// Imports `edges` and builds the network in `dir`.
pub fn build(dir: &Path, edges: &str) {
    fs::create_dir_all(dir).unwrap();
    let src = dir.join("input_edges.csv");
    fs::write(&src, edges).unwrap();
    ok(dir, &["import-edges", src.to_str().unwrap()]);
    ok(dir, &["build-network"]);
}
