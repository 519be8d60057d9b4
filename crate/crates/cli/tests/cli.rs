mod support;

use std::fs;

use support::{build, netmo, ok, T1_EDGES};

#[test]
fn build_writes_network_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("in.csv"), T1_EDGES).unwrap();
    let out = ok(dir, &["import-edges", dir.join("in.csv").to_str().unwrap()]);
    assert_eq!(out, "imported 3 edges\n");
    let out = ok(dir, &["build-network"]);
    assert_eq!(out, "nodes 4 sections 3 routes 2 junctions 1\n");
    for f in ["nodes.csv", "sections.csv", "routes.csv", "junctions.csv", "edges.csv"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let out = ok(dir, &["build-network", "--route-key", "per_section"]);
    assert_eq!(out, "nodes 4 sections 3 routes 3 junctions 3\n");
}

#[test]
fn queries_on_the_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build(dir, T1_EDGES);
    assert_eq!(ok(dir, &["query", "network_distance(gpoint(1, 100), gpoint(2, 200))"]), "700.0\n");
    assert_eq!(
        ok(dir, &["query", "shortest_path(gpoint(1, 100), gpoint(2, 200))"]),
        "GLINE(1,1,100.000,600.000,0,0)\nGLINE(1,2,0.000,200.000,0,0)\n"
    );
    assert_eq!(ok(dir, &["query", "length(1)"]), "1000.0\n");
    assert_eq!(ok(dir, &["query", "locate_point(2, 250)"]), "POINT(600 250)\n");
}

#[test]
fn restrictions_file_blocks_turns() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build(dir, T1_EDGES);
    let rules = dir.join("rules.csv");
    fs::write(&rules, "node_id,from_route,from_dir,to_route,to_dir,allow\n2,1,up,2,up,0\n2,1,down,2,up,0\n").unwrap();
    ok(dir, &["build-network", "--restrictions", rules.to_str().unwrap()]);
    let out = netmo(dir, &["query", "network_distance(gpoint(1, 100), gpoint(2, 200))"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no turn-legal path"));
}

#[test]
fn generate_and_templates() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build(dir, &support::grid_edges(6, 100.0));
    let out = ok(dir, &["generate", "--periods", "2", "--interval", "25", "--per-period", "3", "--seed", "9"]);
    assert!(out.starts_with("objects 6 units "), "{out}");
    let visited = ok(dir, &["visited", "--moid", "1002"]);
    assert!(visited.lines().all(|l| l.starts_with("GLINE(1,") && l.ends_with(",1002)")), "{visited}");
    let counts = ok(dir, &["count-by-route", "--min", "0"]);
    let total: usize = counts.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(counts.lines().next(), Some("routeid,name,count"));
    assert_eq!(total, 6);
    let ids = ok(
        dir,
        &["passed-through", "--gline", "Row0", "--from", "2011-01-21T00:00:00Z", "--to", "2011-01-22T00:00:00Z"],
    );
    assert!(ids.trim().is_empty() || ids.trim().split(", ").all(|s| s.parse::<i64>().is_ok()), "{ids}");
    assert!(ok(dir, &["audit"]).starts_with("ok: 0 gpoints, 0 glines, 6 objects"));

    let out_dir = dir.join("exported");
    ok(dir, &["export", "--what", "samples", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(fs::read(out_dir.join("samples.csv")).unwrap(), fs::read(dir.join("samples.csv")).unwrap());
}

#[test]
fn named_records() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    build(dir, T1_EDGES);
    assert_eq!(ok(dir, &["add-gline", "--name", "Chamran", "--interval", "1:0:100", "--interval", "2:0:50:-1"]), "gline 1\n");
    assert_eq!(ok(dir, &["add-gpoint", "--name", "depot", "--rid", "2", "--measure", "40", "--side", "-1"]), "gpoint 1\n");
    assert_eq!(ok(dir, &["query", "size(gline_named(\"Chamran\"))"]), "150.0\n");
    assert_eq!(ok(dir, &["query", "gpoint_named(\"depot\")"]), "GPOINT(1,2,40.000,-1)\n");
    assert_eq!(netmo(dir, &["add-gline", "--name", "x", "--interval", "1:0:2000"]).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let code = |args: &[&str]| netmo(dir, args).status.code();
    assert_eq!(code(&["--help"]), Some(0));
    assert_eq!(code(&["no-such-command"]), Some(1));
    assert_eq!(code(&["generate", "--periods", "x"]), Some(1));
    assert_eq!(code(&["query", "size("]), Some(1));
    assert_eq!(code(&["add-gline", "--name", "x", "--interval", "1:2"]), Some(1));
    assert_eq!(code(&["build-network"]), Some(2));
    assert_eq!(code(&["query", "length(1)"]), Some(2));
    assert_eq!(code(&["import-edges", "missing.csv"]), Some(2));
    fs::write(dir.join("bad.csv"), "name,kind,wkt\nA,3,\"LINESTRING(0 0, 1 0)\"\n").unwrap();
    let out = netmo(dir, &["import-edges", dir.join("bad.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
}
