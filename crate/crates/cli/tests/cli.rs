use std::fs;
use std::process::{Command, Output};

fn ukh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ukh")).args(args).env_remove("UKH_THREADS").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn trefoil_standard_has_four_free_and_one_two_torsion() {
    let out = stdout(&ukh(&["homology", "--link", "trefoil", "--preset", "standard"]));
    let groups: Vec<&str> = out.lines().filter(|l| l.starts_with("h=")).collect();
    assert_eq!(groups.len(), 5, "{out}");
    assert_eq!(groups.iter().filter(|l| l.ends_with(": Z")).count(), 4);
    assert!(out.contains("h=3 q=7: Z/2"), "{out}");
}

#[test]
fn trefoil_json_matches_text() {
    let out = stdout(&ukh(&["--format", "json", "homology", "--link", "trefoil"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let entries = v["homology"]["entries"].as_array().unwrap();
    let free: u64 = entries.iter().map(|e| e["free"].as_u64().unwrap()).sum();
    let torsion: Vec<_> = entries.iter().flat_map(|e| e["torsion"].as_array().unwrap().clone()).collect();
    assert_eq!(free, 4);
    assert_eq!(torsion, vec![serde_json::json!(2)]);
}

#[test]
fn unknot_lee_has_rank_two() {
    let out = stdout(&ukh(&["--format", "json", "homology", "--pd", "U", "--preset", "lee"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let free: u64 = v["homology"]["entries"].as_array().unwrap().iter().map(|e| e["free"].as_u64().unwrap()).sum();
    assert_eq!(free, 2);
    assert_eq!(v["ring"], "Q");
}

#[test]
fn malformed_pd_exits_two() {
    let o = ukh(&["homology", "--pd", "PD[X[1,1,2,2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_preset_and_link_exit_two() {
    assert_eq!(ukh(&["homology", "--link", "trefoil", "--preset", "bogus"]).status.code(), Some(2));
    assert_eq!(ukh(&["homology", "--link", "no_such_knot"]).status.code(), Some(2));
    assert_eq!(ukh(&["homology", "--link", "trefoil", "--preset", "f_h"]).status.code(), Some(2));
    assert_eq!(ukh(&["homology", "--link", "trefoil", "--pd", "U"]).status.code(), Some(2));
}

#[test]
fn jones_of_trefoil() {
    assert_eq!(stdout(&ukh(&["jones", "--link", "trefoil"])).trim(), "q + q^3 + q^5 - q^9");
}

#[test]
fn genus_two_cap_reduces_to_h_squared() {
    assert_eq!(stdout(&ukh(&["surface", "--ring", "ZH", "S(g=2;in0)"])).trim(), "H^2 * S(g=0;in0)");
    assert_eq!(stdout(&ukh(&["surface", "--ring", "ZhalfT", "S(g=2;in0)"])).trim(), "T * S(g=0;in0)");
    assert_eq!(ukh(&["surface", "S(g=2;in0"]).status.code(), Some(2));
}

#[test]
fn kinked_unknot_reduces_to_one_generator() {
    let out = stdout(&ukh(&["--format", "json", "reduce", "--link", "unknot_kink"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let gens: usize = v["degrees"].as_array().unwrap().iter().map(|d| d["objects"].as_array().unwrap().len()).sum();
    assert_eq!(gens, 1);
    assert_eq!(v["ring"], "Z[H]");
}

#[test]
fn output_independent_of_thread_count() {
    let run = |t: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_ukh"))
            .args(["--format", "json", "reduce", "--link", "t(3,5)"])
            .env("UKH_THREADS", t)
            .output()
            .unwrap();
        stdout(&o)
    };
    let one = run("1");
    assert_eq!(one, run("3"));
    let h1 = stdout(&ukh(&["--threads", "1", "homology", "--link", "figure8", "--preset", "f_h(H=2)"]));
    let h4 = stdout(&ukh(&["--threads", "4", "homology", "--link", "figure8", "--preset", "f_h(H=2)"]));
    assert_eq!(h1, h4);
}

#[test]
fn basepoint_choice_does_not_change_homology() {
    let a = stdout(&ukh(&["homology", "--link", "hopf_pos", "--preset", "f_h(H=1)"]));
    let b = stdout(&ukh(&["homology", "--link", "hopf_pos", "--preset", "f_h(H=1)", "--basepoint", "2"]));
    assert_eq!(a, b);
    assert_eq!(ukh(&["homology", "--link", "hopf_pos", "--basepoint", "99"]).status.code(), Some(2));
}

#[test]
fn file_input_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let pd = dir.path().join("trefoil.pd");
    fs::write(&pd, "PD[X[1,5,2,4],X[3,1,4,6],X[5,3,6,2]]\n").unwrap();
    let out = dir.path().join("jones.txt");
    let o = ukh(&["jones", "--file", pd.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(stdout(&o).is_empty());
    let j = fs::read_to_string(&out).unwrap();
    let j = j.trim();
    assert!(j == "q + q^3 + q^5 - q^9" || j == "q^-1 + q^-3 + q^-5 - q^-9", "{j}");
}

#[test]
fn custom_promotion_file_matches_preset() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("fh.json");
    fs::write(&f, r#"{"ring":"Z[H]","H":[["-H","0"],["2","H"]],"q":[1,-1]}"#).unwrap();
    let custom = stdout(&ukh(&["homology", "--link", "trefoil", "--promotion", f.to_str().unwrap(), "--set", "H=2"]));
    let preset = stdout(&ukh(&["homology", "--link", "trefoil", "--preset", "f_h(H=2)"]));
    let body = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&custom), body(&preset));
    assert_eq!(ukh(&["homology", "--link", "trefoil", "--promotion", f.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn bench_reports_agreement() {
    let out = stdout(&ukh(&["--format", "json", "bench", "--link", "trefoil", "--runs", "1"]));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["agree"], true);
    assert_eq!(ukh(&["bench", "--link", "trefoil", "--preset", "genus_le(2)"]).status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let out = stdout(&ukh(&["selftest"]));
    assert!(!out.contains("FAIL"), "{out}");
    assert!(out.lines().count() >= 6);
}
