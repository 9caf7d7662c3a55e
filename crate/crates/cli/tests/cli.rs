use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::{json, Value};

/// Runs the binary on a whitespace-separated argument line.
fn aglab(line: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aglab"))
        .args(line.split_whitespace())
        .env_remove("AGLAB_SEED")
        .output()
        .expect("binary runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).expect("every line is JSON"))
        .collect()
}

fn summary(out: &Output) -> Value {
    lines(out).pop().expect("summary line")["summary"].clone()
}

fn document(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("one JSON document")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("aglab-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn search_finds_the_three_stars_of_3_by_2() {
    let out = aglab("search --m 3 --n 2 --t 1 --all");
    assert_eq!(out.status.code(), Some(0));
    let first = &lines(&out)[0];
    assert_eq!(first["witness"]["optimum"], 3);
    assert_eq!(first["witness"]["all_stars"], true);
    assert!(first["config"].is_object());
}

#[test]
fn search_output_ignores_worker_count() {
    let a = aglab("search --m 3 --n 3 --t 2 --workers 1");
    let b = aglab("search --m 3 --n 3 --t 2 --workers 4");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn exhaustive_kk_counts_every_subfamily() {
    let small = aglab("check kk --m 2 --n 2 --l 1 --exhaustive");
    assert_eq!(small.status.code(), Some(0));
    assert_eq!(summary(&small)["items"], 16);
    let large = aglab("check kk --m 2 --n 4 --l 1 --exhaustive");
    assert_eq!(large.status.code(), Some(0));
    assert_eq!(summary(&large)["items"], 65536);
    assert_eq!(summary(&large)["failed"], 0);
}

#[test]
fn hoffman_is_tight_on_singletons() {
    let out = aglab("check hoffman --m 3 --n 1 --exhaustive");
    assert_eq!(out.status.code(), Some(0));
    assert!(summary(&out)["exact_equalities"].as_u64().unwrap() >= 1);
}

#[test]
fn same_seed_same_bytes() {
    let run = |seed: u64| {
        aglab(&format!(
            "check compress --m 3 --n 2 --trials 30 --verbose --seed {seed}"
        ))
    };
    assert_eq!(run(7).stdout, run(7).stdout);
    assert_ne!(run(7).stdout, run(8).stdout);
}

#[test]
fn seed_falls_back_to_the_environment() {
    let line = "check kk --m 3 --n 2 --l 1 --trials 5 --verbose";
    let env = Command::new(env!("CARGO_BIN_EXE_aglab"))
        .args(line.split_whitespace())
        .env("AGLAB_SEED", "11")
        .output()
        .unwrap();
    let flag = aglab(&format!("{line} --seed 11"));
    assert_eq!(env.stdout, flag.stdout);
    assert_eq!(lines(&env)[0]["config"]["seed"], 11);
}

#[test]
fn bad_input_exits_with_two() {
    let bad = scratch("bad.json");
    fs::write(&bad, "{\"m\": 3").unwrap();
    let out = aglab(&format!("check kk --l 1 --input {}", bad.display()));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("aglab:"));
    assert_eq!(aglab("check kk --m 1 --n 2 --l 1").status.code(), Some(2));
    assert_eq!(
        aglab("check kk --m 3 --n 3 --l 1 --exhaustive")
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn violations_exit_with_one() {
    // Two parts whose codes meet in a 2-petal sunflower with empty core.
    let sys = scratch("sst.json");
    fs::write(
        &sys,
        r#"{"m":3,"n":3,"parts":[{"Z":[1],"x":[1],"codes":[[1,1,1],[1,2,2]]},{"Z":[2],"x":[3],"codes":[[2,3,1]]}]}"#,
    )
    .unwrap();
    let out = aglab(&format!("check sst --input {} --s 2 --t 1", sys.display()));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(lines(&out)[0]["pass"], false);
}

#[test]
fn star_and_conversions_round_trip() {
    let star = document(&aglab("star --m 3 --n 3 --coords 1,3 --values 2,1"));
    let codes = star["codes"].as_array().unwrap();
    assert_eq!(codes.len(), 3);
    assert!(codes.iter().all(|c| c[0] == 2 && c[2] == 1));

    let srt = aglab("srt --m 2 --n 4 --t 1 --r 1");
    let family = scratch("srt.json");
    fs::write(&family, &srt.stdout).unwrap();
    let cube = aglab(&format!("convert --input {} --to cube", family.display()));
    let cube_path = scratch("srt-cube.json");
    fs::write(&cube_path, &cube.stdout).unwrap();
    let back = aglab(&format!(
        "convert --input {} --to family",
        cube_path.display()
    ));
    assert_eq!(document(&srt), document(&back));

    let sets = document(&aglab(&format!(
        "convert --input {} --to sets",
        family.display()
    )));
    assert_eq!(sets["ground"], 8);
    assert_eq!(sets["sets"][0], json!([1, 3, 5, 7]));
}

#[test]
fn dimacs_export_counts_complement_edges() {
    let path = scratch("g.dimacs");
    let out = aglab(&format!(
        "search --m 2 --n 2 --t 1 --dimacs {}",
        path.display()
    ));
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    // In [2]^2 a code conflicts (agrees nowhere) only with its complement,
    // so the complement graph has C(4,2) - 2 edges.
    assert_eq!(
        text.lines().find(|l| l.starts_with("p ")),
        Some("p edge 4 4")
    );
    assert_eq!(text.lines().filter(|l| l.starts_with("e ")).count(), 4);
}

#[test]
fn every_check_runs_on_a_small_box() {
    let runs = [
        "spread --m 3 --n 2 --trials 5",
        "check hyper --m 3 --n 2 --trials 5",
        "check stab-interp --m 3 --n 2 --trials 5",
        "check gluing-boost --m 4 --n 2 --trials 3 --s 2",
        "check boost-trace --m 4 --n 2 --trials 3",
        "check avoid --m 3 --n 2 --trials 5 --forbid 1:2",
        "check restriction-prob --m 3 --n 2 --trials 5 --h 1 --p 1/2",
        "check shadows-disjoint --m 3 --n 3 --trials 2 --t 2 --max-pairs 20",
        "check unbalanced --m 2 --n 3 --trials 10",
        "check monotone-shift --n 4 --trials 10",
        "check sunflower --m 2 --n 3 --trials 10 --t 2",
        "check covering --m 3 --n 2 --full",
        "verify-theorem --m 3 --n 2 --t 1",
    ];
    for line in runs {
        let out = aglab(line);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{line}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert_eq!(lines(&out).last().unwrap()["pass"], true, "{line}");
    }
}

#[test]
fn avoid_on_the_full_box_is_tight() {
    let full = scratch("full.json");
    let codes: Vec<[u32; 2]> = (1..=4).flat_map(|a| (1..=4).map(move |b| [a, b])).collect();
    fs::write(&full, json!({ "m": 4, "n": 2, "codes": codes }).to_string()).unwrap();
    let out = aglab(&format!(
        "check avoid --input {} --forbid 1:1",
        full.display()
    ));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(lines(&out)[0]["witness"]["measure_after"], "3/4");

    // Seeded families that miss the size precondition count as unmet, not as errors.
    let batch = aglab("check avoid --m 4 --n 2 --forbid 1:1");
    assert_eq!(batch.status.code(), Some(0));
    assert!(summary(&batch)["hypotheses_unmet"].as_u64().unwrap() > 0);
    assert_eq!(
        aglab("check avoid --m 4 --n 2 --forbid 3:1").status.code(),
        Some(2)
    );
}
