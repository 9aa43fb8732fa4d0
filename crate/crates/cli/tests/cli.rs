use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;
use turbmax::incompressible::IncompressibleData;
use turbmax::io::{measure_to_json, write_data, write_measure};
use turbmax::selector::Model;
use turbmax::{
    brute_force_simplex, CandidateSet, DiscreteYoungMeasure, GrowthStructure, PhaseAtom, SpaceTimeGrid, SquaredNorm,
};

fn grid() -> SpaceTimeGrid {
    SpaceTimeGrid::new(1.0, 2, 8, 8, false).unwrap()
}

fn turbmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_turbmax")).args(args).env_remove("TURBMAX_THREADS").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn constant(v: [f64; 2]) -> DiscreteYoungMeasure {
    DiscreteYoungMeasure::from_fn(grid(), GrowthStructure::Quadratic, 2, |_, _| v.to_vec()).unwrap()
}

fn save(dir: &TempDir, name: &str, y: &DiscreteYoungMeasure) -> PathBuf {
    let p = dir.path().join(name);
    write_measure(&p, y).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_accepts_shear_flow_and_rejects_energy_excess() {
    let dir = TempDir::new().unwrap();
    let g = grid();
    let shear = DiscreteYoungMeasure::from_fn(g, GrowthStructure::Quadratic, 2, |_, x| vec![x[1].sin(), 0.0]).unwrap();
    let y = save(&dir, "shear.json", &shear);
    let data = dir.path().join("shear-data.json");
    write_data(&data, &Model::Incompressible(IncompressibleData::from_fn(&g, |x| vec![x[1].sin(), 0.0]).unwrap())).unwrap();
    let out = turbmax(&["check", s(&y), "--data", s(&data)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["passed"], true);

    let a = [0.6, -0.8];
    let mixture = DiscreteYoungMeasure::uniform(
        g,
        GrowthStructure::Quadratic,
        vec![PhaseAtom { z: a.to_vec(), w: 0.5 }, PhaseAtom { z: vec![-a[0], -a[1]], w: 0.5 }],
    )
    .unwrap();
    let y = save(&dir, "mixture.json", &mixture);
    let rest = dir.path().join("rest.json");
    write_data(&rest, &Model::Incompressible(IncompressibleData::from_fn(&g, |_| vec![0.0, 0.0]).unwrap())).unwrap();
    let out = turbmax(&["check", s(&y), "--data", s(&rest), "--out", s(&dir.path().join("report.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let r = &report["results"][0]["report"];
    assert_eq!(r["residuals_ok"], true);
    assert!(r["admissibility"]["worst_margin"].as_f64().unwrap() < 0.0);
    assert!(r["worst_test"]["label"].is_string());
}

#[test]
fn malformed_and_mismatched_inputs_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&measure_to_json(&constant([1.0, 0.0])).unwrap()).unwrap();
    v["background"][0]["w"] = serde_json::json!(0.9);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, v.to_string()).unwrap();
    let data = dir.path().join("data.json");
    write_data(&data, &Model::Incompressible(IncompressibleData::from_fn(&grid(), |_| vec![1.0, 0.0]).unwrap())).unwrap();
    let out = turbmax(&["check", s(&bad), "--data", s(&data)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let good = save(&dir, "good.json", &constant([1.0, 0.0]));
    assert_eq!(turbmax(&["check", s(&good), "--data", s(&data), "--model", "compressible"]).status.code(), Some(2));
    assert_eq!(turbmax(&["check", s(&good)]).status.code(), Some(2));
    assert_eq!(turbmax(&["check", s(&dir.path().join("missing.json")), "--data", s(&data)]).status.code(), Some(2));
    assert_eq!(turbmax(&["vf", s(&good), "--f", "bogus"]).status.code(), Some(2));
}

#[test]
fn select_reproduces_the_two_state_maximizer() {
    let dir = TempDir::new().unwrap();
    let a = save(&dir, "a.json", &constant([1.0, 0.0]));
    let b = save(&dir, "b.json", &constant([-1.0, 0.0]));
    let out = turbmax(&["select", s(&a), s(&b), "--f", "variance", "--restarts", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let theta: Vec<f64> = serde_json::from_value(v["theta"].clone()).unwrap();
    assert!((theta[0] - 0.5).abs() <= 1e-6 && (theta[1] - 0.5).abs() <= 1e-6);
    let expected = 0.25 * 4.0 * std::f64::consts::TAU.powi(2);
    assert!((v["value"].as_f64().unwrap() - expected).abs() <= 1e-8 * expected);
    assert_eq!(v["uniqueness"]["consistent"], true);
    assert_eq!(v["uniqueness"]["runs"], 5);

    let out = turbmax(&["select", s(&a)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["theta"], serde_json::json!([1.0]));
}

#[test]
fn select_matches_brute_force_on_three_candidates() {
    let dir = TempDir::new().unwrap();
    let g = grid();
    let ys: Vec<DiscreteYoungMeasure> = (0..3)
        .map(|k| {
            let k = k as f64;
            DiscreteYoungMeasure::from_fn(g, GrowthStructure::Quadratic, 2, |t, x| {
                vec![(x[0] + k).sin() + t, (k * x[1]).cos() - 0.5 * k]
            })
            .unwrap()
        })
        .collect();
    let paths: Vec<PathBuf> = ys.iter().enumerate().map(|(i, y)| save(&dir, &format!("c{i}.json"), y)).collect();
    let maximizer = dir.path().join("max.json");
    let out = turbmax(&["select", s(&paths[0]), s(&paths[1]), s(&paths[2]), "--f", "variance", "--maximizer", s(&maximizer)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let value = v["value"].as_f64().unwrap();
    let gap = v["gap"].as_f64().unwrap();
    let set = CandidateSet::abstract_set(ys).unwrap();
    let (_, brute) = brute_force_simplex(&set, &SquaredNorm::variance(), 60).unwrap();
    assert!(brute <= value + gap + 1e-10 * value.abs());
    assert!(value - brute <= 1e-2 * value.abs());

    let vf = turbmax(&["vf", s(&maximizer), "--f", "variance"]);
    let direct = json(&vf)[0]["value"].as_f64().unwrap();
    assert!((direct - value).abs() <= 1e-10 * value.abs());
}

#[test]
fn sweep_traces_the_parabola() {
    let dir = TempDir::new().unwrap();
    let a = save(&dir, "a.json", &constant([1.0, 0.5]));
    let b = save(&dir, "b.json", &constant([-0.5, 1.0]));
    let out = turbmax(&["sweep", s(&a), s(&b), "--samples", "11", "--f", "variance"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 11);
    let c = (1.5f64.powi(2) + 0.25) * std::f64::consts::TAU.powi(2);
    for &(t, v) in &rows {
        assert!((v - t * (1.0 - t) * c).abs() <= 1e-10 * c);
    }
    let best = rows.iter().cloned().fold((0.0, f64::NEG_INFINITY), |b, r| if r.1 > b.1 { r } else { b });
    assert_eq!(best.0, 0.5);

    let out = turbmax(&["sweep", s(&a), s(&a), "--samples", "5", "--f", "variance"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0")), "{text}");
}

#[test]
fn sweep_of_mixed_instance_is_concave() {
    let dir = TempDir::new().unwrap();
    let g = grid();
    let y1 = DiscreteYoungMeasure::uniform(
        g,
        GrowthStructure::Quadratic,
        vec![PhaseAtom { z: vec![1.0, 0.0], w: 0.3 }, PhaseAtom { z: vec![0.0, -2.0], w: 0.7 }],
    )
    .unwrap();
    let y2 = DiscreteYoungMeasure::from_fn(g, GrowthStructure::Quadratic, 2, |t, x| vec![x[0].cos(), t]).unwrap();
    let a = save(&dir, "a.json", &y1);
    let b = save(&dir, "b.json", &y2);
    let csv = dir.path().join("sweep.csv");
    assert_eq!(turbmax(&["sweep", s(&a), s(&b), "--samples", "21", "--out", s(&csv)]).status.code(), Some(0));
    let values: Vec<f64> = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    let scale = 1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(values.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] <= 1e-10 * scale));
}

#[test]
fn demo_reports_the_closed_form() {
    let out = turbmax(&["demo"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("tau* = 0.5\n"), "{text}");
    let value = |text: &str| -> f64 {
        let line = text.lines().find(|l| l.starts_with("value (computed)")).unwrap();
        line.rsplit(' ').next().unwrap().parse().unwrap()
    };
    let variance = value(&text);
    let expected = 0.25 * 4.0 * std::f64::consts::TAU.powi(2);
    assert!((variance - expected).abs() <= 1e-12 * expected);
    let energy = value(&String::from_utf8(turbmax(&["demo", "--f", "energy"]).stdout).unwrap());
    assert_eq!(variance, 2.0 * energy);

    let text = String::from_utf8(turbmax(&["demo", "--v1", "0.5,-1", "--v2", "0.5,-1"]).stdout).unwrap();
    assert!(text.contains("degenerate"));
    assert_eq!(value(&text), 0.0);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let g = grid();
    let ys: Vec<PathBuf> = (0..3)
        .map(|k| {
            let y = DiscreteYoungMeasure::from_fn(g, GrowthStructure::Quadratic, 2, |t, x| {
                let k = k as f64;
                vec![(1.0 + 0.3 * k) * ((k + 1.0) * x[0]).sin() + 0.2 * k, t * x[1].cos() - 0.1 * k * k]
            })
            .unwrap();
            save(&dir, &format!("y{k}.json"), &y)
        })
        .collect();
    let args = ["select", s(&ys[0]), s(&ys[1]), s(&ys[2]), "--restarts", "3"];
    let first = turbmax(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, turbmax(&args).stdout);
    let threaded = Command::new(env!("CARGO_BIN_EXE_turbmax")).args(args).env("TURBMAX_THREADS", "3").output().unwrap();
    assert_eq!(first.stdout, threaded.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_turbmax")).args(args).env("TURBMAX_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

