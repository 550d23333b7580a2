use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

fn frechet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frechet"))
        .current_dir(dir)
        .env_remove("FRECHET_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest_hash(dir: &Path) -> String {
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    m["content_hash"].as_str().unwrap().to_string()
}

fn write_losses(path: &Path, f: impl Fn(usize) -> f64, estimators: &[&str]) {
    let mut s = String::from("estimator,n,replicate,loss,skipped\n");
    for n in [50usize, 100, 200, 400, 800] {
        for r in 0..10 {
            for e in estimators {
                s.push_str(&format!(
                    "{e},{n},{r},{:e},0\n",
                    f(n) * (1.0 + r as f64 * 0.01)
                ));
            }
        }
    }
    fs::write(path, s).unwrap();
}

#[test]
fn simulate_minimal_config() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "[sim]\nn = 50\n").unwrap();
    let o = frechet(tmp.path(), &["simulate", "-c", "c.toml", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(tmp.path().join("a/dataset.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.iter().filter(|h| h.starts_with('x')).count(), 5);
    assert_eq!(lines.count(), 50);

    let o = frechet(tmp.path(), &["simulate", "-c", "c.toml", "--out", "b"]);
    assert!(o.status.success());
    assert_eq!(
        manifest_hash(&tmp.path().join("a")),
        manifest_hash(&tmp.path().join("b"))
    );
    let o = frechet(
        tmp.path(),
        &["simulate", "-c", "c.toml", "--out", "c", "--seed", "99"],
    );
    assert!(o.status.success());
    assert_ne!(
        manifest_hash(&tmp.path().join("a")),
        manifest_hash(&tmp.path().join("c"))
    );
}

#[test]
fn invalid_value_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("c.toml"), "[sim]\nv1 = -1.0\n").unwrap();
    let o = frechet(tmp.path(), &["simulate", "-c", "c.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("v1"), "{}", stderr(&o));

    let o = frechet(tmp.path(), &["simulate", "--set", "sim.q=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("q"));
}

#[test]
fn seed_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |out: &str, env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_frechet"));
        cmd.current_dir(tmp.path()).env_remove("FRECHET_SEED");
        if let Some(v) = env {
            cmd.env("FRECHET_SEED", v);
        }
        let o = cmd
            .args(["simulate", "--set", "sim.n=20", "--out", out])
            .args(extra)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(tmp.path().join(out).join("dataset.csv")).unwrap()
    };
    let env5 = run("e5", Some("5"), &[]);
    let flag5 = run("f5", None, &["--seed", "5"]);
    let env_flag = run("ef", Some("6"), &["--seed", "5"]);
    let plain = run("p", None, &[]);
    assert_eq!(env5, flag5);
    assert_eq!(env_flag, flag5);
    assert_ne!(plain, env5);
}

#[test]
fn unwritable_output_fails() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let o = frechet(tmp.path(), &["simulate", "--out", "blocker/sub"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn tiny_sweep_is_fast_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let o = frechet(
        tmp.path(),
        &[
            "sweep",
            "--set",
            "sweep.n_grid=[50]",
            "--set",
            "sweep.replicates=1",
            "--set",
            "sweep.estimators=[\"GFR\"]",
            "--set",
            "sweep.truth_draws=2000",
            "--out",
            "s",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let out = tmp.path().join("s");
    for f in ["results.csv", "summary.json", "plot.svg", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
}

#[test]
fn rate_check_on_power_law_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    write_losses(&tmp.path().join("inv_n.csv"), |n| 3.0 / n as f64, &["MGFR"]);
    let o = frechet(
        tmp.path(),
        &["rate-check", "--results", "inv_n.csv", "--out", "r"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));

    write_losses(&tmp.path().join("flat.csv"), |_| 0.3, &["MGFR"]);
    let o = frechet(
        tmp.path(),
        &["rate-check", "--results", "flat.csv", "--out", "r"],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn report_ranks_estimators() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = String::from("estimator,n,replicate,loss,skipped\n");
    for r in 0..5 {
        s.push_str(&format!(
            "GFR,100,{r},0.3,0\nMGFR,100,{r},0.2,0\nDMGFR,100,{r},0.1,0\n"
        ));
    }
    fs::write(tmp.path().join("res.csv"), s).unwrap();
    let o = frechet(
        tmp.path(),
        &["report", "--results", "res.csv", "--out", "r"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout).into_owned();
    let ranking = table.split("rank").nth(1).unwrap();
    let first = ranking.lines().nth(1).unwrap();
    assert!(first.contains("DMGFR"), "{table}");
    assert_eq!(
        fs::read_to_string(tmp.path().join("r/report.txt")).unwrap(),
        table
    );
}

#[test]
#[ignore = "fails for the literal estimators: GFR ranks first on noisy collinear data"]
fn report_on_noisy_collinear_data_ranks_dmgfr_first() {
    let tmp = tempfile::tempdir().unwrap();
    let o = frechet(
        tmp.path(),
        &[
            "report",
            "--set",
            "sweep.n_grid=[200]",
            "--set",
            "sweep.replicates=30",
            "--set",
            "sweep.noise_y=0.5",
            "--set",
            "sweep.collinear=[[0, 1]]",
            "--set",
            "sweep.jitter=1e-3",
            "--out",
            "r",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout).into_owned();
    let first = table
        .split("rank")
        .nth(1)
        .unwrap()
        .lines()
        .nth(1)
        .unwrap()
        .to_string();
    assert!(first.contains("DMGFR"), "{table}");
}

#[test]
fn plot_contract() {
    let tmp = tempfile::tempdir().unwrap();
    write_losses(
        &tmp.path().join("res.csv"),
        |n| 1.0 / n as f64,
        &["GFR", "MGFR", "DMGFR"],
    );
    let o = frechet(tmp.path(), &["plot", "--results", "res.csv", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(tmp.path().join("a/plot.svg")).unwrap();
    assert_eq!(svg.matches("class=\"series\"").count(), 3);
    for e in ["GFR", "MGFR", "DMGFR"] {
        assert!(svg.contains(&format!(">{e}</text>")));
    }
    let o = frechet(tmp.path(), &["plot", "--results", "res.csv", "--out", "b"]);
    assert!(o.status.success());
    assert_eq!(
        svg,
        fs::read_to_string(tmp.path().join("b/plot.svg")).unwrap()
    );
    let o = frechet(
        tmp.path(),
        &["plot", "--log-axes", "--results", "res.csv", "--out", "c"],
    );
    assert!(o.status.success());
    assert_ne!(
        svg,
        fs::read_to_string(tmp.path().join("c/plot.svg")).unwrap()
    );

    fs::write(tmp.path().join("empty.csv"), "").unwrap();
    let o = frechet(tmp.path(), &["plot", "--results", "empty.csv"]);
    assert_ne!(o.status.code(), Some(0));

    fs::write(
        tmp.path().join("bad.csv"),
        "estimator,n,replicate,skipped\nGFR,50,0,0\n",
    )
    .unwrap();
    let o = frechet(tmp.path(), &["plot", "--results", "bad.csv"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("loss"), "{}", stderr(&o));
}

#[test]
fn fit_on_simulated_and_saved_data() {
    let tmp = tempfile::tempdir().unwrap();
    let o = frechet(
        tmp.path(),
        &[
            "fit",
            "--set",
            "sim.n=60",
            "--set",
            "fit.estimator=\"MGFR\"",
            "--out",
            "f",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("in-sample loss"));
    let fits = fs::read_to_string(tmp.path().join("f/fits.csv")).unwrap();
    assert_eq!(fits.lines().count(), 61);

    let o = frechet(tmp.path(), &["simulate", "--set", "sim.n=40", "--out", "d"]);
    assert!(o.status.success());
    for metric in ["quantile-wasserstein", "bures", "sphere"] {
        let o = frechet(
            tmp.path(),
            &[
                "fit",
                "--set",
                "fit.data=\"d/dataset.csv\"",
                "--set",
                &format!("fit.metric=\"{metric}\""),
                "--out",
                "g",
            ],
        );
        assert!(o.status.success(), "{metric}: {}", stderr(&o));
        assert_eq!(
            fs::read_to_string(tmp.path().join("g/fits.csv"))
                .unwrap()
                .lines()
                .count(),
            41
        );
    }
}

#[test]
fn annotated_example_config_is_valid() {
    let example = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../config/example.toml");
    let text = fs::read_to_string(example).unwrap();
    frechet_cli::resolve(&text, None, &frechet_cli::Overrides::default()).unwrap();
}
