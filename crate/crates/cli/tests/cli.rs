use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_whittaker"))
}

fn scratch(name: &str) -> PathBuf {
    let d = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out-dir").arg(out).output().unwrap()
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn json(p: PathBuf) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

fn assert_json_error(o: &Output, code: i32, kind: &str) {
    assert_eq!(o.status.code(), Some(code), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], kind);
    assert!(v["message"].is_string());
}

/// Data rows of a CSV as floats, skipping the comment and header lines.
fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip_while(|l| l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn mode_table() {
    let d = scratch("mode");
    let o = run(&["mode", "--kappa", "0.1356"], &d);
    assert!(o.status.success());
    let csv = read(d.join("mode.csv"));
    assert!(csv.lines().next().unwrap().contains("kappa=1.3560000000000000e-1"));
    assert_eq!(csv.lines().nth(1), Some("x,re_w,im_w"));
    let r = rows(&csv);
    assert_eq!(r.len(), 2000);
    assert_eq!(r[0][0], 0.0);
    assert_eq!(r[1999][0], 100.0);
    let re = r.iter().fold(0.0f64, |m, v| m.max(v[1].abs()));
    let im = r.iter().fold(0.0f64, |m, v| m.max(v[2].abs()));
    assert!(re <= 1e-8 * im, "{re:e} {im:e}");
    // w(0) = 2iκ
    assert!((r[0][2] - 0.2712).abs() < 1e-8);
}

#[test]
fn mode_errors() {
    let d = scratch("mode_err");
    assert_json_error(&run(&["mode", "--kappa", "-1"], &d), 2, "domain");
    assert_json_error(&run(&["mode"], &d), 2, "domain");
    assert_json_error(&run(&["mode", "--kappa", "0.1", "--x-min", "5", "--x-max", "1"], &d), 2, "domain");
    let o = run(
        &["mode", "--kappa", "0.01", "--x-max", "5000", "--rel-tol", "1e-15", "--points", "20"],
        &d,
    );
    assert_json_error(&o, 3, "quadrature_non_convergence");
}

#[test]
fn usage_errors_are_json() {
    let o = bin().arg("bogus").output().unwrap();
    assert_json_error(&o, 2, "usage");
    let o = bin().args(["packet", "--energy-ev", "abc"]).output().unwrap();
    assert_json_error(&o, 2, "usage");
}

#[test]
fn packet_snapshots() {
    let d = scratch("packet");
    let o = run(&["packet", "--energy-ev", "1", "--spread-ev", "0.01"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(d.join("packet.json"));
    let snaps = v["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), 3);
    assert!((snaps[0]["norm_within_r_norm"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    let widths: Vec<f64> = snaps.iter().map(|s| s["delta_r_a0"].as_f64().unwrap()).collect();
    assert!(widths.windows(2).all(|w| w[1] >= w[0]), "{widths:?}");
    for s in snaps {
        let csv = read(d.join(s["file"].as_str().unwrap()));
        assert_eq!(csv.lines().nth(1), Some("r_a0,re_psi,im_psi,density"));
    }
    assert_json_error(&run(&["packet", "--energy-ev", "1", "--spread-ev", "-0.1"], &d), 2, "domain");
    assert_json_error(&run(&["packet", "--energy-ev", "1", "--spread-ev", "0"], &d), 2, "domain");
}

#[test]
fn characterize_short_packet() {
    let d = scratch("characterize");
    let o = run(&["characterize", "--energy-ev", "1", "--spread-ev", "6.6"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(d.join("characterize.json"));
    let dt = v["delta_t"].as_f64().unwrap();
    assert!((dt / 0.053 - 1.0).abs() < 0.15, "{dt}");
    assert!(v["fit_r2s"]["overlap"].as_f64().unwrap() > 0.95);
    let r = rows(&read(d.join("overlap.csv")));
    assert_eq!(r[0], vec![0.0, 1.0]);
}

#[test]
fn characterize_envelope() {
    let d = scratch("characterize_envelope");
    assert!(run(&["characterize", "--energy-ev", "200", "--spread-ev", "0.1"], &d).status.success());
    let v = json(d.join("characterize.json"));
    // Δr ≈ 2.471 / sqrt(ΔE) a0
    let dr = v["delta_r"].as_f64().unwrap();
    assert!((dr / (2.471 / 0.1f64.sqrt()) - 1.0).abs() < 0.05, "{dr}");
    assert!(v["envelope_error"].is_null());
    assert!(rows(&read(d.join("envelope.csv"))).len() >= 5);
}

#[test]
fn decay_curves() {
    let d = scratch("decay");
    let o = run(&["decay", "--energy-ev", "1", "--spread-ev", "0.1"], &d);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&read(d.join("decay.csv")));
    assert!(r.iter().filter(|v| v[0] == 0.0).all(|v| v[2] == 0.0));
    let t_max = r.last().unwrap()[0];
    let last: Vec<&Vec<f64>> = r.iter().filter(|v| v[0] == t_max).collect();
    let p2 = last.iter().find(|v| v[1] == 2.0).unwrap()[2];
    assert!(last.iter().all(|v| v[1] == 2.0 || v[2] < p2));
    let v = json(d.join("decay.json"));
    for key in ["E", "dE", "delta_t_fs", "gamma_avg_hz", "n_max"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let o = run(&["decay", "--energy-ev", "1", "--spread-ev", "0.1", "--tmax-fs", "-1"], &d);
    assert_json_error(&o, 2, "domain");
}

#[test]
fn table_cells() {
    let d = scratch("table");
    assert!(run(&["table1"], &d).status.success());
    let csv = read(d.join("table1.csv"));
    let cells: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(cells.len(), 20);
    for c in cells {
        let err: f64 = c.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err.abs() < 0.05, "{c}");
    }
}

#[test]
fn config_file_and_overrides() {
    let d = scratch("config");
    std::fs::create_dir_all(&d).unwrap();
    let cfg = d.join("run.ini");
    std::fs::write(&cfg, "# mode run\nkappa = 0.5\nx_max = 10\npoints = 11\n").unwrap();
    let cfg_s = cfg.to_str().unwrap();
    assert!(run(&["mode", "--config", cfg_s], &d).status.success());
    let r = rows(&read(d.join("mode.csv")));
    assert_eq!(r.len(), 11);
    assert_eq!(r[10][0], 10.0);
    assert!(run(&["mode", "--config", cfg_s, "--points", "21"], &d).status.success());
    assert_eq!(rows(&read(d.join("mode.csv"))).len(), 21);

    std::fs::write(&cfg, "kappa = 0.5\nwidth = 3\n").unwrap();
    assert_json_error(&run(&["mode", "--config", cfg_s], &d), 2, "domain");
    assert_json_error(&run(&["mode", "--config", "/nonexistent/run.ini"], &d), 2, "domain");
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let cases: [&[&str]; 3] = [
        &["mode", "--kappa", "1.917", "--points", "300"],
        &["packet", "--energy-ev", "200", "--spread-ev", "0.1"],
        &["characterize", "--energy-ev", "1", "--spread-ev", "0.1"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut outs = vec![];
        for threads in ["1", "4"] {
            let d = scratch(&format!("threads_{i}_{threads}"));
            let o = bin().args(*args).args(["--threads", threads, "--out-dir"]).arg(&d).output().unwrap();
            assert!(o.status.success());
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&d)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            outs.push(files);
        }
        assert!(!outs[0].is_empty());
        assert_eq!(outs[0], outs[1], "{args:?}");
    }
}
