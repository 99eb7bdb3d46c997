use std::path::Path;
use std::process::{Command, Output};

fn qgt(args: &[&str]) -> Output {
    qgt_env(args, None)
}

fn qgt_env(args: &[&str], max_order: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qgt"));
    cmd.args(args).env_remove("QGT_MAX_ORDER");
    if let Some(m) = max_order {
        cmd.env("QGT_MAX_ORDER", m);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).expect("valid json")
}

fn component<'a>(v: &'a serde_json::Value, a: &str, b: &str) -> &'a serde_json::Value {
    v["metric"].as_array().unwrap().iter().find(|c| c["a"] == a && c["b"] == b).expect("component present")
}

#[test]
fn compute_quartic_first_order() {
    let o = qgt(&["compute", "--model", "quartic", "--order", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["schema"], "qgt.compute.v1");
    assert_eq!(v["convention"]["truncation_order"], 1);
    assert_eq!(component(&v, "alpha", "alpha")["text"], "1/32 * a^-2 - 11/512 * l * a^-7/2");
    assert_eq!(component(&v, "lambda", "lambda")["text"], "13/6144 * a^-3 - 31/12288 * l * a^-9/2");
    assert_eq!(component(&v, "alpha", "lambda")["text"], "1/128 * a^-5/2 - 89/12288 * l * a^-4");
    let terms = component(&v, "alpha", "lambda")["series"].as_array().unwrap().clone();
    assert_eq!(terms.len(), 2);
    let linear_term = &terms[1];
    assert_eq!((linear_term["num"].as_str(), linear_term["den"].as_str()), (Some("-89"), Some("12288")));
    assert_eq!((linear_term["alpha_half_pow"].as_i64(), linear_term["lambda_pow"].as_u64()), (Some(-8), Some(1)));
    assert_eq!(v["critical_coupling"]["kind"], "exact");
    assert_eq!(v["critical_coupling"]["text"], "16/35 * a^3/2");
    assert_eq!(v["determinant"]["text"], "1/196608 * a^-5 - 35/3145728 * l * a^-13/2");
    assert!(v["curvature"].as_array().unwrap().iter().all(|c| c["text"] == "0"));
}

#[test]
fn compute_linear_at_point() {
    let o = qgt(&["compute", "--model", "linear", "--alpha", "1", "--j", "0", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let jj = component(&v, "j", "j");
    assert_eq!(jj["text"], "1/2 * a^-3/2");
    assert_eq!(jj["numeric_value"].as_f64(), Some(0.5));
    assert!(v["critical_coupling"].is_null());
}

#[test]
fn compute_free_theory() {
    let o = qgt(&["compute", "--order", "0", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("quantity,series,value\n"));
    assert!(text.contains("\"G[alpha,alpha]\",1/32 * a^-2,") || text.contains("G[alpha,alpha],1/32 * a^-2,"), "{text}");
    assert!(!text.contains(" l "));
}

#[test]
fn exit_codes() {
    assert_eq!(qgt(&["compute", "--alpha", "0"]).status.code(), Some(2));
    assert_eq!(qgt(&["compute", "--model", "cubic"]).status.code(), Some(2));
    assert_eq!(qgt(&["compute", "--order", "3"]).status.code(), Some(2));
    assert_eq!(qgt_env(&["compute", "--order", "1"], Some("0")).status.code(), Some(2));
    assert_eq!(qgt_env(&["compute", "--order", "3", "--model", "monomial:2"], Some("3")).status.code(), Some(0));
    assert_eq!(qgt(&["oracle", "--alpha", "1", "--basis-size", "4"]).status.code(), Some(2));
}

#[test]
fn verify_suites() {
    let o = qgt(&["verify", "linear"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS:") && stdout(&o).contains("max symbolic delta 0"));
    let o = qgt(&["verify", "quartic"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn verify_reports_injected_fault() {
    let o = qgt(&["verify", "all", "--inject-fault", "lambda"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("FAIL") && l.contains("G[lambda,lambda]")), "{text}");
    assert!(text.lines().any(|l| l.starts_with("PASS") && l.contains("symbolic-exact") && l.contains("G[alpha,alpha]")));
}

fn dot_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".dot"))
        .collect();
    names.sort();
    names
}

#[test]
fn diagram_export() {
    for (component, count, mults) in [
        ("alpha,alpha", 2, vec![48, 24]),
        ("lambda,lambda", 8, vec![864, 1728, 1152, 864, 1152, 864, 1728, 1152]),
        ("alpha,lambda", 4, vec![144, 288, 192, 144]),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let o = qgt(&["diagrams", "--model", "quartic", "--component", component, "--order", "1", "--out", out]);
        assert_eq!(o.status.code(), Some(0));
        let files = dot_files(dir.path());
        assert_eq!(files.len(), count, "{component}");
        assert_eq!(stdout(&o).lines().count(), count);
        let mut found: Vec<u64> = files
            .iter()
            .map(|f| {
                let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
                assert!(text.starts_with("graph "));
                let m = text.split("multiplicity ").nth(1).unwrap();
                m.split('"').next().unwrap().parse().unwrap()
            })
            .collect();
        let mut want = mults.clone();
        found.sort();
        want.sort();
        assert_eq!(found, want, "{component}");
    }
}

#[test]
fn sweep_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = qgt(&["sweep", "--alpha", "1", "--lambda", "0.02,0.04,0.08", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let lambdas: Vec<&str> = rows.iter().map(|r| &r[3]).collect();
    assert_eq!(lambdas, ["0.02", "0.04", "0.08"]);
    let dev = headers.iter().position(|h| h == "g_lambda_lambda_deviation").unwrap();
    let d: Vec<f64> = rows.iter().map(|r| r[dev].parse::<f64>().unwrap().abs()).collect();
    // doubling λ roughly quadruples the deviation
    assert!(d[1] / d[0] > 3.0 && d[1] / d[0] < 5.0, "{d:?}");
}

#[test]
fn sweep_empty_grid() {
    let o = qgt(&["sweep", "--lambda", ""]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("model,order,alpha,lambda,j,"));
}

#[test]
fn sweep_free_theory() {
    let o = qgt(&["sweep", "--alpha", "0.5,1,2", "--lambda", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    for r in rdr.records() {
        let r = r.unwrap();
        for (h, v) in headers.iter().zip(r.iter()) {
            if let Some(tag) = h.strip_suffix("_series") {
                let s: f64 = v.parse().unwrap();
                let idx = headers.iter().position(|x| x == format!("{tag}_oracle")).unwrap();
                let n: f64 = r[idx].parse().unwrap();
                assert!((n - s).abs() <= 1e-6 * s.abs(), "{h}: {s} vs {n}");
            }
        }
    }
}

#[test]
fn oracle_command() {
    let o = qgt(&["oracle", "--model", "linear", "--alpha", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let g = v["metric"].as_array().unwrap();
    assert!((g[1][1].as_f64().unwrap() - 0.5).abs() < 1e-6);
    let o = qgt(&["oracle", "--alpha", "1", "--lambda", "0.05", "--fidelity", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn verbose_prints_chambers() {
    let o = qgt(&["--verbose", "compute", "--order", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("integrand (alpha,alpha)") && err.contains("chamber terms"), "{err}");
}
