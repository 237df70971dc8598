use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_retire");

fn retire(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn plan_upper_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = retire(&["plan", "--preset", "upper", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("consumption  58400"), "{stdout}");
    let ms: f64 = stdout.lines().find(|l| l.starts_with("solve time")).unwrap().split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!(ms < 500.0);
    let csv = std::fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    assert!(csv.starts_with("year,age,B,I,R,b,ic,id,iw,rc,rd,rw,tax,c,q\n"));
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn corrupt_profile_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("profile.toml");
    std::fs::write(&bad, "name = \"x\"\nstart_age = \"sixty\"\n").unwrap();
    let out = retire(&["plan", "--profile", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("profile.toml"), "{}", text(&out.stderr));
}

#[test]
fn infeasible_plan_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("profile.toml");
    let mut p = retire_core::profile::Profile::lower_middle();
    p.liabilities = vec![retire_core::profile::ScheduledAmount { amount: 1e7, from_age: 65, to_age: Some(65) }];
    std::fs::write(&profile, toml::to_string(&p).unwrap()).unwrap();
    let out = retire(&["plan", "--profile", profile.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", text(&out.stderr));
}

#[test]
fn missing_config_exits_2() {
    let out = retire(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

fn simulate(dir: &Path, extra: &[&str]) -> String {
    let mut args = vec!["simulate", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = retire(&args);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    text(&out.stdout)
}

#[test]
fn single_scenario_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate(a.path(), &["-n", "1", "--seed", "9", "--preset", "lower"]);
    simulate(b.path(), &["-n", "1", "--seed", "9", "--preset", "lower", "--workers", "2"]);
    let ra = std::fs::read_to_string(a.path().join("scenarios.csv")).unwrap();
    let rb = std::fs::read_to_string(b.path().join("scenarios.csv")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(ra.lines().count(), 2);
    assert_eq!(std::fs::read(a.path().join("metrics.json")).unwrap(), std::fs::read(b.path().join("metrics.json")).unwrap());
}

#[test]
fn collared_lower_profile_writes_both_cdfs() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = simulate(dir.path(), &["-n", "4", "--preset", "lower", "--collar-floor", "-0.075", "--yearly"]);
    assert!(stdout.contains("relative bequest"), "{stdout}");
    for f in ["mpc_bequest_cdf.csv", "benchmark_bequest_cdf.csv", "relative_bequest_cdf.csv", "years.csv", "metrics.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "scenarios = 3\nseed = 5\npolicy = \"benchmark\"\noutput_dir = \"res\"\n[profile]\npreset = \"lower\"\n").unwrap();
    let out = retire(&["simulate", "--config", cfg.to_str().unwrap(), "-n", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("scenarios 2 seed 5"));
    assert!(dir.path().join("res/benchmark_bequest_cdf.csv").exists());
    assert!(!dir.path().join("res/mpc_bequest_cdf.csv").exists());
}

fn write_series(dir: &Path) -> (String, String) {
    use retire_core::market::{MarketModel, RATES_1962};
    use retire_core::sim::market_paths;
    let path = &market_paths(&MarketModel::paper(), RATES_1962, 400, 1, 3)[0];
    let mut m = String::from("year,market_return\n");
    let mut r = String::from("year,treasury_rate,inflation_rate\n");
    for (k, y) in path.iter().enumerate() {
        m.push_str(&format!("{},{}\n", 1600 + k, y.market));
        r.push_str(&format!("{},{},{}\n", 1600 + k, y.treasury, y.inflation));
    }
    let (mp, rp) = (dir.join("market.csv"), dir.join("rates.csv"));
    std::fs::write(&mp, m).unwrap();
    std::fs::write(&rp, r).unwrap();
    (mp.to_str().unwrap().into(), rp.to_str().unwrap().into())
}

#[test]
fn fit_writes_a_usable_preset() {
    let dir = tempfile::tempdir().unwrap();
    let (m, r) = write_series(dir.path());
    let preset = dir.path().join("fitted.toml");
    let out = retire(&["fit", "--market", &m, "--rates", &r, "--out", preset.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("VAR A") && stdout.contains("weight"));
    let model = retire::io::read_market_model(&preset).unwrap();
    assert!((model.gmm.mean() - 0.117).abs() < 0.03);
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("scenarios = 1\n[data]\nmarket = \"{}\"\n", preset.display())).unwrap();
    let out = retire(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
}

#[test]
fn fit_short_or_missing_series_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _) = write_series(dir.path());
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "year,treasury_rate,inflation_rate\n2000,0.05,0.02\n2001,0.04,0.03\n").unwrap();
    let out = dir.path().join("x.toml");
    let o = retire(&["fit", "--market", &m, "--rates", short.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = retire(&["fit", "--market", "/nonexistent.csv", "--rates", short.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_data_files_load() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let cfg = tempfile::tempdir().unwrap();
    let run = cfg.path().join("run.toml");
    std::fs::write(
        &run,
        format!(
            "scenarios = 1\n[profile]\nfile = \"{0}/profile_upper.toml\"\n[data]\nlifetable = \"{0}/lifetable.csv\"\nrmd = \"{0}/rmd.csv\"\ntax = \"{0}/tax_2024_single.toml\"\nmarket = \"{0}/market.toml\"\n",
            root.display()
        ),
    )
    .unwrap();
    let out = retire(&["plan", "--config", run.to_str().unwrap(), "--out", cfg.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("consumption  58400"));
}

fn wait_for_listen(child: &mut std::process::Child) -> String {
    let stderr = child.stderr.take().unwrap();
    let mut line = String::new();
    BufReader::new(stderr).read_line(&mut line).unwrap();
    line
}

fn http_get(addr: &str, path: &str) -> String {
    use std::io::{Read, Write};
    let mut s = std::net::TcpStream::connect(addr).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut buf = String::new();
    s.read_to_string(&mut buf).unwrap();
    buf
}

#[cfg(unix)]
#[test]
fn serve_health_port_clash_and_sigterm() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut server = Command::new(BIN).args(["serve", "--addr", &addr]).stderr(Stdio::piped()).spawn().unwrap();
    assert!(wait_for_listen(&mut server).contains("listening"));
    let resp = http_get(&addr, "/health");
    assert!(resp.starts_with("HTTP/1.1 200") && resp.contains("\"status\":\"ok\""), "{resp}");

    let dup = retire(&["serve", "--addr", &addr]);
    assert_eq!(dup.status.code(), Some(3));

    let t0 = Instant::now();
    let killed = Command::new("kill").args(["-TERM", &server.id().to_string()]).status().unwrap();
    assert!(killed.success());
    loop {
        if let Some(status) = server.try_wait().unwrap() {
            assert_eq!(status.code(), Some(0));
            break;
        }
        assert!(t0.elapsed() < Duration::from_secs(5), "server did not stop");
        std::thread::sleep(Duration::from_millis(20));
    }
}

#[test]
fn quick_acceptance_prints_every_criterion() {
    let out = retire(&["acceptance", "--quick"]);
    let stdout = text(&out.stdout);
    for id in ["P1 ", "P2 ", "P3 ", "P4 ", "P5 ", "P6 ", "P7 ", "P8 ", "P9 ", "P10 "] {
        assert!(stdout.lines().any(|l| l.starts_with(id) && (l.contains(" PASS ") || l.contains(" FAIL "))), "{id}: {stdout}");
    }
    assert!(matches!(out.status.code(), Some(0 | 1)));
}
