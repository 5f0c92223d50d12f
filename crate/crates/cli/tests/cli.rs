use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tcguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcguard")).args(args).env_remove("DNS_CPM_SEED").output().expect("binary runs")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn json(path: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_then_analyze_flood() {
    let dir = TempDir::new().unwrap();
    let (pcap, labels, metrics, verdicts) =
        (path(&dir, "s.pcap"), path(&dir, "s.csv"), path(&dir, "m.json"), path(&dir, "v.csv"));
    let out = tcguard(&["generate", "--scenario", "s", "--seed", "1", "--out", &pcap, "--labels", &labels]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = tcguard(&[
        "analyze",
        "--pcap",
        &pcap,
        "--resolver",
        "10.0.0.53",
        "--labels",
        &labels,
        "--out-metrics",
        &metrics,
        "--out-verdicts",
        &verdicts,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = json(&metrics);
    assert_eq!(m["attack_forwarded"], 5);
    assert_eq!(m["attack_packets"], 65_535);
    assert_eq!(m["asr"].as_f64().unwrap(), 5.0 / 65_535.0);

    let text = fs::read_to_string(&verdicts).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("packet_index,timestamp,qname,action,rule"));
    assert_eq!(lines.clone().count(), 65_536);
    assert_eq!(lines.filter(|l| l.ends_with(",truncate,R1")).count(), 65_531);
}

#[test]
fn generate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    for kind in ["s", "frag", "oob", "benign", "interleaved"] {
        let a = (path(&dir, "a.pcap"), path(&dir, "a.csv"));
        let b = (path(&dir, "b.pcap"), path(&dir, "b.csv"));
        for (pcap, labels) in [&a, &b] {
            let out = tcguard(&["generate", "--scenario", kind, "--seed", "9", "--out", pcap, "--labels", labels]);
            assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
        }
        assert_eq!(fs::read(&a.0).unwrap(), fs::read(&b.0).unwrap(), "{kind} pcap");
        assert_eq!(fs::read(&a.1).unwrap(), fs::read(&b.1).unwrap(), "{kind} labels");
    }
}

#[test]
fn seed_from_environment() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str, seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_tcguard"))
            .args(["generate", "--scenario", "benign", "--out", &path(&dir, name)])
            .env("DNS_CPM_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(dir.path().join(name)).unwrap()
    };
    let explicit = path(&dir, "x.pcap");
    assert!(tcguard(&["generate", "--scenario", "benign", "--seed", "3", "--out", &explicit]).status.success());
    assert_eq!(run("e.pcap", "3"), fs::read(&explicit).unwrap());
    assert_ne!(run("f.pcap", "4"), fs::read(&explicit).unwrap());
}

#[test]
fn costmodel_csv() {
    let out = tcguard(&["costmodel"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 13);
    assert_eq!(lines[0], "method,N,memory,error,inference");
    assert!(lines.contains(&"WS,10,3.2,100.125,0.1"));
    assert!(lines.contains(&"dwsHH,1000,6400,1.022360679775,3"));
}

#[test]
fn missing_capture_is_bad_input() {
    let dir = TempDir::new().unwrap();
    let (metrics, verdicts) = (path(&dir, "m.json"), path(&dir, "v.csv"));
    let out = tcguard(&[
        "analyze",
        "--pcap",
        &path(&dir, "absent.pcap"),
        "--resolver",
        "10.0.0.53",
        "--out-metrics",
        &metrics,
        "--out-verdicts",
        &verdicts,
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new(&metrics).exists());
    assert!(!Path::new(&verdicts).exists());
}

#[test]
fn invalid_flags_are_bad_input() {
    let dir = TempDir::new().unwrap();
    let pcap = path(&dir, "s.pcap");
    assert!(tcguard(&["generate", "--scenario", "oob", "--seed", "1", "--out", &pcap]).status.success());
    for args in [
        vec!["analyze", "--pcap", &pcap, "--resolver", "not-an-ip"],
        vec!["analyze", "--pcap", &pcap, "--resolver", "10.0.0.53", "--cms-w", "0"],
        vec!["analyze", "--pcap", &pcap, "--resolver", "10.0.0.53", "--rules", "r4"],
        vec!["generate", "--scenario", "bogus", "--out", &pcap],
        vec!["generate", "--scenario", "s", "--attack-count", "70000", "--out", &pcap],
    ] {
        assert_eq!(tcguard(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn sweep_small_grid() {
    let dir = TempDir::new().unwrap();
    let out_csv = path(&dir, "sweep.csv");
    let out = tcguard(&[
        "sweep",
        "--scenario",
        "interleaved",
        "--seed",
        "1",
        "--attack-count",
        "2000",
        "--repeats",
        "2",
        "--out",
        &out_csv,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&out_csv).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert_eq!(&r[2], "2");
        assert_eq!(&r[7], "5.0", "every grid point forwards the first five spoofed replies");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let (pcap, labels) = (path(&dir, "i.pcap"), path(&dir, "i.csv"));
    let out = tcguard(&["generate", "--scenario", "interleaved", "--seed", "2", "--out", &pcap, "--labels", &labels]);
    assert!(out.status.success());

    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!("pcap = {pcap:?}\nresolver = \"10.0.0.53\"\nlabels = {labels:?}\ncms-d = 2\ncms-w = 100\ntau = 5\n"),
    )
    .unwrap();
    let config = config.to_string_lossy().into_owned();

    let from_file = path(&dir, "file.json");
    assert!(tcguard(&["analyze", "--config", &config, "--out-metrics", &from_file]).status.success());
    let overridden = path(&dir, "flag.json");
    assert!(tcguard(&["analyze", "--config", &config, "--cms-w", "500", "--out-metrics", &overridden])
        .status
        .success());

    let narrow = json(&from_file)["fp_rate"].as_f64().unwrap();
    let wide = json(&overridden)["fp_rate"].as_f64().unwrap();
    assert!(narrow > 0.2, "2x100 sketch under interleaved load: {narrow}");
    assert!(wide < narrow);
}

#[test]
fn emitted_capture_holds_mitigated_replies() {
    let dir = TempDir::new().unwrap();
    let (pcap, emitted) = (path(&dir, "f.pcap"), path(&dir, "out.pcap"));
    assert!(tcguard(&["generate", "--scenario", "frag", "--seed", "4", "--out", &pcap]).status.success());
    let out = tcguard(&["analyze", "--pcap", &pcap, "--resolver", "10.0.0.53", "--emit-pcap", &emitted]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let capture = tcguard::pcap::read_capture(Path::new(&emitted), "10.0.0.53".parse().unwrap()).unwrap();
    assert!(!capture.packets.is_empty());
    assert!(capture.packets.iter().all(|p| p.fragment.is_none() && p.tc_flag()));
}
