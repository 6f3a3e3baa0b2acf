use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modconv"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"))
        .join("cli")
        .join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = run(&["verify", "--cap", "256"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert!(stdout(&a).contains("all 10 suites passed"));
    let b = run(&["verify", "--cap", "256"]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn verify_reports_injected_fault() {
    let o = run(&["verify", "--cap", "64", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("FAIL dft-definition"), "{text}");
    assert!(text.contains("PASS field-arithmetic"), "{text}");
}

fn mul_files(dir: &std::path::Path, a: &str, b: &str, engine: &str) -> (Output, PathBuf) {
    fs::write(dir.join("a.txt"), a).unwrap();
    fs::write(dir.join("b.txt"), b).unwrap();
    let out = dir.join(format!("{engine}.txt"));
    let _ = fs::remove_file(&out);
    let o = run(&[
        "mul",
        path_str(&dir.join("a.txt")),
        path_str(&dir.join("b.txt")),
        "--engine",
        engine,
        "-o",
        path_str(&out),
    ]);
    (o, out)
}

#[test]
fn mul_small_example() {
    let dir = scratch("mul_small");
    for engine in ["definition", "auto"] {
        let (o, out) = mul_files(&dir, "7\n2\n1 2\n", "7\n2\n3 4\n", engine);
        assert_eq!(o.status.code(), Some(0), "{engine}: {}", stderr(&o));
        assert_eq!(
            fs::read_to_string(&out).unwrap(),
            "7\n3\n3 3 1\n",
            "{engine}"
        );
    }
    // p = 7 only has roots of unity of order 2, too few for a length 3 product
    for engine in ["fft_pad", "tft", "split"] {
        let (o, out) = mul_files(&dir, "7\n2\n1 2\n", "7\n2\n3 4\n", engine);
        assert_eq!(o.status.code(), Some(5), "{engine}: {}", stderr(&o));
        assert!(!out.exists());
    }
    for engine in ["definition", "fft_pad", "tft", "split", "auto"] {
        let (o, out) = mul_files(&dir, "17\n2\n1 2\n", "17\n2\n3 4\n", engine);
        assert_eq!(o.status.code(), Some(0), "{engine}: {}", stderr(&o));
        assert_eq!(
            fs::read_to_string(&out).unwrap(),
            "17\n3\n3 10 8\n",
            "{engine}"
        );
    }
}

#[test]
fn mul_default_engine_handles_small_primes() {
    let dir = scratch("mul_default");
    fs::write(dir.join("a.txt"), "7\n2\n1 2\n").unwrap();
    fs::write(dir.join("b.txt"), "7\n2\n3 4\n").unwrap();
    let out = dir.join("out.txt");
    let o = run(&[
        "mul",
        path_str(&dir.join("a.txt")),
        path_str(&dir.join("b.txt")),
        "-o",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), "7\n3\n3 3 1\n");
}

#[test]
fn mul_by_one_is_identity() {
    let dir = scratch("mul_one");
    let poly = "998244353\n5\n5 0 998244352 17 1\n";
    fs::write(dir.join("a.txt"), poly).unwrap();
    fs::write(dir.join("one.txt"), "998244353\n1\n1\n").unwrap();
    let out = dir.join("out.txt");
    let o = run(&[
        "mul",
        path_str(&dir.join("a.txt")),
        path_str(&dir.join("one.txt")),
        "-o",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out).unwrap(), poly);
}

#[test]
fn mul_error_exit_codes() {
    let dir = scratch("mul_errors");
    fs::write(dir.join("a.txt"), "7\n2\n1 2\n").unwrap();
    fs::write(dir.join("b.txt"), "17\n2\n3 4\n").unwrap();
    fs::write(dir.join("bad.txt"), "7\n3\n1 2\n").unwrap();
    let out = dir.join("out.txt");
    let a = path_str(&dir.join("a.txt")).to_owned();
    let mismatch = run(&[
        "mul",
        &a,
        path_str(&dir.join("b.txt")),
        "-o",
        path_str(&out),
    ]);
    assert_eq!(mismatch.status.code(), Some(4), "{}", stderr(&mismatch));
    let parse = run(&[
        "mul",
        &a,
        path_str(&dir.join("bad.txt")),
        "-o",
        path_str(&out),
    ]);
    assert_eq!(parse.status.code(), Some(3), "{}", stderr(&parse));
    assert!(stderr(&parse).contains("bad.txt"));
    let missing = run(&[
        "mul",
        &a,
        path_str(&dir.join("nope.txt")),
        "-o",
        path_str(&out),
    ]);
    assert_eq!(missing.status.code(), Some(6));
    assert!(!out.exists());
    let usage = run(&["mul", &a]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn plan_is_idempotent() {
    let dir = scratch("plan");
    let store = dir.join("plans.txt");
    let args = ["plan", "--store", path_str(&store), "--max-l", "64"];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    assert!(
        stdout(&first).contains("entries: 21 (21 new)"),
        "{}",
        stdout(&first)
    );
    let saved = fs::read_to_string(&store).unwrap();
    assert!(saved.starts_with("modconv-plan v1\n"));
    let second = run(&args);
    assert_eq!(second.status.code(), Some(0));
    assert!(
        stdout(&second).contains("searches: 0"),
        "{}",
        stdout(&second)
    );
    assert!(stdout(&second).contains("(0 new)"));
    assert_eq!(fs::read_to_string(&store).unwrap(), saved);
}

#[test]
fn corrupted_store_is_rejected_and_untouched() {
    let dir = scratch("plan_corrupt");
    let store = dir.join("plans.txt");
    let text = "modconv-plan v1\ndft|998244353|8|8|8|1|splits=2|base=banana|nanos=1|sig=x\n";
    fs::write(&store, text).unwrap();
    let o = run(&["plan", "--store", path_str(&store), "--max-l", "16"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&store).unwrap(), text);

    fs::write(&store, "modconv-plan v9\n").unwrap();
    let o = run(&["plan", "--store", path_str(&store), "--max-l", "16"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn plan_rejects_unsupported_size() {
    let dir = scratch("plan_unsupported");
    let store = dir.join("plans.txt");
    let o = run(&[
        "plan",
        "--store",
        path_str(&store),
        "--max-l",
        "64",
        "--prime",
        "17",
    ]);
    assert_eq!(o.status.code(), Some(5));
    assert!(!store.exists());
}

#[test]
fn sweep_writes_csv() {
    let dir = scratch("sweep");
    let out = dir.join("s.csv");
    let o = run(&[
        "sweep",
        "--min",
        "5",
        "--max",
        "9",
        "--step",
        "2",
        "--engines",
        "fft_pad,tft,split",
        "--reps",
        "3",
        "-o",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("n,engine,threads,nanos_median,nanos_mean,butterflies,pointwise_muls")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 7);
        assert_eq!(r[0], ["5", "7", "9"][i / 3]);
        assert_eq!(r[1], ["fft_pad", "tft", "split"][i % 3]);
        assert_eq!(r[2], "1");
        assert!(r[3].parse::<u64>().is_ok() && r[4].parse::<f64>().is_ok());
    }
    // n = 9: fft_pad pads to 16, tft multiplies 9 points
    assert_eq!(rows[6][6], "16");
    assert_eq!(rows[7][6], "9");
}

#[test]
fn sweep_marks_unsupported_sizes() {
    let dir = scratch("sweep_sentinel");
    let out = dir.join("s.csv");
    let o = run(&[
        "sweep",
        "--min",
        "16",
        "--max",
        "17",
        "--engines",
        "tft",
        "--prime",
        "17",
        "--reps",
        "2",
        "-o",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(!rows[0].contains("-1"));
    assert_eq!(rows[1], "17,tft,1,-1,-1,-1,-1");
}

#[test]
fn bad_engine_name_is_usage_error() {
    let dir = scratch("bad_engine");
    let o = run(&[
        "sweep",
        "--min",
        "1",
        "--max",
        "2",
        "--engines",
        "fft",
        "-o",
        path_str(&dir.join("s.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}
