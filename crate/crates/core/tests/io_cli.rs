mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use clap::Parser;
use common::{small_fixture, Rng};
use gottv::cli::{run, Cli};
use gottv::config::parse_key_values;
use gottv::io::{read_msi, write_msi, Dtype, HEADER_LEN};
use gottv::{Error, MsiTensor};

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gottv"))
}

fn run_args(args: &[&str]) -> gottv::Result<String> {
    let mut out = Vec::new();
    let cli = Cli::try_parse_from(std::iter::once("gottv").chain(args.iter().copied())).unwrap();
    run(cli, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn msi_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let x = Rng::new(1).tensor(16, 16, 31);
    let f64_path = dir.path().join("a.msi");
    write_msi(&f64_path, &x, Dtype::F64).unwrap();
    assert_eq!(read_msi(&f64_path).unwrap(), x);
    assert_eq!(
        fs::metadata(&f64_path).unwrap().len() as usize,
        HEADER_LEN + 16 * 16 * 31 * 8
    );

    let f32_path = dir.path().join("b.msi");
    write_msi(&f32_path, &x, Dtype::F32).unwrap();
    let y = read_msi(&f32_path).unwrap();
    for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
        assert!((a - b).abs() <= f32::EPSILON as f64 * a.abs().max(1e-30));
    }
}

#[test]
fn msi_header_layout_is_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.msi");
    let x = MsiTensor::from_vec(1, 2, 1, vec![1.0, -2.0]).unwrap();
    write_msi(&path, &x, Dtype::F32).unwrap();
    let bytes = fs::read(&path).unwrap();
    let mut expected = b"MSIRAW01".to_vec();
    expected.extend_from_slice(&[1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 0]);
    expected.extend_from_slice(&1.0f32.to_le_bytes());
    expected.extend_from_slice(&(-2.0f32).to_le_bytes());
    assert_eq!(bytes, expected);
}

#[test]
fn msi_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.msi");
    write_msi(&path, &Rng::new(2).tensor(4, 4, 2), Dtype::F64).unwrap();
    let bytes = fs::read(&path).unwrap();

    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    let err = read_msi(&path).unwrap_err();
    assert!(matches!(err, Error::TruncatedPayload(_)));
    assert!(err.to_string().contains("truncated payload"));

    let mut zero_d = bytes.clone();
    zero_d[16..20].copy_from_slice(&0u32.to_le_bytes());
    fs::write(&path, &zero_d).unwrap();
    let err = read_msi(&path).unwrap_err();
    assert!(err.to_string().contains("invalid dimensions"));

    let mut nan = bytes.clone();
    nan[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
    fs::write(&path, &nan).unwrap();
    assert!(matches!(read_msi(&path), Err(Error::NonFinite(_))));

    assert!(matches!(
        read_msi(dir.path().join("missing.msi")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn verify_basis_reports_the_family() {
    let out = run_args(&["verify-basis", "--d", "4"]).unwrap();
    assert!(out.contains("12 bases verified"), "{out}");
    let residual: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("max eigen residual "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual < 1e-12);
    assert!(out.contains("H decomposition residual 0"));
    assert!(run_args(&["verify-basis", "--d", "2"])
        .unwrap()
        .contains("1 bases verified"));
    assert!(run_args(&["verify-basis", "--d", "1"]).is_err());
}

#[test]
fn degrade_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("clean.msi");
    write_msi(&input, &small_fixture().0, Dtype::F64).unwrap();
    let outs: Vec<Vec<u8>> = ["a.msi", "b.msi"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let status = exe()
                .args([
                    "degrade",
                    "--in",
                    p(&input),
                    "--out",
                    p(&out),
                    "--sigma",
                    "0.6667",
                ])
                .args(["--noise-std", "0.05", "--seed", "7"])
                .status()
                .unwrap();
            assert!(status.success());
            fs::read(out).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn restore_then_metrics_beats_the_degraded_input() {
    let dir = tempfile::tempdir().unwrap();
    let (clean, noisy) = small_fixture();
    let clean_path = dir.path().join("clean.msi");
    let noisy_path = dir.path().join("noisy.msi");
    let out_path = dir.path().join("restored.msi");
    write_msi(&clean_path, &clean, Dtype::F64).unwrap();
    write_msi(&noisy_path, &noisy, Dtype::F64).unwrap();

    let config = dir.path().join("run.cfg");
    fs::write(
        &config,
        "# fixture settings\nlambda = 1000\nalpha = 0.3\nmodel = tv\n",
    )
    .unwrap();
    let msg = run_args(&[
        "restore",
        "--in",
        p(&noisy_path),
        "--out",
        p(&out_path),
        "--model",
        "gottv",
        "--lambda",
        "8",
        "--config",
        p(&config),
    ])
    .unwrap();
    assert!(msg.starts_with("gottv:"));

    let sidecar = fs::read_to_string(dir.path().join("restored.msi.report")).unwrap();
    let kv = parse_key_values(&sidecar);
    let get = |k: &str| {
        kv.iter()
            .find(|(key, _)| key == k)
            .map(|(_, v)| v.clone())
            .unwrap()
    };
    for key in ["iterations", "final_relerr", "objective_final", "seconds"] {
        assert!(kv.iter().any(|(k, _)| k == key), "missing {key}");
    }
    assert_eq!(get("model"), "gottv");
    assert_eq!(get("lambda"), "8");
    assert_eq!(get("alpha"), "0.3");
    assert_eq!(get("maxitr"), "10000");
    assert!(get("final_relerr").parse::<f64>().unwrap() < 1e-5);

    let mpsnr_of = |test: &Path| -> f64 {
        let out = run_args(&["metrics", "--ref", p(&clean_path), "--test", p(test)]).unwrap();
        assert!(out.lines().count() == 4 + 3);
        out.lines()
            .find_map(|l| l.strip_prefix("MPSNR\t"))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(mpsnr_of(&out_path) > mpsnr_of(&noisy_path));
}

#[test]
fn render_writes_a_png() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.msi");
    write_msi(&input, &Rng::new(3).tensor(8, 6, 5), Dtype::F32).unwrap();
    let out = dir.path().join("x.png");
    run_args(&[
        "render",
        "--in",
        p(&input),
        "--out",
        p(&out),
        "--bands",
        "5,3,1",
    ])
    .unwrap();
    let bytes = fs::read(&out).unwrap();
    assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let reader = decoder.read_info().unwrap();
    assert_eq!((reader.info().width, reader.info().height), (6, 8));
    assert!(run_args(&[
        "render",
        "--in",
        p(&input),
        "--out",
        p(&out),
        "--bands",
        "6,1,1"
    ])
    .is_err());
}

#[test]
fn sweep_reports_the_best_point() {
    let dir = tempfile::tempdir().unwrap();
    let (clean, noisy) = small_fixture();
    let c = dir.path().join("c.msi");
    let n = dir.path().join("n.msi");
    write_msi(&c, &clean, Dtype::F64).unwrap();
    write_msi(&n, &noisy, Dtype::F64).unwrap();
    let out = run_args(&[
        "sweep",
        "--in",
        p(&n),
        "--ref",
        p(&c),
        "--model",
        "vtv",
        "--lambda-grid",
        "2,8,30",
    ])
    .unwrap();
    assert_eq!(out.lines().count(), 1 + 3 + 1);
    assert!(out.lines().last().unwrap().starts_with("best lambda = "));
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.msi");
    let out = exe()
        .args(["metrics", "--ref", p(&missing), "--test", p(&missing)])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error: "));

    let out = exe()
        .args(["restore", "--in", "a", "--out", "b", "--model", "bogus"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = exe()
        .args(["verify-basis", "--d", "3", "--frobnicate"])
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = exe()
        .env("MSI_THREADS", "2")
        .args(["verify-basis", "--d", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("3 bases verified"));
    let out = exe()
        .env("MSI_THREADS", "many")
        .args(["verify-basis", "--d", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn metrics_warns_on_out_of_range_reference() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.msi");
    write_msi(&x, &MsiTensor::filled(12, 12, 1, 2.0).unwrap(), Dtype::F64).unwrap();
    let out = exe()
        .args(["metrics", "--ref", p(&x), "--test", p(&x)])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .starts_with("warning:"));
}
