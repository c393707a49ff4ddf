//! Compiles a C client against the generated header and the shared
//! library, then runs it.

use std::path::{Path, PathBuf};
use std::process::Command;

/// `target/<profile>`, where cargo puts the shared library.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_client_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let libdir = artifact_dir();
    assert!(libdir.join("libacforms_ffi.so").exists() || libdir.join("libacforms_ffi.dylib").exists());
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("acf_client");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&out)
        .arg(manifest.join("tests/c/client.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg("-L")
        .arg(&libdir)
        .arg("-lacforms_ffi")
        .status()
        .expect("a C compiler on PATH");
    assert!(status.success());
    let run = Command::new(&out).env("LD_LIBRARY_PATH", &libdir).env("DYLD_LIBRARY_PATH", &libdir).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains(&format!("version {}", env!("CARGO_PKG_VERSION"))));
    assert!(stdout.contains("consistent 1") && stdout.contains("verdicts 1"));
    let value: f64 = stdout.lines().find_map(|l| l.strip_prefix("value ")).unwrap().parse().unwrap();
    assert!(value.is_finite() && value != 0.0);
}
