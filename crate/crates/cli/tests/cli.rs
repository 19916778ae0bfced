use std::process::{Command, Output};

fn faber(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faber-decay")).args(args).env_remove("FABER_DECAY_PDE225").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lists_presets() {
    let o = faber(&["presets"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["fig1a", "fig4b", "fig5-left", "fig5-right", "ex.inex.expsqrt"] {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn bound_table_marks_invalid_distances() {
    let o = faber(&["bound", "--function", "exp", "--ellipse", "2,1,0", "--xi", "1..4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "xi,bound,valid");
    assert_eq!(lines[1], "1,inf,0");
    assert!(lines[2].starts_with("2,") && lines[2].ends_with(",1"));
}

#[test]
fn oracle_prints_the_column() {
    let o = faber(&["oracle", "--toeplitz", "-i,[i],-2", "--n", "12", "--function", "exp", "--column", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 13);
}

#[test]
fn unknown_preset_is_an_error() {
    let o = faber(&["reproduce", "fig9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("available presets"));
}

#[test]
fn missing_external_matrix_names_its_source() {
    let dir = tempfile::tempdir().unwrap();
    let o = faber(&["reproduce", "fig5-right", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("pde225") && err.contains("FABER_DECAY_PDE225"), "{err}");
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_faber-decay"))
        .args(["column", "--toeplitz", "i,[3i],-i,-i", "--n", "30", "--function", "exp", "--column", "15"])
        .env("FABER_DECAY_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["decay.csv", "fov.csv", "run.json", "plot.gp"] {
        assert!(dir.path().join(f).exists(), "{f} not written");
    }
}
