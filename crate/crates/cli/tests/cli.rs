use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fuse_core::mesh::{load_mesh, parse_mesh};

fn fuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuse"))
        .args(args)
        .env_remove("FUSE_THREADS")
        .output()
        .expect("run fuse")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn spectrum_exit_codes() {
    let o = fuse(&["spectrum", "--kind", "gl-endpoints", "--p", "4", "--op", "first"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("stable"));
    assert_eq!(code(&fuse(&["spectrum", "--kind", "uniform", "--p", "3", "--op", "first"])), 2);
    let o = fuse(&["spectrum", "--p", "0"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--p"));
    assert_eq!(code(&fuse(&["spectrum", "--kind", "chebyshev", "--p", "3"])), 1);
}

#[test]
fn spectrum_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let o = fuse(&["spectrum", "--p", "3", "--op", "laplacian", "--samples", "256", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# fuse ") && lines[0].contains("op=laplacian") && lines[0].contains("p=3"));
    assert_eq!(lines[1], "xi,re_0,im_0,re_1,im_1,re_2,im_2");
    assert_eq!(lines.len(), 2 + 256);
    let first: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(first.len(), 7);
    // 17 significant digits
    let mantissa = first[1].split('e').next().unwrap().trim_start_matches('-');
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
    assert!(!text.contains('\r'));
}

#[test]
fn converge_writes_one_row_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("adv.csv");
    let o = fuse(&["converge", "--case", "advection1d", "--p", "3", "--levels", "4", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("observed order (u)"));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].contains("seed=") && lines[0].contains("case=advection1d"));
    let header: Vec<&str> = lines[1].split(',').collect();
    let col = header.iter().position(|h| *h == "observed_order_u").unwrap();
    let rows: Vec<Vec<&str>> = lines[2..].iter().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0][col].is_empty());
    for r in &rows[1..] {
        assert!(r[col].parse::<f64>().unwrap() > 1.0);
    }
}

#[test]
fn converge_taylor_green_columns() {
    let o = fuse(&["converge", "--case", "taylor-green", "--levels", "1", "--t-final", "0.002"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let header = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(header.contains("error_u1") && header.contains("error_p"));
}

#[test]
fn converge_errors() {
    let o = fuse(&["converge", "--case", "burgers"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("advection1d") && stderr(&o).contains("taylor-green"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bad.csv");
    let o = fuse(&["converge", "--case", "advection1d", "--dt", "10", "--out", path_str(&out)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("level 0"));
    assert!(!out.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn solve_writes_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let o = fuse(&["solve", "--case", "poisson-circle", "--level", "0", "--out", path_str(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("error (u)"));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# fuse "));
    assert!(lines.next().unwrap().starts_with("x,y,"));
    assert!(lines.count() > 10);
}

#[test]
fn equivalence_verdicts() {
    let o = fuse(&["equivalence", "--which", "sd", "--p", "2", "--n", "4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("max |difference|"));
    assert_eq!(code(&fuse(&["equivalence", "--which", "petrov", "--p", "3", "--n", "5"])), 0);
    assert_eq!(code(&fuse(&["equivalence", "--which", "petrov", "--p", "4", "--n", "3", "--a", "-1"])), 0);
    assert_eq!(code(&fuse(&["equivalence", "--which", "sd", "--p", "9", "--n", "4"])), 1);
    assert_eq!(code(&fuse(&["equivalence", "--which", "dg", "--p", "3", "--n", "4"])), 1);
}

#[test]
fn mesh_recipes() {
    let dir = tempfile::tempdir().unwrap();
    let circle = dir.path().join("circle1.fmesh");
    assert_eq!(code(&fuse(&["mesh", "--recipe", "circle", "--level", "1", "--out", path_str(&circle)])), 0);
    let m = load_mesh(&circle).unwrap();
    assert_eq!(m.n_elements(), 20);
    for e in 0..m.n_elements() {
        for xi in [[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]] {
            assert!(m.evaluate_mapping(e, xi).det > 0.0);
        }
    }

    let o = fuse(&["mesh", "--recipe", "structured", "--nx", "4", "--ny", "4"]);
    assert_eq!(code(&o), 0);
    assert_eq!(parse_mesh(&stdout(&o)).unwrap().n_elements(), 16);

    let a = dir.path().join("a.fmesh");
    let b = dir.path().join("b.fmesh");
    for p in [&a, &b] {
        assert_eq!(code(&fuse(&["mesh", "--recipe", "perturbed", "--seed", "7", "--out", path_str(p)])), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.fmesh");
    fuse(&["mesh", "--recipe", "perturbed", "--seed", "8", "--out", path_str(&c)]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());

    let missing = dir.path().join("no").join("x.fmesh");
    assert_eq!(code(&fuse(&["mesh", "--recipe", "circle", "--out", path_str(&missing)])), 1);
    assert_eq!(code(&fuse(&["mesh", "--recipe", "hexagon"])), 1);
}

#[test]
fn config_file_merging() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# node-set scan\nkind = uniform\np = 3\n").unwrap();
    assert_eq!(code(&fuse(&["spectrum", "--config", path_str(&cfg)])), 2);
    // flags win over the file
    assert_eq!(code(&fuse(&["spectrum", "--config", path_str(&cfg), "--kind", "gl-endpoints"])), 0);

    fs::write(&cfg, "p = 3\nsmoothing = 2\n").unwrap();
    let o = fuse(&["spectrum", "--config", path_str(&cfg)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("smoothing"));

    fs::write(&cfg, "p 3\n").unwrap();
    assert_eq!(code(&fuse(&["spectrum", "--config", path_str(&cfg)])), 1);
    assert_eq!(code(&fuse(&["spectrum", "--p", "2", "--config", path_str(&dir.path().join("none"))])), 1);
}

#[test]
fn thread_count_and_help() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_fuse"))
            .args(["spectrum", "--p", "5", "--samples", "256"])
            .env("FUSE_THREADS", threads)
            .output()
            .unwrap()
    };
    let serial = run("0");
    let parallel = run("4");
    assert_eq!(code(&serial), 0);
    assert_eq!(stdout(&serial), stdout(&parallel));
    assert_eq!(code(&run("many")), 1);
    assert_eq!(code(&fuse(&["--help"])), 0);
    assert_eq!(code(&fuse(&["--version"])), 0);
    assert_eq!(code(&fuse(&[])), 1);
}
