use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn minedb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minedb")).args(args).output().unwrap()
}

fn repl(input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_minedb"))
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8(b.to_vec()).unwrap()
}

fn script(name: &str) -> String {
    root().join("scripts").join(name).to_string_lossy().into_owned()
}

/// Compares against tests/golden/<name>; set UPDATE_GOLDEN=1 to rewrite.
fn golden(name: &str, actual: &str) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

#[test]
fn walkthroughs_match_golden_output() {
    for d in ["msql", "minerule", "dmql", "minesql"] {
        let out = minedb(&["run", &script(&format!("{d}_walkthrough.dmq")), "--dialect", d]);
        assert!(out.status.success(), "{d}: {}", text(&out.stderr));
        golden(&format!("{d}_walkthrough.csv"), &text(&out.stdout));
    }
}

#[test]
fn walkthrough_text_format() {
    let out = minedb(&["run", &script("msql_walkthrough.dmq"), "--dialect", "msql", "--format", "text"]);
    assert!(out.status.success());
    golden("msql_walkthrough.txt", &text(&out.stdout));
}

#[test]
fn statement_error_exits_1_with_caret() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dmq");
    std::fs::write(&path, "GETRULES(TRANSACTIONS) INTO R\nWHERE SUPPORT > ;\nGETRULES(TRANSACTIONS) INTO S;\n").unwrap();
    let out = minedb(&["run", path.to_str().unwrap(), "--dialect", "msql"]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.starts_with("error: parse error at 2:17"), "{err}");
    assert!(err.contains("2 | WHERE SUPPORT > ;\n  |                 ^\n"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn keep_going_runs_the_rest() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.dmq");
    std::fs::write(
        &path,
        "SELECT * FROM NOWHERE;\nSELECT ID_TRANSAC FROM TRANSACTIONS WHERE ITEM='E';\n",
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let stop = minedb(&["run", p, "--dialect", "minesql"]);
    assert_eq!(stop.status.code(), Some(1));
    assert!(stop.stdout.is_empty());
    let go = minedb(&["run", p, "--dialect", "minesql", "--keep-going"]);
    assert_eq!(go.status.code(), Some(1));
    assert_eq!(text(&go.stdout), "id_transac\nt4\nt5\nt8\nt11\n");
    assert!(text(&go.stderr).contains("NOWHERE"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(minedb(&["run"]).status.code(), Some(2));
    assert_eq!(minedb(&["run", "x.dmq", "--dialect", "sql"]).status.code(), Some(2));
    assert_eq!(minedb(&["run", "/no/such/script.dmq"]).status.code(), Some(2));
    assert_eq!(minedb(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn export_csv_has_header_and_four_rules() {
    let out = minedb(&["export", &script("msql_walkthrough.dmq"), "--dialect", "msql", "--rules", "transaction_rb"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = text(&out.stdout);
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(csv.lines().next(), Some("body,head,body_count,rule_count,group_count,confidence"));
}

#[test]
fn export_normalized_writes_three_files() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("rb");
    let out = minedb(&[
        "export",
        &script("minesql_walkthrough.dmq"),
        "--dialect",
        "minesql",
        "--rules",
        "transaction_rb",
        "--normalized",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let read = |s: &str| std::fs::read_to_string(dir.path().join(format!("rb.{s}"))).unwrap();
    assert_eq!(read("rules").lines().count(), 5);
    assert_eq!(read("bodies").lines().count(), 1 + 5);
    assert_eq!(read("heads").lines().count(), 2);
}

#[test]
fn load_explodes_items() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("baskets.csv");
    std::fs::write(&path, "basket,items\n1,AB\n2,C\n").unwrap();
    let out = minedb(&["load", path.to_str().unwrap(), "--explode-items", "items"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout), "basket,items\n1,A\n1,B\n2,C\n");
}

#[test]
fn repl_session() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    std::fs::write(&csv, "basket,items\n1,AB\n2,AB\n3,A\n4,BC\n").unwrap();
    let input = format!(
        ".dialect minesql\n\
         .load {} as baskets explode-items=items\n\
         .tables\n\
         CREATE TABLE R(RL RULE);\n\
         INSERT INTO R(RL) MINE RULE, SUPPORT(RULE), CONFIDENCE(RULE) FOR ITEMS TO ITEMS\n\
         FROM (SELECT SET(ITEMS) FROM BASKETS GROUP BY BASKET)\n\
         WHERE SUPPORT(RULE)>=0.5 AND CONFIDENCE(RULE)>=0.6;\n\
         .format text\n\
         .rules r\n\
         SELECT * FROM NOWHERE;\n\
         .bogus\n\
         .quit\n\
         .tables\n",
        csv.display()
    );
    let out = repl(&input);
    assert!(out.status.success());
    let stdout = text(&out.stdout);
    golden("repl_session.txt", &stdout.replace(&csv.display().to_string(), "b.csv"));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("NOWHERE"), "{stderr}");
    assert!(stderr.contains("unknown command `.bogus`"), "{stderr}");
}
