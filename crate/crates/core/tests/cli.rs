use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn stc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stc")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_modes_agree_on_data_files() {
    let expected = [
        ("counter.json", r#"{"output":[10,21,32],"final_state":{"1":3}}"#),
        ("if_branch.json", r#"{"output":[3,9,5],"final_state":{"1":null,"2":2,"3":3,"4":null}}"#),
        ("fig1.json", r#"{"output":[5,11,21,35,53],"final_state":{"1":5,"2":0,"3":0,"4":25,"5":0,"6":10,"7":2}}"#),
        ("repeated.json", r#"{"output":[2,4],"final_state":{"1":4}}"#),
    ];
    for (file, want) in expected {
        for mode in ["seq", "pipeline", "auto"] {
            for workers in ["1", "3"] {
                let o = stc(&["run", &data(file), "--mode", mode, "--workers", workers]);
                assert!(o.status.success(), "{file} {mode}");
                assert_eq!(stdout(&o).trim_end(), want, "{file} {mode} w{workers}");
            }
        }
    }
}

#[test]
fn interleaved_rejects_repeated_letters() {
    let o = stc(&["run", &data("repeated.json"), "--mode", "interleaved"]);
    assert_eq!(o.status.code(), Some(2));
    let o = stc(&["run", &data("counter.json"), "--mode", "interleaved"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn check_single_file_prints_table() {
    let o = stc(&["check", &data("if_branch.json")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("program "));
    for mode in ["seq", "pipeline/w8", "auto/w4", "split-join"] {
        assert!(out.lines().any(|l| l.starts_with(mode) && l.ends_with(" ok")), "{mode}:\n{out}");
    }
}

#[test]
fn mutation_is_caught_and_dump_replays() {
    let dir = tempfile::tempdir().unwrap();
    let dumped = dir.path().join("diverged.json");
    let dumped = dumped.to_str().unwrap();
    let o = stc(&["check", "--fuzz", "--seed", "7", "--trials", "20", "--mutation", "swap-stage-order", "--dump", dumped]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("DIVERGED"));

    let again = stc(&["check", dumped, "--mutation", "swap-stage-order"]);
    assert_eq!(again.status.code(), Some(1));
    let clean = stc(&["check", dumped]);
    assert_eq!(clean.status.code(), Some(0));
}

#[test]
fn fuzz_output_is_deterministic() {
    let a = stc(&["check", "--fuzz", "--seed", "3", "--trials", "30"]);
    let b = stc(&["check", "--fuzz", "--seed", "3", "--trials", "30"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().last(), Some("30/30 equal"));
}

#[test]
fn dot_lists_vertices_and_edges() {
    let o = stc(&["dot", &data("fig1.json")]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("digraph {\n") && out.ends_with("}\n"));
    let edges = out.lines().filter(|l| l.contains("->")).count();
    assert_eq!((out.lines().count() - 2 - edges, edges), (5, 7));
    assert!(out.contains(r#""c" -> "d" [label="5"];"#));

    let ext = stdout(&stc(&["dot", &data("counter.json"), "--extended"]));
    assert!(ext.contains("counter_add"));
}

#[test]
fn bench_prints_csv() {
    let o = stc(&["bench", "--stages", "2", "--list-len", "4", "--delay-ms", "1", "--workers", "2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines[0], "mode,stages,list_len,delay_ms,wall_ms");
    assert!(lines[1].starts_with("seq,2,4,1,"));
    assert!(lines[2].starts_with("pipeline,2,4,1,"));
}

#[test]
fn bad_inputs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    };
    let broken = write("broken.json", "{\"threads\": [");
    let unknown = write("unknown.json", r#"{"threads":[{"id":1,"fn":"counter_add"}],"word":[2],"input":[]}"#);
    let missing = dir.path().join("missing.json").display().to_string();
    for file in [&broken, &unknown, &missing] {
        for cmd in ["run", "check", "dot"] {
            assert_eq!(stc(&[cmd, file]).status.code(), Some(2), "{cmd} {file}");
        }
    }
    assert_eq!(stc(&["run", &data("counter.json"), "--workers", "0"]).status.code(), Some(2));
}
