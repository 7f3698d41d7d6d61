use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_engagement-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn eval_prints_closed_forms() {
    let o = run(&["eval", "--p", "0.5", "--q", "0.5", "--v", "3", "--w", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("e_s=3 e_t=3 participates=true"), "{}", stdout(&o));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["eval", "--p", "1.2", "--q", "0.5", "--v", "3", "--w", "1"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--q", "0.5"]).status.code(), Some(2));
    assert_eq!(run(&["eval", "--config", "/nonexistent/cfg.json"]).status.code(), Some(1));
    let o = run(&["eval", "--p", "1.2", "--q", "0.5", "--v", "3", "--w", "1"]);
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
}

#[test]
fn tree_preset_widths() {
    let o = run(&["tree", "--preset", "appendix-d", "--dmax", "5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("d_s=2 d_t=1"), "{}", stdout(&o));
}

#[test]
fn simulate_is_seeded() {
    let args = ["simulate", "--p", "0.5", "--q", "0.5", "--v", "3", "--w", "1", "--replications", "20000", "--seed", "5"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["simulate", "--p", "0.3", "--q", "0.7", "--v", "2", "--w", "1", "--replications", "50000", "--seed", "9"];
    let one = Command::new(env!("CARGO_BIN_EXE_engagement-lab"))
        .args(args)
        .env("ENGAGEMENT_LAB_THREADS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_engagement-lab"))
        .args(args)
        .env("ENGAGEMENT_LAB_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn figure_list_names_presets() {
    let o = run(&["figure", "--list"]);
    let text = stdout(&o);
    for id in ["fig1-left", "fig2", "fig4", "fig6"] {
        assert!(text.contains(id), "{text}");
    }
}
