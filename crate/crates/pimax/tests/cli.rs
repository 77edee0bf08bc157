use std::path::Path;
use std::process::{Command, Output};

fn pimax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pimax"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| {
            l.split_once('=')
                .filter(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim().parse().unwrap())
        })
        .unwrap_or_else(|| panic!("no {key} in {text}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_analyze_eval_and_compose() {
    let tmp = tempfile::tempdir().unwrap();
    let run_dir = tmp.path().join("run");
    let out = pimax(&[
        "run",
        "--robots",
        "1",
        "--control",
        "split",
        "--bins",
        "4",
        "--steps",
        "3000",
        "--seed",
        "3",
        "--out",
        s(&run_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = stdout(&out);
    assert!(run_dir.join("summary.txt").is_file());
    assert!(run_dir.join("run.cfg").is_file());

    let analyzed = pimax(&["analyze", "--log", s(&run_dir)]);
    assert!(analyzed.status.success());
    assert_eq!(
        value(&stdout(&analyzed), "coverage_entropy_bits"),
        value(&summary, "coverage_entropy_bits")
    );

    let coarse = pimax(&[
        "analyze",
        "--log",
        s(&run_dir),
        "--analysis-bins",
        "5",
        "--window",
        "2000",
    ]);
    assert!(coarse.status.success());

    let eval_dir = tmp.path().join("eval");
    let out = pimax(&[
        "eval",
        "--learner",
        s(&run_dir),
        "--steps",
        "500",
        "--out",
        s(&eval_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(eval_dir.join("summary.txt").is_file());

    let learners = run_dir.join("learners");
    let comp_dir = tmp.path().join("comp");
    let out = pimax(&[
        "compose",
        "--left",
        s(&learners.join("controller_0")),
        "--right",
        s(&learners.join("controller_1")),
        "--steps",
        "500",
        "--out",
        s(&comp_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = stdout(&out);
    let sum = value(&report, "left_split_pi_bits") + value(&report, "right_split_pi_bits");
    // flooring the product policy shifts the sum slightly
    assert!((value(&report, "initial_composed_pi_bits") - sum).abs() < 1e-3 * sum.max(1.0));
    assert!(comp_dir.join("report.txt").is_file());
}

#[test]
fn flags_override_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "robots = 3\ncontrol = combined\nsteps = 100\nseed = 9\n",
    )
    .unwrap();
    let run_dir = tmp.path().join("run");
    let out = pimax(&[
        "run",
        "--config",
        s(&cfg),
        "--steps",
        "200",
        "--out",
        s(&run_dir),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let written = std::fs::read_to_string(run_dir.join("run.cfg")).unwrap();
    for line in [
        "robots = 3",
        "control = combined",
        "steps = 200",
        "seed = 9",
    ] {
        assert!(
            written.lines().any(|l| l == line),
            "missing {line} in\n{written}"
        );
    }
}

#[test]
fn bad_input_fails_with_a_one_line_reason() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec![
            "run".into(),
            "--robots".into(),
            "4".into(),
            "--steps".into(),
            "10".into(),
            "--out".into(),
            s(tmp.path()).into(),
        ],
        vec!["run".into(), "--control".into(), "both".into()],
        vec!["run".into(), "--steps".into(), "10".into()],
        vec![
            "analyze".into(),
            "--log".into(),
            s(&tmp.path().join("missing")).into(),
        ],
        vec!["frobnicate".into()],
    ];
    for args in cases {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = pimax(&refs);
        assert!(!out.status.success(), "{args:?} succeeded");
        let err = String::from_utf8_lossy(&out.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}
