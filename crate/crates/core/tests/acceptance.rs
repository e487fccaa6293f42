//! Runs every acceptance criterion and prints one line each.
//!
//! `cargo test --test acceptance -- <module>` restricts the run to one
//! module; `--id <n>` to a single criterion.

use std::process::ExitCode;

use approxon::acceptance::{criteria, run_criterion, Setup};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut module = None;
    let mut id = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--id" => id = it.next().and_then(|s| s.parse::<u32>().ok()),
            // flags the default test harness would understand
            s if s.starts_with('-') => {}
            s => module = Some(s.to_string()),
        }
    }
    let setup = Setup::default();
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria() {
        if module.as_deref().is_some_and(|m| m != c.module) || id.is_some_and(|i| i != c.id) {
            continue;
        }
        let r = run_criterion(&c, &setup);
        println!("{}", r.line());
        ran += 1;
        if !r.passed {
            failed += 1;
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
