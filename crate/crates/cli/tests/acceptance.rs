//! Acceptance suite: one line per criterion. Criteria listed in `KNOWN_RED`
//! are reported but do not fail the run; an unexpected pass does.
//! Arguments select criteria by id; `--verbose` lists every check.

use std::process::ExitCode;

use curvebif_cli::acceptance::all;

/// Criteria that are implemented at the stated tolerance and do not pass.
const KNOWN_RED: &[(&str, &str)] = &[(
    "5b",
    "for p = 1 the computed decay right of the node is exponential in lambda, not lambda^-1",
)];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let verbose = args.iter().any(|a| a == "--verbose");
    let filter: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    for c in all() {
        let o = c();
        if !filter.is_empty() && !filter.iter().any(|f| *f == o.id) {
            continue;
        }
        let red = KNOWN_RED.iter().find(|(id, _)| *id == o.id);
        match (o.passed(), red) {
            (true, None) | (false, Some(_)) => {}
            _ => unexpected += 1,
        }
        if verbose {
            println!("{}", o.header());
            print!("{}", o.details());
        } else {
            println!("{}", o.line());
        }
        if let Some((_, why)) = red {
            println!("    {} known red: {why}", if o.passed() { "unexpected pass of" } else { "expected failure," });
        }
    }
    if unexpected == 0 {
        println!("acceptance: ok");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {unexpected} unexpected result(s)");
        ExitCode::FAILURE
    }
}
