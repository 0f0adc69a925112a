//! Every acceptance criterion at its stated tolerance, one line each.
//! Two full desk-scale passes; expect about an hour on one core.
//!
//! cargo test -p regxplain --test acceptance
//!
//! Set REGXPLAIN_ACCEPTANCE_SINGLE=1 to skip the second pass.

use std::path::PathBuf;
use std::process::ExitCode;

use regxplain::acceptance::{run_repro, ReproOptions};
use regxplain::pipeline::workers_from_env;

fn main() -> ExitCode {
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let opts = ReproOptions {
        out,
        seed: 0,
        workers: workers_from_env(),
        two_passes: std::env::var_os("REGXPLAIN_ACCEPTANCE_SINGLE").is_none(),
        verbose: false,
    };
    let outcomes = match run_repro(&opts) {
        Ok(o) => o,
        Err(e) => {
            println!("acceptance run failed: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| o.pass == Some(false)).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
