use kmlift::verify::{load_corpus, run_criterion, RunConfig, CRITERIA};
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

fn main() -> ExitCode {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let corpus = match load_corpus(&dir) {
        Ok(c) => c,
        Err(e) => {
            println!("FAIL corpus: {e}");
            return ExitCode::FAILURE;
        }
    };
    let cfg = match RunConfig::default().with_env() {
        Ok(c) => c,
        Err(e) => {
            println!("FAIL config: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut all_ok = true;
    for (id, name, budget) in CRITERIA {
        let t0 = Instant::now();
        let res = run_criterion(id, &corpus, &cfg);
        let secs = t0.elapsed().as_secs_f64();
        match res {
            Ok(recs) => {
                let bad: Vec<_> = recs.iter().filter(|r| !r.pass).collect();
                let ok = bad.is_empty() && secs <= budget;
                all_ok &= ok;
                println!(
                    "{} {id}. {name}: {}/{} checks pass, {secs:.1} s (budget {budget} s)",
                    if ok { "PASS" } else { "FAIL" },
                    recs.len() - bad.len(),
                    recs.len()
                );
                for r in bad {
                    println!("    {} [{}] {}: {:e} > {:e}", r.check, r.lattice, r.params, r.value, r.tolerance);
                }
            }
            Err(e) => {
                all_ok = false;
                println!("FAIL {id}. {name}: {e}");
            }
        }
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
