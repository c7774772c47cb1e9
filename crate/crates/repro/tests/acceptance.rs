//! Runs every acceptance criterion at full size and prints one line each.
//! Exits non-zero if any criterion fails.

use std::process::ExitCode;

use topoprobe::Result;
use topoprobe_repro::{
    conservation, gradient_check, oracle_equivalence, pipeline_runs, raw_data_topology,
    training_accuracy, validation_shapes, Ledger, Verdict,
};

const SEED: u64 = 0;

fn report(id: u32, name: &'static str, outcome: Result<Verdict>) -> Verdict {
    let v = outcome.unwrap_or_else(|e| Verdict {
        id,
        name,
        passed: false,
        detail: format!("error: {e}"),
    });
    println!("{}", v.line());
    v
}

fn main() -> ExitCode {
    let mut ledger = Ledger::default();
    let mut verdicts = vec![
        report(1, "raw-data topology", raw_data_topology(SEED, &mut ledger)),
        report(2, "validation shapes", validation_shapes(SEED)),
        report(
            3,
            "oracle equivalence",
            oracle_equivalence(200, SEED, &mut ledger),
        ),
        report(4, "training accuracy", training_accuracy(&[0, 1, 2, 3, 4])),
        report(5, "gradient check", gradient_check(20, SEED)),
    ];
    match pipeline_runs(SEED, &mut ledger) {
        Ok((six, seven)) => {
            println!("{}", six.line());
            println!("{}", seven.line());
            verdicts.extend([six, seven]);
        }
        Err(e) => {
            verdicts.push(report(6, "per-layer diagrams", Err(e)));
            verdicts.push(report(
                7,
                "determinism",
                Err(topoprobe::Error::Parse(
                    "pipeline runs did not complete".into(),
                )),
            ));
        }
    }
    verdicts.push(report(8, "simplex conservation", Ok(conservation(&ledger))));

    let failed: Vec<u32> = verdicts
        .iter()
        .filter(|v| !v.passed)
        .map(|v| v.id)
        .collect();
    println!(
        "\nacceptance: {} of {} criteria passed",
        verdicts.len() - failed.len(),
        verdicts.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
