//! Programmatic verification run, equivalent to `finsler verify`.

use finsler::spec::parse_metric;
use finsler::verify::{run, run_on, RunConfig};

fn main() -> finsler::Result<()> {
    let report = run(&RunConfig::new("sphere2").with_checks(&["thm2.6", "eq2.12", "contraction", "flatness"]))?;
    for c in &report.checks {
        println!("{:<12} {:<6} {}", c.id, c.verdict, c.max_residual);
    }

    let custom = parse_metric(
        r#"{"family": "riemannian", "dim": 2,
            "a": [[[{"coef": 1.0, "pow": [0, 0]}, {"coef": 0.3, "pow": [0, 2]}], []],
                  [[], [{"coef": 1.0, "pow": [0, 0]}, {"coef": 0.2, "pow": [2, 0]}]]]}"#,
    )?;
    let config = RunConfig {
        points: 8,
        ..RunConfig::new("inline").with_checks(&["struct.metricity", "eq2.13", "thm2.6"])
    };
    println!("{}", run_on(&custom, &config)?.to_json());
    Ok(())
}
