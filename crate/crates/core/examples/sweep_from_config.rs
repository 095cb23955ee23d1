//! Running a configured sweep from code, as the command-line tool does.

use qudit_link::sweep::{run, SweepConfig};

const CONFIG: &str = r#"
mode = "thermal"

[model]
n_sites = 6
s_bulk = 0.5
s_link = 1.0

[grid]
lambda_log = { min = 0.01, max = 0.5, points = 8 }
beta = [1e4]

[solver]
seed = 7
"#;

fn main() {
    let mut cfg = SweepConfig::parse(CONFIG).and_then(|c| c.resolve(CONFIG, None)).unwrap();
    cfg.output_directory = std::env::temp_dir().join("qudit-link-example");
    let out = run(&cfg).unwrap();
    println!("{}", out.report);
    for table in &out.tables {
        println!("--- {}", table.display());
        print!("{}", std::fs::read_to_string(table).unwrap());
    }
    println!("manifest: {}", out.manifest.display());
}
