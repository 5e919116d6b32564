//! Driving the experiment runner from code instead of the binary.
use spinchaos::runner::{run, ConfigSource, Overrides};

fn main() {
    let config = r#"{
        "name": "sk-chaos",
        "experiment": {
            "kind": "chaos-curve",
            "model": { "kind": "sk", "n": 8 },
            "beta": 1.0,
            "observable": { "kind": "overlap-moment", "k": 1 },
            "t_grid": [0.0, 0.5, 1.0, 50.0],
            "n_disorder": 300
        },
        "seed": 11,
        "output": { "csv": "sk-chaos.csv" },
        "assert": [ { "metric": "monotone", "min": 1 } ]
    }"#;
    let source = ConfigSource {
        label: "inline".into(),
        text: config.into(),
    };
    let out_dir = std::env::temp_dir().join("spinchaos-example");
    let overrides = Overrides {
        out_dir: Some(out_dir),
        ..Overrides::default()
    };
    match run(&source, &overrides) {
        Ok(summary) => {
            println!("metrics: {:?}", summary.record.metrics);
            println!("wrote {}", summary.json_path.display());
            std::process::exit(summary.status.code());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.status.code());
        }
    }
}
