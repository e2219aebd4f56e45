//! Runs `train` from a JSON config and reloads the saved model.

use std::fs;

use stiffnet::cli::{load_config, train_to_dir, ModelSnapshot, TrainArgs};

const CONFIG: &str = r#"{
  "problem": {"name": "linear2", "horizon": 0.5},
  "grid": {"K": 2, "lambda_max": 100},
  "net": {"hidden_layers": 1, "width": 10},
  "train": {"S": 64, "collocation_mode": "uniform+log", "iterations": 500, "lr": 0.005}
}"#;

fn main() -> stiffnet::Result<()> {
    let dir = std::env::temp_dir().join("stiffnet-config-example");
    fs::create_dir_all(&dir)?;
    let path = dir.join("run.json");
    fs::write(&path, CONFIG)?;

    let args = TrainArgs { config: path, out: Some(dir.join("out")), seed: None, svg: true };
    let config = load_config(&args, None)?;
    let outcome = train_to_dir(&config, true, &mut std::io::stdout())?;
    println!("outputs in {}", outcome.dir.display());

    let snapshot = ModelSnapshot::from_json(&fs::read_to_string(outcome.dir.join("model.json"))?)?;
    println!("snapshot v{} of a {} model, config hash {}", snapshot.version, snapshot.spec.form.as_str(), &snapshot.config_hash[..16]);
    let model = snapshot.restore()?;
    println!("Y(0.25) = {:?}", model.predict(0.25)?);
    Ok(())
}
