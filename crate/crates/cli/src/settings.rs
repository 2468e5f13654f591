use dialsent_core::config::{ExperimentConfig, KeyValues};

use crate::{CliError, CliResult, ExperimentArgs};

/// Layers the config file, `DIALSENT_*` variables from `env` and flags.
pub fn resolve_config(
    args: &ExperimentArgs,
    env: impl IntoIterator<Item = (String, String)>,
) -> CliResult<ExperimentConfig> {
    let mut kv = match &args.config {
        Some(path) => KeyValues::load(path)?,
        None => KeyValues::default(),
    };
    kv.apply_env(ExperimentConfig::KEYS, env);
    let path = |p: &std::path::Path| p.display().to_string();
    let flags: [(&str, Option<String>); 8] = [
        ("seed", args.seed.map(|s| s.to_string())),
        ("regime", args.regime.clone()),
        ("budgets", args.budgets.clone()),
        ("out_dir", args.out.as_deref().map(path)),
        ("jobs", args.jobs.map(|j| j.to_string())),
        ("train_corpus", args.train_corpus.as_deref().map(path)),
        ("dev_corpus", args.dev_corpus.as_deref().map(path)),
        ("test_corpus", args.test_corpus.as_deref().map(path)),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            kv.set(key, v);
        }
    }
    for pair in &args.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got {pair:?}")))?;
        kv.set(k.trim(), v.trim());
    }
    ExperimentConfig::from_key_values(&kv).map_err(|e| CliError::usage(e.to_string()))
}
