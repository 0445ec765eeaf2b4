//! Run configuration: a TOML file whose values command-line flags override.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use super::CliError;
use crate::merge::MergeStrategy;
use crate::planner::{Direction, Linkage, Measure, OrderingSpec, Strategy};
use crate::repair::{RepairConfig, RepairMethod};

const DEFAULT_ORDERING: OrderingSpec = OrderingSpec::new(Measure::ModelSize, Direction::Descending);
const DEFAULT_TIMEOUT_SECS: u64 = 600;

/// Everything optional, as read from a file or from flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub strategy: Option<String>,
    pub ordering: Option<String>,
    pub linkage: Option<String>,
    pub merge_strategy: Option<String>,
    pub input_dir: Option<PathBuf>,
    pub gold_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub matcher: MatcherSection,
    pub repair: Option<RepairSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatcherSection {
    /// `baseline` (default) or `external`.
    pub kind: Option<String>,
    pub name: Option<String>,
    pub warm_start: Option<bool>,
    pub command: Option<String>,
    pub timeout_secs: Option<u64>,
    pub work_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairSection {
    pub method: Option<String>,
    pub threshold: Option<f64>,
}

impl ConfigFile {
    /// Paths in the file are taken relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut file: ConfigFile =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut file.input_dir, &mut file.gold_dir, &mut file.output_dir, &mut file.matcher.work_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(file)
    }

    /// Values set in `over` win.
    pub fn overridden_by(self, over: ConfigFile) -> ConfigFile {
        let repair = match (self.repair, over.repair) {
            (Some(a), Some(b)) => {
                Some(RepairSection { method: b.method.or(a.method), threshold: b.threshold.or(a.threshold) })
            }
            (a, b) => b.or(a),
        };
        ConfigFile {
            strategy: over.strategy.or(self.strategy),
            ordering: over.ordering.or(self.ordering),
            linkage: over.linkage.or(self.linkage),
            merge_strategy: over.merge_strategy.or(self.merge_strategy),
            input_dir: over.input_dir.or(self.input_dir),
            gold_dir: over.gold_dir.or(self.gold_dir),
            output_dir: over.output_dir.or(self.output_dir),
            jobs: over.jobs.or(self.jobs),
            matcher: MatcherSection {
                kind: over.matcher.kind.or(self.matcher.kind),
                name: over.matcher.name.or(self.matcher.name),
                warm_start: over.matcher.warm_start.or(self.matcher.warm_start),
                command: over.matcher.command.or(self.matcher.command),
                timeout_secs: over.matcher.timeout_secs.or(self.matcher.timeout_secs),
                work_dir: over.matcher.work_dir.or(self.matcher.work_dir),
            },
            repair,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatcherConfig {
    Baseline { warm_start: bool },
    External { name: String, command: String, timeout: Duration, work_dir: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub ordering: Option<OrderingSpec>,
    pub linkage: Option<Linkage>,
    pub matcher: MatcherConfig,
    pub merge_strategy: MergeStrategy,
    pub repair: Option<RepairConfig>,
    pub input_dir: PathBuf,
    pub gold_dir: PathBuf,
    pub output_dir: PathBuf,
    pub jobs: usize,
}

impl RunConfig {
    /// Ordering or linkage name, empty when the strategy uses neither.
    pub fn variant_label(&self) -> String {
        match (self.ordering, self.linkage) {
            (Some(o), _) => o.to_string(),
            (None, Some(l)) => l.name().to_string(),
            (None, None) => String::new(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Strategy, ordering and linkage, with defaults for the latter two.
pub fn resolve_strategy(file: &ConfigFile) -> Result<(Strategy, Option<OrderingSpec>, Option<Linkage>), CliError> {
    let strategy: Strategy =
        file.strategy.as_deref().ok_or_else(|| config_err("no strategy given"))?.parse().map_err(config_err)?;
    let ordering = match (strategy.uses_ordering(), file.ordering.as_deref()) {
        (true, Some(o)) => Some(o.parse().map_err(config_err)?),
        (true, None) => Some(DEFAULT_ORDERING),
        (false, Some(_)) => return Err(config_err(format!("an ordering does not apply to {}", strategy.name()))),
        (false, None) => None,
    };
    let linkage = match (strategy == Strategy::ImSim, file.linkage.as_deref()) {
        (true, Some(l)) => Some(l.parse().map_err(config_err)?),
        (true, None) => Some(Linkage::default()),
        (false, Some(_)) => return Err(config_err(format!("a linkage does not apply to {}", strategy.name()))),
        (false, None) => None,
    };
    Ok((strategy, ordering, linkage))
}

/// Checks strategy-specific fields and fills in defaults.
pub fn resolve(file: ConfigFile) -> Result<RunConfig, CliError> {
    let (strategy, ordering, linkage) = resolve_strategy(&file)?;
    let merge_strategy = match file.merge_strategy.as_deref() {
        Some(m) => m.parse().map_err(config_err)?,
        None => MergeStrategy::default(),
    };
    let matcher = match file.matcher.kind.as_deref().unwrap_or("baseline") {
        "baseline" => {
            if file.matcher.command.is_some() {
                return Err(config_err("a matcher command needs kind = \"external\""));
            }
            MatcherConfig::Baseline { warm_start: file.matcher.warm_start.unwrap_or(true) }
        }
        "external" => {
            let command = file.matcher.command.ok_or_else(|| config_err("the external matcher needs a command"))?;
            let secs = file.matcher.timeout_secs.unwrap_or(DEFAULT_TIMEOUT_SECS);
            if secs == 0 {
                return Err(config_err("timeout_secs must be positive"));
            }
            MatcherConfig::External {
                name: file.matcher.name.unwrap_or_else(|| "external".into()),
                command,
                timeout: Duration::from_secs(secs),
                work_dir: file.matcher.work_dir,
            }
        }
        other => return Err(config_err(format!("unknown matcher kind '{other}'"))),
    };
    let repair = match file.repair {
        None => None,
        Some(r) => {
            let method: RepairMethod =
                r.method.as_deref().ok_or_else(|| config_err("repair needs a method"))?.parse().map_err(config_err)?;
            let config = RepairConfig { method, threshold: r.threshold };
            config.validate(false).map_err(config_err)?;
            Some(config)
        }
    };
    let input_dir = file.input_dir.ok_or_else(|| config_err("no input directory given"))?;
    let gold_dir = file.gold_dir.ok_or_else(|| config_err("no gold directory given"))?;
    for (what, dir) in [("input", &input_dir), ("gold", &gold_dir)] {
        if !dir.is_dir() {
            return Err(config_err(format!("{what} directory {} does not exist", dir.display())));
        }
    }
    Ok(RunConfig {
        strategy,
        ordering,
        linkage,
        matcher,
        merge_strategy,
        repair,
        input_dir,
        gold_dir,
        output_dir: file.output_dir.unwrap_or_else(|| PathBuf::from("msmatch-out")),
        jobs: file.jobs.unwrap_or(1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirs() -> (tempfile::TempDir, ConfigFile) {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("in")).unwrap();
        std::fs::create_dir(dir.path().join("gold")).unwrap();
        let file = ConfigFile {
            input_dir: Some(dir.path().join("in")),
            gold_dir: Some(dir.path().join("gold")),
            ..ConfigFile::default()
        };
        (dir, file)
    }

    fn with(strategy: &str, file: ConfigFile) -> ConfigFile {
        ConfigFile { strategy: Some(strategy.into()), ..file }
    }

    #[test]
    fn defaults() {
        let (_d, file) = dirs();
        let c = resolve(with("im-order", file.clone())).unwrap();
        assert_eq!(c.ordering, Some(DEFAULT_ORDERING));
        assert_eq!(c.merge_strategy, MergeStrategy::NoDrift);
        assert_eq!(c.matcher, MatcherConfig::Baseline { warm_start: true });
        assert_eq!(c.jobs, 1);
        assert_eq!(c.variant_label(), "ModelSize-Desc");
        let c = resolve(with("im-sim", file.clone())).unwrap();
        assert_eq!(c.linkage, Some(Linkage::Average));
        let c = resolve(with("all-pairs", file)).unwrap();
        assert_eq!(c.variant_label(), "");
    }

    #[test]
    fn strategy_specific_fields_are_checked() {
        let (_d, file) = dirs();
        let linkage = ConfigFile { linkage: Some("single".into()), ..file.clone() };
        assert!(resolve(with("im-sim", linkage.clone())).is_ok());
        assert!(matches!(resolve(with("tp-window", linkage)), Err(CliError::Config(_))));
        let ordering = ConfigFile { ordering: Some("classes-asc".into()), ..file.clone() };
        assert!(matches!(resolve(with("tp-sim", ordering)), Err(CliError::Config(_))));
        assert!(matches!(resolve(file.clone()), Err(CliError::Config(_))));
        assert!(matches!(resolve(with("no-such", file)), Err(CliError::Config(_))));
    }

    #[test]
    fn missing_directories() {
        let (d, file) = dirs();
        let missing = ConfigFile { gold_dir: Some(d.path().join("nope")), ..file };
        assert!(matches!(resolve(with("all-pairs", missing)), Err(CliError::Config(_))));
    }

    #[test]
    fn flags_override_file() {
        let (d, _) = dirs();
        let path = d.path().join("run.toml");
        std::fs::write(
            &path,
            "strategy = \"im-sim\"\nlinkage = \"complete\"\ninput_dir = \"in\"\ngold_dir = \"gold\"\n\
             [matcher]\nkind = \"external\"\ncommand = \"m {source} {target} {inputAlignment} {outputAlignment}\"\n\
             [repair]\nmethod = \"error-degree\"\nthreshold = 0.9\n",
        )
        .unwrap();
        let file = ConfigFile::load(&path).unwrap();
        assert_eq!(file.input_dir, Some(d.path().join("in")));
        let flags = ConfigFile {
            linkage: Some("single".into()),
            repair: Some(RepairSection { method: None, threshold: Some(0.6) }),
            ..ConfigFile::default()
        };
        let c = resolve(file.overridden_by(flags)).unwrap();
        assert_eq!(c.linkage, Some(Linkage::Single));
        assert_eq!(c.repair, Some(RepairConfig { method: RepairMethod::ErrorDegree, threshold: Some(0.6) }));
        assert!(matches!(c.matcher, MatcherConfig::External { timeout, .. } if timeout == Duration::from_secs(600)));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let d = tempfile::tempdir().unwrap();
        let path = d.path().join("run.toml");
        std::fs::write(&path, "strategy = \"all-pairs\"\nstratgy = \"x\"\n").unwrap();
        assert!(matches!(ConfigFile::load(&path), Err(CliError::Config(_))));
    }
}
