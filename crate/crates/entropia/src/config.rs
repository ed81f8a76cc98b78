//! Plain key=value experiment configs with sectioned headers.
//!
//! The on-disk format is deliberately minimal and diff-friendly:
//!
//! ```text
//! [experiment]
//! task = entropy
//! system = doubling
//! eps = 0.0625, 0.03125, 0.015625, 0.0078125
//! grid_g = 14
//! window = 4, 12
//! seed = 7
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Entropy,
    LocalEntropy,
    BoundCurve,
    VerifyTheorem,
    VerifyCorollary,
    CertifyEnvelopes,
    ScheduleReport,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Entropy => "entropy",
            Task::LocalEntropy => "local-entropy",
            Task::BoundCurve => "bound-curve",
            Task::VerifyTheorem => "verify-theorem",
            Task::VerifyCorollary => "verify-corollary",
            Task::CertifyEnvelopes => "certify-envelopes",
            Task::ScheduleReport => "schedule-report",
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Task> {
        match s {
            "entropy" => Ok(Task::Entropy),
            "local-entropy" => Ok(Task::LocalEntropy),
            "bound-curve" => Ok(Task::BoundCurve),
            "verify-theorem" => Ok(Task::VerifyTheorem),
            "verify-corollary" => Ok(Task::VerifyCorollary),
            "certify-envelopes" => Ok(Task::CertifyEnvelopes),
            "schedule-report" => Ok(Task::ScheduleReport),
            other => Err(Error::Config(format!("unknown task '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub task: Task,
    pub system: String,
    pub eps_ladder: Vec<f64>,
    pub grid_g: u32,
    pub window: (usize, usize),
    pub n_proxy: usize,
    /// number of quasi-random centers for local-entropy sampling
    pub centers: usize,
    pub budget_seconds: Option<f64>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: Task::Entropy,
            system: "doubling".into(),
            eps_ladder: vec![0.0625, 0.03125, 0.015625, 0.0078125],
            grid_g: 14,
            window: (4, 12),
            n_proxy: 16,
            centers: 256,
            budget_seconds: None,
            seed: 7,
            output_dir: None,
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eps_ladder.is_empty() {
            return Err(Error::Config("eps_ladder must not be empty".into()));
        }
        for w in self.eps_ladder.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::Config(
                    "eps_ladder must be strictly decreasing".into(),
                ));
            }
        }
        if self.eps_ladder.iter().any(|e| *e <= 0.0 || !e.is_finite()) {
            return Err(Error::Config("eps_ladder entries must be positive".into()));
        }
        if self.window.0 < 1 || self.window.1 < self.window.0 {
            return Err(Error::Config(format!(
                "window {:?} must satisfy 1 <= a <= b",
                self.window
            )));
        }
        if self.n_proxy < 1 {
            return Err(Error::Config("n_proxy must be at least 1".into()));
        }
        if let Some(b) = self.budget_seconds {
            if b <= 0.0 {
                return Err(Error::Config("budget_seconds must be positive".into()));
            }
        }
        Ok(())
    }

    /// Render back to the key=value format (for run archives).
    pub fn to_text(&self) -> String {
        let eps: Vec<String> = self.eps_ladder.iter().map(|e| format!("{e}")).collect();
        let mut out = String::from("[experiment]\n");
        out.push_str(&format!("task = {}\n", self.task.name()));
        out.push_str(&format!("system = {}\n", self.system));
        out.push_str(&format!("eps = {}\n", eps.join(", ")));
        out.push_str(&format!("grid_g = {}\n", self.grid_g));
        out.push_str(&format!("window = {}, {}\n", self.window.0, self.window.1));
        out.push_str(&format!("n_proxy = {}\n", self.n_proxy));
        out.push_str(&format!("centers = {}\n", self.centers));
        if let Some(b) = self.budget_seconds {
            out.push_str(&format!("budget_seconds = {b}\n"));
        }
        out.push_str(&format!("seed = {}\n", self.seed));
        if let Some(d) = &self.output_dir {
            out.push_str(&format!("out = {}\n", d.display()));
        }
        if let Some(w) = self.workers {
            out.push_str(&format!("workers = {w}\n"));
        }
        out
    }
}

fn bad(line_no: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line_no}: {msg}"))
}

fn parse_num<T: FromStr>(line_no: usize, key: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| bad(line_no, format!("{key}: {e}")))
}

/// Parse the sectioned key=value format; every error names its line.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut in_experiment = false;
    let mut saw_section = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| bad(line_no, "unterminated section header"))?;
            if name != "experiment" {
                return Err(bad(line_no, format!("unknown section '{name}'")));
            }
            in_experiment = true;
            saw_section = true;
            continue;
        }
        if !in_experiment {
            return Err(bad(line_no, "entries must appear under [experiment]"));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(line_no, "expected key = value"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "task" => cfg.task = value.parse().map_err(|e| bad(line_no, e))?,
            "system" => cfg.system = value.to_string(),
            "eps" => {
                let mut ladder = Vec::new();
                for part in value.split(',') {
                    ladder.push(parse_num::<f64>(line_no, "eps", part)?);
                }
                cfg.eps_ladder = ladder;
            }
            "grid_g" => cfg.grid_g = parse_num(line_no, key, value)?,
            "window" => {
                let (a, b) = value
                    .split_once(',')
                    .ok_or_else(|| bad(line_no, "window: expected 'a, b'"))?;
                cfg.window = (
                    parse_num(line_no, "window", a)?,
                    parse_num(line_no, "window", b)?,
                );
            }
            "n_proxy" => cfg.n_proxy = parse_num(line_no, key, value)?,
            "centers" => cfg.centers = parse_num(line_no, key, value)?,
            "budget_seconds" => cfg.budget_seconds = Some(parse_num(line_no, key, value)?),
            "seed" => cfg.seed = parse_num(line_no, key, value)?,
            "out" => cfg.output_dir = Some(PathBuf::from(value)),
            "workers" => cfg.workers = Some(parse_num(line_no, key, value)?),
            other => return Err(bad(line_no, format!("unknown key '{other}'"))),
        }
    }
    if !saw_section {
        return Err(Error::Config("missing [experiment] section".into()));
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.task = Task::VerifyTheorem;
        cfg.system = "cat".into();
        cfg.budget_seconds = Some(120.0);
        cfg.output_dir = Some(PathBuf::from("out"));
        let parsed = parse_config(&cfg.to_text()).unwrap();
        assert_eq!(parsed.task, Task::VerifyTheorem);
        assert_eq!(parsed.system, "cat");
        assert_eq!(parsed.eps_ladder, cfg.eps_ladder);
        assert_eq!(parsed.window, cfg.window);
        assert_eq!(parsed.budget_seconds, Some(120.0));
    }

    #[test]
    fn errors_name_lines() {
        let text = "[experiment]\ntask = entropy\nbogus_key = 3\n";
        match parse_config(text) {
            Err(Error::Config(msg)) => assert!(msg.contains("line 3"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
        let text = "[experiment]\ngrid_g = notanumber\n";
        match parse_config(text) {
            Err(Error::Config(msg)) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn empty_ladder_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.eps_ladder.clear();
        match cfg.validate() {
            Err(Error::Config(msg)) => assert!(msg.contains("eps_ladder"), "{msg}"),
            other => panic!("expected eps_ladder error, got {other:?}"),
        }
    }

    #[test]
    fn increasing_ladder_rejected() {
        let text = "[experiment]\neps = 0.1, 0.2\n";
        assert!(parse_config(text).is_err());
    }
}
