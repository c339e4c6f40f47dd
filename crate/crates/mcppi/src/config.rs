//! Experiment configuration files.
//!
//! A config is a TOML document with the sections `[optimizer]`, `[bbo]`,
//! `[task]`, `[prior]` and `[mpc]`. Every key is optional; missing keys take
//! the defaults of the selected mode (see [`schema_help`]). Unknown sections or
//! keys and values of the wrong type are errors, all reported together.

use std::fmt::Write as _;
use std::path::Path;

use mcppi_core::envs::{BboKind, ControlTask};
use mcppi_core::temperature::{ReturnBound, TemperatureStrategy};
use toml::{Table, Value};

use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Bbo,
    Episodic,
    Mpc,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Bbo, Mode::Episodic, Mode::Mpc];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Bbo => "bbo",
            Mode::Episodic => "episodic",
            Mode::Mpc => "mpc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyName {
    Constant,
    Pi2,
    Em,
    Reps,
    Lbps,
    Essps,
    Cem,
}

impl StrategyName {
    const ALL: [(StrategyName, &'static str); 7] = [
        (StrategyName::Constant, "constant"),
        (StrategyName::Pi2, "pi2"),
        (StrategyName::Em, "em"),
        (StrategyName::Reps, "reps"),
        (StrategyName::Lbps, "lbps"),
        (StrategyName::Essps, "essps"),
        (StrategyName::Cem, "cem"),
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorKind {
    Se,
    White,
    Rbf,
    Qrff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskName {
    Pendulum,
    PointMass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSection {
    pub strategy: StrategyName,
    pub alpha: f64,
    pub alpha_bar: f64,
    pub alpha_init: f64,
    pub em_iters: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub return_bound: ReturnBound,
    pub n_star: f64,
    pub elites: usize,
    pub n_samples: usize,
    pub n_iter: usize,
}

impl OptimizerSection {
    pub fn strategy(&self) -> TemperatureStrategy {
        match self.strategy {
            StrategyName::Constant => TemperatureStrategy::Constant { alpha: self.alpha },
            StrategyName::Pi2 => TemperatureStrategy::Pi2 { alpha_bar: self.alpha_bar },
            StrategyName::Em => {
                TemperatureStrategy::EmRwr { alpha_init: self.alpha_init, n_fixed_point_iters: self.em_iters }
            }
            StrategyName::Reps => TemperatureStrategy::RepsKl { epsilon: self.epsilon },
            StrategyName::Lbps => TemperatureStrategy::Lbps { delta: self.delta, bound: self.return_bound },
            StrategyName::Essps => TemperatureStrategy::Essps { n_star: self.n_star },
            StrategyName::Cem => TemperatureStrategy::CemElite { k: self.elites },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BboSection {
    pub function: BboKind,
    pub dimension: usize,
    pub init_mean: f64,
    pub init_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSection {
    pub name: TaskName,
    pub steps: usize,
    pub dt: f64,
    pub torque_limit: f64,
    pub force_limit: f64,
}

impl TaskSection {
    pub fn task(&self) -> ControlTask {
        match self.name {
            TaskName::Pendulum => match ControlTask::pendulum() {
                ControlTask::PendulumSwingUp { m, l_p, g, .. } => ControlTask::PendulumSwingUp {
                    m,
                    l_p,
                    g,
                    torque_limit: self.torque_limit,
                    dt: self.dt,
                    steps: self.steps,
                },
                other => other,
            },
            TaskName::PointMass => match ControlTask::point_mass() {
                ControlTask::PointMass2D { mass, target, .. } => {
                    ControlTask::PointMass2D { mass, force_limit: self.force_limit, target, dt: self.dt, steps: self.steps }
                }
                other => other,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorSection {
    pub kind: PriorKind,
    pub lengthscale: f64,
    pub variance: f64,
    pub features: usize,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpcSection {
    pub horizon: usize,
    pub iters_per_step: usize,
    pub warmstart_iters: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub optimizer: OptimizerSection,
    pub bbo: BboSection,
    pub task: TaskSection,
    pub prior: PriorSection,
    pub mpc: MpcSection,
}

impl ExperimentConfig {
    pub fn default_for(mode: Mode) -> Self {
        let (delta, bound, n_samples, n_iter) = match mode {
            Mode::Bbo => (0.9, ReturnBound::SupNorm, 32, 20),
            Mode::Episodic => (0.5, ReturnBound::Range, 64, 50),
            Mode::Mpc => (0.5, ReturnBound::Range, 64, 1),
        };
        Self {
            mode,
            optimizer: OptimizerSection {
                strategy: StrategyName::Lbps,
                alpha: 10.0,
                alpha_bar: 10.0,
                alpha_init: 1.0,
                em_iters: 10,
                epsilon: 1.0,
                delta,
                return_bound: bound,
                n_star: 10.0,
                elites: 10,
                n_samples,
                n_iter,
            },
            bbo: BboSection { function: BboKind::Sphere, dimension: 20, init_mean: 1.0, init_variance: 0.5 },
            task: TaskSection { name: TaskName::Pendulum, steps: 250, dt: 0.02, torque_limit: 15.0, force_limit: 2.0 },
            prior: PriorSection { kind: PriorKind::Se, lengthscale: 0.05, variance: 1.0, features: 50, order: 15 },
            mpc: MpcSection { horizon: 30, iters_per_step: 1, warmstart_iters: 50, gamma: 1.0 },
        }
    }

    pub fn to_table(&self) -> Table {
        let o = &self.optimizer;
        let mut optimizer = Table::new();
        optimizer.insert("strategy".into(), s(name_of(&StrategyName::ALL, o.strategy)));
        optimizer.insert("alpha".into(), Value::Float(o.alpha));
        optimizer.insert("alpha_bar".into(), Value::Float(o.alpha_bar));
        optimizer.insert("alpha_init".into(), Value::Float(o.alpha_init));
        optimizer.insert("em_iters".into(), int(o.em_iters));
        optimizer.insert("epsilon".into(), Value::Float(o.epsilon));
        optimizer.insert("delta".into(), Value::Float(o.delta));
        optimizer.insert("return_bound".into(), s(name_of(&BOUNDS, o.return_bound)));
        optimizer.insert("n_star".into(), Value::Float(o.n_star));
        optimizer.insert("elites".into(), int(o.elites));
        optimizer.insert("n_samples".into(), int(o.n_samples));
        optimizer.insert("n_iter".into(), int(o.n_iter));

        let mut bbo = Table::new();
        bbo.insert("function".into(), s(name_of(&FUNCTIONS, self.bbo.function)));
        bbo.insert("dimension".into(), int(self.bbo.dimension));
        bbo.insert("init_mean".into(), Value::Float(self.bbo.init_mean));
        bbo.insert("init_variance".into(), Value::Float(self.bbo.init_variance));

        let mut task = Table::new();
        task.insert("name".into(), s(name_of(&TASKS, self.task.name)));
        task.insert("steps".into(), int(self.task.steps));
        task.insert("dt".into(), Value::Float(self.task.dt));
        task.insert("torque_limit".into(), Value::Float(self.task.torque_limit));
        task.insert("force_limit".into(), Value::Float(self.task.force_limit));

        let mut prior = Table::new();
        prior.insert("kind".into(), s(name_of(&PRIORS, self.prior.kind)));
        prior.insert("lengthscale".into(), Value::Float(self.prior.lengthscale));
        prior.insert("variance".into(), Value::Float(self.prior.variance));
        prior.insert("features".into(), int(self.prior.features));
        prior.insert("order".into(), int(self.prior.order));

        let mut mpc = Table::new();
        mpc.insert("horizon".into(), int(self.mpc.horizon));
        mpc.insert("iters_per_step".into(), int(self.mpc.iters_per_step));
        mpc.insert("warmstart_iters".into(), int(self.mpc.warmstart_iters));
        mpc.insert("gamma".into(), Value::Float(self.mpc.gamma));

        let mut root = Table::new();
        for (name, t) in [("optimizer", optimizer), ("bbo", bbo), ("task", task), ("prior", prior), ("mpc", mpc)] {
            root.insert(name.into(), Value::Table(t));
        }
        root
    }

    /// Serialize every key, defaults included.
    pub fn write(&self) -> String {
        toml::to_string(&self.to_table()).expect("config tables always serialize")
    }
}

const BOUNDS: [(ReturnBound, &str); 2] = [(ReturnBound::Range, "range"), (ReturnBound::SupNorm, "sup")];
const FUNCTIONS: [(BboKind, &str); 4] = [
    (BboKind::Sphere, "sphere"),
    (BboKind::Rosenbrock, "rosenbrock"),
    (BboKind::Rastrigin, "rastrigin"),
    (BboKind::StyblinskiTang, "styblinski_tang"),
];
const TASKS: [(TaskName, &str); 2] = [(TaskName::Pendulum, "pendulum"), (TaskName::PointMass, "point_mass")];
const PRIORS: [(PriorKind, &str); 4] =
    [(PriorKind::Se, "se"), (PriorKind::White, "white"), (PriorKind::Rbf, "rbf"), (PriorKind::Qrff, "qrff")];

fn name_of<T: PartialEq + Copy>(table: &[(T, &'static str)], v: T) -> &'static str {
    table.iter().find(|(t, _)| *t == v).map(|(_, n)| *n).expect("every variant is named")
}

fn s(v: &str) -> Value {
    Value::String(v.to_string())
}

fn int(v: usize) -> Value {
    Value::Integer(v as i64)
}

const DESCRIPTIONS: &[(&str, &str, &str)] = &[
    ("optimizer", "strategy", "temperature strategy: constant | pi2 | em | reps | lbps | essps | cem"),
    ("optimizer", "alpha", "inverse temperature for `constant`"),
    ("optimizer", "alpha_bar", "scale for `pi2` (alpha = alpha_bar / return range)"),
    ("optimizer", "alpha_init", "starting alpha for `em`"),
    ("optimizer", "em_iters", "fixed-point iterations for `em`"),
    ("optimizer", "epsilon", "KL bound for `reps`"),
    ("optimizer", "delta", "confidence for `lbps`, in (0, 1)"),
    ("optimizer", "return_bound", "return bound estimate for `lbps`: range | sup"),
    ("optimizer", "n_star", "target effective sample size for `essps`"),
    ("optimizer", "elites", "elite count for `cem`"),
    ("optimizer", "n_samples", "samples per iteration"),
    ("optimizer", "n_iter", "iterations (bbo, episodic)"),
    ("bbo", "function", "sphere | rosenbrock | rastrigin | styblinski_tang"),
    ("bbo", "dimension", "search space dimension"),
    ("bbo", "init_mean", "initial mean, every coordinate"),
    ("bbo", "init_variance", "initial isotropic variance"),
    ("task", "name", "pendulum | point_mass"),
    ("task", "steps", "episode length T"),
    ("task", "dt", "control period in seconds"),
    ("task", "torque_limit", "pendulum torque limit"),
    ("task", "force_limit", "point mass force limit per axis"),
    ("prior", "kind", "action prior: se | white | rbf | qrff"),
    ("prior", "lengthscale", "kernel lengthscale in seconds (se, rbf, qrff)"),
    ("prior", "variance", "kernel variance"),
    ("prior", "features", "number of RBF features"),
    ("prior", "order", "QRFF order (2*order features)"),
    ("mpc", "horizon", "planning horizon H"),
    ("mpc", "iters_per_step", "policy iterations per control step"),
    ("mpc", "warmstart_iters", "iterations before the first step"),
    ("mpc", "gamma", "covariance annealing when shifting, in [0, 1]"),
];

/// Every config key with its per-mode defaults.
pub fn schema_help() -> String {
    let tables: Vec<Table> = Mode::ALL.iter().map(|m| ExperimentConfig::default_for(*m).to_table()).collect();
    let mut out = String::from("Config keys (defaults for bbo / episodic / mpc):\n");
    let mut current = "";
    for (section, key, desc) in DESCRIPTIONS {
        if *section != current {
            let _ = writeln!(out, "  [{section}]");
            current = section;
        }
        let defaults: Vec<String> = tables.iter().map(|t| t[*section][*key].to_string()).collect();
        let shown = if defaults.iter().all(|d| *d == defaults[0]) { defaults[0].clone() } else { defaults.join(" / ") };
        let _ = writeln!(out, "    {key} = {shown}  # {desc}");
    }
    out
}

pub fn parse_config_file(path: &Path, mode: Mode) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config(&text, mode)
}

/// Parse and validate a config for `mode`; all problems are collected.
pub fn parse_config(text: &str, mode: Mode) -> Result<ExperimentConfig, ConfigError> {
    let table: Table = text.parse().map_err(|e: toml::de::Error| {
        let line = e.span().map(|sp| text[..sp.start.min(text.len())].matches('\n').count() + 1);
        let key = line.and_then(|l| text.lines().nth(l - 1)).and_then(|l| l.split_once('=')).map(|(k, _)| k.trim().to_string());
        ConfigError::Syntax { line, key, message: e.message().to_string() }
    })?;
    let mut cfg = ExperimentConfig::default_for(mode);
    let schema = cfg.to_table();
    let mut errors = Vec::new();
    for (section, body) in &table {
        let Some(Value::Table(known)) = schema.get(section) else {
            errors.push(format!("unknown section [{section}]"));
            continue;
        };
        let Value::Table(body) = body else {
            errors.push(format!("`{section}` must be a [section]"));
            continue;
        };
        for key in body.keys() {
            if !known.contains_key(key) {
                errors.push(format!("unknown key `{key}` in [{section}]{}", at(text, section, key)));
            }
        }
    }
    let mut r = Reader { table: &table, text, errors: &mut errors };
    let o = &mut cfg.optimizer;
    r.choice("optimizer", "strategy", &StrategyName::ALL, &mut o.strategy);
    r.float("optimizer", "alpha", &mut o.alpha, |v| v >= 0.0, "must be ≥ 0");
    r.float("optimizer", "alpha_bar", &mut o.alpha_bar, |v| v > 0.0, "must be > 0");
    r.float("optimizer", "alpha_init", &mut o.alpha_init, |v| v >= 0.0, "must be ≥ 0");
    r.count("optimizer", "em_iters", &mut o.em_iters, 0);
    r.float("optimizer", "epsilon", &mut o.epsilon, |v| v > 0.0, "must be > 0");
    r.float("optimizer", "delta", &mut o.delta, |v| v > 0.0 && v < 1.0, "must lie in (0, 1)");
    r.choice("optimizer", "return_bound", &BOUNDS, &mut o.return_bound);
    r.float("optimizer", "n_star", &mut o.n_star, |v| v >= 1.0, "must be ≥ 1");
    r.count("optimizer", "elites", &mut o.elites, 1);
    r.count("optimizer", "n_samples", &mut o.n_samples, 2);
    r.count("optimizer", "n_iter", &mut o.n_iter, 1);
    let b = &mut cfg.bbo;
    r.choice("bbo", "function", &FUNCTIONS, &mut b.function);
    r.count("bbo", "dimension", &mut b.dimension, 1);
    r.float("bbo", "init_mean", &mut b.init_mean, |_| true, "");
    r.float("bbo", "init_variance", &mut b.init_variance, |v| v > 0.0, "must be > 0");
    let t = &mut cfg.task;
    r.choice("task", "name", &TASKS, &mut t.name);
    r.count("task", "steps", &mut t.steps, 4);
    r.float("task", "dt", &mut t.dt, |v| v > 0.0, "must be > 0");
    r.float("task", "torque_limit", &mut t.torque_limit, |v| v > 0.0, "must be > 0");
    r.float("task", "force_limit", &mut t.force_limit, |v| v > 0.0, "must be > 0");
    let p = &mut cfg.prior;
    r.choice("prior", "kind", &PRIORS, &mut p.kind);
    r.float("prior", "lengthscale", &mut p.lengthscale, |v| v > 0.0, "must be > 0");
    r.float("prior", "variance", &mut p.variance, |v| v > 0.0, "must be > 0");
    r.count("prior", "features", &mut p.features, 2);
    r.count("prior", "order", &mut p.order, 1);
    let m = &mut cfg.mpc;
    r.count("mpc", "horizon", &mut m.horizon, 2);
    r.count("mpc", "iters_per_step", &mut m.iters_per_step, 0);
    r.count("mpc", "warmstart_iters", &mut m.warmstart_iters, 0);
    r.float("mpc", "gamma", &mut m.gamma, |v| (0.0..=1.0).contains(&v), "must lie in [0, 1]");

    if let Err(e) = cfg.optimizer.strategy().validate(cfg.optimizer.n_samples) {
        errors.push(format!("[optimizer] {e}"));
    }
    if cfg.bbo.function == BboKind::Rosenbrock && cfg.bbo.dimension < 2 {
        errors.push("[bbo] rosenbrock needs dimension ≥ 2".into());
    }
    if mode == Mode::Mpc && cfg.mpc.horizon > cfg.task.steps {
        errors.push("[mpc] horizon exceeds [task] steps".into());
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Schema(errors))
    }
}

/// Line of `key` inside `[section]`, formatted as a suffix.
fn at(text: &str, section: &str, key: &str) -> String {
    let mut current = "";
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if let Some(h) = l.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
            current = h.trim();
        } else if current == section && l.split_once('=').is_some_and(|(k, _)| k.trim() == key) {
            return format!(" (line {})", i + 1);
        }
    }
    String::new()
}

struct Reader<'a> {
    table: &'a Table,
    text: &'a str,
    errors: &'a mut Vec<String>,
}

impl Reader<'_> {
    fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.table.get(section)?.as_table()?.get(key)
    }

    fn fail(&mut self, section: &str, key: &str, msg: &str) {
        self.errors.push(format!("[{section}] `{key}`{}: {msg}", at(self.text, section, key)));
    }

    fn float(&mut self, section: &str, key: &str, slot: &mut f64, ok: impl Fn(f64) -> bool, why: &str) {
        let Some(v) = self.get(section, key) else { return };
        let x = match v {
            Value::Float(f) => *f,
            Value::Integer(i) => *i as f64,
            other => return self.fail(section, key, &format!("expected a number, found {}", other.type_str())),
        };
        if !x.is_finite() || !ok(x) {
            return self.fail(section, key, &format!("{x} {}", if why.is_empty() { "must be finite" } else { why }));
        }
        *slot = x;
    }

    fn count(&mut self, section: &str, key: &str, slot: &mut usize, min: usize) {
        let Some(v) = self.get(section, key) else { return };
        match v {
            Value::Integer(i) if *i >= min as i64 => *slot = *i as usize,
            Value::Integer(i) => self.fail(section, key, &format!("{i} must be ≥ {min}")),
            other => self.fail(section, key, &format!("expected an integer, found {}", other.type_str())),
        }
    }

    fn choice<T: Copy>(&mut self, section: &str, key: &str, options: &[(T, &'static str)], slot: &mut T) {
        let Some(v) = self.get(section, key) else { return };
        let Some(name) = v.as_str() else {
            return self.fail(section, key, &format!("expected a string, found {}", v.type_str()));
        };
        match options.iter().find(|(_, n)| *n == name) {
            Some((t, _)) => *slot = *t,
            None => {
                let names: Vec<&str> = options.iter().map(|(_, n)| *n).collect();
                self.fail(section, key, &format!("unknown value \"{name}\" (expected one of {})", names.join(", ")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        for mode in Mode::ALL {
            assert_eq!(parse_config("", mode).unwrap(), ExperimentConfig::default_for(mode));
        }
    }

    #[test]
    fn integer_accepted_for_float() {
        let c = parse_config("[optimizer]\nalpha = 3\n", Mode::Bbo).unwrap();
        assert_eq!(c.optimizer.alpha, 3.0);
    }

    #[test]
    fn help_lists_every_key() {
        let help = schema_help();
        for (_, key, _) in DESCRIPTIONS {
            assert!(help.contains(&format!("    {key} = ")), "{key}");
        }
        let keys: usize = ExperimentConfig::default_for(Mode::Mpc)
            .to_table()
            .values()
            .map(|t| t.as_table().unwrap().len())
            .sum();
        assert_eq!(keys, DESCRIPTIONS.len());
    }
}
