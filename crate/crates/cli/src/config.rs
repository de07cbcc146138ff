//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value` with dotted keys; `#` starts a comment. Lists are
//! comma separated. Every key has a default that depends on the experiment, so
//! an empty file is a valid configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use gmclab_core::atomic::{alpha_from_gamma, Construction};
use gmclab_core::chaos::moment_bound;
use gmclab_core::field::Backend;
use gmclab_core::kernels::{Family, SeedKernel};
use gmclab_core::lattice::MAX_SITES;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    Field,
    Chaos,
    Atoms,
    Spectrum,
    Laplace,
    Tail,
    Scaling,
    Kpz,
    Duality,
    Lq,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Field,
        Experiment::Chaos,
        Experiment::Atoms,
        Experiment::Spectrum,
        Experiment::Laplace,
        Experiment::Tail,
        Experiment::Scaling,
        Experiment::Kpz,
        Experiment::Duality,
        Experiment::Lq,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Experiment::Field => "field",
            Experiment::Chaos => "chaos",
            Experiment::Atoms => "atoms",
            Experiment::Spectrum => "spectrum",
            Experiment::Laplace => "laplace",
            Experiment::Tail => "tail",
            Experiment::Scaling => "scaling",
            Experiment::Kpz => "kpz",
            Experiment::Duality => "duality",
            Experiment::Lq => "lq",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.tag() == tag)
    }

    /// Experiments whose statistics are taken on the atomic measure.
    fn uses_atomic(self, measure: Measure) -> bool {
        match self {
            Experiment::Atoms | Experiment::Laplace | Experiment::Tail | Experiment::Scaling => true,
            Experiment::Spectrum | Experiment::Lq => measure == Measure::Atomic,
            _ => false,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub key: String,
    pub message: String,
}

impl Diagnostic {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self { key: key.to_string(), message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Key/value pairs as read from a file, before typing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let mut entries = BTreeMap::new();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                errors.push(Diagnostic::new(&format!("line {}", i + 1), format!("expected key = value, got '{line}'")));
                continue;
            };
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_') {
                errors.push(Diagnostic::new(&format!("line {}", i + 1), format!("bad key '{k}'")));
                continue;
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                errors.push(Diagnostic::new(k, format!("duplicate key on line {}", i + 1)));
            }
        }
        if errors.is_empty() {
            Ok(Self { entries })
        } else {
            Err(errors)
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaMode {
    /// `alpha = gamma^2 / (2d)`.
    Duality,
    Explicit(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ZMinMode {
    /// Chosen so that the base box carries this many atoms on average.
    Auto { atoms: f64 },
    Explicit(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    Chaos,
    Atomic,
}

/// Scale handling for multi-radius experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Design {
    /// One field level for all radii.
    Fixed,
    /// Field level and lattice rescaled with the box, which turns the exact
    /// scaling relation of the exact kernels into an identity in law.
    Matched,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelConfig {
    pub family: Family,
    pub scale: f64,
    pub seed: SeedKernel,
    pub t0: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub dimension: usize,
    pub kernel: KernelConfig,
    pub gamma2: f64,
    pub level: u32,
    pub resolution: usize,
    pub backend: Backend,
    pub replicas: usize,
    pub master_seed: u64,
    pub alpha: AlphaMode,
    pub z_min: ZMinMode,
    pub construction: Construction,
    pub measure: Measure,
    pub design: Design,
    pub lambda_grid: Vec<f64>,
    pub q_grid: Vec<f64>,
    pub u_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
    pub beta: f64,
    pub cantor_depth: u32,
    pub cantor_levels: Vec<u32>,
    pub box_depths: Vec<u32>,
    pub gamma2_sweep: Vec<f64>,
    pub tolerance: f64,
    pub ci_level: f64,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
    pub field_pairs: usize,
    pub field_dump: bool,
    pub dump_replicas: usize,
    pub plot: bool,
    pub output_dir: PathBuf,
}

fn base_defaults() -> Vec<(&'static str, &'static str)> {
    vec![
        ("dimension", "1"),
        ("kernel.family", "exact1d"),
        ("kernel.T", "1"),
        ("kernel.seed", "gaussian"),
        ("kernel.t0", "1"),
        ("gamma2", "0.5"),
        ("level", "6"),
        ("grid.resolution", "1024"),
        ("grid.backend", "auto"),
        ("replicas", "1000"),
        ("master_seed", "1"),
        ("alpha.mode", "duality"),
        ("alpha.value", "0.5"),
        ("z_min", "auto"),
        ("z_min.atoms", "10000"),
        ("construction", "direct"),
        ("measure", "chaos"),
        ("design", "matched"),
        ("lambda_grid", "0.25,0.125,0.0625,0.03125,0.015625"),
        ("q_grid", "0.5,1,1.5"),
        ("u_grid", "0.25,0.5,1,2,4"),
        ("s_grid", "0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9"),
        ("beta", "0.25"),
        ("cantor.depth", "6"),
        ("cantor.levels", "2,3,4,5,6"),
        ("box_depths", "2,3,4,5,6"),
        ("gamma2_sweep", "0.01,1,3.6"),
        ("tolerance", "0.1"),
        ("ci_level", "0.95"),
        ("bootstrap.resamples", "1000"),
        ("bootstrap.seed", "24301"),
        ("field.pairs", "20"),
        ("field.dump", "false"),
        ("atoms.dump_replicas", "1"),
        ("plot", "true"),
        ("output.dir", "results"),
    ]
}

fn experiment_defaults(e: Experiment) -> Vec<(&'static str, &'static str)> {
    match e {
        Experiment::Field => vec![("replicas", "2000"), ("grid.resolution", "256")],
        Experiment::Chaos => vec![("replicas", "10000"), ("lambda_grid", "1,0.5,0.25,0.125")],
        Experiment::Atoms => vec![
            ("dimension", "2"),
            ("kernel.family", "exact2d"),
            ("gamma2", "1"),
            ("level", "32"),
            ("grid.resolution", "256"),
            ("replicas", "8"),
            ("z_min.atoms", "20000"),
        ],
        Experiment::Spectrum => vec![("grid.resolution", "256"), ("replicas", "4000")],
        Experiment::Laplace => vec![
            ("gamma2", "1"),
            ("grid.resolution", "64"),
            ("replicas", "20000"),
            ("z_min", "1e-7"),
            ("bootstrap.resamples", "500"),
        ],
        Experiment::Tail => vec![
            ("gamma2", "1"),
            ("grid.resolution", "256"),
            ("replicas", "100000"),
            ("z_min", "0.01"),
            ("construction", "subordinated"),
            ("tolerance", "0.05"),
        ],
        Experiment::Scaling => vec![
            ("gamma2", "1"),
            ("level", "4"),
            ("grid.resolution", "64"),
            ("replicas", "20000"),
            ("lambda_grid", "0.5,0.25,0.125"),
            ("q_grid", "0.25"),
            ("z_min", "1e-6"),
            ("bootstrap.resamples", "500"),
        ],
        Experiment::Kpz => vec![("level", "8"), ("grid.resolution", "2916"), ("replicas", "400")],
        Experiment::Duality => vec![
            ("gamma2", "1"),
            ("level", "8"),
            ("grid.resolution", "2916"),
            ("replicas", "400"),
            ("z_min", "1e-4"),
            ("construction", "subordinated"),
        ],
        Experiment::Lq => vec![
            ("grid.resolution", "1024"),
            ("level", "64"),
            ("replicas", "200"),
            ("q_grid", "-1,0,0.5,1,1.5,2"),
        ],
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(|s| s.trim().parse().ok()).collect()
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

struct Reader<'a> {
    map: &'a BTreeMap<String, String>,
    errors: Vec<Diagnostic>,
}

impl Reader<'_> {
    fn get<T>(&mut self, key: &str, parse: impl Fn(&str) -> Option<T>, what: &str) -> Option<T> {
        let v = self.map.get(key).expect("every key has a default");
        let out = parse(v);
        if out.is_none() {
            self.errors.push(Diagnostic::new(key, format!("expected {what}, got '{v}'")));
        }
        out
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str) -> Option<T> {
        self.get(key, |v| v.parse().ok(), "a number")
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str) -> Option<Vec<T>> {
        self.get(key, parse_list, "a comma-separated list of numbers")
    }
}

impl ExperimentConfig {
    /// Resolved configuration: experiment defaults overlaid with `raw`.
    pub fn build(experiment: Option<Experiment>, raw: &RawConfig) -> Result<Self, Vec<Diagnostic>> {
        let mut map: BTreeMap<String, String> = base_defaults().into_iter().map(|(k, v)| (k.into(), v.into())).collect();
        if let Some(e) = experiment {
            for (k, v) in experiment_defaults(e) {
                map.insert(k.into(), v.into());
            }
        }
        let mut errors = Vec::new();
        for (k, v) in &raw.entries {
            if k == "experiment" {
                if let Some(e) = experiment {
                    if v != e.tag() {
                        errors.push(Diagnostic::new(k, format!("file is for '{v}' but '{e}' was requested")));
                    }
                }
                continue;
            }
            if !map.contains_key(k) {
                errors.push(Diagnostic::new(k, "unknown key"));
                continue;
            }
            map.insert(k.clone(), v.clone());
        }
        let mut r = Reader { map: &map, errors };
        let family = r.get("kernel.family", |v| Family::from_tag(v).ok(), "exact1d, exact2d, star or gff-square");
        let seed = r.get("kernel.seed", |v| SeedKernel::from_tag(v).ok(), "gaussian or exponential");
        let backend = r.get("grid.backend", |v| Backend::from_tag(v).ok(), "auto, circulant or dense");
        let alpha = r.get(
            "alpha.mode",
            |v| match v {
                "duality" => Some(true),
                "explicit" => Some(false),
                _ => None,
            },
            "duality or explicit",
        );
        let alpha_value: Option<f64> = r.num("alpha.value");
        let z_min = r.get(
            "z_min",
            |v| if v == "auto" { Some(None) } else { v.parse::<f64>().ok().map(Some) },
            "auto or a number",
        );
        let z_atoms: Option<f64> = r.num("z_min.atoms");
        let construction = r.get("construction", |v| Construction::from_tag(v).ok(), "direct or subordinated");
        let measure = r.get(
            "measure",
            |v| match v {
                "chaos" => Some(Measure::Chaos),
                "atomic" => Some(Measure::Atomic),
                _ => None,
            },
            "chaos or atomic",
        );
        let design = r.get(
            "design",
            |v| match v {
                "fixed" => Some(Design::Fixed),
                "matched" => Some(Design::Matched),
                _ => None,
            },
            "fixed or matched",
        );
        let dimension = r.num("dimension");
        let scale = r.num("kernel.T");
        let t0 = r.num("kernel.t0");
        let gamma2 = r.num("gamma2");
        let level = r.num("level");
        let resolution = r.num("grid.resolution");
        let replicas = r.num("replicas");
        let master_seed = r.num("master_seed");
        let lambda_grid = r.list("lambda_grid");
        let q_grid = r.list("q_grid");
        let u_grid = r.list("u_grid");
        let s_grid = r.list("s_grid");
        let beta = r.num("beta");
        let cantor_depth = r.num("cantor.depth");
        let cantor_levels = r.list("cantor.levels");
        let box_depths = r.list("box_depths");
        let gamma2_sweep = r.list("gamma2_sweep");
        let tolerance = r.num("tolerance");
        let ci_level = r.num("ci_level");
        let bootstrap_resamples = r.num("bootstrap.resamples");
        let bootstrap_seed = r.num("bootstrap.seed");
        let field_pairs = r.num("field.pairs");
        let field_dump = r.get("field.dump", parse_bool, "true or false");
        let dump_replicas = r.num("atoms.dump_replicas");
        let plot = r.get("plot", parse_bool, "true or false");
        let cfg = (|| {
            Some(ExperimentConfig {
                experiment,
                dimension: dimension?,
                kernel: KernelConfig { family: family?, scale: scale?, seed: seed?, t0: t0? },
                gamma2: gamma2?,
                level: level?,
                resolution: resolution?,
                backend: backend?,
                replicas: replicas?,
                master_seed: master_seed?,
                alpha: if alpha? { AlphaMode::Duality } else { AlphaMode::Explicit(alpha_value?) },
                z_min: match z_min? {
                    None => ZMinMode::Auto { atoms: z_atoms? },
                    Some(z) => ZMinMode::Explicit(z),
                },
                construction: construction?,
                measure: measure?,
                design: design?,
                lambda_grid: lambda_grid?,
                q_grid: q_grid?,
                u_grid: u_grid?,
                s_grid: s_grid?,
                beta: beta?,
                cantor_depth: cantor_depth?,
                cantor_levels: cantor_levels?,
                box_depths: box_depths?,
                gamma2_sweep: gamma2_sweep?,
                tolerance: tolerance?,
                ci_level: ci_level?,
                bootstrap_resamples: bootstrap_resamples?,
                bootstrap_seed: bootstrap_seed?,
                field_pairs: field_pairs?,
                field_dump: field_dump?,
                dump_replicas: dump_replicas?,
                plot: plot?,
                output_dir: PathBuf::from(&map["output.dir"]),
            })
        })();
        match cfg {
            Some(c) if r.errors.is_empty() => Ok(c),
            _ => Err(r.errors),
        }
    }

    /// Stability index used by the atomic measure.
    pub fn alpha(&self) -> Option<f64> {
        match self.alpha {
            AlphaMode::Duality => alpha_from_gamma(self.gamma2, self.dimension).ok(),
            AlphaMode::Explicit(a) if a > 0.0 && a < 1.0 => Some(a),
            AlphaMode::Explicit(_) => None,
        }
    }

    /// Every setting as `(key, value)`, suitable for writing back as a file.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let mut out = vec![
            ("dimension", self.dimension.to_string()),
            ("kernel.family", self.kernel.family.tag().into()),
            ("kernel.T", self.kernel.scale.to_string()),
            ("kernel.seed", self.kernel.seed.tag().into()),
            ("kernel.t0", self.kernel.t0.to_string()),
            ("gamma2", self.gamma2.to_string()),
            ("level", self.level.to_string()),
            ("grid.resolution", self.resolution.to_string()),
            (
                "grid.backend",
                match self.backend {
                    Backend::Auto => "auto",
                    Backend::Circulant => "circulant",
                    Backend::Dense => "dense",
                }
                .into(),
            ),
            ("replicas", self.replicas.to_string()),
            ("master_seed", self.master_seed.to_string()),
            ("construction", self.construction.tag().into()),
            (
                "measure",
                match self.measure {
                    Measure::Chaos => "chaos",
                    Measure::Atomic => "atomic",
                }
                .into(),
            ),
            (
                "design",
                match self.design {
                    Design::Fixed => "fixed",
                    Design::Matched => "matched",
                }
                .into(),
            ),
            ("lambda_grid", list(&self.lambda_grid)),
            ("q_grid", list(&self.q_grid)),
            ("u_grid", list(&self.u_grid)),
            ("s_grid", list(&self.s_grid)),
            ("beta", self.beta.to_string()),
            ("cantor.depth", self.cantor_depth.to_string()),
            ("cantor.levels", list(&self.cantor_levels)),
            ("box_depths", list(&self.box_depths)),
            ("gamma2_sweep", list(&self.gamma2_sweep)),
            ("tolerance", self.tolerance.to_string()),
            ("ci_level", self.ci_level.to_string()),
            ("bootstrap.resamples", self.bootstrap_resamples.to_string()),
            ("bootstrap.seed", self.bootstrap_seed.to_string()),
            ("field.pairs", self.field_pairs.to_string()),
            ("field.dump", self.field_dump.to_string()),
            ("atoms.dump_replicas", self.dump_replicas.to_string()),
            ("plot", self.plot.to_string()),
            ("output.dir", self.output_dir.display().to_string()),
        ];
        match self.alpha {
            AlphaMode::Duality => out.push(("alpha.mode", "duality".into())),
            AlphaMode::Explicit(a) => {
                out.push(("alpha.mode", "explicit".into()));
                out.push(("alpha.value", a.to_string()));
            }
        }
        match self.z_min {
            ZMinMode::Auto { atoms } => {
                out.push(("z_min", "auto".into()));
                out.push(("z_min.atoms", atoms.to_string()));
            }
            ZMinMode::Explicit(z) => out.push(("z_min", z.to_string())),
        }
        if let Some(e) = self.experiment {
            out.push(("experiment", e.tag().into()));
        }
        let mut out: Vec<(String, String)> = out.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        out.sort();
        out
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Checks every precondition the configured experiment will hit. An empty
/// result means the run can start.
pub fn validate_config(c: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut err = |key: &str, msg: String| out.push(Diagnostic::new(key, msg));
    let d = c.dimension;
    if !(1..=2).contains(&d) {
        err("dimension", format!("dimension {d} not supported (1 or 2)"));
    }
    let need = match c.kernel.family {
        Family::ExactScale1D => Some(1),
        Family::ExactScale2D | Family::GffSquare => Some(2),
        Family::StarScale => None,
    };
    if let Some(nd) = need {
        if nd != d {
            err("kernel.family", format!("{} is a {nd}-dimensional family but dimension = {d}", c.kernel.family.tag()));
        }
    }
    if !(c.kernel.scale > 0.0 && c.kernel.scale.is_finite()) {
        err("kernel.T", format!("T must be positive, got {}", c.kernel.scale));
    }
    if !(c.kernel.t0 > 0.0 && c.kernel.t0.is_finite()) {
        err("kernel.t0", format!("t0 must be positive, got {}", c.kernel.t0));
    }
    if !(c.gamma2 >= 0.0 && c.gamma2.is_finite()) {
        err("gamma2", format!("gamma^2 must be nonnegative, got {}", c.gamma2));
    }
    let e = c.experiment;
    let atomic = e.is_some_and(|e| e.uses_atomic(c.measure)) || e == Some(Experiment::Duality);
    let alpha = c.alpha();
    match c.alpha {
        AlphaMode::Duality if alpha.is_none() && (atomic || e.is_none()) => err(
            "alpha.mode",
            format!("alpha out of (0,1): duality mode needs 0 < gamma^2 < 2d, got gamma^2 = {} with d = {d}", c.gamma2),
        ),
        AlphaMode::Explicit(a) if !(a > 0.0 && a < 1.0) => err("alpha.value", format!("alpha out of (0,1): {a}")),
        _ => {}
    }
    if c.level == 0 {
        err("level", "level must be at least 1".into());
    }
    if c.resolution < 2 || c.resolution.checked_pow(d as u32).is_none_or(|s| s > MAX_SITES) {
        err("grid.resolution", format!("resolution {} outside [2, {MAX_SITES}^(1/d)]", c.resolution));
    }
    if c.replicas < 2 {
        err("replicas", "need at least 2 replicas".into());
    }
    match c.z_min {
        ZMinMode::Explicit(z) if !(z > 0.0 && z.is_finite()) => err("z_min", format!("z_min must be positive, got {z}")),
        ZMinMode::Auto { atoms } if !(atoms >= 1.0 && atoms.is_finite()) => {
            err("z_min.atoms", format!("expected atom count must be at least 1, got {atoms}"))
        }
        _ => {}
    }
    if !(c.ci_level > 0.0 && c.ci_level < 1.0) {
        err("ci_level", format!("ci_level must lie in (0,1), got {}", c.ci_level));
    }
    if c.bootstrap_resamples < 10 {
        err("bootstrap.resamples", "need at least 10 bootstrap resamples".into());
    }
    if !(c.tolerance > 0.0) {
        err("tolerance", "tolerance must be positive".into());
    }
    let Some(e) = e else { return out };

    // Moment ranges of the q grid.
    if matches!(e, Experiment::Spectrum | Experiment::Scaling) {
        for &q in &c.q_grid {
            if atomic {
                if let Some(a) = alpha {
                    if q >= a {
                        err("q_grid", format!("q = {q} >= alpha = {a}: moments of Mbar are infinite at or beyond the moment threshold alpha"));
                    }
                }
            } else if c.gamma2 > 0.0 && q >= moment_bound(c.gamma2, d) {
                err("q_grid", format!("q = {q} >= 2d/gamma^2 = {}: moment of M is infinite", moment_bound(c.gamma2, d)));
            }
            if q < 0.0 {
                err("q_grid", format!("negative q = {q} not supported by the moment fit"));
            }
        }
    }
    if matches!(e, Experiment::Spectrum | Experiment::Scaling | Experiment::Chaos) {
        for &l in &c.lambda_grid {
            if !(l > 0.0 && l <= 1.0) {
                err("lambda_grid", format!("lambda = {l} outside (0, 1]"));
            }
        }
    }
    if e == Experiment::Chaos || (e == Experiment::Spectrum && c.design == Design::Fixed) {
        for &l in &c.lambda_grid {
            let w = l * c.resolution as f64;
            if (w - w.round()).abs() > 1e-9 {
                err("lambda_grid", format!("lambda = {l} is not a whole number of cells at resolution {}", c.resolution));
            }
        }
    }
    if e == Experiment::Spectrum {
        let mut distinct = c.lambda_grid.clone();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        if distinct.len() < 4 {
            err("lambda_grid", "spectrum fit needs at least 4 distinct radii".into());
        }
    }
    if matches!(e, Experiment::Spectrum | Experiment::Scaling) && c.design == Design::Matched {
        if !matches!(c.kernel.family, Family::ExactScale1D | Family::ExactScale2D) {
            err("design", "matched design needs an exact-scale kernel".into());
        }
        let top = c.lambda_grid.iter().cloned().fold(0.0, f64::max);
        for &l in &c.lambda_grid {
            let n = c.level as f64 * top / l;
            if (n - n.round()).abs() > 1e-9 {
                err("lambda_grid", format!("level {} * {top} / {l} is not an integer", c.level));
            }
        }
    }
    if e == Experiment::Scaling {
        if c.kernel.family != Family::ExactScale1D && c.kernel.family != Family::ExactScale2D {
            err("kernel.family", "perfect scaling needs an exact-scale kernel".into());
        }
        for &l in &c.lambda_grid {
            let n = c.level as f64 / l;
            if (n - n.round()).abs() > 1e-9 {
                err("lambda_grid", format!("level {} / lambda {l} is not an integer", c.level));
            }
        }
    }
    if e == Experiment::Laplace {
        if c.u_grid.iter().any(|u| !(*u >= 0.0)) {
            err("u_grid", "u must be nonnegative".into());
        }
        if let Some(a) = alpha {
            if !(c.beta >= 0.0 && c.beta < a) {
                err("beta", format!("beta = {} outside [0, alpha = {a}): the moment of Mbar is infinite beyond the moment threshold", c.beta));
            }
        }
    }
    if matches!(e, Experiment::Kpz | Experiment::Duality) {
        if d != 1 {
            err("dimension", "Cantor experiments run in d = 1".into());
        }
        let g = 3usize.checked_pow(c.cantor_depth);
        if g.is_none_or(|g| !c.resolution.is_multiple_of(g)) {
            err("grid.resolution", format!("resolution {} is not a multiple of 3^{}: Cantor intervals would not align with cells", c.resolution, c.cantor_depth));
        }
        if c.cantor_levels.len() < 3 {
            err("cantor.levels", "need at least 3 covering levels".into());
        }
        if let Some(&k) = c.cantor_levels.iter().find(|&&k| k > c.cantor_depth || k == 0) {
            err("cantor.levels", format!("covering level {k} outside 1..={}", c.cantor_depth));
        }
        if c.s_grid.len() < 5 {
            err("s_grid", "need at least 5 exponents".into());
        }
    }
    if e == Experiment::Lq {
        let max = c.box_depths.iter().cloned().max().unwrap_or(0);
        if c.box_depths.len() < 2 {
            err("box_depths", "need at least 2 box depths".into());
        } else if max >= 31 || !c.resolution.is_multiple_of(1usize << max) {
            err("box_depths", format!("2^{max} boxes per side do not divide resolution {}", c.resolution));
        }
    }
    if e == Experiment::Atoms && c.gamma2_sweep.iter().any(|g| !(*g > 0.0 && *g < 2.0 * d as f64)) {
        err("gamma2_sweep", format!("every sweep value must lie in (0, 2d) = (0, {})", 2 * d));
    }
    out
}
