//! INI configuration: sections of `key = value` lines, weights as `|`-separated
//! expression pieces in `x`, and an optional `[params]` section of named
//! constants usable in every expression.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;
use philap::existence::{CaseSpec, ProblemSpec};
use philap::expr::{parse_expression_with, Expr};
use philap::funcgrid::{EndpointWeight, Interval, PiecewiseSpec};
use philap::homeo::{GrowthConstants, GrowthWitness, Homeomorphism, PhiKind, Psi};

pub const DEFAULT_GRID_N: usize = 2049;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl From<philap::Error> for ConfigError {
    fn from(e: philap::Error) -> Self {
        ConfigError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub interval: Interval,
    pub lambda: f64,
    pub case: CaseSpec,
    pub phi: Homeomorphism,
    pub f: Expr,
    pub growth: GrowthConstants,
    pub m: PiecewiseSpec,
    pub r: Option<PiecewiseSpec>,
    pub h2: Option<(f64, f64)>,
    pub grid_n: usize,
    pub sign_changing: bool,
    pub omega0: Option<Interval>,
    pub lambdas: Vec<f64>,
    pub out_dir: Option<PathBuf>,
    pub formats: Formats,
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("problem", &["a", "b", "lambda", "case", "sign_changing", "omega0"]),
    ("phi", &["kind", "p", "p1", "p2", "expr", "derivative", "increasing"]),
    ("f", &["expr", "k1", "k2", "q", "q1", "q2", "t_bar"]),
    ("weight_m", &["pieces", "breakpoints", "singularities"]),
    ("weight_r", &["pieces", "breakpoints", "singularities"]),
    (
        "witnesses",
        &["psi", "psi_c", "psi_p", "psi_expr", "t1", "t2", "M", "p", "K", "N"],
    ),
    ("solver", &["grid_n"]),
    ("sweep", &["lambdas"]),
    ("output", &["dir", "formats"]),
    ("params", &[]),
];

/// Key lookup within one section.
struct Section<'a> {
    name: &'static str,
    props: Option<&'a ini::Properties>,
}

impl Section<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.props.and_then(|p| p.get(key)).map(str::trim)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| ConfigError(format!("[{}] needs `{key}`", self.name)))
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| ConfigError(format!("[{}] {key} = {v:?} is not a number", self.name)))
            })
            .transpose()
    }

    fn real_required(&self, key: &str) -> Result<f64> {
        self.real(key)?
            .ok_or_else(|| ConfigError(format!("[{}] needs `{key}`", self.name)))
    }

    fn positive(&self, key: &str) -> Result<Option<f64>> {
        match self.real(key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => err(format!("[{}] {key} must be positive, got {v}", self.name)),
            v => Ok(v),
        }
    }

    fn positive_required(&self, key: &str) -> Result<f64> {
        self.positive(key)?
            .ok_or_else(|| ConfigError(format!("[{}] needs `{key}`", self.name)))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => err(format!("[{}] {key} = {v:?} is not a boolean", self.name)),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>> {
        match self.raw(key) {
            None | Some("") => Ok(Vec::new()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| ConfigError(format!("[{}] {key}: {s:?} is not a number", self.name)))
                })
                .collect(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Config> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError(format!("malformed INI: {e}")))?;
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if props.iter().next().is_some() {
                    return err("keys must belong to a section");
                }
                continue;
            };
            let Some((_, keys)) = SECTIONS.iter().find(|s| s.0 == name) else {
                return err(format!("unknown section [{name}]"));
            };
            if name != "params" {
                if let Some((k, _)) = props.iter().find(|(k, _)| !keys.contains(k)) {
                    return err(format!("unknown key `{k}` in [{name}]"));
                }
            }
        }
        let section = |name: &'static str| Section {
            name,
            props: ini.section(Some(name)),
        };

        let params = section("params");
        let mut bound = BTreeMap::new();
        if let Some(p) = params.props {
            for (k, v) in p.iter() {
                let value = v
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| ConfigError(format!("[params] {k} = {v:?} is not a number")))?;
                bound.insert(k.to_string(), value);
            }
        }
        let expr = |src: &str, what: &str| {
            parse_expression_with(src, &bound).map_err(|e| ConfigError(format!("{what}: {e} in {src:?}")))
        };

        let problem = section("problem");
        let interval = Interval::new(problem.real_required("a")?, problem.real_required("b")?)?;
        let lambda = problem.positive_required("lambda")?;
        let sign_changing = problem.flag("sign_changing")?;
        let omega0 = match problem.raw("omega0") {
            None | Some("auto") => None,
            Some(_) => match problem.list("omega0")?.as_slice() {
                [a, b] => Some(Interval::new(*a, *b)?),
                _ => return err("[problem] omega0 must be `auto` or `a, b`"),
            },
        };

        let phi = parse_phi(&section("phi"), &expr)?;

        let fsec = section("f");
        let f = expr(fsec.required("expr")?, "[f] expr")?;
        let growth = GrowthConstants {
            k1: fsec.positive_required("k1")?,
            k2: fsec.positive_required("k2")?,
            t_bar: fsec.positive_required("t_bar")?,
        };

        let wit = section("witnesses");
        let case = match problem.required("case")? {
            "I" | "i" | "1" => {
                let q = fsec.positive_required("q")?;
                let t1 = wit.positive("t1")?.unwrap_or(1.0);
                let psi = match wit.raw("psi").unwrap_or("power") {
                    "power" => Psi::Power {
                        c: wit.positive("psi_c")?.unwrap_or(1.0),
                        p: wit.positive_required("psi_p")?,
                    },
                    "expression" => Psi::Custom(expr(wit.required("psi_expr")?, "[witnesses] psi_expr")?),
                    other => return err(format!("[witnesses] psi = {other:?}: use `power` or `expression`")),
                };
                CaseSpec::I {
                    psi: GrowthWitness::new(psi, t1)?,
                    q,
                }
            }
            "II" | "ii" | "2" => CaseSpec::II {
                p: wit.positive_required("p")?,
                q1: fsec.positive_required("q1")?,
                q2: fsec.positive_required("q2")?,
                k: wit.positive("K")?,
                n: wit.positive("N")?,
            },
            other => return err(format!("[problem] case = {other:?}: use I or II")),
        };
        let h2 = match (wit.positive("t2")?, wit.positive("M")?) {
            (Some(t2), Some(m)) => Some((t2, m)),
            (None, None) => None,
            _ => return err("[witnesses] t2 and M go together"),
        };

        let m = parse_weight(&section("weight_m"), &expr)?
            .ok_or_else(|| ConfigError("[weight_m] needs `pieces`".into()))?;
        let r = parse_weight(&section("weight_r"), &expr)?;

        let grid_n = match section("solver").real("grid_n")? {
            None => DEFAULT_GRID_N,
            Some(n) if n.fract() == 0.0 && n >= 3.0 => n as usize,
            Some(n) => return err(format!("[solver] grid_n must be an integer >= 3, got {n}")),
        };

        let lambdas = section("sweep").list("lambdas")?;

        let out = section("output");
        let out_dir = out.raw("dir").map(PathBuf::from);
        let formats = match out.raw("formats") {
            None => Formats { csv: true, json: true },
            Some(v) => {
                let mut f = Formats {
                    csv: false,
                    json: false,
                };
                for item in v.split(',').map(str::trim) {
                    match item {
                        "csv" => f.csv = true,
                        "json" => f.json = true,
                        other => return err(format!("[output] unknown format {other:?}")),
                    }
                }
                f
            }
        };

        Ok(Config {
            interval,
            lambda,
            case,
            phi,
            f,
            growth,
            m,
            r,
            h2,
            grid_n,
            sign_changing,
            omega0,
            lambdas,
            out_dir,
            formats,
        })
    }

    /// The problem on a grid of `grid_n` nodes (or the configured count)
    /// resolving every weight breakpoint.
    pub fn problem(&self, grid_n: Option<usize>) -> Result<ProblemSpec> {
        let n = grid_n.unwrap_or(self.grid_n);
        if n < 3 {
            return err(format!("grid_n must be at least 3, got {n}"));
        }
        let mut specs = vec![&self.m];
        specs.extend(self.r.as_ref());
        let grid = PiecewiseSpec::grid_for(self.interval, n, &specs)?;
        let m = self.m.sample(&grid)?;
        let mut spec = ProblemSpec::new(
            self.phi.clone(),
            self.f.clone(),
            self.growth,
            m,
            self.lambda,
            self.case.clone(),
        )?;
        if let Some(r) = &self.r {
            spec = spec.with_r(r.sample(&grid)?)?;
        }
        if let Some((t2, m)) = self.h2 {
            spec = spec.with_h2(t2, m)?;
        }
        Ok(spec)
    }
}

fn parse_phi(sec: &Section<'_>, expr: &dyn Fn(&str, &str) -> Result<Expr>) -> Result<Homeomorphism> {
    let kind = match sec.required("kind")? {
        "p_laplacian" => PhiKind::PLaplacian {
            p: sec.real_required("p")?,
        },
        "sum_powers" => PhiKind::SumPowers {
            p1: sec.real_required("p1")?,
            p2: sec.real_required("p2")?,
        },
        "exp_power" => PhiKind::ExpPower {
            p: sec.real_required("p")?,
        },
        "exp_minus_linear" => PhiKind::ExpMinusLinear,
        "power_ratio" => PhiKind::PowerRatio {
            p1: sec.real_required("p1")?,
            p2: sec.real_required("p2")?,
        },
        "log_weighted" => PhiKind::LogWeighted,
        "linear_minus_log" => PhiKind::LinearMinusLog,
        "log_power" => PhiKind::LogPower {
            p: sec.real_required("p")?,
        },
        "custom" => {
            let phi = expr(sec.required("expr")?, "[phi] expr")?;
            let derivative = sec.raw("derivative").map(|d| expr(d, "[phi] derivative")).transpose()?;
            return Ok(Homeomorphism::custom(phi, derivative, sec.flag("increasing")?)?);
        }
        other => return err(format!("[phi] unknown kind {other:?}")),
    };
    Ok(Homeomorphism::new(kind)?)
}

fn parse_weight(sec: &Section<'_>, expr: &dyn Fn(&str, &str) -> Result<Expr>) -> Result<Option<PiecewiseSpec>> {
    let Some(pieces) = sec.raw("pieces") else {
        if sec.props.is_some_and(|p| p.iter().next().is_some()) {
            return err(format!("[{}] needs `pieces`", sec.name));
        }
        return Ok(None);
    };
    let pieces = pieces
        .split('|')
        .map(|p| expr(p.trim(), &format!("[{}] pieces", sec.name)))
        .collect::<Result<Vec<_>>>()?;
    let breakpoints = sec.list("breakpoints")?;
    let singularity = match sec.list("singularities")?.as_slice() {
        [] => EndpointWeight::NONE,
        [left, right] => EndpointWeight {
            left: *left,
            right: *right,
        },
        _ => return err(format!("[{}] singularities must be `left, right`", sec.name)),
    };
    Ok(Some(PiecewiseSpec::new(breakpoints, pieces, singularity)?))
}
