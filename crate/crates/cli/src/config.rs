use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use curvmom::fields::{FdOrder, PhysicalParams};
use curvmom::suites::{self, FactorChoice, SuiteOptions};
use curvmom::{make_surface, Grid, Surface};

/// A configuration problem; maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<curvmom::Error> for UsageError {
    fn from(e: curvmom::Error) -> Self {
        UsageError(e.to_string())
    }
}

/// Keys accepted in a `--config` file, named after their flags.
pub const CONFIG_KEYS: [&str; 17] = [
    "surface",
    "a",
    "b",
    "n",
    "n-xi",
    "n-zeta",
    "margin",
    "fd-order",
    "seed",
    "hbar",
    "mass",
    "factors",
    "pairs",
    "bandlimit",
    "band",
    "json",
    "csv-dir",
];

/// Settings from flags or the config file, before defaults are applied.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Partial {
    pub surface: Option<String>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n: Option<usize>,
    pub n_xi: Option<usize>,
    pub n_zeta: Option<usize>,
    pub margin: Option<f64>,
    pub fd_order: Option<FdOrder>,
    pub seed: Option<u64>,
    pub hbar: Option<f64>,
    pub mass: Option<f64>,
    pub factors: Option<FactorChoice>,
    pub pairs: Option<usize>,
    pub bandlimit: Option<usize>,
    pub band: Option<f64>,
    pub json: Option<PathBuf>,
    pub csv_dir: Option<PathBuf>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Partial {
    /// Fills every unset field of `self` from `lower`.
    pub fn or(self, lower: Partial) -> Partial {
        let mut tolerances = lower.tolerances;
        tolerances.extend(self.tolerances);
        Partial {
            surface: self.surface.or(lower.surface),
            a: self.a.or(lower.a),
            b: self.b.or(lower.b),
            n: self.n.or(lower.n),
            n_xi: self.n_xi.or(lower.n_xi),
            n_zeta: self.n_zeta.or(lower.n_zeta),
            margin: self.margin.or(lower.margin),
            fd_order: self.fd_order.or(lower.fd_order),
            seed: self.seed.or(lower.seed),
            hbar: self.hbar.or(lower.hbar),
            mass: self.mass.or(lower.mass),
            factors: self.factors.or(lower.factors),
            pairs: self.pairs.or(lower.pairs),
            bandlimit: self.bandlimit.or(lower.bandlimit),
            band: self.band.or(lower.band),
            json: self.json.or(lower.json),
            csv_dir: self.csv_dir.or(lower.csv_dir),
            tolerances,
        }
    }
}

fn parse_value<V: std::str::FromStr>(key: &str, raw: &str) -> Result<V, UsageError> {
    raw.trim()
        .parse()
        .map_err(|_| UsageError(format!("invalid value `{raw}` for `{key}`")))
}

/// Parses `--tol-<check>` values, which must be positive.
pub fn parse_tolerance(key: &str, raw: &str) -> Result<f64, UsageError> {
    let t: f64 = parse_value(key, raw)?;
    if !(t > 0.0) {
        return Err(UsageError(format!(
            "invalid value `{raw}` for `{key}`: must be positive"
        )));
    }
    Ok(t)
}

/// Reads a flat `key = value` file. `#` starts a comment; keys are flag
/// names without the leading dashes, with `_` accepted for `-`.
pub fn read_config_file(path: &Path) -> Result<Partial, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        UsageError(format!(
            "cannot read `--config` file {}: {e}",
            path.display()
        ))
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Partial, UsageError> {
    let mut p = Partial::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            UsageError(format!(
                "config line {}: expected `key = value`",
                lineno + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if let Some(check) = key.strip_prefix("tol-") {
            p.tolerances
                .insert(check.to_string(), parse_tolerance(&key, value)?);
            continue;
        }
        match key.as_str() {
            "surface" => p.surface = Some(value.to_string()),
            "a" => p.a = Some(parse_value(&key, value)?),
            "b" => p.b = Some(parse_value(&key, value)?),
            "n" => p.n = Some(parse_value(&key, value)?),
            "n-xi" => p.n_xi = Some(parse_value(&key, value)?),
            "n-zeta" => p.n_zeta = Some(parse_value(&key, value)?),
            "margin" => p.margin = Some(parse_value(&key, value)?),
            "fd-order" => p.fd_order = Some(parse_value(&key, value)?),
            "seed" => p.seed = Some(parse_value(&key, value)?),
            "hbar" => p.hbar = Some(parse_value(&key, value)?),
            "mass" => p.mass = Some(parse_value(&key, value)?),
            "factors" => p.factors = Some(parse_value(&key, value)?),
            "pairs" => p.pairs = Some(parse_value(&key, value)?),
            "bandlimit" => p.bandlimit = Some(parse_value(&key, value)?),
            "band" => p.band = Some(parse_value(&key, value)?),
            "json" => p.json = Some(PathBuf::from(value)),
            "csv-dir" => p.csv_dir = Some(PathBuf::from(value)),
            other => {
                return Err(UsageError(format!(
                    "config line {}: unknown key `{other}` (expected one of {} or tol-<check>)",
                    lineno + 1,
                    CONFIG_KEYS.join(", ")
                )));
            }
        }
    }
    Ok(p)
}

/// Validated run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: String,
    pub surface: Surface,
    pub n: [usize; 2],
    pub margin: Option<f64>,
    pub options: SuiteOptions<f64>,
    pub factors: FactorChoice,
    pub json: Option<PathBuf>,
    pub csv_dir: Option<PathBuf>,
    /// Overrides keyed by full check name.
    pub tolerances: BTreeMap<String, f64>,
}

pub const DEFAULT_N: usize = 128;

impl RunConfig {
    pub fn resolve(command: &str, p: Partial) -> Result<Self, UsageError> {
        let name = p.surface.as_deref().unwrap_or("torus");
        let mut params = BTreeMap::new();
        if let Some(a) = p.a {
            params.insert("a".to_string(), a);
        }
        if let Some(b) = p.b {
            params.insert("b".to_string(), b);
        }
        let surface = make_surface(name, &params)?;
        let n = p.n.unwrap_or(DEFAULT_N);
        let n = [p.n_xi.unwrap_or(n), p.n_zeta.unwrap_or(n)];
        if let Some(m) = p.margin {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(UsageError(format!(
                    "invalid value `{m}` for `--margin`: must be non-negative"
                )));
            }
        }
        let phys = PhysicalParams::new(p.hbar.unwrap_or(1.0), p.mass.unwrap_or(1.0))?;
        let band = p.band.unwrap_or(suites::DEFAULT_BAND);
        if !(band >= 0.0) {
            return Err(UsageError(format!(
                "invalid value `{band}` for `--band`: must be non-negative"
            )));
        }
        let options = SuiteOptions {
            order: p.fd_order.unwrap_or_default(),
            phys,
            seed: p.seed.unwrap_or(42),
            bandlimit: p.bandlimit.unwrap_or(suites::DEFAULT_BANDLIMIT),
            pairs: p.pairs.unwrap_or(suites::DEFAULT_PAIRS),
            band,
            corrupt_normal: false,
        };
        if options.pairs == 0 {
            return Err(UsageError(
                "invalid value `0` for `--pairs`: must be positive".into(),
            ));
        }
        let known = suites::check_names(command);
        let mut tolerances = BTreeMap::new();
        for (key, t) in p.tolerances {
            let full = resolve_check(&known, &key).ok_or_else(|| {
                UsageError(format!("unknown check in `--tol-{key}` for `{command}`"))
            })?;
            tolerances.insert(full, t);
        }
        Ok(Self {
            command: command.to_string(),
            surface,
            n,
            margin: p.margin,
            options,
            factors: p.factors.unwrap_or(FactorChoice::Auto),
            json: p.json,
            csv_dir: p.csv_dir,
            tolerances,
        })
    }

    pub fn grid(&self) -> Result<std::sync::Arc<Grid>, curvmom::Error> {
        match self.margin {
            Some(m) => Grid::with_margin(&self.surface, self.n[0], self.n[1], m),
            None => Grid::new(&self.surface, self.n[0], self.n[1]),
        }
    }

    /// Resolved settings echoed into the report.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let s = &self.surface;
        m.insert("surface".into(), s.name().into());
        for (k, v) in s.params() {
            m.insert(k, v.to_string());
        }
        m.insert("n-xi".into(), self.n[0].to_string());
        m.insert("n-zeta".into(), self.n[1].to_string());
        let margin = self.margin.unwrap_or_else(|| s.default_margin());
        m.insert("margin".into(), margin.to_string());
        m.insert("fd-order".into(), self.options.order.order().to_string());
        m.insert("seed".into(), self.options.seed.to_string());
        m.insert("hbar".into(), self.options.phys.hbar.to_string());
        m.insert("mass".into(), self.options.phys.mass.to_string());
        match self.command.as_str() {
            "ordering" => {
                m.insert(
                    "factors".into(),
                    format!("{:?}", self.factors).to_lowercase(),
                );
                m.insert("bandlimit".into(), self.options.bandlimit.to_string());
                m.insert("band".into(), self.options.band.to_string());
            }
            "factors" => {
                m.insert("bandlimit".into(), self.options.bandlimit.to_string());
                m.insert("band".into(), self.options.band.to_string());
            }
            "hermiticity" => {
                m.insert("bandlimit".into(), self.options.bandlimit.to_string());
                m.insert("pairs".into(), self.options.pairs.to_string());
            }
            _ => {}
        }
        for (k, t) in &self.tolerances {
            m.insert(format!("tol-{k}"), t.to_string());
        }
        m
    }
}

/// Full check name for `key`: either the name itself or a suffix that
/// identifies exactly one check.
fn resolve_check(known: &[String], key: &str) -> Option<String> {
    if known.iter().any(|k| k == key) {
        return Some(key.to_string());
    }
    let mut hits = known
        .iter()
        .filter(|k| k.rsplit_once('.').is_some_and(|(_, tail)| tail == key));
    match (hits.next(), hits.next()) {
        (Some(h), None) => Some(h.clone()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parses_and_rejects_unknown_keys() {
        let p = parse_config(
            "surface = sphere\n# comment\nn=64\nfd_order = 6\ntol-weingarten = 1e-3\n",
        )
        .unwrap();
        assert_eq!(p.surface.as_deref(), Some("sphere"));
        assert_eq!(p.n, Some(64));
        assert_eq!(p.fd_order, Some(FdOrder::Sixth));
        assert_eq!(p.tolerances["weingarten"], 1e-3);
        let err = parse_config("colour = red").unwrap_err();
        assert!(err.0.contains("colour"));
        let err = parse_config("n = many").unwrap_err();
        assert!(err.0.contains("`n`"));
    }

    #[test]
    fn flags_win_over_file() {
        let file = parse_config("n = 64\nseed = 3").unwrap();
        let flags = Partial {
            n: Some(32),
            ..Default::default()
        };
        let merged = flags.or(file);
        assert_eq!((merged.n, merged.seed), (Some(32), Some(3)));
    }

    #[test]
    fn tolerance_keys_resolve_by_suffix() {
        let known = suites::check_names("check");
        assert_eq!(
            resolve_check(&known, "weingarten").as_deref(),
            Some("geometry.weingarten")
        );
        assert_eq!(
            resolve_check(&known, "geometry.duality").as_deref(),
            Some("geometry.duality")
        );
        assert_eq!(resolve_check(&known, "nonsense"), None);
    }

    #[test]
    fn surface_parameters_are_validated() {
        let p = Partial {
            surface: Some("torus".into()),
            a: Some(0.5),
            b: Some(1.0),
            ..Default::default()
        };
        assert!(RunConfig::resolve("check", p)
            .unwrap_err()
            .0
            .contains("a > b"));
    }
}
