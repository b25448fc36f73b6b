//! Job configuration: JSON schema and resolution into core objects.

use std::collections::BTreeMap;
use std::fmt;

use serde::Deserialize;

use folia_core::algebroid::Algebroid;
use folia_core::bisubm::BiSubmersion;
use folia_core::charts::{Chart, SmoothMap, VectorField, VfModule};
use folia_core::expr::{parse_expr, to_f64, Expr, Rational};
use folia_core::flows::TimeDependentField;

/// A configuration problem located by a JSON pointer into the document.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pointer.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at {}: {}", self.pointer, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(pointer: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        pointer: pointer.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub charts: BTreeMap<String, ChartSpec>,
    #[serde(default)]
    pub module: Option<ModuleSpec>,
    #[serde(default)]
    pub bisubmersion: Option<BisubSpec>,
    #[serde(default)]
    pub algebroid: Option<AlgebroidSpec>,
    #[serde(default)]
    pub flows: Option<FlowsSpec>,
    /// Exact points, coordinates as decimal or `p/q` strings.
    #[serde(default)]
    pub points: Vec<Vec<String>>,
    #[serde(default)]
    pub degree_bound: Option<u32>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub vars: Vec<String>,
    /// Optional coordinate box `[[lo, hi], …]`.
    #[serde(default, rename = "box")]
    pub bounds: Option<Vec<[String; 2]>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSpec {
    pub chart: String,
    pub generators: Vec<Vec<String>>,
    #[serde(default)]
    pub point: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisubSpec {
    pub chart: String,
    pub source_base: String,
    pub target_base: String,
    pub s: Vec<String>,
    pub t: Vec<String>,
    #[serde(default)]
    pub base: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebroidSpec {
    /// `sl2_action`, `su2_star` or `tangent`.
    #[serde(default)]
    pub builtin: Option<String>,
    /// Base dimension for `tangent`.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub chart: Option<String>,
    #[serde(default)]
    pub frame: Vec<String>,
    /// Anchor image of each frame element.
    #[serde(default)]
    pub anchor: Vec<Vec<String>>,
    #[serde(default)]
    pub brackets: Vec<BracketSpec>,
}

/// `[left, right] = Σ result[k] · k`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketSpec {
    pub left: String,
    pub right: String,
    pub result: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowsSpec {
    pub chart: String,
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub point: Vec<String>,
    pub t: String,
    #[serde(default)]
    pub accel: Option<AccelSpec>,
}

/// `Z_t = Σ cᵢ(t) Xᵢ` for the acceleration check.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelSpec {
    #[serde(default = "default_time_var")]
    pub time_var: String,
    pub terms: Vec<AccelTerm>,
    pub point: Vec<String>,
}

fn default_time_var() -> String {
    "t".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelTerm {
    pub coeff: String,
    pub field: Vec<String>,
}

/// Parse with line and column diagnostics.
pub fn parse_config(src: &str) -> Result<JobConfig, ConfigError> {
    let cfg: JobConfig = serde_json::from_str(src).map_err(|e| err("", format!("{e}")))?;
    if let Some(t) = cfg.tol {
        if !(t > 0.0) {
            return Err(err("/tol", "tolerance must be positive"));
        }
    }
    if cfg.samples == Some(0) {
        return Err(err("/samples", "sample count must be positive"));
    }
    if let Some(g) = cfg.grid {
        if g < 8 {
            return Err(err("/grid", "grid needs at least 8 intervals"));
        }
    }
    Ok(cfg)
}

pub fn rational(s: &str, pointer: &str) -> Result<Rational, ConfigError> {
    parse_expr(s, &[])
        .ok()
        .and_then(|e| e.simplify().constant().cloned())
        .ok_or_else(|| err(pointer, format!("`{s}` is not a rational number")))
}

pub fn rational_point(v: &[String], pointer: &str) -> Result<Vec<Rational>, ConfigError> {
    v.iter().enumerate().map(|(i, s)| rational(s, &format!("{pointer}/{i}"))).collect()
}

fn expr(s: &str, vars: &[String], pointer: &str) -> Result<Expr, ConfigError> {
    parse_expr(s, vars).map_err(|e| err(pointer, format!("cannot parse `{s}`: {e}")))
}

fn field(chart: &Chart, comps: &[String], pointer: &str) -> Result<VectorField, ConfigError> {
    if comps.len() != chart.dim() {
        return Err(err(
            pointer,
            format!("expected {} components on chart `{}`, got {}", chart.dim(), chart.name, comps.len()),
        ));
    }
    let c = comps
        .iter()
        .enumerate()
        .map(|(i, s)| expr(s, chart.vars(), &format!("{pointer}/{i}")))
        .collect::<Result<_, _>>()?;
    VectorField::new(chart, c).map_err(|e| err(pointer, e.to_string()))
}

impl JobConfig {
    pub fn chart(&self, name: &str, pointer: &str) -> Result<Chart, ConfigError> {
        let spec = self
            .charts
            .get(name)
            .ok_or_else(|| err(pointer, format!("unknown chart `{name}`")))?;
        let here = format!("/charts/{name}");
        let chart = Chart::from_strings(name, spec.vars.clone()).map_err(|e| err(format!("{here}/vars"), e.to_string()))?;
        match &spec.bounds {
            None => Ok(chart),
            Some(b) => {
                let bounds = b
                    .iter()
                    .enumerate()
                    .map(|(i, [lo, hi])| {
                        Ok((
                            rational(lo, &format!("{here}/box/{i}/0"))?,
                            rational(hi, &format!("{here}/box/{i}/1"))?,
                        ))
                    })
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                chart.with_box(bounds).map_err(|e| err(format!("{here}/box"), e.to_string()))
            }
        }
    }

    pub fn module(&self, degree_bound: u32) -> Result<(VfModule, Option<Vec<Rational>>), ConfigError> {
        let spec = self.module.as_ref().ok_or_else(|| err("/module", "section is required"))?;
        let chart = self.chart(&spec.chart, "/module/chart")?;
        let gens = spec
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| field(&chart, g, &format!("/module/generators/{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let point = match &spec.point {
            Some(p) => Some(self.sized_point(p, chart.dim(), "/module/point")?),
            None => None,
        };
        let m = VfModule::new(&chart, gens, degree_bound).map_err(|e| err("/module", e.to_string()))?;
        Ok((m, point))
    }

    fn sized_point(&self, p: &[String], n: usize, pointer: &str) -> Result<Vec<Rational>, ConfigError> {
        if p.len() != n {
            return Err(err(pointer, format!("expected {n} coordinates, got {}", p.len())));
        }
        rational_point(p, pointer)
    }

    pub fn bisubmersion(
        &self,
        degree_bound: u32,
        seed: u64,
        samples: usize,
    ) -> Result<(BiSubmersion, Option<Vec<f64>>), ConfigError> {
        let spec = self
            .bisubmersion
            .as_ref()
            .ok_or_else(|| err("/bisubmersion", "section is required"))?;
        let u = self.chart(&spec.chart, "/bisubmersion/chart")?;
        let m = self.chart(&spec.source_base, "/bisubmersion/source_base")?;
        let n = self.chart(&spec.target_base, "/bisubmersion/target_base")?;
        let map = |target: &Chart, comps: &[String], key: &str| -> Result<SmoothMap, ConfigError> {
            let pointer = format!("/bisubmersion/{key}");
            if comps.len() != target.dim() {
                return Err(err(&pointer, format!("expected {} components, got {}", target.dim(), comps.len())));
            }
            let c = comps
                .iter()
                .enumerate()
                .map(|(i, s)| expr(s, u.vars(), &format!("{pointer}/{i}")))
                .collect::<Result<_, _>>()?;
            SmoothMap::new(&u, target, c).map_err(|e| err(&pointer, e.to_string()))
        };
        let s = map(&m, &spec.s, "s")?;
        let t = map(&n, &spec.t, "t")?;
        let b = BiSubmersion::symbolic(s, t, None, None, degree_bound, seed, samples)
            .map_err(|e| err("/bisubmersion", e.to_string()))?;
        let base = match &spec.base {
            Some(p) => Some(self.sized_point(p, u.dim(), "/bisubmersion/base")?.iter().map(to_f64).collect()),
            None => None,
        };
        Ok((b, base))
    }

    pub fn algebroid(&self, degree_bound: u32) -> Result<Algebroid, ConfigError> {
        let spec = self.algebroid.as_ref().ok_or_else(|| err("/algebroid", "section is required"))?;
        let mut a = match spec.builtin.as_deref() {
            Some("sl2_action") => Algebroid::sl2_action(),
            Some("su2_star") => Algebroid::su2_star(),
            Some("tangent") => Algebroid::tangent(spec.dim.ok_or_else(|| err("/algebroid/dim", "tangent needs `dim`"))?),
            Some(other) => return Err(err("/algebroid/builtin", format!("unknown builtin `{other}`"))),
            None => self.explicit_algebroid(spec)?,
        };
        a.degree_bound = degree_bound;
        Ok(a)
    }

    fn explicit_algebroid(&self, spec: &AlgebroidSpec) -> Result<Algebroid, ConfigError> {
        let name = spec
            .chart
            .as_deref()
            .ok_or_else(|| err("/algebroid/chart", "explicit algebroids need a chart"))?;
        let chart = self.chart(name, "/algebroid/chart")?;
        if spec.anchor.len() != spec.frame.len() {
            return Err(err(
                "/algebroid/anchor",
                format!("{} anchor entries for {} frame elements", spec.anchor.len(), spec.frame.len()),
            ));
        }
        let anchor = spec
            .anchor
            .iter()
            .enumerate()
            .map(|(i, g)| field(&chart, g, &format!("/algebroid/anchor/{i}")))
            .collect::<Result<Vec<_>, _>>()?;
        let index = |e: &str, pointer: &str| {
            spec.frame
                .iter()
                .position(|f| f == e)
                .ok_or_else(|| err(pointer, format!("unknown frame element `{e}`")))
        };
        let mut entries = Vec::new();
        for (b, br) in spec.brackets.iter().enumerate() {
            let here = format!("/algebroid/brackets/{b}");
            let i = index(&br.left, &format!("{here}/left"))?;
            let j = index(&br.right, &format!("{here}/right"))?;
            for (k, c) in &br.result {
                let kk = index(k, &format!("{here}/result/{k}"))?;
                entries.push((i, j, kk, expr(c, chart.vars(), &format!("{here}/result/{k}"))?));
            }
        }
        Algebroid::from_sparse("config", &chart, spec.frame.clone(), anchor, &entries, 4)
            .map_err(|e| err("/algebroid", e.to_string()))
    }

    pub fn points(&self, n: usize) -> Result<Vec<Vec<Rational>>, ConfigError> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, p)| self.sized_point(p, n, &format!("/points/{i}")))
            .collect()
    }

    pub fn flows(&self) -> Result<FlowJob, ConfigError> {
        let spec = self.flows.as_ref().ok_or_else(|| err("/flows", "section is required"))?;
        let chart = self.chart(&spec.chart, "/flows/chart")?;
        let x = field(&chart, &spec.x, "/flows/x")?;
        let y = field(&chart, &spec.y, "/flows/y")?;
        let point: Vec<f64> = self.sized_point(&spec.point, chart.dim(), "/flows/point")?.iter().map(to_f64).collect();
        let t = to_f64(&rational(&spec.t, "/flows/t")?);
        let accel = match &spec.accel {
            None => None,
            Some(a) => {
                let tv = vec![a.time_var.clone()];
                let terms = a
                    .terms
                    .iter()
                    .enumerate()
                    .map(|(i, term)| {
                        let here = format!("/flows/accel/terms/{i}");
                        Ok((
                            expr(&term.coeff, &tv, &format!("{here}/coeff"))?,
                            field(&chart, &term.field, &format!("{here}/field"))?,
                        ))
                    })
                    .collect::<Result<Vec<_>, ConfigError>>()?;
                let z = TimeDependentField::new(&chart, &a.time_var, terms).map_err(|e| err("/flows/accel", e.to_string()))?;
                let p = self.sized_point(&a.point, chart.dim(), "/flows/accel/point")?;
                Some((z, p.iter().map(to_f64).collect()))
            }
        };
        Ok(FlowJob { x, y, point, t, accel })
    }
}

pub struct FlowJob {
    pub x: VectorField,
    pub y: VectorField,
    pub point: Vec<f64>,
    pub t: f64,
    pub accel: Option<(TimeDependentField, Vec<f64>)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_chart_is_located() {
        let cfg = parse_config(r#"{"module": {"chart": "V", "generators": [["1"]]}}"#).unwrap();
        let e = cfg.module(8).unwrap_err();
        assert_eq!(e.pointer, "/module/chart");
    }

    #[test]
    fn syntax_errors_carry_line() {
        let e = parse_config("{\n  \"seed\": ,\n}").unwrap_err();
        assert!(e.message.contains("line 2"), "{e}");
    }

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(rational("3/4", "").unwrap(), folia_core::expr::rat(3, 4));
        assert_eq!(rational("-0.25", "").unwrap(), folia_core::expr::rat(-1, 4));
        assert!(rational("x", "/p").is_err());
    }
}
