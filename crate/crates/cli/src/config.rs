//! Flat `key = value` configuration with `[section]` headers.
//!
//! Lines starting with `#` or `;` are comments. Keys before the first header
//! belong to the top level (only `mode` lives there). Unknown sections and
//! keys are rejected so that typos do not silently fall back to defaults;
//! a `[meta]` section is ignored, which lets a run's metadata file be fed
//! back in as a configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use epcavity::{derive_params_rtol, DetuningBranch, Mirrors, PhysicalParams, RatioSpec};

use crate::error::CliError;

/// Relative tolerance on `alpha + beta − kappa_int = (p + 1)·kappa_2`.
pub const MIRROR_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    EigSweep,
    EpLocate,
    Spectrum,
    Cpa,
    DynamicsCheck,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::EigSweep => "eig-sweep",
            Mode::EpLocate => "ep-locate",
            Mode::Spectrum => "spectrum",
            Mode::Cpa => "cpa",
            Mode::DynamicsCheck => "dynamics-check",
        }
    }

    fn parse(s: &str) -> Result<Self, CliError> {
        [
            Mode::EigSweep,
            Mode::EpLocate,
            Mode::Spectrum,
            Mode::Cpa,
            Mode::DynamicsCheck,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| {
            CliError::config(format!(
                "unknown mode '{s}' (expected eig-sweep, ep-locate, spectrum, cpa or dynamics-check)"
            ))
        })
    }

    /// Sweeps take a `g2_range`; the others a list of `g_2` values.
    fn wants_range(self) -> bool {
        matches!(self, Mode::EigSweep | Mode::EpLocate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::config(format!("unknown format '{s}' (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    Values(Vec<f64>),
    Range { lo: f64, hi: f64, points: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub p: f64,
    pub q: f64,
    pub kappa_2: f64,
    pub omega_c: f64,
    pub branch: DetuningBranch,
    pub coupling: Coupling,
    pub ep3_tol: f64,
    pub mirrors: Mirrors,
    /// Probe offsets from `omega_c`.
    pub omega_range: (f64, f64),
    pub n_points: usize,
    pub p_in_1: f64,
    /// `None` selects the CPA ratio `√(β/α)·p_in_1`.
    pub p_in_2: Option<f64>,
    pub steady_cases: usize,
    pub out_dir: PathBuf,
    pub format: Format,
}

type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

fn tokenize(text: &str) -> Result<Sections, CliError> {
    let mut sections: Sections = BTreeMap::new();
    sections.insert(String::new(), BTreeMap::new());
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::config(format!("line {line_no}: unterminated section header")))?
                .trim();
            if sections.contains_key(name) {
                return Err(CliError::config(format!("line {line_no}: duplicate section [{name}]")));
            }
            current = name.to_string();
            sections.insert(current.clone(), BTreeMap::new());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("line {line_no}: expected key = value")))?;
        let key = key.trim().to_string();
        let section = sections.get_mut(&current).expect("current section exists");
        if section
            .insert(key.clone(), (line_no, value.trim().to_string()))
            .is_some()
        {
            return Err(CliError::config(format!("line {line_no}: duplicate key '{key}'")));
        }
    }
    Ok(sections)
}

struct Reader {
    sections: Sections,
}

impl Reader {
    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.sections.get_mut(section).and_then(|s| s.remove(key))
    }

    fn label(section: &str, key: &str) -> String {
        if section.is_empty() {
            key.to_string()
        } else {
            format!("[{section}] {key}")
        }
    }

    fn required(&mut self, section: &str, key: &str) -> Result<(usize, String), CliError> {
        self.take(section, key)
            .ok_or_else(|| CliError::config(format!("missing {}", Self::label(section, key))))
    }

    fn float(&mut self, section: &str, key: &str) -> Result<Option<f64>, CliError> {
        self.take(section, key)
            .map(|(line, v)| parse_float(&v, line, section, key))
            .transpose()
    }

    fn required_float(&mut self, section: &str, key: &str) -> Result<f64, CliError> {
        let (line, v) = self.required(section, key)?;
        parse_float(&v, line, section, key)
    }

    fn floats(&mut self, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.take(section, key)
            .map(|(line, v)| {
                v.split(',')
                    .map(|x| parse_float(x.trim(), line, section, key))
                    .collect()
            })
            .transpose()
    }

    fn count(&mut self, section: &str, key: &str) -> Result<Option<usize>, CliError> {
        self.take(section, key)
            .map(|(line, v)| {
                v.parse::<usize>().map_err(|_| {
                    CliError::config(format!(
                        "line {line}: {} must be a non-negative integer, got '{v}'",
                        Self::label(section, key)
                    ))
                })
            })
            .transpose()
    }

    fn finish(self) -> Result<(), CliError> {
        for (name, keys) in &self.sections {
            if name == "meta" {
                continue;
            }
            if let Some((key, (line, _))) = keys.iter().next() {
                return Err(CliError::config(format!(
                    "line {line}: unknown key {}",
                    Self::label(name, key)
                )));
            }
        }
        Ok(())
    }
}

fn parse_float(v: &str, line: usize, section: &str, key: &str) -> Result<f64, CliError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(CliError::config(format!(
            "line {line}: {} must be a finite number, got '{v}'",
            Reader::label(section, key)
        ))),
    }
}

fn pair(values: Vec<f64>, what: &str) -> Result<(f64, f64), CliError> {
    match values[..] {
        [lo, hi] => Ok((lo, hi)),
        _ => Err(CliError::config(format!("{what} needs exactly two values 'lo, hi'"))),
    }
}

const SECTIONS: [&str; 8] = ["", "ratio", "mirror", "locator", "probe", "dynamics", "output", "meta"];

impl RunConfig {
    /// Parses and validates a configuration.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let sections = tokenize(text)?;
        if let Some(name) = sections.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(CliError::config(format!("unknown section [{name}]")));
        }
        let mut r = Reader { sections };

        let mode = Mode::parse(&r.required("", "mode")?.1)?;

        let p = r.required_float("ratio", "p")?;
        let q = r.required_float("ratio", "q")?;
        let kappa_2 = r.required_float("ratio", "kappa_2")?;
        let omega_c = r.float("ratio", "omega_c")?.unwrap_or(0.0);
        let branch = match r.float("ratio", "delta_1_sign")? {
            None => DetuningBranch::Positive,
            Some(s) => DetuningBranch::from_sign(s)
                .ok_or_else(|| CliError::config(format!("[ratio] delta_1_sign must be 1 or -1, got {s}")))?,
        };
        let values = r.floats("ratio", "g_2")?;
        let range = r.floats("ratio", "g2_range")?;
        let g2_points = r.count("ratio", "g2_points")?;
        let coupling = match (values, range) {
            (Some(_), Some(_)) => {
                return Err(CliError::config(
                    "give either [ratio] g_2 or [ratio] g2_range, not both",
                ))
            }
            (None, None) => return Err(CliError::config("missing [ratio] g_2 or [ratio] g2_range")),
            (Some(v), None) => {
                if g2_points.is_some() {
                    return Err(CliError::config("[ratio] g2_points only applies with g2_range"));
                }
                Coupling::Values(v)
            }
            (None, Some(v)) => {
                let (lo, hi) = pair(v, "[ratio] g2_range")?;
                Coupling::Range {
                    lo,
                    hi,
                    points: g2_points.unwrap_or(2000),
                }
            }
        };

        let ep3_tol = r.float("locator", "ep3_tol")?.unwrap_or(1e-4);

        let mirrors = Mirrors::new(
            r.required_float("mirror", "alpha")?,
            r.required_float("mirror", "beta")?,
            r.required_float("mirror", "kappa_int")?,
        );

        let omega_range = match r.floats("probe", "omega_range")? {
            Some(v) => pair(v, "[probe] omega_range")?,
            None => (-10.0 * kappa_2, 10.0 * kappa_2),
        };
        let n_points = r.count("probe", "n_points")?.unwrap_or(2001);
        let p_in_1 = r.float("probe", "p_in_1")?.unwrap_or(1.0);
        let p_in_2 = r.float("probe", "p_in_2")?;

        let steady_cases = r.count("dynamics", "steady_cases")?.unwrap_or(5);

        let out_dir = PathBuf::from(r.take("output", "path").map(|(_, v)| v).unwrap_or_else(|| "out".into()));
        let format = match r.take("output", "format") {
            Some((_, v)) => Format::parse(&v)?,
            None => Format::Csv,
        };
        r.finish()?;

        let config = RunConfig {
            mode,
            p,
            q,
            kappa_2,
            omega_c,
            branch,
            coupling,
            ep3_tol,
            mirrors,
            omega_range,
            n_points,
            p_in_1,
            p_in_2,
            steady_cases,
            out_dir,
            format,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn template(&self) -> RatioSpec {
        RatioSpec::new(self.p, self.q, self.kappa_2, 0.0)
            .with_omega_c(self.omega_c)
            .with_branch(self.branch)
    }

    /// Full parameter set at one coupling, with the configuration's mirror
    /// tolerance.
    pub fn params_at(&self, g_2: f64) -> Result<PhysicalParams, CliError> {
        Ok(derive_params_rtol(
            &self.template().with_g2(g_2),
            self.mirrors,
            MIRROR_RTOL,
        )?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.template().validate()?;
        let want = self.template().kappa_e();
        let got = self.mirrors.kappa_e();
        let residual = got - want;
        if !(residual.abs() <= MIRROR_RTOL * want) {
            return Err(CliError::config(format!(
                "mirror block off the manifold: alpha + beta - kappa_int = {got}, required (p + 1)*kappa_2 = {want}, residual {residual:e}"
            )));
        }
        for (name, v) in [
            ("alpha", self.mirrors.alpha),
            ("beta", self.mirrors.beta),
            ("kappa_int", self.mirrors.kappa_int),
        ] {
            if v < 0.0 {
                return Err(CliError::config(format!("[mirror] {name} must be >= 0, got {v}")));
            }
        }

        match (&self.coupling, self.mode.wants_range()) {
            (Coupling::Range { lo, hi, points }, true) => {
                if !(lo < hi) || *lo < 0.0 {
                    return Err(CliError::config(format!(
                        "[ratio] g2_range needs 0 <= lo < hi, got {lo}, {hi}"
                    )));
                }
                if *points < 2 {
                    return Err(CliError::config("[ratio] g2_points must be at least 2"));
                }
            }
            (Coupling::Values(values), false) => {
                if values.is_empty() {
                    return Err(CliError::config("[ratio] g_2 needs at least one value"));
                }
                for &g in values {
                    self.params_at(g)?;
                }
            }
            (Coupling::Range { .. }, false) => {
                return Err(CliError::config(format!(
                    "mode {} takes [ratio] g_2, not g2_range",
                    self.mode.as_str()
                )))
            }
            (Coupling::Values(_), true) => {
                return Err(CliError::config(format!(
                    "mode {} takes [ratio] g2_range, not g_2",
                    self.mode.as_str()
                )))
            }
        }

        if !(self.ep3_tol > 0.0) {
            return Err(CliError::config("[locator] ep3_tol must be > 0"));
        }
        let (lo, hi) = self.omega_range;
        if !(lo < hi) {
            return Err(CliError::config(format!(
                "[probe] omega_range needs lo < hi, got {lo}, {hi}"
            )));
        }
        if self.n_points < 2 {
            return Err(CliError::config("[probe] n_points must be at least 2"));
        }
        match self.p_in_2 {
            None if !(self.mirrors.alpha > 0.0) => {
                return Err(CliError::config(
                    "[probe] p_in_2 is required when alpha = 0 (no CPA ratio)",
                ));
            }
            None if self.p_in_1 == 0.0 => return Err(CliError::config("[probe] drive amplitudes are both zero")),
            Some(p2) if p2 == 0.0 && self.p_in_1 == 0.0 => {
                return Err(CliError::config("[probe] drive amplitudes are both zero"))
            }
            _ => {}
        }
        if self.steady_cases == 0 {
            return Err(CliError::config("[dynamics] steady_cases must be at least 1"));
        }
        Ok(())
    }

    /// The fully resolved configuration in the input format. Floats use the
    /// shortest representation that parses back to the same value.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "mode = {}", self.mode.as_str());
        let _ = writeln!(s, "\n[ratio]");
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "kappa_2 = {}", self.kappa_2);
        match &self.coupling {
            Coupling::Values(v) => {
                let _ = writeln!(s, "g_2 = {}", list(v));
            }
            Coupling::Range { lo, hi, points } => {
                let _ = writeln!(s, "g2_range = {}", list(&[*lo, *hi]));
                let _ = writeln!(s, "g2_points = {points}");
            }
        }
        let _ = writeln!(s, "omega_c = {}", self.omega_c);
        let _ = writeln!(s, "delta_1_sign = {}", self.branch.sign());
        let _ = writeln!(s, "\n[mirror]");
        let _ = writeln!(s, "alpha = {}", self.mirrors.alpha);
        let _ = writeln!(s, "beta = {}", self.mirrors.beta);
        let _ = writeln!(s, "kappa_int = {}", self.mirrors.kappa_int);
        let _ = writeln!(s, "\n[locator]");
        let _ = writeln!(s, "ep3_tol = {}", self.ep3_tol);
        let _ = writeln!(s, "\n[probe]");
        let _ = writeln!(s, "omega_range = {}", list(&[self.omega_range.0, self.omega_range.1]));
        let _ = writeln!(s, "n_points = {}", self.n_points);
        let _ = writeln!(s, "p_in_1 = {}", self.p_in_1);
        if let Some(p2) = self.p_in_2 {
            let _ = writeln!(s, "p_in_2 = {p2}");
        }
        let _ = writeln!(s, "\n[dynamics]");
        let _ = writeln!(s, "steady_cases = {}", self.steady_cases);
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "path = {}", self.out_dir.display());
        let _ = writeln!(s, "format = {}", self.format.as_str());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYMMETRIC: &str = "\
# symmetric sweep
mode = eig-sweep

[ratio]
p = 1
q = 1
kappa_2 = 2
g2_range = 1.8, 4

[mirror]
alpha = 2.25
beta = 2.25
kappa_int = 0.5
";

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::parse(SYMMETRIC).unwrap();
        assert_eq!(c.mode, Mode::EigSweep);
        assert_eq!(
            c.coupling,
            Coupling::Range {
                lo: 1.8,
                hi: 4.0,
                points: 2000
            }
        );
        assert_eq!(c.omega_range, (-20.0, 20.0));
        assert_eq!(c.n_points, 2001);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.branch, DetuningBranch::Positive);
        assert_eq!(c.out_dir, PathBuf::from("out"));
    }

    #[test]
    fn render_round_trips() {
        let c = RunConfig::parse(SYMMETRIC).unwrap();
        let again = RunConfig::parse(&c.render()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.render(), again.render());

        let text = SYMMETRIC.replace("mode = eig-sweep", "mode = spectrum").replace(
            "g2_range = 1.8, 4",
            "g_2 = 2, 2.15, 2.3094010767585034, 5, 6\ndelta_1_sign = -1",
        );
        let c = RunConfig::parse(&format!("{text}\n[probe]\np_in_2 = 0.3\n\n[meta]\nversion = 9\n")).unwrap();
        assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn mirror_residual_reported() {
        let bad = SYMMETRIC.replace("alpha = 2.25", "alpha = 2.5");
        let err = RunConfig::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("residual"), "{err}");
        // Within 1e-6 relative is accepted.
        assert!(RunConfig::parse(&SYMMETRIC.replace("alpha = 2.25", "alpha = 2.250001")).is_ok());
    }

    #[test]
    fn rejects_malformed_input() {
        let cases = [
            SYMMETRIC.replace("mode = eig-sweep", "mode = nope"),
            SYMMETRIC.replace("p = 1", "p = one"),
            SYMMETRIC.replace("p = 1", "p = -1"),
            SYMMETRIC.replace("g2_range = 1.8, 4", "g2_range = 4, 1.8"),
            SYMMETRIC.replace("g2_range = 1.8, 4", "g_2 = 3"),
            SYMMETRIC.replace("g2_range = 1.8, 4", "g2_range = 1.8, 4\ng_2 = 3"),
            SYMMETRIC.replace("kappa_2 = 2", "kappa_2 = 2\nkapa = 1"),
            SYMMETRIC.replace("[mirror]", "[mirrors]"),
            SYMMETRIC.replace("q = 1", "q = 1\nq = 2"),
            SYMMETRIC.replace("kappa_int = 0.5", ""),
            format!("{SYMMETRIC}\n[output]\nformat = xml\n"),
            format!("{SYMMETRIC}\n[probe]\nn_points = 1\n"),
        ];
        for text in cases {
            assert!(
                matches!(
                    RunConfig::parse(&text),
                    Err(CliError::Config(_)) | Err(CliError::Model(_))
                ),
                "{text}"
            );
        }
    }

    #[test]
    fn infeasible_value_rejected() {
        let text = SYMMETRIC
            .replace("mode = eig-sweep", "mode = cpa")
            .replace("g2_range = 1.8, 4", "g_2 = 1.5");
        let err = RunConfig::parse(&text).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("feasibility"), "{err}");
    }
}
