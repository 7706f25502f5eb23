//! Run configuration: an INI file with the sections `[sphere]`, `[profile]`,
//! `[scales]`, `[rotations]`, `[certify]` and `[output]`, overridden by flags.

use anyhow::{anyhow, bail, Context, Result};
use ini::Ini;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sphereframes::frame_verify::{CertifyConfig, ExplicitScales, DEFAULT_TOLERANCE};
use sphereframes::output::Provenance;
use sphereframes::rotation_grid::DEFAULT_GRID_CAP;
use sphereframes::scale_grid::{covering_range, WeightRule, DEFAULT_COVERAGE};
use sphereframes::wavelet_spectra::{Preset, ScaleDensity, SpectralProfile};

/// Profile given by preset name or by explicit parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSpec {
    Preset(Preset),
    Explicit { a: f64, b: f64, c: f64, d: usize, q: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub band_limit: usize,
    pub profile: ProfileSpec,
    pub amplitude: f64,
    pub direction: Option<Vec<f64>>,
    pub ratio: f64,
    pub rho_max: Option<f64>,
    pub scales: Option<usize>,
    pub rule: WeightRule,
    /// `(δ_n, …, δ_1)`; one value is repeated on every level.
    pub deltas: Vec<f64>,
    pub max_refinements: usize,
    pub grid_cap: usize,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 2,
            band_limit: 8,
            profile: ProfileSpec::Preset(Preset::AbelPoisson),
            amplitude: 1.0,
            direction: None,
            ratio: 1.5,
            rho_max: None,
            scales: None,
            rule: WeightRule::Midpoint,
            deltas: vec![PI / 4.0],
            max_refinements: 0,
            grid_cap: DEFAULT_GRID_CAP,
            trials: 20,
            seed: 0,
            tolerance: DEFAULT_TOLERANCE,
            out: PathBuf::from("out"),
        }
    }
}

/// Flag values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub preset: Option<String>,
    pub n: Option<usize>,
    pub band_limit: Option<usize>,
    pub deltas: Option<Vec<f64>>,
    pub ratio: Option<f64>,
    pub scales: Option<usize>,
    pub trials: Option<usize>,
    pub tolerance: Option<f64>,
    pub max_refinements: Option<usize>,
}

fn parse<T: FromStr>(section: &str, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| anyhow!("[{section}] {key} = {value:?}: {e}"))
}

/// Comma- or whitespace-separated floats; `pi` and `2pi` style multiples are accepted.
pub fn parse_float_list(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(parse_angle)
        .collect()
}

fn parse_angle(s: &str) -> Result<f64> {
    let lower = s.to_ascii_lowercase();
    if let Some(prefix) = lower.strip_suffix("pi") {
        let k: f64 = match prefix.trim_end_matches('*') {
            "" => 1.0,
            p => p.parse().map_err(|e| anyhow!("bad multiple of pi {s:?}: {e}"))?,
        };
        return Ok(k * PI);
    }
    if let Some((num, den)) = lower.split_once("pi/") {
        let k: f64 = if num.is_empty() { 1.0 } else { num.trim_end_matches('*').parse()? };
        let d: f64 = den.parse()?;
        return Ok(k * PI / d);
    }
    s.parse().map_err(|e| anyhow!("bad number {s:?}: {e}"))
}

/// Drops a trailing `; comment` or `# comment` preceded by whitespace.
fn strip_comment(value: &str) -> &str {
    let cut = value
        .char_indices()
        .find(|&(i, c)| (c == ';' || c == '#') && value[..i].ends_with(char::is_whitespace))
        .map_or(value.len(), |(i, _)| i);
    value[..cut].trim()
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("sphere", &["n", "band_limit"]),
    ("profile", &["preset", "a", "b", "c", "d", "q", "amplitude", "direction"]),
    ("scales", &["ratio", "rho_max", "count", "rule"]),
    ("rotations", &["delta", "max_refinements", "grid_cap"]),
    ("certify", &["trials", "seed", "tolerance"]),
    ("output", &["dir"]),
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let ini = Ini::load_from_file(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::default();
        let mut explicit: [Option<String>; 5] = Default::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    bail!("key {k:?} outside of any section");
                }
                continue;
            };
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| *s == section) else {
                bail!("unknown section [{section}]");
            };
            for (key, value) in props.iter() {
                if !keys.contains(&key) {
                    bail!("unknown key {key:?} in [{section}]");
                }
                let v = strip_comment(value);
                match (section, key) {
                    ("sphere", "n") => cfg.n = parse(section, key, v)?,
                    ("sphere", "band_limit") => cfg.band_limit = parse(section, key, v)?,
                    ("profile", "preset") => {
                        cfg.profile = ProfileSpec::Preset(v.parse().map_err(|e| anyhow!("[profile] preset: {e}"))?)
                    }
                    ("profile", "a") => explicit[0] = Some(v.to_string()),
                    ("profile", "b") => explicit[1] = Some(v.to_string()),
                    ("profile", "c") => explicit[2] = Some(v.to_string()),
                    ("profile", "d") => explicit[3] = Some(v.to_string()),
                    ("profile", "q") => explicit[4] = Some(v.to_string()),
                    ("profile", "amplitude") => cfg.amplitude = parse(section, key, v)?,
                    ("profile", "direction") => cfg.direction = Some(parse_float_list(v)?),
                    ("scales", "ratio") => cfg.ratio = parse(section, key, v)?,
                    ("scales", "rho_max") => cfg.rho_max = Some(parse(section, key, v)?),
                    ("scales", "count") => cfg.scales = Some(parse(section, key, v)?),
                    ("scales", "rule") => {
                        cfg.rule = v.parse().map_err(|e| anyhow!("[scales] rule: {e}"))?
                    }
                    ("rotations", "delta") => cfg.deltas = parse_float_list(v)?,
                    ("rotations", "max_refinements") => cfg.max_refinements = parse(section, key, v)?,
                    ("rotations", "grid_cap") => cfg.grid_cap = parse(section, key, v)?,
                    ("certify", "trials") => cfg.trials = parse(section, key, v)?,
                    ("certify", "seed") => cfg.seed = parse(section, key, v)?,
                    ("certify", "tolerance") => cfg.tolerance = parse(section, key, v)?,
                    ("output", "dir") => cfg.out = PathBuf::from(v),
                    _ => unreachable!("keys are checked against SECTIONS"),
                }
            }
        }
        if explicit.iter().any(Option::is_some) {
            if matches!(ini.section(Some("profile")).and_then(|p| p.get("preset")), Some(_)) {
                bail!("[profile] takes either a preset or explicit a, b, c, d, q, not both");
            }
            let [a, b, c, d, q] = explicit;
            let need = |v: Option<String>, k: &str| v.ok_or_else(|| anyhow!("[profile] explicit profile needs {k}"));
            cfg.profile = ProfileSpec::Explicit {
                a: parse("profile", "a", &need(a, "a")?)?,
                b: parse("profile", "b", &need(b, "b")?)?,
                c: parse("profile", "c", &need(c, "c")?)?,
                d: parse("profile", "d", &need(d, "d")?)?,
                q: parse_float_list(&need(q, "q")?)?,
            };
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(v) = &o.out {
            self.out = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(p) = &o.preset {
            self.profile = ProfileSpec::Preset(p.parse().map_err(|e| anyhow!("--preset: {e}"))?);
        }
        if let Some(v) = o.n {
            self.n = v;
        }
        if let Some(v) = o.band_limit {
            self.band_limit = v;
        }
        if let Some(v) = &o.deltas {
            self.deltas = v.clone();
        }
        if let Some(v) = o.ratio {
            self.ratio = v;
        }
        if let Some(v) = o.scales {
            self.scales = Some(v);
        }
        if let Some(v) = o.trials {
            self.trials = v;
        }
        if let Some(v) = o.tolerance {
            self.tolerance = v;
        }
        if let Some(v) = o.max_refinements {
            self.max_refinements = v;
        }
        Ok(())
    }

    pub fn profile(&self) -> SpectralProfile {
        let p = match &self.profile {
            ProfileSpec::Preset(p) => p.profile(self.n),
            ProfileSpec::Explicit { a, b, c, d, q } => SpectralProfile::new(*a, *b, *c, q.clone(), *d),
        };
        let p = p.with_amplitude(self.amplitude);
        match &self.direction {
            Some(dir) => p.with_direction(dir.clone()),
            None => p,
        }
    }

    /// `(δ_n, …, δ_1)` with a single value repeated.
    pub fn resolved_deltas(&self) -> Vec<f64> {
        if self.deltas.len() == 1 {
            vec![self.deltas[0]; self.n]
        } else {
            self.deltas.clone()
        }
    }

    /// Fills in whichever of `rho_max` and `count` is missing from the
    /// covering range; `None` when neither is set.
    pub fn explicit_scales(&self, density: &ScaleDensity) -> Result<Option<ExplicitScales>> {
        if self.rho_max.is_none() && self.scales.is_none() {
            return Ok(None);
        }
        let (lo, hi) = covering_range(density, self.band_limit, DEFAULT_COVERAGE)?;
        let rho_max = self.rho_max.unwrap_or(hi.exp());
        let count = match self.scales {
            Some(c) => c,
            None => ((rho_max.ln() - lo) / self.ratio.ln()).ceil().max(1.0) as usize,
        };
        Ok(Some(ExplicitScales { rho_max, count }))
    }

    /// Checks every numeric constraint before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            bail!("n must be at least 2, got {}", self.n);
        }
        if self.band_limit < 1 {
            bail!("band_limit must be at least 1");
        }
        self.profile()
            .validate(self.n, self.band_limit)
            .map_err(|e| anyhow!("invalid profile: {e}"))?;
        if !(self.ratio > 1.0 && self.ratio.is_finite()) {
            bail!("scale ratio must exceed 1, got {}", self.ratio);
        }
        if let Some(r) = self.rho_max {
            if !(r > 0.0 && r.is_finite()) {
                bail!("rho_max must be positive, got {r}");
            }
        }
        let deltas = self.resolved_deltas();
        if deltas.len() != self.n {
            bail!("expected 1 or {} rotation caps (delta_n .. delta_1), got {}", self.n, self.deltas.len());
        }
        if let Some(d) = deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            bail!("rotation caps must be positive, got {d}");
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            bail!("tolerance must be nonnegative, got {}", self.tolerance);
        }
        if self.trials == 0 {
            bail!("at least one trial is required");
        }
        Ok(())
    }

    pub fn certify_config(&self) -> Result<CertifyConfig> {
        let profile = self.profile();
        let density = ScaleDensity::new(self.n, &profile, self.band_limit)?;
        Ok(CertifyConfig {
            n: self.n,
            profile,
            band_limit: self.band_limit,
            ratio: self.ratio,
            rule: self.rule,
            scales: self.explicit_scales(&density)?,
            deltas: self.resolved_deltas(),
            trials: self.trials,
            seed: self.seed,
            tolerance: self.tolerance,
            max_refinements: self.max_refinements,
            grid_cap: self.grid_cap,
        })
    }

    /// Everything that influences the results, in a fixed order.
    pub fn provenance(&self, command: &str) -> Provenance {
        let p = self.profile();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ");
        let mut out = Provenance::default();
        out.push("command", command);
        out.push("sphere.n", self.n);
        out.push("sphere.band_limit", self.band_limit);
        match &self.profile {
            ProfileSpec::Preset(preset) => out.push("profile.preset", preset),
            ProfileSpec::Explicit { .. } => out.push("profile.preset", "explicit"),
        }
        out.push("profile.a", format!("{:.16e}", p.a));
        out.push("profile.b", format!("{:.16e}", p.b));
        out.push("profile.c", format!("{:.16e}", p.c));
        out.push("profile.d", p.d);
        out.push("profile.q", list(&p.q));
        out.push("profile.amplitude", format!("{:.16e}", p.amplitude));
        out.push("profile.direction", p.direction.as_deref().map_or("x2".to_string(), list));
        out.push("scales.ratio", format!("{:.16e}", self.ratio));
        out.push("scales.rho_max", self.rho_max.map_or("auto".to_string(), |r| format!("{r:.16e}")));
        out.push("scales.count", self.scales.map_or("auto".to_string(), |c| c.to_string()));
        out.push("scales.rule", self.rule);
        out.push("rotations.delta", list(&self.resolved_deltas()));
        out.push("rotations.max_refinements", self.max_refinements);
        out.push("rotations.grid_cap", self.grid_cap);
        out.push("certify.trials", self.trials);
        out.push("certify.seed", self.seed);
        out.push("certify.tolerance", format!("{:.16e}", self.tolerance));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn angles_and_lists() {
        assert_eq!(parse_float_list("pi, 2pi").unwrap(), vec![PI, 2.0 * PI]);
        assert_eq!(parse_float_list("pi/4 0.5").unwrap(), vec![PI / 4.0, 0.5]);
        assert!(parse_float_list("x").is_err());
    }

    #[test]
    fn inline_comments() {
        assert_eq!(strip_comment(" abel-poisson   ; note"), "abel-poisson");
        assert_eq!(strip_comment("0.5 # x"), "0.5");
        assert_eq!(strip_comment("pi/4"), "pi/4");
    }

    #[test]
    fn full_file() {
        let f = write(
            "[sphere]\nn = 3\nband_limit = 4\n[profile]\npreset = poisson-2\n[scales]\nratio = 2\nrule = endpoint\n\
             [rotations]\ndelta = pi/2, pi/2, pi\n[certify]\ntrials = 3\nseed = 7\ntolerance = 0.2\n[output]\ndir = res\n",
        );
        let c = RunConfig::load(f.path()).unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.profile, ProfileSpec::Preset(Preset::Poisson(2)));
        assert_eq!(c.rule, WeightRule::Endpoint);
        assert_eq!(c.resolved_deltas(), vec![PI / 2.0, PI / 2.0, PI]);
        assert_eq!(c.out, PathBuf::from("res"));
        c.validate().unwrap();
    }

    #[test]
    fn explicit_profile_and_errors() {
        let f = write("[profile]\na = 1\nb = 1\nc = 1\nd = 1\nq = 0 1\n");
        let c = RunConfig::load(f.path()).unwrap();
        assert_eq!(c.profile(), Preset::AbelPoisson.profile(2));

        // q(1) = 0 violates positivity
        let f = write("[profile]\na = 1\nb = 1\nc = 1\nd = 0\nq = -1 1\n");
        assert!(RunConfig::load(f.path()).unwrap().validate().is_err());
        let f = write("[profile]\na = 1\n");
        assert!(RunConfig::load(f.path()).is_err());
        let f = write("[sphere]\nradius = 2\n");
        assert!(RunConfig::load(f.path()).is_err());
        let f = write("[colors]\nred = 1\n");
        assert!(RunConfig::load(f.path()).is_err());
        assert!(RunConfig::load(Path::new("/nonexistent/config.conf")).is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = RunConfig::default();
        c.apply(&Overrides {
            preset: Some("gauss-weierstrass".into()),
            deltas: Some(vec![0.3, 0.6]),
            seed: Some(5),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(c.profile, ProfileSpec::Preset(Preset::GaussWeierstrass));
        assert_eq!(c.seed, 5);
        c.validate().unwrap();
        c.deltas = vec![0.1, 0.2, 0.3];
        assert!(c.validate().is_err());
    }
}
