//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored; a `#` after a value
//! starts a comment. Every key has a built-in default, so an empty file (or
//! no file at all) reproduces the reference experiment. Unknown keys are
//! rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::contrast::{ContrastTheta, RenderParams};
use crate::error::{Error, Result};
use crate::phantom::{Ellipsoid, PhantomParams};
use crate::search::ContrastGrid;
use crate::segmenter::SegmenterModel;
use crate::volume::Geometry;

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub cohort_dir: PathBuf,
    pub out_dir: PathBuf,
    pub tuning_subjects: usize,
    pub tuning_first_seed: u64,
    pub test_subjects: usize,
    pub test_first_seed: u64,
    pub phantom: PhantomParams,
    pub noise_sigma: f64,
    pub blur_fwhm_vox: f64,
    pub theta_train: ContrastTheta,
    pub tau_bg: f64,
    pub min_component: usize,
    pub rho_sulcal: f64,
    pub z_fourth: f64,
    pub midline_half_width: f64,
    pub grid_lo: [f64; 2],
    pub grid_hi: [f64; 2],
    pub grid_resolution: [usize; 2],
    pub grid_seed: u64,
    pub eval_seed: u64,
    /// Worker threads; 0 means one per available core.
    pub jobs: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            cohort_dir: PathBuf::from("cohort"),
            out_dir: PathBuf::from("results"),
            tuning_subjects: 8,
            tuning_first_seed: 0,
            test_subjects: 35,
            test_first_seed: 100,
            phantom: PhantomParams::default(),
            noise_sigma: 0.02,
            blur_fwhm_vox: 1.2,
            theta_train: ContrastTheta {
                theta1: 0.5,
                theta2: 0.5,
            },
            tau_bg: 0.05,
            min_component: 5,
            rho_sulcal: 0.8,
            z_fourth: 0.35,
            midline_half_width: 0.06,
            grid_lo: [0.0, 0.0],
            grid_hi: [1.0, 1.0],
            grid_resolution: [10, 10],
            grid_seed: 1,
            eval_seed: 2,
            jobs: 0,
        }
    }
}

const ELLIPSOIDS: [&str; 5] = ["brain", "llv", "rlv", "v3", "v4"];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParams(format!("{key}: cannot parse '{value}'")))
}

fn parse3(key: &str, value: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = value.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParams(format!(
            "{key}: expected 3 numbers, got '{value}'"
        )));
    }
    Ok([
        parse(key, parts[0])?,
        parse(key, parts[1])?,
        parse(key, parts[2])?,
    ])
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidParams(format!("line {}: expected 'key = value'", n + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| e.context(format!("line {}", n + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    fn ellipsoid_mut(&mut self, name: &str) -> Option<&mut Ellipsoid> {
        match name {
            "brain" => Some(&mut self.phantom.brain),
            "llv" => Some(&mut self.phantom.ventricles[0]),
            "rlv" => Some(&mut self.phantom.ventricles[1]),
            "v3" => Some(&mut self.phantom.ventricles[2]),
            "v4" => Some(&mut self.phantom.ventricles[3]),
            _ => None,
        }
    }

    /// Sets one key. Call [`Config::validate`] after a batch of updates.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "cohort_dir" => self.cohort_dir = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "tuning_subjects" => self.tuning_subjects = parse(key, value)?,
            "tuning_first_seed" => self.tuning_first_seed = parse(key, value)?,
            "test_subjects" => self.test_subjects = parse(key, value)?,
            "test_first_seed" => self.test_first_seed = parse(key, value)?,
            "phantom_dims" => {
                let d = parse3(key, value)?;
                if d.iter().any(|x| x.fract() != 0.0 || *x < 1.0) {
                    return Err(Error::InvalidParams(format!(
                        "{key}: dims must be positive integers"
                    )));
                }
                self.phantom.geometry =
                    Geometry::new(d.map(|x| x as usize), self.phantom.geometry.spacing)?;
            }
            "phantom_spacing" => {
                self.phantom.geometry =
                    Geometry::new(self.phantom.geometry.dims, parse3(key, value)?)?
            }
            "jitter_axes" => self.phantom.jitter_axes = parse(key, value)?,
            "jitter_center" => self.phantom.jitter_center = parse(key, value)?,
            "noise_sigma" => self.noise_sigma = parse(key, value)?,
            "blur_fwhm_vox" => self.blur_fwhm_vox = parse(key, value)?,
            "theta_train" => {
                let parts: Vec<&str> = value.split_whitespace().collect();
                if parts.len() != 2 {
                    return Err(Error::InvalidParams(format!("{key}: expected 2 numbers")));
                }
                self.theta_train =
                    ContrastTheta::new(parse(key, parts[0])?, parse(key, parts[1])?)?;
            }
            "tau_bg" => self.tau_bg = parse(key, value)?,
            "min_component" => self.min_component = parse(key, value)?,
            "rho_sulcal" => self.rho_sulcal = parse(key, value)?,
            "z_fourth" => self.z_fourth = parse(key, value)?,
            "midline_half_width" => self.midline_half_width = parse(key, value)?,
            "grid_lo1" => self.grid_lo[0] = parse(key, value)?,
            "grid_hi1" => self.grid_hi[0] = parse(key, value)?,
            "grid_lo2" => self.grid_lo[1] = parse(key, value)?,
            "grid_hi2" => self.grid_hi[1] = parse(key, value)?,
            "grid_r1" => self.grid_resolution[0] = parse(key, value)?,
            "grid_r2" => self.grid_resolution[1] = parse(key, value)?,
            "grid_seed" => self.grid_seed = parse(key, value)?,
            "eval_seed" => self.eval_seed = parse(key, value)?,
            "jobs" => self.jobs = parse(key, value)?,
            _ => {
                let target = key
                    .strip_suffix("_center")
                    .map(|n| (n, true))
                    .or_else(|| key.strip_suffix("_axes").map(|n| (n, false)));
                let v = parse3(key, value)?;
                match target
                    .and_then(|(name, is_center)| Some((self.ellipsoid_mut(name)?, is_center)))
                {
                    Some((e, true)) => e.center = v,
                    Some((e, false)) => e.semi_axes = v,
                    None => return Err(Error::InvalidParams(format!("unknown key '{key}'"))),
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.phantom.validate()?;
        self.render_params(0).validate()?;
        self.grid()?;
        let model = self.model()?;
        if !(model.tau_bg.is_finite() && model.tau_bg >= 0.0 && model.tau_bg < model.tau_csf) {
            return Err(Error::InvalidParams(format!(
                "tau_bg must lie in [0, tau_csf = {:.6})",
                model.tau_csf
            )));
        }
        for (name, v) in [
            ("rho_sulcal", self.rho_sulcal),
            ("z_fourth", self.z_fourth),
            ("midline_half_width", self.midline_half_width),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }

    pub fn render_params(&self, render_seed: u64) -> RenderParams {
        RenderParams {
            noise_sigma: self.noise_sigma,
            blur_fwhm_vox: self.blur_fwhm_vox,
            render_seed,
        }
    }

    pub fn grid(&self) -> Result<ContrastGrid> {
        ContrastGrid::new(self.grid_lo, self.grid_hi, self.grid_resolution)
    }

    pub fn model(&self) -> Result<SegmenterModel> {
        let mut m = SegmenterModel::calibrate(self.theta_train)?;
        m.tau_bg = self.tau_bg;
        m.min_component = self.min_component;
        m.rho_sulcal = self.rho_sulcal;
        m.z_fourth = self.z_fourth;
        m.midline_half_width = self.midline_half_width;
        m.brain = self.phantom.brain;
        Ok(m)
    }

    /// The configuration as a parseable manifest with every key spelled out.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let g = &self.phantom.geometry;
        let three = |v: [f64; 3]| format!("{} {} {}", v[0], v[1], v[2]);
        let _ = writeln!(s, "cohort_dir = {}", self.cohort_dir.display());
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "tuning_subjects = {}", self.tuning_subjects);
        let _ = writeln!(s, "tuning_first_seed = {}", self.tuning_first_seed);
        let _ = writeln!(s, "test_subjects = {}", self.test_subjects);
        let _ = writeln!(s, "test_first_seed = {}", self.test_first_seed);
        let _ = writeln!(
            s,
            "phantom_dims = {} {} {}",
            g.dims[0], g.dims[1], g.dims[2]
        );
        let _ = writeln!(s, "phantom_spacing = {}", three(g.spacing));
        let _ = writeln!(s, "jitter_axes = {}", self.phantom.jitter_axes);
        let _ = writeln!(s, "jitter_center = {}", self.phantom.jitter_center);
        let mut ellipsoids = vec![self.phantom.brain];
        ellipsoids.extend(self.phantom.ventricles);
        for (name, e) in ELLIPSOIDS.iter().zip(&ellipsoids) {
            let _ = writeln!(s, "{name}_center = {}", three(e.center));
            let _ = writeln!(s, "{name}_axes = {}", three(e.semi_axes));
        }
        let _ = writeln!(s, "noise_sigma = {}", self.noise_sigma);
        let _ = writeln!(s, "blur_fwhm_vox = {}", self.blur_fwhm_vox);
        let _ = writeln!(
            s,
            "theta_train = {} {}",
            self.theta_train.theta1, self.theta_train.theta2
        );
        let _ = writeln!(s, "tau_bg = {}", self.tau_bg);
        let _ = writeln!(s, "min_component = {}", self.min_component);
        let _ = writeln!(s, "rho_sulcal = {}", self.rho_sulcal);
        let _ = writeln!(s, "z_fourth = {}", self.z_fourth);
        let _ = writeln!(s, "midline_half_width = {}", self.midline_half_width);
        let _ = writeln!(s, "grid_lo1 = {}", self.grid_lo[0]);
        let _ = writeln!(s, "grid_hi1 = {}", self.grid_hi[0]);
        let _ = writeln!(s, "grid_lo2 = {}", self.grid_lo[1]);
        let _ = writeln!(s, "grid_hi2 = {}", self.grid_hi[1]);
        let _ = writeln!(s, "grid_r1 = {}", self.grid_resolution[0]);
        let _ = writeln!(s, "grid_r2 = {}", self.grid_resolution[1]);
        let _ = writeln!(s, "grid_seed = {}", self.grid_seed);
        let _ = writeln!(s, "eval_seed = {}", self.eval_seed);
        let _ = writeln!(s, "jobs = {}", self.jobs);
        s
    }
}
