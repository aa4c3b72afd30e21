//! Run configuration, read from TOML. Unknown keys are rejected and every value is validated
//! before any computation starts.

use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sigmaflow_core::dirac::SpinStructure;
use sigmaflow_core::grid::{ConformalDomain, LambdaSpec, TrigMode};
use sigmaflow_core::harmonic::FlowParams;
use sigmaflow_core::target::{
    FlatTorus, HyperbolicCylinder, HyperbolicPlane, RoundSphere, TargetChart, WarpedTorus,
};

use crate::error::{Result, RunError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Flow,
    Hopf,
    TeichScan,
    DiracSpectrum,
    DhFlow,
    AdhgCheck,
    SuperCheck,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Kind::Flow => "flow",
            Kind::Hopf => "hopf",
            Kind::TeichScan => "teich-scan",
            Kind::DiracSpectrum => "dirac-spectrum",
            Kind::DhFlow => "dh-flow",
            Kind::AdhgCheck => "adhg-check",
            Kind::SuperCheck => "super-check",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub kind: Option<Kind>,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence. Not part of the config hash.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub init: InitConfig,
    /// Spin structure as two signs, e.g. "+-".
    #[serde(default)]
    pub spin: Option<String>,
    #[serde(default)]
    pub invariance: InvarianceConfig,
    #[serde(default)]
    pub hopf: HopfConfig,
    #[serde(default)]
    pub teich: TeichConfig,
    #[serde(default)]
    pub dirac: DiracConfig,
    #[serde(default)]
    pub dh: DhConfig,
    #[serde(default)]
    pub adhg: AdhgConfig,
    #[serde(default, rename = "super")]
    pub superalg: SuperConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_tau")]
    pub tau: [f64; 2],
    #[serde(default)]
    pub lambda: LambdaConfig,
    /// Grid sizes for convergence studies; defaults to `[n]`.
    #[serde(default)]
    pub levels: Option<Vec<usize>>,
}

fn default_n() -> usize {
    32
}

fn default_tau() -> [f64; 2] {
    [0.0, 1.0]
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: default_n(),
            tau: default_tau(),
            lambda: LambdaConfig::default(),
            levels: None,
        }
    }
}

impl GridConfig {
    pub fn tau(&self) -> Complex64 {
        Complex64::new(self.tau[0], self.tau[1])
    }

    pub fn levels(&self) -> Vec<usize> {
        self.levels.clone().unwrap_or_else(|| vec![self.n])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaConfig {
    Constant {
        value: f64,
    },
    Trig {
        c0: f64,
        modes: Vec<TrigMode>,
    },
    /// 1 + seeded random Fourier modes with |k| <= 2 and total amplitude `amplitude` < 1.
    Random {
        amplitude: f64,
        modes: usize,
    },
}

impl Default for LambdaConfig {
    fn default() -> Self {
        LambdaConfig::Constant { value: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    FlatTorus {
        #[serde(default = "default_tau")]
        sigma: [f64; 2],
        #[serde(default)]
        unit_area: bool,
    },
    Sphere {
        #[serde(default = "one")]
        radius: f64,
    },
    HyperbolicPlane,
    HyperbolicCylinder {
        ell: f64,
    },
    WarpedTorus {
        #[serde(default = "default_tau")]
        sigma: [f64; 2],
        amp: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for TargetConfig {
    fn default() -> Self {
        TargetConfig::FlatTorus {
            sigma: default_tau(),
            unit_area: false,
        }
    }
}

impl TargetConfig {
    /// Modulus of the period lattice for torus targets.
    pub fn sigma(&self) -> Option<Complex64> {
        match self {
            TargetConfig::FlatTorus { sigma, .. } | TargetConfig::WarpedTorus { sigma, .. } => {
                Some(Complex64::new(sigma[0], sigma[1]))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    /// Fixed initial time step; overrides `dt_factor`.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Multiple of the CFL-style default step h^2 min(lambda^2) / 8.
    #[serde(default)]
    pub dt_factor: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_max_steps() -> usize {
    FlowParams::default().max_steps
}

fn default_tol() -> f64 {
    FlowParams::default().tol
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: None,
            dt_factor: None,
            max_steps: default_max_steps(),
            tol: default_tol(),
        }
    }
}

impl FlowConfig {
    pub fn params(&self, dom: &ConformalDomain) -> FlowParams {
        FlowParams {
            dt: self
                .dt
                .or_else(|| self.dt_factor.map(|f| f * dom.default_dt())),
            max_steps: self.max_steps,
            tol: self.tol,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Affine map in the identity class of a torus target, z otherwise.
    #[default]
    Identity,
    /// offset + (a + sigma_re b, sigma_im b).
    Affine,
    Constant,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    #[serde(default)]
    pub kind: InitKind,
    #[serde(default)]
    pub sigma: Option<[f64; 2]>,
    #[serde(default)]
    pub offset: [f64; 2],
    /// Amplitude of a seeded random periodic perturbation.
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn default_modes() -> usize {
    3
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            kind: InitKind::default(),
            sigma: None,
            offset: [0.0; 2],
            perturbation: 0.0,
            modes: default_modes(),
            path: None,
        }
    }
}

/// Random conformal rescalings e^{2u} applied to the final map of a flow run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvarianceConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Total amplitude of u.
    #[serde(default = "default_u_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_samples() -> usize {
    10
}

fn default_u_amplitude() -> f64 {
    0.5
}

impl Default for InvarianceConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            amplitude: default_u_amplitude(),
            modes: default_modes(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopfConfig {
    /// Field file to analyse instead of the configured initial map.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Run the heat flow before analysing the map.
    #[serde(default = "yes")]
    pub flow: bool,
    #[serde(default)]
    pub bochner: bool,
    /// Bochner residuals only on the patch a0 <= a <= a1, b0 <= b <= b1.
    #[serde(default)]
    pub patch: Option<[f64; 4]>,
    #[serde(default)]
    pub variation: bool,
}

fn yes() -> bool {
    true
}

impl Default for HopfConfig {
    fn default() -> Self {
        Self {
            input: None,
            flow: true,
            bochner: false,
            patch: None,
            variation: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeichConfig {
    /// Target moduli as "re0:re1:nre,im0:im1:nim".
    #[serde(default = "default_scan")]
    pub grid: String,
    #[serde(default = "yes")]
    pub unit_area: bool,
    #[serde(default = "default_gradient_step")]
    pub gradient_step: f64,
    #[serde(default = "default_hessian_step")]
    pub hessian_step: f64,
}

fn default_scan() -> String {
    "-0.5:0.5:11,0.5:1.5:11".into()
}

fn default_gradient_step() -> f64 {
    1e-3
}

fn default_hessian_step() -> f64 {
    1e-2
}

impl Default for TeichConfig {
    fn default() -> Self {
        Self {
            grid: default_scan(),
            unit_area: true,
            gradient_step: default_gradient_step(),
            hessian_step: default_hessian_step(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracConfig {
    /// Spin structures to analyse; all four when empty and `spin` is unset.
    #[serde(default)]
    pub spins: Vec<String>,
    /// Grid size of the dense eigen-solve.
    #[serde(default = "default_dense_n")]
    pub dense_n: usize,
    /// Low modes |k_a|, |k_b| <= kmax are followed over `grid.levels`.
    #[serde(default = "default_kmax")]
    pub kmax: i64,
}

fn default_dense_n() -> usize {
    12
}

fn default_kmax() -> i64 {
    1
}

impl Default for DiracConfig {
    fn default() -> Self {
        Self {
            spins: vec![],
            dense_n: default_dense_n(),
            kmax: default_kmax(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhConfig {
    /// Amplitude of the seeded random initial spinor.
    #[serde(default = "one")]
    pub psi_amplitude: f64,
    /// Also run the plain heat flow and compare phi bitwise.
    #[serde(default = "yes")]
    pub compare_heat_flow: bool,
}

impl Default for DhConfig {
    fn default() -> Self {
        Self {
            psi_amplitude: 1.0,
            compare_heat_flow: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdhgConfig {
    /// Keep the sample map near the origin; defaults to true for targets without a lattice.
    #[serde(default)]
    pub small: Option<bool>,
    /// Supersymmetry parameter for the diagnostic.
    #[serde(default = "default_susy_q")]
    pub susy_q: [f64; 4],
}

fn default_susy_q() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Default for AdhgConfig {
    fn default() -> Self {
        Self {
            small: None,
            susy_q: default_susy_q(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperConfig {
    /// Number of odd parameters e1..eN.
    #[serde(default = "default_params")]
    pub params: usize,
    #[serde(default)]
    pub expr: Option<String>,
}

fn default_params() -> usize {
    4
}

impl Default for SuperConfig {
    fn default() -> Self {
        Self {
            params: default_params(),
            expr: None,
        }
    }
}

/// Parsed "x0:x1:nx,y0:y1:ny".
#[derive(Clone, Debug, PartialEq)]
pub struct ScanGrid {
    pub re: (f64, f64, usize),
    pub im: (f64, f64, usize),
}

impl ScanGrid {
    pub fn parse(s: &str) -> std::result::Result<Self, String> {
        let axis = |part: &str| -> std::result::Result<(f64, f64, usize), String> {
            let f: Vec<&str> = part.split(':').collect();
            if f.len() != 3 {
                return Err(format!("`{part}` is not lo:hi:count"));
            }
            let lo: f64 = f[0]
                .trim()
                .parse()
                .map_err(|_| format!("bad number `{}`", f[0]))?;
            let hi: f64 = f[1]
                .trim()
                .parse()
                .map_err(|_| format!("bad number `{}`", f[1]))?;
            let k: usize = f[2]
                .trim()
                .parse()
                .map_err(|_| format!("bad count `{}`", f[2]))?;
            if k < 2 || hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
                return Err(format!("`{part}` needs hi > lo and at least 2 points"));
            }
            Ok((lo, hi, k))
        };
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("`{s}` is not re-axis,im-axis"))?;
        let g = Self {
            re: axis(a)?,
            im: axis(b)?,
        };
        if g.im.0.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err("imaginary part must be positive".into());
        }
        Ok(g)
    }

    pub fn points(&self) -> Vec<Complex64> {
        let lin =
            |(lo, hi, k): (f64, f64, usize), i: usize| lo + (hi - lo) * i as f64 / (k - 1) as f64;
        let mut out = Vec::with_capacity(self.re.2 * self.im.2);
        for j in 0..self.im.2 {
            for i in 0..self.re.2 {
                out.push(Complex64::new(lin(self.re, i), lin(self.im, j)));
            }
        }
        out
    }

    pub fn cell(&self) -> [f64; 2] {
        [
            (self.re.1 - self.re.0) / (self.re.2 - 1) as f64,
            (self.im.1 - self.im.0) / (self.im.2 - 1) as f64,
        ]
    }
}

fn check(ok: bool, field: &str, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(RunError::config(format!("{field}: {msg}")))
    }
}

fn check_n(field: &str, n: usize) -> Result<()> {
    check(
        n >= 8 && n.is_multiple_of(2),
        field,
        &format!("{n} is not an even integer >= 8"),
    )
}

fn check_modulus(field: &str, m: [f64; 2]) -> Result<()> {
    check(m.iter().all(|v| v.is_finite()), field, "must be finite")?;
    check(m[1] > 0.0, field, "imaginary part must be positive")
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| RunError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        toml::from_str(&text).map_err(|e| RunError::config(format!("{}: {}", path.display(), e)))
    }

    /// sha256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn spin_structure(&self) -> Result<SpinStructure> {
        match &self.spin {
            None => Ok(SpinStructure::PERIODIC),
            Some(s) => SpinStructure::parse(s).map_err(|e| RunError::config(format!("spin: {e}"))),
        }
    }

    pub fn validate(&self, kind: Kind) -> Result<()> {
        if let Some(k) = self.kind {
            check(
                k == kind,
                "kind",
                &format!("config is for `{k}`, not `{kind}`"),
            )?;
        }
        let g = &self.grid;
        check_n("grid.n", g.n)?;
        check_modulus("grid.tau", g.tau)?;
        if let Some(levels) = &g.levels {
            check(!levels.is_empty(), "grid.levels", "must not be empty")?;
            for n in levels {
                check_n("grid.levels", *n)?;
            }
        }
        match &g.lambda {
            LambdaConfig::Constant { value } => check(
                *value > 0.0 && value.is_finite(),
                "grid.lambda.value",
                "must be positive",
            )?,
            LambdaConfig::Trig { c0, modes } => {
                let amp: f64 = modes.iter().map(|m| m.cos.abs() + m.sin.abs()).sum();
                check(
                    c0.is_finite() && *c0 - amp > 0.0,
                    "grid.lambda",
                    "c0 must exceed the total mode amplitude",
                )?
            }
            LambdaConfig::Random { amplitude, .. } => check(
                (0.0..1.0).contains(amplitude),
                "grid.lambda.amplitude",
                "must lie in [0, 1)",
            )?,
        }
        match &self.target {
            TargetConfig::FlatTorus { sigma, .. } => check_modulus("target.sigma", *sigma)?,
            TargetConfig::WarpedTorus { sigma, amp } => {
                check_modulus("target.sigma", *sigma)?;
                check(amp.is_finite(), "target.amp", "must be finite")?
            }
            TargetConfig::Sphere { radius } => {
                check(*radius > 0.0, "target.radius", "must be positive")?
            }
            TargetConfig::HyperbolicCylinder { ell } => {
                check(*ell > 0.0, "target.ell", "must be positive")?
            }
            TargetConfig::HyperbolicPlane => {}
        }
        let f = &self.flow;
        if let Some(dt) = f.dt {
            check(dt > 0.0 && dt.is_finite(), "flow.dt", "must be positive")?;
        }
        if let Some(k) = f.dt_factor {
            check(
                k > 0.0 && k.is_finite(),
                "flow.dt_factor",
                "must be positive",
            )?;
        }
        check(
            f.tol > 0.0 && f.tol.is_finite(),
            "flow.tol",
            "must be positive",
        )?;
        check(
            self.invariance.amplitude.is_finite() && self.invariance.amplitude >= 0.0,
            "invariance.amplitude",
            "must be non-negative",
        )?;
        check(
            self.init.perturbation.is_finite(),
            "init.perturbation",
            "must be finite",
        )?;
        if let Some(s) = self.init.sigma {
            check_modulus("init.sigma", s)?;
        }
        if self.init.kind == InitKind::File {
            check(
                self.init.path.is_some(),
                "init.path",
                "required when init.kind = \"file\"",
            )?;
        }
        self.spin_structure()?;
        if kind == Kind::Hopf {
            if let Some(p) = self.hopf.patch {
                check(
                    p[0] < p[1] && p[2] < p[3],
                    "hopf.patch",
                    "needs a0 < a1 and b0 < b1",
                )?;
            }
        }
        if kind == Kind::TeichScan {
            ScanGrid::parse(&self.teich.grid)
                .map_err(|e| RunError::config(format!("teich.grid: {e}")))?;
            check(
                self.teich.gradient_step > 0.0,
                "teich.gradient_step",
                "must be positive",
            )?;
            check(
                self.teich.hessian_step > 0.0,
                "teich.hessian_step",
                "must be positive",
            )?;
        }
        if kind == Kind::DiracSpectrum {
            check_n("dirac.dense_n", self.dirac.dense_n)?;
            check(self.dirac.kmax >= 0, "dirac.kmax", "must be non-negative")?;
            for s in &self.dirac.spins {
                SpinStructure::parse(s)
                    .map_err(|e| RunError::config(format!("dirac.spins: {e}")))?;
            }
        }
        if kind == Kind::SuperCheck {
            check(
                (1..=8).contains(&self.superalg.params),
                "super.params",
                "must lie in 1..=8",
            )?;
        }
        Ok(())
    }

    fn lambda_spec(&self) -> LambdaSpec {
        match &self.grid.lambda {
            LambdaConfig::Constant { value } => LambdaSpec::Constant(*value),
            LambdaConfig::Trig { c0, modes } => LambdaSpec::Trig {
                c0: *c0,
                modes: modes.clone(),
            },
            LambdaConfig::Random { amplitude, modes } => LambdaSpec::Trig {
                c0: 1.0,
                modes: random_modes(&mut self.rng(0x1a), *modes, *amplitude),
            },
        }
    }

    pub fn domain(&self, n: usize) -> Result<ConformalDomain> {
        Ok(ConformalDomain::new(
            n,
            self.grid.tau(),
            self.lambda_spec(),
        )?)
    }

    pub fn chart(&self) -> Result<Box<dyn TargetChart>> {
        Ok(match &self.target {
            TargetConfig::FlatTorus { sigma, unit_area } => {
                if *unit_area {
                    Box::new(FlatTorus::unit_area(sigma[0], sigma[1])?)
                } else {
                    Box::new(FlatTorus::from_modulus(sigma[0], sigma[1])?)
                }
            }
            TargetConfig::Sphere { radius } => Box::new(RoundSphere::new(*radius)?),
            TargetConfig::HyperbolicPlane => Box::new(HyperbolicPlane::new()),
            TargetConfig::HyperbolicCylinder { ell } => Box::new(HyperbolicCylinder::new(*ell)?),
            TargetConfig::WarpedTorus { sigma, amp } => {
                Box::new(WarpedTorus::new(sigma[0], sigma[1], *amp)?)
            }
        })
    }

    /// Independent random stream for one purpose, derived from the run seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }
}

/// `count` Fourier modes with |k_a|, |k_b| <= 2, scaled to total amplitude `amplitude`.
pub fn random_modes(rng: &mut ChaCha8Rng, count: usize, amplitude: f64) -> Vec<TrigMode> {
    let mut modes: Vec<TrigMode> = (0..count)
        .map(|_| TrigMode {
            ka: rng.gen_range(-2..=2),
            kb: rng.gen_range(-2..=2),
            cos: rng.gen_range(-1.0..1.0),
            sin: rng.gen_range(-1.0..1.0),
        })
        .collect();
    let total: f64 = modes.iter().map(|m| m.cos.abs() + m.sin.abs()).sum();
    if total > 0.0 {
        for m in &mut modes {
            m.cos *= amplitude / total;
            m.sin *= amplitude / total;
        }
    }
    modes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_toml("[grid]\nn = 16\nsize = 3\n").unwrap_err();
        assert!(e.to_string().contains("size"), "{e}");
    }

    #[test]
    fn nonpositive_modulus_names_the_field() {
        let c = RunConfig::from_toml("[grid]\ntau = [0.0, -1.0]\n").unwrap();
        let e = c.validate(Kind::Flow).unwrap_err();
        assert!(e.to_string().starts_with("grid.tau:"), "{e}");
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn scan_grid_parses() {
        let g = ScanGrid::parse("-0.5:0.5:11,0.5:1.5:5").unwrap();
        assert_eq!(g.points().len(), 55);
        assert!((g.cell()[1] - 0.25).abs() < 1e-15);
        assert!(ScanGrid::parse("0:1:3,-1:1:3").is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let mut a = RunConfig::default();
        let h = a.hash();
        a.output = Some("elsewhere".into());
        assert_eq!(a.hash(), h);
        a.seed = 7;
        assert_ne!(a.hash(), h);
    }
}
