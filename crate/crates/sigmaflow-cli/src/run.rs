//! The experiment runners behind each subcommand.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use sigmaflow_core::dirac::{
    coupled_flow, dh_el_residual, dirac_spectrum, low_modes, oracle_spectrum, DhState,
    SpinStructure, SpinorField, KERNEL_THRESHOLD,
};
use sigmaflow_core::gravitino::{
    adhg_el_residual, current_divergence, current_identities, rescaled_constant_solution,
    sample_conformal_factor, sample_state, sample_weyl, symmetry_defects, DefectReport,
    IdentityCheck,
};
use sigmaflow_core::grid::{ConformalDomain, LambdaSpec};
use sigmaflow_core::harmonic::{
    energy, heat_flow, sup_norm, tension, FlowReport, MapField, ENERGY_SLACK,
};
use sigmaflow_core::io::{read_field_csv, write_field_csv};
use sigmaflow_core::quadratic::{bochner_residuals, holomorphy_residual, hopf_differential};
use sigmaflow_core::target::{FlatTorus, TargetChart};
use sigmaflow_core::teichmuller::{
    affine_energy, affine_energy_unit_area, affine_seed, argmin, domain_variation_derivative,
    energy_gradient_target, energy_hessian_target, harmonic_energy_profile, moduli_direction_qd,
    wp_pairing_constant, HessianReport, ProfilePoint,
};
use sigmaflow_super::{expr, suite, superfn};

use crate::config::{random_modes, InitKind, Kind, RunConfig, ScanGrid, TargetConfig};
use crate::error::{Result, RunError};

pub const TOOL: &str = "sigmaflow";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A file written next to the report.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

/// Result of one run: the report JSON, its artifacts, and whether every flow converged and
/// every check passed.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub kind: Kind,
    pub report: String,
    pub artifacts: Vec<Artifact>,
    pub ok: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.ok {
            0
        } else {
            2
        }
    }

    /// Write `report.json` and the artifacts into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
        let put = |name: &str, text: &str| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| RunError::io(path, e))
        };
        put("report.json", &self.report)?;
        for a in &self.artifacts {
            put(&a.name, &a.contents)?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    kind: Kind,
    config_hash: String,
    config: &'a RunConfig,
    result: &'a T,
}

fn finish<T: Serialize>(
    kind: Kind,
    cfg: &RunConfig,
    result: &T,
    artifacts: Vec<Artifact>,
    ok: bool,
) -> Outcome {
    let report = Report {
        tool: TOOL,
        version: VERSION,
        kind,
        config_hash: cfg.hash(),
        config: cfg,
        result,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
    text.push('\n');
    Outcome {
        kind,
        report: text,
        artifacts,
        ok,
    }
}

/// Validate the config and run the experiment for `kind`.
pub fn execute(kind: Kind, cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate(kind)?;
    Ok(match kind {
        Kind::Flow => {
            let (r, a) = flow(cfg)?;
            let ok = r.converged;
            finish(kind, cfg, &r, a, ok)
        }
        Kind::Hopf => {
            let (r, a) = hopf(cfg)?;
            let ok = r.levels.iter().all(|l| l.converged != Some(false));
            finish(kind, cfg, &r, a, ok)
        }
        Kind::TeichScan => {
            let (r, a) = teich_scan(cfg)?;
            let ok = r.all_converged;
            finish(kind, cfg, &r, a, ok)
        }
        Kind::DiracSpectrum => {
            let (r, a) = dirac(cfg)?;
            finish(kind, cfg, &r, a, true)
        }
        Kind::DhFlow => {
            let (r, a) = dh_flow(cfg)?;
            let ok = r.converged && r.phi_matches_heat_flow != Some(false);
            finish(kind, cfg, &r, a, ok)
        }
        Kind::AdhgCheck => {
            let r = adhg(cfg)?;
            finish(kind, cfg, &r, vec![], true)
        }
        Kind::SuperCheck => {
            let r = super_check(cfg)?;
            let ok = r.checks.iter().all(|c| c.passed);
            finish(kind, cfg, &r, vec![], ok)
        }
    })
}

/// Successive quotients coarse / fine.
pub fn ratios(v: &[f64]) -> Vec<f64> {
    v.windows(2).map(|w| w[0] / w[1]).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn trig_sum(dom: &ConformalDomain, modes: &[sigmaflow_core::grid::TrigMode]) -> Vec<f64> {
    (0..dom.len())
        .map(|p| {
            let (a, b) = dom.node_ab(p);
            modes
                .iter()
                .map(|m| {
                    let th = std::f64::consts::TAU * (m.ka as f64 * a + m.kb as f64 * b);
                    m.cos * th.cos() + m.sin * th.sin()
                })
                .sum()
        })
        .collect()
}

fn read_field(path: &Path) -> Result<sigmaflow_core::io::FieldFile> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    read_field_csv(&text).map_err(|e| RunError::config(format!("{}: {e}", path.display())))
}

/// Initial map on `dom` as described by the `init` section.
pub fn initial_map(
    cfg: &RunConfig,
    dom: &ConformalDomain,
    chart: &dyn TargetChart,
) -> Result<MapField> {
    let init = &cfg.init;
    let dim = chart.dim();
    let off = init.offset;
    let mut phi = match init.kind {
        InitKind::File => {
            let path = init.path.as_deref().expect("validated");
            let f = read_field(path)?;
            if f.n != dom.n() || f.field.dim != dim {
                return Err(RunError::config(format!(
                    "init.path: field has n = {} and dimension {}, run needs n = {} and dimension {}",
                    f.n,
                    f.field.dim,
                    dom.n(),
                    dim
                )));
            }
            f.field
        }
        InitKind::Constant => MapField::from_fn(dom, dim, |_, _| {
            let mut v = vec![0.0; dim];
            v[..2.min(dim)].copy_from_slice(&off[..2.min(dim)]);
            v
        }),
        InitKind::Identity | InitKind::Affine => {
            let sigma = init
                .sigma
                .map(|s| Complex64::new(s[0], s[1]))
                .or(if init.kind == InitKind::Identity {
                    cfg.target.sigma()
                } else {
                    None
                })
                .unwrap_or(dom.tau());
            if dim != 2 {
                return Err(RunError::config(
                    "init.kind: affine maps need a two-dimensional target",
                ));
            }
            let mut phi = affine_seed(dom, sigma);
            for p in 0..dom.len() {
                phi.values[2 * p] += off[0];
                phi.values[2 * p + 1] += off[1];
            }
            phi
        }
    };
    if init.perturbation != 0.0 {
        let mut rng = cfg.rng(0x2b);
        for i in 0..dim {
            let modes = random_modes(&mut rng, init.modes, init.perturbation);
            let bump = trig_sum(dom, &modes);
            for (p, v) in bump.iter().enumerate() {
                phi.values[p * dim + i] += v;
            }
        }
    }
    Ok(phi)
}

fn flow_params(cfg: &RunConfig, dom: &ConformalDomain) -> sigmaflow_core::harmonic::FlowParams {
    cfg.flow.params(dom)
}

fn energy_csv(rep: &FlowReport) -> String {
    let mut s = String::from("step,energy\n");
    for (k, e) in rep.energy_trace.iter().enumerate() {
        let _ = writeln!(s, "{k},{e:?}");
    }
    s
}

fn closed_form(cfg: &RunConfig, tau: Complex64) -> Option<f64> {
    match (&cfg.target, cfg.init.kind) {
        (TargetConfig::FlatTorus { sigma, unit_area }, InitKind::Identity)
            if cfg.init.sigma.is_none() =>
        {
            let s = Complex64::new(sigma[0], sigma[1]);
            Some(if *unit_area {
                affine_energy_unit_area(tau, s)
            } else {
                affine_energy(tau, s)
            })
        }
        _ => None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformalCheck {
    pub samples: usize,
    /// max |E(phi; e^{2u} lambda^2) - E(phi; lambda^2)| / E over the samples.
    pub max_relative: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowResult {
    pub n: usize,
    pub target: String,
    pub steps: usize,
    pub rejections: usize,
    pub dt_initial: f64,
    pub dt_final: f64,
    pub converged: bool,
    /// sup |tau(phi)|_g at the final map.
    pub tension_sup: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Energy of the affine harmonic map in the identity class, for flat torus targets.
    pub closed_form: Option<f64>,
    pub energy_relative_error: Option<f64>,
    /// The accepted energies never increase by more than the step acceptance slack.
    pub monotone: bool,
    pub conformal_invariance: ConformalCheck,
}

pub fn flow(cfg: &RunConfig) -> Result<(FlowResult, Vec<Artifact>)> {
    let dom = cfg.domain(cfg.grid.n)?;
    let chart = cfg.chart()?;
    let phi0 = initial_map(cfg, &dom, chart.as_ref())?;
    let (phi, rep) = heat_flow(&dom, chart.as_ref(), &phi0, &flow_params(cfg, &dom))?;
    let e = energy(&dom, chart.as_ref(), &phi);
    let mut rng = cfg.rng(0x4d);
    let inv = &cfg.invariance;
    let mut worst = 0.0f64;
    for _ in 0..inv.samples {
        let amp = inv.amplitude * rng.gen_range(0.5..1.0);
        let u = trig_sum(&dom, &random_modes(&mut rng, inv.modes, amp));
        let lam: Vec<f64> = dom
            .lambda_sq()
            .iter()
            .zip(&u)
            .map(|(l, u)| l * (2.0 * u).exp())
            .collect();
        let scaled = dom.with_lambda_sq(lam)?;
        worst = worst.max(rel(energy(&scaled, chart.as_ref(), &phi), e));
    }
    let cf = closed_form(cfg, dom.tau());
    let result = FlowResult {
        n: dom.n(),
        target: chart.name(),
        steps: rep.steps,
        rejections: rep.rejections,
        dt_initial: rep.dt_initial,
        dt_final: rep.dt_final,
        converged: rep.converged,
        tension_sup: sup_norm(chart.as_ref(), &phi, &tension(&dom, chart.as_ref(), &phi)),
        energy_initial: rep.energy_trace[0],
        energy_final: e,
        closed_form: cf,
        energy_relative_error: cf.map(|c| rel(e, c)),
        monotone: rep
            .energy_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + ENERGY_SLACK),
        conformal_invariance: ConformalCheck {
            samples: inv.samples,
            max_relative: worst,
        },
    };
    let artifacts = vec![
        Artifact {
            name: "field.csv".into(),
            contents: write_field_csv(dom.n(), dom.tau(), &phi),
        },
        Artifact {
            name: "energy.csv".into(),
            contents: energy_csv(&rep),
        },
    ];
    Ok((result, artifacts))
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfLevel {
    pub n: usize,
    /// None when the map was analysed without running the flow.
    pub converged: Option<bool>,
    pub steps: Option<usize>,
    pub tension_sup: f64,
    /// sup |d_zbar T|.
    pub holomorphy_residual: f64,
    /// sup |T|.
    pub hopf_sup: f64,
    pub bochner_h: Option<f64>,
    pub bochner_l: Option<f64>,
    pub beltrami_form: Option<f64>,
    pub pairing_form: Option<f64>,
    pub variation_warning: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfResult {
    pub target: String,
    pub levels: Vec<HopfLevel>,
    pub holomorphy_ratios: Vec<f64>,
    pub bochner_h_ratios: Vec<f64>,
}

/// Periodic vector field mu, the generator of a diffeomorphism of the domain.
pub fn variation_field(dom: &ConformalDomain) -> Vec<Complex64> {
    (0..dom.len())
        .map(|p| {
            let (a, b) = dom.node_ab(p);
            let th = std::f64::consts::TAU * (a + b);
            Complex64::new(
                th.sin() + 0.2 * (std::f64::consts::TAU * b).cos(),
                0.3 * th.cos(),
            )
        })
        .collect()
}

pub fn hopf(cfg: &RunConfig) -> Result<(HopfResult, Vec<Artifact>)> {
    let chart = cfg.chart()?;
    let h = &cfg.hopf;
    let input = match &h.input {
        Some(path) => Some(read_field(path)?),
        None => None,
    };
    let levels = match &input {
        Some(f) => vec![f.n],
        None => cfg.grid.levels(),
    };
    let mut out = vec![];
    for n in levels {
        let dom = match &input {
            Some(f) => ConformalDomain::new(f.n, f.tau, cfg.domain(f.n)?.spec().clone())?,
            None => cfg.domain(n)?,
        };
        let phi0 = match &input {
            Some(f) => f.field.clone(),
            None => initial_map(cfg, &dom, chart.as_ref())?,
        };
        let (phi, rep) = if h.flow {
            let (phi, rep) = heat_flow(&dom, chart.as_ref(), &phi0, &flow_params(cfg, &dom))?;
            (phi, Some(rep))
        } else {
            (phi0, None)
        };
        let t = hopf_differential(&dom, chart.as_ref(), &phi);
        let mut level = HopfLevel {
            n: dom.n(),
            converged: rep.as_ref().map(|r| r.converged),
            steps: rep.as_ref().map(|r| r.steps),
            tension_sup: sup_norm(chart.as_ref(), &phi, &tension(&dom, chart.as_ref(), &phi)),
            holomorphy_residual: holomorphy_residual(&dom, &t),
            hopf_sup: t.iter().map(|v| v.norm()).fold(0.0, f64::max),
            bochner_h: None,
            bochner_l: None,
            beltrami_form: None,
            pairing_form: None,
            variation_warning: None,
        };
        if h.bochner {
            let k1 = dom.gauss_curvature_discrete();
            let mask: Option<Vec<bool>> = h.patch.map(|[a0, a1, b0, b1]| {
                (0..dom.len())
                    .map(|p| {
                        let (a, b) = dom.node_ab(p);
                        !(a >= a0 && a <= a1 && b >= b0 && b <= b1)
                    })
                    .collect()
            });
            let b = bochner_residuals(&dom, chart.as_ref(), &phi, &k1, mask.as_deref())?;
            level.bochner_h = b.r_h;
            level.bochner_l = b.r_l;
        }
        if h.variation {
            let v =
                domain_variation_derivative(&dom, chart.as_ref(), &phi, &variation_field(&dom))?;
            level.beltrami_form = Some(v.beltrami_form);
            level.pairing_form = Some(v.pairing_form);
            level.variation_warning = Some(v.warning);
        }
        out.push(level);
    }
    let hol: Vec<f64> = out.iter().map(|l| l.holomorphy_residual).collect();
    let bh: Vec<f64> = out.iter().filter_map(|l| l.bochner_h).collect();
    let mut csv = String::from(
        "n,converged,tension_sup,holomorphy_residual,hopf_sup,bochner_h,bochner_l,beltrami_form,pairing_form\n",
    );
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for l in &out {
        let _ = writeln!(
            csv,
            "{},{},{:?},{:?},{:?},{},{},{},{}",
            l.n,
            l.converged.map(|c| c.to_string()).unwrap_or_default(),
            l.tension_sup,
            l.holomorphy_residual,
            l.hopf_sup,
            opt(l.bochner_h),
            opt(l.bochner_l),
            opt(l.beltrami_form),
            opt(l.pairing_form)
        );
    }
    let result = HopfResult {
        target: chart.name(),
        holomorphy_ratios: ratios(&hol),
        bochner_h_ratios: if bh.len() == out.len() {
            ratios(&bh)
        } else {
            vec![]
        },
        levels: out,
    };
    Ok((
        result,
        vec![Artifact {
            name: "hopf.csv".into(),
            contents: csv,
        }],
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct TeichResult {
    pub n: usize,
    pub tau: [f64; 2],
    pub unit_area: bool,
    pub points: usize,
    pub all_converged: bool,
    pub argmin: [f64; 2],
    pub argmin_energy: f64,
    /// |argmin - tau| per axis, in scan cells.
    pub argmin_offset_cells: [f64; 2],
    /// Gradient of the unit-area energy in (Re sigma, Im sigma) at sigma = tau.
    pub gradient: [f64; 2],
    pub gradient_norm: f64,
    pub hessian: HessianReport,
    /// Weil-Petersson pairing of the quadratic differentials for d sigma = 1 and d sigma = i.
    pub wp: [[f64; 2]; 2],
    /// max |H - WP| / max |WP|.
    pub hessian_wp_relative: f64,
}

pub fn teich_scan(cfg: &RunConfig) -> Result<(TeichResult, Vec<Artifact>)> {
    let t = &cfg.teich;
    let scan =
        ScanGrid::parse(&t.grid).map_err(|e| RunError::config(format!("teich.grid: {e}")))?;
    let dom = cfg.domain(cfg.grid.n)?;
    let params = flow_params(cfg, &dom);
    let tau = dom.tau();
    let profile = harmonic_energy_profile(&dom, &scan.points(), &params, t.unit_area)?;
    let k = argmin(&profile).expect("scan has points");
    let best = &profile[k];
    let cell = scan.cell();
    let gradient = energy_gradient_target(&dom, tau, t.gradient_step, &params)?;
    let hessian = energy_hessian_target(&dom, tau, t.hessian_step, &params)?;
    let dirs = [Complex64::new(1.0, 0.0), Complex64::i()];
    let mut wp = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            wp[a][b] = wp_pairing_constant(
                &dom,
                moduli_direction_qd(tau, dirs[a]),
                moduli_direction_qd(tau, dirs[b]),
            );
        }
    }
    let scale = wp.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = (0..4).fold(0.0f64, |m, k| {
        m.max((hessian.matrix[k / 2][k % 2] - wp[k / 2][k % 2]).abs())
    });
    let result = TeichResult {
        n: dom.n(),
        tau: [tau.re, tau.im],
        unit_area: t.unit_area,
        points: profile.len(),
        all_converged: profile.iter().all(|p| p.converged),
        argmin: best.sigma,
        argmin_energy: best.energy,
        argmin_offset_cells: [
            (best.sigma[0] - tau.re).abs() / cell[0],
            (best.sigma[1] - tau.im).abs() / cell[1],
        ],
        gradient,
        gradient_norm: gradient[0].hypot(gradient[1]),
        hessian,
        wp,
        hessian_wp_relative: diff / scale,
    };
    Ok((result, vec![landscape_csv(&profile)]))
}

fn landscape_csv(profile: &[ProfilePoint]) -> Artifact {
    let mut s = String::from("sigma_re,sigma_im,energy,closed_form,converged,steps,residual\n");
    for p in profile {
        let _ = writeln!(
            s,
            "{:?},{:?},{:?},{:?},{},{},{:?}",
            p.sigma[0], p.sigma[1], p.energy, p.closed_form, p.converged, p.steps, p.residual
        );
    }
    Artifact {
        name: "landscape.csv".into(),
        contents: s,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LowModeLevel {
    pub n: usize,
    /// max |mu_k - 2 pi |k + delta|| over the followed modes.
    pub max_error: f64,
    /// max sup |D v - mu v| / sup |v|; zero up to round-off when v is an exact eigenspinor.
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpinSpectrum {
    pub spin: String,
    pub dense_n: usize,
    pub eigenvalues: usize,
    pub kernel_dim: usize,
    /// max |ev_k + ev_{N-1-k}| of the sorted spectrum.
    pub symmetry_defect: f64,
    /// max |ev - oracle| against the lattice symbol; only for lambda = 1.
    pub oracle_error: Option<f64>,
    pub low_modes: Vec<LowModeLevel>,
    pub low_mode_ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiracResult {
    pub tau: [f64; 2],
    pub spins: Vec<SpinSpectrum>,
}

pub fn dirac(cfg: &RunConfig) -> Result<(DiracResult, Vec<Artifact>)> {
    let d = &cfg.dirac;
    let spins: Vec<SpinStructure> = if !d.spins.is_empty() {
        d.spins
            .iter()
            .map(|s| SpinStructure::parse(s))
            .collect::<std::result::Result<_, _>>()?
    } else if cfg.spin.is_some() {
        vec![cfg.spin_structure()?]
    } else {
        SpinStructure::all().to_vec()
    };
    let dense = cfg.domain(d.dense_n)?;
    let unit = matches!(dense.spec(), LambdaSpec::Constant(c) if *c == 1.0);
    let mut csv = String::from("spin,index,eigenvalue,oracle\n");
    let mut out = vec![];
    for spin in spins {
        let ev = dirac_spectrum(&dense, spin);
        let oracle = oracle_spectrum(dense.n(), dense.tau(), spin);
        let len = ev.len();
        let symmetry_defect = (0..len).fold(0.0f64, |m, k| m.max((ev[k] + ev[len - 1 - k]).abs()));
        for (k, v) in ev.iter().enumerate() {
            let o = if unit {
                format!("{:?}", oracle[k])
            } else {
                String::new()
            };
            let _ = writeln!(csv, "{},{k},{v:?},{o}", spin.label());
        }
        let mut levels = vec![];
        for n in cfg.grid.levels() {
            let dom = cfg.domain(n)?;
            let modes = low_modes(&dom, spin, d.kmax);
            levels.push(LowModeLevel {
                n,
                max_error: modes
                    .iter()
                    .fold(0.0f64, |m, l| m.max((l.eigenvalue - l.continuum).abs())),
                max_residual: modes.iter().fold(0.0f64, |m, l| m.max(l.residual)),
            });
        }
        let errs: Vec<f64> = levels.iter().map(|l| l.max_error).collect();
        out.push(SpinSpectrum {
            spin: spin.label(),
            dense_n: dense.n(),
            eigenvalues: len,
            kernel_dim: ev.iter().filter(|v| v.abs() < KERNEL_THRESHOLD).count(),
            symmetry_defect,
            oracle_error: unit.then(|| {
                ev.iter()
                    .zip(&oracle)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            }),
            low_mode_ratios: ratios(&errs),
            low_modes: levels,
        });
    }
    let tau = dense.tau();
    Ok((
        DiracResult {
            tau: [tau.re, tau.im],
            spins: out,
        },
        vec![Artifact {
            name: "spectrum.csv".into(),
            contents: csv,
        }],
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct DhResult {
    pub n: usize,
    pub spin: String,
    pub steps: usize,
    pub rejections: usize,
    pub converged: bool,
    pub kernel_dim_initial: usize,
    pub kernel_dim_final: usize,
    pub kernel_trivial: bool,
    pub psi_norm: f64,
    /// sup |tau - R/2|_g at the final state.
    pub r_phi: f64,
    /// sup |D psi| at the final state.
    pub r_psi: f64,
    /// Whether phi agrees bit for bit with the plain heat flow from the same start.
    pub phi_matches_heat_flow: Option<bool>,
    pub max_phi_difference: Option<f64>,
}

pub fn dh_flow(cfg: &RunConfig) -> Result<(DhResult, Vec<Artifact>)> {
    let dom = cfg.domain(cfg.grid.n)?;
    let chart = cfg.chart()?;
    let spin = cfg.spin_structure()?;
    let phi0 = initial_map(cfg, &dom, chart.as_ref())?;
    let mut psi = SpinorField::zeros(dom.len(), phi0.dim, spin);
    let mut rng = cfg.rng(0x3c);
    let amp = cfg.dh.psi_amplitude;
    psi.values
        .iter_mut()
        .for_each(|v| *v = amp * rng.gen_range(-1.0..1.0));
    let params = flow_params(cfg, &dom);
    let state0 = DhState {
        phi: phi0.clone(),
        psi,
    };
    let (state, rep) = coupled_flow(&dom, chart.as_ref(), &state0, &params)?;
    let (r_phi, r_psi) = dh_el_residual(&dom, chart.as_ref(), &state.phi, &state.psi);
    let (same, diff) = if cfg.dh.compare_heat_flow {
        let (phi, _) = heat_flow(&dom, chart.as_ref(), &phi0, &params)?;
        let same = phi.values.len() == state.phi.values.len()
            && phi
                .values
                .iter()
                .zip(&state.phi.values)
                .all(|(a, b)| a.to_bits() == b.to_bits());
        let diff = phi
            .values
            .iter()
            .zip(&state.phi.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        (Some(same), Some(diff))
    } else {
        (None, None)
    };
    let result = DhResult {
        n: dom.n(),
        spin: spin.label(),
        steps: rep.flow.steps,
        rejections: rep.flow.rejections,
        converged: rep.flow.converged,
        kernel_dim_initial: rep.kernel_dim_initial,
        kernel_dim_final: rep.kernel_dim_final,
        kernel_trivial: rep.kernel_trivial,
        psi_norm: rep.psi_norm,
        r_phi,
        r_psi,
        phi_matches_heat_flow: same,
        max_phi_difference: diff,
    };
    let artifacts = vec![
        Artifact {
            name: "field.csv".into(),
            contents: write_field_csv(dom.n(), dom.tau(), &state.phi),
        },
        Artifact {
            name: "energy.csv".into(),
            contents: energy_csv(&rep.flow),
        },
    ];
    Ok((result, artifacts))
}

#[derive(Clone, Debug, Serialize)]
pub struct AdhgLevel {
    pub n: usize,
    /// Defects for the smooth sample state on the configured domain and target.
    pub defects: DefectReport,
    pub identities: Vec<IdentityCheck>,
    /// sup of the current divergence on the rescaled on-shell constant solution.
    pub on_shell_divergence: f64,
    pub on_shell_r_phi: f64,
    pub on_shell_r_psi: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdhgResult {
    pub target: String,
    pub levels: Vec<AdhgLevel>,
    pub rescaled_conformal_ratios: Vec<f64>,
    pub on_shell_r_psi_ratios: Vec<f64>,
}

pub fn adhg(cfg: &RunConfig) -> Result<AdhgResult> {
    let chart = cfg.chart()?;
    let small = cfg.adhg.small.unwrap_or(cfg.target.sigma().is_none());
    let flat = FlatTorus::from_modulus(0.0, 1.0)?;
    let mut levels = vec![];
    for n in cfg.grid.levels() {
        let dom = cfg.domain(n)?;
        let s = sample_state(&dom, small);
        let defects = symmetry_defects(
            &dom,
            chart.as_ref(),
            &s,
            &sample_weyl(&dom),
            &sample_conformal_factor(&dom),
            cfg.adhg.susy_q,
        )?;
        let identities = current_identities(&dom, chart.as_ref(), &s)?;
        let (d0, s0) = rescaled_constant_solution(n)?;
        let div = current_divergence(&d0, &flat, &s0)?
            .iter()
            .fold(0.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs()));
        let el = adhg_el_residual(&d0, &flat, &s0)?;
        levels.push(AdhgLevel {
            n,
            defects,
            identities,
            on_shell_divergence: div,
            on_shell_r_phi: el.r_phi,
            on_shell_r_psi: el.r_psi,
        });
    }
    let rc: Vec<f64> = levels
        .iter()
        .map(|l| l.defects.rescaled_conformal)
        .collect();
    let rp: Vec<f64> = levels.iter().map(|l| l.on_shell_r_psi).collect();
    Ok(AdhgResult {
        target: chart.name(),
        rescaled_conformal_ratios: ratios(&rc),
        on_shell_r_psi_ratios: ratios(&rp),
        levels,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuperResult {
    pub params: usize,
    pub expression: Option<String>,
    pub checks: Vec<CheckResult>,
}

pub fn super_check(cfg: &RunConfig) -> Result<SuperResult> {
    let params = cfg.superalg.params;
    let mut checks = suite::identity_suite(params);
    let mut shown = None;
    if let Some(text) = &cfg.superalg.expr {
        let f =
            expr::parse(text, params).map_err(|e| RunError::config(format!("super.expr: {e}")))?;
        shown = Some(superfn::display(&f));
        checks.extend(suite::expression_checks(&f));
    }
    Ok(SuperResult {
        params,
        expression: shown,
        checks: checks
            .into_iter()
            .map(|c| CheckResult {
                name: c.name.to_string(),
                passed: c.passed,
                detail: c.detail,
            })
            .collect(),
    })
}
