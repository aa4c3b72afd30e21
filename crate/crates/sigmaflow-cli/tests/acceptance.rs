//! Acceptance suite: runs every checked-in experiment config and prints one PASS/FAIL line per
//! criterion. Exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde_json::Value;
use sigmaflow_cli::{execute, Kind, Outcome, RunConfig};

/// O(h^2) on a grid doubling.
const SECOND_ORDER: f64 = 3.5;

struct Runs {
    done: BTreeMap<&'static str, (Kind, Outcome)>,
}

impl Runs {
    fn get(&mut self, name: &'static str) -> Result<Value, String> {
        if !self.done.contains_key(name) {
            let (kind, outcome) = run_config(name)?;
            self.done.insert(name, (kind, outcome));
        }
        let report = &self.done[name].1.report;
        let v: Value = serde_json::from_str(report).map_err(|e| e.to_string())?;
        Ok(v["result"].clone())
    }
}

fn run_config(name: &str) -> Result<(Kind, Outcome), String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(format!("{name}.toml"));
    let cfg = RunConfig::load(&path).map_err(|e| e.to_string())?;
    let kind = cfg
        .kind
        .ok_or_else(|| format!("{name}: config has no kind"))?;
    let outcome = execute(kind, &cfg).map_err(|e| format!("{name}: {e}"))?;
    Ok((kind, outcome))
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn nums(v: &Value) -> Vec<f64> {
    v.as_array()
        .map(|a| a.iter().map(num).collect())
        .unwrap_or_default()
}

fn second_order(r: &[f64]) -> bool {
    !r.is_empty() && r.iter().all(|x| *x >= SECOND_ORDER)
}

fn fmt(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", s.join(", "))
}

type Check = Result<(bool, String), String>;
type Criterion = (&'static str, fn(&mut Runs) -> Check);

fn conformal_invariance(runs: &mut Runs) -> Check {
    let r = runs.get("conformal_invariance")?;
    let c = &r["conformal_invariance"];
    let worst = num(&c["max_relative"]);
    Ok((
        c["samples"] == 10 && worst <= 1e-13,
        format!("{} samples, max relative change {worst:.2e}", c["samples"]),
    ))
}

fn harmonic_oracle(runs: &mut Runs) -> Check {
    // closed-form affine energies (|sigma - conj tau|^2 + |sigma - tau|^2) / (4 Im tau), tau = i
    let mut ok = true;
    let mut detail = vec![];
    for (name, frozen) in [("flow_square", 1.0), ("flow_tall", 2.5)] {
        let r = runs.get(name)?;
        let t = num(&r["tension_sup"]);
        let e = num(&r["energy_final"]);
        let err = (e - frozen).abs() / frozen;
        ok &= r["converged"] == true
            && t <= 1e-6
            && err <= 1e-6
            && (num(&r["closed_form"]) - frozen).abs() < 1e-14;
        detail.push(format!(
            "{name}: sup|tau| {t:.2e}, E {e:.9} vs {frozen} (rel {err:.1e})"
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn hopf_holomorphicity(runs: &mut Runs) -> Check {
    let r = runs.get("hopf_convergence")?;
    let levels = r["levels"].as_array().cloned().unwrap_or_default();
    let converged = levels.len() == 3 && levels.iter().all(|l| l["converged"] == true);
    let ratios = nums(&r["holomorphy_ratios"]);
    let c = runs.get("hopf_conformal")?;
    let sup_t = c["levels"]
        .as_array()
        .map(|a| a.iter().map(|l| num(&l["hopf_sup"])).fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    Ok((
        converged && second_order(&ratios) && sup_t <= 1e-10,
        format!(
            "residual ratios {} over n = 16, 32, 64; conformal sup|T| {sup_t:.2e}",
            fmt(&ratios)
        ),
    ))
}

fn bochner(runs: &mut Runs) -> Check {
    let f = runs.get("bochner_flat")?;
    let flat: Vec<f64> = f["levels"]
        .as_array()
        .map(|a| a.iter().map(|l| num(&l["bochner_h"])).collect())
        .unwrap_or_default();
    let flat_ok = !flat.is_empty() && flat.iter().all(|x| *x <= 1e-6);
    let h = runs.get("bochner_hyperbolic")?;
    let ratios = nums(&h["bochner_h_ratios"]);
    Ok((
        flat_ok && second_order(&ratios),
        format!(
            "flat max r_H {:.2e}; hyperbolic r_H ratios {}",
            flat.iter().cloned().fold(0.0, f64::max),
            fmt(&ratios)
        ),
    ))
}

fn teichmuller(runs: &mut Runs) -> Check {
    let r = runs.get("teich_scan")?;
    let off = nums(&r["argmin_offset_cells"]);
    let grad = num(&r["gradient_norm"]);
    let h = &r["hessian"];
    let scale = h["matrix"]
        .as_array()
        .map(|rows| {
            rows.iter()
                .flat_map(nums)
                .fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .unwrap_or(f64::NAN);
    let asym = num(&h["asymmetry"]) / scale;
    let ev = nums(&h["eigenvalues"]);
    let wp = num(&r["hessian_wp_relative"]);
    let ok = r["all_converged"] == true
        && off.len() == 2
        && off.iter().all(|c| *c <= 1.0)
        && grad <= 1e-5
        && asym <= 1e-3
        && ev.len() == 2
        && ev.iter().all(|e| *e > 0.0)
        && wp <= 1e-3;
    Ok((
        ok,
        format!(
            "argmin offset {} cells, |grad E| {grad:.2e}, asymmetry {asym:.1e}, eigenvalues {}, Hessian vs WP {wp:.1e}",
            fmt(&off),
            fmt(&ev)
        ),
    ))
}

fn domain_variation(runs: &mut Runs) -> Check {
    let r = runs.get("domain_variation")?;
    let mut worst = 0.0f64;
    let mut gap = 0.0f64;
    let mut ok = true;
    for l in r["levels"].as_array().cloned().unwrap_or_default() {
        let (b, p) = (num(&l["beltrami_form"]), num(&l["pairing_form"]));
        worst = worst.max(b.abs());
        gap = gap.max((b - p).abs());
        ok &= num(&l["holomorphy_residual"]) <= 1e-10 && l["variation_warning"] == false;
    }
    Ok((
        ok && worst <= 1e-6 && gap <= 1e-10,
        format!("max |integral| {worst:.2e}, form gap {gap:.2e}"),
    ))
}

fn dirac(runs: &mut Runs) -> Check {
    let r = runs.get("dirac_spectrum")?;
    let spins = r["spins"].as_array().cloned().unwrap_or_default();
    let mut ok = spins.len() == 4;
    let mut detail = vec![];
    for s in &spins {
        let ratios = nums(&s["low_mode_ratios"]);
        let sym = num(&s["symmetry_defect"]);
        let oracle = num(&s["oracle_error"]);
        ok &= second_order(&ratios) && sym <= 1e-10 && oracle <= 1e-10;
        detail.push(format!(
            "{}: ratios {}, symmetry {sym:.1e}, lattice symbol {oracle:.1e}",
            s["spin"].as_str().unwrap_or("?"),
            fmt(&ratios)
        ));
    }
    Ok((ok, detail.join("; ")))
}

fn dirac_harmonic(runs: &mut Runs) -> Check {
    let r = runs.get("dh_flat")?;
    let (rp, rs) = (num(&r["r_phi"]), num(&r["r_psi"]));
    Ok((
        r["converged"] == true && r["phi_matches_heat_flow"] == true && rp <= 1e-6 && rs <= 1e-8,
        format!(
            "phi bitwise equal to heat flow: {}, r_phi {rp:.2e}, r_psi {rs:.2e}",
            r["phi_matches_heat_flow"]
        ),
    ))
}

fn gravitino(runs: &mut Runs) -> Check {
    let r = runs.get("adhg_suite")?;
    let levels = r["levels"].as_array().cloned().unwrap_or_default();
    let mut sw = 0.0f64;
    let mut qj = 0.0f64;
    let mut qq = 0.0f64;
    let mut ids = 0.0f64;
    let mut div = 0.0f64;
    for l in &levels {
        let d = &l["defects"];
        sw = sw.max(num(&d["super_weyl"]));
        qj = qj.max(num(&d["q_part_of_j"]));
        qq = qq.max(num(&d["q_idempotence"]));
        for c in l["identities"].as_array().cloned().unwrap_or_default() {
            ids = ids.max(num(&c["relative"]));
        }
        div = div.max(num(&l["on_shell_divergence"]));
    }
    let rc = nums(&r["rescaled_conformal_ratios"]);
    let rpsi = nums(&r["on_shell_r_psi_ratios"]);
    // on shell the divergence vanishes to round-off, which bounds it by any C h^2
    let ok = levels.len() == 3
        && sw <= 1e-12
        && second_order(&rc)
        && qj <= 1e-10
        && qq <= 1e-13
        && ids <= 1e-4
        && div <= 1e-10
        && second_order(&rpsi);
    Ok((
        ok,
        format!(
            "super-Weyl {sw:.1e}, rescaled-conformal ratios {}, (Id-Q)J {qj:.1e}, Q^2-Q {qq:.1e}, identities {ids:.1e}, on-shell divergence {div:.1e} (state residual ratios {})",
            fmt(&rc),
            fmt(&rpsi)
        ),
    ))
}

fn super_suite(runs: &mut Runs) -> Check {
    let r = runs.get("super_suite")?;
    let checks = r["checks"].as_array().cloned().unwrap_or_default();
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c["passed"] != true)
        .map(|c| c["name"].as_str().unwrap_or("?").to_string())
        .collect();
    Ok((
        checks.len() >= 7 && failed.is_empty(),
        if failed.is_empty() {
            format!("{} exact checks", checks.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    ))
}

fn determinism(runs: &mut Runs) -> Check {
    let names: Vec<&'static str> = runs.done.keys().cloned().collect();
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let on_disk = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter(|e| {
            e.as_ref()
                .map(|e| e.path().extension().is_some_and(|x| x == "toml"))
                .unwrap_or(false)
        })
        .count();
    let mut differing = vec![];
    for name in &names {
        let (_, again) = run_config(name)?;
        if again != runs.done[name].1 {
            differing.push(*name);
        }
    }
    Ok((
        names.len() == on_disk && differing.is_empty(),
        if differing.is_empty() {
            format!(
                "{} configs rerun with identical reports and artifacts",
                names.len()
            )
        } else {
            format!("differs: {}", differing.join(", "))
        },
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("conformal invariance", conformal_invariance),
        ("harmonic oracle", harmonic_oracle),
        ("Hopf holomorphicity", hopf_holomorphicity),
        ("Bochner identities", bochner),
        ("Teichmuller landscape", teichmuller),
        ("domain-variation orthogonality", domain_variation),
        ("Dirac spectrum", dirac),
        ("Dirac-harmonic decoupling", dirac_harmonic),
        ("gravitino symmetry suite", gravitino),
        ("exact super suite", super_suite),
        ("determinism", determinism),
    ];
    let mut runs = Runs {
        done: BTreeMap::new(),
    };
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let (pass, detail) = match check(&mut runs) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name} ({:.1} s): {detail}",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            t0.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
