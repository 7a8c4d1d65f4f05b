use std::fs;
use std::path::{Path, PathBuf};

use modemd::diagnostics::{center_of_mass_motion, fit_exponential_rate};
use modemd::dynamics::InitialData;
use modemd::modes::ModeBasis;
use modemd::molecule::{minimize_equilibrium, write_molecule, MinimizeOptions};
use modemd::simulation::{compare, drift_series, run, Prepared, Run, RunSpec};
use modemd::units::frequency_to_per_ps;
use modemd::{load_molecule, PotentialParams, SchemeKind};

use crate::config::{BenchConfig, RunConfig, SchemeAt};
use crate::output::{num, opt, run_file, write_file, Csv, UNITS};
use crate::{CliError, Result};

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    prepare_molecule(cfg, &cfg.molecule, cfg.basis.as_deref())
}

fn prepare_molecule(cfg: &RunConfig, molecule: &Path, basis: Option<&Path>) -> Result<Prepared> {
    let mol = load_molecule(molecule)?;
    let params = PotentialParams::default();
    let mut prep = match basis {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let basis: ModeBasis = serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: bad basis dump: {e}", path.display())))?;
            Prepared::with_basis(mol, params, basis)?
        }
        None => Prepared::new(mol, params)?,
    };
    prep.gauge = cfg.energy_gauge;
    Ok(prep)
}

fn base_csv(schema: &str, columns: Vec<&'static str>, cfg: &RunConfig, command: &str) -> Csv {
    let mut c = Csv::new(schema, columns);
    c.meta("command", command).meta("config", cfg.to_json()).meta("units", UNITS);
    c
}

fn run_meta(c: &mut Csv, spec: &RunSpec, init: &InitialData) {
    c.meta("scheme", spec.scheme.name())
        .meta("eps_tau", num(spec.integrator.eps_tau))
        .meta("seed", init.seed.to_string())
        .meta("eta", num(spec.eta))
        .meta("temperature", num(init.temperature))
        .meta("initial_state", serde_json::to_string(&init.state).expect("state serializes"));
}

fn spec_for(cfg: &RunConfig, scheme: SchemeKind, eps: f64) -> RunSpec {
    let mut spec = RunSpec::new(scheme, cfg.t_end, cfg.out_interval, eps);
    spec.eta = cfg.eta;
    spec
}

/// Runs a scheme, reporting integration failures in picoseconds.
fn execute(prep: &Prepared, init: &InitialData, spec: &RunSpec) -> Result<Run> {
    run(prep, init, spec).map_err(|e| match e {
        modemd::Error::Integration { t, msg } => CliError::Core(modemd::Error::Integration {
            t,
            msg: format!(
                "{msg} ({} at eps {:e}; last good time {:.6} ps)",
                spec.scheme,
                spec.integrator.eps_tau,
                modemd::units::internal_to_ps(t)
            ),
        }),
        other => other.into(),
    })
}

pub fn cmd_minimize(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut mol = load_molecule(&cfg.molecule)?;
    let params = PotentialParams::default();
    let min = minimize_equilibrium(&mol, &params, &MinimizeOptions::default())?;
    mol.coords_equilibrium = Some(min.coords);
    let path = cfg.output.join(format!("{}.equilibrium.toml", mol.name));
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    let header = format!(
        "written by mdcli {} minimize\nequilibrium energy {} kcal/mol, gradient max-norm {:e} kcal/A/mol, {} iterations",
        modemd::VERSION,
        num(min.energy),
        min.gradient_norm,
        min.iterations
    );
    write_molecule(&mol, &path, &header)?;
    println!(
        "{}: U = {:.6} kcal/mol, |grad|max = {:.2e} after {} iterations",
        mol.name, min.energy, min.gradient_norm, min.iterations
    );
    Ok(vec![path])
}

pub fn cmd_modes(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prep = prepare_molecule(cfg, &cfg.molecule, None)?;
    let b = &prep.basis;
    let res = b.constraint_residuals();
    let mut c = base_csv("modes-v1", vec!["index", "kind", "omega_squared", "omega", "omega_per_ps"], cfg, "modes");
    c.meta("molecule", prep.mol.name.clone())
        .meta("equilibrium_energy", num(prep.u_eq))
        .meta(
            "residuals",
            format!(
                "orthonormality {:e}, translation {:e}, rotation {:e}",
                res.orthonormality, res.translation, res.rotation
            ),
        );
    let mut rigid = b.zero_eigenvalues.clone();
    rigid.sort_by(f64::total_cmp);
    for (i, w2) in rigid.iter().enumerate() {
        c.row(vec![i.to_string(), "rigid".into(), num(*w2), String::new(), String::new()]);
    }
    for (i, w) in b.frequencies.iter().enumerate() {
        c.row(vec![
            (i + rigid.len()).to_string(),
            "internal".into(),
            num(w * w),
            num(*w),
            num(frequency_to_per_ps(*w)),
        ]);
    }
    let csv_path = cfg.output.join(format!("{}.modes.csv", prep.mol.name));
    c.write(&csv_path)?;
    let json_path = cfg.output.join(format!("{}.basis.json", prep.mol.name));
    write_file(&json_path, &serde_json::to_string(b).expect("basis serializes"))?;
    println!(
        "{}: {} rigid + {} internal modes, omega {:.4}..{:.4} /ps, worst residual {:.1e}",
        prep.mol.name,
        rigid.len(),
        b.n_modes(),
        frequency_to_per_ps(b.frequencies[0]),
        frequency_to_per_ps(*b.frequencies.last().unwrap()),
        res.orthonormality.max(res.translation).max(res.rotation)
    );
    Ok(vec![csv_path, json_path])
}

const EVOLVE_COLUMNS: [&str; 24] = [
    "t_ps", "energy", "e_E", "e_P", "e_J", "p_x", "p_y", "p_z", "j_x", "j_y", "j_z", "x_cm_x", "x_cm_y", "x_cm_z",
    "v_cm_x", "v_cm_y", "v_cm_z", "q0", "q1", "q2", "q3", "omega_x", "omega_y", "omega_z",
];

pub fn evolve_csv(cfg: &RunConfig, prep: &Prepared, init: &InitialData, out: &Run) -> Csv {
    let mut c = base_csv("evolve-v1", EVOLVE_COLUMNS.to_vec(), cfg, "evolve");
    c.meta("molecule", prep.mol.name.clone()).meta("energy_gauge", format!("{:?}", prep.gauge).to_lowercase());
    run_meta(&mut c, &out.spec, init);
    c.meta(
        "steps",
        format!(
            "accepted {} rejected {} rhs_evals {}",
            out.stats.accepted, out.stats.rejected, out.stats.rhs_evals
        ),
    );
    for ((s, con), d) in out.snapshots.iter().zip(&out.conserved).zip(drift_series(out)) {
        let (x_cm, v_cm) = match &s.orientation {
            Some(o) => (o.x_cm, o.v_cm),
            None => center_of_mass_motion(&s.cartesian, &prep.mol.masses),
        };
        let mut row = vec![num(s.t_ps), num(con.energy), num(d.energy.value), num(d.momentum.value)];
        row.push(num(d.angular_momentum.value));
        row.extend(con.momentum.iter().chain(con.angular_momentum.iter()).map(|v| num(*v)));
        row.extend(x_cm.iter().chain(v_cm.iter()).map(|v| num(*v)));
        match &s.orientation {
            Some(o) => row.extend(o.q.0.iter().chain(o.omega.iter()).map(|v| num(*v))),
            None => row.extend(std::iter::repeat_n(String::new(), 7)),
        }
        c.row(row);
    }
    c
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let prep = prepare(cfg)?;
    let init = prep.initial_data(cfg.temperature, cfg.seed)?;
    let spec = spec_for(cfg, cfg.scheme, cfg.eps_tau);
    let out = execute(&prep, &init, &spec)?;
    let path = run_file(&cfg.output, &prep.mol.name, cfg.scheme.name(), cfg.eps_tau, "");
    evolve_csv(cfg, &prep, &init, &out).write(&path)?;
    let last = drift_series(&out).pop().unwrap();
    println!(
        "{} {} eps {:e}: {} samples, {} steps, {:.2} s; final e_E {:.2e} e_P {:.2e} e_J {:.2e}",
        prep.mol.name,
        cfg.scheme,
        cfg.eps_tau,
        out.snapshots.len(),
        out.stats.accepted,
        out.wall_seconds,
        last.energy.value,
        last.momentum.value,
        last.angular_momentum.value
    );
    Ok(vec![path])
}

const COMPARE_COLUMNS: [&str; 9] = ["t_ps", "e_x", "e_E", "e_P", "e_J", "e_xcm", "e_vcm", "e_omega", "e_q"];

pub fn compare_csv(cfg: &RunConfig, prep: &Prepared, init: &InitialData, trial: &Run, reference: &Run) -> Result<Csv> {
    let rows = compare(trial, reference, &prep.mol.masses)?;
    let mut c = base_csv("compare-v1", COMPARE_COLUMNS.to_vec(), cfg, "compare");
    c.meta("molecule", prep.mol.name.clone())
        .meta("reference", format!("{} eps {}", reference.spec.scheme, num(reference.spec.integrator.eps_tau)));
    run_meta(&mut c, &trial.spec, init);
    c.meta("note", "e_E e_P e_J are relative to t = 0 unless the t = 0 value vanishes, then absolute");
    for r in &rows {
        c.row(vec![
            num(r.t_ps),
            num(r.reference.e_x),
            num(r.drift.energy.value),
            num(r.drift.momentum.value),
            num(r.drift.angular_momentum.value),
            num(r.reference.e_xcm),
            num(r.reference.e_vcm),
            opt(r.reference.e_omega),
            opt(r.reference.e_q),
        ]);
    }
    Ok(c)
}

pub fn cmd_compare(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let cmp = cfg
        .compare
        .as_ref()
        .ok_or_else(|| CliError::Config("compare needs a [compare] table".into()))?;
    if cmp.trials.is_empty() {
        return Err(CliError::Config("compare.trials is empty".into()));
    }
    let prep = prepare(cfg)?;
    let init = prep.initial_data(cfg.temperature, cfg.seed)?;
    let SchemeAt { scheme, eps_tau } = cmp.reference;
    let reference = execute(&prep, &init, &spec_for(cfg, scheme, eps_tau))?;
    eprintln!("reference {scheme} eps {eps_tau:e}: {:.2} s", reference.wall_seconds);
    let mut paths = vec![];
    for t in &cmp.trials {
        let trial = execute(&prep, &init, &spec_for(cfg, t.scheme, t.eps_tau))?;
        let csv = compare_csv(cfg, &prep, &init, &trial, &reference)?;
        let path = run_file(&cfg.output, &format!("{}_compare", prep.mol.name), t.scheme.name(), t.eps_tau, "");
        csv.write(&path)?;
        let rows = compare(&trial, &reference, &prep.mol.masses)?;
        let times: Vec<f64> = rows.iter().map(|r| r.t_ps).collect();
        let ex: Vec<f64> = rows.iter().map(|r| r.reference.e_x).collect();
        let rate = fit_exponential_rate(&times, &ex).map_or("no growth window".into(), |f| format!("rate {:.4}/ps", f.rate));
        println!(
            "{} eps {:e} vs reference: final e_x {:.2e} A, {rate}, {:.2} s",
            t.scheme,
            t.eps_tau,
            ex.last().copied().unwrap_or(0.0),
            trial.wall_seconds
        );
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub molecule: String,
    pub n_atoms: usize,
    pub scheme: SchemeKind,
    pub eps_tau: f64,
    pub wall_seconds: f64,
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
}

/// Sums per (molecule, scheme) and the ratio to exact Cartesian on the same molecule.
pub fn bench_totals(cells: &[BenchCell]) -> Vec<(String, usize, SchemeKind, f64, Option<f64>)> {
    let mut keys: Vec<(String, usize, SchemeKind)> = vec![];
    for c in cells {
        let k = (c.molecule.clone(), c.n_atoms, c.scheme);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let total = |m: &str, s: SchemeKind| -> Option<f64> {
        let v: Vec<f64> = cells
            .iter()
            .filter(|c| c.molecule == m && c.scheme == s)
            .map(|c| c.wall_seconds)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum())
    };
    keys.into_iter()
        .map(|(m, n, s)| {
            let t = total(&m, s).unwrap_or(0.0);
            let ratio = total(&m, SchemeKind::ExactCartesian).map(|c| t / c);
            (m, n, s, t, ratio)
        })
        .collect()
}

pub fn cmd_bench(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let bench = cfg.bench.clone().unwrap_or(BenchConfig {
        schemes: SchemeKind::ALL.to_vec(),
        eps: crate::config::BENCH_EPS.to_vec(),
        molecules: vec![],
    });
    let molecules = if bench.molecules.is_empty() {
        vec![cfg.molecule.clone()]
    } else {
        bench.molecules.clone()
    };
    let mut cells = vec![];
    for m in &molecules {
        let prep = prepare_molecule(cfg, m, None)?;
        let init = prep.initial_data(cfg.temperature, cfg.seed)?;
        for &scheme in &bench.schemes {
            for &eps in &bench.eps {
                let out = execute(&prep, &init, &spec_for(cfg, scheme, eps))?;
                eprintln!("{} {scheme} eps {eps:e}: {:.3} s", prep.mol.name, out.wall_seconds);
                cells.push(BenchCell {
                    molecule: prep.mol.name.clone(),
                    n_atoms: prep.mol.n_atoms(),
                    scheme,
                    eps_tau: eps,
                    wall_seconds: out.wall_seconds,
                    accepted: out.stats.accepted,
                    rejected: out.stats.rejected,
                    rhs_evals: out.stats.rhs_evals,
                });
            }
        }
    }

    let mut runs = base_csv(
        "bench-runs-v1",
        vec!["molecule", "n_atoms", "scheme", "eps_tau", "t_end_ps", "wall_seconds", "accepted", "rejected", "rhs_evals"],
        cfg,
        "bench",
    );
    runs.meta("seed", cfg.seed.to_string()).meta("temperature", num(cfg.temperature));
    for c in &cells {
        runs.row(vec![
            c.molecule.clone(),
            c.n_atoms.to_string(),
            c.scheme.name().into(),
            num(c.eps_tau),
            num(cfg.t_end),
            num(c.wall_seconds),
            c.accepted.to_string(),
            c.rejected.to_string(),
            c.rhs_evals.to_string(),
        ]);
    }
    let mut totals = base_csv(
        "bench-totals-v1",
        vec!["molecule", "n_atoms", "scheme", "total_seconds", "ratio_to_cartesian"],
        cfg,
        "bench",
    );
    totals.meta("eps_set", bench.eps.iter().map(|e| num(*e)).collect::<Vec<_>>().join(" "));
    for (m, n, s, t, r) in bench_totals(&cells) {
        println!("{m} {s}: {t:.3} s{}", r.map_or(String::new(), |r| format!(", {r:.3}x exact-cartesian")));
        totals.row(vec![m, n.to_string(), s.name().into(), num(t), opt(r)]);
    }
    let runs_path = cfg.output.join("bench_runs.csv");
    let totals_path = cfg.output.join("bench_totals.csv");
    runs.write(&runs_path)?;
    totals.write(&totals_path)?;
    Ok(vec![runs_path, totals_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(m: &str, s: SchemeKind, secs: f64) -> BenchCell {
        BenchCell {
            molecule: m.into(),
            n_atoms: 20,
            scheme: s,
            eps_tau: 1e-8,
            wall_seconds: secs,
            accepted: 1,
            rejected: 0,
            rhs_evals: 12,
        }
    }

    #[test]
    fn totals_and_ratios() {
        let cells = vec![
            cell("c20", SchemeKind::ExactCartesian, 2.0),
            cell("c20", SchemeKind::ExactCartesian, 3.0),
            cell("c20", SchemeKind::Zma, 0.5),
            cell("c60", SchemeKind::Zma, 1.0),
        ];
        let t = bench_totals(&cells);
        assert_eq!(t[0], ("c20".into(), 20, SchemeKind::ExactCartesian, 5.0, Some(1.0)));
        assert_eq!(t[1].4, Some(0.1));
        assert_eq!(t[2].4, None);
    }
}
