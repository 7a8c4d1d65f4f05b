//! End-to-end runs: prepare a molecule (equilibrium + modes), integrate a
//! scheme from shared initial data, and compare sampled trajectories.

use serde::Serialize;

use crate::diagnostics::{
    conserved_with_offset, drift_metrics, error_metrics, Conserved, DriftMetrics, EnergyGauge, Orientation,
    ReferenceMetrics,
};
use crate::dynamics::{
    init_equipartition, prescribed_amplitudes, to_cartesian, CartesianState, CartesianSystem,
    InitialData, LargeScaleSystem, ModeBasisState, ModeBasisSystem, Scheme, SchemeKind, REDUCED_DIM,
};
use crate::error::{Error, Result};
use crate::integrator::{integrate_with, IntegratorConfig, StepStats};
use crate::modes::{compute_modes, ModeBasis};
use crate::molecule::{minimize_equilibrium, MinimizeOptions, Molecule};
use crate::potential::{energy, hessian, PotentialParams};
use crate::rotation::Quaternion;
use crate::units::ps_to_internal;

/// A molecule with its equilibrium and mode basis.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub mol: Molecule,
    pub params: PotentialParams,
    pub basis: ModeBasis,
    /// U at the equilibrium geometry.
    pub u_eq: f64,
    pub gauge: EnergyGauge,
    pub minimizer_iterations: usize,
}

impl Prepared {
    /// Minimizes (unless the molecule already carries an equilibrium), builds
    /// the Hessian and computes the modes.
    pub fn new(mut mol: Molecule, params: PotentialParams) -> Result<Self> {
        params.validate()?;
        let mut minimizer_iterations = 0;
        if mol.coords_equilibrium.is_none() {
            let min = minimize_equilibrium(&mol, &params, &MinimizeOptions::default())?;
            minimizer_iterations = min.iterations;
            mol.coords_equilibrium = Some(min.coords);
        }
        let x0 = {
            let eq = mol.equilibrium()?;
            let cm = mol.center_of_mass(eq);
            eq.iter().map(|x| x - cm).collect::<Vec<_>>()
        };
        mol.coords_equilibrium = Some(x0.clone());
        let h = hessian(&x0, &mol, &params)?;
        let basis = compute_modes(&h, &mol.masses, &x0)?;
        let u_eq = energy(&x0, &mol, &params)?;
        Ok(Prepared {
            mol,
            params,
            basis,
            u_eq,
            gauge: EnergyGauge::default(),
            minimizer_iterations,
        })
    }

    /// Uses a previously computed basis instead of diagonalizing again. The
    /// molecule must carry the equilibrium the basis was built from.
    pub fn with_basis(mut mol: Molecule, params: PotentialParams, basis: ModeBasis) -> Result<Self> {
        params.validate()?;
        if basis.n_atoms() != mol.n_atoms() || basis.masses != mol.masses {
            return Err(Error::Invalid(format!(
                "mode basis has {} atoms, molecule {} has {}",
                basis.n_atoms(),
                mol.name,
                mol.n_atoms()
            )));
        }
        let u_eq = energy(&basis.x0, &mol, &params)?;
        mol.coords_equilibrium = Some(basis.x0.clone());
        Ok(Prepared {
            mol,
            params,
            basis,
            u_eq,
            gauge: EnergyGauge::default(),
            minimizer_iterations: 0,
        })
    }

    pub fn initial_data(&self, temperature: f64, seed: u64) -> Result<InitialData> {
        init_equipartition(&self.basis, temperature, seed)
    }

    pub fn conserved(&self, s: &CartesianState) -> Result<Conserved> {
        let offset = match self.gauge {
            EnergyGauge::Absolute => 0.0,
            EnergyGauge::Equilibrium => self.u_eq,
        };
        conserved_with_offset(s, &self.mol, &self.params, offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSpec {
    pub scheme: SchemeKind,
    pub t_end_ps: f64,
    pub out_interval_ps: f64,
    pub integrator: IntegratorConfig,
    /// Quaternion constraint-damping rate.
    pub eta: f64,
}

impl RunSpec {
    pub fn new(scheme: SchemeKind, t_end_ps: f64, out_interval_ps: f64, eps_tau: f64) -> Self {
        RunSpec {
            scheme,
            t_end_ps,
            out_interval_ps,
            integrator: IntegratorConfig::with_eps(eps_tau),
            eta: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t_ps: f64,
    pub cartesian: CartesianState,
    pub orientation: Option<Orientation>,
}

#[derive(Debug, Clone)]
pub struct Run {
    pub spec: RunSpec,
    pub snapshots: Vec<Snapshot>,
    pub conserved: Vec<Conserved>,
    pub stats: StepStats,
    pub wall_seconds: f64,
}

fn renormalize_quaternion(y: &mut [f64]) -> Result<()> {
    let q = Quaternion([y[6], y[7], y[8], y[9]]).renormalize()?;
    y[6..10].copy_from_slice(&q.0);
    Ok(())
}

fn orientation_of(s: &ModeBasisState) -> Orientation {
    Orientation {
        x_cm: s.x_cm,
        v_cm: s.v_cm,
        q: s.q,
        omega: s.omega,
    }
}

/// Integrates `spec.scheme` from `init` and samples the trajectory.
pub fn run(prep: &Prepared, init: &InitialData, spec: &RunSpec) -> Result<Run> {
    if !(spec.eta.is_finite() && spec.eta >= 0.0) {
        return Err(Error::Invalid(format!("eta must be non-negative, got {}", spec.eta)));
    }
    let t_end = ps_to_internal(spec.t_end_ps);
    let dt = ps_to_internal(spec.out_interval_ps);
    let cfg = &spec.integrator;
    let (basis, mol, params) = (&prep.basis, &prep.mol, prep.params);
    let scheme = Scheme::new(spec.scheme, init);

    let (traj, snapshots): (_, Vec<Snapshot>) = match spec.scheme {
        SchemeKind::ExactCartesian => {
            let mut sys = CartesianSystem::new(mol, params);
            let y0 = to_cartesian(&init.state, basis).to_flat();
            let traj = integrate_with(|t, y, dy| sys.rhs(t, y, dy), |_| Ok(()), &y0, t_end, dt, cfg)?;
            let snaps = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(t, y)| Snapshot {
                    t_ps: crate::units::internal_to_ps(*t),
                    cartesian: CartesianState::from_flat(y),
                    orientation: None,
                })
                .collect();
            (traj, snaps)
        }
        SchemeKind::ExactModeBasis => {
            let mut sys = ModeBasisSystem::new(mol, basis, params, spec.eta);
            let y0 = init.state.to_flat();
            let traj = integrate_with(|t, y, dy| sys.rhs(t, y, dy), renormalize_quaternion, &y0, t_end, dt, cfg)?;
            let snaps = traj
                .times
                .iter()
                .zip(&traj.states)
                .map(|(t, y)| {
                    let s = ModeBasisState::from_flat(y);
                    Snapshot {
                        t_ps: crate::units::internal_to_ps(*t),
                        cartesian: to_cartesian(&s, basis),
                        orientation: Some(orientation_of(&s)),
                    }
                })
                .collect();
            (traj, snaps)
        }
        _ => {
            let mut sys = LargeScaleSystem::new(mol, basis, scheme.clone(), params, spec.eta)?;
            let y0 = init.state.reduced_flat();
            debug_assert_eq!(y0.len(), REDUCED_DIM);
            let traj = integrate_with(|t, y, dy| sys.rhs(t, y, dy), renormalize_quaternion, &y0, t_end, dt, cfg)?;
            let mut snaps = Vec::with_capacity(traj.times.len());
            for (t, y) in traj.times.iter().zip(&traj.states) {
                let (a, da) = prescribed_amplitudes(&scheme, *t, basis)?;
                let s = ModeBasisState::from_reduced(y, a, da);
                snaps.push(Snapshot {
                    t_ps: crate::units::internal_to_ps(*t),
                    cartesian: to_cartesian(&s, basis),
                    orientation: Some(orientation_of(&s)),
                });
            }
            (traj, snaps)
        }
    };
    let conserved = snapshots
        .iter()
        .map(|s| prep.conserved(&s.cartesian))
        .collect::<Result<Vec<_>>>()?;
    Ok(Run {
        spec: *spec,
        snapshots,
        conserved,
        stats: traj.stats,
        wall_seconds: traj.wall_seconds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub t_ps: f64,
    pub drift: DriftMetrics,
    pub reference: ReferenceMetrics,
}

/// Per-sample metrics of `trial` against `reference`; the sampling grids must match.
pub fn compare(trial: &Run, reference: &Run, masses: &[f64]) -> Result<Vec<ComparisonRow>> {
    if trial.snapshots.len() != reference.snapshots.len()
        || trial
            .snapshots
            .iter()
            .zip(&reference.snapshots)
            .any(|(a, b)| (a.t_ps - b.t_ps).abs() > 1e-9 * b.t_ps.abs().max(1.0))
    {
        return Err(Error::Invalid(format!(
            "sampling grids differ ({} vs {} samples)",
            trial.snapshots.len(),
            reference.snapshots.len()
        )));
    }
    let initial = trial.conserved[0];
    Ok(trial
        .snapshots
        .iter()
        .zip(&reference.snapshots)
        .zip(&trial.conserved)
        .map(|((a, b), c)| ComparisonRow {
            t_ps: a.t_ps,
            drift: drift_metrics(c, &initial),
            reference: error_metrics(
                &a.cartesian,
                a.orientation.as_ref(),
                &b.cartesian,
                b.orientation.as_ref(),
                masses,
            ),
        })
        .collect())
}

/// Drift metrics of a run against its own first sample.
pub fn drift_series(run: &Run) -> Vec<DriftMetrics> {
    let initial = run.conserved[0];
    run.conserved.iter().map(|c| drift_metrics(c, &initial)).collect()
}
