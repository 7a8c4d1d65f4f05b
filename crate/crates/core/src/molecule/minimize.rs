//! Polak–Ribière conjugate-gradient search for the potential minimum.

use super::Molecule;
use crate::error::{Error, Result};
use crate::potential::{self, PotentialParams};
use crate::Vec3;

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    /// Target max-norm of ∂U/∂x (kcal/Å/mol).
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol: 1e-10,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimized {
    /// Center of mass at the origin.
    pub coords: Vec<Vec3>,
    pub energy: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
}

fn max_norm(g: &[Vec3]) -> f64 {
    g.iter().flat_map(|v| v.iter()).fold(0.0, |m, c| m.max(c.abs()))
}

fn dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn recenter(mol: &Molecule, coords: &mut [Vec3]) {
    let cm = mol.center_of_mass(coords);
    coords.iter_mut().for_each(|x| *x -= cm);
}

struct Line<'a> {
    mol: &'a Molecule,
    params: &'a PotentialParams,
    origin: &'a [Vec3],
    dir: &'a [Vec3],
    point: Vec<Vec3>,
    grad: Vec<Vec3>,
}

impl Line<'_> {
    /// Directional derivative of U at `origin + alpha * dir`; leaves the
    /// gradient there in `self.grad`.
    fn slope(&mut self, alpha: f64) -> Result<f64> {
        for ((p, o), d) in self.point.iter_mut().zip(self.origin).zip(self.dir) {
            *p = o + d * alpha;
        }
        potential::evaluate_into(&self.point, self.mol, self.params, &mut self.grad)?;
        Ok(dot(&self.grad, self.dir))
    }
}

/// Finds the first zero of the directional derivative beyond 0 by bracketing
/// outward from `guess` and then Brent's root iteration.
fn line_minimum(line: &mut Line, guess: f64) -> Result<f64> {
    let s0 = line.slope(0.0)?;
    debug_assert!(s0 < 0.0);
    let (mut a, mut fa) = (0.0, s0);
    let mut b = guess;
    let fb;
    let mut expansions = 0;
    loop {
        match line.slope(b) {
            Ok(s) if s >= 0.0 => {
                fb = s;
                break;
            }
            Ok(s) => {
                a = b;
                fa = s;
                b *= 2.0;
            }
            // Stepped into a singular configuration: back off toward a.
            Err(Error::Domain(_)) => b = a + 0.5 * (b - a),
            Err(e) => return Err(e),
        }
        expansions += 1;
        if expansions > 200 {
            return Err(Error::Minimization {
                iterations: 0,
                gradient: max_norm(&line.grad),
            });
        }
    }
    brent_root(line, (a, fa), (b, fb))
}

fn brent_root(line: &mut Line, (mut a, mut fa): (f64, f64), (mut b, mut fb): (f64, f64)) -> Result<f64> {
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(xm) };
        fb = line.slope(b)?;
    }
    Ok(b)
}

/// Conjugate-gradient minimization from `mol.coords_initial`.
///
/// The search direction restarts as steepest descent every 3N iterations.
pub fn minimize_equilibrium(
    mol: &Molecule,
    params: &PotentialParams,
    opts: &MinimizeOptions,
) -> Result<Minimized> {
    minimize_from(mol, params, opts, &mol.coords_initial, true)
}

fn minimize_from(
    mol: &Molecule,
    params: &PotentialParams,
    opts: &MinimizeOptions,
    start: &[Vec3],
    conjugate: bool,
) -> Result<Minimized> {
    params.validate()?;
    let n = mol.n_atoms();
    let restart = 3 * n;
    let mut x = start.to_vec();
    let mut g = vec![Vec3::zeros(); n];
    let start_energy = potential::evaluate_into(&x, mol, params, &mut g)?;
    let mut dir: Vec<Vec3> = g.iter().map(|v| -v).collect();
    let mut alpha_guess = 1e-3;
    let mut iterations = 0;

    while max_norm(&g) >= opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::Minimization {
                iterations,
                gradient: max_norm(&g),
            });
        }
        iterations += 1;
        let mut line = Line {
            mol,
            params,
            origin: &x,
            dir: &dir,
            point: vec![Vec3::zeros(); n],
            grad: vec![Vec3::zeros(); n],
        };
        let alpha = line_minimum(&mut line, alpha_guess)?;
        line.slope(alpha)?;
        let g_new = line.grad;
        for (xi, di) in x.iter_mut().zip(&dir) {
            *xi += di * alpha;
        }
        alpha_guess = (2.0 * alpha).max(1e-12);

        let gg = dot(&g, &g);
        let beta = if !conjugate || iterations % restart == 0 || gg == 0.0 {
            0.0
        } else {
            let diff: f64 = g_new.iter().zip(&g).map(|(a, b)| a.dot(&(a - b))).sum();
            (diff / gg).max(0.0)
        };
        g = g_new;
        for (d, gi) in dir.iter_mut().zip(&g) {
            *d = *d * beta - gi;
        }
        if dot(&dir, &g) >= 0.0 {
            dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
        }
    }
    recenter(mol, &mut x);
    let ev = potential::evaluate(&x, mol, params)?;
    debug_assert!(ev.energy <= start_energy + 1e-9 * start_energy.abs().max(1.0));
    Ok(Minimized {
        gradient_norm: max_norm(&ev.gradient),
        coords: x,
        energy: ev.energy,
        iterations,
    })
}

/// Plain steepest descent with exact line searches. Slow; used as an
/// independent check on the conjugate-gradient result.
pub fn steepest_descent(
    mol: &Molecule,
    params: &PotentialParams,
    opts: &MinimizeOptions,
) -> Result<Minimized> {
    minimize_from(mol, params, opts, &mol.coords_initial, false)
}
