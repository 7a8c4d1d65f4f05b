//! Static molecular structure: masses, bond/angle topology and geometry.

mod file;
mod minimize;

pub use file::{load_molecule, parse_molecule, write_molecule};
pub use minimize::{minimize_equilibrium, steepest_descent, MinimizeOptions, Minimized};

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub name: String,
    pub masses: Vec<f64>,
    pub bonds: Vec<[usize; 2]>,
    /// Ordered triples `(c, d, e)` with `d` the vertex atom.
    pub angles: Vec<[usize; 3]>,
    pub coords_initial: Vec<Vec3>,
    pub coords_equilibrium: Option<Vec<Vec3>>,
}

impl Molecule {
    /// Validates topology and builds the angle list when `angles` is `None`.
    pub fn new(
        name: impl Into<String>,
        masses: Vec<f64>,
        bonds: Vec<[usize; 2]>,
        angles: Option<Vec<[usize; 3]>>,
        coords_initial: Vec<Vec3>,
    ) -> Result<Self> {
        let n = masses.len();
        if coords_initial.len() != n {
            return Err(Error::Invalid(format!(
                "{} masses but {} coordinate rows",
                n,
                coords_initial.len()
            )));
        }
        if let Some(m) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::Invalid(format!("non-positive atom mass {m}")));
        }
        if coords_initial.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::Invalid("non-finite coordinate".into()));
        }
        validate_bonds(&bonds, n)?;
        let angles = match angles {
            Some(a) => {
                validate_angles(&a, &bonds, n)?;
                a
            }
            None => build_angles(&bonds, n),
        };
        let trivalent = degrees(&bonds, n).iter().all(|&d| d == 3);
        if trivalent && (2 * bonds.len() != 3 * n || angles.len() != 3 * n) {
            return Err(Error::Topology(format!(
                "trivalent molecule with {} atoms must have {} bonds and {} angles, found {} and {}",
                n,
                3 * n / 2,
                3 * n,
                bonds.len(),
                angles.len()
            )));
        }
        Ok(Molecule {
            name: name.into(),
            masses,
            bonds,
            angles,
            coords_initial,
            coords_equilibrium: None,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.masses.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn center_of_mass(&self, coords: &[Vec3]) -> Vec3 {
        let weighted = coords
            .iter()
            .zip(&self.masses)
            .fold(Vec3::zeros(), |acc, (x, m)| acc + x * *m);
        weighted / self.total_mass()
    }

    /// Equilibrium coordinates, or an error if the molecule has not been minimized.
    pub fn equilibrium(&self) -> Result<&[Vec3]> {
        self.coords_equilibrium
            .as_deref()
            .ok_or_else(|| Error::Invalid(format!("{}: no equilibrium coordinates", self.name)))
    }
}

fn degrees(bonds: &[[usize; 2]], n: usize) -> Vec<usize> {
    let mut deg = vec![0; n];
    for &[a, b] in bonds {
        deg[a] += 1;
        deg[b] += 1;
    }
    deg
}

fn validate_bonds(bonds: &[[usize; 2]], n: usize) -> Result<()> {
    if n < 2 || bonds.is_empty() {
        return Err(Error::Topology(format!(
            "degenerate topology: {} atoms, {} bonds",
            n,
            bonds.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for (k, &[a, b]) in bonds.iter().enumerate() {
        if a >= n || b >= n {
            return Err(Error::Topology(format!(
                "bond {k} ({a}, {b}) references an atom index >= {n}"
            )));
        }
        if a == b {
            return Err(Error::Topology(format!("bond {k} joins atom {a} to itself")));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::Topology(format!("duplicate bond ({a}, {b})")));
        }
    }
    // Connectivity by depth-first search from atom 0.
    let adj = adjacency(bonds, n);
    let mut visited = vec![false; n];
    let mut stack = vec![0];
    visited[0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !visited[w] {
                visited[w] = true;
                stack.push(w);
            }
        }
    }
    if let Some(lonely) = visited.iter().position(|v| !v) {
        return Err(Error::Topology(format!(
            "bond graph is disconnected (atom {lonely} unreachable from atom 0)"
        )));
    }
    Ok(())
}

fn validate_angles(angles: &[[usize; 3]], bonds: &[[usize; 2]], n: usize) -> Result<()> {
    let bonded: BTreeSet<(usize, usize)> =
        bonds.iter().map(|&[a, b]| (a.min(b), a.max(b))).collect();
    let has = |a: usize, b: usize| bonded.contains(&(a.min(b), a.max(b)));
    for (k, &[c, d, e]) in angles.iter().enumerate() {
        if c >= n || d >= n || e >= n {
            return Err(Error::Topology(format!("angle {k} references an atom index >= {n}")));
        }
        if c == e {
            return Err(Error::Topology(format!("angle {k} ({c}, {d}, {e}) has C == E")));
        }
        if !has(c, d) || !has(d, e) {
            return Err(Error::Topology(format!(
                "angle {k} ({c}, {d}, {e}) is not spanned by two bonds"
            )));
        }
    }
    Ok(())
}

fn adjacency(bonds: &[[usize; 2]], n: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &[a, b] in bonds {
        if a < n && b < n {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// All bond angles: one `(c, d, e)` per vertex `d` and unordered pair of its
/// neighbours, `c < e`, sorted by `(d, c, e)`.
pub fn build_angles(bonds: &[[usize; 2]], n: usize) -> Vec<[usize; 3]> {
    let adj = adjacency(bonds, n);
    let mut angles = Vec::new();
    for (d, nbrs) in adj.iter().enumerate() {
        for (i, &c) in nbrs.iter().enumerate() {
            for &e in &nbrs[i + 1..] {
                angles.push([c, d, e]);
            }
        }
    }
    angles
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Vec<Vec3> {
        (0..n).map(|i| Vec3::new(i as f64, 0.1 * (i * i) as f64, 0.0)).collect()
    }

    #[test]
    fn single_bond_has_no_angles() {
        assert!(build_angles(&[[0, 1]], 2).is_empty());
    }

    #[test]
    fn star_angles() {
        let angles = build_angles(&[[0, 1], [0, 2], [0, 3]], 4);
        assert_eq!(angles, vec![[1, 0, 2], [1, 0, 3], [2, 0, 3]]);
    }

    #[test]
    fn angles_ignore_bond_order() {
        let a = build_angles(&[[0, 1], [1, 2], [2, 3], [3, 0], [1, 3]], 4);
        let b = build_angles(&[[3, 1], [0, 3], [3, 2], [2, 1], [1, 0]], 4);
        assert_eq!(a, b);
    }

    #[test]
    fn single_atom_is_degenerate() {
        let err = Molecule::new("x", vec![12.0], vec![], None, vec![Vec3::zeros()]).unwrap_err();
        assert!(matches!(err, Error::Topology(_)), "{err}");
    }

    #[test]
    fn disconnected_graph_rejected() {
        let err = Molecule::new("x", vec![1.0; 4], vec![[0, 1], [2, 3]], None, line(4)).unwrap_err();
        assert!(err.to_string().contains("disconnected"), "{err}");
    }

    #[test]
    fn out_of_range_and_duplicates_rejected() {
        assert!(Molecule::new("x", vec![1.0; 2], vec![[0, 2]], None, line(2)).is_err());
        assert!(Molecule::new("x", vec![1.0; 2], vec![[0, 1], [1, 0]], None, line(2)).is_err());
        assert!(Molecule::new("x", vec![1.0; 2], vec![[1, 1]], None, line(2)).is_err());
    }

    #[test]
    fn explicit_angles_must_follow_bonds() {
        let bonds = vec![[0, 1], [1, 2]];
        assert!(Molecule::new("x", vec![1.0; 3], bonds.clone(), Some(vec![[0, 1, 2]]), line(3)).is_ok());
        assert!(Molecule::new("x", vec![1.0; 3], bonds.clone(), Some(vec![[1, 0, 2]]), line(3)).is_err());
        assert!(Molecule::new("x", vec![1.0; 3], bonds, Some(vec![[0, 1, 0]]), line(3)).is_err());
    }

    #[test]
    fn center_of_mass_is_mass_weighted() {
        let mol = Molecule::new(
            "x",
            vec![1.0, 3.0],
            vec![[0, 1]],
            None,
            vec![Vec3::zeros(), Vec3::new(4.0, 0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(mol.center_of_mass(&mol.coords_initial), Vec3::new(3.0, 0.0, 0.0));
    }
}
