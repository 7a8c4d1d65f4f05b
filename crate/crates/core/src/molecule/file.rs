//! Molecule file format (TOML):
//!
//! ```toml
//! name = "c20"
//! mass = 12.011                 # or: masses = [12.011, ...] (one per atom)
//! coordinates = [[x, y, z], ...] # starting guess, Å
//! bonds = [[i, j], ...]          # zero-based atom indices
//! angles = [[c, d, e], ...]      # optional, d is the vertex
//! equilibrium = [[x, y, z], ...] # optional, written by `mdcli minimize`
//! ```

use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use super::Molecule;
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMolecule {
    name: String,
    mass: Option<f64>,
    masses: Option<Vec<f64>>,
    coordinates: Spanned<Vec<[f64; 3]>>,
    bonds: Vec<Spanned<[usize; 2]>>,
    angles: Option<Vec<Spanned<[usize; 3]>>>,
    equilibrium: Option<Spanned<Vec<[f64; 3]>>>,
}

#[derive(Serialize)]
struct OutMolecule<'a> {
    name: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    masses: Option<&'a [f64]>,
    coordinates: Vec<[f64; 3]>,
    bonds: &'a [[usize; 2]],
    angles: &'a [[usize; 3]],
    #[serde(skip_serializing_if = "Option::is_none")]
    equilibrium: Option<Vec<[f64; 3]>>,
}

fn line_of(text: &str, span: Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

pub fn load_molecule(path: impl AsRef<Path>) -> Result<Molecule> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_molecule(&text, path)
}

/// Parses molecule text; `origin` is only used to label errors.
pub fn parse_molecule(text: &str, origin: &Path) -> Result<Molecule> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: origin.to_owned(),
        line,
        msg,
    };
    let raw: RawMolecule = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| line_of(text, s));
        perr(line, e.message().to_string())
    })?;

    let coords_span = raw.coordinates.span();
    let coords: Vec<Vec3> = raw
        .coordinates
        .into_inner()
        .into_iter()
        .map(Vec3::from)
        .collect();
    let n = coords.len();
    let masses = match (raw.mass, raw.masses) {
        (Some(m), None) => vec![m; n],
        (None, Some(ms)) => ms,
        (Some(_), Some(_)) => return Err(perr(1, "give either `mass` or `masses`, not both".into())),
        (None, None) => return Err(perr(1, "missing `mass` or `masses`".into())),
    };
    if masses.len() != n {
        return Err(perr(
            line_of(text, coords_span),
            format!("{} masses for {} atoms", masses.len(), n),
        ));
    }

    // Index errors are reported at the offending row.
    for b in &raw.bonds {
        let [i, j] = *b.get_ref();
        if i >= n || j >= n || i == j {
            return Err(perr(
                line_of(text, b.span()),
                format!("bond [{i}, {j}] invalid for {n} atoms"),
            ));
        }
    }
    if let Some(angles) = &raw.angles {
        for a in angles {
            if a.get_ref().iter().any(|&i| i >= n) {
                return Err(perr(
                    line_of(text, a.span()),
                    format!("angle {:?} references an atom index >= {n}", a.get_ref()),
                ));
            }
        }
    }

    let bonds: Vec<[usize; 2]> = raw.bonds.into_iter().map(Spanned::into_inner).collect();
    let angles = raw
        .angles
        .map(|a| a.into_iter().map(Spanned::into_inner).collect());
    let mut mol = Molecule::new(raw.name, masses, bonds, angles, coords).map_err(|e| match e {
        Error::Topology(msg) | Error::Invalid(msg) => perr(1, msg),
        other => other,
    })?;
    if let Some(eq) = raw.equilibrium {
        let line = line_of(text, eq.span());
        let eq: Vec<Vec3> = eq.into_inner().into_iter().map(Vec3::from).collect();
        if eq.len() != n {
            return Err(perr(line, format!("{} equilibrium rows for {} atoms", eq.len(), n)));
        }
        mol.coords_equilibrium = Some(eq);
    }
    Ok(mol)
}

pub fn write_molecule(mol: &Molecule, path: impl AsRef<Path>, header: &str) -> Result<()> {
    let path = path.as_ref();
    let uniform = mol.masses.windows(2).all(|w| w[0] == w[1]);
    let to_rows = |c: &[Vec3]| c.iter().map(|p| [p.x, p.y, p.z]).collect::<Vec<_>>();
    let out = OutMolecule {
        name: &mol.name,
        mass: uniform.then(|| mol.masses[0]),
        masses: (!uniform).then_some(mol.masses.as_slice()),
        coordinates: to_rows(&mol.coords_initial),
        bonds: &mol.bonds,
        angles: &mol.angles,
        equilibrium: mol.coords_equilibrium.as_deref().map(to_rows),
    };
    let body = toml::to_string(&out).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut text = String::new();
    for line in header.lines() {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(&body);
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn parse(text: &str) -> Result<Molecule> {
        parse_molecule(text, &PathBuf::from("test.toml"))
    }

    #[test]
    fn dimer_parses_with_uniform_mass() {
        let mol = parse("name = \"d\"\nmass = 12.0\ncoordinates = [[0,0,0],[1.5,0,0]]\nbonds = [[0,1]]\n")
            .unwrap();
        assert_eq!(mol.masses, vec![12.0, 12.0]);
        assert!(mol.angles.is_empty());
    }

    #[test]
    fn bad_index_reports_line() {
        let text = "name = \"d\"\nmass = 1.0\ncoordinates = [[0,0,0],[1,0,0]]\nbonds = [\n  [0, 1],\n  [0, 7],\n]\n";
        match parse(text).unwrap_err() {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 6, "{msg}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn syntax_error_reports_line() {
        let text = "name = \"d\"\nmass = 1.0\ncoordinates = [[0,0,0],[1,0,0]\nbonds = [[0,1]]\n";
        assert!(matches!(parse(text).unwrap_err(), Error::Parse { line, .. } if line >= 3));
    }

    #[test]
    fn single_atom_rejected() {
        let err = parse("name = \"a\"\nmass = 1.0\ncoordinates = [[0,0,0]]\nbonds = []\n").unwrap_err();
        assert!(err.to_string().contains("degenerate"), "{err}");
    }
}
