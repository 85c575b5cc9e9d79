use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::arg_err;
use crate::network::System;
use crate::{Error, Result};

/// Closed-form pair potentials used to label synthetic systems.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    /// `4 eps ((sigma / r)^12 - (sigma / r)^6)`.
    LennardJones { epsilon: f64, sigma: f64 },
    /// `k / 2 (r - r0)^2`.
    Harmonic { k: f64, r0: f64 },
}

impl Potential {
    pub const LJ: Self = Self::LennardJones {
        epsilon: 1.0,
        sigma: 1.0,
    };
    pub const HARMONIC: Self = Self::Harmonic { k: 1.0, r0: 1.0 };

    pub fn pair(&self, r: f64) -> f64 {
        match *self {
            Self::LennardJones { epsilon, sigma } => {
                let s6 = (sigma / r).powi(6);
                4.0 * epsilon * (s6 * s6 - s6)
            }
            Self::Harmonic { k, r0 } => 0.5 * k * (r - r0).powi(2),
        }
    }

    /// Sum of the pair potential over all unordered pairs.
    pub fn energy(&self, positions: &[[f64; 3]]) -> f64 {
        let mut e = 0.0;
        for (i, a) in positions.iter().enumerate() {
            for b in &positions[i + 1..] {
                let r =
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
                e += self.pair(r);
            }
        }
        e
    }

    /// Natural length scale: `sigma` or `r0`.
    pub fn length(&self) -> f64 {
        match *self {
            Self::LennardJones { sigma, .. } => sigma,
            Self::Harmonic { r0, .. } => r0,
        }
    }
}

impl FromStr for Potential {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lennard_jones" | "lj" => Ok(Self::LJ),
            "harmonic" => Ok(Self::HARMONIC),
            other => arg_err(format!(
                "unknown potential {other:?} (expected lennard_jones or harmonic)"
            )),
        }
    }
}

/// Parameters of a synthetic dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSpec {
    pub n: usize,
    pub min_atoms: usize,
    pub max_atoms: usize,
    pub seed: u64,
    pub potential: Potential,
    /// Smallest allowed pair distance, in units of the potential's length.
    pub min_distance: f64,
    /// Box side for `m` atoms is `box_scale * length * m^(1/3)`.
    pub box_scale: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            n: 500,
            min_atoms: 2,
            max_atoms: 6,
            seed: 0,
            potential: Potential::LJ,
            min_distance: 0.95,
            box_scale: 1.5,
        }
    }
}

const MAX_TRIES: usize = 10_000;

/// Samples labelled systems with positions uniform in a box, rejecting
/// any atom closer than `min_distance` to one already placed.
pub fn gen_dataset(spec: &DatasetSpec) -> Result<Vec<System>> {
    if spec.n == 0 {
        return arg_err("n must be at least 1");
    }
    if spec.min_atoms == 0 || spec.min_atoms > spec.max_atoms {
        return arg_err(format!(
            "bad atom range {}..={}",
            spec.min_atoms, spec.max_atoms
        ));
    }
    let length = spec.potential.length();
    let d_min = spec.min_distance * length;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.n);
    for k in 0..spec.n {
        let m = rng.gen_range(spec.min_atoms..=spec.max_atoms);
        let side = spec.box_scale * length * (m as f64).cbrt();
        let mut positions: Vec<[f64; 3]> = Vec::with_capacity(m);
        while positions.len() < m {
            let mut placed = false;
            for _ in 0..MAX_TRIES {
                let p = [0, 1, 2].map(|_| rng.gen_range(0.0..side));
                let clear = positions.iter().all(|q| {
                    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)
                        >= d_min * d_min
                });
                if clear {
                    positions.push(p);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::Argument(format!(
                    "system {k}: could not place atom {} of {m} after {MAX_TRIES} tries",
                    positions.len() + 1
                )));
            }
        }
        let energy = spec.potential.energy(&positions);
        out.push(System::new(positions, vec![0; m])?.with_energy(energy));
    }
    Ok(out)
}

/// Writes one JSON object per line.
pub fn write_dataset(path: &Path, systems: &[System]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in systems {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a JSON-lines dataset; blank lines are skipped.
pub fn read_dataset(path: &Path) -> Result<Vec<System>> {
    let name = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            source_name: name.clone(),
            line: i + 1,
            message,
        };
        let s: System = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        s.validate().map_err(|e| parse_err(e.to_string()))?;
        out.push(s);
    }
    Ok(out)
}
