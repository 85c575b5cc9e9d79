use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::system::System;
use crate::covariant::{CovariantVector, MixWeights, RepType};
use crate::error::arg_err;
use crate::gates::{gate_output_type, GateConfig, GateKind, GateSpec};
use crate::Result;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Hyperparameters of a [`Model`].
///
/// Hidden level `k` (1-based) evaluates `hidden[k - 1]`; the root gate uses
/// `root`. Leaves carry `channels` scalar channels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub channels: usize,
    pub n_species: usize,
    pub depth: usize,
    pub cutoff: f64,
    pub hidden: Vec<GateSpec>,
    pub root: GateSpec,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::with_channels(4)
    }
}

impl ModelConfig {
    /// The default architecture with `c` channels: one level of moment
    /// gates (order 2) over neighbourhoods of radius 3, and a moment root.
    pub fn with_channels(c: usize) -> Self {
        Self {
            channels: c,
            n_species: 1,
            depth: 1,
            cutoff: 3.0,
            hidden: vec![GateSpec::new(
                GateKind::Moment,
                &[2, 4, 6, 8, 10, 14],
                2,
                RepType::uniform(c, 2),
            )
            .with_moment_order(2)],
            root: GateSpec::new(GateKind::Moment, &[2], 2, RepType::scalars(c))
                .with_moment_order(2),
        }
    }

    pub fn leaf_type(&self) -> RepType {
        RepType::scalars(self.channels)
    }

    /// Type of the children seen by the gate in parameter slot `slot`
    /// (hidden levels first, root last).
    pub fn child_type(&self, slot: usize) -> RepType {
        if slot == 0 {
            self.leaf_type()
        } else {
            self.hidden[slot - 1].output_type.clone()
        }
    }

    pub fn gate_spec(&self, slot: usize) -> &GateSpec {
        if slot < self.depth {
            &self.hidden[slot]
        } else {
            &self.root
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return arg_err("channels must be at least 1");
        }
        if self.n_species == 0 {
            return arg_err("n_species must be at least 1");
        }
        if self.depth == 0 {
            return arg_err("depth must be at least 1");
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return arg_err(format!("cutoff must be positive, got {}", self.cutoff));
        }
        if self.hidden.len() != self.depth {
            return arg_err(format!(
                "{} hidden gate specs for depth {}",
                self.hidden.len(),
                self.depth
            ));
        }
        for spec in &self.hidden {
            spec.validate()?;
        }
        self.root.validate()?;
        if self.root.output_type.multiplicity(0) == 0 {
            return arg_err("the root gate must produce at least one scalar channel");
        }
        for slot in 0..=self.depth {
            let pre = gate_output_type(&self.child_type(slot), self.gate_spec(slot));
            if pre.is_empty() {
                return arg_err(format!(
                    "gate {slot} produces nothing from children of type {}",
                    self.child_type(slot)
                ));
            }
        }
        Ok(())
    }
}

/// Learnable state: species embeddings, one gate per level, and a real
/// readout over the root's scalar channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    /// One type-`(c)` vector per species.
    pub embeddings: Vec<CovariantVector>,
    /// `depth` hidden gates followed by the root gate.
    pub gates: Vec<GateConfig>,
    /// Weights on the real parts of the root's scalars, then on the
    /// imaginary parts.
    pub readout: Vec<f64>,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gates = Vec::with_capacity(config.depth + 1);
        for slot in 0..=config.depth {
            gates.push(GateConfig::new(
                config.gate_spec(slot).clone(),
                &config.child_type(slot),
                &mut rng,
            )?);
        }
        let embeddings = (0..config.n_species)
            .map(|_| CovariantVector::random(&config.leaf_type(), &mut rng))
            .collect();
        let n = 2 * config.root.output_type.multiplicity(0);
        let a = 1.0 / (n as f64).sqrt();
        let readout = (0..n).map(|_| rng.gen_range(-a..=a)).collect();
        let model = Self {
            config,
            embeddings,
            gates,
            readout,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = &self.config;
        cfg.validate()?;
        if self.embeddings.len() != cfg.n_species {
            return arg_err(format!(
                "{} embeddings for {} species",
                self.embeddings.len(),
                cfg.n_species
            ));
        }
        if let Some(e) = self
            .embeddings
            .iter()
            .find(|e| e.rep_type() != &cfg.leaf_type())
        {
            return arg_err(format!(
                "embedding of type {}, expected {}",
                e.rep_type(),
                cfg.leaf_type()
            ));
        }
        if self.gates.len() != cfg.depth + 1 {
            return arg_err(format!(
                "{} gates for depth {}",
                self.gates.len(),
                cfg.depth
            ));
        }
        for (slot, g) in self.gates.iter().enumerate() {
            if &g.spec != cfg.gate_spec(slot) {
                return arg_err(format!("gate {slot} does not match the hyperparameters"));
            }
            g.validate(&cfg.child_type(slot))?;
        }
        let n = 2 * cfg.root.output_type.multiplicity(0);
        if self.readout.len() != n {
            return arg_err(format!(
                "readout has {} weights, root has {} real scalars",
                self.readout.len(),
                n
            ));
        }
        Ok(())
    }

    /// Checks that every species of `system` has an embedding.
    pub fn check_system(&self, system: &System) -> Result<()> {
        system.validate()?;
        match system.species.iter().find(|&&s| s >= self.config.n_species) {
            Some(s) => arg_err(format!(
                "species {s} but the model knows {}",
                self.config.n_species
            )),
            None => Ok(()),
        }
    }

    /// Real scalar read off the root state's `ell = 0` part.
    pub fn readout_value(&self, root: &CovariantVector) -> f64 {
        let tau = self.readout.len() / 2;
        let Some(p) = root.part(0) else { return 0.0 };
        (0..tau.min(p.ncols()))
            .map(|k| self.readout[k] * p[[0, k]].re + self.readout[tau + k] * p[[0, k]].im)
            .sum()
    }

    pub fn n_params(&self) -> usize {
        self.gates
            .iter()
            .map(|g| g.weights.real_len())
            .sum::<usize>()
            + self
                .embeddings
                .iter()
                .map(|e| 2 * e.rep_type().dim())
                .sum::<usize>()
            + self.readout.len()
    }

    /// All real parameters: gate weights (block by block, row-major, real
    /// then imaginary part of each entry), embeddings, readout.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        push_parts(
            &mut out,
            &self.gates.iter().map(|g| &g.weights).collect::<Vec<_>>(),
            &self.embeddings,
        );
        out.extend_from_slice(&self.readout);
        out
    }

    /// Inverse of [`params`](Self::params).
    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return arg_err(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            ));
        }
        let used = params.len() - self.readout.len();
        let mut it = params[..used]
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]));
        for g in &mut self.gates {
            for b in g.weights.blocks_mut() {
                for z in b.iter_mut() {
                    *z = it.next().expect("length checked");
                }
            }
        }
        for e in &mut self.embeddings {
            let ty = e.rep_type().clone();
            let data: Vec<Complex64> = it.by_ref().take(ty.dim()).collect();
            *e = CovariantVector::from_flat(&ty, &data)?;
        }
        self.readout.copy_from_slice(&params[used..]);
        Ok(())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_VERSION,
            hyperparameters: self.config.clone(),
            gates: self.gates.clone(),
            leaf_embeddings: self.embeddings.clone(),
            readout: self.readout.clone(),
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.format_version != CHECKPOINT_VERSION {
            return arg_err(format!(
                "checkpoint format {} is not supported (expected {CHECKPOINT_VERSION})",
                ck.format_version
            ));
        }
        let model = Self {
            config: ck.hyperparameters,
            embeddings: ck.leaf_embeddings,
            gates: ck.gates,
            readout: ck.readout,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_checkpoint())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_checkpoint(serde_json::from_str(&text)?)
    }
}

/// Appends weights and embeddings in parameter order.
pub(crate) fn push_parts(
    out: &mut Vec<f64>,
    weights: &[&MixWeights],
    embeddings: &[CovariantVector],
) {
    for w in weights {
        for b in w.blocks() {
            for z in b.iter() {
                out.push(z.re);
                out.push(z.im);
            }
        }
    }
    for e in embeddings {
        for z in e.flatten() {
            out.push(z.re);
            out.push(z.im);
        }
    }
}

/// On-disk form of a [`Model`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub hyperparameters: ModelConfig,
    pub gates: Vec<GateConfig>,
    pub leaf_embeddings: Vec<CovariantVector>,
    pub readout: Vec<f64>,
}
