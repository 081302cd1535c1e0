use std::io::Write;

use rand::RngCore;

use super::{ControlLaw, OffspringLaw};

/// One realised path `Z_0, …, Z_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    pub values: Vec<u64>,
    pub seed: u64,
    pub stream: u64,
    pub model_id: String,
}

impl Trajectory {
    pub fn generations(&self) -> usize {
        self.values.len() - 1
    }

    /// CSV with header `generation,z`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "generation,z")?;
        for (g, z) in self.values.iter().enumerate() {
            writeln!(out, "{g},{z}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenerationOverflow;

/// `Σ_{j=1}^{φ(z)} X_j`; the empty sum is 0.
pub fn sample_generation(
    z: u64,
    offspring: &OffspringLaw,
    control: &ControlLaw,
    rng: &mut dyn RngCore,
) -> Result<u64, GenerationOverflow> {
    let parents = control.sample(z, rng).ok_or(GenerationOverflow)?;
    if parents == 0 {
        return Ok(0);
    }
    offspring.sample_sum(parents, rng).ok_or(GenerationOverflow)
}
