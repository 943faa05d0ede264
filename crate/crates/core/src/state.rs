//! Block-structured state space: `[physical | digital | social]`, `k`
//! coordinates per block.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::mass::MassTensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    Physical,
    Digital,
    Social,
}

impl Block {
    pub const ALL: [Block; 3] = [Block::Physical, Block::Digital, Block::Social];

    pub fn index(self) -> usize {
        match self {
            Block::Physical => 0,
            Block::Digital => 1,
            Block::Social => 2,
        }
    }

    /// One-letter tag used in tables (`p`, `d`, `s`).
    pub fn tag(self) -> &'static str {
        match self {
            Block::Physical => "p",
            Block::Digital => "d",
            Block::Social => "s",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DimensionLayout {
    k: usize,
}

impl DimensionLayout {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::structural("block size k must be at least 1"));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Total state dimension, `3k`.
    pub fn dim(&self) -> usize {
        3 * self.k
    }

    pub fn block_range(&self, block: Block) -> std::ops::Range<usize> {
        let start = block.index() * self.k;
        start..start + self.k
    }
}

impl Default for DimensionLayout {
    fn default() -> Self {
        Self { k: 1 }
    }
}

/// Splits a raw coordinate vector into its three equal blocks.
pub fn split_blocks(coords: &[f64]) -> Result<(&[f64], &[f64], &[f64])> {
    if coords.is_empty() || !coords.len().is_multiple_of(3) {
        return Err(Error::structural(format!(
            "state length {} is not a positive multiple of 3",
            coords.len()
        )));
    }
    let k = coords.len() / 3;
    Ok((&coords[..k], &coords[k..2 * k], &coords[2 * k..]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhygitalState {
    layout: DimensionLayout,
    coords: DVector<f64>,
}

impl PhygitalState {
    pub fn new(layout: DimensionLayout, coords: impl Into<Vec<f64>>) -> Result<Self> {
        let coords: Vec<f64> = coords.into();
        if coords.len() != layout.dim() {
            return Err(Error::structural(format!(
                "state has {} coordinates, layout expects {}",
                coords.len(),
                layout.dim()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Numeric(format!("state coordinate {i} is not finite")));
        }
        Ok(Self {
            layout,
            coords: DVector::from_vec(coords),
        })
    }

    pub fn zeros(layout: DimensionLayout) -> Self {
        Self {
            layout,
            coords: DVector::zeros(layout.dim()),
        }
    }

    pub fn layout(&self) -> DimensionLayout {
        self.layout
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn into_coords(self) -> DVector<f64> {
        self.coords
    }

    pub fn block(&self, block: Block) -> &[f64] {
        &self.coords.as_slice()[self.layout.block_range(block)]
    }

    pub fn split_blocks(&self) -> (&[f64], &[f64], &[f64]) {
        let k = self.layout.k;
        let c = self.coords.as_slice();
        (&c[..k], &c[k..2 * k], &c[2 * k..])
    }

    pub fn record(&self, id: &str) -> StateRecord {
        let (p, d, s) = self.split_blocks();
        StateRecord {
            id: id.to_string(),
            p: p.to_vec(),
            d: d.to_vec(),
            s: s.to_vec(),
        }
    }
}

/// JSON shape of a state in output records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub id: String,
    pub p: Vec<f64>,
    pub d: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Biological,
    Synthetic,
    Platform,
    Object,
}

#[derive(Debug, Clone)]
pub struct Entity {
    pub id: String,
    pub state: PhygitalState,
    pub mass: MassTensor,
    pub kind: EntityKind,
}

impl Entity {
    pub fn new(
        id: impl Into<String>,
        state: PhygitalState,
        mass: MassTensor,
        kind: EntityKind,
    ) -> Result<Self> {
        let id = id.into();
        if kind == EntityKind::Synthetic && !mass.has_degenerate_physical_block() {
            return Err(Error::structural(format!(
                "synthetic entity `{id}` must have a zero physical row/column in its mass tensor"
            )));
        }
        Ok(Self {
            id,
            state,
            mass,
            kind,
        })
    }
}
