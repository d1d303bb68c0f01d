use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripPoint {
    pub y: f64,
    pub h: f64,
}

/// Poisson points of unit intensity on `(0,1) x (0,H)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonStrip {
    height: f64,
    points: Vec<StripPoint>,
    consumed: Vec<bool>,
    seed: Option<u64>,
}

impl PoissonStrip {
    pub fn from_points(height: f64, points: Vec<StripPoint>) -> Result<Self> {
        check_height(height)?;
        for p in &points {
            if !(p.y > 0.0 && p.y < 1.0 && p.h > 0.0 && p.h < height) {
                return Err(Error::Domain(format!(
                    "point ({}, {}) outside (0,1) x (0,{height})",
                    p.y, p.h
                )));
            }
        }
        let consumed = vec![false; points.len()];
        Ok(Self { height, points, consumed, seed: None })
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn points(&self) -> &[StripPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_consumed(&self, id: usize) -> bool {
        self.consumed[id]
    }

    pub fn consumed_count(&self) -> usize {
        self.consumed.iter().filter(|c| **c).count()
    }

    pub(crate) fn mark_consumed(&mut self, id: usize) -> Result<()> {
        if self.consumed[id] {
            return Err(Error::Internal(format!("point {id} consumed twice")));
        }
        self.consumed[id] = true;
        Ok(())
    }

    /// Unconsumed points with their ids.
    pub fn unconsumed(&self) -> impl Iterator<Item = (usize, StripPoint)> + '_ {
        self.points
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.consumed[*i])
            .map(|(i, p)| (i, *p))
    }
}

fn check_height(height: f64) -> Result<()> {
    if !(height > 0.0 && height.is_finite()) {
        return Err(Error::Domain(format!("strip height must be positive and finite, got {height}")));
    }
    Ok(())
}

fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

pub fn sample_strip(height: f64, seed: u64) -> Result<PoissonStrip> {
    check_height(height)?;
    let mut rng = stream_rng(seed, 0);
    let count = Poisson::new(height)
        .map_err(|e| Error::Domain(format!("poisson({height}): {e}")))?
        .sample(&mut rng) as usize;
    let points = (0..count)
        .map(|_| StripPoint { y: open_unit(&mut rng), h: open_unit(&mut rng) * height })
        .collect::<Vec<_>>();
    Ok(PoissonStrip { height, consumed: vec![false; count], points, seed: Some(seed) })
}
