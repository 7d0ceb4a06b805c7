// SPDX-License-Identifier: Apache-2.0

//! Seeded stream of candidate condensers.
//!
//! Candidate `k` depends only on the seed and `k`, never on the region being
//! probed, so a region scans the same prefix of the stream as any region
//! containing it and its accepted candidates form a subset of theirs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{
    make_box_condenser, BBox, BoxCondenserParams, Frame, ImplicitSet, Point, RingCondenser,
    IDENTITY_FRAME, MAX_DIM,
};
use crate::mappings::MappingSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CandidateShape {
    BallRing {
        center: Vec<f64>,
        r_f: f64,
        r_g: f64,
    },
    Box {
        center: Vec<f64>,
        lambda: Vec<f64>,
        r: f64,
        t: f64,
    },
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub index: usize,
    pub shape: CandidateShape,
    pub ring: RingCondenser,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondenserSampler {
    /// Region that candidate centers are drawn from.
    pub reference: BBox,
    pub seed: u64,
    /// Range of `r_G / r_F` for ball rings.
    pub ratio_range: (f64, f64),
    /// Aspect values `t` of box candidates.
    pub aspects: Vec<f64>,
    /// Outer size range relative to the largest extent of `reference`,
    /// drawn log-uniformly.
    pub size_range: (f64, f64),
}

impl CondenserSampler {
    pub fn new(reference: BBox, seed: u64) -> Self {
        CondenserSampler {
            reference,
            seed,
            ratio_range: (1.5, 4.0),
            aspects: vec![0.1, 0.5, 1.0],
            size_range: (1.0 / 64.0, 0.5),
        }
    }

    fn rng(&self, k: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        rng
    }

    /// Candidate `k`. Even indices are concentric ball rings; odd indices are
    /// box condensers cycling through the aspect values, aligned with the
    /// singular directions of `Dφ` at the preimage of their center.
    pub fn candidate(
        &self,
        k: usize,
        phi: &MappingSpec,
        ambient: &ImplicitSet,
    ) -> Result<Candidate> {
        let dim = self.reference.dim;
        let mut rng = self.rng(k);
        let mut center = [0.0; MAX_DIM];
        for i in 0..dim {
            center[i] = self.reference.lo[i] + self.reference.extent(i) * rng.random::<f64>();
        }
        let extent = (0..dim)
            .map(|i| self.reference.extent(i))
            .fold(0.0, f64::max);
        let (a, b) = self.size_range;
        let size = extent * (a.ln() + (b.ln() - a.ln()) * rng.random::<f64>()).exp();
        if k.is_multiple_of(2) {
            let (lo, hi) = self.ratio_range;
            let ratio = lo + (hi - lo) * rng.random::<f64>();
            let r_g = size;
            let r_f = size / ratio;
            let f = ImplicitSet::ball(center, r_f, dim)?;
            let g = ImplicitSet::open_ball(center, r_g, dim)?;
            let ring = RingCondenser::new(format!("sample{k}"), f, g, ambient.clone())?;
            Ok(Candidate {
                index: k,
                shape: CandidateShape::BallRing {
                    center: center[..dim].to_vec(),
                    r_f,
                    r_g,
                },
                ring,
            })
        } else {
            let t = self.aspects[(k / 2) % self.aspects.len()];
            let (lambda, frame) = box_alignment(phi, &center);
            let r = size / (1.0 + t * lambda[0]);
            let params = BoxCondenserParams::new(lambda.clone(), r, t)?
                .centered_at(center)
                .with_frame(frame);
            let boxed = make_box_condenser(&params)?;
            let ring = RingCondenser::new(format!("sample{k}"), boxed.f, boxed.g, ambient.clone())?;
            Ok(Candidate {
                index: k,
                shape: CandidateShape::Box {
                    center: center[..dim].to_vec(),
                    lambda,
                    r,
                    t,
                },
                ring,
            })
        }
    }
}

/// Normalized singular values of `Dφ(φ⁻¹(y))` (non-increasing, first = 1)
/// and the matching left singular vectors as box axes. Falls back to the
/// coordinate frame where the derivative is unavailable or degenerate.
fn box_alignment(phi: &MappingSpec, y: &Point) -> (Vec<f64>, Frame) {
    let dim = phi.dim();
    let fallback = (vec![1.0; dim], IDENTITY_FRAME);
    let x = phi.inverse(y);
    let Some(jac) = phi.jacobian(&x) else {
        return fallback;
    };
    let svd = jac.svd(true, false);
    let Some(u) = svd.u else {
        return fallback;
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let top = svd.singular_values[order[0]];
    if !(top > 0.0) || svd.singular_values[order[dim - 1]] / top < 1e-6 {
        return fallback;
    }
    let lambda: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i] / top)
        .collect();
    let mut frame = IDENTITY_FRAME;
    for (row, &i) in order.iter().enumerate() {
        for c in 0..dim {
            frame[row][c] = u[(c, i)];
        }
    }
    (lambda, frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point2;
    use crate::mappings::MappingKind;

    #[test]
    fn stream_is_deterministic_and_region_free() {
        let sq = ImplicitSet::aabox(point2(0.0, 0.0), point2(1.0, 1.0), 2).unwrap();
        let phi = MappingSpec::identity(sq.clone()).unwrap();
        let wide = ImplicitSet::aabox(point2(-2.0, -2.0), point2(3.0, 3.0), 2).unwrap();
        let s = CondenserSampler::new(*sq.bbox(), 7);
        let a = s.candidate(5, &phi, &wide).unwrap();
        let b = s.candidate(5, &phi, &wide).unwrap();
        assert_eq!(a.shape, b.shape);
        assert!(matches!(a.shape, CandidateShape::Box { .. }));
        let c = s.candidate(4, &phi, &wide).unwrap();
        assert!(matches!(c.shape, CandidateShape::BallRing { .. }));
    }

    #[test]
    fn boxes_follow_the_linearization() {
        let sq = ImplicitSet::aabox(point2(0.0, 0.0), point2(1.0, 1.0), 2).unwrap();
        let phi = MappingSpec::new(MappingKind::diag(&[2.0, 1.0]), sq).unwrap();
        let (lambda, frame) = box_alignment(&phi, &point2(1.0, 0.5));
        assert!((lambda[0] - 1.0).abs() < 1e-12 && (lambda[1] - 0.5).abs() < 1e-12);
        assert!((frame[0][0].abs() - 1.0).abs() < 1e-12);
    }
}
