//! Flat morphological operators on vector images.
//!
//! Erosion and dilation take the per-pixel extremum of LUT ranks over a
//! structuring element, so every output color already occurs in the input
//! (no false colors). Opening and closing compose the two stages on the
//! rank image of a single LUT built from the original image; intermediate
//! results contain only original colors, so the table stays valid.

use crate::color::ColorImage;
use crate::error::{Error, Result};
use crate::ordering::{RankImage, RankLut, ReducedMapping};

/// A flat structuring element: a non-empty set of `(dy, dx)` offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuringElement {
    offsets: Vec<(i32, i32)>,
}

impl StructuringElement {
    /// Builds from explicit offsets. Duplicates are removed.
    pub fn from_offsets(mut offsets: Vec<(i32, i32)>) -> Result<Self> {
        offsets.sort_unstable();
        offsets.dedup();
        if offsets.is_empty() {
            return Err(Error::Config("structuring element must be non-empty".into()));
        }
        Ok(Self { offsets })
    }

    /// Centered square of odd side length (`square(3)` has 9 offsets).
    pub fn square(side: u32) -> Result<Self> {
        if side == 0 || side % 2 == 0 {
            return Err(Error::Config(format!(
                "square structuring element needs an odd side, got {side}"
            )));
        }
        let half = (side / 2) as i32;
        let mut offsets = Vec::new();
        for dy in -half..=half {
            for dx in -half..=half {
                offsets.push((dy, dx));
            }
        }
        Self::from_offsets(offsets)
    }

    /// Digital disk: all offsets with `dy^2 + dx^2 <= radius^2`.
    pub fn disk(radius: u32) -> Self {
        let r = radius as i32;
        let r2 = r * r;
        let mut offsets = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if dy * dy + dx * dx <= r2 {
                    offsets.push((dy, dx));
                }
            }
        }
        Self { offsets }
    }

    /// Plus-shaped cross with arms of the given length.
    pub fn cross(arm: u32) -> Self {
        let a = arm as i32;
        let mut offsets = vec![(0, 0)];
        for k in 1..=a {
            offsets.extend_from_slice(&[(0, k), (0, -k), (k, 0), (-k, 0)]);
        }
        offsets.sort_unstable();
        Self { offsets }
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn contains_origin(&self) -> bool {
        self.offsets.contains(&(0, 0))
    }

    /// Offsets negated, as used by the dilation's `p - s` sampling.
    fn reflected(&self) -> Vec<(i32, i32)> {
        self.offsets.iter().map(|&(dy, dx)| (-dy, -dx)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
    Close,
}

#[derive(Clone, Copy)]
enum Extremum {
    Min,
    Max,
}

/// Rank-image dilation: per-pixel maximum of `ranks(p - s)` over in-domain
/// samples. Dispatches to the rayon kernel when the `parallel` feature is on.
pub fn rank_dilate(ranks: &RankImage, se: &StructuringElement) -> Result<RankImage> {
    #[cfg(feature = "parallel")]
    return rank_dilate_par(ranks, se);
    #[cfg(not(feature = "parallel"))]
    rank_dilate_seq(ranks, se)
}

/// Rank-image erosion: per-pixel minimum of `ranks(p + s)` over in-domain samples.
pub fn rank_erode(ranks: &RankImage, se: &StructuringElement) -> Result<RankImage> {
    #[cfg(feature = "parallel")]
    return rank_erode_par(ranks, se);
    #[cfg(not(feature = "parallel"))]
    rank_erode_seq(ranks, se)
}

/// Sequential reference path of [`rank_dilate`].
pub fn rank_dilate_seq(ranks: &RankImage, se: &StructuringElement) -> Result<RankImage> {
    extremum_seq(ranks, &se.reflected(), Extremum::Max)
}

/// Sequential reference path of [`rank_erode`].
pub fn rank_erode_seq(ranks: &RankImage, se: &StructuringElement) -> Result<RankImage> {
    extremum_seq(ranks, se.offsets(), Extremum::Min)
}

#[cfg(feature = "parallel")]
pub fn rank_dilate_par(ranks: &RankImage, se: &StructuringElement) -> Result<RankImage> {
    extremum_par(ranks, &se.reflected(), Extremum::Max)
}

#[cfg(feature = "parallel")]
pub fn rank_erode_par(ranks: &RankImage, se: &StructuringElement) -> Result<RankImage> {
    extremum_par(ranks, se.offsets(), Extremum::Min)
}

/// Extremum of one output row; `None` when some pixel sees no in-domain sample.
fn extremum_row(
    input: &[u32],
    width: usize,
    height: usize,
    y: usize,
    offsets: &[(i32, i32)],
    which: Extremum,
    out_row: &mut [u32],
) -> std::result::Result<(), usize> {
    for (x, out) in out_row.iter_mut().enumerate() {
        let mut best: Option<u32> = None;
        for &(dy, dx) in offsets {
            let sy = y as i64 + dy as i64;
            let sx = x as i64 + dx as i64;
            if sy < 0 || sy >= height as i64 || sx < 0 || sx >= width as i64 {
                continue;
            }
            let r = input[sy as usize * width + sx as usize];
            best = Some(match (best, which) {
                (None, _) => r,
                (Some(b), Extremum::Min) => b.min(r),
                (Some(b), Extremum::Max) => b.max(r),
            });
        }
        match best {
            Some(b) => *out = b,
            None => return Err(x),
        }
    }
    Ok(())
}

fn extremum_seq(
    ranks: &RankImage,
    offsets: &[(i32, i32)],
    which: Extremum,
) -> Result<RankImage> {
    let (w, h) = (ranks.width(), ranks.height());
    let input = ranks.ranks();
    let mut out = vec![0u32; w * h];
    for (y, row) in out.chunks_mut(w).enumerate() {
        extremum_row(input, w, h, y, offsets, which, row)
            .map_err(|x| Error::EmptyWindow { x, y })?;
    }
    Ok(RankImage::from_parts(w, h, out))
}

#[cfg(feature = "parallel")]
fn extremum_par(
    ranks: &RankImage,
    offsets: &[(i32, i32)],
    which: Extremum,
) -> Result<RankImage> {
    use rayon::prelude::*;
    let (w, h) = (ranks.width(), ranks.height());
    let input = ranks.ranks();
    let mut out = vec![0u32; w * h];
    out.par_chunks_mut(w)
        .enumerate()
        .try_for_each(|(y, row)| {
            extremum_row(input, w, h, y, offsets, which, row)
                .map_err(|x| Error::EmptyWindow { x, y })
        })?;
    Ok(RankImage::from_parts(w, h, out))
}

fn run(op: MorphOp, image: &ColorImage, lut: &RankLut, se: &StructuringElement) -> Result<ColorImage> {
    if se.is_empty() {
        return Err(Error::Config("structuring element must be non-empty".into()));
    }
    let ranks = lut.encode(image)?;
    let result = match op {
        MorphOp::Erode => rank_erode(&ranks, se)?,
        MorphOp::Dilate => rank_dilate(&ranks, se)?,
        MorphOp::Open => rank_dilate(&rank_erode(&ranks, se)?, se)?,
        MorphOp::Close => rank_erode(&rank_dilate(&ranks, se)?, se)?,
    };
    lut.decode(&result)
}

/// Applies `op` with a LUT built once from the original image.
pub fn apply_with_lut(
    op: MorphOp,
    image: &ColorImage,
    lut: &RankLut,
    se: &StructuringElement,
) -> Result<ColorImage> {
    run(op, image, lut, se)
}

/// Applies `op` under the total order induced by `h` on this image's colors.
pub fn apply(
    op: MorphOp,
    image: &ColorImage,
    h: &ReducedMapping,
    se: &StructuringElement,
) -> Result<ColorImage> {
    let lut = RankLut::build(h, image)?;
    run(op, image, &lut, se)
}

pub fn dilate(image: &ColorImage, h: &ReducedMapping, se: &StructuringElement) -> Result<ColorImage> {
    apply(MorphOp::Dilate, image, h, se)
}

pub fn erode(image: &ColorImage, h: &ReducedMapping, se: &StructuringElement) -> Result<ColorImage> {
    apply(MorphOp::Erode, image, h, se)
}

pub fn open(image: &ColorImage, h: &ReducedMapping, se: &StructuringElement) -> Result<ColorImage> {
    apply(MorphOp::Open, image, h, se)
}

pub fn close(image: &ColorImage, h: &ReducedMapping, se: &StructuringElement) -> Result<ColorImage> {
    apply(MorphOp::Close, image, h, se)
}
