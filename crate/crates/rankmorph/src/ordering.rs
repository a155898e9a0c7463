//! Reduced mappings, the pre-orders they induce, and the look-up tables
//! that turn a pre-order into a total order on an image's finite color set.
//!
//! A reduced mapping scores every color with a real number. Comparing
//! scores gives a pre-order on colors (distinct colors may tie). A
//! [`RankLut`] breaks the remaining ties deterministically
//! (channel-lexicographic on raw values) and assigns consecutive ranks
//! `0..u-1` to the `u` unique colors of an image, so that extrema computed
//! on ranks always map back to original colors.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use crate::color::{bit_key_slice, ColorImage, ColorValue};
use crate::error::{Error, Result};
use crate::mlp::MlpParams;

/// Which channel dominates a closed-form lexicographic mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexVariant {
    /// `255 r + g + b / 255`
    Rgb,
    /// `r / 255 + 255 g + b`
    Gbr,
    /// `r + g / 255 + 255 b`
    Brg,
}

/// A scalar-valued reduced mapping `h: color -> real`.
#[derive(Debug, Clone)]
pub enum ReducedMapping {
    Lex(LexVariant),
    Learned(MlpParams),
    /// Weighted linear score `w . x` over the three channels.
    Custom([f64; 3]),
}

impl ReducedMapping {
    pub fn lex_rgb() -> Self {
        ReducedMapping::Lex(LexVariant::Rgb)
    }

    pub fn lex_gbr() -> Self {
        ReducedMapping::Lex(LexVariant::Gbr)
    }

    pub fn lex_brg() -> Self {
        ReducedMapping::Lex(LexVariant::Brg)
    }

    /// The three lexicographic mappings, in R-G-B, G-B-R, B-R-G order.
    pub fn lex_family() -> Vec<Self> {
        vec![Self::lex_rgb(), Self::lex_gbr(), Self::lex_brg()]
    }

    /// Scores a color. All variants require 3 channels.
    pub fn score(&self, x: &ColorValue) -> Result<f64> {
        self.score_slice(x.channels())
    }

    pub(crate) fn score_slice(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 3 {
            return Err(Error::Dimension {
                expected: 3,
                got: x.len(),
            });
        }
        Ok(match self {
            ReducedMapping::Lex(v) => eval_lex(*v, x),
            ReducedMapping::Learned(p) => p.forward_unchecked(x),
            ReducedMapping::Custom(w) => w[0] * x[0] + w[1] * x[1] + w[2] * x[2],
        })
    }

    /// The pre-order induced by the mapping: compares `h(x)` and `h(y)` as
    /// reals. `Equal` signals a tie of scores, not equality of colors.
    pub fn compare(&self, x: &ColorValue, y: &ColorValue) -> Result<Ordering> {
        if x.dim() != y.dim() {
            return Err(Error::Dimension {
                expected: x.dim(),
                got: y.dim(),
            });
        }
        let hx = self.score(x)?;
        let hy = self.score(y)?;
        Ok(hx.partial_cmp(&hy).unwrap_or(Ordering::Equal))
    }
}

fn eval_lex(variant: LexVariant, x: &[f64]) -> f64 {
    let (r, g, b) = (x[0], x[1], x[2]);
    match variant {
        LexVariant::Rgb => 255.0 * r + g + b / 255.0,
        LexVariant::Gbr => r / 255.0 + 255.0 * g + b,
        LexVariant::Brg => r + g / 255.0 + 255.0 * b,
    }
}

/// One look-up table entry: a color and its score under the mapping that
/// built the table. The entry's rank is its position in the table.
#[derive(Debug, Clone)]
pub struct LutEntry {
    pub color: ColorValue,
    pub score: f64,
}

/// Bijection between an image's unique colors and ranks `0..u-1`.
///
/// Ranks ascend with the score; equal scores are ordered
/// channel-lexicographically so the table is deterministic.
#[derive(Debug, Clone)]
pub struct RankLut {
    entries: Vec<LutEntry>,
    index: HashMap<Vec<u64>, u32>,
}

/// Scalar image of LUT ranks, same grid as the image it encodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankImage {
    width: usize,
    height: usize,
    ranks: Vec<u32>,
}

impl RankImage {
    pub(crate) fn from_parts(width: usize, height: usize, ranks: Vec<u32>) -> Self {
        debug_assert_eq!(ranks.len(), width * height);
        Self {
            width,
            height,
            ranks,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rank(&self, x: usize, y: usize) -> u32 {
        self.ranks[y * self.width + x]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    /// Pixelwise `<=` against another rank image on the same grid.
    pub fn le(&self, other: &RankImage) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.ranks.iter().zip(&other.ranks).all(|(a, b)| a <= b)
    }
}

impl RankLut {
    /// Builds the LUT for the unique colors of `image` under `h`.
    pub fn build(h: &ReducedMapping, image: &ColorImage) -> Result<Self> {
        let colors = image.unique_colors();
        let mut scores = Vec::with_capacity(colors.len());
        for c in &colors {
            scores.push(h.score(c)?);
        }
        Self::from_scored_colors(colors, scores)
    }

    /// Builds the LUT from explicit per-color scores (e.g. Borda scores).
    /// Colors must be distinct; non-finite scores are rejected.
    pub fn from_scored_colors(colors: Vec<ColorValue>, scores: Vec<f64>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::InvalidValue("cannot build a LUT with no colors".into()));
        }
        if colors.len() != scores.len() {
            return Err(Error::InvalidValue(format!(
                "{} colors but {} scores",
                colors.len(),
                scores.len()
            )));
        }
        for (c, &s) in colors.iter().zip(&scores) {
            if !s.is_finite() {
                return Err(Error::NonFiniteScore(c.channels().to_vec()));
            }
        }
        let mut entries: Vec<LutEntry> = colors
            .into_iter()
            .zip(scores)
            .map(|(color, score)| LutEntry { color, score })
            .collect();
        sort_entries(&mut entries);
        let mut index = HashMap::with_capacity(entries.len());
        for (rank, e) in entries.iter().enumerate() {
            if index.insert(e.color.bit_key(), rank as u32).is_some() {
                return Err(Error::InvalidValue(
                    "duplicate color in LUT construction".into(),
                ));
            }
        }
        Ok(Self { entries, index })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[LutEntry] {
        &self.entries
    }

    pub fn rank_of(&self, color: &ColorValue) -> Option<u32> {
        self.index.get(&color.bit_key()).copied()
    }

    pub fn color_of(&self, rank: u32) -> Option<&ColorValue> {
        self.entries.get(rank as usize).map(|e| &e.color)
    }

    /// Encodes every pixel to its rank. Every pixel color must be in the table.
    pub fn encode(&self, image: &ColorImage) -> Result<RankImage> {
        let mut ranks = Vec::with_capacity(image.pixel_count());
        for px in image.pixels() {
            match self.index.get(&bit_key_slice(px)) {
                Some(&r) => ranks.push(r),
                None => return Err(Error::ColorNotInLut(px.to_vec())),
            }
        }
        Ok(RankImage::from_parts(image.width(), image.height(), ranks))
    }

    /// Decodes a rank image back to colors. Every rank must be below `len`.
    pub fn decode(&self, ranks: &RankImage) -> Result<ColorImage> {
        let dim = self.entries[0].color.dim();
        let mut data = Vec::with_capacity(ranks.ranks.len() * dim);
        for &r in &ranks.ranks {
            let entry = self
                .entries
                .get(r as usize)
                .ok_or(Error::RankNotInLut {
                    rank: r,
                    len: self.entries.len(),
                })?;
            data.extend_from_slice(entry.color.channels());
        }
        ColorImage::new(ranks.width, ranks.height, dim, data)
    }

    /// CSV text form `rank,r,g,b,score`, one row per entry, rank ascending.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("rank,r,g,b,score\n");
        for (rank, e) in self.entries.iter().enumerate() {
            let ch = e.color.channels();
            if ch.len() != 3 {
                return Err(Error::Dimension {
                    expected: 3,
                    got: ch.len(),
                });
            }
            writeln!(out, "{rank},{},{},{},{}", ch[0], ch[1], ch[2], e.score)
                .expect("string write cannot fail");
        }
        Ok(out)
    }
}

/// Total order used for LUT ranks: score first, then raw channels.
fn lut_cmp(a: &LutEntry, b: &LutEntry) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then_with(|| a.color.channel_cmp(&b.color))
}

#[cfg(feature = "parallel")]
fn sort_entries(entries: &mut [LutEntry]) {
    use rayon::slice::ParallelSliceMut;
    // Comparator is a strict total order on distinct colors, so the
    // unstable parallel sort is deterministic.
    entries.par_sort_unstable_by(lut_cmp);
}

#[cfg(not(feature = "parallel"))]
fn sort_entries(entries: &mut [LutEntry]) {
    entries.sort_unstable_by(lut_cmp);
}
