//! Ordering methods: anything that can totally order a finite color set.
//!
//! Either a single reduced mapping (lexicographic, learned, or custom
//! weights) or the Borda rule over a mapping family. Both reduce to a
//! [`RankLut`] on the color set at hand.

use crate::color::{ColorImage, ColorValue};
use crate::error::{Error, Result};
use crate::morphology::{self, MorphOp, StructuringElement};
use crate::ordering::{RankLut, ReducedMapping};
use crate::vote;

#[derive(Debug, Clone)]
pub enum OrderingMethod {
    Mapping(ReducedMapping),
    /// Borda rule over the orderings the family induces on the color set.
    Borda(Vec<ReducedMapping>),
}

impl OrderingMethod {
    /// Borda over the three lexicographic mappings.
    pub fn borda_lex() -> Self {
        OrderingMethod::Borda(ReducedMapping::lex_family())
    }

    /// Look-up table for a set of distinct colors under this method.
    pub fn lut_for_colors(&self, colors: Vec<ColorValue>) -> Result<RankLut> {
        match self {
            OrderingMethod::Mapping(h) => {
                let scores = colors
                    .iter()
                    .map(|c| h.score(c))
                    .collect::<Result<Vec<f64>>>()?;
                RankLut::from_scored_colors(colors, scores)
            }
            OrderingMethod::Borda(family) => {
                if colors.len() == 1 {
                    // A single candidate needs no vote.
                    return RankLut::from_scored_colors(colors, vec![0.0]);
                }
                let scores = vote::borda_scores_from_mappings(family, &colors)?;
                RankLut::from_scored_colors(colors, scores.scores().to_vec())
            }
        }
    }

    /// Look-up table over the unique colors of an image.
    pub fn lut_for_image(&self, image: &ColorImage) -> Result<RankLut> {
        self.lut_for_colors(image.unique_colors())
    }

    /// Sorts distinct colors ascending under the method's total order
    /// (LUT tie-break rules apply).
    pub fn rank_colors(&self, colors: &[ColorValue]) -> Result<Vec<ColorValue>> {
        ensure_distinct(colors)?;
        let lut = self.lut_for_colors(colors.to_vec())?;
        Ok(lut.entries().iter().map(|e| e.color.clone()).collect())
    }

    /// Applies a morphological operator under this method's ordering.
    pub fn morph(
        &self,
        op: MorphOp,
        image: &ColorImage,
        se: &StructuringElement,
    ) -> Result<ColorImage> {
        let lut = self.lut_for_image(image)?;
        morphology::apply_with_lut(op, image, &lut, se)
    }
}

fn ensure_distinct(colors: &[ColorValue]) -> Result<()> {
    let mut sorted: Vec<&ColorValue> = colors.iter().collect();
    sorted.sort_by(|a, b| a.channel_cmp(b));
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(Error::InvalidValue(
                "colors to rank must be distinct".into(),
            ));
        }
    }
    Ok(())
}

/// A 1-by-k strip image of colors in the given order.
pub fn color_strip(colors: &[ColorValue]) -> Result<ColorImage> {
    if colors.is_empty() {
        return Err(Error::InvalidValue("strip needs at least one color".into()));
    }
    ColorImage::from_pixels(colors.len(), 1, colors)
}
