//! Parsers for the small flag grammars: structuring elements, ordering
//! methods, and color lists.

use std::path::Path;

use rankmorph::{
    ColorValue, Error, ModelFile, OrderingMethod, ReducedMapping, Result, StructuringElement,
};

/// `square:N`, `disk:R`, or `cross:A`.
pub fn parse_se(spec: &str) -> Result<StructuringElement> {
    let (kind, value) = spec
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("structuring element '{spec}' is not KIND:SIZE")))?;
    let size: u32 = value
        .parse()
        .map_err(|_| Error::Config(format!("invalid structuring element size '{value}'")))?;
    match kind {
        "square" => StructuringElement::square(size),
        "disk" => Ok(StructuringElement::disk(size)),
        "cross" => Ok(StructuringElement::cross(size)),
        other => Err(Error::Config(format!(
            "unknown structuring element kind '{other}'; use square, disk, or cross"
        ))),
    }
}

/// `lex-rgb`, `lex-gbr`, `lex-brg`, `borda`, or `learned:MODEL.json`.
pub fn parse_order(spec: &str) -> Result<OrderingMethod> {
    match spec {
        "lex-rgb" => Ok(OrderingMethod::Mapping(ReducedMapping::lex_rgb())),
        "lex-gbr" => Ok(OrderingMethod::Mapping(ReducedMapping::lex_gbr())),
        "lex-brg" => Ok(OrderingMethod::Mapping(ReducedMapping::lex_brg())),
        "borda" => Ok(OrderingMethod::borda_lex()),
        other => match other.strip_prefix("learned:") {
            Some(path) => {
                let model = ModelFile::load(Path::new(path))?;
                Ok(OrderingMethod::Mapping(ReducedMapping::Learned(model.params)))
            }
            None => Err(Error::Config(format!(
                "unknown ordering '{other}'; use lex-rgb, lex-gbr, lex-brg, borda, or learned:PATH"
            ))),
        },
    }
}

/// Semicolon-separated list of `r,g,b` byte triples, e.g. `0,0,0;255,255,255`.
pub fn parse_colors(spec: &str) -> Result<Vec<ColorValue>> {
    spec.split(';')
        .filter(|part| !part.trim().is_empty())
        .map(parse_color)
        .collect()
}

fn parse_color(part: &str) -> Result<ColorValue> {
    let bytes: Vec<u8> = part
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u8>()
                .map_err(|_| Error::Config(format!("invalid color component '{}'", tok.trim())))
        })
        .collect::<Result<_>>()?;
    if bytes.len() != 3 {
        return Err(Error::Config(format!(
            "color '{part}' needs exactly three components"
        )));
    }
    Ok(ColorValue::rgb8(bytes[0], bytes[1], bytes[2]))
}

/// Color list file: one `r,g,b` byte triple per line, `#` comments allowed.
pub fn read_colors_file(path: &Path) -> Result<Vec<ColorValue>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(parse_color)
        .collect()
}

pub fn format_color(color: &ColorValue) -> String {
    let ch = color.channels();
    format!(
        "{},{},{}",
        (ch[0] * 255.0).round() as u8,
        (ch[1] * 255.0).round() as u8,
        (ch[2] * 255.0).round() as u8
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se_specs() {
        assert_eq!(parse_se("square:3").unwrap().len(), 9);
        assert_eq!(parse_se("disk:2").unwrap().len(), 13);
        assert_eq!(parse_se("cross:1").unwrap().len(), 5);
        assert!(parse_se("square").is_err());
        assert!(parse_se("ball:3").is_err());
        assert!(parse_se("disk:x").is_err());
    }

    #[test]
    fn order_specs() {
        assert!(parse_order("lex-rgb").is_ok());
        assert!(parse_order("borda").is_ok());
        assert!(parse_order("nonsense").is_err());
        assert!(parse_order("learned:/no/such/model.json").is_err());
    }

    #[test]
    fn color_lists() {
        let colors = parse_colors("0,0,0;255,255,255").unwrap();
        assert_eq!(colors.len(), 2);
        assert_eq!(format_color(&colors[1]), "255,255,255");
        assert!(parse_colors("1,2").is_err());
        assert!(parse_colors("256,0,0").is_err());
    }
}
