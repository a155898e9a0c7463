//! End-to-end experiment: train the learned ordering, apply the
//! morphological operator under every method, score irregularity, run the
//! statistics, and emit all figure data into one artifact directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use rankmorph::color::basic_palette16;
use rankmorph::image_io::write_ppm;
use rankmorph::irregularity::global_irregularity_detailed;
use rankmorph::method::color_strip;
use rankmorph::sco::loss_curves_to_csv;
use rankmorph::stats::{compare_methods, hasse_from_tests, Direction};
use rankmorph::{
    dataset, sco, Error, ModelFile, MorphOp, OrderingMethod, ReducedMapping, Result, SoftConfig,
};

use crate::parse::parse_se;

/// Experiment settings, read from TOML with flag overrides on top.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// CIFAR-10 binary batch file.
    pub dataset: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub train_start: usize,
    pub train_count: usize,
    pub val_start: usize,
    pub val_count: usize,
    /// Training images opened and written out per method.
    pub showcase_count: usize,
    /// Validation images scored for irregularity.
    pub eval_count: usize,
    /// The candidate ordering family (lex variants) that is aggregated.
    pub mappings: Vec<String>,
    pub se: String,
    pub op: String,
    pub alpha: f64,
    pub max_bins: usize,
    pub seed: Option<u64>,
    pub soft: SoftConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            output_dir: None,
            train_start: 0,
            train_count: 100,
            val_start: 100,
            val_count: 100,
            showcase_count: 5,
            eval_count: 20,
            mappings: vec!["lex-rgb".into(), "lex-gbr".into(), "lex-brg".into()],
            se: "square:3".into(),
            op: "open".into(),
            alpha: 0.01,
            max_bins: rankmorph::irregularity::DEFAULT_TRANSPORT_BINS,
            seed: None,
            soft: SoftConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("invalid config file: {e}")))
    }

    fn validated(mut self) -> Result<Self> {
        if let Some(seed) = self.seed {
            self.soft.seed = seed;
        }
        self.soft.validate()?;
        if self.train_count == 0 {
            return Err(Error::Config("train_count must be positive".into()));
        }
        let train = self.train_start..self.train_start + self.train_count;
        let val = self.val_start..self.val_start + self.val_count;
        if train.start < val.end && val.start < train.end {
            return Err(Error::Config(format!(
                "training range {train:?} overlaps validation range {val:?}"
            )));
        }
        if self.eval_count > self.val_count {
            return Err(Error::Config(format!(
                "eval_count {} exceeds val_count {}",
                self.eval_count, self.val_count
            )));
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        match self.op.as_str() {
            "open" | "close" | "erode" | "dilate" => {}
            other => return Err(Error::Config(format!("unknown operator '{other}'"))),
        }
        parse_se(&self.se)?;
        self.family()?;
        Ok(self)
    }

    /// The named candidate mappings, in configuration order.
    fn family(&self) -> Result<Vec<(String, ReducedMapping)>> {
        if self.mappings.is_empty() {
            return Err(Error::Config("mapping family must be non-empty".into()));
        }
        let mut family = Vec::with_capacity(self.mappings.len());
        for name in &self.mappings {
            let mapping = match name.as_str() {
                "lex-rgb" => ReducedMapping::lex_rgb(),
                "lex-gbr" => ReducedMapping::lex_gbr(),
                "lex-brg" => ReducedMapping::lex_brg(),
                other => {
                    return Err(Error::Config(format!(
                        "unknown family mapping '{other}'; use lex-rgb, lex-gbr, lex-brg"
                    )))
                }
            };
            if family.iter().any(|(n, _)| n == name) {
                return Err(Error::Config(format!("duplicate family mapping '{name}'")));
            }
            family.push((name.clone(), mapping));
        }
        Ok(family)
    }
}

fn morph_op(name: &str) -> MorphOp {
    match name {
        "erode" => MorphOp::Erode,
        "dilate" => MorphOp::Dilate,
        "close" => MorphOp::Close,
        _ => MorphOp::Open,
    }
}

/// Runs the full pipeline. On failure every artifact written so far is
/// removed again (the directory itself too when this call created it).
pub fn run_experiment(config: ExperimentConfig) -> Result<PathBuf> {
    let config = config.validated()?;
    let out_dir = config
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("no output directory given".into()))?;

    if out_dir.exists() {
        if fs::read_dir(&out_dir)?.next().is_some() {
            return Err(Error::Config(format!(
                "output directory {} is not empty",
                out_dir.display()
            )));
        }
    } else {
        fs::create_dir_all(&out_dir)?;
    }

    match run_steps(&config, &out_dir) {
        Ok(()) => Ok(out_dir),
        Err(e) => {
            let _ = fs::remove_dir_all(&out_dir);
            Err(e)
        }
    }
}

fn run_steps(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let dataset_path = config
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("no dataset path given".into()))?;
    let se = parse_se(&config.se)?;
    let op = morph_op(&config.op);
    let named_family = config.family()?;
    let family: Vec<ReducedMapping> = named_family.iter().map(|(_, h)| h.clone()).collect();

    eprintln!(
        "loading {} training and {} validation images from {}",
        config.train_count,
        config.val_count,
        dataset_path.display()
    );
    let train_images = dataset::load_cifar_batch(
        dataset_path,
        config.train_start..config.train_start + config.train_count,
    )?;
    let val_images = dataset::load_cifar_batch(
        dataset_path,
        config.val_start..config.val_start + config.val_count,
    )?;

    eprintln!(
        "training the consensus mapping ({} epochs, batch {})",
        config.soft.epochs, config.soft.batch_size
    );
    let trained = sco::train(&train_images, &val_images, &family, &config.soft)?;
    ModelFile::new(trained.params.clone(), config.soft.clone()).save(&out.join("model.json"))?;
    fs::write(out.join("loss.csv"), loss_curves_to_csv(&trained))?;

    let mut methods: Vec<(String, OrderingMethod)> = named_family
        .iter()
        .map(|(name, h)| (name.clone(), OrderingMethod::Mapping(h.clone())))
        .collect();
    methods.push(("borda".into(), OrderingMethod::Borda(family.clone())));
    methods.push((
        "learned".into(),
        OrderingMethod::Mapping(ReducedMapping::Learned(trained.params.clone())),
    ));

    // Showcase images: the original next to every method's output.
    let images_dir = out.join("images");
    fs::create_dir_all(&images_dir)?;
    for (index, image) in train_images.iter().take(config.showcase_count).enumerate() {
        write_ppm(&images_dir.join(format!("img{index:03}_original.ppm")), image)?;
        for (name, method) in &methods {
            let processed = method.morph(op, image, &se)?;
            write_ppm(
                &images_dir.join(format!("img{index:03}_{}_{name}.ppm", config.op)),
                &processed,
            )?;
        }
    }

    // Irregularity of the operator output on validation images.
    eprintln!(
        "scoring irregularity on {} validation images x {} methods",
        config.eval_count,
        methods.len()
    );
    let mut csv = String::from("image,method,phi\n");
    let mut samples: Vec<(String, Vec<f64>)> = methods
        .iter()
        .map(|(name, _)| (name.to_string(), Vec::new()))
        .collect();
    for (index, image) in val_images.iter().take(config.eval_count).enumerate() {
        for (m, (name, method)) in methods.iter().enumerate() {
            let processed = method.morph(op, image, &se)?;
            let phi = global_irregularity_detailed(image, &processed, config.max_bins)?;
            if phi.quantized {
                eprintln!("note: image {index}/{name}: transport ran on quantized histograms");
            }
            let _ = writeln!(csv, "{index},{name},{:.12e}", phi.phi);
            samples[m].1.push(phi.phi);
        }
    }
    fs::write(out.join("irregularity.csv"), &csv)?;
    fs::write(out.join("quantiles.csv"), quantile_table(&samples))?;

    let tests = compare_methods(&samples, config.alpha)?;
    fs::write(out.join("wilcoxon.csv"), wilcoxon_table(&tests))?;
    fs::write(out.join("hasse.dot"), hasse_from_tests(&tests))?;

    // Color-ramp strips over the 16-color reference palette.
    let ramps_dir = out.join("ramps");
    fs::create_dir_all(&ramps_dir)?;
    let palette = basic_palette16();
    for (name, method) in &methods {
        let ranked = method.rank_colors(&palette)?;
        let strip = color_strip(&ranked)?;
        write_ppm(&ramps_dir.join(format!("{name}.ppm")), &strip)?;
    }

    eprintln!("artifacts written to {}", out.display());
    Ok(())
}

fn quantile_table(samples: &[(String, Vec<f64>)]) -> String {
    let mut out = String::from("method,min,q1,median,q3,max\n");
    for (name, values) in samples {
        let mut v = values.clone();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| -> f64 {
            // Linear interpolation between closest ranks.
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        let _ = writeln!(
            out,
            "{name},{:.6},{:.6},{:.6},{:.6},{:.6}",
            v[0],
            q(0.25),
            q(0.5),
            q(0.75),
            v[v.len() - 1]
        );
    }
    out
}

fn wilcoxon_table(tests: &[rankmorph::stats::PairwiseTestResult]) -> String {
    let mut out = String::from("method_a,method_b,n,statistic,p_value,direction,significant\n");
    for t in tests {
        let direction = match t.test.direction {
            Direction::AGreater => "a_greater",
            Direction::BGreater => "b_greater",
            Direction::Tied => "tied",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6e},{},{}",
            t.method_a, t.method_b, t.test.n_used, t.test.statistic, t.test.p_value, direction,
            t.test.significant
        );
    }
    out
}

/// Rendering of ranked palettes for the `rank` command.
pub fn write_strip(path: &Path, colors: &[rankmorph::ColorValue]) -> Result<()> {
    write_ppm(path, &color_strip(colors)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        let cfg = ExperimentConfig {
            dataset: Some("x.bin".into()),
            output_dir: Some("out".into()),
            ..ExperimentConfig::default()
        };
        assert!(cfg.validated().is_ok());
    }

    #[test]
    fn overlapping_ranges_are_rejected() {
        let cfg = ExperimentConfig {
            dataset: Some("x.bin".into()),
            output_dir: Some("out".into()),
            train_start: 0,
            train_count: 150,
            val_start: 100,
            val_count: 100,
            ..ExperimentConfig::default()
        };
        assert!(matches!(cfg.validated(), Err(Error::Config(_))));
    }

    #[test]
    fn family_selection_is_validated() {
        let base = ExperimentConfig {
            dataset: Some("x.bin".into()),
            output_dir: Some("out".into()),
            ..ExperimentConfig::default()
        };
        let bad = ExperimentConfig {
            mappings: vec!["lex-rgb".into(), "lex-xyz".into()],
            ..base.clone()
        };
        assert!(matches!(bad.validated(), Err(Error::Config(_))));
        let dup = ExperimentConfig {
            mappings: vec!["lex-rgb".into(), "lex-rgb".into()],
            ..base.clone()
        };
        assert!(matches!(dup.validated(), Err(Error::Config(_))));
        let two = ExperimentConfig {
            mappings: vec!["lex-gbr".into(), "lex-brg".into()],
            ..base
        };
        assert_eq!(two.validated().unwrap().family().unwrap().len(), 2);
    }

    #[test]
    fn seed_override_reaches_soft_config() {
        let cfg = ExperimentConfig {
            dataset: Some("x.bin".into()),
            output_dir: Some("out".into()),
            seed: Some(99),
            ..ExperimentConfig::default()
        };
        assert_eq!(cfg.validated().unwrap().soft.seed, 99);
    }

    #[test]
    fn toml_roundtrip_with_partial_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(
            &path,
            "dataset = \"batch.bin\"\ntrain_count = 10\n[soft]\nepochs = 5\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::from_toml_file(&path).unwrap();
        assert_eq!(cfg.train_count, 10);
        assert_eq!(cfg.soft.epochs, 5);
        assert_eq!(cfg.soft.batch_size, 1024);
        assert!(ExperimentConfig::from_toml_file(&path).is_ok());

        std::fs::write(&path, "no_such_key = 1\n").unwrap();
        assert!(matches!(
            ExperimentConfig::from_toml_file(&path),
            Err(Error::Config(_))
        ));
    }
}
