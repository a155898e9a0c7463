//! CIFAR-10 binary batch ingestion.
//!
//! Each record in a batch file is 3073 bytes: one label byte followed by
//! 3072 channel-planar bytes (1024 red, 1024 green, 1024 blue values of a
//! row-major 32x32 grid). Labels are discarded; channels are normalized
//! to `[0, 1]`.

use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::ops::Range;
use std::path::Path;

use crate::color::ColorImage;
use crate::error::{Error, Result};

pub const CIFAR_WIDTH: usize = 32;
pub const CIFAR_HEIGHT: usize = 32;
const PLANE: usize = CIFAR_WIDTH * CIFAR_HEIGHT;
pub const CIFAR_RECORD_BYTES: usize = 1 + 3 * PLANE;

/// Loads the images with indices in `range` from a CIFAR-10 batch file.
pub fn load_cifar_batch(path: &Path, range: Range<usize>) -> Result<Vec<ColorImage>> {
    if range.is_empty() {
        return Ok(Vec::new());
    }
    let mut file = File::open(path)?;
    let file_len = file.metadata()?.len();
    let needed = range.end as u64 * CIFAR_RECORD_BYTES as u64;
    if file_len < needed {
        return Err(Error::Format {
            path: path.display().to_string(),
            offset: file_len,
            message: format!(
                "file holds {} complete records, range requests {}",
                file_len / CIFAR_RECORD_BYTES as u64,
                range.end
            ),
        });
    }

    let start = range.start as u64 * CIFAR_RECORD_BYTES as u64;
    file.seek(SeekFrom::Start(start))?;
    let mut images = Vec::with_capacity(range.len());
    let mut record = vec![0u8; CIFAR_RECORD_BYTES];
    for index in range {
        file.read_exact(&mut record).map_err(|e| Error::Format {
            path: path.display().to_string(),
            offset: index as u64 * CIFAR_RECORD_BYTES as u64,
            message: format!("short read on record {index}: {e}"),
        })?;
        // record[0] is the label; planes follow.
        let planes = &record[1..];
        let mut data = Vec::with_capacity(PLANE * 3);
        for p in 0..PLANE {
            data.push(planes[p] as f64 / 255.0);
            data.push(planes[PLANE + p] as f64 / 255.0);
            data.push(planes[2 * PLANE + p] as f64 / 255.0);
        }
        images.push(ColorImage::new(CIFAR_WIDTH, CIFAR_HEIGHT, 3, data)?);
    }
    Ok(images)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    pub(crate) fn write_synthetic_batch(path: &Path, records: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut file = File::create(path).unwrap();
        let mut buf = vec![0u8; CIFAR_RECORD_BYTES];
        for _ in 0..records {
            rng.fill(&mut buf[..]);
            buf[0] = rng.random_range(0..10);
            file.write_all(&buf).unwrap();
        }
    }

    #[test]
    fn loads_requested_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("batch.bin");
        write_synthetic_batch(&path, 12, 0);
        let images = load_cifar_batch(&path, 2..7).unwrap();
        assert_eq!(images.len(), 5);
        for img in &images {
            assert_eq!((img.width(), img.height(), img.dim()), (32, 32, 3));
        }
        // Count of pool colors matches records * 1024.
        let total: usize = images.iter().map(|i| i.pixel_count()).sum();
        assert_eq!(total, 5 * 1024);
    }

    #[test]
    fn empty_range_gives_empty_list() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("batch.bin");
        write_synthetic_batch(&path, 1, 0);
        assert!(load_cifar_batch(&path, 3..3).unwrap().is_empty());
    }

    #[test]
    fn truncated_file_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.bin");
        std::fs::write(&path, [0u8]).unwrap();
        match load_cifar_batch(&path, 0..1) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn channels_are_planar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.bin");
        let mut record = vec![0u8; CIFAR_RECORD_BYTES];
        record[1] = 255; // red of pixel (0, 0)
        record[1 + PLANE + 1] = 255; // green of pixel (1, 0)
        std::fs::write(&path, &record).unwrap();
        let img = load_cifar_batch(&path, 0..1).unwrap().remove(0);
        assert_eq!(img.pixel(0, 0), &[1.0, 0.0, 0.0]);
        assert_eq!(img.pixel(1, 0), &[0.0, 1.0, 0.0]);
    }
}
