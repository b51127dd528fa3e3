//! IDX container (MNIST): big-endian `u32` magic, big-endian `u32`
//! dimension sizes, then unsigned bytes.

use std::path::Path;

use super::{Dataset, DatasetMeta};
use crate::error::{Error, Result};
use crate::numerics::DenseTensor;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Format {
            offset,
            message: "truncated header".into(),
        })
}

fn header(bytes: &[u8], magic: u32, ndims: usize) -> Result<Vec<usize>> {
    let got = read_u32(bytes, 0)?;
    if got != magic {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic 0x{got:08x}, expected 0x{magic:08x}"),
        });
    }
    (0..ndims)
        .map(|k| read_u32(bytes, 4 + 4 * k).map(|v| v as usize))
        .collect()
}

fn body(bytes: &[u8], start: usize, len: usize) -> Result<&[u8]> {
    let end = start + len;
    if bytes.len() < end {
        return Err(Error::Format {
            offset: bytes.len(),
            message: format!("truncated data: expected {len} bytes from offset {start}"),
        });
    }
    if bytes.len() > end {
        return Err(Error::Format {
            offset: end,
            message: "trailing bytes after data".into(),
        });
    }
    Ok(&bytes[start..end])
}

pub fn decode_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let dims = header(bytes, IMAGE_MAGIC, 3)?;
    let (count, rows, cols) = (dims[0], dims[1], dims[2]);
    let pixels = body(bytes, 16, count * rows * cols)?.to_vec();
    Ok(IdxImages {
        count,
        rows,
        cols,
        pixels,
    })
}

pub fn decode_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let dims = header(bytes, LABEL_MAGIC, 1)?;
    Ok(body(bytes, 8, dims[0])?.to_vec())
}

pub fn encode_idx_images(images: &IdxImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGE_MAGIC, images.count as u32, images.rows as u32, images.cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Dataset from IDX image and label byte streams. Pixels are scaled by
/// 1/255 and the input box is `[0, 1]`; `take` keeps a prefix.
pub fn parse_mnist_idx(images: &[u8], labels: &[u8], take: Option<usize>) -> Result<Dataset> {
    if take == Some(0) {
        return Err(Error::argument("take must keep at least one example"));
    }
    let img = decode_idx_images(images)?;
    let lab = decode_idx_labels(labels)?;
    if img.count != lab.len() {
        return Err(Error::Dimension {
            context: "IDX label count",
            expected: img.count,
            actual: lab.len(),
        });
    }
    let n = take.map_or(img.count, |t| t.min(img.count));
    let d = img.rows * img.cols;
    let data: Vec<f64> = img.pixels[..n * d].iter().map(|&p| p as f64 / 255.0).collect();
    let ys: Vec<usize> = lab[..n].iter().map(|&l| l as usize).collect();
    let num_classes = lab.iter().map(|&l| l as usize + 1).max().unwrap_or(0).max(10);
    Dataset::new(
        DenseTensor::new(vec![n, d], data)?,
        ys,
        DatasetMeta {
            name: "mnist".into(),
            bounds: Some((0.0, 1.0)),
            num_classes,
        },
    )
}

pub fn load_mnist_idx(images: &Path, labels: &Path, take: Option<usize>) -> Result<Dataset> {
    let img = std::fs::read(images).map_err(|e| Error::io(images, e))?;
    let lab = std::fs::read(labels).map_err(|e| Error::io(labels, e))?;
    parse_mnist_idx(&img, &lab, take)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> (IdxImages, Vec<u8>) {
        let img = IdxImages {
            count: 3,
            rows: 2,
            cols: 2,
            pixels: vec![0, 255, 128, 1, 2, 3, 4, 5, 255, 255, 0, 0],
        };
        (img, vec![7, 0, 9])
    }

    #[test]
    fn scaling_endpoints() {
        let (img, lab) = sample();
        let ds = parse_mnist_idx(&encode_idx_images(&img), &encode_idx_labels(&lab), None).unwrap();
        assert_eq!(ds.input(0)[1], 1.0);
        assert_eq!(ds.input(0)[0], 0.0);
        assert_eq!(ds.labels(), &[7, 0, 9]);
        assert_eq!(ds.bounds(), Some((0.0, 1.0)));
        assert_eq!(ds.num_classes(), 10);
    }

    #[test]
    fn label_magic_enforced() {
        let (img, lab) = sample();
        let mut bad = encode_idx_labels(&lab);
        bad[3] = 0x03;
        let e = parse_mnist_idx(&encode_idx_images(&img), &bad, None).unwrap_err();
        assert!(matches!(e, Error::Format { offset: 0, .. }), "{e}");
        // Image bytes in the label slot are rejected too.
        assert!(decode_idx_labels(&encode_idx_images(&img)).is_err());
    }

    #[test]
    fn truncation_reports_offset() {
        let (img, _) = sample();
        let mut bytes = encode_idx_images(&img);
        bytes.truncate(20);
        assert!(matches!(decode_idx_images(&bytes), Err(Error::Format { offset: 20, .. })));
        assert!(matches!(decode_idx_images(&bytes[..6]), Err(Error::Format { offset: 4, .. })));
    }

    #[test]
    fn take_prefix_and_zero() {
        let (img, lab) = sample();
        let (i, l) = (encode_idx_images(&img), encode_idx_labels(&lab));
        assert!(parse_mnist_idx(&i, &l, Some(0)).is_err());
        let ds = parse_mnist_idx(&i, &l, Some(2)).unwrap();
        assert_eq!(ds.labels(), &[7, 0]);
    }

    proptest! {
        #[test]
        fn roundtrip_bit_exact(count in 1usize..6, rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::seed::rng(seed);
            let img = IdxImages {
                count, rows, cols,
                pixels: (0..count * rows * cols).map(|_| rng.gen()).collect(),
            };
            let lab: Vec<u8> = (0..count).map(|_| rng.gen_range(0..10)).collect();
            let ib = encode_idx_images(&img);
            let lb = encode_idx_labels(&lab);
            prop_assert_eq!(decode_idx_images(&ib).unwrap(), img);
            prop_assert_eq!(decode_idx_labels(&lb).unwrap(), lab.clone());
            let ds = parse_mnist_idx(&ib, &lb, None).unwrap();
            let back: Vec<u8> = ds.inputs().data().iter().map(|v| (v * 255.0).round() as u8).collect();
            prop_assert_eq!(&back, &decode_idx_images(&ib).unwrap().pixels);
            let again = parse_mnist_idx(&ib, &lb, None).unwrap();
            prop_assert_eq!(ds, again);
        }
    }
}
