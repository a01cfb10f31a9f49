//! Image features: decode, resize to a fixed square, scale channels to
//! [0, 1], then an independent PCA per color channel fitted on training
//! images. The three channel projections are concatenated, so the output
//! width is `3 * dims_per_channel`. Missing or undecodable images become
//! zero vectors (the latter with a warning).

use crate::dataset::pca::PcaBasis;
use crate::dataset::{Dataset, Split};
use crate::error::Result;
use crate::neural::Tensor;
use image::imageops::FilterType;
use std::path::Path;

pub const DEFAULT_IMAGE_SIDE: usize = 64;

#[derive(Debug, Clone)]
pub struct ImageExtractor {
    side: usize,
    dims_per_channel: usize,
    channels: Vec<PcaBasis>,
}

/// Per-channel pixel planes of a decoded image, values in [0, 1].
fn decode_planes(path: &Path, side: usize) -> Option<[Vec<f64>; 3]> {
    let img = match image::open(path) {
        Ok(img) => img,
        Err(e) => {
            log::warn!("cannot decode image {}: {e}", path.display());
            return None;
        }
    };
    let resized = img
        .resize_exact(side as u32, side as u32, FilterType::Triangle)
        .to_rgb8();
    let mut planes = [
        vec![0.0; side * side],
        vec![0.0; side * side],
        vec![0.0; side * side],
    ];
    for (i, px) in resized.pixels().enumerate() {
        planes[0][i] = px.0[0] as f64 / 255.0;
        planes[1][i] = px.0[1] as f64 / 255.0;
        planes[2][i] = px.0[2] as f64 / 255.0;
    }
    Some(planes)
}

impl ImageExtractor {
    pub fn fit(dataset: &Dataset, dims_per_channel: usize, side: usize) -> Result<ImageExtractor> {
        let train_rows = dataset.split_indices(Split::Train);
        let mut decoded: Vec<[Vec<f64>; 3]> = Vec::new();
        for &r in &train_rows {
            if let Some(path) = &dataset.samples[r].image_ref {
                if let Some(planes) = decode_planes(path, side) {
                    decoded.push(planes);
                }
            }
        }
        let pixels = side * side;
        let mut channels = Vec::with_capacity(3);
        for ch in 0..3 {
            let mut block = Tensor::zeros(decoded.len(), pixels);
            for (r, planes) in decoded.iter().enumerate() {
                block.row_mut(r).copy_from_slice(&planes[ch]);
            }
            channels.push(PcaBasis::fit(&block, dims_per_channel, true)?);
        }
        Ok(ImageExtractor {
            side,
            dims_per_channel,
            channels,
        })
    }

    pub fn output_dim(&self) -> usize {
        3 * self.dims_per_channel
    }

    pub fn transform(&self, dataset: &Dataset) -> Result<Tensor> {
        let mut out = Tensor::zeros(dataset.len(), self.output_dim());
        for (r, sample) in dataset.samples.iter().enumerate() {
            let Some(path) = &sample.image_ref else { continue };
            let Some(planes) = decode_planes(path, self.side) else {
                continue; // warning already logged; row stays zero
            };
            let row = out.row_mut(r);
            for (ch, basis) in self.channels.iter().enumerate() {
                let lo = ch * self.dims_per_channel;
                basis.transform_row(&planes[ch], &mut row[lo..lo + self.dims_per_channel]);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FieldKind, FieldSchema, Sample, Schema};
    use image::{Rgb, RgbImage};

    fn image_dataset(dir: &Path, pixels: &[Option<[u8; 3]>]) -> Dataset {
        let schema = Schema::new(vec![
            FieldSchema {
                column_name: "img".into(),
                kind: FieldKind::ImagePath,
                nullable: true,
            },
            FieldSchema {
                column_name: "y".into(),
                kind: FieldKind::Label,
                nullable: true,
            },
        ])
        .unwrap();
        let samples = pixels
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let image_ref = p.map(|rgb| {
                    let path = dir.join(format!("{i}.jpg"));
                    let img = RgbImage::from_pixel(8, 8, Rgb(rgb));
                    img.save(&path).unwrap();
                    path
                });
                Sample {
                    id: i.to_string(),
                    tabular: vec![],
                    texts: vec![],
                    image_ref,
                    label: Some(0),
                }
            })
            .collect();
        Dataset::new(schema, samples, vec!["A".into()]).unwrap()
    }

    #[test]
    fn all_black_images_project_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let ds = image_dataset(dir.path(), &[Some([0, 0, 0]); 3]);
        let ex = ImageExtractor::fit(&ds, 4, 8).unwrap();
        let out = ex.transform(&ds).unwrap();
        assert_eq!(out.shape(), (3, 12));
        assert!(out.data().iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn output_width_is_three_times_per_channel_dims() {
        let dir = tempfile::tempdir().unwrap();
        let ds = image_dataset(
            dir.path(),
            &[Some([200, 10, 10]), Some([10, 200, 10]), Some([10, 10, 200])],
        );
        let ex = ImageExtractor::fit(&ds, 5, 8).unwrap();
        assert_eq!(ex.output_dim(), 15);
        assert_eq!(ex.transform(&ds).unwrap().cols(), 15);
    }

    #[test]
    fn missing_image_rows_are_zero_vectors() {
        let dir = tempfile::tempdir().unwrap();
        let ds = image_dataset(dir.path(), &[Some([255, 0, 0]), None, Some([0, 0, 255])]);
        let ex = ImageExtractor::fit(&ds, 2, 8).unwrap();
        let out = ex.transform(&ds).unwrap();
        assert!(out.row(1).iter().all(|&v| v == 0.0));
        assert!(out.row(0).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn undecodable_image_becomes_zero_vector_not_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut ds = image_dataset(dir.path(), &[Some([9, 9, 9]), Some([90, 9, 9])]);
        let junk = dir.path().join("junk.jpg");
        std::fs::write(&junk, b"this is not a jpeg").unwrap();
        ds.samples[1].image_ref = Some(junk);
        let ex = ImageExtractor::fit(&ds, 2, 8).unwrap();
        let out = ex.transform(&ds).unwrap();
        assert!(out.row(1).iter().all(|&v| v == 0.0));
    }
}
