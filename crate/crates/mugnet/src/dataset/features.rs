//! Row-aligned dense feature blocks for the three modalities, the combined
//! fit/transform facade, and the binary block file format.
//!
//! Block file layout (little-endian): magic "MUGF" | version u32 | N u64 |
//! d u64 | N*d row-major f64 values. A sidecar text file at
//! `<path>.ids` lists one sample id per line.

use crate::dataset::{Dataset, ImageExtractor, TabularEncoder, TextExtractor};
use crate::error::{MugError, Result};
use crate::neural::Tensor;
use std::io::{Read, Write};
use std::path::Path;

pub const FEATURE_BLOCK_MAGIC: &[u8; 4] = b"MUGF";
const FEATURE_BLOCK_VERSION: u32 = 1;

/// Extraction settings plus, after [`FittedExtractors::fit`], the state
/// learned from the training split.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExtractorSpec {
    pub text_dims: usize,
    pub image_dims_per_channel: usize,
    pub image_side: usize,
}

impl Default for ExtractorSpec {
    fn default() -> Self {
        ExtractorSpec {
            text_dims: 50,
            image_dims_per_channel: 30,
            image_side: super::image_feats::DEFAULT_IMAGE_SIDE,
        }
    }
}

impl ExtractorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.text_dims == 0 || self.image_dims_per_channel == 0 || self.image_side == 0 {
            return Err(MugError::Config(
                "extractor dimensions must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Three dense blocks over the same rows, in dataset sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityFeatures {
    pub ids: Vec<String>,
    pub tab: Tensor,
    pub txt: Tensor,
    pub img: Tensor,
}

impl ModalityFeatures {
    pub fn new(ids: Vec<String>, tab: Tensor, txt: Tensor, img: Tensor) -> Result<Self> {
        let n = ids.len();
        if tab.rows() != n || txt.rows() != n || img.rows() != n {
            return Err(MugError::Contract(format!(
                "feature blocks disagree on row count: ids {n}, tab {}, txt {}, img {}",
                tab.rows(),
                txt.rows(),
                img.rows()
            )));
        }
        for (name, block) in [("tab", &tab), ("txt", &txt), ("img", &img)] {
            if !block.all_finite() {
                return Err(MugError::Contract(format!(
                    "non-finite entry in {name} feature block"
                )));
            }
        }
        Ok(ModalityFeatures { ids, tab, txt, img })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.tab.cols(), self.txt.cols(), self.img.cols()]
    }

    pub fn blocks(&self) -> [&Tensor; 3] {
        [&self.tab, &self.txt, &self.img]
    }

    /// Rows selected by index, preserving order.
    pub fn subset(&self, rows: &[usize]) -> Result<ModalityFeatures> {
        let ids = rows
            .iter()
            .map(|&r| {
                self.ids
                    .get(r)
                    .cloned()
                    .ok_or_else(|| MugError::Contract(format!("row {r} out of range")))
            })
            .collect::<Result<_>>()?;
        ModalityFeatures::new(
            ids,
            self.tab.gather_rows(rows)?,
            self.txt.gather_rows(rows)?,
            self.img.gather_rows(rows)?,
        )
    }

    /// Stack `self` rows first, then `other` rows.
    pub fn concat_rows(&self, other: &ModalityFeatures) -> Result<ModalityFeatures> {
        if self.dims() != other.dims() {
            return Err(MugError::Contract(
                "cannot concatenate feature blocks of different widths".into(),
            ));
        }
        let mut ids = self.ids.clone();
        ids.extend(other.ids.iter().cloned());
        let stack = |a: &Tensor, b: &Tensor| -> Result<Tensor> {
            let mut data = Vec::with_capacity((a.rows() + b.rows()) * a.cols());
            data.extend_from_slice(a.data());
            data.extend_from_slice(b.data());
            Tensor::from_vec(a.rows() + b.rows(), a.cols(), data)
        };
        ModalityFeatures::new(
            ids,
            stack(&self.tab, &other.tab)?,
            stack(&self.txt, &other.txt)?,
            stack(&self.img, &other.img)?,
        )
    }
}

/// Extractor states fitted on the training split only.
#[derive(Debug, Clone)]
pub struct FittedExtractors {
    pub spec: ExtractorSpec,
    pub tabular: TabularEncoder,
    pub text: TextExtractor,
    pub image: ImageExtractor,
}

impl FittedExtractors {
    pub fn fit(dataset: &Dataset, spec: ExtractorSpec) -> Result<FittedExtractors> {
        spec.validate()?;
        Ok(FittedExtractors {
            spec,
            tabular: TabularEncoder::fit(dataset)?,
            text: TextExtractor::fit(dataset, spec.text_dims)?,
            image: ImageExtractor::fit(dataset, spec.image_dims_per_channel, spec.image_side)?,
        })
    }

    pub fn transform(&self, dataset: &Dataset) -> Result<ModalityFeatures> {
        ModalityFeatures::new(
            dataset.samples.iter().map(|s| s.id.clone()).collect(),
            self.tabular.transform(dataset)?,
            self.text.transform(dataset)?,
            self.image.transform(dataset)?,
        )
    }
}

pub fn write_feature_block(path: &Path, block: &Tensor, ids: &[String]) -> Result<()> {
    if ids.len() != block.rows() {
        return Err(MugError::Contract(format!(
            "{} ids for {} rows",
            ids.len(),
            block.rows()
        )));
    }
    let f = std::fs::File::create(path).map_err(|e| MugError::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    let write = |w: &mut dyn Write| -> std::io::Result<()> {
        w.write_all(FEATURE_BLOCK_MAGIC)?;
        w.write_all(&FEATURE_BLOCK_VERSION.to_le_bytes())?;
        w.write_all(&(block.rows() as u64).to_le_bytes())?;
        w.write_all(&(block.cols() as u64).to_le_bytes())?;
        for v in block.data() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    };
    write(&mut w).map_err(|e| MugError::io(path, e))?;

    let sidecar = sidecar_path(path);
    let mut idf = std::fs::File::create(&sidecar).map_err(|e| MugError::io(&sidecar, e))?;
    for id in ids {
        writeln!(idf, "{id}").map_err(|e| MugError::io(&sidecar, e))?;
    }
    Ok(())
}

pub fn read_feature_block(path: &Path) -> Result<(Tensor, Vec<String>)> {
    let bad = |msg: &str| MugError::Format(format!("{}: {msg}", path.display()));
    let f = std::fs::File::open(path).map_err(|e| MugError::io(path, e))?;
    let mut r = std::io::BufReader::new(f);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
    if &magic != FEATURE_BLOCK_MAGIC {
        return Err(bad("wrong magic bytes"));
    }
    let mut u32buf = [0u8; 4];
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u32buf).map_err(|_| bad("truncated version"))?;
    if u32::from_le_bytes(u32buf) != FEATURE_BLOCK_VERSION {
        return Err(bad("unsupported version"));
    }
    r.read_exact(&mut u64buf).map_err(|_| bad("truncated row count"))?;
    let rows = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u64buf).map_err(|_| bad("truncated column count"))?;
    let cols = u64::from_le_bytes(u64buf) as usize;
    let mut data = vec![0.0f64; rows * cols];
    for v in &mut data {
        r.read_exact(&mut u64buf).map_err(|_| bad("truncated values"))?;
        *v = f64::from_le_bytes(u64buf);
    }
    let block = Tensor::from_vec(rows, cols, data)?;

    let sidecar = sidecar_path(path);
    let ids_raw = std::fs::read_to_string(&sidecar).map_err(|e| MugError::io(&sidecar, e))?;
    let ids: Vec<String> = ids_raw.lines().map(str::to_string).collect();
    if ids.len() != rows {
        return Err(bad("sidecar id count does not match row count"));
    }
    Ok((block, ids))
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".ids");
    os.into()
}
