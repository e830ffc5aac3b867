//! Optimal reference image: least-squares combination of stored reference frames
//! over a signal-free mask, solved through the eigendecomposition of the masked Gram matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{Frame, FrameMeta, FrameRole, ImagingError, Rect};

pub const MAX_BASIS_FRAMES: usize = 500;
/// Eigenvalues below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

const GRAM_BLOCK: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub frames: usize,
    pub rank: usize,
    /// Eigenvalues of the masked Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
}

impl RankReport {
    pub fn is_degenerate(&self) -> bool {
        self.rank < self.frames
    }
}

/// Immutable after construction; `with_frame` returns a new version.
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    width: usize,
    height: usize,
    mask: Rect,
    count: usize,
    frames: Vec<f32>,
    /// `V diag(1/lambda) V^T` restricted to the kept eigenvalues.
    solver: DMatrix<f64>,
    report: RankReport,
    version: u64,
}

#[derive(Debug, Clone)]
pub struct Composition {
    pub reference: Frame,
    pub coefficients: Vec<f64>,
    /// `|S - R_best|` over the mask.
    pub residual_norm: f64,
    pub basis_version: u64,
}

impl ReferenceBasis {
    pub fn build(frames: &[Frame], mask: Rect) -> Result<Self, ImagingError> {
        let first = frames.first().ok_or(ImagingError::EmptyInput("reference basis".into()))?;
        if frames.len() > MAX_BASIS_FRAMES {
            return Err(ImagingError::Dimensions(format!(
                "{} reference frames, at most {MAX_BASIS_FRAMES}",
                frames.len()
            )));
        }
        if let Some(f) = frames.iter().find(|f| !f.same_shape(first)) {
            return Err(ImagingError::Dimensions(format!(
                "frame {} is {}x{}, expected {}x{}",
                f.meta.shot_id,
                f.width(),
                f.height(),
                first.width(),
                first.height()
            )));
        }
        let mut data = Vec::with_capacity(frames.len() * first.data().len());
        for f in frames {
            data.extend(f.data().iter().map(|&v| v as f32));
        }
        Self::from_raw(first.width(), first.height(), mask, frames.len(), data, 0)
    }

    fn from_raw(width: usize, height: usize, mask: Rect, count: usize, frames: Vec<f32>, version: u64) -> Result<Self, ImagingError> {
        if !mask.fits(width, height) {
            return Err(ImagingError::Region(format!("mask {mask:?} outside {width}x{height}")));
        }
        let n = width * height;
        let pixels: Vec<usize> = mask.rows(width).flatten().collect();
        let mut gram = DMatrix::<f64>::zeros(count, count);
        let mut block = DMatrix::<f64>::zeros(GRAM_BLOCK.min(pixels.len()), count);
        for chunk in pixels.chunks(GRAM_BLOCK) {
            if chunk.len() != block.nrows() {
                block = DMatrix::zeros(chunk.len(), count);
            }
            for k in 0..count {
                let frame = &frames[k * n..(k + 1) * n];
                for (dst, &i) in block.column_mut(k).iter_mut().zip(chunk) {
                    *dst = frame[i] as f64;
                }
            }
            gram.gemm_tr(1.0, &block, &block, 1.0);
        }
        let eig = SymmetricEigen::new(gram);
        let mut order: Vec<usize> = (0..count).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = eig.eigenvalues[order[0]].max(0.0);
        let kept: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&j| top > 0.0 && eig.eigenvalues[j] > RANK_TOLERANCE * top)
            .collect();
        let mut solver = DMatrix::<f64>::zeros(count, count);
        for &j in &kept {
            let v = eig.eigenvectors.column(j);
            solver.ger(1.0 / eig.eigenvalues[j], &v, &v, 1.0);
        }
        Ok(Self {
            width,
            height,
            mask,
            count,
            frames,
            solver,
            report: RankReport {
                frames: count,
                rank: kept.len(),
                eigenvalues: order.iter().map(|&j| eig.eigenvalues[j]).collect(),
            },
            version,
        })
    }

    /// New basis with one more frame and a fresh decomposition.
    pub fn with_frame(&self, frame: &Frame) -> Result<Self, ImagingError> {
        self.check(frame)?;
        if self.count == MAX_BASIS_FRAMES {
            return Err(ImagingError::Dimensions(format!("basis already holds {MAX_BASIS_FRAMES} frames")));
        }
        let mut frames = self.frames.clone();
        frames.extend(frame.data().iter().map(|&v| v as f32));
        Self::from_raw(self.width, self.height, self.mask, self.count + 1, frames, self.version + 1)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn mask(&self) -> Rect {
        self.mask
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn rank_report(&self) -> &RankReport {
        &self.report
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn frame(&self, k: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.frames[k * n..(k + 1) * n]
    }

    fn check(&self, frame: &Frame) -> Result<(), ImagingError> {
        if frame.width() != self.width || frame.height() != self.height {
            return Err(ImagingError::Dimensions(format!(
                "frame {}x{} vs basis {}x{}",
                frame.width(),
                frame.height(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }

    fn masked_dot(&self, k: usize, image: &[f64]) -> f64 {
        let frame = self.frame(k);
        self.mask
            .rows(self.width)
            .map(|r| frame[r.clone()].iter().zip(&image[r]).map(|(&a, &b)| a as f64 * b).sum::<f64>())
            .sum()
    }

    /// Least-squares coefficients `c` minimising `sum_mask (S - sum_k c_k R_k)^2`.
    pub fn coefficients(&self, signal: &Frame) -> Result<Vec<f64>, ImagingError> {
        self.check(signal)?;
        let b = DVector::from_iterator(self.count, (0..self.count).map(|k| self.masked_dot(k, signal.data())));
        Ok((&self.solver * b).iter().copied().collect())
    }

    /// `sum_k c_k R_k` over the whole frame, clipped at zero counts.
    pub fn assemble(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.width * self.height];
        for (k, &c) in coefficients.iter().enumerate() {
            for (o, &r) in out.iter_mut().zip(self.frame(k)) {
                *o += c * r as f64;
            }
        }
        out
    }

    pub fn compose(&self, signal: &Frame) -> Result<Composition, ImagingError> {
        let coefficients = self.coefficients(signal)?;
        let full = self.assemble(&coefficients);
        let residual_norm = self
            .mask
            .rows(self.width)
            .flat_map(|r| r.map(|i| (signal.data()[i] - full[i]).powi(2)))
            .sum::<f64>()
            .sqrt();
        let meta = FrameMeta {
            role: FrameRole::Reference,
            ..signal.meta.clone()
        };
        let reference = Frame::new(self.width, self.height, full.into_iter().map(|v| v.max(0.0)).collect(), meta)?;
        Ok(Composition {
            reference,
            coefficients,
            residual_norm,
            basis_version: self.version,
        })
    }

    /// Largest `|<S - sum c R, R_k>| / (|S| |R_k|)` over the mask.
    pub fn residual_orthogonality(&self, signal: &Frame, coefficients: &[f64]) -> Result<f64, ImagingError> {
        self.check(signal)?;
        let full = self.assemble(coefficients);
        let residual: Vec<f64> = signal.data().iter().zip(&full).map(|(s, r)| s - r).collect();
        let s_norm = self.masked_norm_f64(signal.data());
        let mut worst: f64 = 0.0;
        for k in 0..self.count {
            let r_norm = self.masked_dot(k, &self.frame(k).iter().map(|&v| v as f64).collect::<Vec<_>>()).sqrt();
            if r_norm > 0.0 && s_norm > 0.0 {
                worst = worst.max(self.masked_dot(k, &residual).abs() / (r_norm * s_norm));
            }
        }
        Ok(worst)
    }

    fn masked_norm_f64(&self, image: &[f64]) -> f64 {
        self.mask
            .rows(self.width)
            .map(|r| image[r].iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}
