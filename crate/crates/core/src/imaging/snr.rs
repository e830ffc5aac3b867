//! Signal-to-noise metric: mean over the signal region divided by the standard
//! deviation over the background region. A noiseless background gives an infinite ratio.

use super::{ImagingError, OdImage, Rect};

pub fn snr(image: &OdImage, signal: &Rect, background: &Rect) -> Result<f64, ImagingError> {
    for r in [signal, background] {
        if !r.fits(image.width(), image.height()) {
            return Err(ImagingError::Region(format!("{r:?} outside {}x{}", image.width(), image.height())));
        }
    }
    if signal.overlaps(background) {
        return Err(ImagingError::Region("signal and background regions overlap".into()));
    }
    let s = image.region_values(signal);
    let b = image.region_values(background);
    if s.is_empty() || b.len() < 2 {
        return Err(ImagingError::Region("no valid pixels in a region".into()));
    }
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let bm = b.iter().sum::<f64>() / b.len() as f64;
    let sd = (b.iter().map(|v| (v - bm).powi(2)).sum::<f64>() / (b.len() - 1) as f64).sqrt();
    Ok(if sd == 0.0 {
        f64::INFINITY.copysign(mean)
    } else {
        mean / sd
    })
}
