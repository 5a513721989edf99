use cwt_core::measure::{make_fd_measure, Density, WaveletMeasure};
use cwt_core::{Error, Result};
use std::path::Path;

/// A measure file, or one of the built-in names: `d1m2` (δ₁ − δ₂), `fdM`
/// (finite differences of order `M`) and `smoothM` (density `h^{(M)}`).
/// A missing file whose stem is a built-in name resolves to the built-in.
pub fn resolve(name: &str) -> Result<WaveletMeasure> {
    let path = Path::new(name);
    if path.is_file() {
        return WaveletMeasure::load(path);
    }
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| Error::InvalidInput(format!("bad measure name {name:?}")))?;
    if stem == "d1m2" {
        return WaveletMeasure::new(vec![(1.0, 1.0), (2.0, -1.0)], None);
    }
    if let Some(m) = stem.strip_prefix("fd").and_then(|m| m.parse::<u32>().ok()) {
        return make_fd_measure(m);
    }
    if let Some(m) = stem.strip_prefix("smooth").and_then(|m| m.parse::<u32>().ok()) {
        return WaveletMeasure::new(Vec::new(), Some(Density::SmoothH { m }));
    }
    Err(Error::InvalidInput(format!(
        "{name:?} is neither a measure file nor a built-in measure"
    )))
}
