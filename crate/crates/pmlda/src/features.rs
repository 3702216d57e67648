//! Image-to-corpus feature pipelines.
//!
//! Three extractors (windowed intensity + entropy, Gaussian gradient +
//! color, and a texture filter bank) turn an image into a per-pixel feature
//! image, and two layout schemes (sliding window, external label map) turn a
//! feature image into a corpus of documents whose words remember their
//! source pixel. All extractors use replicate padding at the borders and a
//! fixed within-kernel summation order.

use crate::error::{invalid, Result};
use crate::model::Document;

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || pixels.len() != height * width {
            return Err(invalid("gray image dimensions do not match the pixel buffer"));
        }
        Ok(Self { height, width, pixels })
    }

    #[inline]
    fn at_clamped(&self, r: isize, c: isize) -> u8 {
        let r = r.clamp(0, self.height as isize - 1) as usize;
        let c = c.clamp(0, self.width as isize - 1) as usize;
        self.pixels[r * self.width + c]
    }
}

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(height: usize, width: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if height == 0 || width == 0 || pixels.len() != height * width {
            return Err(invalid("rgb image dimensions do not match the pixel buffer"));
        }
        Ok(Self { height, width, pixels })
    }

    #[inline]
    fn at_clamped(&self, r: isize, c: isize) -> [u8; 3] {
        let r = r.clamp(0, self.height as isize - 1) as usize;
        let c = c.clamp(0, self.width as isize - 1) as usize;
        self.pixels[r * self.width + c]
    }
}

/// Integer label map, row-major; one document per distinct label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<i64>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<i64>) -> Result<Self> {
        if height == 0 || width == 0 || labels.len() != height * width {
            return Err(invalid("label map dimensions do not match the buffer"));
        }
        Ok(Self { height, width, labels })
    }
}

/// Per-pixel feature vectors, row-major and pixel-major:
/// `data[(r * width + c) * dim + channel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    pub height: usize,
    pub width: usize,
    pub dim: usize,
    pub data: Vec<f64>,
    /// Extractor name and parameters.
    pub provenance: String,
}

impl FeatureImage {
    pub fn at(&self, r: usize, c: usize) -> &[f64] {
        let p = r * self.width + c;
        &self.data[p * self.dim..(p + 1) * self.dim]
    }
}

/// How a corpus maps back onto pixels.
#[derive(Debug, Clone, PartialEq)]
pub enum LayoutScheme {
    SlidingWindow { window: usize, stride: usize },
    LabelMap,
    /// Loaded from a sidecar file; only the coordinates are known.
    External,
}

/// (document, word) -> (row, col). Injective per document; every coordinate
/// lies inside the image.
#[derive(Debug, Clone, PartialEq)]
pub struct DocLayout {
    pub scheme: LayoutScheme,
    pub height: usize,
    pub width: usize,
    pub coords: Vec<Vec<(usize, usize)>>,
}

/// Shannon entropy in bits of a value histogram.
pub fn entropy_bits(counts: &[u32]) -> f64 {
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Windowed mean intensity (normalized to [0, 1], then scaled) and Shannon
/// entropy in bits over a 256-bin histogram of the window.
pub fn extract_intensity_entropy(
    img: &GrayImage,
    window: usize,
    intensity_scale: f64,
) -> Result<FeatureImage> {
    if window < 3 || window % 2 == 0 {
        return Err(invalid("window must be odd and at least 3"));
    }
    if window > img.height || window > img.width {
        return Err(invalid("window larger than the image"));
    }
    if !intensity_scale.is_finite() {
        return Err(invalid("intensity scale must be finite"));
    }
    let radius = (window / 2) as isize;
    let count = (window * window) as f64;
    let mut data = Vec::with_capacity(img.height * img.width * 2);
    let mut hist = [0u32; 256];
    for r in 0..img.height as isize {
        for c in 0..img.width as isize {
            hist.fill(0);
            let mut sum = 0.0;
            for dr in -radius..=radius {
                for dc in -radius..=radius {
                    let v = img.at_clamped(r + dr, c + dc);
                    hist[v as usize] += 1;
                    sum += v as f64;
                }
            }
            data.push(sum / count / 255.0 * intensity_scale);
            data.push(entropy_bits(&hist));
        }
    }
    Ok(FeatureImage {
        height: img.height,
        width: img.width,
        dim: 2,
        data,
        provenance: format!("intensity-entropy window={window} scale={intensity_scale}"),
    })
}

/// First-order Gaussian derivative weights for offsets 1..=radius,
/// normalized so a ramp of unit slope per pixel responds with exactly one.
fn gradient_weights(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let mut w: Vec<f64> = (1..=radius)
        .map(|i| {
            let x = i as f64;
            x * (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let slope: f64 = w.iter().enumerate().map(|(idx, &wi)| 2.0 * (idx + 1) as f64 * wi).sum();
    for wi in &mut w {
        *wi /= slope;
    }
    w
}

/// Vertical first-order Gaussian gradient of the luminance plus the red and
/// blue channels normalized to [0, 1]. The derivative is applied as an
/// antisymmetric pair sum, so constant regions respond with exactly zero.
pub fn extract_gradient_color(img: &RgbImage, sigma: f64) -> Result<FeatureImage> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(invalid("sigma must be positive and finite"));
    }
    let weights = gradient_weights(sigma);
    let lum = |r: isize, c: isize| {
        let [red, green, blue] = img.at_clamped(r, c);
        (red as f64 + green as f64 + blue as f64) / 3.0
    };
    let mut data = Vec::with_capacity(img.height * img.width * 3);
    for r in 0..img.height as isize {
        for c in 0..img.width as isize {
            let mut grad = 0.0;
            for (idx, &w) in weights.iter().enumerate() {
                let d = (idx + 1) as isize;
                grad += w * (lum(r + d, c) - lum(r - d, c));
            }
            let [red, _, blue] = img.at_clamped(r, c);
            data.push(grad);
            data.push(red as f64 / 255.0);
            data.push(blue as f64 / 255.0);
        }
    }
    Ok(FeatureImage {
        height: img.height,
        width: img.width,
        dim: 3,
        data,
        provenance: format!("gradient-color sigma={sigma}"),
    })
}

const BANK_SIZE: usize = 15;
const BANK_RADIUS: isize = (BANK_SIZE as isize - 1) / 2;

struct BankKernel {
    weights: [f64; BANK_SIZE * BANK_SIZE],
    /// Smoothing kernels add the center value back so constants pass
    /// through; zero-DC kernels respond to constants with exactly zero.
    zero_dc: bool,
}

fn bank_index(di: isize, dj: isize) -> usize {
    ((di + BANK_RADIUS) * BANK_SIZE as isize + (dj + BANK_RADIUS)) as usize
}

fn gaussian_kernel(sigma: f64) -> BankKernel {
    let mut weights = [0.0; BANK_SIZE * BANK_SIZE];
    let mut sum = 0.0;
    for di in -BANK_RADIUS..=BANK_RADIUS {
        for dj in -BANK_RADIUS..=BANK_RADIUS {
            let r2 = (di * di + dj * dj) as f64;
            let v = (-r2 / (2.0 * sigma * sigma)).exp();
            weights[bank_index(di, dj)] = v;
            sum += v;
        }
    }
    for w in &mut weights {
        *w /= sum;
    }
    BankKernel { weights, zero_dc: false }
}

fn laplacian_of_gaussian_kernel(sigma: f64) -> BankKernel {
    let mut weights = [0.0; BANK_SIZE * BANK_SIZE];
    let s2 = sigma * sigma;
    for di in -BANK_RADIUS..=BANK_RADIUS {
        for dj in -BANK_RADIUS..=BANK_RADIUS {
            let r2 = (di * di + dj * dj) as f64;
            weights[bank_index(di, dj)] = (r2 - 2.0 * s2) / (s2 * s2) * (-r2 / (2.0 * s2)).exp();
        }
    }
    let mean: f64 = weights.iter().sum::<f64>() / weights.len() as f64;
    for w in &mut weights {
        *w -= mean;
    }
    BankKernel { weights, zero_dc: true }
}

/// Separable first derivative of a Gaussian; `along_rows` selects the
/// vertical (y) derivative. Unit-slope normalized along the derivative axis.
fn derivative_kernel(sigma: f64, along_rows: bool) -> BankKernel {
    let s2 = sigma * sigma;
    let mut smooth = [0.0; BANK_SIZE];
    let mut deriv = [0.0; BANK_SIZE];
    let mut smooth_sum = 0.0;
    let mut slope = 0.0;
    for t in -BANK_RADIUS..=BANK_RADIUS {
        let x = t as f64;
        let g = (-x * x / (2.0 * s2)).exp();
        smooth[(t + BANK_RADIUS) as usize] = g;
        deriv[(t + BANK_RADIUS) as usize] = -x * g;
        slope += x * x * g;
    }
    for g in &mut smooth {
        smooth_sum += *g;
    }
    for g in &mut smooth {
        *g /= smooth_sum;
    }
    for d in &mut deriv {
        *d /= slope;
    }
    let mut weights = [0.0; BANK_SIZE * BANK_SIZE];
    for di in -BANK_RADIUS..=BANK_RADIUS {
        for dj in -BANK_RADIUS..=BANK_RADIUS {
            let (a, b) = if along_rows { (deriv, smooth) } else { (smooth, deriv) };
            weights[bank_index(di, dj)] =
                a[(di + BANK_RADIUS) as usize] * b[(dj + BANK_RADIUS) as usize];
        }
    }
    BankKernel { weights, zero_dc: true }
}

fn filter_bank() -> Vec<BankKernel> {
    let mut bank = Vec::with_capacity(11);
    for sigma in [1.0, 2.0, 4.0] {
        bank.push(gaussian_kernel(sigma));
    }
    for sigma in [1.0, 2.0, 4.0, 8.0] {
        bank.push(laplacian_of_gaussian_kernel(sigma));
    }
    for sigma in [2.0, 4.0] {
        bank.push(derivative_kernel(sigma, false));
        bank.push(derivative_kernel(sigma, true));
    }
    bank
}

/// Texture filter bank: Gaussians at three scales, Laplacians of Gaussians
/// at four, and first derivatives of Gaussians in x and y at two, all on a
/// 15 x 15 support over the [0, 1]-scaled grayscale image. Eleven channels.
pub fn extract_filter_bank(img: &GrayImage) -> Result<FeatureImage> {
    let bank = filter_bank();
    let mut data = Vec::with_capacity(img.height * img.width * bank.len());
    for r in 0..img.height as isize {
        for c in 0..img.width as isize {
            let center = img.at_clamped(r, c) as f64 / 255.0;
            for kernel in &bank {
                // Responses accumulate differences to the center value, so
                // constant regions yield exactly the DC response.
                let mut acc = 0.0;
                for di in -BANK_RADIUS..=BANK_RADIUS {
                    for dj in -BANK_RADIUS..=BANK_RADIUS {
                        let v = img.at_clamped(r - di, c - dj) as f64 / 255.0;
                        acc += kernel.weights[bank_index(di, dj)] * (v - center);
                    }
                }
                data.push(if kernel.zero_dc { acc } else { center + acc });
            }
        }
    }
    Ok(FeatureImage {
        height: img.height,
        width: img.width,
        dim: bank.len(),
        data,
        provenance: "filter-bank 3xG{1,2,4} 4xLoG{1,2,4,8} 4xdG{2,4}xy 15x15".to_string(),
    })
}

/// Cuts the feature image into sliding-window documents; one word per pixel
/// of each window position, with the layout recording every word's source
/// pixel.
pub fn tile_documents(
    fimg: &FeatureImage,
    window: usize,
    stride: usize,
) -> Result<(Vec<Document>, DocLayout)> {
    if window == 0 || window > fimg.height || window > fimg.width {
        return Err(invalid("window must fit inside the image"));
    }
    if stride == 0 {
        return Err(invalid("stride must be at least 1"));
    }
    let mut docs = Vec::new();
    let mut coords = Vec::new();
    let mut r0 = 0;
    while r0 + window <= fimg.height {
        let mut c0 = 0;
        while c0 + window <= fimg.width {
            let mut words = Vec::with_capacity(window * window);
            let mut geometry = Vec::with_capacity(window * window);
            for r in r0..r0 + window {
                for c in c0..c0 + window {
                    words.push(fimg.at(r, c).to_vec());
                    geometry.push((r, c));
                }
            }
            docs.push(Document::new(words, Some(geometry.clone()))?);
            coords.push(geometry);
            c0 += stride;
        }
        r0 += stride;
    }
    let layout = DocLayout {
        scheme: LayoutScheme::SlidingWindow { window, stride },
        height: fimg.height,
        width: fimg.width,
        coords,
    };
    Ok((docs, layout))
}

/// Groups pixels into one document per distinct label, in ascending label
/// order, words in row-major scan order.
pub fn group_by_labels(
    fimg: &FeatureImage,
    labels: &LabelMap,
) -> Result<(Vec<Document>, DocLayout)> {
    if labels.height != fimg.height || labels.width != fimg.width {
        return Err(invalid("label map size must match the feature image"));
    }
    let mut groups: std::collections::BTreeMap<i64, Vec<(usize, usize)>> = Default::default();
    for r in 0..fimg.height {
        for c in 0..fimg.width {
            groups.entry(labels.labels[r * fimg.width + c]).or_default().push((r, c));
        }
    }
    let mut docs = Vec::with_capacity(groups.len());
    let mut coords = Vec::with_capacity(groups.len());
    for (_, pixels) in groups {
        let words = pixels.iter().map(|&(r, c)| fimg.at(r, c).to_vec()).collect();
        docs.push(Document::new(words, Some(pixels.clone()))?);
        coords.push(pixels);
    }
    let layout = DocLayout {
        scheme: LayoutScheme::LabelMap,
        height: fimg.height,
        width: fimg.width,
        coords,
    };
    Ok((docs, layout))
}
