//! 8-bit activation feature maps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Quantized activations in CHW order; real value = `q * scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: u32,
    height: u32,
    width: u32,
    data: Vec<i8>,
    pub scale: f32,
}

impl FeatureMap {
    pub fn new(channels: u32, height: u32, width: u32, data: Vec<i8>, scale: f32) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Config("feature map dimensions must be positive".into()));
        }
        let expected = channels as usize * height as usize * width as usize;
        if data.len() != expected {
            return Err(Error::Config(format!(
                "{channels}x{height}x{width} feature map needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(FeatureMap {
            channels,
            height,
            width,
            data,
            scale,
        })
    }

    /// Random activations: each value is zero with probability
    /// `1 - density`, otherwise uniform in ±[1, 127]. Every element draws
    /// its keep/drop sample and its value from the stream regardless of
    /// density, so for one seed a lower density zeroes a superset of the
    /// positions a higher density zeroes.
    pub fn synthesize(channels: u32, height: u32, width: u32, density: f64, seed: u64) -> Result<Self> {
        if !(density > 0.0 && density <= 1.0) {
            return Err(Error::Domain(format!("activation density {density} outside (0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = channels as usize * height as usize * width as usize;
        let data = (0..len)
            .map(|_| {
                let keep: f64 = rng.random();
                let magnitude: i8 = rng.random_range(1..=127);
                let negative: bool = rng.random();
                if keep >= density {
                    0
                } else if negative {
                    -magnitude
                } else {
                    magnitude
                }
            })
            .collect();
        FeatureMap::new(channels, height, width, data, 1.0 / 127.0)
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn data(&self) -> &[i8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, c: u32, y: u32, x: u32) -> i8 {
        self.data[(c as usize * self.height as usize + y as usize) * self.width as usize + x as usize]
    }

    pub fn density(&self) -> f64 {
        self.data.iter().filter(|&&v| v != 0).count() as f64 / self.data.len() as f64
    }
}

/// Parses `HxWxC`, e.g. `32x32x3`.
pub fn parse_shape(text: &str) -> Result<(u32, u32, u32)> {
    let parts: Vec<u32> = text
        .split('x')
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Domain(format!("input shape {text:?} is not HxWxC")))?;
    match parts.as_slice() {
        &[h, w, c] if h > 0 && w > 0 && c > 0 => Ok((h, w, c)),
        _ => Err(Error::Domain(format!("input shape {text:?} is not HxWxC"))),
    }
}
