//! Shared synthetic stereo fixtures for integration tests. Scenes are
//! fronto-parallel layered compositions: the right view is a textured
//! raster with some textureless patches, the left view is synthesized from
//! it through a known piecewise-constant disparity field, so dense ground
//! truth is available by construction.

use guided_stereo::{DisparityMap, GrayImage, INVALID_DISPARITY};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Scene {
    pub left: GrayImage,
    pub right: GrayImage,
    pub gt: DisparityMap,
}

pub const SCENE_MAX_DISP: usize = 32;

/// Generate one stereo pair with dense ground truth. Different seeds move
/// the foreground rectangles and regenerate the texture.
pub fn scene(seed: u64) -> Scene {
    let (w, h) = (192usize, 128usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Right-view texture, mildly smoothed random noise.
    let raw: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
    let mut right = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0u32;
            let mut n = 0u32;
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let (ny, nx) = (y as isize + dy, x as isize + dx);
                    if ny >= 0 && ny < h as isize && nx >= 0 && nx < w as isize {
                        sum += raw[ny as usize * w + nx as usize] as u32;
                        n += 1;
                    }
                }
            }
            right[y * w + x] = (sum / n) as u8;
        }
    }

    // Textureless patches in the right view make matching ambiguous there;
    // the baseline has to guess from smoothing, hints resolve it.
    for _ in 0..2 {
        let pw = rng.gen_range(30..50);
        let ph = rng.gen_range(24..40);
        let x0 = rng.gen_range(0..w - pw);
        let y0 = rng.gen_range(0..h - ph);
        let level = rng.gen_range(90..170) as u8;
        for y in y0..y0 + ph {
            for x in x0..x0 + pw {
                right[y * w + x] = level;
            }
        }
    }

    // Piecewise-constant disparity field over the left view: background
    // plane plus two foreground rectangles.
    let bg = 6.0f32;
    let mut disp = vec![bg; w * h];
    for &d in &[14.0f32, 22.0] {
        let rw = rng.gen_range(40..70);
        let rh = rng.gen_range(30..50);
        let x0 = rng.gen_range(SCENE_MAX_DISP..w - rw);
        let y0 = rng.gen_range(0..h - rh);
        for y in y0..y0 + rh {
            for x in x0..x0 + rw {
                disp[y * w + x] = d;
            }
        }
    }

    // Left view sampled through the disparity field, plus sensor noise.
    let mut left = vec![0u8; w * h];
    let mut gt = vec![INVALID_DISPARITY; w * h];
    for y in 0..h {
        for x in 0..w {
            let d = disp[y * w + x];
            let sx = x as isize - d as isize;
            if sx < 0 {
                left[y * w + x] = rng.gen();
                continue;
            }
            let noise: i16 = rng.gen_range(-5..=5);
            let v = right[y * w + sx as usize] as i16 + noise;
            left[y * w + x] = v.clamp(0, 255) as u8;
            gt[y * w + x] = d;
        }
    }

    Scene {
        left: GrayImage::new(w, h, left).unwrap(),
        right: GrayImage::new(w, h, right).unwrap(),
        gt: DisparityMap::new(w, h, gt).unwrap(),
    }
}

/// Textured fronto-parallel scene where everything sits at one disparity.
#[allow(dead_code)] // not every test target uses both scene builders
pub fn constant_shift_scene(seed: u64, shift: usize) -> Scene {
    let (w, h) = (96usize, 64usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let right: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
    let mut left = vec![0u8; w * h];
    let mut gt = vec![INVALID_DISPARITY; w * h];
    for y in 0..h {
        for x in 0..w {
            if x >= shift {
                left[y * w + x] = right[y * w + x - shift];
                gt[y * w + x] = shift as f32;
            } else {
                left[y * w + x] = rng.gen();
            }
        }
    }
    Scene {
        left: GrayImage::new(w, h, left).unwrap(),
        right: GrayImage::new(w, h, right).unwrap(),
        gt: DisparityMap::new(w, h, gt).unwrap(),
    }
}
