//! Dataset readers and writers: Middlebury PFM disparity maps, KITTI
//! 16-bit PNG disparity maps, grayscale image input, stereo-pair manifests
//! and calibration files. Readers reject trailing garbage instead of
//! silently truncating.

use std::fs;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::types::{Calibration, DisparityMap, GrayImage, INVALID_DISPARITY};

/// One line of a manifest: `name left right [gt] [calib]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoPairRecord {
    pub name: String,
    pub left: PathBuf,
    pub right: PathBuf,
    pub gt_disparity: Option<PathBuf>,
    pub calibration: Option<PathBuf>,
}

/// Middlebury PFM, grayscale `Pf` variant. Rows are stored bottom-to-top;
/// the scale factor's sign encodes endianness. Non-finite samples map to
/// the invalid sentinel.
pub fn read_pfm(path: &Path) -> Result<DisparityMap> {
    let bytes = fs::read(path)?;
    let mut cursor = 0usize;

    let mut token = |what: &str| -> Result<String> {
        while cursor < bytes.len() && bytes[cursor].is_ascii_whitespace() {
            cursor += 1;
        }
        let start = cursor;
        while cursor < bytes.len() && !bytes[cursor].is_ascii_whitespace() {
            cursor += 1;
        }
        if start == cursor {
            return Err(Error::format(path, format!("missing {what} in PFM header")));
        }
        let s = String::from_utf8(bytes[start..cursor].to_vec())
            .map_err(|_| Error::format(path, format!("non-ASCII {what} in PFM header")))?;
        // consume the single whitespace terminating the token
        if cursor < bytes.len() {
            cursor += 1;
        }
        Ok(s)
    };

    let magic = token("magic")?;
    if magic == "PF" {
        return Err(Error::format(path, "color PFM (PF) not supported, expected grayscale Pf"));
    }
    if magic != "Pf" {
        return Err(Error::format(path, format!("bad PFM magic {magic:?}")));
    }
    let width: usize = token("width")?
        .parse()
        .map_err(|_| Error::format(path, "bad PFM width"))?;
    let height: usize = token("height")?
        .parse()
        .map_err(|_| Error::format(path, "bad PFM height"))?;
    let scale: f64 = token("scale")?
        .parse()
        .map_err(|_| Error::format(path, "bad PFM scale"))?;
    if scale == 0.0 {
        return Err(Error::format(path, "PFM scale must be non-zero"));
    }
    let little_endian = scale < 0.0;

    let payload = &bytes[cursor..];
    let expected = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(4))
        .ok_or_else(|| Error::format(path, "PFM dimensions overflow"))?;
    if payload.len() < expected {
        return Err(Error::format(
            path,
            format!("truncated PFM payload: {} of {expected} bytes", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(Error::format(
            path,
            format!("{} trailing bytes after PFM payload", payload.len() - expected),
        ));
    }

    let mut data = vec![0.0f32; width * height];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().unwrap();
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        // PFM stores the bottom row first.
        let y = height - 1 - i / width;
        let x = i % width;
        data[y * width + x] = if v.is_finite() && v >= 0.0 {
            v
        } else {
            INVALID_DISPARITY
        };
    }
    DisparityMap::new(width, height, data)
}

/// Inverse of [`read_pfm`]; always little-endian (scale -1). The invalid
/// sentinel is written as +infinity.
pub fn write_pfm(map: &DisparityMap, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "Pf\n{} {}\n-1.0\n", map.width(), map.height())?;
    for y in (0..map.height()).rev() {
        for x in 0..map.width() {
            let v = map.get(y, x);
            let v = if v == INVALID_DISPARITY { f32::INFINITY } else { v };
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Validates the PNG signature and IHDR fields against the KITTI subset:
/// 16-bit, grayscale, not interlaced.
fn check_kitti_png_header(path: &Path, bytes: &[u8]) -> Result<()> {
    const SIG: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];
    if bytes.len() < 33 || bytes[..8] != SIG {
        return Err(Error::format(path, "not a PNG file"));
    }
    if &bytes[12..16] != b"IHDR" {
        return Err(Error::format(path, "PNG missing IHDR"));
    }
    let bit_depth = bytes[24];
    let color_type = bytes[25];
    let interlace = bytes[28];
    if bit_depth != 16 || color_type != 0 {
        return Err(Error::format(
            path,
            format!(
                "unsupported PNG format: bit depth {bit_depth}, color type {color_type}; \
                 expected 16-bit grayscale"
            ),
        ));
    }
    if interlace != 0 {
        return Err(Error::format(path, "interlaced PNG not supported"));
    }
    // IEND is the final 12 bytes of a well-formed PNG; anything after it is
    // trailing garbage.
    let tail = &bytes[bytes.len() - 12..];
    if &tail[4..8] != b"IEND" {
        return Err(Error::format(path, "trailing data after PNG IEND chunk"));
    }
    Ok(())
}

/// KITTI disparity ground truth: uint16 PNG, disparity = raw / 256, raw 0
/// marks an invalid pixel.
pub fn read_kitti_disparity(path: &Path) -> Result<DisparityMap> {
    let bytes = fs::read(path)?;
    check_kitti_png_header(path, &bytes)?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, format!("PNG decode failed: {e}")))?;
    let gray = match img {
        image::DynamicImage::ImageLuma16(g) => g,
        other => {
            return Err(Error::format(
                path,
                format!("unsupported PNG pixel layout {:?}", other.color()),
            ))
        }
    };
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let data = gray
        .pixels()
        .map(|p| {
            let raw = p.0[0];
            if raw == 0 {
                INVALID_DISPARITY
            } else {
                raw as f32 / 256.0
            }
        })
        .collect();
    DisparityMap::new(w, h, data)
}

/// Inverse of [`read_kitti_disparity`]: raw = round(d * 256) clamped to
/// [1, 65535] for valid pixels, 0 for invalid ones.
pub fn write_kitti_disparity(map: &DisparityMap, path: &Path) -> Result<()> {
    let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
        map.width() as u32,
        map.height() as u32,
    );
    for (x, y, p) in img.enumerate_pixels_mut() {
        let d = map.get(y as usize, x as usize);
        p.0[0] = if d == INVALID_DISPARITY {
            0
        } else {
            ((d as f64 * 256.0).round() as i64).clamp(1, 65535) as u16
        };
    }
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, format!("PNG encode failed: {e}")))?;
    Ok(())
}

/// Load an image file as 8-bit grayscale. Color inputs are converted with
/// the Rec. 601 luma weights.
pub fn read_gray_image(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| Error::format(path, format!("image decode failed: {e}")))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<u8> = match img {
        image::DynamicImage::ImageLuma8(g) => g.into_raw(),
        other => {
            let rgb = other.to_rgb8();
            rgb.pixels()
                .map(|p| {
                    let [r, g, b] = p.0;
                    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u8
                })
                .collect()
        }
    };
    GrayImage::new(w, h, data)
}

pub fn write_gray_image(img: &GrayImage, path: &Path) -> Result<()> {
    let buf = image::GrayImage::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.data().to_vec(),
    )
    .expect("dimensions match data");
    buf.save(path)
        .map_err(|e| Error::format(path, format!("image encode failed: {e}")))?;
    Ok(())
}

/// 2x box-filter downsample for images whose size is even in both axes; odd
/// trailing rows/columns are dropped.
pub fn downsample_image_2x(img: &GrayImage) -> Result<GrayImage> {
    let (w, h) = (img.width() / 2, img.height() / 2);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let sum = img.get(2 * y, 2 * x) as u32
                + img.get(2 * y, 2 * x + 1) as u32
                + img.get(2 * y + 1, 2 * x) as u32
                + img.get(2 * y + 1, 2 * x + 1) as u32;
            data.push(((sum + 2) / 4) as u8);
        }
    }
    GrayImage::new(w, h, data)
}

/// 2x downsample of a disparity map; disparities are halved to stay
/// consistent with the new pixel pitch. A block is valid if its top-left
/// sample is valid.
pub fn downsample_disparity_2x(map: &DisparityMap) -> Result<DisparityMap> {
    let (w, h) = (map.width() / 2, map.height() / 2);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = map.get(2 * y, 2 * x);
            data.push(if v == INVALID_DISPARITY { v } else { v / 2.0 });
        }
    }
    DisparityMap::new(w, h, data)
}

/// Parse a manifest: one `name left right [gt] [calib]` record per line,
/// `#` comments. Paths are resolved relative to the manifest location and
/// must exist.
pub fn read_manifest(path: &Path) -> Result<Vec<StereoPairRecord>> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let file = fs::File::open(path)?;
    let mut records: Vec<StereoPairRecord> = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() < 3 || fields.len() > 5 {
            return Err(Error::format_at(
                path,
                lineno,
                format!("expected `name left right [gt] [calib]`, got {} fields", fields.len()),
            ));
        }
        let name = fields[0].to_string();
        if records.iter().any(|r| r.name == name) {
            return Err(Error::format_at(path, lineno, format!("duplicate pair name {name:?}")));
        }
        let resolve = |field: &str| -> Result<PathBuf> {
            let p = dir.join(field);
            if !p.is_file() {
                return Err(Error::format_at(
                    path,
                    lineno,
                    format!("file not found: {}", p.display()),
                ));
            }
            Ok(p)
        };
        records.push(StereoPairRecord {
            name,
            left: resolve(fields[1])?,
            right: resolve(fields[2])?,
            gt_disparity: fields.get(3).map(|f| resolve(f)).transpose()?,
            calibration: fields.get(4).map(|f| resolve(f)).transpose()?,
        });
    }
    Ok(records)
}

/// Key=value calibration file with `focal_px` and `baseline_m` entries.
pub fn read_calibration(path: &Path) -> Result<Calibration> {
    let mut focal = None;
    let mut baseline = None;
    let file = fs::File::open(path)?;
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| Error::format_at(path, lineno, "expected key=value"))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::format_at(path, lineno, format!("bad value {:?}", value.trim())))?;
        match key.trim() {
            "focal_px" => focal = Some(value),
            "baseline_m" => baseline = Some(value),
            other => {
                return Err(Error::format_at(path, lineno, format!("unknown key {other:?}")));
            }
        }
    }
    let focal = focal.ok_or_else(|| Error::format(path, "missing focal_px"))?;
    let baseline = baseline.ok_or_else(|| Error::format(path, "missing baseline_m"))?;
    Calibration::new(focal, baseline)
        .map_err(|e| Error::format(path, e.to_string()))
}

/// Colormapped disparity preview (blue = near 0, red = max, invalid black).
pub fn write_preview(map: &DisparityMap, path: &Path) -> Result<()> {
    let max = map
        .data()
        .iter()
        .copied()
        .filter(|&v| v != INVALID_DISPARITY)
        .fold(0.0f32, f32::max)
        .max(1.0);
    let mut img =
        image::RgbImage::new(map.width() as u32, map.height() as u32);
    for (x, y, p) in img.enumerate_pixels_mut() {
        let d = map.get(y as usize, x as usize);
        p.0 = if d == INVALID_DISPARITY {
            [0, 0, 0]
        } else {
            let t = (d / max).clamp(0.0, 1.0);
            // simple blue -> green -> red ramp
            let r = (255.0 * (2.0 * t - 1.0).clamp(0.0, 1.0)) as u8;
            let g = (255.0 * (1.0 - (2.0 * t - 1.0).abs()).clamp(0.0, 1.0)) as u8;
            let b = (255.0 * (1.0 - 2.0 * t).clamp(0.0, 1.0)) as u8;
            [r, g, b]
        };
    }
    img.save(path)
        .map_err(|e| Error::format(path, format!("preview encode failed: {e}")))?;
    Ok(())
}

/// Guard against readers that would accept arbitrary trailing bytes.
pub fn has_trailing_garbage(path: &Path, expected_len: usize) -> Result<bool> {
    let mut file = fs::File::open(path)?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)?;
    Ok(buf.len() > expected_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize) -> DisparityMap {
        DisparityMap::new(
            w,
            h,
            (0..w * h)
                .map(|_| {
                    if rng.gen_bool(0.1) {
                        INVALID_DISPARITY
                    } else {
                        rng.gen_range(0.0f32..128.0)
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn pfm_round_trip_is_bit_exact() {
        let dir = tmp();
        let path = dir.path().join("m.pfm");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let map = random_map(&mut rng, 17, 9);
            write_pfm(&map, &path).unwrap();
            let back = read_pfm(&path).unwrap();
            assert_eq!(back, map);
        }
    }

    #[test]
    fn pfm_hand_built_fixture_with_inf() {
        let dir = tmp();
        let path = dir.path().join("f.pfm");
        let mut bytes = b"Pf\n2 2\n-1.0\n".to_vec();
        // bottom row first: (1.5, 2.5) then top row (3.5, inf)
        for v in [1.5f32, 2.5, 3.5, f32::INFINITY] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&path, bytes).unwrap();
        let map = read_pfm(&path).unwrap();
        assert_eq!(map.get(1, 0), 1.5);
        assert_eq!(map.get(1, 1), 2.5);
        assert_eq!(map.get(0, 0), 3.5);
        assert!(!map.is_valid(0, 1));
    }

    #[test]
    fn pfm_big_endian_fixture() {
        let dir = tmp();
        let path = dir.path().join("be.pfm");
        let mut bytes = b"Pf\n1 1\n1.0\n".to_vec();
        bytes.extend_from_slice(&42.0f32.to_be_bytes());
        fs::write(&path, bytes).unwrap();
        assert_eq!(read_pfm(&path).unwrap().get(0, 0), 42.0);
    }

    #[test]
    fn pfm_rejects_malformed_inputs() {
        let dir = tmp();
        let path = dir.path().join("bad.pfm");

        fs::write(&path, b"PF\n1 1\n-1.0\n\0\0\0\0\0\0\0\0\0\0\0\0").unwrap();
        let err = read_pfm(&path).unwrap_err().to_string();
        assert!(err.contains("color"), "{err}");

        fs::write(&path, b"Pf\n2 2\n-1.0\n\0\0\0\0").unwrap();
        let err = read_pfm(&path).unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");

        fs::write(&path, b"Pf\n1 1\n-1.0\n\0\0\0\0EXTRA").unwrap();
        let err = read_pfm(&path).unwrap_err().to_string();
        assert!(err.contains("trailing"), "{err}");

        fs::write(&path, b"Qx\n1 1\n-1.0\n\0\0\0\0").unwrap();
        assert!(read_pfm(&path).is_err());
    }

    #[test]
    fn pfm_golden_bytes() {
        // 1x2 map, valid 3.0 on top, invalid below -> written bottom-first.
        let dir = tmp();
        let path = dir.path().join("g.pfm");
        let map = DisparityMap::new(1, 2, vec![3.0, INVALID_DISPARITY]).unwrap();
        write_pfm(&map, &path).unwrap();
        let mut expect = b"Pf\n1 2\n-1.0\n".to_vec();
        expect.extend_from_slice(&f32::INFINITY.to_le_bytes());
        expect.extend_from_slice(&3.0f32.to_le_bytes());
        assert_eq!(fs::read(&path).unwrap(), expect);
    }

    #[test]
    fn kitti_round_trip_within_quantization() {
        let dir = tmp();
        let path = dir.path().join("d.png");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let map = DisparityMap::new(
            13,
            7,
            (0..91)
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        INVALID_DISPARITY
                    } else {
                        rng.gen_range(0.01f32..255.0)
                    }
                })
                .collect(),
        )
        .unwrap();
        write_kitti_disparity(&map, &path).unwrap();
        let back = read_kitti_disparity(&path).unwrap();
        for y in 0..7 {
            for x in 0..13 {
                let (a, b) = (map.get(y, x), back.get(y, x));
                if a == INVALID_DISPARITY {
                    assert_eq!(b, INVALID_DISPARITY);
                } else {
                    assert!((a - b).abs() <= 1.0 / 256.0, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn kitti_scale_and_invalid_conventions() {
        let dir = tmp();
        let path = dir.path().join("s.png");
        let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(2, 1);
        img.put_pixel(0, 0, image::Luma([256]));
        img.put_pixel(1, 0, image::Luma([0]));
        img.save(&path).unwrap();
        let map = read_kitti_disparity(&path).unwrap();
        assert_eq!(map.get(0, 0), 1.0);
        assert!(!map.is_valid(0, 1));
    }

    #[test]
    fn kitti_rejects_8bit_and_color() {
        let dir = tmp();
        let p8 = dir.path().join("8.png");
        image::GrayImage::new(2, 2).save(&p8).unwrap();
        assert!(read_kitti_disparity(&p8).is_err());

        let prgb = dir.path().join("rgb.png");
        image::RgbImage::new(2, 2).save(&prgb).unwrap();
        assert!(read_kitti_disparity(&prgb).is_err());
    }

    #[test]
    fn kitti_rejects_trailing_garbage() {
        let dir = tmp();
        let path = dir.path().join("t.png");
        let map = DisparityMap::new(2, 2, vec![1.0; 4]).unwrap();
        write_kitti_disparity(&map, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.extend_from_slice(b"junk");
        fs::write(&path, bytes).unwrap();
        assert!(read_kitti_disparity(&path).is_err());
    }

    #[test]
    fn kitti_all_invalid_is_all_zero() {
        let dir = tmp();
        let path = dir.path().join("z.png");
        let map = DisparityMap::new(3, 2, vec![INVALID_DISPARITY; 6]).unwrap();
        write_kitti_disparity(&map, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        let img = image::load_from_memory(&bytes).unwrap().into_luma16();
        assert!(img.pixels().all(|p| p.0[0] == 0));
    }

    #[test]
    fn manifest_parsing() {
        let dir = tmp();
        for f in ["l.png", "r.png", "gt.pfm"] {
            fs::write(dir.path().join(f), b"x").unwrap();
        }
        let mpath = dir.path().join("pairs.txt");

        fs::write(&mpath, "# empty\n\n").unwrap();
        assert!(read_manifest(&mpath).unwrap().is_empty());

        fs::write(
            &mpath,
            "a l.png r.png\nb l.png r.png gt.pfm\n# comment\nc l.png r.png gt.pfm\n",
        )
        .unwrap();
        let recs = read_manifest(&mpath).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].name, "a");
        assert!(recs[1].gt_disparity.is_some());

        fs::write(&mpath, "a l.png\n").unwrap();
        assert!(matches!(
            read_manifest(&mpath),
            Err(Error::FormatAt { line: 1, .. })
        ));

        fs::write(&mpath, "a l.png r.png\nb l.png missing.png\n").unwrap();
        assert!(matches!(
            read_manifest(&mpath),
            Err(Error::FormatAt { line: 2, .. })
        ));

        fs::write(&mpath, "a l.png r.png\na l.png r.png\n").unwrap();
        assert!(read_manifest(&mpath).is_err());
    }

    #[test]
    fn calibration_parsing() {
        let dir = tmp();
        let path = dir.path().join("calib.txt");
        fs::write(&path, "# rig\nfocal_px = 1000\nbaseline_m = 0.5\n").unwrap();
        let cal = read_calibration(&path).unwrap();
        assert_eq!(cal.focal_px(), 1000.0);
        assert_eq!(cal.baseline_m(), 0.5);

        fs::write(&path, "focal_px = 1000\n").unwrap();
        assert!(read_calibration(&path).is_err());

        fs::write(&path, "# just a comment\n").unwrap();
        assert!(read_calibration(&path).is_err());

        fs::write(&path, "focal_px = -5\nbaseline_m = 0.5\n").unwrap();
        assert!(read_calibration(&path).is_err());
    }

    #[test]
    fn downsample_halves_disparities() {
        let img = GrayImage::new(4, 4, (0..16).map(|i| (i * 10) as u8).collect()).unwrap();
        let half = downsample_image_2x(&img).unwrap();
        assert_eq!(half.width(), 2);
        assert_eq!(half.get(0, 0), 25); // (0 + 10 + 40 + 50 + 2) / 4
        let map = DisparityMap::new(2, 2, vec![8.0, 6.0, INVALID_DISPARITY, 2.0]).unwrap();
        let dm = downsample_disparity_2x(&map).unwrap();
        assert_eq!(dm.get(0, 0), 4.0);
    }
}
