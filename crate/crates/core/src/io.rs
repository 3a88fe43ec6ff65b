//! File IO: PGM (P2/P5), PPM (P3/P6) and grayscale PFM, plus the disparity
//! encodings used for ground truth and results (8-bit scaled PGM with 0 =
//! unknown, raw-float PFM) and a debug dump format for cost volumes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::cost::CostVolume;
use crate::disparity::DisparityMap;
use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Loads a PGM or PPM image (ASCII or binary). Samples with maxval above 255
/// are rescaled linearly onto [0, 255].
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let magic = read_token(&mut reader)?;
    let (channels, ascii) = match magic.as_str() {
        "P2" => (1, true),
        "P3" => (3, true),
        "P5" => (1, false),
        "P6" => (3, false),
        other => return Err(Error::format(format!("unsupported magic {other:?}"))),
    };
    let width = read_header_number(&mut reader, "width")?;
    let height = read_header_number(&mut reader, "height")?;
    let maxval = read_header_number(&mut reader, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format("zero image dimension".to_string()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format(format!("maxval {maxval} out of range")));
    }

    let count = width * height * channels;
    let mut samples = Vec::with_capacity(count);
    if ascii {
        for _ in 0..count {
            let v = read_header_number(&mut reader, "sample")?;
            if v > maxval {
                return Err(Error::format(format!("sample {v} exceeds maxval {maxval}")));
            }
            samples.push(v);
        }
    } else if maxval < 256 {
        let mut buf = vec![0u8; count];
        reader.read_exact(&mut buf)?;
        samples.extend(buf.into_iter().map(|b| b as usize));
    } else {
        let mut buf = vec![0u8; count * 2];
        reader.read_exact(&mut buf)?;
        samples.extend(
            buf.chunks_exact(2)
                .map(|b| u16::from_be_bytes([b[0], b[1]]) as usize),
        );
    }

    let data = if maxval == 255 {
        samples.into_iter().map(|v| v as u8).collect()
    } else {
        samples
            .into_iter()
            .map(|v| (v * 255 / maxval) as u8)
            .collect()
    };
    Ok(ImageBuffer::new(width, height, channels, data))
}

/// Writes a binary PGM (1 channel) or PPM (3 channels) with maxval 255.
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    writeln!(w, "{magic}\n{} {}\n255", img.width, img.height)?;
    w.write_all(&img.data)?;
    w.flush()?;
    Ok(())
}

/// Writes the ASCII variant (P2/P3); handy when a dump should be greppable.
pub fn save_image_ascii(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    let magic = if img.channels == 1 { "P2" } else { "P3" };
    writeln!(w, "{magic}\n{} {}\n255", img.width, img.height)?;
    for row in img.data.chunks(img.width * img.channels) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

/// Saves a disparity map. A `.pfm` path gets raw floats (grayscale PFM,
/// little-endian, scale -1.0); anything else gets an 8-bit PGM holding
/// `round(d * scale)` clamped to [0, 255]. Invalid cells are written as 0
/// in both encodings.
pub fn save_disparity(map: &DisparityMap, path: impl AsRef<Path>, scale: f32) -> Result<()> {
    if is_pfm(path.as_ref()) {
        return save_pfm(map, path);
    }
    let mut data = Vec::with_capacity(map.width * map.height);
    for y in 0..map.height {
        for x in 0..map.width {
            let byte = match map.get(x, y) {
                Some(d) => (d * scale).round().clamp(0.0, 255.0) as u8,
                None => 0,
            };
            data.push(byte);
        }
    }
    save_image(&ImageBuffer::new(map.width, map.height, 1, data), path)
}

/// Inverse of `save_disparity`: `.pfm` reads raw floats (non-finite or 0 =>
/// invalid); PGM decodes `v / scale` with 0 meaning unknown, which matches the
/// Middlebury 8-bit ground-truth encoding when `scale` is 3.
pub fn load_disparity(path: impl AsRef<Path>, scale: f32) -> Result<DisparityMap> {
    if is_pfm(path.as_ref()) {
        return load_pfm(path);
    }
    if scale <= 0.0 {
        return Err(Error::argument(format!(
            "disparity scale must be positive, got {scale}"
        )));
    }
    let img = load_image(path)?;
    if img.channels != 1 {
        return Err(Error::format(
            "disparity PGM must be single-channel".to_string(),
        ));
    }
    let mut map = DisparityMap::new_invalid(img.width, img.height);
    for y in 0..img.height {
        for x in 0..img.width {
            let v = img.gray(x, y);
            if v != 0 {
                map.set(x, y, v as f32 / scale);
            }
        }
    }
    Ok(map)
}

fn is_pfm(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("pfm"))
        .unwrap_or(false)
}

/// Grayscale PFM writer: header `Pf`, then rows bottom-to-top as the format
/// prescribes, little-endian f32, scale -1.0. Invalid cells become 0.
fn save_pfm(map: &DisparityMap, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    writeln!(w, "Pf\n{} {}\n-1.0", map.width, map.height)?;
    for y in (0..map.height).rev() {
        for x in 0..map.width {
            let v = map.get(x, y).unwrap_or(0.0);
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn load_pfm(path: impl AsRef<Path>) -> Result<DisparityMap> {
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let magic = read_token(&mut reader)?;
    if magic == "PF" {
        return Err(Error::format("color PFM is not supported".to_string()));
    }
    if magic != "Pf" {
        return Err(Error::format(format!("unsupported magic {magic:?}")));
    }
    let width = read_header_number(&mut reader, "width")?;
    let height = read_header_number(&mut reader, "height")?;
    let scale: f32 = read_token(&mut reader)?
        .parse()
        .map_err(|_| Error::format("bad PFM scale".to_string()))?;
    if scale == 0.0 || width == 0 || height == 0 {
        return Err(Error::format("bad PFM header".to_string()));
    }
    let little_endian = scale < 0.0;
    let mut buf = vec![0u8; width * height * 4];
    reader.read_exact(&mut buf)?;
    let mut map = DisparityMap::new_invalid(width, height);
    for (i, b) in buf.chunks_exact(4).enumerate() {
        let bytes = [b[0], b[1], b[2], b[3]];
        let v = if little_endian {
            f32::from_le_bytes(bytes)
        } else {
            f32::from_be_bytes(bytes)
        };
        let x = i % width;
        let y = height - 1 - i / width; // rows are stored bottom-to-top
        if v.is_finite() && v != 0.0 {
            map.set(x, y, v);
        }
    }
    Ok(map)
}

/// Dumps a cost volume as `costvol <w> <h> <dmin> <dmax>` followed by one
/// little-endian f32 plane per disparity (row-major); out-of-bounds cells are
/// written as NaN.
pub fn save_volume(vol: &CostVolume, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path.as_ref())?);
    writeln!(
        w,
        "costvol {} {} {} {}",
        vol.width, vol.height, vol.d_min, vol.d_max
    )?;
    for d in vol.d_min..=vol.d_max {
        for y in 0..vol.height {
            for x in 0..vol.width {
                let v = vol.get(x, y, d).unwrap_or(f32::NAN);
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a `save_volume` dump back.
pub fn load_volume(path: impl AsRef<Path>) -> Result<CostVolume> {
    let mut reader = BufReader::new(File::open(path.as_ref())?);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "costvol" {
        return Err(Error::format("bad volume header".to_string()));
    }
    let width: usize = fields[1]
        .parse()
        .map_err(|_| Error::format("bad volume width"))?;
    let height: usize = fields[2]
        .parse()
        .map_err(|_| Error::format("bad volume height"))?;
    let d_min: i32 = fields[3]
        .parse()
        .map_err(|_| Error::format("bad volume dmin"))?;
    let d_max: i32 = fields[4]
        .parse()
        .map_err(|_| Error::format("bad volume dmax"))?;
    let mut vol = CostVolume::new_oob(width, height, d_min, d_max)?;
    let cells = width * height * (d_max - d_min + 1) as usize;
    let mut buf = vec![0u8; cells * 4];
    reader.read_exact(&mut buf)?;
    let mut i = 0;
    for d in d_min..=d_max {
        for y in 0..height {
            for x in 0..width {
                let b = &buf[i * 4..i * 4 + 4];
                let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
                if !v.is_nan() {
                    vol.set(x, y, d, v);
                }
                i += 1;
            }
        }
    }
    Ok(vol)
}

/// Next whitespace-delimited token, skipping `#` comments. Consumes the single
/// byte that terminates the token, which for binary PNM is exactly the
/// separator before the payload.
fn read_token(reader: &mut impl BufRead) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = reader.read(&mut byte)?;
        if n == 0 {
            if token.is_empty() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::UnexpectedEof,
                    "truncated header",
                )));
            }
            break;
        }
        let b = byte[0];
        if b == b'#' && token.is_empty() {
            // comment: skip to end of line
            loop {
                let n = reader.read(&mut byte)?;
                if n == 0 || byte[0] == b'\n' {
                    break;
                }
            }
        } else if b.is_ascii_whitespace() {
            if !token.is_empty() {
                break;
            }
        } else {
            token.push(b);
        }
    }
    String::from_utf8(token).map_err(|_| Error::format("non-ascii header token"))
}

fn read_header_number(reader: &mut impl BufRead, what: &str) -> Result<usize> {
    let token = read_token(reader)?;
    token
        .parse()
        .map_err(|_| Error::format(format!("bad {what} {token:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    fn write_bytes(path: &Path, bytes: &[u8]) {
        std::fs::write(path, bytes).unwrap();
    }

    #[test]
    fn p5_payload_is_passed_through() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_bytes(&path, b"P5\n2 2\n255\n\x00\x40\x80\xff");
        let img = load_image(&path).unwrap();
        assert_eq!((img.width, img.height, img.channels), (2, 2, 1));
        assert_eq!(img.data, vec![0, 64, 128, 255]);
    }

    #[test]
    fn p2_with_comments_parses() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_bytes(&path, b"P2\n# a comment\n2 1\n255\n12 200\n");
        let img = load_image(&path).unwrap();
        assert_eq!(img.data, vec![12, 200]);
    }

    #[test]
    fn p3_single_pixel() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.ppm");
        write_bytes(&path, b"P3\n1 1\n255\n255 0 0\n");
        let img = load_image(&path).unwrap();
        assert_eq!(img.channels, 3);
        assert_eq!(img.data, vec![255, 0, 0]);
    }

    #[test]
    fn wide_maxval_rescales_to_255() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        // maxval 1023: two-byte big-endian samples 1023 and 0
        write_bytes(&path, b"P5\n2 1\n1023\n\x03\xff\x00\x00");
        let img = load_image(&path).unwrap();
        assert_eq!(img.data, vec![255, 0]);
    }

    #[test]
    fn truncated_payload_is_io_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_bytes(&path, b"P5\n2 2\n255\n\x00\x40");
        match load_image(&path) {
            Err(Error::Io(e)) => assert_eq!(e.kind(), std::io::ErrorKind::UnexpectedEof),
            other => panic!("expected io error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_format_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        write_bytes(&path, b"P9\n1 1\n255\n\x00");
        assert!(matches!(load_image(&path), Err(Error::Format(_))));
    }

    #[test]
    fn disparity_pgm_rounds_and_scales() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.pgm");
        let mut map = DisparityMap::new_invalid(2, 1);
        map.set(0, 0, 10.5);
        save_disparity(&map, &path, 3.0).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!(img.data, vec![32, 0]); // round(10.5 * 3) = 32, invalid = 0

        let back = load_disparity(&path, 3.0).unwrap();
        assert!((back.get(0, 0).unwrap() - 32.0 / 3.0).abs() < 1e-6);
        assert_eq!(back.get(1, 0), None);
    }

    #[test]
    fn pfm_round_trip_is_lossless() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.pfm");
        let mut map = DisparityMap::new_invalid(2, 2);
        map.set(0, 0, 2.25);
        map.set(1, 1, 60.125);
        save_disparity(&map, &path, 3.0).unwrap(); // scale does not apply to PFM
        let back = load_disparity(&path, 1.0).unwrap();
        assert_eq!(back.get(0, 0), Some(2.25));
        assert_eq!(back.get(1, 1), Some(60.125));
        assert_eq!(back.get(1, 0), None);
        assert_eq!(back.get(0, 1), None);
    }

    #[test]
    fn ascii_writer_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let img = ImageBuffer::new(3, 1, 1, vec![0, 128, 255]);
        save_image_ascii(&img, &path).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }

    #[test]
    fn volume_dump_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("v.bin");
        let mut vol = CostVolume::new_oob(2, 2, 1, 3).unwrap();
        vol.set(0, 0, 1, 4.5);
        vol.set(1, 1, 3, 0.25);
        save_volume(&vol, &path).unwrap();
        let back = load_volume(&path).unwrap();
        assert_eq!(back.get(0, 0, 1), Some(4.5));
        assert_eq!(back.get(1, 1, 3), Some(0.25));
        assert_eq!(back.get(1, 0, 2), None);
        assert_eq!((back.d_min, back.d_max), (1, 3));
    }

    proptest! {
        #[test]
        fn gray_image_round_trips_via_p5(
            w in 1usize..12, h in 1usize..12, seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
            let img = ImageBuffer::new(w, h, 1, data);
            let dir = tempdir().unwrap();
            let path = dir.path().join("r.pgm");
            save_image(&img, &path).unwrap();
            prop_assert_eq!(load_image(&path).unwrap(), img);
        }

        #[test]
        fn integer_disparity_round_trips_via_pgm(
            w in 1usize..10, h in 1usize..10, seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut map = DisparityMap::new_invalid(w, h);
            for y in 0..h {
                for x in 0..w {
                    // 0 is reserved for "unknown", so valid values start at 1
                    if rng.gen_bool(0.8) {
                        map.set(x, y, rng.gen_range(1..=255) as f32);
                    }
                }
            }
            let dir = tempdir().unwrap();
            let path = dir.path().join("r.pgm");
            save_disparity(&map, &path, 1.0).unwrap();
            let back = load_disparity(&path, 1.0).unwrap();
            for y in 0..h {
                for x in 0..w {
                    prop_assert_eq!(map.get(x, y), back.get(x, y));
                }
            }
        }
    }
}
