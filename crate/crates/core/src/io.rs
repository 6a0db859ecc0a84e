//! Binary file formats. All multi-byte values are little-endian; real values
//! are stored as `f32`.
//!
//! | file      | layout |
//! |-----------|--------|
//! | latent    | `"LAT1"`, u16 version, u32 L, u32 D, L·D f32 row-major |
//! | direction | `"DIR1"`, u16 version, u32 L, u32 D, L·D f32, f32 bias, u16 name length, UTF-8 name |
//! | generator | `"GEN1"`, u16 version, u8 kind (0 linear, 1 mlp), u64 seed, u32 L, u32 D, u32 n, u32 C, f32 gain, [u32 hidden], L·D f32 planted direction (unnormalized), parameters as f32 |
//! | image     | `"IMF1"`, u16 version, u32 H, u32 W, u32 C, C·H·W f32 channel-planar |
//!
//! Generator parameters follow in order: linear `A` (row-major `n²C × LD`),
//! `c`; MLP `W₁`, `b₁`, `W₂`, `b₂`. 8-bit images use binary PPM (`P6`) for
//! three channels and PGM (`P5`) for one.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::directions::AttributeDirection;
use crate::error::{Error, Result};
use crate::generator::{LinearGenerator, MlpGenerator, ReferenceGenerator, SyntheticWorld};
use crate::image::ImageBuf;
use crate::latent::LatentCode;
use crate::scalar::Scalar;

pub const LATENT_MAGIC: &[u8; 4] = b"LAT1";
pub const DIRECTION_MAGIC: &[u8; 4] = b"DIR1";
pub const GENERATOR_MAGIC: &[u8; 4] = b"GEN1";
pub const IMAGE_MAGIC: &[u8; 4] = b"IMF1";
pub const FORMAT_VERSION: u16 = 1;

/// Norm tolerance when reading unit directions back from `f32` storage.
pub const STORED_UNIT_TOLERANCE: f64 = 1e-6;

const KIND_LINEAR: u8 = 0;
const KIND_MLP: u8 = 1;

fn put_f32s<T: Scalar>(out: &mut impl Write, values: &[T]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

fn take<const N: usize>(input: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    input
        .read_exact(&mut b)
        .map_err(|e| Error::Format(format!("truncated file: {e}")))?;
    Ok(b)
}

fn get_u16(input: &mut impl Read) -> Result<u16> {
    Ok(u16::from_le_bytes(take(input)?))
}

fn get_u32(input: &mut impl Read) -> Result<usize> {
    Ok(u32::from_le_bytes(take(input)?) as usize)
}

fn get_u64(input: &mut impl Read) -> Result<u64> {
    Ok(u64::from_le_bytes(take(input)?))
}

fn get_f32<T: Scalar>(input: &mut impl Read) -> Result<T> {
    Ok(T::lit(f32::from_le_bytes(take(input)?) as f64))
}

fn get_f32s<T: Scalar>(input: &mut impl Read, count: usize) -> Result<Vec<T>> {
    let mut buf = vec![0u8; count * 4];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated file: {e}")))?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| T::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
        .collect())
}

fn put_u32(out: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} exceeds u32")))?;
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn header(out: &mut impl Write, magic: &[u8; 4]) -> Result<()> {
    out.write_all(magic)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    Ok(())
}

fn expect_header(input: &mut impl Read, magic: &[u8; 4]) -> Result<()> {
    let got: [u8; 4] = take(input)?;
    if &got != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = get_u16(input)?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    Ok(())
}

fn expect_eof(input: &mut impl Read) -> Result<()> {
    let mut probe = [0u8; 1];
    match input.read(&mut probe)? {
        0 => Ok(()),
        _ => Err(Error::Format("trailing bytes".into())),
    }
}

pub fn write_latent<T: Scalar>(out: &mut impl Write, w: &LatentCode<T>) -> Result<()> {
    header(out, LATENT_MAGIC)?;
    put_u32(out, w.layers())?;
    put_u32(out, w.dims())?;
    put_f32s(out, w.as_slice())
}

pub fn read_latent<T: Scalar>(input: &mut impl Read) -> Result<LatentCode<T>> {
    expect_header(input, LATENT_MAGIC)?;
    let l = get_u32(input)?;
    let d = get_u32(input)?;
    let values = get_f32s(input, l * d)?;
    expect_eof(input)?;
    LatentCode::new(l, d, values)
}

pub fn write_direction<T: Scalar>(out: &mut impl Write, dir: &AttributeDirection<T>) -> Result<()> {
    header(out, DIRECTION_MAGIC)?;
    let (l, d) = dir.shape();
    put_u32(out, l)?;
    put_u32(out, d)?;
    put_f32s(out, dir.vector().as_slice())?;
    put_f32s(out, &[dir.bias])?;
    let name = dir.name.as_bytes();
    let len =
        u16::try_from(name.len()).map_err(|_| Error::Format("direction name too long".into()))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(name)?;
    Ok(())
}

/// Stored values are used as-is; their norm must be within
/// [`STORED_UNIT_TOLERANCE`] of one.
pub fn read_direction<T: Scalar>(input: &mut impl Read) -> Result<AttributeDirection<T>> {
    expect_header(input, DIRECTION_MAGIC)?;
    let l = get_u32(input)?;
    let d = get_u32(input)?;
    let values = get_f32s(input, l * d)?;
    let bias = get_f32(input)?;
    let len = get_u16(input)? as usize;
    let mut name = vec![0u8; len];
    input
        .read_exact(&mut name)
        .map_err(|e| Error::Format(format!("truncated name: {e}")))?;
    expect_eof(input)?;
    let name =
        String::from_utf8(name).map_err(|e| Error::Format(format!("name is not UTF-8: {e}")))?;
    AttributeDirection::from_unit(
        LatentCode::new(l, d, values)?,
        bias,
        name,
        STORED_UNIT_TOLERANCE,
    )
}

pub fn write_generator<T: Scalar>(out: &mut impl Write, gen: &ReferenceGenerator<T>) -> Result<()> {
    header(out, GENERATOR_MAGIC)?;
    let world = gen.world();
    out.write_all(&[match gen {
        ReferenceGenerator::Linear(_) => KIND_LINEAR,
        ReferenceGenerator::Mlp(_) => KIND_MLP,
    }])?;
    out.write_all(&world.seed.to_le_bytes())?;
    for v in [world.layers, world.dims, world.out_size, world.channels] {
        put_u32(out, v)?;
    }
    put_f32s(out, &[world.gain])?;
    if let ReferenceGenerator::Mlp(g) = gen {
        put_u32(out, g.hidden())?;
    }
    put_f32s(out, world.planted_raw().as_slice())?;
    match gen {
        ReferenceGenerator::Linear(g) => {
            put_f32s(out, g.weights())?;
            put_f32s(out, g.bias())
        }
        ReferenceGenerator::Mlp(g) => {
            let (w1, b1, w2, b2) = g.parts();
            for block in [w1, b1, w2, b2] {
                put_f32s(out, block)?;
            }
            Ok(())
        }
    }
}

pub fn read_generator<T: Scalar>(input: &mut impl Read) -> Result<ReferenceGenerator<T>> {
    expect_header(input, GENERATOR_MAGIC)?;
    let [kind] = take::<1>(input)?;
    let seed = get_u64(input)?;
    let layers = get_u32(input)?;
    let dims = get_u32(input)?;
    let n = get_u32(input)?;
    let channels = get_u32(input)?;
    let gain: T = get_f32(input)?;
    let hidden = if kind == KIND_MLP {
        Some(get_u32(input)?)
    } else {
        None
    };
    let planted = LatentCode::new(layers, dims, get_f32s(input, layers * dims)?)?;
    let mut world = SyntheticWorld::with_direction(seed, n, channels, planted)?;
    world.gain = gain;
    let k = layers * dims;
    let pixels = world.image_len();
    let gen = match (kind, hidden) {
        (KIND_LINEAR, None) => {
            let weights = get_f32s(input, pixels * k)?;
            let bias = get_f32s(input, pixels)?;
            ReferenceGenerator::Linear(LinearGenerator::from_parts(world, weights, bias)?)
        }
        (KIND_MLP, Some(h)) => {
            let w1 = get_f32s(input, h * k)?;
            let b1 = get_f32s(input, h)?;
            let w2 = get_f32s(input, pixels * h)?;
            let b2 = get_f32s(input, pixels)?;
            ReferenceGenerator::Mlp(MlpGenerator::from_parts(world, h, w1, b1, w2, b2)?)
        }
        _ => return Err(Error::Format(format!("unknown generator kind {kind}"))),
    };
    expect_eof(input)?;
    Ok(gen)
}

pub fn write_image_raw<T: Scalar>(out: &mut impl Write, img: &ImageBuf<T>) -> Result<()> {
    header(out, IMAGE_MAGIC)?;
    let (h, w, c) = img.dims();
    for v in [h, w, c] {
        put_u32(out, v)?;
    }
    let planar: Vec<T> = (0..c)
        .flat_map(|ch| img.as_slice().iter().skip(ch).step_by(c).copied())
        .collect();
    put_f32s(out, &planar)
}

pub fn read_image_raw<T: Scalar>(input: &mut impl Read) -> Result<ImageBuf<T>> {
    expect_header(input, IMAGE_MAGIC)?;
    let h = get_u32(input)?;
    let w = get_u32(input)?;
    let c = get_u32(input)?;
    let planar: Vec<T> = get_f32s(input, h * w * c)?;
    expect_eof(input)?;
    let plane = h * w;
    ImageBuf::from_fn(h, w, c, |y, x, ch| planar[ch * plane + y * w + x])
}

/// 8-bit binary PPM (3 channels) or PGM (1 channel); values are rounded.
pub fn write_pnm<T: Scalar>(out: &mut impl Write, img: &ImageBuf<T>) -> Result<()> {
    let (h, w, c) = img.dims();
    let magic = if c == 3 { "P6" } else { "P5" };
    write!(out, "{magic}\n{w} {h}\n255\n")?;
    let bytes: Vec<u8> = img
        .as_slice()
        .iter()
        .map(|v| (v.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    out.write_all(&bytes)?;
    Ok(())
}

pub fn read_pnm<T: Scalar>(input: &mut impl Read) -> Result<ImageBuf<T>> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut pos = 0usize;
    let mut token = || -> Result<String> {
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PNM header".into()));
        }
        Ok(String::from_utf8_lossy(&data[start..pos]).into_owned())
    };
    let magic = token()?;
    let c = match magic.as_str() {
        "P6" => 3,
        "P5" => 1,
        other => return Err(Error::Format(format!("unsupported PNM magic {other}"))),
    };
    let parse = |s: String| {
        s.parse::<usize>()
            .map_err(|e| Error::Format(format!("bad PNM header: {e}")))
    };
    let w = parse(token()?)?;
    let h = parse(token()?)?;
    let maxval = parse(token()?)?;
    if maxval != 255 {
        return Err(Error::Format(format!(
            "only 8-bit PNM supported, maxval {maxval}"
        )));
    }
    let start = pos + 1;
    let body = data
        .get(start..start + w * h * c)
        .ok_or_else(|| Error::Format("truncated PNM body".into()))?;
    let values = body.iter().map(|&b| T::lit(b as f64 / 255.0)).collect();
    ImageBuf::new(h, w, c, values)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

pub fn save_latent<T: Scalar>(path: &Path, w: &LatentCode<T>) -> Result<()> {
    let mut f = create(path)?;
    write_latent(&mut f, w)?;
    f.flush()?;
    Ok(())
}

pub fn load_latent<T: Scalar>(path: &Path) -> Result<LatentCode<T>> {
    read_latent(&mut open(path)?)
}

pub fn save_direction<T: Scalar>(path: &Path, d: &AttributeDirection<T>) -> Result<()> {
    let mut f = create(path)?;
    write_direction(&mut f, d)?;
    f.flush()?;
    Ok(())
}

pub fn load_direction<T: Scalar>(path: &Path) -> Result<AttributeDirection<T>> {
    read_direction(&mut open(path)?)
}

pub fn save_generator<T: Scalar>(path: &Path, g: &ReferenceGenerator<T>) -> Result<()> {
    let mut f = create(path)?;
    write_generator(&mut f, g)?;
    f.flush()?;
    Ok(())
}

pub fn load_generator<T: Scalar>(path: &Path) -> Result<ReferenceGenerator<T>> {
    read_generator(&mut open(path)?)
}

/// Chooses the format by extension: `.ppm`/`.pgm` for 8-bit, anything else raw.
pub fn save_image<T: Scalar>(path: &Path, img: &ImageBuf<T>) -> Result<()> {
    let mut f = create(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") | Some("pgm") => write_pnm(&mut f, img)?,
        _ => write_image_raw(&mut f, img)?,
    }
    f.flush()?;
    Ok(())
}

pub fn load_image<T: Scalar>(path: &Path) -> Result<ImageBuf<T>> {
    let mut f = open(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") | Some("pgm") => read_pnm(&mut f),
        _ => read_image_raw(&mut f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_layout_is_exact() {
        let w = LatentCode::new(1, 2, vec![1.0f64, -2.5]).unwrap();
        let mut buf = Vec::new();
        write_latent(&mut buf, &w).unwrap();
        let mut expect = b"LAT1".to_vec();
        expect.extend_from_slice(&1u16.to_le_bytes());
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.extend_from_slice(&2u32.to_le_bytes());
        expect.extend_from_slice(&1.0f32.to_le_bytes());
        expect.extend_from_slice(&(-2.5f32).to_le_bytes());
        assert_eq!(buf, expect);
    }

    #[test]
    fn direction_layout_is_exact() {
        let d = AttributeDirection::from_raw(
            LatentCode::new(1, 2, vec![0.0f64, 2.0]).unwrap(),
            1.0,
            "wt",
        )
        .unwrap();
        let mut buf = Vec::new();
        write_direction(&mut buf, &d).unwrap();
        let mut expect = b"DIR1".to_vec();
        expect.extend_from_slice(&1u16.to_le_bytes());
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.extend_from_slice(&2u32.to_le_bytes());
        expect.extend_from_slice(&0.0f32.to_le_bytes());
        expect.extend_from_slice(&1.0f32.to_le_bytes());
        expect.extend_from_slice(&0.5f32.to_le_bytes());
        expect.extend_from_slice(&2u16.to_le_bytes());
        expect.extend_from_slice(b"wt");
        assert_eq!(buf, expect);
        let back: AttributeDirection<f64> = read_direction(&mut buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let w = LatentCode::new(1, 2, vec![1.0f64, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_latent(&mut buf, &w).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_latent::<f64>(&mut bad.as_slice()),
            Err(Error::Format(_))
        ));
        let short = &buf[..buf.len() - 1];
        assert!(matches!(
            read_latent::<f64>(&mut &short[..]),
            Err(Error::Format(_))
        ));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(
            read_latent::<f64>(&mut long.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn pnm_round_trip_on_byte_grid() {
        let img = ImageBuf::from_fn(3, 5, 3, |y, x, c| ((y * 15 + x * 3 + c) * 5) as f64 / 255.0)
            .unwrap();
        let mut buf = Vec::new();
        write_pnm(&mut buf, &img).unwrap();
        let back: ImageBuf<f64> = read_pnm(&mut buf.as_slice()).unwrap();
        assert_eq!(back, img);
        let gray = ImageBuf::from_fn(2, 2, 1, |y, x, _| (y * 2 + x) as f64 / 255.0).unwrap();
        let mut buf = Vec::new();
        write_pnm(&mut buf, &gray).unwrap();
        assert!(buf.starts_with(b"P5"));
        assert_eq!(read_pnm::<f64>(&mut buf.as_slice()).unwrap(), gray);
    }
}
