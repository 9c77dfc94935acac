//! TNS tensor files and PGM previews.
//!
//! A TNS file is laid out as:
//!
//! | bytes     | content                                                   |
//! |-----------|-----------------------------------------------------------|
//! | 0..4      | magic `TNS1`                                              |
//! | 4         | dtype: `0x01` float32 LE, `0x02` complex64 (re, im) LE    |
//! | 5         | rank `r`, 1..=4                                           |
//! | 6..8      | reserved, zero                                            |
//! | 8..8+4r   | `r` dimensions, uint32 LE                                 |
//! | rest      | row-major payload, innermost dimension last               |
//!
//! There is no padding and no checksum. Multi-channel fields are written
//! with the channel as the outermost dimension, so a 4x5 vector field has
//! dimensions `[2, 4, 5]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::{Complex32, Complex64};

use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, Grid, ParamMap, Scalar, ScalarGrid, SymTensorField, VectorField};

pub const MAGIC: &[u8; 4] = b"TNS1";
const HEADER_LEN: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum Dtype {
    Float32 = 0x01,
    Complex64 = 0x02,
}

impl Dtype {
    fn from_code(code: u8) -> Option<Self> {
        match code {
            0x01 => Some(Self::Float32),
            0x02 => Some(Self::Complex64),
            _ => None,
        }
    }

    fn element_size(self) -> usize {
        match self {
            Self::Float32 => 4,
            Self::Complex64 => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Real(Vec<f32>),
    Complex(Vec<Complex32>),
}

/// In-memory image of a TNS file.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    payload: Payload,
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Format { offset, message: message.into() }
}

impl Tensor {
    pub fn new(dims: Vec<usize>, payload: Payload) -> Result<Self> {
        if dims.is_empty() || dims.len() > 4 {
            return Err(Error::Shape(format!("tensor rank must be 1..=4, got {}", dims.len())));
        }
        if let Some(d) = dims.iter().find(|&&d| d > u32::MAX as usize) {
            return Err(Error::Shape(format!("dimension {d} does not fit in uint32")));
        }
        let count: usize = dims.iter().product();
        let len = match &payload {
            Payload::Real(v) => v.len(),
            Payload::Complex(v) => v.len(),
        };
        if count != len {
            return Err(Error::Shape(format!("dims {dims:?} need {count} elements, got {len}")));
        }
        Ok(Self { dims, payload })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dtype(&self) -> Dtype {
        match self.payload {
            Payload::Real(_) => Dtype::Float32,
            Payload::Complex(_) => Dtype::Complex64,
        }
    }

    pub fn payload(&self) -> &Payload {
        &self.payload
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let count: usize = self.dims.iter().product();
        let mut out =
            Vec::with_capacity(HEADER_LEN + 4 * self.dims.len() + count * self.dtype().element_size());
        out.extend_from_slice(MAGIC);
        out.push(self.dtype() as u8);
        out.push(self.dims.len() as u8);
        out.extend_from_slice(&[0, 0]);
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        match &self.payload {
            Payload::Real(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            Payload::Complex(v) => v.iter().for_each(|z| {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(format_err(bytes.len(), "truncated magic"));
        }
        if &bytes[0..4] != MAGIC {
            return Err(format_err(0, format!("bad magic {:?}", String::from_utf8_lossy(&bytes[0..4]))));
        }
        if bytes.len() < HEADER_LEN {
            return Err(format_err(bytes.len(), "truncated header"));
        }
        let dtype = Dtype::from_code(bytes[4])
            .ok_or_else(|| format_err(4, format!("unsupported dtype code 0x{:02x}", bytes[4])))?;
        let rank = bytes[5] as usize;
        if !(1..=4).contains(&rank) {
            return Err(format_err(5, format!("unsupported rank {rank}")));
        }
        if bytes[6] != 0 || bytes[7] != 0 {
            let at = if bytes[6] != 0 { 6 } else { 7 };
            return Err(format_err(at, "reserved header bytes must be zero"));
        }
        let dims_end = HEADER_LEN + 4 * rank;
        if bytes.len() < dims_end {
            return Err(format_err(bytes.len(), "truncated dimension list"));
        }
        let dims: Vec<usize> = bytes[HEADER_LEN..dims_end]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
            .collect();
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| format_err(HEADER_LEN, "element count overflows"))?;
        let expected = count
            .checked_mul(dtype.element_size())
            .and_then(|n| n.checked_add(dims_end))
            .ok_or_else(|| format_err(HEADER_LEN, "payload size overflows"))?;
        if bytes.len() < expected {
            return Err(format_err(
                bytes.len(),
                format!("truncated payload: expected {expected} bytes in total"),
            ));
        }
        if bytes.len() > expected {
            return Err(format_err(expected, "trailing bytes after payload"));
        }
        let body = &bytes[dims_end..];
        let f32_at = |k: usize| f32::from_le_bytes([body[k], body[k + 1], body[k + 2], body[k + 3]]);
        let payload = match dtype {
            Dtype::Float32 => Payload::Real((0..count).map(|n| f32_at(4 * n)).collect()),
            Dtype::Complex64 => Payload::Complex(
                (0..count).map(|n| Complex32::new(f32_at(8 * n), f32_at(8 * n + 4))).collect(),
            ),
        };
        Ok(Self { dims, payload })
    }

    /// Splits the payload into complex samples, promoting real data.
    fn complex_values(&self) -> Vec<Complex64> {
        match &self.payload {
            Payload::Real(v) => v.iter().map(|&x| Complex64::new(x as f64, 0.0)).collect(),
            Payload::Complex(v) => v.iter().map(|z| Complex64::new(z.re as f64, z.im as f64)).collect(),
        }
    }

    fn real_values(&self) -> Result<Vec<f64>> {
        match &self.payload {
            Payload::Real(v) => Ok(v.iter().map(|&x| x as f64).collect()),
            Payload::Complex(_) => Err(Error::Shape("expected real data, found complex64".into())),
        }
    }

    fn grid_dims(&self) -> Result<(usize, usize)> {
        match self.dims[..] {
            [h, w] => Ok((h, w)),
            _ => Err(Error::Shape(format!("expected a rank-2 tensor, got dims {:?}", self.dims))),
        }
    }

    fn channel_dims(&self, channels: usize) -> Result<(usize, usize)> {
        match self.dims[..] {
            [c, h, w] if c == channels => Ok((h, w)),
            _ => Err(Error::Shape(format!(
                "expected dims [{channels}, h, w], got {:?}",
                self.dims
            ))),
        }
    }

    pub fn into_scalar_grid(self) -> Result<ScalarGrid> {
        let (h, w) = self.grid_dims()?;
        Grid::new(h, w, self.real_values()?)
    }

    /// Reads a rank-2 tensor as a complex grid; real payloads are promoted.
    pub fn into_complex_grid(self) -> Result<ComplexGrid> {
        let (h, w) = self.grid_dims()?;
        Grid::new(h, w, self.complex_values())
    }

    pub fn into_param_map(self) -> Result<ParamMap> {
        ParamMap::from_grid(self.into_scalar_grid()?)
    }

    pub fn into_vector_field<T: TensorScalar>(self) -> Result<VectorField<T>> {
        let (h, w) = self.channel_dims(2)?;
        let mut chans = T::split_channels(&self, 2, h * w)?;
        let y = Grid::new(h, w, chans.pop().unwrap())?;
        let x = Grid::new(h, w, chans.pop().unwrap())?;
        VectorField::new(x, y)
    }

    pub fn into_sym_tensor_field<T: TensorScalar>(self) -> Result<SymTensorField<T>> {
        let (h, w) = self.channel_dims(3)?;
        let mut chans = T::split_channels(&self, 3, h * w)?;
        let e12 = Grid::new(h, w, chans.pop().unwrap())?;
        let e22 = Grid::new(h, w, chans.pop().unwrap())?;
        let e11 = Grid::new(h, w, chans.pop().unwrap())?;
        SymTensorField::new(e11, e22, e12)
    }
}

/// Pixel types that have a TNS encoding.
pub trait TensorScalar: Scalar {
    fn encode(values: &[Self]) -> Result<Payload>;
    #[doc(hidden)]
    fn split_channels(t: &Tensor, channels: usize, per: usize) -> Result<Vec<Vec<Self>>>;
}

fn narrow(x: f64) -> Result<f32> {
    let y = x as f32;
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Validation(format!("value {x} does not fit in float32")))
    }
}

impl TensorScalar for f64 {
    fn encode(values: &[Self]) -> Result<Payload> {
        Ok(Payload::Real(values.iter().map(|&x| narrow(x)).collect::<Result<_>>()?))
    }

    fn split_channels(t: &Tensor, channels: usize, per: usize) -> Result<Vec<Vec<Self>>> {
        let v = t.real_values()?;
        Ok((0..channels).map(|c| v[c * per..(c + 1) * per].to_vec()).collect())
    }
}

impl TensorScalar for Complex64 {
    fn encode(values: &[Self]) -> Result<Payload> {
        Ok(Payload::Complex(
            values
                .iter()
                .map(|z| Ok(Complex32::new(narrow(z.re)?, narrow(z.im)?)))
                .collect::<Result<_>>()?,
        ))
    }

    fn split_channels(t: &Tensor, channels: usize, per: usize) -> Result<Vec<Vec<Self>>> {
        let v = t.complex_values();
        Ok((0..channels).map(|c| v[c * per..(c + 1) * per].to_vec()).collect())
    }
}

/// Values that can be written as a TNS tensor.
pub trait ToTensor {
    fn to_tensor(&self) -> Result<Tensor>;
}

impl<T: TensorScalar> ToTensor for Grid<T> {
    fn to_tensor(&self) -> Result<Tensor> {
        Tensor::new(vec![self.height(), self.width()], T::encode(self.data())?)
    }
}

impl ToTensor for ParamMap {
    fn to_tensor(&self) -> Result<Tensor> {
        self.as_grid().to_tensor()
    }
}

fn stack<T: TensorScalar>(channels: &[&Grid<T>]) -> Result<Tensor> {
    let (h, w) = channels[0].shape();
    let mut all = Vec::with_capacity(channels.len() * h * w);
    for c in channels {
        all.extend_from_slice(c.data());
    }
    Tensor::new(vec![channels.len(), h, w], T::encode(&all)?)
}

impl<T: TensorScalar> ToTensor for VectorField<T> {
    fn to_tensor(&self) -> Result<Tensor> {
        stack(&[&self.x, &self.y])
    }
}

impl<T: TensorScalar> ToTensor for SymTensorField<T> {
    fn to_tensor(&self) -> Result<Tensor> {
        stack(&[&self.e11, &self.e22, &self.e12])
    }
}

pub fn write_tensor(path: impl AsRef<Path>, value: &impl ToTensor) -> Result<()> {
    let bytes = value.to_tensor()?.to_bytes();
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    Tensor::from_bytes(&fs::read(path)?)
}

/// Encodes a grid as binary PGM (P5, maxval 65535, big-endian samples).
/// Values are clipped to `[0, 1]` before scaling.
pub fn pgm_bytes(image: &ScalarGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n65535\n", image.width(), image.height()).into_bytes();
    for &v in image.data() {
        let s = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
        out.extend_from_slice(&s.to_be_bytes());
    }
    out
}

pub fn write_pgm(path: impl AsRef<Path>, image: &ScalarGrid) -> Result<()> {
    fs::write(path, pgm_bytes(image))?;
    Ok(())
}

/// Reads a binary PGM (P5), scaling samples to `[0, 1]` by the file's maxval.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<ScalarGrid> {
    parse_pgm(&fs::read(path)?)
}

pub fn parse_pgm(bytes: &[u8]) -> Result<ScalarGrid> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(format_err(pos, "truncated PGM header"));
        }
        fields.push((start, String::from_utf8_lossy(&bytes[start..pos]).into_owned()));
    }
    if fields[0].1 != "P5" {
        return Err(format_err(0, "only binary PGM (P5) is supported"));
    }
    let num = |k: usize| -> Result<usize> {
        fields[k].1.parse().map_err(|_| format_err(fields[k].0, "bad PGM header number"))
    };
    let (width, height, maxval) = (num(1)?, num(2)?, num(3)?);
    if maxval == 0 || maxval > 65535 {
        return Err(format_err(fields[3].0, format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let bps = if maxval < 256 { 1 } else { 2 };
    let need = width * height * bps;
    if bytes.len() < pos + need {
        return Err(format_err(bytes.len(), "truncated PGM raster"));
    }
    let raster = &bytes[pos..pos + need];
    let data = (0..width * height)
        .map(|k| {
            let s = if bps == 1 {
                raster[k] as f64
            } else {
                u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]) as f64
            };
            s / maxval as f64
        })
        .collect();
    Grid::new(height, width, data)
}
