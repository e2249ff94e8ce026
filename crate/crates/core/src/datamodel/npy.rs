//! Reading and writing the subset of the npy format used by datasets and probe
//! containers: version 1.0, C-order, two-dimensional, with `<f4`, `<f8` or `|u1`
//! element types.
//!
//! Format reference: <https://numpy.org/neps/nep-0001-npy-format.html>

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F4,
    F8,
    U1,
}

impl Dtype {
    fn descr(self) -> &'static str {
        match self {
            Dtype::F4 => "<f4",
            Dtype::F8 => "<f8",
            Dtype::U1 => "|u1",
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::F4 => 4,
            Dtype::F8 => 8,
            Dtype::U1 => 1,
        }
    }

    fn parse(descr: &str) -> Result<Self> {
        match descr {
            "<f4" => Ok(Dtype::F4),
            "<f8" => Ok(Dtype::F8),
            "|u1" | "<u1" => Ok(Dtype::U1),
            other => Err(Error::Npy(format!("unsupported dtype `{other}`"))),
        }
    }
}

/// Decoded 2-D array. Float payloads are widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub enum NpyData {
    Float(Vec<f64>),
    Byte(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub dtype: Dtype,
    pub shape: (usize, usize),
    pub data: NpyData,
}

fn header_bytes(dtype: Dtype, shape: (usize, usize)) -> Vec<u8> {
    let mut dict = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': ({}, {}), }}",
        dtype.descr(),
        shape.0,
        shape.1
    );
    // magic(6) + version(2) + len(2) + dict + '\n' must be a multiple of ALIGN
    let unpadded = 10 + dict.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    dict.extend(std::iter::repeat_n(' ', pad));
    dict.push('\n');

    let mut out = Vec::with_capacity(10 + dict.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out
}

pub fn write_f32<W: Write>(w: &mut W, shape: (usize, usize), values: &[f64]) -> Result<()> {
    check_len(shape, values.len())?;
    let mut buf = header_bytes(Dtype::F4, shape);
    buf.reserve(values.len() * 4);
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| Error::Npy(e.to_string()))
}

pub fn write_f64<W: Write>(w: &mut W, shape: (usize, usize), values: &[f64]) -> Result<()> {
    check_len(shape, values.len())?;
    let mut buf = header_bytes(Dtype::F8, shape);
    buf.reserve(values.len() * 8);
    for &v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| Error::Npy(e.to_string()))
}

pub fn write_u8<W: Write>(w: &mut W, shape: (usize, usize), values: &[u8]) -> Result<()> {
    check_len(shape, values.len())?;
    let mut buf = header_bytes(Dtype::U1, shape);
    buf.extend_from_slice(values);
    w.write_all(&buf).map_err(|e| Error::Npy(e.to_string()))
}

fn check_len(shape: (usize, usize), len: usize) -> Result<()> {
    if shape.0 * shape.1 != len {
        return Err(Error::Npy(format!(
            "shape {shape:?} does not fit {len} values"
        )));
    }
    Ok(())
}

pub fn read<R: Read>(r: &mut R) -> Result<NpyArray> {
    let err = |e: std::io::Error| Error::Npy(e.to_string());
    let mut preamble = [0u8; 8];
    r.read_exact(&mut preamble).map_err(err)?;
    if &preamble[..6] != MAGIC {
        return Err(Error::Npy("bad magic".into()));
    }
    let header_len = match preamble[6] {
        1 => {
            let mut len = [0u8; 2];
            r.read_exact(&mut len).map_err(err)?;
            u16::from_le_bytes(len) as usize
        }
        2 | 3 => {
            let mut len = [0u8; 4];
            r.read_exact(&mut len).map_err(err)?;
            u32::from_le_bytes(len) as usize
        }
        v => return Err(Error::Npy(format!("unsupported version {v}"))),
    };
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header).map_err(err)?;
    let header = std::str::from_utf8(&header).map_err(|e| Error::Npy(e.to_string()))?;
    let (dtype, fortran, shape) = parse_dict(header)?;
    if fortran {
        return Err(Error::Npy("fortran order not supported".into()));
    }
    let shape = match shape.as_slice() {
        [rows, cols] => (*rows, *cols),
        [n] => (1, *n),
        other => {
            return Err(Error::Npy(format!(
                "expected a 2-d array, got shape {other:?}"
            )))
        }
    };
    let n = shape.0 * shape.1;
    let mut raw = vec![0u8; n * dtype.width()];
    r.read_exact(&mut raw).map_err(err)?;
    let data = match dtype {
        Dtype::F4 => NpyData::Float(
            raw.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect(),
        ),
        Dtype::F8 => NpyData::Float(
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect(),
        ),
        Dtype::U1 => NpyData::Byte(raw),
    };
    Ok(NpyArray { dtype, shape, data })
}

fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let pat = format!("'{key}':");
    let start = header
        .find(&pat)
        .ok_or_else(|| Error::Npy(format!("header lacks `{key}`")))?
        + pat.len();
    Ok(header[start..].trim_start())
}

fn parse_dict(header: &str) -> Result<(Dtype, bool, Vec<usize>)> {
    let descr = dict_value(header, "descr")?;
    let descr = descr
        .strip_prefix('\'')
        .and_then(|s| s.split('\'').next())
        .ok_or_else(|| Error::Npy("malformed descr".into()))?;
    let dtype = Dtype::parse(descr)?;

    let fortran = dict_value(header, "fortran_order")?;
    let fortran = if fortran.starts_with("True") {
        true
    } else if fortran.starts_with("False") {
        false
    } else {
        return Err(Error::Npy("malformed fortran_order".into()));
    };

    let shape = dict_value(header, "shape")?;
    let inner = shape
        .strip_prefix('(')
        .and_then(|s| s.split(')').next())
        .ok_or_else(|| Error::Npy("malformed shape".into()))?;
    let dims = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::Npy(format!("bad shape entry `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((dtype, fortran, dims))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_aligned() {
        for shape in [(1, 1), (86, 12), (100000, 128)] {
            let h = header_bytes(Dtype::F4, shape);
            assert_eq!(h.len() % ALIGN, 0);
            assert_eq!(*h.last().unwrap(), b'\n');
        }
    }

    #[test]
    fn f32_round_trip() {
        let values = vec![1.0, -2.5, 3.25, 0.1];
        let mut buf = Vec::new();
        write_f32(&mut buf, (2, 2), &values).unwrap();
        let arr = read(&mut buf.as_slice()).unwrap();
        assert_eq!(arr.shape, (2, 2));
        assert_eq!(arr.dtype, Dtype::F4);
        let NpyData::Float(back) = arr.data else { panic!() };
        assert_eq!(back[..3], values[..3]);
        assert_eq!(back[3], 0.1f32 as f64);
    }

    #[test]
    fn u8_and_f64_round_trip() {
        let mut buf = Vec::new();
        write_u8(&mut buf, (1, 3), &[0, 1, 1]).unwrap();
        assert_eq!(read(&mut buf.as_slice()).unwrap().data, NpyData::Byte(vec![0, 1, 1]));

        let vals = [std::f64::consts::PI, -1e-300];
        let mut buf = Vec::new();
        write_f64(&mut buf, (2, 1), &vals).unwrap();
        assert_eq!(read(&mut buf.as_slice()).unwrap().data, NpyData::Float(vals.to_vec()));
    }

    #[test]
    fn reads_numpy_style_header() {
        // header as written by numpy.save for np.zeros((2, 3), dtype='<f4')
        let dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }";
        let mut body = dict.to_string();
        while !(10 + body.len() + 1).is_multiple_of(64) {
            body.push(' ');
        }
        body.push('\n');
        let mut buf = MAGIC.to_vec();
        buf.extend_from_slice(&[1, 0]);
        buf.extend_from_slice(&(body.len() as u16).to_le_bytes());
        buf.extend_from_slice(body.as_bytes());
        buf.extend(std::iter::repeat_n(0u8, 24));
        let arr = read(&mut buf.as_slice()).unwrap();
        assert_eq!(arr.shape, (2, 3));
    }

    #[test]
    fn rejects_fortran_and_bad_magic() {
        let mut buf = header_bytes(Dtype::F4, (1, 1));
        let pos = buf.windows(5).position(|w| w == b"False").unwrap();
        buf.splice(pos..pos + 5, b"True ".iter().copied());
        buf.extend_from_slice(&[0; 4]);
        assert!(read(&mut buf.as_slice()).is_err());
        assert!(read(&mut &b"notnumpy00"[..]).is_err());
    }
}
