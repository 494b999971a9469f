//! Field serialization: a small self-describing binary format plus CSV
//! export for plotting.
//!
//! Binary layout (all little-endian): magic `"NLS1"`, `version: u32`,
//! `n: u32`, `l: f64`, `n_components: u32`, `complex_flag: u8`, followed by
//! one `f64` array of length `n` per stored channel — for complex data the
//! real channel of each component precedes its imaginary channel.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::field::{ComplexPair, RealPair};
use crate::grid::Grid;
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"NLS1";
const VERSION: u32 = 1;

/// Header of a stored field file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldHeader {
    pub version: u32,
    pub n: usize,
    pub l: f64,
    pub n_components: usize,
    pub complex: bool,
}

/// A field loaded from disk: always held as complex channels; real files
/// load with zero imaginary parts.
#[derive(Debug, Clone)]
pub struct StoredField {
    pub header: FieldHeader,
    pub components: Vec<Vec<Complex64>>,
}

impl StoredField {
    pub fn to_complex_pair(&self) -> Result<ComplexPair> {
        if self.header.n_components != 2 {
            return Err(Error::Format(format!(
                "expected 2 components, file holds {}",
                self.header.n_components
            )));
        }
        Ok(ComplexPair::new(self.components[0].clone(), self.components[1].clone()))
    }

    pub fn to_real_pair(&self) -> Result<RealPair> {
        if self.header.complex {
            return Err(Error::Format("file holds complex data, expected real".into()));
        }
        if self.header.n_components != 2 {
            return Err(Error::Format(format!(
                "expected 2 components, file holds {}",
                self.header.n_components
            )));
        }
        Ok(RealPair::new(
            self.components[0].iter().map(|c| c.re).collect(),
            self.components[1].iter().map(|c| c.re).collect(),
        ))
    }
}

fn write_header<W: Write>(w: &mut W, n: usize, l: f64, n_components: usize, complex: bool) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&l.to_le_bytes())?;
    w.write_all(&(n_components as u32).to_le_bytes())?;
    w.write_all(&[u8::from(complex)])?;
    Ok(())
}

fn write_channel<W: Write>(w: &mut W, data: impl Iterator<Item = f64>) -> Result<()> {
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_real_pair(path: &Path, grid: &Grid, field: &RealPair) -> Result<()> {
    assert_eq!(field.len(), grid.len());
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, grid.len(), grid.half_length(), 2, false)?;
    for i in 0..2 {
        write_channel(&mut w, field.comps[i].iter().copied())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_complex_pair(path: &Path, grid: &Grid, field: &ComplexPair) -> Result<()> {
    assert_eq!(field.len(), grid.len());
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, grid.len(), grid.half_length(), 2, true)?;
    for i in 0..2 {
        write_channel(&mut w, field.comps[i].iter().map(|c| c.re))?;
        write_channel(&mut w, field.comps[i].iter().map(|c| c.im))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<StoredField> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic; not a field file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let mut lb = [0u8; 8];
    r.read_exact(&mut lb)?;
    let l = f64::from_le_bytes(lb);
    let n_components = read_u32(&mut r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let complex = match flag[0] {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("bad complex flag {other}"))),
    };
    if n == 0 || n > (1 << 26) || n_components == 0 || n_components > 16 {
        return Err(Error::Format(format!(
            "implausible dimensions: n = {n}, components = {n_components}"
        )));
    }
    let mut components = Vec::with_capacity(n_components);
    for _ in 0..n_components {
        let re = read_channel(&mut r, n)?;
        let im = if complex { read_channel(&mut r, n)? } else { vec![0.0; n] };
        components.push(re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect());
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after field data".into()));
    }
    Ok(StoredField {
        header: FieldHeader { version, n, l, n_components, complex },
        components,
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_channel<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

/// CSV with columns `x,u1,u2`.
pub fn write_real_pair_csv(path: &Path, grid: &Grid, field: &RealPair) -> Result<()> {
    assert_eq!(field.len(), grid.len());
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,u1,u2")?;
    for j in 0..grid.len() {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e}",
            grid.nodes()[j],
            field.comps[0][j],
            field.comps[1][j]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// CSV with columns `x,re1,im1,re2,im2`.
pub fn write_complex_pair_csv(path: &Path, grid: &Grid, field: &ComplexPair) -> Result<()> {
    assert_eq!(field.len(), grid.len());
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,re1,im1,re2,im2")?;
    for j in 0..grid.len() {
        writeln!(
            w,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            grid.nodes()[j],
            field.comps[0][j].re,
            field.comps[0][j].im,
            field.comps[1][j].re,
            field.comps[1][j].im
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_pair_round_trips_bit_exactly() {
        let g = Grid::new(10.0, 64).unwrap();
        let u = RealPair::new(
            g.nodes().iter().map(|&x| (-0.5 * x * x).exp()).collect(),
            g.nodes().iter().map(|&x| x * (-0.5 * x * x).exp()).collect(),
        );
        let dir = std::env::temp_dir().join("nlslab-io-test-real");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pair.nls");
        write_real_pair(&path, &g, &u).unwrap();
        let stored = read_field(&path).unwrap();
        assert_eq!(stored.header.n, 64);
        assert_eq!(stored.header.l, 10.0);
        assert!(!stored.header.complex);
        assert_eq!(stored.to_real_pair().unwrap(), u);
    }

    #[test]
    fn complex_pair_round_trips_bit_exactly() {
        let g = Grid::new(10.0, 64).unwrap();
        let phi = ComplexPair::new(
            g.nodes().iter().map(|&x| Complex64::new(x.sin(), x.cos())).collect(),
            g.nodes().iter().map(|&x| Complex64::new(-x, 0.25 * x)).collect(),
        );
        let dir = std::env::temp_dir().join("nlslab-io-test-complex");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("pair.nls");
        write_complex_pair(&path, &g, &phi).unwrap();
        let stored = read_field(&path).unwrap();
        assert!(stored.header.complex);
        assert_eq!(stored.to_complex_pair().unwrap(), phi);
    }

    #[test]
    fn rejects_corrupted_headers() {
        let dir = std::env::temp_dir().join("nlslab-io-test-bad");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.nls");
        std::fs::write(&path, b"JUNKDATA").unwrap();
        assert!(read_field(&path).is_err());
    }

    #[test]
    fn rejects_truncated_payloads() {
        let g = Grid::new(10.0, 64).unwrap();
        let u = RealPair::zeros(64);
        let dir = std::env::temp_dir().join("nlslab-io-test-trunc");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trunc.nls");
        write_real_pair(&path, &g, &u).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(read_field(&path).is_err());
    }
}
