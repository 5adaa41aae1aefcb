//! Little-endian framing shared by the binary file formats.

use crate::error::{Error, Result};

pub(crate) struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        Self { buf: Vec::new() }
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32(&mut self, v: f32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f32s<I: IntoIterator<Item = f32>>(&mut self, vs: I) {
        for v in vs {
            self.f32(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn offset(&self) -> u64 {
        self.pos as u64
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.remaining() < n {
            return Err(Error::format(
                self.offset(),
                format!("truncated: need {n} bytes for {what}, {} left", self.remaining()),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let at = self.offset();
        let got = self.take(4, "magic")?;
        if got != expected {
            return Err(Error::format(
                at,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(got),
                    String::from_utf8_lossy(expected)
                ),
            ));
        }
        Ok(())
    }

    pub fn version(&mut self, expected: u16) -> Result<()> {
        let at = self.offset();
        let v = self.u16("version")?;
        if v != expected {
            return Err(Error::format(at, format!("unsupported version {v}, expected {expected}")));
        }
        Ok(())
    }

    pub fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }


    /// Reads `n` f32 values, rejecting non-finite ones.
    pub fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let at = self.offset();
        let raw = self.take(n * 4, what)?;
        let vals: Vec<f32> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
            return Err(Error::format(at + 4 * i as u64, format!("non-finite value in {what}")));
        }
        Ok(vals)
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.remaining() != 0 {
            return Err(Error::format(
                self.offset(),
                format!("{} trailing bytes", self.remaining()),
            ));
        }
        Ok(())
    }
}

pub(crate) fn dim_u16(what: &str, d: usize) -> Result<u16> {
    u16::try_from(d).map_err(|_| Error::invalid(format!("{what} {d} does not fit the u16 header field")))
}
