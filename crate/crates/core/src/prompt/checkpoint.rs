//! Prompt checkpoints.
//!
//! Layout (little-endian): magic `FSPC`, version u16 = 1, L u16, d_ctx u16,
//! then L × d_ctx f32 values, row-major.

use std::fs;
use std::path::Path;

use crate::binio::{dim_u16, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::prompt::PromptContext;
use crate::Scalar;

pub const PROMPT_MAGIC: &[u8; 4] = b"FSPC";
pub const PROMPT_VERSION: u16 = 1;

pub fn encode_prompt<S: Scalar>(context: &PromptContext<S>) -> Result<Vec<u8>> {
    let mut w = ByteWriter::new();
    w.bytes(PROMPT_MAGIC);
    w.u16(PROMPT_VERSION);
    w.u16(dim_u16("context length", context.len())?);
    w.u16(dim_u16("context width", context.dim())?);
    w.f32s(context.as_slice().iter().map(|x| x.to_f64_lossy() as f32));
    Ok(w.finish())
}

pub fn decode_prompt(bytes: &[u8]) -> Result<PromptContext<f64>> {
    let mut r = ByteReader::new(bytes);
    r.magic(PROMPT_MAGIC)?;
    r.version(PROMPT_VERSION)?;
    let len = r.u16("context length")? as usize;
    let dim = r.u16("context width")? as usize;
    if len == 0 || dim == 0 {
        return Err(Error::format(6, "zero prompt dimension"));
    }
    let values = r.f32s(len * dim, "prompt values")?;
    r.expect_end()?;
    PromptContext::from_vec(len, dim, values.into_iter().map(f64::from).collect())
}

pub fn save_prompt<S: Scalar>(context: &PromptContext<S>, path: &Path) -> Result<()> {
    fs::write(path, encode_prompt(context)?)?;
    Ok(())
}

pub fn load_prompt(path: &Path) -> Result<PromptContext<f64>> {
    decode_prompt(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_and_bad_magic() {
        let ctx = PromptContext::from_vec(2, 2, vec![0.5f64, -0.25, 1.0, 2.0]).unwrap();
        let bytes = encode_prompt(&ctx).unwrap();
        assert_eq!(bytes.len(), 10 + 16);
        assert_eq!(decode_prompt(&bytes).unwrap().as_slice(), ctx.as_slice());
        assert!(decode_prompt(&bytes[..20]).is_err());
        let mut bad = bytes;
        bad[3] = 0;
        assert!(matches!(decode_prompt(&bad), Err(Error::Format { offset: 0, .. })));
    }
}
