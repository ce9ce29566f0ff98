//! Flat binary checkpoint container.
//!
//! Layout: magic `UCF1`, then six little-endian u32 config dims (input,
//! token projection, LSTM hidden, attention heads, embedding, head classes),
//! then every parameter matrix in [`EncoderState::params`] order as
//! `(rows: u32, cols: u32, row-major f64)` little-endian. Round trips are
//! bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{EncoderConfig, EncoderError, EncoderState, SeqStrategy};
use crate::numcore::Matrix;

const MAGIC: &[u8; 4] = b"UCF1";

impl EncoderState {
    pub fn save(&self, mut w: impl Write) -> Result<(), EncoderError> {
        w.write_all(MAGIC)?;
        let cfg = &self.config;
        for dim in [
            cfg.input_dim,
            cfg.token_proj_dim,
            cfg.lstm_hidden,
            cfg.attention_heads,
            cfg.embed_dim,
            cfg.head_classes,
        ] {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for m in self.params() {
            w.write_all(&(m.rows() as u32).to_le_bytes())?;
            w.write_all(&(m.cols() as u32).to_le_bytes())?;
            for v in m.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn load(mut r: impl Read) -> Result<Self, EncoderError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| EncoderError::Checkpoint("truncated header".into()))?;
        if &magic != MAGIC {
            return Err(EncoderError::Checkpoint(format!(
                "bad magic {:?}, expected \"UCF1\"",
                magic
            )));
        }
        let mut dims = [0usize; 6];
        for d in &mut dims {
            *d = read_u32(&mut r)? as usize;
        }
        let config = EncoderConfig {
            input_dim: dims[0],
            seq_strategy: SeqStrategy::FeatureAsSteps,
            token_proj_dim: dims[1],
            lstm_hidden: dims[2],
            attention_heads: dims[3],
            embed_dim: dims[4],
            head_classes: dims[5],
        };
        config.validate()?;

        // Seed a correctly shaped state, then overwrite every matrix.
        let mut state = EncoderState::init(config, 0)?;
        for m in state.params_mut() {
            let rows = read_u32(&mut r)? as usize;
            let cols = read_u32(&mut r)? as usize;
            if (rows, cols) != m.shape() {
                return Err(EncoderError::Checkpoint(format!(
                    "matrix shape {}x{} does not match config-implied {}x{}",
                    rows,
                    cols,
                    m.rows(),
                    m.cols()
                )));
            }
            let mut data = vec![0.0f64; rows * cols];
            for v in &mut data {
                let mut buf = [0u8; 8];
                r.read_exact(&mut buf)
                    .map_err(|_| EncoderError::Checkpoint("truncated matrix data".into()))?;
                *v = f64::from_le_bytes(buf);
            }
            *m = Matrix::from_vec(rows, cols, data)?;
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(EncoderError::Checkpoint("trailing bytes".into()));
        }
        Ok(state)
    }

    pub fn save_to_path(&self, path: impl AsRef<Path>) -> Result<(), EncoderError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.save(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_from_path(path: impl AsRef<Path>) -> Result<Self, EncoderError> {
        Self::load(BufReader::new(File::open(path)?))
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32, EncoderError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| EncoderError::Checkpoint("truncated field".into()))?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_bit_exact() {
        let cfg = EncoderConfig {
            input_dim: 4,
            token_proj_dim: 3,
            lstm_hidden: 6,
            attention_heads: 2,
            embed_dim: 5,
            ..EncoderConfig::default()
        };
        let state = EncoderState::init(cfg, 99).unwrap();
        let mut buf = Vec::new();
        state.save(&mut buf).unwrap();
        let loaded = EncoderState::load(buf.as_slice()).unwrap();
        assert_eq!(state, loaded);

        // Bit-identical embeddings after the round trip.
        let feats = [0.4, -0.9, 0.2, 1.3];
        let a = state.encode(&feats).unwrap();
        let b = loaded.encode(&feats).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());

        // Saving again reproduces the same bytes.
        let mut buf2 = Vec::new();
        loaded.save(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn rejects_bad_magic() {
        let err = EncoderState::load(&b"XXXX000"[..]).unwrap_err();
        assert!(matches!(err, EncoderError::Checkpoint(_)));
    }

    #[test]
    fn rejects_truncation() {
        let state = EncoderState::init(EncoderConfig::default(), 0).unwrap();
        let mut buf = Vec::new();
        state.save(&mut buf).unwrap();
        buf.truncate(buf.len() - 9);
        assert!(EncoderState::load(buf.as_slice()).is_err());
    }
}
