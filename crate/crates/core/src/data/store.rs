//! Binary window store, little-endian throughout:
//!
//! ```text
//! magic          "MGWD"
//! version        u32
//! window_length  u32
//! count          u64
//! count x {
//!     id_len      u16, then id_len bytes of UTF-8 building id
//!     start_index u64
//!     label       u8   (0 normal, 1 anomalous, 2 unlabeled)
//!     values      window_length x f32
//! }
//! ```

use std::path::Path;
use std::sync::Arc;

use super::window::{Window, WindowLabel};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, FormatError, Result};

const MAGIC: [u8; 4] = *b"MGWD";
pub const WINDOW_STORE_VERSION: u32 = 1;

pub fn encode_windows(window_length: usize, windows: &[Window]) -> Result<Vec<u8>> {
    let mut w = ByteWriter::default();
    w.bytes(&MAGIC);
    w.u32(WINDOW_STORE_VERSION);
    w.u32(u32::try_from(window_length).map_err(|_| Error::Data("window length too large".into()))?);
    w.u64(windows.len() as u64);
    for win in windows {
        if win.values.len() != window_length {
            return Err(Error::shape("window store", "window length", window_length, win.values.len()));
        }
        let id = win.building_id.as_bytes();
        let id_len = u16::try_from(id.len())
            .map_err(|_| Error::Data(format!("building id of {} bytes is too long", id.len())))?;
        w.u16(id_len);
        w.bytes(id);
        w.u64(win.start_index as u64);
        w.u8(win.label.code());
        w.f32_slice(&win.values);
    }
    Ok(w.into_inner())
}

/// Returns `(window_length, windows)`.
pub fn decode_windows(bytes: &[u8]) -> std::result::Result<(usize, Vec<Window>), FormatError> {
    let mut r = ByteReader::new(bytes);
    r.magic(MAGIC)?;
    let version = r.u32()?;
    if version != WINDOW_STORE_VERSION {
        return Err(FormatError::Version {
            found: version,
            supported: WINDOW_STORE_VERSION,
        });
    }
    let window_length = r.u32()? as usize;
    if window_length == 0 {
        return Err(r.invalid("window length is zero"));
    }
    let count = r.u64()?;
    // each record takes at least 11 bytes plus the values
    let min_record = 11 + 4 * window_length as u64;
    if count.saturating_mul(min_record) > r.remaining() as u64 {
        return Err(FormatError::Truncated {
            offset: r.offset(),
            needed: (count.saturating_mul(min_record) - r.remaining() as u64).min(usize::MAX as u64) as usize,
        });
    }
    let mut windows = Vec::with_capacity(count as usize);
    let mut last_id: Option<Arc<str>> = None;
    for _ in 0..count {
        let id_len = r.u16()? as usize;
        let id = r.utf8(id_len)?;
        let building_id = match &last_id {
            Some(prev) if **prev == *id => prev.clone(),
            _ => {
                let a: Arc<str> = Arc::from(id);
                last_id = Some(a.clone());
                a
            }
        };
        let start = r.u64()?;
        let start_index = usize::try_from(start).map_err(|_| r.invalid("start index overflows"))?;
        let code = r.u8()?;
        let label = WindowLabel::from_code(code).ok_or_else(|| r.invalid(format!("unknown label code {code}")))?;
        let values = r.f32_vec(window_length)?;
        windows.push(Window {
            building_id,
            start_index,
            values,
            label,
        });
    }
    r.finish()?;
    Ok((window_length, windows))
}

pub fn write_windows(path: &Path, window_length: usize, windows: &[Window]) -> Result<()> {
    let bytes = encode_windows(window_length, windows)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_windows(path: &Path) -> Result<(usize, Vec<Window>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_windows(&bytes).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}
