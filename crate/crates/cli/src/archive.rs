//! Submission packaging: entries are validated, key-renamed, sorted by id,
//! serialized as one `submission.json`, and stored (uncompressed) in a ZIP
//! archive written byte-for-byte deterministically — fixed timestamps, one
//! member, no platform-dependent metadata.

use std::sync::OnceLock;

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::Value;

/// One submission line: the case id, its question, and the structured output
/// object after key renaming.
#[derive(Debug, Clone, Serialize)]
pub struct SubmissionEntry {
    pub id: String,
    pub question: String,
    pub output: Value,
}

/// Renames top-level keys of `output` in place. Refuses to clobber: renaming
/// onto a key that already exists is an error.
pub fn rename_keys(
    output: &mut Value,
    rename: &std::collections::BTreeMap<String, String>,
) -> Result<()> {
    let object = match output.as_object_mut() {
        Some(object) => object,
        None => return Ok(()),
    };
    for (old, new) in rename {
        if let Some(value) = object.remove(old) {
            if object.contains_key(new) {
                bail!("renaming \"{old}\" to \"{new}\" would overwrite an existing key");
            }
            object.insert(new.clone(), value);
        }
    }
    Ok(())
}

/// Sorts entries by id and renders the submission file bytes. Duplicate ids
/// are an error; an empty set is allowed (the caller warns).
pub fn submission_bytes(mut entries: Vec<SubmissionEntry>) -> Result<Vec<u8>> {
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    for pair in entries.windows(2) {
        if pair[0].id == pair[1].id {
            bail!("duplicate prediction id \"{}\"", pair[0].id);
        }
    }
    let mut bytes = serde_json::to_vec_pretty(&entries)?;
    bytes.push(b'\n');
    Ok(bytes)
}

const LOCAL_HEADER_SIG: u32 = 0x0403_4b50;
const CENTRAL_DIR_SIG: u32 = 0x0201_4b50;
const END_OF_CENTRAL_DIR_SIG: u32 = 0x0605_4b50;
/// Minimum feature version: plain stored entries.
const VERSION_NEEDED: u16 = 20;
/// Fixed modification stamp: 1980-01-01 00:00:00 in DOS date/time encoding.
const DOS_TIME: u16 = 0;
const DOS_DATE: u16 = 0x0021;

/// CRC-32 (the ZIP/IEEE polynomial, reflected form).
pub fn crc32(data: &[u8]) -> u32 {
    static TABLE: OnceLock<[u32; 256]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut table = [0u32; 256];
        for (i, slot) in table.iter_mut().enumerate() {
            let mut crc = i as u32;
            for _ in 0..8 {
                crc = if crc & 1 != 0 { (crc >> 1) ^ 0xEDB8_8320 } else { crc >> 1 };
            }
            *slot = crc;
        }
        table
    });
    let mut crc = !0u32;
    for &byte in data {
        crc = (crc >> 8) ^ table[((crc ^ u32::from(byte)) & 0xFF) as usize];
    }
    !crc
}

fn push_u16(out: &mut Vec<u8>, value: u16) {
    out.extend_from_slice(&value.to_le_bytes());
}

fn push_u32(out: &mut Vec<u8>, value: u32) {
    out.extend_from_slice(&value.to_le_bytes());
}

/// Renders a ZIP archive holding exactly one stored member.
pub fn zip_single_member(name: &str, data: &[u8]) -> Vec<u8> {
    let crc = crc32(data);
    let name_bytes = name.as_bytes();
    let size = data.len() as u32;
    let mut out = Vec::with_capacity(data.len() + name_bytes.len() * 2 + 128);

    // Local file header, then the member data.
    push_u32(&mut out, LOCAL_HEADER_SIG);
    push_u16(&mut out, VERSION_NEEDED);
    push_u16(&mut out, 0); // general-purpose flags
    push_u16(&mut out, 0); // method: stored
    push_u16(&mut out, DOS_TIME);
    push_u16(&mut out, DOS_DATE);
    push_u32(&mut out, crc);
    push_u32(&mut out, size); // compressed
    push_u32(&mut out, size); // uncompressed
    push_u16(&mut out, name_bytes.len() as u16);
    push_u16(&mut out, 0); // extra field length
    out.extend_from_slice(name_bytes);
    out.extend_from_slice(data);

    // Central directory record.
    let central_offset = out.len() as u32;
    push_u32(&mut out, CENTRAL_DIR_SIG);
    push_u16(&mut out, VERSION_NEEDED); // version made by
    push_u16(&mut out, VERSION_NEEDED);
    push_u16(&mut out, 0); // flags
    push_u16(&mut out, 0); // method
    push_u16(&mut out, DOS_TIME);
    push_u16(&mut out, DOS_DATE);
    push_u32(&mut out, crc);
    push_u32(&mut out, size);
    push_u32(&mut out, size);
    push_u16(&mut out, name_bytes.len() as u16);
    push_u16(&mut out, 0); // extra
    push_u16(&mut out, 0); // comment
    push_u16(&mut out, 0); // disk number start
    push_u16(&mut out, 0); // internal attributes
    push_u32(&mut out, 0); // external attributes
    push_u32(&mut out, 0); // local header offset
    out.extend_from_slice(name_bytes);
    let central_size = out.len() as u32 - central_offset;

    // End of central directory.
    push_u32(&mut out, END_OF_CENTRAL_DIR_SIG);
    push_u16(&mut out, 0); // this disk
    push_u16(&mut out, 0); // disk with the central directory
    push_u16(&mut out, 1); // entries on this disk
    push_u16(&mut out, 1); // total entries
    push_u32(&mut out, central_size);
    push_u32(&mut out, central_offset);
    push_u16(&mut out, 0); // comment length
    out
}
