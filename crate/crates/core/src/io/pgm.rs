//! Binary greymap (P5) codec with 8-bit samples.

pub fn encode(height: usize, width: usize, pixels: &[u8]) -> Vec<u8> {
    debug_assert_eq!(pixels.len(), height * width);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Parses a P5 file with maxval <= 255. Header comments are skipped.
pub fn decode(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>), String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("not a binary PGM (missing P5 magic)".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for (k, field) in fields.iter_mut().enumerate() {
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated PGM header".into()),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(format!("malformed PGM header field {k}"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .unwrap()
            .parse()
            .map_err(|e| format!("PGM header field {k}: {e}"))?;
    }
    // exactly one whitespace byte separates maxval from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err("missing whitespace after PGM maxval".into()),
    }
    let [width, height, maxval] = fields;
    if width == 0 || height == 0 {
        return Err(format!("zero PGM dimension {width}x{height}"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported PGM maxval {maxval}"));
    }
    let body = &bytes[pos..];
    if body.len() != width * height {
        return Err(format!(
            "PGM raster is {} bytes, expected {} for {width}x{height}",
            body.len(),
            width * height
        ));
    }
    if let Some(v) = body.iter().find(|&&v| v as usize > maxval) {
        return Err(format!("PGM sample {v} exceeds maxval {maxval}"));
    }
    Ok((height, width, body.to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_is_fixed() {
        let bytes = encode(2, 3, &[0, 1, 2, 3, 4, 255]);
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(decode(&bytes).unwrap(), (2, 3, vec![0, 1, 2, 3, 4, 255]));
    }

    #[test]
    fn comments_are_skipped() {
        let mut bytes = b"P5 # made by hand\n2 1\n# max\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        assert_eq!(decode(&bytes).unwrap(), (1, 2, vec![7, 9]));
    }

    #[test]
    fn truncated_and_foreign_files_fail() {
        let bytes = encode(2, 2, &[1, 2, 3, 4]);
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode(b"P6\n1 1\n255\n\0\0\0").is_err());
        assert!(decode(b"P5\n1 1\n65535\n\0\0").is_err());
    }
}
